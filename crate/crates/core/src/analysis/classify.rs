use serde::{Serialize, Serializer};

use crate::flow::FlowParams;

/// Branch of the ten-case gradient bound. Case 1 is `4β₁ − 2α₂ = 0`,
/// split by the sign of `α₁`; case 2 is split by the sign of `D`.
/// Both are further split by `β₂ > 0` where it matters.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum CaseId {
    C1_1,
    C1_2,
    C1_3,
    C1_4,
    C1_5,
    C2_1,
    C2_2,
    C2_3,
    C2_4,
    C2_5,
}

impl CaseId {
    pub const ALL: [CaseId; 10] = [
        CaseId::C1_1,
        CaseId::C1_2,
        CaseId::C1_3,
        CaseId::C1_4,
        CaseId::C1_5,
        CaseId::C2_1,
        CaseId::C2_2,
        CaseId::C2_3,
        CaseId::C2_4,
        CaseId::C2_5,
    ];

    pub fn label(self) -> &'static str {
        match self {
            CaseId::C1_1 => "1.1",
            CaseId::C1_2 => "1.2",
            CaseId::C1_3 => "1.3",
            CaseId::C1_4 => "1.4",
            CaseId::C1_5 => "1.5",
            CaseId::C2_1 => "2.1",
            CaseId::C2_2 => "2.2",
            CaseId::C2_3 => "2.3",
            CaseId::C2_4 => "2.4",
            CaseId::C2_5 => "2.5",
        }
    }

    /// Position within its case: 1 = growth saturating, 2 = constant,
    /// 3 = exponential, 4 and 5 = finite-time pole possible.
    pub fn branch(self) -> u8 {
        let l = self.label().as_bytes();
        l[2] - b'0'
    }
}

impl std::fmt::Display for CaseId {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.label())
    }
}

impl Serialize for CaseId {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(self.label())
    }
}

/// `D = ¼|2β₁ − α₂|² − α₁`.
pub fn discriminant(p: &FlowParams) -> f64 {
    0.25 * (2.0 * p.beta1 - p.alpha2).powi(2) - p.alpha1
}

/// Case selection by exact sign tests.
pub fn case_of(p: &FlowParams) -> CaseId {
    let growth = p.beta2 > 0.0;
    if 4.0 * p.beta1 - 2.0 * p.alpha2 == 0.0 {
        match (p.alpha1.partial_cmp(&0.0), growth) {
            (Some(std::cmp::Ordering::Greater), true) => CaseId::C1_1,
            (Some(std::cmp::Ordering::Greater), false) => CaseId::C1_2,
            (Some(std::cmp::Ordering::Less), false) => CaseId::C1_4,
            (Some(std::cmp::Ordering::Less), true) => CaseId::C1_5,
            _ => CaseId::C1_3,
        }
    } else {
        let d = discriminant(p);
        match (d.partial_cmp(&0.0), growth) {
            (Some(std::cmp::Ordering::Less), true) => CaseId::C2_1,
            (Some(std::cmp::Ordering::Less), false) => CaseId::C2_2,
            (Some(std::cmp::Ordering::Greater), false) => CaseId::C2_4,
            (Some(std::cmp::Ordering::Greater), true) => CaseId::C2_5,
            _ => CaseId::C2_3,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct RegularityReport {
    pub params: FlowParams,
    #[serde(rename = "D")]
    pub d: f64,
    pub case_id: CaseId,
    pub regular: bool,
    pub star_regular: bool,
    /// Equality in the inequality deciding `regular` or `star_regular`.
    pub borderline: bool,
    pub c_tilde: Option<f64>,
}

fn near(a: f64, b: f64) -> bool {
    (a - b).abs() <= 1e-12 * a.abs().max(b.abs()).max(1.0)
}

/// `(regular, at equality)`. Without `c̃`, condition (ii) is read as "some
/// `c̃ > 0` satisfies it", i.e. only its strict lower bound remains.
fn regular(p: &FlowParams, c_tilde: Option<f64>) -> (bool, bool) {
    let s = (2.0 * p.beta1 - p.alpha2).powi(2);
    let a = 4.0 * p.alpha1;
    let lower_eq = near(a, s);
    if p.beta2 <= 0.0 {
        return (lower_eq || a >= s, lower_eq);
    }
    let lower = !lower_eq && a > s;
    match c_tilde {
        Some(c) if c > 0.0 => {
            let cap = 4.0 * p.beta2 / c + s;
            let upper_eq = near(cap, a);
            (lower && (upper_eq || cap >= a), lower_eq || upper_eq)
        }
        _ => (lower, lower_eq),
    }
}

/// Classification with condition (ii) existentially quantified over `c̃`.
pub fn classify(params: &FlowParams) -> RegularityReport {
    report(params, None)
}

/// Classification for given initial data `c̃ = max|∇φ̃|²_g̃`.
pub fn classify_with(params: &FlowParams, c_tilde: f64) -> RegularityReport {
    report(params, Some(c_tilde))
}

fn report(params: &FlowParams, c_tilde: Option<f64>) -> RegularityReport {
    let (reg, eq) = regular(params, c_tilde);
    let (star, star_eq) = regular(&params.reduced(), c_tilde);
    RegularityReport {
        params: *params,
        d: discriminant(params),
        case_id: case_of(params),
        regular: reg,
        star_regular: star,
        borderline: eq || star_eq,
        c_tilde,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn labels_round_trip_branches() {
        assert_eq!(CaseId::C2_4.branch(), 4);
        assert_eq!(CaseId::C1_1.to_string(), "1.1");
        assert_eq!(serde_json::to_string(&CaseId::C2_3).unwrap(), "\"2.3\"");
    }

    #[test]
    fn c_tilde_upper_bound_applies_with_growth() {
        // 4α₁ = 2 > 0 but 4β₂/c̃ = 0.4 < 2
        let p = FlowParams::new(0.5, 0.0, 0.0, 0.1);
        assert!(classify(&p).regular);
        assert!(!classify_with(&p, 1.0).regular);
        assert!(classify_with(&p, 0.1).regular);
    }
}
