//! Pointwise dense linear algebra on 2×2 and 3×3 matrices, padded to 3×3.

pub type Sym = [[f64; 3]; 3];

pub fn det(m: &Sym, dim: usize) -> f64 {
    match dim {
        2 => m[0][0] * m[1][1] - m[0][1] * m[1][0],
        _ => {
            m[0][0] * (m[1][1] * m[2][2] - m[1][2] * m[2][1]) - m[0][1] * (m[1][0] * m[2][2] - m[1][2] * m[2][0])
                + m[0][2] * (m[1][0] * m[2][1] - m[1][1] * m[2][0])
        }
    }
}

/// Cofactor inverse; `None` for a singular matrix.
pub fn inverse(m: &Sym, dim: usize) -> Option<Sym> {
    let d = det(m, dim);
    if d == 0.0 || !d.is_finite() {
        return None;
    }
    let mut inv = [[0.0; 3]; 3];
    if dim == 2 {
        inv[0][0] = m[1][1] / d;
        inv[1][1] = m[0][0] / d;
        inv[0][1] = -m[0][1] / d;
        inv[1][0] = -m[1][0] / d;
        return Some(inv);
    }
    for i in 0..3 {
        for j in 0..3 {
            let (r0, r1) = ((j + 1) % 3, (j + 2) % 3);
            let (c0, c1) = ((i + 1) % 3, (i + 2) % 3);
            inv[i][j] = (m[r0][c0] * m[r1][c1] - m[r0][c1] * m[r1][c0]) / d;
        }
    }
    Some(inv)
}

/// Cholesky factor `L` with `L Lᵀ = m`, or `None` if `m` is not positive definite.
pub fn cholesky(m: &Sym, dim: usize) -> Option<Sym> {
    let mut l = [[0.0; 3]; 3];
    for i in 0..dim {
        for j in 0..=i {
            let s: f64 = (0..j).map(|k| l[i][k] * l[j][k]).sum();
            if i == j {
                let d = m[i][i] - s;
                if d.is_nan() || d <= 0.0 {
                    return None;
                }
                l[i][i] = d.sqrt();
            } else {
                l[i][j] = (m[i][j] - s) / l[j][j];
            }
        }
    }
    Some(l)
}

pub fn is_positive_definite(m: &Sym, dim: usize) -> bool {
    cholesky(m, dim).is_some()
}

/// Eigenvalues of a symmetric matrix in ascending order (first `dim` entries).
pub fn sym_eigenvalues(m: &Sym, dim: usize) -> [f64; 3] {
    let mut ev = [0.0; 3];
    if dim == 2 {
        let mean = 0.5 * (m[0][0] + m[1][1]);
        let half = 0.5 * (m[0][0] - m[1][1]);
        let r = half.hypot(m[0][1]);
        ev[0] = mean - r;
        ev[1] = mean + r;
        return ev;
    }
    let mut a = *m;
    for _sweep in 0..50 {
        let off = a[0][1] * a[0][1] + a[0][2] * a[0][2] + a[1][2] * a[1][2];
        let scale = a[0][0] * a[0][0] + a[1][1] * a[1][1] + a[2][2] * a[2][2];
        if off <= 1e-26 * scale || off == 0.0 {
            break;
        }
        for (p, q) in [(0, 1), (0, 2), (1, 2)] {
            if a[p][q] == 0.0 {
                continue;
            }
            let theta = (a[q][q] - a[p][p]) / (2.0 * a[p][q]);
            let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
            let t = if theta == 0.0 { 1.0 } else { t };
            let c = 1.0 / (t * t + 1.0).sqrt();
            let s = t * c;
            let mut b = a;
            for k in 0..3 {
                b[k][p] = c * a[k][p] - s * a[k][q];
                b[k][q] = s * a[k][p] + c * a[k][q];
            }
            let mut r = b;
            for k in 0..3 {
                r[p][k] = c * b[p][k] - s * b[q][k];
                r[q][k] = s * b[p][k] + c * b[q][k];
            }
            r[p][q] = 0.0;
            r[q][p] = 0.0;
            a = r;
        }
    }
    ev = [a[0][0], a[1][1], a[2][2]];
    ev.sort_by(f64::total_cmp);
    ev
}

/// Eigenvalues `λ` of `a v = λ b v` with `b` positive definite, ascending.
pub fn generalized_eigenvalues(a: &Sym, b: &Sym, dim: usize) -> Option<[f64; 3]> {
    let l = cholesky(b, dim)?;
    let mut linv = [[0.0; 3]; 3];
    for i in 0..dim {
        linv[i][i] = 1.0 / l[i][i];
        for j in 0..i {
            let s: f64 = (j..i).map(|k| l[i][k] * linv[k][j]).sum();
            linv[i][j] = -s / l[i][i];
        }
    }
    // C = L⁻¹ A L⁻ᵀ
    let mut c = [[0.0; 3]; 3];
    for i in 0..dim {
        for j in 0..dim {
            let mut s = 0.0;
            for k in 0..dim {
                for m in 0..dim {
                    s += linv[i][k] * a[k][m] * linv[j][m];
                }
            }
            c[i][j] = s;
        }
    }
    for i in 0..dim {
        for j in 0..i {
            let avg = 0.5 * (c[i][j] + c[j][i]);
            c[i][j] = avg;
            c[j][i] = avg;
        }
    }
    Some(sym_eigenvalues(&c, dim))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn inverse_of_known_matrices() {
        let m = [[2.0, 1.0, 0.0], [1.0, 2.0, 0.0], [0.0; 3]];
        let inv = inverse(&m, 2).unwrap();
        let expect = [[2.0 / 3.0, -1.0 / 3.0], [-1.0 / 3.0, 2.0 / 3.0]];
        for i in 0..2 {
            for j in 0..2 {
                assert!((inv[i][j] - expect[i][j]).abs() < 1e-15);
            }
        }
        let m3 = [[4.0, 1.0, 0.5], [1.0, 3.0, 0.2], [0.5, 0.2, 2.0]];
        let inv3 = inverse(&m3, 3).unwrap();
        for i in 0..3 {
            for j in 0..3 {
                let s: f64 = (0..3).map(|k| m3[i][k] * inv3[k][j]).sum();
                assert!((s - if i == j { 1.0 } else { 0.0 }).abs() < 1e-14);
            }
        }
    }

    #[test]
    fn eigenvalues_match_characteristic_roots() {
        let m = [[2.0, 1.0, 0.0], [1.0, 2.0, 0.0], [0.0, 0.0, 5.0]];
        let ev = sym_eigenvalues(&m, 3);
        for (got, want) in ev.iter().zip([1.0, 3.0, 5.0]) {
            assert!((got - want).abs() < 1e-13);
        }
        let ev2 = sym_eigenvalues(&m, 2);
        assert!((ev2[0] - 1.0).abs() < 1e-15 && (ev2[1] - 3.0).abs() < 1e-15);
    }

    #[test]
    fn generalized_eigenvalues_of_scaled_metric() {
        let b = [[2.0, 0.3, 0.1], [0.3, 1.5, 0.0], [0.1, 0.0, 1.0]];
        let mut a = b;
        for row in a.iter_mut() {
            for v in row.iter_mut() {
                *v *= 1.7;
            }
        }
        let ev = generalized_eigenvalues(&a, &b, 3).unwrap();
        for v in ev {
            assert!((v - 1.7).abs() < 1e-13);
        }
    }

    #[test]
    fn cholesky_rejects_indefinite() {
        let m = [[1.0, 2.0, 0.0], [2.0, 1.0, 0.0], [0.0; 3]];
        assert!(cholesky(&m, 2).is_none());
    }
}
