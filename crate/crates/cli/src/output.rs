//! Artifact writers: CSV series, JSON reports and SVG line plots, each
//! written to a temporary file and renamed into place.

use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};

use gflow_core::flow::MonitorSeries;

/// Writes `bytes` to `path` through a sibling temporary file.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> io::Result<()> {
    let dir = path.parent().filter(|p| !p.as_os_str().is_empty()).unwrap_or(Path::new("."));
    fs::create_dir_all(dir)?;
    let name = path.file_name().ok_or_else(|| io::Error::other("artifact path has no file name"))?;
    let tmp = dir.join(format!(".{}.tmp{}", name.to_string_lossy(), std::process::id()));
    {
        let mut f = fs::File::create(&tmp)?;
        f.write_all(bytes)?;
        f.sync_all()?;
    }
    fs::rename(&tmp, path)
}

/// Shortest representation that parses back to the same `f64`; at most 17
/// significant digits. Non-finite values are written as `NaN`, `inf`, `-inf`.
pub fn format_value(v: f64) -> String {
    if v.is_nan() {
        "NaN".into()
    } else if v.is_infinite() {
        if v > 0.0 { "inf".into() } else { "-inf".into() }
    } else {
        format!("{v:e}")
    }
}

pub fn series_csv(series: &MonitorSeries) -> Vec<u8> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(&series.columns).expect("writing to memory");
    for row in &series.rows {
        w.write_record(row.iter().map(|&v| format_value(v))).expect("writing to memory");
    }
    w.into_inner().expect("writing to memory")
}

/// Parses a CSV written by [`series_csv`] back into columns and rows.
pub fn read_series_csv(bytes: &[u8]) -> Result<(Vec<String>, Vec<Vec<f64>>), String> {
    let mut r = csv::Reader::from_reader(bytes);
    let columns = r.headers().map_err(|e| e.to_string())?.iter().map(str::to_string).collect();
    let mut rows = Vec::new();
    for rec in r.records() {
        let rec = rec.map_err(|e| e.to_string())?;
        rows.push(rec.iter().map(|s| s.parse::<f64>().map_err(|e| format!("{s:?}: {e}"))).collect::<Result<_, _>>()?);
    }
    Ok((columns, rows))
}

const WIDTH: f64 = 640.0;
const HEIGHT: f64 = 400.0;
const MARGIN: f64 = 60.0;

fn tick_label(v: f64) -> String {
    if v == 0.0 || (1e-3..1e4).contains(&v.abs()) {
        let s = format!("{v:.4}");
        s.trim_end_matches('0').trim_end_matches('.').to_string()
    } else {
        format!("{v:.2e}")
    }
}

/// Fixed-size polyline of `y` against `x` with five ticks per axis.
/// Non-finite points are skipped.
pub fn line_plot_svg(title: &str, x_label: &str, xs: &[f64], ys: &[f64]) -> String {
    let pts: Vec<(f64, f64)> = xs.iter().zip(ys).filter(|(x, y)| x.is_finite() && y.is_finite()).map(|(&x, &y)| (x, y)).collect();
    let range = |it: &mut dyn Iterator<Item = f64>| {
        let (lo, hi) = it.fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), v| (lo.min(v), hi.max(v)));
        match (lo.is_finite(), hi > lo) {
            (false, _) => (0.0, 1.0),
            (true, true) => (lo, hi),
            (true, false) => (lo - 0.5 * lo.abs().max(1.0), hi + 0.5 * hi.abs().max(1.0)),
        }
    };
    let (x0, x1) = range(&mut pts.iter().map(|p| p.0));
    let (y0, y1) = range(&mut pts.iter().map(|p| p.1));
    let (pw, ph) = (WIDTH - 2.0 * MARGIN, HEIGHT - 2.0 * MARGIN);
    let sx = |x: f64| MARGIN + (x - x0) / (x1 - x0) * pw;
    let sy = |y: f64| HEIGHT - MARGIN - (y - y0) / (y1 - y0) * ph;

    let mut s = String::new();
    s.push_str(&format!(
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{WIDTH}\" height=\"{HEIGHT}\" viewBox=\"0 0 {WIDTH} {HEIGHT}\">\n"
    ));
    s.push_str(&format!("<rect width=\"{WIDTH}\" height=\"{HEIGHT}\" fill=\"white\"/>\n"));
    s.push_str(&format!(
        "<text x=\"{}\" y=\"24\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"16\">{}</text>\n",
        WIDTH / 2.0,
        escape(title)
    ));
    s.push_str(&format!(
        "<path d=\"M{MARGIN} {top} V{bottom} H{right}\" fill=\"none\" stroke=\"black\"/>\n",
        top = MARGIN,
        bottom = HEIGHT - MARGIN,
        right = WIDTH - MARGIN
    ));
    for k in 0..5 {
        let f = k as f64 / 4.0;
        let (xv, yv) = (x0 + f * (x1 - x0), y0 + f * (y1 - y0));
        let (px, py) = (sx(xv), sy(yv));
        s.push_str(&format!(
            "<line x1=\"{px:.2}\" y1=\"{b}\" x2=\"{px:.2}\" y2=\"{b5}\" stroke=\"black\"/>\
             <text x=\"{px:.2}\" y=\"{bt}\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"11\">{}</text>\n",
            tick_label(xv),
            b = HEIGHT - MARGIN,
            b5 = HEIGHT - MARGIN + 5.0,
            bt = HEIGHT - MARGIN + 18.0
        ));
        s.push_str(&format!(
            "<line x1=\"{l5}\" y1=\"{py:.2}\" x2=\"{MARGIN}\" y2=\"{py:.2}\" stroke=\"black\"/>\
             <text x=\"{lt}\" y=\"{pyt:.2}\" text-anchor=\"end\" font-family=\"sans-serif\" font-size=\"11\">{}</text>\n",
            tick_label(yv),
            l5 = MARGIN - 5.0,
            lt = MARGIN - 8.0,
            pyt = py + 4.0
        ));
    }
    s.push_str(&format!(
        "<text x=\"{}\" y=\"{}\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"12\">{}</text>\n",
        WIDTH / 2.0,
        HEIGHT - 16.0,
        escape(x_label)
    ));
    if !pts.is_empty() {
        let coords: Vec<String> = pts.iter().map(|&(x, y)| format!("{:.2},{:.2}", sx(x), sy(y))).collect();
        s.push_str(&format!(
            "<polyline points=\"{}\" fill=\"none\" stroke=\"#1f77b4\" stroke-width=\"1.5\"/>\n",
            coords.join(" ")
        ));
    }
    s.push_str("</svg>\n");
    s
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

/// Writes `plot_<column>.svg` for every requested column present in the
/// series and returns the paths written.
pub fn write_plots(dir: &Path, series: &MonitorSeries, columns: &[String]) -> io::Result<Vec<PathBuf>> {
    let t = series.times();
    let mut out = Vec::new();
    for c in columns {
        let Some(ys) = series.column(c) else { continue };
        let path = dir.join(format!("plot_{c}.svg"));
        write_atomic(&path, line_plot_svg(c, "t", &t, &ys).as_bytes())?;
        out.push(path);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn values_round_trip_exactly() {
        for v in [0.1, 1.0 / 3.0, -2.5e-300, 6.02214076e23, f64::MIN_POSITIVE, f64::MAX] {
            assert_eq!(format_value(v).parse::<f64>().unwrap(), v);
        }
        assert!(format_value(f64::NAN).parse::<f64>().unwrap().is_nan());
        assert_eq!(format_value(f64::NEG_INFINITY).parse::<f64>().unwrap(), f64::NEG_INFINITY);
    }

    #[test]
    fn at_most_seventeen_digits() {
        let s = format_value(0.1 + 0.2);
        let digits = s.split('e').next().unwrap().chars().filter(char::is_ascii_digit).count();
        assert!(digits <= 17, "{s}");
    }

    #[test]
    fn plot_skips_non_finite_points() {
        let svg = line_plot_svg("a<b", "t", &[0.0, 1.0, 2.0], &[1.0, f64::NAN, 3.0]);
        assert!(svg.contains("a&lt;b"));
        let poly = svg.lines().find(|l| l.starts_with("<polyline")).unwrap();
        assert_eq!(poly.matches(',').count(), 2);
    }

    #[test]
    fn flat_series_still_plots() {
        let svg = line_plot_svg("c", "t", &[0.0, 1.0], &[2.0, 2.0]);
        assert!(!svg.contains("NaN"));
    }
}
