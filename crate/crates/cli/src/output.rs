use geolab::lab::IdentityReport;
use serde::Serialize;
use std::fmt::Write as _;
use std::io;
use std::path::{Path, PathBuf};

/// Collects the files of one run under its output directory.
pub struct Outputs {
    dir: PathBuf,
    pub files: Vec<String>,
}

impl Outputs {
    pub fn create(dir: &Path) -> io::Result<Self> {
        std::fs::create_dir_all(dir)?;
        Ok(Outputs { dir: dir.to_path_buf(), files: Vec::new() })
    }

    fn path(&mut self, name: &str) -> PathBuf {
        if !self.files.iter().any(|f| f == name) {
            self.files.push(name.to_string());
        }
        self.dir.join(name)
    }

    pub fn csv<I, R>(&mut self, name: &str, header: &[&str], rows: I) -> io::Result<()>
    where
        I: IntoIterator<Item = R>,
        R: IntoIterator<Item = f64>,
    {
        let mut w = csv::Writer::from_path(self.path(name))?;
        w.write_record(header)?;
        for row in rows {
            w.write_record(row.into_iter().map(|v| v.to_string()))?;
        }
        w.flush()
    }

    pub fn json<T: Serialize>(&mut self, name: &str, value: &T) -> io::Result<()> {
        let text = serde_json::to_string_pretty(value).map_err(io::Error::other)?;
        std::fs::write(self.path(name), text + "\n")
    }

    pub fn text(&mut self, name: &str, body: &str) -> io::Result<()> {
        std::fs::write(self.path(name), body)
    }

    /// Refinement table of an identity as CSV, coarsest level first.
    pub fn refinement(&mut self, name: &str, rep: &IdentityReport) -> io::Result<()> {
        let rows = rep.rows.iter().enumerate().map(|(l, r)| {
            let g = r.grid;
            vec![l as f64, g.nr as f64, g.ntheta as f64, g.nbeta as f64, g.nalpha as f64, g.nphi as f64, g.h, r.residual, r.lhs_norm, r.rhs_norm]
        });
        self.csv(name, &["level", "nr", "ntheta", "nbeta", "nalpha", "nphi", "h", "residual", "lhs_norm", "rhs_norm"], rows)
    }
}

/// log₁₀(residual) against refinement level, with the tolerance as a dashed line.
pub fn refinement_svg(rep: &IdentityReport) -> String {
    let (w, h, m) = (360.0, 240.0, 40.0);
    let logs: Vec<f64> = rep.rows.iter().map(|r| r.residual.max(1e-300).log10()).collect();
    let tol = rep.tolerance.log10();
    let lo = logs.iter().copied().fold(tol, f64::min).floor();
    let hi = logs.iter().copied().fold(tol, f64::max).ceil().max(lo + 1.0);
    let n = logs.len().max(2) - 1;
    let x = |i: usize| m + (w - 2.0 * m) * i as f64 / n as f64;
    let y = |v: f64| h - m - (h - 2.0 * m) * (v - lo) / (hi - lo);
    let mut s = String::new();
    let _ = writeln!(s, r#"<svg xmlns="http://www.w3.org/2000/svg" width="{w}" height="{h}" font-family="sans-serif" font-size="11">"#);
    let _ = writeln!(s, r#"<text x="{m}" y="20">{} ({})</text>"#, rep.name, rep.metric);
    let _ = writeln!(s, r#"<line x1="{m}" y1="{0}" x2="{1}" y2="{0}" stroke="gray" stroke-dasharray="4 3"/>"#, y(tol), w - m);
    let pts: Vec<String> = logs.iter().enumerate().map(|(i, v)| format!("{:.1},{:.1}", x(i), y(*v))).collect();
    let _ = writeln!(s, r#"<polyline points="{}" fill="none" stroke="black"/>"#, pts.join(" "));
    for (i, v) in logs.iter().enumerate() {
        let _ = writeln!(s, r#"<circle cx="{:.1}" cy="{:.1}" r="3"/>"#, x(i), y(*v));
    }
    let _ = writeln!(s, r#"<text x="4" y="{:.1}">1e{hi}</text><text x="4" y="{:.1}">1e{lo}</text>"#, y(hi) + 4.0, y(lo) + 4.0);
    s.push_str("</svg>\n");
    s
}
