//! Report files. Column layouts are documented in FORMATS.md.
//!
//! Numbers are written with Rust's shortest round-trip formatting, so
//! identical runs give identical bytes.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use colwave_core::detector::{RayRole, RayShape, SingSuppReport};
use colwave_core::io::write_family;

use crate::run::{RunError, RunReport};
use crate::scenario::Scenario;

fn num(x: f64) -> String {
    format!("{x:?}")
}

fn opt(x: Option<f64>) -> String {
    x.map(num).unwrap_or_default()
}

fn role(r: RayRole) -> &'static str {
    match r {
        RayRole::Required => "required",
        RayRole::Optional => "optional",
        RayRole::Excluded => "excluded",
    }
}

fn io_err(path: &Path, e: impl std::fmt::Display) -> RunError {
    RunError::Io(format!("{}: {e}", path.display()))
}

fn put(dir: &Path, name: &str, text: &str, written: &mut Vec<String>) -> Result<(), RunError> {
    let p = dir.join(name);
    fs::write(&p, text).map_err(|e| io_err(&p, e))?;
    written.push(name.to_string());
    Ok(())
}

pub fn detect_csv(d: &SingSuppReport) -> String {
    let mut s = String::from("t,x,order,slope,r2,excess,flagged,superpolynomial\n");
    for c in &d.cells {
        for f in &c.fits {
            let _ = writeln!(s, "{},{},{},{},{},{},{},{}", num(c.point.0), num(c.point.1), f.order, num(f.slope), num(f.r2), num(c.excess), c.flagged as u8, f.superpolynomial as u8);
        }
    }
    s
}

pub fn rays_csv(d: &SingSuppReport) -> String {
    let mut s = String::from("label,role,n_points,flagged_fraction,min_excess,max_excess\n");
    for r in &d.per_ray {
        let _ = writeln!(s, "{},{},{},{},{},{}", r.label, role(r.role), r.n_points, num(r.flagged_fraction), num(r.min_excess), num(r.max_excess));
    }
    s
}

pub fn verdict_txt(d: &SingSuppReport) -> String {
    let mut s = String::new();
    let _ = writeln!(s, "precision={}", num(d.precision));
    let _ = writeln!(s, "recall={}", num(d.recall));
    let _ = writeln!(s, "max_excess_outside={}", num(d.max_excess_outside));
    let _ = writeln!(s, "superpolynomial={}", d.superpolynomial);
    let _ = writeln!(s, "rho={}", num(d.rho));
    let _ = writeln!(s, "reach={}", num(d.reach));
    for r in &d.per_ray {
        let status = match r.role {
            RayRole::Required | RayRole::Optional if r.flagged_fraction >= 0.5 => "flagged",
            RayRole::Excluded if r.flagged_fraction > 0.0 => "flagged",
            _ => "unflagged",
        };
        let _ = writeln!(s, "ray {} ({}): {status}, fraction {}, excess {}..{}", r.label, role(r.role), num(r.flagged_fraction), num(r.min_excess), num(r.max_excess));
    }
    s
}

/// x horizontal, t upwards; predicted rays as lines, flagged cells as dots.
pub fn overlay_svg(d: &SingSuppReport, window: (f64, f64), t_end: f64) -> String {
    let (w, h, pad) = (640.0, 480.0, 40.0);
    let sx = |x: f64| pad + (x - window.0) / (window.1 - window.0) * (w - 2.0 * pad);
    let st = |t: f64| h - pad - t / t_end * (h - 2.0 * pad);
    let mut s = String::new();
    let _ = writeln!(s, r#"<svg xmlns="http://www.w3.org/2000/svg" width="{w}" height="{h}" viewBox="0 0 {w} {h}">"#);
    let _ = writeln!(s, r#"<rect x="{pad}" y="{pad}" width="{}" height="{}" fill="none" stroke="black"/>"#, w - 2.0 * pad, h - 2.0 * pad);
    let _ = writeln!(s, r#"<text x="{}" y="{}" font-size="12">x</text>"#, w - pad, h - pad / 3.0);
    let _ = writeln!(s, r#"<text x="{}" y="{}" font-size="12">t</text>"#, pad / 3.0, pad);
    for r in &d.predicted {
        let colour = match r.role {
            RayRole::Required => "steelblue",
            RayRole::Optional => "gray",
            RayRole::Excluded => "orange",
        };
        let pts: Vec<(f64, f64)> = match &r.shape {
            RayShape::Polyline { ts, xs } => ts.iter().zip(xs).map(|(&t, &x)| (t, x)).collect(),
            RayShape::Slice { t, x_min, x_max } => vec![(*t, *x_min), (*t, *x_max)],
        };
        let path: Vec<String> = pts.iter().map(|&(t, x)| format!("{:.2},{:.2}", sx(x), st(t))).collect();
        let _ = writeln!(s, r#"<polyline points="{}" fill="none" stroke="{colour}" stroke-width="1.5"><title>{}</title></polyline>"#, path.join(" "), r.label);
    }
    for c in d.cells.iter().filter(|c| c.flagged) {
        let _ = writeln!(s, r#"<circle cx="{:.2}" cy="{:.2}" r="1.5" fill="crimson"/>"#, sx(c.point.1), st(c.point.0));
    }
    s.push_str("</svg>\n");
    s
}

/// Writes every output of `report` into `<out_root>/<scenario id>/`.
pub fn write_outputs(sc: &Scenario, report: &RunReport, out_root: &Path) -> Result<PathBuf, RunError> {
    let dir = out_root.join(&sc.id);
    fs::create_dir_all(&dir).map_err(|e| io_err(&dir, e))?;
    let mut written = vec![];

    if let Some(d) = &report.detection {
        put(&dir, "detect.csv", &detect_csv(d), &mut written)?;
        put(&dir, "rays.csv", &rays_csv(d), &mut written)?;
        put(&dir, "verdict.txt", &verdict_txt(d), &mut written)?;
        put(&dir, "overlay.svg", &overlay_svg(d, (sc.grid.x_min, sc.grid.x_max), sc.grid.t_end), &mut written)?;
    }
    if !report.energy.is_empty() {
        let mut s = String::from("eps,nx,form,drift,gronwall_ratio,growth_factor\n");
        for r in &report.energy {
            let _ = writeln!(s, "{},{},{},{},{},{}", num(r.eps), r.nx, r.form, num(r.drift), opt(r.gronwall_ratio), opt(r.growth_factor));
        }
        put(&dir, "energy_summary.csv", &s, &mut written)?;
        let mut s = String::from("eps,nx,form,t,energy\n");
        for (nx, tr) in &report.energy_traces {
            for (t, e) in tr.times.iter().zip(&tr.energy) {
                let _ = writeln!(s, "{},{},{},{},{}", num(tr.eps), nx, tr.form.name(), num(*t), num(*e));
            }
        }
        put(&dir, "energy.csv", &s, &mut written)?;
    }
    if !report.associations.is_empty() {
        let mut s = String::from("tc,xc,rt,rx,eps,error,reference,decreasing,final_error,pass\n");
        for a in &report.associations {
            let (tc, xc, rt, rx) = a.psi;
            let v = &a.verdict;
            for (eps, err) in &v.errors {
                let _ = writeln!(
                    s,
                    "{},{},{},{},{},{},{},{},{},{}",
                    num(tc),
                    num(xc),
                    num(rt),
                    num(rx),
                    num(*eps),
                    num(*err),
                    num(a.reference),
                    v.decreasing as u8,
                    num(v.final_error),
                    v.pass as u8
                );
            }
        }
        put(&dir, "association.csv", &s, &mut written)?;
    }
    if !report.oracle.is_empty() {
        let mut s = String::from("quantity,eps,t,measured,reference,rel_error\n");
        for r in &report.oracle {
            let _ = writeln!(s, "{},{},{},{},{},{}", r.quantity, opt(r.eps), opt(r.t), num(r.measured), num(r.reference), num(r.rel_error()));
        }
        put(&dir, "oracle.csv", &s, &mut written)?;
    }
    if sc.dump {
        if let Some(f) = &report.family {
            let fd = dir.join("family");
            write_family(&fd, f)?;
            written.push("family/manifest.txt".into());
        }
    }

    let mut m = String::new();
    let _ = writeln!(m, "colwave_version={}", env!("CARGO_PKG_VERSION"));
    let _ = writeln!(m, "scenario={}", sc.id);
    let _ = writeln!(m, "problem={}", sc.problem.name());
    let _ = writeln!(m, "ladder={},{},{}", num(sc.ladder.eps0), num(sc.ladder.ratio), sc.ladder.count);
    let g = &sc.grid;
    let _ = writeln!(m, "grid={},{},{},{},{},{}", num(g.x_min), num(g.x_max), g.nx, num(g.t_end), num(g.cfl), num(g.snapshot_dt));
    let _ = writeln!(m, "analyses={}", sc.analyses.iter().map(|a| a.name()).collect::<Vec<_>>().join(","));
    let _ = writeln!(m, "files={}", written.join(","));
    put(&dir, "manifest.txt", &m, &mut vec![])?;
    Ok(dir)
}
