//! Growth-rate detection of the singular support from an eps ladder.
//!
//! At a point, `m_k = sup |d_x^a u_eps_k|` over a `2 scale` neighbourhood is
//! fitted against `log(1/eps)`. Points where high orders grow faster than
//! low orders by at least `theta` are flagged.

use rayon::prelude::*;

use crate::solvers::{EpsRecord, SolutionFamily};
use crate::{Error, Result};

/// Smallest magnitude entering a fit.
pub const MAGNITUDE_FLOOR: f64 = 1e-300;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DetectorConfig {
    pub theta: f64,
    pub alpha_max: usize,
    /// r2 needed for an order to serve as the reference.
    pub clean_r2: f64,
    /// Absolute noise level per derivative order; smaller magnitudes are
    /// clamped to it before fitting.
    pub noise_floor: [f64; 4],
    /// Field differentiated; `<field>x` is used for the first derivative when present.
    pub field: &'static str,
}

impl Default for DetectorConfig {
    fn default() -> Self {
        Self { theta: 0.5, alpha_max: 3, clean_r2: 0.98, noise_floor: [1e-7, 1e-6, 1e-4, 1e-2], field: "u" }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GrowthFit {
    pub point: (f64, f64),
    pub order: usize,
    pub slope: f64,
    pub intercept: f64,
    pub r2: f64,
    pub n_points: usize,
    /// RMS of the log residuals.
    pub rms: f64,
    pub degenerate: bool,
    pub superpolynomial: bool,
}

/// Log-residual RMS below which a fit counts as clean whatever its r2.
pub const CLEAN_RMS: f64 = 0.02;

fn least_squares(pts: &[(f64, f64)]) -> (f64, f64, f64) {
    let n = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let (mut sxx, mut sxy, mut syy) = (0.0, 0.0, 0.0);
    for &(x, y) in pts {
        sxx += (x - mx) * (x - mx);
        sxy += (x - mx) * (y - my);
        syy += (y - my) * (y - my);
    }
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let ss_res: f64 = pts.iter().map(|&(x, y)| (y - intercept - slope * x).powi(2)).sum();
    let r2 = if syy <= 1e-28 * (1.0 + my * my) * n { 1.0 } else { 1.0 - ss_res / syy };
    (slope, intercept, r2)
}

/// Least-squares fit of `log m` against `log(1/eps)` from `(eps, m)` samples.
pub fn fit_growth(samples: &[(f64, f64)]) -> Result<GrowthFit> {
    if samples.len() < 4 {
        return Err(Error::InvalidInput(format!("growth fit needs at least 4 samples, got {}", samples.len())));
    }
    if samples.iter().any(|&(e, m)| !(e > 0.0) || !(m >= 0.0)) {
        return Err(Error::InvalidInput("growth fit needs eps > 0 and finite magnitudes >= 0".into()));
    }
    let mut pts: Vec<(f64, f64)> = samples.iter().map(|&(e, m)| (-e.ln(), m.max(MAGNITUDE_FLOOR).ln())).collect();
    pts.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap());
    let degenerate = samples.iter().all(|&(_, m)| m <= MAGNITUDE_FLOOR);
    let (slope, intercept, r2) = least_squares(&pts);
    let n = pts.len();
    let rms = (pts.iter().map(|&(x, y)| (y - intercept - slope * x).powi(2)).sum::<f64>() / n as f64).sqrt();
    // convex in log(1/eps): the last four slopes outrun the four before them
    // (decay counts as 0), and ln m = a + b/eps with b > 0 beats the power law.
    // Coarse members may still sit in a transition, so they are left out.
    let early = if n >= 8 { &pts[n - 8..n - 4] } else { &pts[..4] };
    let convex = least_squares(&pts[n - 4..]).0 > least_squares(early).0.max(0.0) + 1.0;
    let inv: Vec<(f64, f64)> = pts.iter().map(|&(x, y)| (x.exp(), y)).collect();
    let (b, a, _) = least_squares(&inv);
    let rms_exp = (inv.iter().map(|&(x, y)| (y - a - b * x).powi(2)).sum::<f64>() / n as f64).sqrt();
    let superpolynomial = !degenerate && convex && b > 0.0 && rms_exp < rms;
    Ok(GrowthFit { point: (0.0, 0.0), order: 0, slope, intercept, r2, rms, n_points: n, degenerate, superpolynomial })
}

fn stencil(f: &[f64], i: usize, m: usize, order: usize, s: f64) -> f64 {
    match order {
        0 => f[i],
        1 => (f[i + m] - f[i - m]) / (2.0 * s),
        2 => (f[i + m] - 2.0 * f[i] + f[i - m]) / (s * s),
        _ => (f[i + 2 * m] - 2.0 * f[i + m] + 2.0 * f[i - m] - f[i - 2 * m]) / (2.0 * s * s * s),
    }
}

/// `max |d_x^alpha u|` over `|y - x| <= 2 max(scale, drift)` at the snapshot
/// nearest to t.
///
/// Centred stencils of width 4 use spacing `max(dx, scale/8)` rounded to a
/// whole number of cells, so the finest feature stays resolved while the
/// neighbourhood follows rays that move with the coefficient scale. A stored first derivative `<field>x` replaces one
/// differencing when present.
pub fn local_derivative(rec: &EpsRecord, field: &str, t: f64, x: f64, alpha: usize) -> Result<f64> {
    if alpha > 3 {
        return Err(Error::OrderTooHigh { order: alpha, max: 3 });
    }
    let g = &rec.grid;
    let dx = g.dx();
    let m = ((rec.scale / 8.0 / dx).round() as usize).max(1);
    let s = m as f64 * dx;
    let ti = rec.nearest_time_index(t);
    let dname = format!("{field}x");
    let (data, order) = if alpha >= 1 && rec.has_field(&dname) { (rec.row(&dname, ti), alpha - 1) } else { (rec.row(field, ti), alpha) };
    let reach = match order {
        0 => 0,
        1 | 2 => m,
        _ => 2 * m,
    };
    let radius = neighbourhood(rec);
    let lo = ((x - radius - g.x_min) / dx).ceil();
    let hi = ((x + radius - g.x_min) / dx).floor();
    if lo < reach as f64 || hi + reach as f64 > g.nx as f64 || hi < lo {
        return Err(Error::StencilOutOfDomain { x });
    }
    let mut best: f64 = 0.0;
    for i in lo as usize..=hi as usize {
        best = best.max(stencil(data, i, m, order, s).abs());
    }
    Ok(best)
}

fn neighbourhood(rec: &EpsRecord) -> f64 {
    2.0 * rec.scale.max(rec.drift)
}

/// Fits for orders `0..=alpha_max` at one point.
pub fn point_fits(family: &SolutionFamily, t: f64, x: f64, cfg: &DetectorConfig) -> Result<Vec<GrowthFit>> {
    (0..=cfg.alpha_max)
        .map(|a| {
            let floor = cfg.noise_floor[a.min(3)];
            let samples = family
                .records
                .iter()
                .map(|r| Ok((r.eps, local_derivative(r, cfg.field, t, x, a)?.max(floor))))
                .collect::<Result<Vec<_>>>()?;
            let mut fit = fit_growth(&samples)?;
            // a sequence leaving the noise floor is an onset, not growth
            fit.superpolynomial &= samples.iter().all(|s| s.1 > floor);
            fit.point = (t, x);
            fit.order = a;
            Ok(fit)
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct PointVerdict {
    pub point: (f64, f64),
    pub fits: Vec<GrowthFit>,
    pub alpha_ref: usize,
    pub excess: f64,
    pub flagged: bool,
    pub superpolynomial: bool,
}

/// Slope excess of the top order over the lowest cleanly fitted order.
pub fn classify_point(fits: &[GrowthFit], cfg: &DetectorConfig) -> PointVerdict {
    let top = &fits[fits.len() - 1];
    // a flat sequence has a meaningless r2, so a tiny residual also counts as clean
    let alpha_ref = fits.iter().position(|f| f.degenerate || f.r2 >= cfg.clean_r2 || f.rms <= CLEAN_RMS).unwrap_or(0);
    // decaying magnitudes are bounded: growth exponent 0
    let slope = |f: &GrowthFit| if f.degenerate { 0.0 } else { f.slope.max(0.0) };
    let excess = slope(top) - slope(&fits[alpha_ref]);
    PointVerdict {
        point: top.point,
        fits: fits.to_vec(),
        alpha_ref,
        excess,
        flagged: excess >= cfg.theta,
        superpolynomial: fits.iter().any(|f| f.superpolynomial),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RayRole {
    /// Predicted part of the singular support.
    Required,
    /// May or may not belong to it; measured only.
    Optional,
    /// Predicted absent.
    Excluded,
}

#[derive(Debug, Clone, PartialEq)]
pub enum RayShape {
    /// Graph `t -> x` through the given vertices (t increasing).
    Polyline { ts: Vec<f64>, xs: Vec<f64> },
    /// Segment `{t} x [x_min, x_max]`.
    Slice { t: f64, x_min: f64, x_max: f64 },
}

#[derive(Debug, Clone, PartialEq)]
pub struct RaySegment {
    pub label: String,
    pub role: RayRole,
    pub shape: RayShape,
}

impl RaySegment {
    pub fn line(label: &str, role: RayRole, x0: f64, speed: f64, t0: f64, t1: f64) -> Self {
        Self { label: label.into(), role, shape: RayShape::Polyline { ts: vec![t0, t1], xs: vec![x0 + speed * t0, x0 + speed * t1] } }
    }

    pub fn t_range(&self) -> (f64, f64) {
        match &self.shape {
            RayShape::Polyline { ts, .. } => (ts[0], ts[ts.len() - 1]),
            RayShape::Slice { t, .. } => (*t, *t),
        }
    }

    /// x on a polyline at time t, if t lies in its range.
    pub fn x_at(&self, t: f64) -> Option<f64> {
        match &self.shape {
            RayShape::Polyline { ts, xs } => {
                if t < ts[0] || t > ts[ts.len() - 1] {
                    return None;
                }
                let k = ts.windows(2).position(|w| t <= w[1]).unwrap_or(ts.len() - 2);
                let f = if ts[k + 1] > ts[k] { (t - ts[k]) / (ts[k + 1] - ts[k]) } else { 0.0 };
                Some(xs[k] + f * (xs[k + 1] - xs[k]))
            }
            RayShape::Slice { .. } => None,
        }
    }

    /// Horizontal distance `|x - x_ray(t)|` inside the t-range of a polyline
    /// (vertical distance inside the x-range of a slice); Euclidean distance
    /// to the nearest end point elsewhere.
    pub fn distance(&self, t: f64, x: f64) -> f64 {
        let ends = |a: (f64, f64), b: (f64, f64)| {
            let d = |p: (f64, f64)| ((t - p.0).powi(2) + (x - p.1).powi(2)).sqrt();
            d(a).min(d(b))
        };
        match &self.shape {
            RayShape::Polyline { ts, xs } => match self.x_at(t) {
                Some(xr) => (x - xr).abs(),
                None => ends((ts[0], xs[0]), (ts[ts.len() - 1], xs[xs.len() - 1])),
            },
            RayShape::Slice { t: ts, x_min, x_max } => {
                if x >= *x_min && x <= *x_max {
                    (t - ts).abs()
                } else {
                    ends((*ts, *x_min), (*ts, *x_max))
                }
            }
        }
    }

    /// Tube radius around this ray. The neighbourhood search only widens
    /// in x, so a slice (distance measured in t) keeps the bare `rho`.
    pub fn tube(&self, rho: f64, reach: f64) -> f64 {
        match self.shape {
            RayShape::Polyline { .. } => rho + reach,
            RayShape::Slice { .. } => rho,
        }
    }

    /// Gap to this ray at the same time: horizontal for a polyline that exists
    /// at t, `|t - t_slice|` for a slice, None when the ray is absent at t.
    pub fn gap_at(&self, t: f64, x: f64) -> Option<f64> {
        match &self.shape {
            RayShape::Polyline { .. } => self.x_at(t).map(|xr| (x - xr).abs()),
            RayShape::Slice { t: ts, .. } => Some((t - ts).abs()),
        }
    }

    /// Up to `n` points at the given times (evenly thinned), or `n` points
    /// across a slice at the time nearest to it.
    pub fn sample_at(&self, times: &[f64], n: usize) -> Vec<(f64, f64)> {
        match &self.shape {
            RayShape::Polyline { .. } => {
                let inside: Vec<f64> = times.iter().copied().filter(|&t| self.x_at(t).is_some()).collect();
                let stride = inside.len().div_ceil(n.max(1)).max(1);
                inside.iter().step_by(stride).map(|&t| (t, self.x_at(t).unwrap())).collect()
            }
            RayShape::Slice { t, .. } => {
                let near = times.iter().copied().min_by(|a, b| (a - t).abs().partial_cmp(&(b - t).abs()).unwrap()).unwrap_or(*t);
                self.sample(n).into_iter().map(|(_, x)| (near, x)).collect()
            }
        }
    }

    /// `n` points equally spaced in t (or in x for a slice).
    pub fn sample(&self, n: usize) -> Vec<(f64, f64)> {
        let n = n.max(2);
        match &self.shape {
            RayShape::Polyline { .. } => {
                let (a, b) = self.t_range();
                (0..n).map(|k| a + (b - a) * k as f64 / (n - 1) as f64).map(|t| (t, self.x_at(t).unwrap())).collect()
            }
            RayShape::Slice { t, x_min, x_max } => (0..n).map(|k| (*t, x_min + (x_max - x_min) * k as f64 / (n - 1) as f64)).collect(),
        }
    }
}

/// Scenario families with a known singular-support geometry.
#[derive(Debug, Clone, PartialEq)]
pub enum RayScenario {
    /// Jump of c from `c0` (x < 0) to `c1` (x > 0), delta data at `x_delta < 0`.
    XJumpDelta { c0: f64, c1: f64, x_delta: f64, standard_scale: bool, t_end: f64 },
    /// Jump of c from `c0` to `c1` at `t_jump`, point singularity at the origin.
    /// `jump_line` adds the line `{t = t_jump}` as an optional member.
    /// `compatible` marks data with `u1 = c0 u0'`: only the left-moving wave
    /// is present, so the right-moving ray and its refraction are excluded.
    TJump { c0: f64, c1: f64, t_jump: f64, standard_scale: bool, jump_line: bool, compatible: bool, t_end: f64, window: (f64, f64) },
    /// Radial delta data in dimension `dim` with a t-jump; x is the signed radius.
    Radial { dim: usize, c0: f64, c1: f64, t_jump: f64, standard_scale: bool, t_end: f64 },
}

/// `sqrt(c0/c1) + sqrt(c1/c0)`; a reflected singularity is proven for values in (2, 4).
pub fn jump_condition(c0: f64, c1: f64) -> f64 {
    (c0 / c1).sqrt() + (c1 / c0).sqrt()
}

fn t_jump_rays(c0: f64, c1: f64, tj: f64, standard: bool, t_end: f64) -> Vec<RaySegment> {
    let big_t = |t: f64| if t <= tj { c0 * t } else { c0 * tj + c1 * (t - tj) };
    let mut ts = vec![0.0];
    if tj > 0.0 && tj < t_end {
        ts.push(tj);
    }
    ts.push(t_end);
    let xs: Vec<f64> = ts.iter().map(|&t| big_t(t)).collect();
    let mut rays = vec![
        RaySegment { label: "transmitted+".into(), role: RayRole::Required, shape: RayShape::Polyline { ts: ts.clone(), xs: xs.clone() } },
        RaySegment { label: "transmitted-".into(), role: RayRole::Required, shape: RayShape::Polyline { ts, xs: xs.iter().map(|x| -x).collect() } },
    ];
    if tj < t_end {
        let role = if standard { RayRole::Required } else { RayRole::Excluded };
        let r = |t: f64| 2.0 * big_t(tj) - big_t(t);
        for (label, sign) in [("refracted+", 1.0), ("refracted-", -1.0)] {
            rays.push(RaySegment {
                label: label.into(),
                role,
                shape: RayShape::Polyline { ts: vec![tj, t_end], xs: vec![sign * r(tj), sign * r(t_end)] },
            });
        }
    }
    rays
}

/// Predicted singular support as labelled segments.
pub fn predict_singsupp(sc: &RayScenario) -> Result<Vec<RaySegment>> {
    match *sc {
        RayScenario::XJumpDelta { c0, c1, x_delta, standard_scale, t_end } => {
            if !(x_delta < 0.0 && c0 > 0.0 && c1 > 0.0 && t_end > 0.0) {
                return Err(Error::Unsupported("x-jump geometry needs x_delta < 0 and positive speeds".into()));
            }
            let t_hit = -x_delta / c0;
            let mut rays = vec![RaySegment::line("gamma1", RayRole::Required, x_delta, -c0, 0.0, t_end)];
            rays.push(RaySegment::line("gamma2", RayRole::Required, x_delta, c0, 0.0, t_hit.min(t_end)));
            if t_hit < t_end {
                let cond = jump_condition(c0, c1);
                let role = if !standard_scale {
                    RayRole::Excluded
                } else if cond > 2.0 && cond < 4.0 {
                    RayRole::Required
                } else {
                    RayRole::Optional
                };
                rays.push(RaySegment::line("gamma3", role, -x_delta, -c0, t_hit, t_end));
                rays.push(RaySegment::line("gamma4", RayRole::Required, -c1 * t_hit, c1, t_hit, t_end));
            }
            Ok(rays)
        }
        RayScenario::TJump { c0, c1, t_jump, standard_scale, jump_line, compatible, t_end, window } => {
            let mut rays = t_jump_rays(c0, c1, t_jump, standard_scale, t_end);
            if compatible {
                for r in rays.iter_mut().filter(|r| r.label.ends_with('+')) {
                    r.role = RayRole::Excluded;
                }
            }
            if jump_line && t_jump < t_end {
                rays.push(RaySegment { label: "jump_line".into(), role: RayRole::Optional, shape: RayShape::Slice { t: t_jump, x_min: window.0, x_max: window.1 } });
            }
            Ok(rays)
        }
        RayScenario::Radial { dim, c0, c1, t_jump, standard_scale, t_end } => {
            if dim < 2 {
                return Err(Error::Unsupported(format!("radial geometry needs dim >= 2, got {dim}")));
            }
            let mut rays = t_jump_rays(c0, c1, t_jump, standard_scale, t_end);
            if dim % 2 == 0 && t_jump < t_end {
                let r1 = c0 * t_jump;
                rays.push(RaySegment { label: "disk".into(), role: RayRole::Optional, shape: RayShape::Slice { t: t_jump, x_min: -r1, x_max: r1 } });
            }
            Ok(rays)
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RayStats {
    pub label: String,
    pub role: RayRole,
    /// Sample points farther than the tube radius from every other ray.
    pub n_points: usize,
    pub flagged_fraction: f64,
    pub min_excess: f64,
    pub max_excess: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SingSuppReport {
    pub cells: Vec<PointVerdict>,
    pub predicted: Vec<RaySegment>,
    pub rho: f64,
    /// Largest neighbourhood radius over the ladder. Tubes used for
    /// precision, exclusivity and the outside check have radius
    /// [`RaySegment::tube`].
    pub reach: f64,
    pub precision: f64,
    pub recall: f64,
    pub per_ray: Vec<RayStats>,
    /// Largest excess over cells outside every tube (Excluded rays included).
    pub max_excess_outside: f64,
    pub superpolynomial: bool,
}

impl SingSuppReport {
    pub fn flagged(&self) -> Vec<(f64, f64)> {
        self.cells.iter().filter(|c| c.flagged).map(|c| c.point).collect()
    }

    pub fn ray(&self, label: &str) -> Option<&RayStats> {
        self.per_ray.iter().find(|r| r.label == label)
    }
}

/// Builds the report from classified lattice cells and per-ray samples.
pub fn classify(cells: Vec<PointVerdict>, ray_points: Vec<(usize, PointVerdict)>, predicted: Vec<RaySegment>, rho: f64, reach: f64) -> SingSuppReport {
    let near = |p: (f64, f64), keep: &dyn Fn(&RaySegment) -> bool| predicted.iter().any(|r| keep(r) && r.distance(p.0, p.1) <= r.tube(rho, reach));
    let flagged: Vec<&PointVerdict> = cells.iter().filter(|c| c.flagged).collect();
    let precision = if flagged.is_empty() {
        1.0
    } else {
        flagged.iter().filter(|c| near(c.point, &|r| r.role != RayRole::Excluded)).count() as f64 / flagged.len() as f64
    };
    let max_excess_outside = cells.iter().filter(|c| !near(c.point, &|_| true)).map(|c| c.excess).fold(f64::NEG_INFINITY, f64::max);
    let mut per_ray = Vec::new();
    let (mut req_total, mut req_hit) = (0usize, 0usize);
    for (k, ray) in predicted.iter().enumerate() {
        let pts: Vec<&PointVerdict> = ray_points.iter().filter(|(j, _)| *j == k).map(|(_, v)| v).collect();
        let hit = pts.iter().filter(|v| v.flagged).count();
        if ray.role == RayRole::Required {
            req_total += pts.len();
            req_hit += hit;
        }
        per_ray.push(RayStats {
            label: ray.label.clone(),
            role: ray.role,
            n_points: pts.len(),
            flagged_fraction: if pts.is_empty() { 0.0 } else { hit as f64 / pts.len() as f64 },
            min_excess: pts.iter().map(|v| v.excess).fold(f64::INFINITY, f64::min),
            max_excess: pts.iter().map(|v| v.excess).fold(f64::NEG_INFINITY, f64::max),
        });
    }
    let superpolynomial = cells.iter().chain(ray_points.iter().map(|(_, v)| v)).any(|c| c.superpolynomial);
    SingSuppReport {
        cells,
        predicted,
        rho,
        reach,
        precision,
        recall: if req_total == 0 { 1.0 } else { req_hit as f64 / req_total as f64 },
        per_ray,
        max_excess_outside,
        superpolynomial,
    }
}

/// Where and how densely to look.
#[derive(Debug, Clone, PartialEq)]
pub struct Survey {
    pub times: Vec<f64>,
    pub xs: Vec<f64>,
    pub ray_samples: usize,
    /// Tube radius; `4 scale(eps_0)` when None.
    pub rho: Option<f64>,
}

/// Runs the detector on a lattice and along the predicted rays.
///
/// Points whose stencils leave the grid of any member are skipped, as are ray
/// samples closer than `rho + reach` to another ray present at the same time.
pub fn detect(family: &SolutionFamily, survey: &Survey, predicted: Vec<RaySegment>, cfg: &DetectorConfig) -> Result<SingSuppReport> {
    if family.records.len() < 4 {
        return Err(Error::InvalidInput("detection needs a ladder of at least 4 members".into()));
    }
    if cfg.alpha_max < 2 || cfg.alpha_max > 3 {
        return Err(Error::InvalidInput("alpha_max must be 2 or 3".into()));
    }
    let rho = survey.rho.unwrap_or(4.0 * family.records[0].scale);
    let reach = family.records.iter().map(neighbourhood).fold(0.0, f64::max);
    let t_last = family.records.iter().map(|r| *r.times.last().unwrap_or(&0.0)).fold(f64::INFINITY, f64::min);
    let run = |p: (f64, f64)| -> Result<Option<PointVerdict>> {
        if p.0 > t_last + 1e-9 {
            return Ok(None);
        }
        match point_fits(family, p.0, p.1, cfg) {
            Ok(f) => Ok(Some(classify_point(&f, cfg))),
            Err(Error::StencilOutOfDomain { .. }) => Ok(None),
            Err(e) => Err(e),
        }
    };
    let lattice: Vec<(f64, f64)> = survey.times.iter().flat_map(|&t| survey.xs.iter().map(move |&x| (t, x))).collect();
    let cells: Vec<PointVerdict> = lattice.into_par_iter().map(run).collect::<Result<Vec<_>>>()?.into_iter().flatten().collect();
    let snaps = &family.records[0].times;
    let mut ray_pts = Vec::new();
    for (k, ray) in predicted.iter().enumerate() {
        for p in ray.sample_at(snaps, survey.ray_samples) {
            if predicted.iter().enumerate().all(|(j, o)| j == k || o.gap_at(p.0, p.1).is_none_or(|g| g > o.tube(rho, reach))) {
                ray_pts.push((k, p));
            }
        }
    }
    let rays: Vec<(usize, PointVerdict)> = ray_pts
        .into_par_iter()
        .map(|(k, p)| run(p).map(|v| v.map(|v| (k, v))))
        .collect::<Result<Vec<_>>>()?
        .into_iter()
        .flatten()
        .collect();
    Ok(classify(cells, rays, predicted, rho, reach))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mollifier::Mollifier;
    use crate::solvers::Grid1D;

    #[test]
    fn power_law_fits_exactly() {
        let s: Vec<(f64, f64)> = (0..6).map(|k| 0.1 * 0.7f64.powi(k)).map(|e| (e, 3.0 * e.powi(-2))).collect();
        let f = fit_growth(&s).unwrap();
        assert!((f.slope - 2.0).abs() < 1e-12 && (f.r2 - 1.0).abs() < 1e-12);
        let c: Vec<(f64, f64)> = s.iter().map(|&(e, _)| (e, 0.4)).collect();
        let f = fit_growth(&c).unwrap();
        assert_eq!(f.slope, 0.0);
        assert_eq!(f.r2, 1.0);
        assert!(fit_growth(&s[..3]).is_err());
    }

    #[test]
    fn exponential_growth_is_superpolynomial() {
        let s: Vec<(f64, f64)> = (0..10).map(|k| 0.1 * 0.7f64.powi(k)).map(|e| (e, (0.5 / e).exp())).collect();
        assert!(fit_growth(&s).unwrap().superpolynomial);
        let p: Vec<(f64, f64)> = s.iter().map(|&(e, _)| (e, e.powi(-3))).collect();
        assert!(!fit_growth(&p).unwrap().superpolynomial);
    }

    #[test]
    fn transition_then_power_law_is_not_superpolynomial() {
        // measured just after a time jump: two members inside the transition, then eps^-1
        let m = [3.502, 0.6333, 0.8759, 1.245, 1.779, 2.542, 3.631, 5.188, 7.411, 10.59];
        let s: Vec<(f64, f64)> = m.iter().enumerate().map(|(k, &v)| (0.1 * 0.7f64.powi(k as i32), v)).collect();
        assert!(!fit_growth(&s).unwrap().superpolynomial);
        // decay that levels off
        let d: Vec<(f64, f64)> = (0..10).map(|k| 0.1 * 0.7f64.powi(k)).map(|e| (e, 1.0 + (-0.05 / e).exp())).collect();
        assert!(!fit_growth(&d).unwrap().superpolynomial);
    }

    #[test]
    fn all_zero_is_degenerate() {
        let s: Vec<(f64, f64)> = (0..5).map(|k| (0.1 * 0.7f64.powi(k), 0.0)).collect();
        let f = fit_growth(&s).unwrap();
        assert!(f.degenerate && !f.superpolynomial);
    }

    fn step_record(eps: f64) -> EpsRecord {
        let g = Grid1D::new(-1.0, 1.0, (32.0 / eps).ceil() as usize * 2, 0.0);
        let m = Mollifier::default();
        let mut rec = EpsRecord::new(eps, eps, g);
        rec.add_field("u");
        let row: Vec<f64> = g.nodes().iter().map(|&x| m.antideriv(x / eps)).collect();
        rec.push_snapshot(0.0, &[&row]);
        rec
    }

    #[test]
    fn derivative_of_mollified_step() {
        let eps = 0.05;
        let rec = step_record(eps);
        let m = Mollifier::default();
        let d1 = local_derivative(&rec, "u", 0.0, 0.01, 1).unwrap();
        // centred difference at spacing h/8 loses about 1%
        assert!((d1 - m.phi(0.0) / eps).abs() < 2e-2 * d1);
        assert!((local_derivative(&rec, "u", 0.0, 0.7, 0).unwrap() - 1.0).abs() < 1e-15);
        assert!(matches!(local_derivative(&rec, "u", 0.0, 0.99, 2), Err(Error::StencilOutOfDomain { .. })));
    }

    #[test]
    fn step_is_flagged_only_at_the_jump() {
        let recs: Vec<EpsRecord> = (0..5).map(|k| step_record(0.04 * 0.7f64.powi(k))).collect();
        let fam = SolutionFamily::new("step", "synthetic", recs);
        let cfg = DetectorConfig::default();
        let on = classify_point(&point_fits(&fam, 0.0, 0.0, &cfg).unwrap(), &cfg);
        assert!(on.flagged && (on.excess - 3.0).abs() < 0.2, "excess {}", on.excess);
        let off = classify_point(&point_fits(&fam, 0.0, 0.5, &cfg).unwrap(), &cfg);
        assert!(!off.flagged && off.excess.abs() < 1e-12);
    }

    #[test]
    fn classification_ignores_constant_factors() {
        let eps: Vec<f64> = (0..6).map(|k| 0.1 * 0.7f64.powi(k)).collect();
        let fits = |scale: f64| -> Vec<GrowthFit> {
            (0..4).map(|a| {
                let s: Vec<(f64, f64)> = eps.iter().map(|&e| (e, scale * e.powi(-(a as i32)) * (1.0 + 0.1 * e))).collect();
                GrowthFit { order: a, ..fit_growth(&s).unwrap() }
            }).collect()
        };
        let cfg = DetectorConfig::default();
        let (a, b) = (classify_point(&fits(1.0), &cfg), classify_point(&fits(1e5), &cfg));
        assert!((a.excess - b.excess).abs() < 1e-12 && a.flagged == b.flagged);
    }

    #[test]
    fn predicted_geometry() {
        let rays = predict_singsupp(&RayScenario::XJumpDelta { c0: 1.0, c1: 2.0, x_delta: -1.0, standard_scale: true, t_end: 3.0 }).unwrap();
        assert!((jump_condition(1.0, 2.0) - 2.1213).abs() < 1e-4);
        let labels: Vec<&str> = rays.iter().map(|r| r.label.as_str()).collect();
        assert_eq!(labels, ["gamma1", "gamma2", "gamma3", "gamma4"]);
        assert!(rays.iter().all(|r| r.role == RayRole::Required));
        assert_eq!(rays[3].x_at(2.0), Some(2.0));
        assert_eq!(rays[2].x_at(2.0), Some(-1.0));
        assert_eq!(rays[1].t_range(), (0.0, 1.0));
        let slow = predict_singsupp(&RayScenario::XJumpDelta { c0: 1.0, c1: 2.0, x_delta: -1.0, standard_scale: false, t_end: 3.0 }).unwrap();
        assert_eq!(slow[2].role, RayRole::Excluded);
        let wide = predict_singsupp(&RayScenario::XJumpDelta { c0: 1.0, c1: 20.0, x_delta: -1.0, standard_scale: true, t_end: 3.0 }).unwrap();
        assert_eq!(wide[2].role, RayRole::Optional);
    }

    #[test]
    fn t_jump_geometry() {
        let rays = predict_singsupp(&RayScenario::TJump { c0: 1.0, c1: 2.0, t_jump: 1.0, standard_scale: true, jump_line: false, compatible: false, t_end: 2.0, window: (-5.0, 5.0) }).unwrap();
        assert_eq!(rays.len(), 4);
        assert_eq!(rays[0].x_at(2.0), Some(3.0));
        assert_eq!(rays[2].x_at(2.0), Some(-1.0));
        assert_eq!(rays[3].x_at(1.5), Some(0.0));
        let slow = predict_singsupp(&RayScenario::TJump { c0: 1.0, c1: 2.0, t_jump: 1.0, standard_scale: false, jump_line: true, compatible: false, t_end: 2.0, window: (-5.0, 5.0) }).unwrap();
        assert_eq!(slow[2].role, RayRole::Excluded);
        assert_eq!(slow[4].role, RayRole::Optional);
        let compat = predict_singsupp(&RayScenario::TJump { c0: 1.0, c1: 2.0, t_jump: 1.0, standard_scale: true, jump_line: false, compatible: true, t_end: 2.0, window: (-5.0, 5.0) }).unwrap();
        let roles: Vec<RayRole> = compat.iter().map(|r| r.role).collect();
        assert_eq!(roles, [RayRole::Excluded, RayRole::Required, RayRole::Excluded, RayRole::Required]);
        let even = predict_singsupp(&RayScenario::Radial { dim: 2, c0: 1.0, c1: 2.0, t_jump: 1.0, standard_scale: true, t_end: 2.0 }).unwrap();
        assert_eq!(even.last().unwrap().label, "disk");
        assert!(predict_singsupp(&RayScenario::Radial { dim: 1, c0: 1.0, c1: 2.0, t_jump: 1.0, standard_scale: true, t_end: 2.0 }).is_err());
    }

    #[test]
    fn distances_and_samples() {
        let r = RaySegment::line("a", RayRole::Required, 0.0, 1.0, 0.0, 1.0);
        assert_eq!(r.distance(0.5, 1.0), 0.5);
        assert_eq!(r.distance(2.0, 1.0), 1.0);
        let s = RaySegment { label: "s".into(), role: RayRole::Optional, shape: RayShape::Slice { t: 1.0, x_min: -1.0, x_max: 1.0 } };
        assert_eq!(s.distance(1.25, 0.3), 0.25);
        assert_eq!(s.distance(1.0, 4.0), 3.0);
        assert_eq!(r.sample(3), vec![(0.0, 0.0), (0.5, 0.5), (1.0, 1.0)]);
    }

    #[test]
    fn zero_solution_flags_nothing() {
        let recs: Vec<EpsRecord> = (0..4)
            .map(|k| {
                let eps = 0.05 * 0.7f64.powi(k);
                let g = Grid1D::new(-1.0, 1.0, 800, 1.0);
                let mut r = EpsRecord::new(eps, eps, g);
                r.add_field("u");
                r.push_snapshot(0.0, &[&vec![0.0; 801]]);
                r
            })
            .collect();
        let fam = SolutionFamily::new("zero", "synthetic", recs);
        let survey = Survey { times: vec![0.0], xs: (0..11).map(|k| -0.5 + 0.1 * k as f64).collect(), ray_samples: 5, rho: None };
        let rep = detect(&fam, &survey, vec![], &DetectorConfig::default()).unwrap();
        assert!(rep.flagged().is_empty() && rep.cells.len() == 11 && rep.precision == 1.0);
    }
}
