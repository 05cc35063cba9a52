//! Reference solutions: the classical connected solution of the x-jump
//! transmission problem, its delta-data version, the piecewise d'Alembert
//! solution of the t-jump problem and the tanh limits. Association checks
//! pair ladder members and references against a space-time test function.

use std::sync::Arc;

use crate::mollifier::Mollifier;
use crate::profile::Profile;
use crate::quadrature::adaptive;
use crate::solvers::{EpsRecord, SolutionFamily};
use crate::{Error, Result};

pub type Fn1 = Arc<dyn Fn(f64) -> f64 + Send + Sync>;

/// Interface coefficients of `u_tt = c^2 u_xx` with `c = c_-` for x < 0, `c_+` for x > 0:
/// `v_+ = tv v_- + rv w_+` and `w_- = tw w_+ + rw v_-`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct InterfaceCoeffs {
    pub tv: f64,
    pub rv: f64,
    pub tw: f64,
    pub rw: f64,
}

impl InterfaceCoeffs {
    pub fn new(c_minus: f64, c_plus: f64) -> Self {
        let s = c_plus + c_minus;
        Self {
            tv: 2.0 * c_plus / s,
            rv: (c_minus - c_plus) / s,
            tw: 2.0 * c_minus / s,
            rw: (c_plus - c_minus) / s,
        }
    }

    /// Residuals of continuity of `v + w` and `(w - v)/c` for incoming `v_-`, `w_+`.
    pub fn residuals(&self, c_minus: f64, c_plus: f64, v_minus: f64, w_plus: f64) -> (f64, f64) {
        let v_plus = self.tv * v_minus + self.rv * w_plus;
        let w_minus = self.tw * w_plus + self.rw * v_minus;
        ((v_plus + w_plus) - (v_minus + w_minus), (w_plus - v_plus) / c_plus - (w_minus - v_minus) / c_minus)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Side {
    Left,
    Right,
}

/// Classical connected solution for smooth data.
#[derive(Clone)]
pub struct ConnectedSolution {
    pub c_minus: f64,
    pub c_plus: f64,
    u0: Fn1,
    u0p: Fn1,
    u1: Fn1,
    coeffs: InterfaceCoeffs,
}

impl ConnectedSolution {
    pub fn new(c_minus: f64, c_plus: f64, u0: Fn1, u0p: Fn1, u1: Fn1) -> Result<Self> {
        if !(c_minus > 0.0 && c_plus > 0.0) {
            return Err(Error::InvalidInput("interface speeds must be positive".into()));
        }
        Ok(Self { c_minus, c_plus, u0, u0p, u1, coeffs: InterfaceCoeffs::new(c_minus, c_plus) })
    }

    /// Data given as profiles evaluated at a fixed eps.
    pub fn from_profiles(c_minus: f64, c_plus: f64, u0: Profile, u1: Profile, eps: f64, moll: Mollifier) -> Result<Self> {
        let (a, b, m0, m1) = (u0.clone(), u0, moll.clone(), moll.clone());
        let m2 = moll;
        Self::new(
            c_minus,
            c_plus,
            Arc::new(move |x| a.eval(x, 0, eps, &m0)),
            Arc::new(move |x| b.eval(x, 1, eps, &m1)),
            Arc::new(move |x| u1.eval(x, 0, eps, &m2)),
        )
    }

    fn c(&self, x: f64) -> f64 {
        if x < 0.0 {
            self.c_minus
        } else {
            self.c_plus
        }
    }

    fn v0(&self, x: f64) -> f64 {
        (self.u1)(x) - self.c(x) * (self.u0p)(x)
    }

    fn w0(&self, x: f64) -> f64 {
        (self.u1)(x) + self.c(x) * (self.u0p)(x)
    }

    /// (v, w) from the side given when x = 0.
    pub fn vw_side(&self, t: f64, x: f64, side: Side) -> (f64, f64) {
        let (cm, cp, k) = (self.c_minus, self.c_plus, self.coeffs);
        let left = x < 0.0 || (x == 0.0 && side == Side::Left);
        if left {
            let v = self.v0(x - cm * t);
            if x < -cm * t {
                (v, self.w0(x + cm * t))
            } else {
                // region (II)
                (v, k.tw * self.w0(cp / cm * (x + cm * t)) + k.rw * self.v0(-x - cm * t))
            }
        } else if x > cp * t {
            (self.v0(x - cp * t), self.w0(x + cp * t))
        } else {
            // region (III)
            (k.tv * self.v0(cm / cp * (x - cp * t)) + k.rv * self.w0(cp * t - x), self.w0(x + cp * t))
        }
    }

    /// (v, w, u); at x = 0 the left limits of v and w are returned.
    pub fn eval(&self, t: f64, x: f64) -> (f64, f64, f64) {
        let (v, w) = self.vw_side(t, x, Side::Left);
        let cross = if x < 0.0 { -x / self.c_minus } else { x / self.c_plus };
        let ut = |s: f64| {
            let (v, w) = self.vw_side(s, x, Side::Left);
            0.5 * (v + w)
        };
        let u = if cross > 0.0 && cross < t {
            adaptive(ut, 0.0, cross, 1e-13) + adaptive(ut, cross, t, 1e-13)
        } else {
            adaptive(ut, 0.0, t, 1e-13)
        };
        (v, w, (self.u0)(x) + u)
    }

    /// Transmission residuals at x = 0: jumps of `u_t` and of `u_x`.
    pub fn interface_residuals(&self, t: f64) -> (f64, f64) {
        let (vl, wl) = self.vw_side(t, 0.0, Side::Left);
        let (vr, wr) = self.vw_side(t, 0.0, Side::Right);
        (0.5 * (vr + wr) - 0.5 * (vl + wl), (wr - vr) / (2.0 * self.c_plus) - (wl - vl) / (2.0 * self.c_minus))
    }
}

/// A straight line `x = x0 + speed t` for `t in [t_min, t_max]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Line {
    pub x0: f64,
    pub speed: f64,
    pub t_min: f64,
    pub t_max: f64,
}

impl Line {
    pub fn at(&self, t: f64) -> f64 {
        self.x0 + self.speed * t
    }
}

fn heaviside(z: f64) -> f64 {
    if z > 0.0 {
        1.0
    } else if z < 0.0 {
        0.0
    } else {
        0.5
    }
}

/// Distributional solution for `u0 = 0`, `u1 = delta(x + 1)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DeltaSolution {
    pub c_minus: f64,
    pub c_plus: f64,
}

impl DeltaSolution {
    pub fn new(c_minus: f64, c_plus: f64) -> Result<Self> {
        if !(c_minus > 0.0 && c_plus > 0.0) {
            return Err(Error::InvalidInput("interface speeds must be positive".into()));
        }
        Ok(Self { c_minus, c_plus })
    }

    /// Value of u; points on a jump get the midpoint value.
    pub fn eval(&self, t: f64, x: f64) -> f64 {
        let (cm, cp) = (self.c_minus, self.c_plus);
        let r = (cp - cm) / (cp + cm);
        let left = |x: f64| (heaviside(-x + cm * t - 1.0) * heaviside(x + cm * t + 1.0) + r * heaviside(x + cm * t - 1.0)) / (2.0 * cm);
        let right = |x: f64| 2.0 * cp / (cp + cm) * heaviside(-x + cp * t - cp / cm) / (2.0 * cm);
        if x < 0.0 {
            left(x)
        } else if x > 0.0 {
            right(x)
        } else {
            0.5 * (left(-0.0) + right(0.0))
        }
    }

    /// Value in the sector above the ray crossing.
    pub fn plateau(&self) -> f64 {
        self.c_plus / (self.c_minus * (self.c_plus + self.c_minus))
    }

    /// Lines carried by the Heaviside arguments, restricted to their side.
    fn candidate_lines(&self, t_end: f64) -> Vec<(Line, Side)> {
        let (cm, cp) = (self.c_minus, self.c_plus);
        let full = |x0, speed| Line { x0, speed, t_min: 0.0, t_max: t_end };
        vec![
            (full(-1.0, cm), Side::Left),
            (full(-1.0, -cm), Side::Left),
            (full(1.0, -cm), Side::Left),
            (full(-cp / cm, cp), Side::Right),
        ]
    }

    /// Maximal segments of the candidate lines across which u actually jumps,
    /// found by sampling `samples` times in (0, t_end].
    pub fn jump_locus(&self, t_end: f64, samples: usize) -> Vec<Line> {
        let delta = 1e-9;
        let mut out = Vec::new();
        for (line, side) in self.candidate_lines(t_end) {
            let mut start: Option<f64> = None;
            let mut last = 0.0;
            for k in 1..=samples {
                let t = t_end * k as f64 / samples as f64;
                let x = line.at(t);
                let on_side = match side {
                    Side::Left => x < -delta,
                    Side::Right => x > delta,
                };
                let jumps = on_side && (self.eval(t, x + delta) - self.eval(t, x - delta)).abs() > 1e-12;
                match (jumps, start) {
                    (true, None) => start = Some(t),
                    (false, Some(s)) => {
                        out.push(Line { t_min: s, t_max: last, ..line });
                        start = None;
                    }
                    _ => {}
                }
                last = t;
            }
            if let Some(s) = start {
                out.push(Line { t_min: s, t_max: last, ..line });
            }
        }
        out
    }

    /// x-breakpoints of u at time t.
    pub fn breaks(&self, t: f64) -> Vec<f64> {
        let mut b: Vec<f64> = self
            .candidate_lines(f64::INFINITY)
            .into_iter()
            .filter_map(|(l, side)| {
                let x = l.at(t);
                match side {
                    Side::Left if x < 0.0 => Some(x),
                    Side::Right if x > 0.0 => Some(x),
                    _ => None,
                }
            })
            .collect();
        b.push(0.0);
        b.sort_by(|a, b| a.partial_cmp(b).unwrap());
        b
    }

    /// Exact x-integration of u against the test function on each constant piece.
    pub fn pairing(&self, psi: &TestFunction) -> f64 {
        let (t0, t1) = psi.t_support();
        let (x0, x1) = psi.x_support();
        let inner = |t: f64| {
            let mut pts = vec![x0];
            pts.extend(self.breaks(t).into_iter().filter(|&b| b > x0 && b < x1));
            pts.push(x1);
            let mut acc = 0.0;
            for w in pts.windows(2) {
                let val = self.eval(t, 0.5 * (w[0] + w[1]));
                if val != 0.0 {
                    acc += val * psi.x_mass(w[0], w[1]);
                }
            }
            acc * psi.t_factor(t)
        };
        let mut cuts = vec![t0];
        let tc = 1.0 / self.c_minus;
        if tc > t0 && tc < t1 {
            cuts.push(tc);
        }
        cuts.push(t1);
        cuts.windows(2).map(|w| adaptive(inner, w[0], w[1], 1e-13)).sum()
    }
}

/// Piecewise d'Alembert solution of `u_tt = c(t)^2 u_xx` with a sharp jump
/// of c at t = 1, continuing u and u_t across t = 1.
///
/// In `v = u_t - c u_x`, `w = u_t + c u_x` the matching at t = 1 reads
/// `v+ = a v- + b w-`, `w+ = b v- + a w-` with `a = (1 + c1/c0)/2`,
/// `b = (1 - c1/c0)/2`: `a` feeds the transmitted rays, `b` the refracted ones.
#[derive(Clone)]
pub struct PiecewiseTSolution {
    pub c0: f64,
    pub c1: f64,
    u0: Fn1,
    v0: Fn1,
    w0: Fn1,
}

impl PiecewiseTSolution {
    pub fn new(c0: f64, c1: f64, u0: Fn1, u0p: Fn1, u1: Fn1) -> Result<Self> {
        if !(c0 > 0.0 && c1 > 0.0) {
            return Err(Error::InvalidInput("speeds must be positive".into()));
        }
        let (a, b, c, d) = (u1.clone(), u0p.clone(), u1, u0p);
        Ok(Self {
            c0,
            c1,
            u0,
            v0: Arc::new(move |x| a(x) - c0 * b(x)),
            w0: Arc::new(move |x| c(x) + c0 * d(x)),
        })
    }

    pub fn from_profiles(c0: f64, c1: f64, u0: Profile, u1: Profile, eps: f64, moll: Mollifier) -> Result<Self> {
        let (a, b, m0, m1) = (u0.clone(), u0, moll.clone(), moll.clone());
        Self::new(
            c0,
            c1,
            Arc::new(move |x| a.eval(x, 0, eps, &m0)),
            Arc::new(move |x| b.eval(x, 1, eps, &m1)),
            Arc::new(move |x| u1.eval(x, 0, eps, &moll)),
        )
    }

    /// (transmitted, refracted) amplitude factors.
    pub fn amplitudes(&self) -> (f64, f64) {
        let q = self.c1 / self.c0;
        (0.5 * (1.0 + q), 0.5 * (1.0 - q))
    }

    pub fn vw(&self, t: f64, x: f64) -> (f64, f64) {
        let c0 = self.c0;
        if t <= 1.0 {
            return ((self.v0)(x - c0 * t), (self.w0)(x + c0 * t));
        }
        let (a, b) = self.amplitudes();
        let s = self.c1 * (t - 1.0);
        let (yl, yr) = (x - s, x + s);
        let v = a * (self.v0)(yl - c0) + b * (self.w0)(yl + c0);
        let w = b * (self.v0)(yr - c0) + a * (self.w0)(yr + c0);
        (v, w)
    }

    /// (u, v, w) with u by time integration of `(v + w)/2`.
    pub fn eval(&self, t: f64, x: f64) -> (f64, f64, f64) {
        let (v, w) = self.vw(t, x);
        let ut = |s: f64| {
            let (v, w) = self.vw(s, x);
            0.5 * (v + w)
        };
        let u = if t > 1.0 { adaptive(ut, 0.0, 1.0, 1e-13) + adaptive(ut, 1.0, t, 1e-13) } else { adaptive(ut, 0.0, t, 1e-13) };
        (u + (self.u0)(x), v, w)
    }
}

/// Distributional limit of the collapsing tanh family: `u0(x+t)` for x > 0, `u0(x-t)` for x < 0.
pub fn tanh_minus_limit(u0: &dyn Fn(f64) -> f64, t: f64, x: f64) -> f64 {
    if x > 0.0 {
        u0(x + t)
    } else {
        u0(x - t)
    }
}

/// Distributional limit of the spreading tanh family.
pub fn tanh_plus_limit(u0: &dyn Fn(f64) -> f64, t: f64, x: f64) -> f64 {
    if x > t {
        u0(x - t)
    } else if x < -t {
        u0(x + t)
    } else {
        u0(0.0)
    }
}

/// Tensor-product bump `phi((t-tc)/rt) phi((x-xc)/rx)` built from a smooth
/// polynomial mollifier; its integral is `rt * rx`.
#[derive(Debug, Clone)]
pub struct TestFunction {
    pub tc: f64,
    pub xc: f64,
    pub rt: f64,
    pub rx: f64,
    kernel: Mollifier,
}

impl TestFunction {
    pub fn new(tc: f64, xc: f64, rt: f64, rx: f64) -> Result<Self> {
        if !(rt > 0.0 && rx > 0.0) || tc - rt < 0.0 {
            return Err(Error::InvalidInput("test function needs positive radii and support in t >= 0".into()));
        }
        Ok(Self { tc, xc, rt, rx, kernel: Mollifier::polynomial(8) })
    }

    pub fn eval(&self, t: f64, x: f64) -> f64 {
        self.t_factor(t) * self.kernel.phi((x - self.xc) / self.rx)
    }

    pub fn t_factor(&self, t: f64) -> f64 {
        self.kernel.phi((t - self.tc) / self.rt)
    }

    /// Exact integral of the x factor over [a, b].
    pub fn x_mass(&self, a: f64, b: f64) -> f64 {
        self.rx * (self.kernel.antideriv((b - self.xc) / self.rx) - self.kernel.antideriv((a - self.xc) / self.rx))
    }

    pub fn l1_norm(&self) -> f64 {
        self.rt * self.rx
    }

    pub fn t_support(&self) -> (f64, f64) {
        (self.tc - self.rt, self.tc + self.rt)
    }

    pub fn x_support(&self) -> (f64, f64) {
        (self.xc - self.rx, self.xc + self.rx)
    }
}

/// `<f, psi>` for f piecewise smooth in x with breakpoints `breaks(t)`, and
/// smooth in t apart from the times in `t_breaks`.
pub fn pairing<F, B>(f: F, breaks: B, t_breaks: &[f64], psi: &TestFunction) -> f64
where
    F: Fn(f64, f64) -> f64,
    B: Fn(f64) -> Vec<f64>,
{
    let (t0, t1) = psi.t_support();
    let (x0, x1) = psi.x_support();
    let inner = |t: f64| {
        let mut pts = vec![x0];
        let mut b: Vec<f64> = breaks(t).into_iter().filter(|&b| b > x0 && b < x1).collect();
        b.sort_by(|a, b| a.partial_cmp(b).unwrap());
        pts.extend(b);
        pts.push(x1);
        let g = |x: f64| f(t, x) * psi.eval(t, x);
        pts.windows(2).map(|w| adaptive(g, w[0], w[1], 1e-14)).sum::<f64>()
    };
    let mut cuts = vec![t0];
    cuts.extend(t_breaks.iter().copied().filter(|&s| s > t0 && s < t1));
    cuts.push(t1);
    cuts.windows(2).map(|w| adaptive(inner, w[0], w[1], 1e-13)).sum()
}

/// Composite Simpson weights for `n` equally spaced samples (trapezoid on a
/// trailing odd interval).
fn simpson_weights(n: usize, h: f64) -> Vec<f64> {
    let mut w = vec![0.0; n];
    if n < 2 {
        return w;
    }
    let m = if (n - 1) % 2 == 0 { n } else { n - 1 };
    for i in 0..m {
        w[i] = if i == 0 || i == m - 1 { 1.0 } else if i % 2 == 1 { 4.0 } else { 2.0 };
        w[i] *= h / 3.0;
    }
    if m < n {
        w[n - 2] += 0.5 * h;
        w[n - 1] += 0.5 * h;
    }
    w
}

/// `int int u psi dx dt` from the stored snapshots of one ladder member.
///
/// Snapshots must be equally spaced in the t-support of `psi`; at least 8
/// samples per test-function radius are required in t and x.
pub fn pair_record(rec: &EpsRecord, field: &str, psi: &TestFunction) -> Result<f64> {
    let (t0, t1) = psi.t_support();
    let (x0, x1) = psi.x_support();
    let g = &rec.grid;
    if !rec.has_field(field) {
        return Err(Error::InvalidInput(format!("record has no field {field}")));
    }
    let last = *rec.times.last().unwrap_or(&0.0);
    if x0 < g.x_min || x1 > g.x_max || t1 > last + 1e-12 {
        return Err(Error::InvalidInput("test function support leaves the computed window".into()));
    }
    let idx: Vec<usize> = (0..rec.times.len()).filter(|&k| rec.times[k] >= t0 - 1e-12 && rec.times[k] <= t1 + 1e-12).collect();
    let dx = g.dx();
    if idx.len() < 17 {
        return Err(Error::InvalidInput(format!("{} snapshots in the test-function support, need 17 (snapshot_dt <= rt/8)", idx.len())));
    }
    if psi.rx / dx < 8.0 {
        return Err(Error::Resolution { dx, limit: psi.rx / 8.0 });
    }
    let dt = (rec.times[idx[idx.len() - 1]] - rec.times[idx[0]]) / (idx.len() - 1) as f64;
    if idx.windows(2).any(|w| ((rec.times[w[1]] - rec.times[w[0]]) - dt).abs() > 1e-6 * dt) {
        return Err(Error::InvalidInput("snapshots in the test-function support are not equally spaced".into()));
    }
    let i0 = ((x0 - g.x_min) / dx).floor().max(0.0) as usize;
    let i1 = (((x1 - g.x_min) / dx).ceil() as usize).min(g.nx);
    let wx = simpson_weights(i1 - i0 + 1, dx);
    let wt = simpson_weights(idx.len(), dt);
    let mut total = 0.0;
    for (kt, &k) in idx.iter().enumerate() {
        let t = rec.times[k];
        let tf = psi.t_factor(t);
        if tf == 0.0 {
            continue;
        }
        let row = rec.row(field, k);
        let mut s = 0.0;
        for (j, i) in (i0..=i1).enumerate() {
            s += wx[j] * row[i] * psi.kernel.phi((g.x(i) - psi.xc) / psi.rx);
        }
        total += wt[kt] * tf * s;
    }
    Ok(total)
}

#[derive(Debug, Clone, PartialEq)]
pub struct AssociationVerdict {
    /// (eps, |<u_eps, psi> - <ref, psi>| / ||psi||_1) in ladder order.
    pub errors: Vec<(f64, f64)>,
    pub decreasing: bool,
    pub final_error: f64,
    pub tol: f64,
    pub pass: bool,
}

/// Pairs every member against `psi` and compares with the reference pairing.
///
/// PASS needs non-increasing errors over the last half of the ladder and a
/// final normalized error at most `tol`.
pub fn associate_check(family: &SolutionFamily, field: &str, reference: f64, psi: &TestFunction, tol: f64) -> Result<AssociationVerdict> {
    let norm = psi.l1_norm();
    let mut errors = Vec::with_capacity(family.records.len());
    for rec in &family.records {
        errors.push((rec.eps, (pair_record(rec, field, psi)? - reference).abs() / norm));
    }
    let half = errors.len() / 2;
    let decreasing = errors[half..].windows(2).all(|w| w[1].1 <= w[0].1);
    let final_error = errors.last().map(|e| e.1).unwrap_or(f64::INFINITY);
    Ok(AssociationVerdict { errors, decreasing, final_error, tol, pass: decreasing && final_error <= tol })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::solvers::Grid1D;

    fn smooth_connected(cm: f64, cp: f64) -> ConnectedSolution {
        let b = |x: f64, x0: f64| if (x - x0).abs() < 0.5 { (1.0 - 4.0 * (x - x0).powi(2)).powi(4) } else { 0.0 };
        let bp = |x: f64, x0: f64| {
            let z = x - x0;
            if z.abs() < 0.5 {
                -32.0 * z * (1.0 - 4.0 * z * z).powi(3)
            } else {
                0.0
            }
        };
        ConnectedSolution::new(cm, cp, Arc::new(move |x| b(x, -1.0)), Arc::new(move |x| bp(x, -1.0)), Arc::new(move |x| 0.7 * b(x, 0.6))).unwrap()
    }

    #[test]
    fn interface_coefficients_solve_the_matching_system() {
        for &(cm, cp) in &[(1.0, 2.0), (3.0, 0.5), (1.0, 1.0)] {
            let k = InterfaceCoeffs::new(cm, cp);
            for &(vm, wp) in &[(1.0, 0.0), (0.0, 1.0), (-0.3, 2.7)] {
                let (r1, r2) = k.residuals(cm, cp, vm, wp);
                assert!(r1.abs() < 1e-15 && r2.abs() < 1e-15);
            }
            assert!((k.tv + k.rv - 1.0).abs() < 1e-15 && (k.tw + k.rw - 1.0).abs() < 1e-15);
        }
    }

    #[test]
    fn transmission_conditions_hold() {
        let cs = smooth_connected(1.0, 2.0);
        for &t in &[0.3, 0.8, 1.1, 1.6] {
            let (a, b) = cs.interface_residuals(t);
            assert!(a.abs() < 1e-12 && b.abs() < 1e-12);
            let (_, _, ul) = cs.eval(t, -1e-12);
            let (_, _, ur) = cs.eval(t, 1e-12);
            assert!((ul - ur).abs() < 1e-9);
        }
    }

    #[test]
    fn equal_speeds_reduce_to_dalembert() {
        let cs = smooth_connected(1.5, 1.5);
        for &(t, x) in &[(0.5, -0.3), (1.0, 0.2), (1.4, 1.0)] {
            let (v, w, _) = cs.eval(t, x);
            assert_eq!(v, cs.v0(x - 1.5 * t));
            assert_eq!(w, cs.w0(x + 1.5 * t));
        }
    }

    #[test]
    fn connected_solution_satisfies_the_wave_equation() {
        let cs = smooth_connected(1.0, 2.0);
        let u = |t: f64, x: f64| cs.eval(t, x).2;
        let d = 1e-3;
        for &(t, x) in &[(1.2, -0.4), (1.5, 0.7), (0.9, -1.8)] {
            let c = cs.c(x);
            let utt = (u(t + d, x) - 2.0 * u(t, x) + u(t - d, x)) / (d * d);
            let uxx = (u(t, x + d) - 2.0 * u(t, x) + u(t, x - d)) / (d * d);
            assert!((utt - c * c * uxx).abs() < 1e-3 * (1.0 + utt.abs()), "({t},{x}): {utt} vs {}", c * c * uxx);
        }
    }

    #[test]
    fn delta_solution_values() {
        let ds = DeltaSolution::new(1.0, 2.0).unwrap();
        assert!((ds.eval(2.0, -0.2) - 2.0 / 3.0).abs() < 1e-15);
        assert!((ds.eval(2.0, 0.5) - 2.0 / 3.0).abs() < 1e-15);
        assert!((ds.plateau() - 2.0 / 3.0).abs() < 1e-15);
        assert_eq!(ds.eval(0.5, -1.6), 0.0);
        // reflected jump across x = 1 - t at t = 1.5
        let jump = ds.eval(1.5, -0.5 + 1e-9) - ds.eval(1.5, -0.5 - 1e-9);
        assert!((jump - 0.5 / 3.0).abs() < 1e-15);
        // midpoint convention
        assert!((ds.eval(0.5, -0.5) - 0.25).abs() < 1e-15);
    }

    #[test]
    fn jump_locus_is_the_ray_set() {
        let ds = DeltaSolution::new(1.0, 2.0).unwrap();
        let locus = ds.jump_locus(3.0, 3000);
        assert_eq!(locus.len(), 4);
        let find = |x0: f64, s: f64| locus.iter().find(|l| l.x0 == x0 && l.speed == s).copied().unwrap();
        let g2 = find(-1.0, 1.0);
        assert!(g2.t_max <= 1.0 && g2.t_max > 0.99);
        let g3 = find(1.0, -1.0);
        assert!(g3.t_min > 1.0 && g3.t_min < 1.01 && g3.t_max == 3.0);
        let g4 = find(-2.0, 2.0);
        assert!(g4.t_min > 1.0 && g4.t_min < 1.01);
    }

    #[test]
    fn delta_pairing_matches_generic_quadrature() {
        let ds = DeltaSolution::new(1.0, 2.0).unwrap();
        let psi = TestFunction::new(1.5, -0.2, 0.6, 0.9).unwrap();
        let exact = ds.pairing(&psi);
        let generic = pairing(|t, x| ds.eval(t, x), |t| ds.breaks(t), &[1.0], &psi);
        assert!((exact - generic).abs() < 1e-10 * psi.l1_norm(), "{exact} vs {generic}");
    }

    #[test]
    fn sampled_reference_pairs_to_quadrature_noise() {
        let u0 = |x: f64| (-(x * x)).exp();
        let f = |t: f64, x: f64| tanh_plus_limit(&u0, t, x);
        let psi = TestFunction::new(1.0, 0.3, 0.5, 1.5).unwrap();
        let reference = pairing(f, |t| vec![-t, t], &[], &psi);
        let g = Grid1D::new(-2.0, 2.0, 8000, 2.0).with_snapshot_dt(0.002);
        let mut rec = EpsRecord::new(0.1, 0.1, g);
        rec.add_field("u");
        let xs = g.nodes();
        for t in g.snapshot_times() {
            let row: Vec<f64> = xs.iter().map(|&x| f(t, x)).collect();
            rec.push_snapshot(t, &[&row]);
        }
        let got = pair_record(&rec, "u", &psi).unwrap();
        // the kinks of the limit at x = +-t limit the grid quadrature
        assert!((got - reference).abs() < 1e-6 * psi.l1_norm(), "{got} vs {reference}");
        let smooth = |t: f64, x: f64| (x - 0.3 * t).sin();
        let mut rec2 = EpsRecord::new(0.1, 0.1, g);
        rec2.add_field("u");
        for t in g.snapshot_times() {
            let row: Vec<f64> = xs.iter().map(|&x| smooth(t, x)).collect();
            rec2.push_snapshot(t, &[&row]);
        }
        let r2 = pairing(smooth, |_| vec![], &[], &psi);
        assert!((pair_record(&rec2, "u", &psi).unwrap() - r2).abs() < 1e-10 * psi.l1_norm());
    }

    #[test]
    fn piecewise_t_solution_is_continuous_and_solves_the_equation() {
        let b = |x: f64| if x.abs() < 0.5 { (1.0 - 4.0 * x * x).powi(4) } else { 0.0 };
        let bp = |x: f64| if x.abs() < 0.5 { -32.0 * x * (1.0 - 4.0 * x * x).powi(3) } else { 0.0 };
        let sol = PiecewiseTSolution::new(1.0, 2.0, Arc::new(b), Arc::new(bp), Arc::new(move |x| 0.5 * b(x - 0.2))).unwrap();
        let d = 1e-7;
        for &x in &[-1.1, -0.3, 0.4, 1.05] {
            let (ua, va, wa) = sol.eval(1.0 - d, x);
            let (ub, vb, wb) = sol.eval(1.0 + d, x);
            assert!((ua - ub).abs() < 1e-6);
            assert!((0.5 * (va + wa) - 0.5 * (vb + wb)).abs() < 1e-5);
        }
        let u = |t: f64, x: f64| sol.eval(t, x).0;
        let h = 1e-3;
        for &(t, x, c) in &[(0.6, -0.2, 1.0), (1.6, 0.9, 2.0), (1.8, -0.5, 2.0)] {
            let utt = (u(t + h, x) - 2.0 * u(t, x) + u(t - h, x)) / (h * h);
            let uxx = (u(t, x + h) - 2.0 * u(t, x) + u(t, x - h)) / (h * h);
            assert!((utt - c * c * uxx).abs() < 1e-3 * (1.0 + utt.abs()));
        }
        assert_eq!(sol.amplitudes(), (1.5, -0.5));
    }

    #[test]
    fn tanh_limits() {
        let u0 = |x: f64| x;
        assert_eq!(tanh_minus_limit(&u0, 1.0, 0.5), 1.5);
        assert_eq!(tanh_minus_limit(&u0, 1.0, -0.5), -1.5);
        assert_eq!(tanh_plus_limit(&u0, 1.0, 0.5), 0.0);
        assert_eq!(tanh_plus_limit(&u0, 1.0, 2.5), 1.5);
    }
}
