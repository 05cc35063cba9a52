//! Wave equation `u_tt = c(t)^2 u_xx` with time-dependent speed.
//!
//! With `v = u_t - c u_x`, `w = u_t + c u_x` and `mu = c'/(2c)`:
//! `(d_t + c d_x) v = mu (v - w)`, `(d_t - c d_x) w = mu (w - v)`.
//! Steps are chosen so that `T(t_{n+1}) - T(t_n) = dx`; both families then move
//! exactly one node per step and only the coupling is approximated.

use crate::characteristics::TimeIntegral;
use crate::coefficients::{RegularizedCoeff, Variable};
use crate::mollifier::Mollifier;
use crate::profile::Profile;
use crate::solvers::{EpsRecord, Grid1D};
use crate::{Error, Result};

/// Solves one ladder member; fields `u`, `v`, `w`, `ux` on the grid nodes.
///
/// Snapshot rows are taken at the first step time at or after each target
/// time; the actual times are recorded.
pub fn solve_wave_t(
    rc: &RegularizedCoeff,
    u0: &Profile,
    u1: &Profile,
    data_moll: &Mollifier,
    eps: f64,
    grid: &Grid1D,
) -> Result<EpsRecord> {
    if rc.variable() != Variable::Time {
        return Err(Error::InvalidInput("t-dependent wave needs a time coefficient".into()));
    }
    grid.validate()?;
    let scale = eps.min(rc.h());
    grid.check_resolution(scale)?;
    let ti = TimeIntegral::new(rc.clone())?;
    let xs = grid.nodes();
    let n = xs.len();
    let dx = grid.dx();

    let c0 = rc.eval(0.0);
    let mut v = vec![0.0; n];
    let mut w = vec![0.0; n];
    let mut u = vec![0.0; n];
    for (i, &x) in xs.iter().enumerate() {
        let a = u1.eval(x, 0, eps, data_moll);
        let b = c0 * u0.eval(x, 1, eps, data_moll);
        v[i] = a - b;
        w[i] = a + b;
        u[i] = u0.eval(x, 0, eps, data_moll);
    }

    let mut rec = EpsRecord::new(eps, scale, *grid).with_drift(rc.h());
    for name in ["u", "v", "w", "ux"] {
        rec.add_field(name);
    }
    let mut ux = vec![0.0; n];
    let mut push = |rec: &mut EpsRecord, t: f64, c: f64, u: &[f64], v: &[f64], w: &[f64]| {
        for i in 0..n {
            ux[i] = (w[i] - v[i]) / (2.0 * c);
        }
        rec.push_snapshot(t, &[u, v, w, &ux]);
    };
    push(&mut rec, 0.0, c0, &u, &v, &w);

    let mut nv = vec![0.0; n];
    let mut nw = vec![0.0; n];
    let (mut t, mut c) = (0.0, c0);
    let mut step = 0usize;
    for target in grid.snapshot_times().into_iter().skip(1) {
        while t < target - 1e-12 {
            step += 1;
            let t1 = ti.invert(step as f64 * dx);
            let c1 = rc.eval(t1);
            let dm = 0.5 * (c1 / c).ln();
            let e = dm.exp();
            let k = 0.5 * dm;
            let den = 1.0 - k * k;
            for i in 0..n {
                let a = if i > 0 { e * (v[i - 1] - k * w[i - 1]) } else { 0.0 };
                let b = if i + 1 < n { e * (w[i + 1] - k * v[i + 1]) } else { 0.0 };
                let vn = (a - k * b) / den;
                nv[i] = vn;
                nw[i] = b - k * vn;
            }
            let half = 0.25 * (t1 - t);
            for i in 0..n {
                u[i] += half * (v[i] + w[i] + nv[i] + nw[i]);
            }
            std::mem::swap(&mut v, &mut nv);
            std::mem::swap(&mut w, &mut nw);
            t = t1;
            c = c1;
        }
        if v.iter().chain(&w).any(|z| !z.is_finite()) {
            return Err(Error::Numerical(format!("wave solution blew up at eps = {eps}")));
        }
        push(&mut rec, t, c, &u, &v, &w);
    }
    Ok(rec)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::coefficients::PiecewiseConstantCoeff;
    use crate::mollifier::ScaleFn;
    use crate::quadrature::adaptive;

    fn coeff(c0: f64, c1: f64, eps: f64) -> RegularizedCoeff {
        let base = if c0 == c1 {
            PiecewiseConstantCoeff::constant(c0, Variable::Time).unwrap()
        } else {
            PiecewiseConstantCoeff::jump(1.0, c0, c1, Variable::Time).unwrap()
        };
        RegularizedCoeff::new(base, Mollifier::default(), ScaleFn::Standard, eps).unwrap()
    }

    #[test]
    fn constant_speed_matches_dalembert() {
        let (c, eps) = (1.5, 0.1);
        let rc = coeff(c, c, eps);
        let m = Mollifier::default();
        let g = Grid1D::new(-3.0, 3.0, 2400, 1.0).with_snapshot_dt(0.25);
        let rec = solve_wave_t(&rc, &Profile::Zero, &Profile::Delta { x0: 0.3 }, &m, eps, &g).unwrap();
        let last = rec.times.len() - 1;
        let t = rec.times[last];
        assert!((t - 1.0).abs() < g.dx());
        for (i, &x) in g.nodes().iter().enumerate() {
            assert!((rec.row("v", last)[i] - m.scaled(x - 0.3 - c * t, eps)).abs() < 1e-9);
            assert!((rec.row("w", last)[i] - m.scaled(x - 0.3 + c * t, eps)).abs() < 1e-9);
        }
    }

    #[test]
    fn quadratic_data_solution() {
        let eps = 0.1;
        let rc = coeff(1.0, 2.0, eps);
        let m = Mollifier::default();
        let g = Grid1D::new(-6.0, 6.0, 12000, 1.5).with_snapshot_dt(0.5);
        let u0 = Profile::Polynomial(vec![0.0, 0.0, 0.5]);
        let rec = solve_wave_t(&rc, &u0, &Profile::Zero, &m, eps, &g).unwrap();
        let last = rec.times.len() - 1;
        let t = rec.times[last];
        // iterated integral of c^2 written as a single one
        let lift = adaptive(|r| (t - r) * rc.eval(r).powi(2), 0.0, t, 1e-13);
        let mut err: f64 = 0.0;
        for (i, &x) in g.nodes().iter().enumerate() {
            if x.abs() < 2.0 {
                err = err.max((rec.row("u", last)[i] - x * x / 2.0 - lift).abs());
            }
        }
        assert!(err < 1e-6, "err = {err}");
    }

    #[test]
    fn rejects_space_coefficient() {
        let base = PiecewiseConstantCoeff::constant(1.0, Variable::Space).unwrap();
        let rc = RegularizedCoeff::new(base, Mollifier::default(), ScaleFn::Standard, 0.1).unwrap();
        let g = Grid1D::new(-1.0, 1.0, 400, 1.0);
        assert!(solve_wave_t(&rc, &Profile::Zero, &Profile::Zero, &Mollifier::default(), 0.1, &g).is_err());
    }
}
