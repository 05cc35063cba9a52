//! Wave equation with x-dependent speed, in the V/W variables
//! `V = u_t - s u_x`, `W = u_t + s u_x`.
//!
//! Non-conservative form `u_tt = c^2 u_xx` has speed `s = c`;
//! conservative form `u_tt = (c u_x)_x` has speed `s = sqrt(c)`.
//! Both give `(d_t + s d_x) V = k (V - W)` and `(d_t - s d_x) W = k (V - W)`
//! with `k = s'/2` (non-conservative) or `k = -s'/2` (conservative).

use std::sync::Arc;

use crate::coefficients::{CoeffAntideriv, Integrand, RegularizedCoeff, Variable};
use crate::mollifier::Mollifier;
use crate::profile::Profile;
use crate::solvers::system::{aligned_step, Upwind};
use crate::solvers::{EpsRecord, Grid1D};
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum WaveForm {
    #[default]
    NonConservative,
    Conservative,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum WaveScheme {
    /// Exact shifts on a lattice uniform in travel time, trapezoidal coupling.
    #[default]
    Characteristic,
    /// Second-order upwind with Heun steps on the uniform grid.
    Upwind,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct WaveXOptions {
    pub form: WaveForm,
    pub scheme: WaveScheme,
}

struct Speed<'a> {
    rc: &'a RegularizedCoeff,
    form: WaveForm,
}

impl Speed<'_> {
    fn s(&self, x: f64) -> f64 {
        match self.form {
            WaveForm::NonConservative => self.rc.eval(x),
            WaveForm::Conservative => self.rc.eval(x).sqrt(),
        }
    }

    /// Coupling coefficient k(x).
    fn k(&self, x: f64) -> f64 {
        let c1 = self.rc.deriv(x, 1).unwrap_or(0.0);
        match self.form {
            WaveForm::NonConservative => 0.5 * c1,
            WaveForm::Conservative => -0.5 * c1 / (2.0 * self.rc.eval(x).sqrt()),
        }
    }

    fn max(&self) -> f64 {
        let b1 = self.rc.bounds().1;
        match self.form {
            WaveForm::NonConservative => b1,
            WaveForm::Conservative => b1.sqrt(),
        }
    }
}

/// Solves one ladder member; fields `u`, `v`, `w`, `ux` on the uniform grid.
pub fn solve_wave_x(
    rc: &RegularizedCoeff,
    u0: &Profile,
    u1: &Profile,
    data_moll: &Mollifier,
    eps: f64,
    grid: &Grid1D,
    opts: WaveXOptions,
) -> Result<EpsRecord> {
    if rc.variable() != Variable::Space {
        return Err(Error::InvalidInput("x-dependent wave needs a space coefficient".into()));
    }
    grid.validate()?;
    let scale = eps.min(rc.h());
    grid.check_resolution(scale)?;
    match opts.scheme {
        WaveScheme::Characteristic => lattice(rc, u0, u1, data_moll, eps, scale, grid, opts.form),
        WaveScheme::Upwind => upwind(rc, u0, u1, data_moll, eps, scale, grid, opts.form),
    }
}

#[allow(clippy::too_many_arguments)]
fn lattice(
    rc: &RegularizedCoeff,
    u0: &Profile,
    u1: &Profile,
    moll: &Mollifier,
    eps: f64,
    scale: f64,
    grid: &Grid1D,
    form: WaveForm,
) -> Result<EpsRecord> {
    let sp = Speed { rc, form };
    let integrand = match form {
        WaveForm::NonConservative => Integrand::Reciprocal,
        WaveForm::Conservative => Integrand::ReciprocalSqrt,
    };
    let travel = CoeffAntideriv::with_integrand(rc.clone(), integrand);
    let per_snap = (grid.snapshot_dt * sp.max() / grid.dx()).ceil().max(1.0) as usize;
    let dy = grid.snapshot_dt / per_snap as f64;
    let y_lo = travel.eval(grid.x_min);
    let y_hi = travel.eval(grid.x_max);
    let ny = ((y_hi - y_lo) / dy).ceil() as usize + 1;
    let lx: Vec<f64> = (0..=ny).map(|j| travel.invert(y_lo + dy * j as f64)).collect();
    let ls: Vec<f64> = lx.iter().map(|&x| sp.s(x)).collect();
    let q: Vec<f64> = lx.iter().map(|&x| 0.5 * dy * sp.k(x)).collect();

    let n = ny + 1;
    let mut v = vec![0.0; n];
    let mut w = vec![0.0; n];
    let mut u = vec![0.0; n];
    for j in 0..n {
        let (a, b, d) = (u1.eval(lx[j], 0, eps, moll), u0.eval(lx[j], 1, eps, moll), u0.eval(lx[j], 0, eps, moll));
        v[j] = a - ls[j] * b;
        w[j] = a + ls[j] * b;
        u[j] = d;
    }

    // Resampling onto the uniform grid: 4-point Lagrange in travel time.
    let xs = grid.nodes();
    let stencil: Vec<(usize, [f64; 4])> = xs
        .iter()
        .map(|&x| {
            let s = (travel.eval(x) - y_lo) / dy;
            let i = (s.floor() as usize).clamp(1, n - 3);
            let t = s - i as f64;
            let wts = [
                -t * (t - 1.0) * (t - 2.0) / 6.0,
                (t + 1.0) * (t - 1.0) * (t - 2.0) / 2.0,
                -(t + 1.0) * t * (t - 2.0) / 2.0,
                (t + 1.0) * t * (t - 1.0) / 6.0,
            ];
            (i - 1, wts)
        })
        .collect();
    let grid_s: Vec<f64> = xs.iter().map(|&x| sp.s(x)).collect();

    let mut rec = EpsRecord::new(eps, scale, *grid).with_drift(rc.h());
    for name in ["u", "v", "w", "ux"] {
        rec.add_field(name);
    }
    let mut ru = vec![0.0; xs.len()];
    let mut rv = ru.clone();
    let mut rw = ru.clone();
    let mut rux = ru.clone();
    let mut snapshot = |rec: &mut EpsRecord, t: f64, u: &[f64], v: &[f64], w: &[f64]| {
        for (i, (j, wt)) in stencil.iter().enumerate() {
            let f = |a: &[f64]| wt[0] * a[*j] + wt[1] * a[j + 1] + wt[2] * a[j + 2] + wt[3] * a[j + 3];
            ru[i] = f(u);
            rv[i] = f(v);
            rw[i] = f(w);
            rux[i] = (rw[i] - rv[i]) / (2.0 * grid_s[i]);
        }
        rec.push_snapshot(t, &[&ru, &rv, &rw, &rux]);
    };
    snapshot(&mut rec, 0.0, &u, &v, &w);

    let mut nv = vec![0.0; n];
    let mut nw = vec![0.0; n];
    for snap in 0..grid.snapshot_count() {
        for _ in 0..per_snap {
            for j in 0..n {
                let a = if j > 0 { v[j - 1] + q[j - 1] * (v[j - 1] - w[j - 1]) } else { 0.0 };
                let b = if j + 1 < n { w[j + 1] + q[j + 1] * (v[j + 1] - w[j + 1]) } else { 0.0 };
                let d = a - b;
                nv[j] = a + q[j] * d;
                nw[j] = b + q[j] * d;
            }
            for j in 0..n {
                u[j] += 0.25 * dy * (v[j] + w[j] + nv[j] + nw[j]);
            }
            std::mem::swap(&mut v, &mut nv);
            std::mem::swap(&mut w, &mut nw);
        }
        if v.iter().chain(&w).any(|z| !z.is_finite()) {
            return Err(Error::Numerical(format!("wave solution blew up at eps = {eps}")));
        }
        snapshot(&mut rec, (snap + 1) as f64 * grid.snapshot_dt, &u, &v, &w);
    }
    Ok(rec)
}

#[allow(clippy::too_many_arguments)]
fn upwind(
    rc: &RegularizedCoeff,
    u0: &Profile,
    u1: &Profile,
    moll: &Mollifier,
    eps: f64,
    scale: f64,
    grid: &Grid1D,
    form: WaveForm,
) -> Result<EpsRecord> {
    let sp = Speed { rc, form };
    let xs = grid.nodes();
    let s: Vec<f64> = xs.iter().map(|&x| sp.s(x)).collect();
    let k: Vec<f64> = xs.iter().map(|&x| sp.k(x)).collect();
    let kk = k.clone();
    let dx = grid.dx();
    let x_min = grid.x_min;
    let coupling: crate::solvers::system::CouplingFn = Arc::new(move |_, x: f64, a: &mut [f64]| {
        let i = (((x - x_min) / dx).round() as usize).min(kk.len() - 1);
        a[0] = kk[i];
        a[1] = -kk[i];
        a[2] = kk[i];
        a[3] = -kk[i];
    });
    let speeds = vec![s.clone(), s.iter().map(|z| -z).collect()];
    let mut up = Upwind::new(grid, speeds, Some(coupling), true);
    let (dt, sub) = aligned_step(grid, up.max_speed())?;

    let mut y = vec![vec![0.0; xs.len()], vec![0.0; xs.len()]];
    let mut u = vec![0.0; xs.len()];
    for (i, &x) in xs.iter().enumerate() {
        let (a, b) = (u1.eval(x, 0, eps, moll), u0.eval(x, 1, eps, moll));
        y[0][i] = a - s[i] * b;
        y[1][i] = a + s[i] * b;
        u[i] = u0.eval(x, 0, eps, moll);
    }
    let mut rec = EpsRecord::new(eps, scale, *grid).with_drift(rc.h());
    for name in ["u", "v", "w", "ux"] {
        rec.add_field(name);
    }
    let push = |rec: &mut EpsRecord, t: f64, u: &[f64], y: &[Vec<f64>]| {
        let ux: Vec<f64> = (0..u.len()).map(|i| (y[1][i] - y[0][i]) / (2.0 * s[i])).collect();
        rec.push_snapshot(t, &[u, &y[0], &y[1], &ux]);
    };
    push(&mut rec, 0.0, &u, &y);
    let mut t = 0.0;
    for snap in 0..grid.snapshot_count() {
        for _ in 0..sub {
            let before: Vec<f64> = (0..u.len()).map(|i| y[0][i] + y[1][i]).collect();
            up.step(&mut y, t, dt);
            for i in 0..u.len() {
                u[i] += 0.25 * dt * (before[i] + y[0][i] + y[1][i]);
            }
            t += dt;
        }
        if y.iter().flatten().any(|z| !z.is_finite()) {
            return Err(Error::Numerical(format!("wave solution blew up at eps = {eps}")));
        }
        push(&mut rec, (snap + 1) as f64 * grid.snapshot_dt, &u, &y);
    }
    Ok(rec)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::coefficients::PiecewiseConstantCoeff;
    use crate::mollifier::ScaleFn;

    fn coeff(c0: f64, c1: f64, eps: f64) -> RegularizedCoeff {
        let base = PiecewiseConstantCoeff::jump(0.0, c0, c1, Variable::Space).unwrap();
        RegularizedCoeff::new(base, Mollifier::default(), ScaleFn::Standard, eps).unwrap()
    }

    #[test]
    fn zero_data_stays_zero() {
        let g = Grid1D::new(-2.0, 2.0, 800, 1.0).with_snapshot_dt(0.5);
        for scheme in [WaveScheme::Characteristic, WaveScheme::Upwind] {
            let opts = WaveXOptions { scheme, ..Default::default() };
            let rec = solve_wave_x(&coeff(1.0, 2.0, 0.1), &Profile::Zero, &Profile::Zero, &Mollifier::default(), 0.1, &g, opts).unwrap();
            assert!(rec.fields.iter().all(|f| f.data.iter().all(|&z| z == 0.0)));
        }
    }

    #[test]
    fn constant_speed_matches_dalembert() {
        let eps = 0.1;
        let m = Mollifier::default();
        let g = Grid1D::new(-3.0, 3.0, 2400, 1.0).with_snapshot_dt(0.25);
        let c = 1.5;
        let u1 = Profile::Delta { x0: -0.5 };
        let rec = solve_wave_x(&coeff(c, c, eps), &Profile::Zero, &u1, &m, eps, &g, WaveXOptions::default()).unwrap();
        let t = 1.0;
        let last = rec.times.len() - 1;
        for (i, &x) in g.nodes().iter().enumerate() {
            let exact = (m.antideriv((x + 0.5 + c * t) / eps) - m.antideriv((x + 0.5 - c * t) / eps)) / (2.0 * c);
            assert!((rec.row("u", last)[i] - exact).abs() < 1e-3, "x = {x}");
            assert!((rec.row("v", last)[i] - m.scaled(x + 0.5 - c * t, eps)).abs() < 1e-9);
            assert!((rec.row("w", last)[i] - m.scaled(x + 0.5 + c * t, eps)).abs() < 1e-9);
        }
    }

    #[test]
    fn rejects_under_resolved_grid() {
        let g = Grid1D::new(-2.0, 2.0, 100, 1.0).with_snapshot_dt(0.5);
        let r = solve_wave_x(&coeff(1.0, 2.0, 0.01), &Profile::Zero, &Profile::Zero, &Mollifier::default(), 0.01, &g, WaveXOptions::default());
        assert!(matches!(r, Err(Error::Resolution { .. })));
    }
}
