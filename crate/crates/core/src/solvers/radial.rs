//! Radially symmetric waves `u_tt = c(t)^2 (u_rr + (d-1)/r u_r)` with
//! `u(0) = 0`, `u_t(0) = phi_eps(r)`, reduced to 1D problems.
//!
//! Odd d = 2n+1: solve the 1D wave with data `g_n` and apply `(-1/r d_r)^n`.
//! Even d = 2n: invert the Abel-type transform on the data, solve the 1D wave,
//! transform back and apply `(-1/r d_r)^(n-1)`.

use std::sync::Arc;

use crate::coefficients::RegularizedCoeff;
use crate::mollifier::{poly_derivative, poly_eval, poly_integral, Mollifier, MollifierFamily};
use crate::profile::{Profile, Table};
use crate::solvers::abel::{abel_forward_linear, abel_invert};
use crate::solvers::wave_t::solve_wave_t;
use crate::solvers::{EpsRecord, Grid1D};
use crate::{Error, Result};

/// Polynomial `G_n` on [-1, 1]: `G_0 = phi`, `G_n(z) = int_{-1}^z (-y) G_{n-1}(y) dy`.
fn iterated_kernel(moll: &Mollifier, n: usize) -> Result<Vec<f64>> {
    if !matches!(moll.family(), MollifierFamily::Polynomial(_)) {
        return Err(Error::Unsupported("radial data need the polynomial mollifier".into()));
    }
    let mut g = moll.polynomial_coefficients().to_vec();
    for _ in 0..n {
        let mut shifted = vec![0.0];
        shifted.extend(g.iter().map(|a| -a));
        let mut next = poly_integral(&shifted);
        next[0] -= poly_eval(&next, -1.0);
        g = next;
    }
    Ok(g)
}

/// 1D data `g_n(r) = eps^(2n-1) G_n(r/eps)`, so that `(-1/r d_r)^n g_n = phi_eps`.
pub fn radial_data(moll: &Mollifier, n: usize, eps: f64) -> Result<Profile> {
    let g = iterated_kernel(moll, n)?;
    let mut derivs = vec![g];
    for _ in 0..3 {
        let next = poly_derivative(derivs.last().unwrap());
        derivs.push(next);
    }
    let p = 2 * n as i32 - 1;
    Ok(Profile::Custom(Arc::new(move |r: f64, k: usize| {
        let z = r / eps;
        if z.abs() >= 1.0 || k > 3 {
            return 0.0;
        }
        eps.powi(p - k as i32) * poly_eval(&derivs[k], z)
    })))
}

fn check_symmetric(grid: &Grid1D) -> Result<usize> {
    if (grid.x_min + grid.x_max).abs() > 1e-12 * grid.x_max.abs() || grid.nx % 2 != 0 {
        return Err(Error::InvalidInput("radial grid must be symmetric about r = 0 with even nx".into()));
    }
    Ok(grid.nx / 2)
}

/// `(-1/r) df/dr` on a symmetric grid given `df/dr`; the centre uses `-f''(0)`.
fn minus_over_r(df: &[f64], xs: &[f64], mid: usize, dx: f64) -> Vec<f64> {
    let mut out = vec![0.0; df.len()];
    for i in 0..df.len() {
        out[i] = if i == mid { -(df[mid + 1] - df[mid - 1]) / (2.0 * dx) } else { -df[i] / xs[i] };
    }
    out
}

fn centred_diff(f: &[f64], dx: f64) -> Vec<f64> {
    let n = f.len();
    let mut d = vec![0.0; n];
    for i in 1..n - 1 {
        d[i] = (f[i + 1] - f[i - 1]) / (2.0 * dx);
    }
    d
}

/// Applies `(-1/r d_r)^n` with the first derivative supplied exactly.
fn lower(dfirst: &[f64], n: usize, xs: &[f64], mid: usize, dx: f64) -> Vec<f64> {
    let mut f = minus_over_r(dfirst, xs, mid, dx);
    for _ in 1..n {
        f = minus_over_r(&centred_diff(&f, dx), xs, mid, dx);
    }
    f
}

fn radial_record(eps: f64, scale: f64, drift: f64, grid: &Grid1D, aux_name: &str) -> EpsRecord {
    let mut rec = EpsRecord::new(eps, scale, *grid).with_drift(drift);
    for name in ["u", "ux", aux_name] {
        rec.add_field(name);
    }
    rec
}

/// Odd d >= 3. Fields: `u`, `ux` (= du/dr), `v1d` (auxiliary 1D solution).
pub fn solve_radial_odd(rc: &RegularizedCoeff, d: usize, data_moll: &Mollifier, eps: f64, grid: &Grid1D) -> Result<EpsRecord> {
    if d < 3 || d % 2 == 0 {
        return Err(Error::InvalidInput(format!("odd radial solver needs odd d >= 3, got {d}")));
    }
    let mid = check_symmetric(grid)?;
    let n = (d - 1) / 2;
    let data = radial_data(data_moll, n, eps)?;
    let aux = solve_wave_t(rc, &Profile::Zero, &data, data_moll, eps, grid)?;
    let xs = grid.nodes();
    let dx = grid.dx();
    let mut rec = radial_record(eps, aux.scale, aux.drift, grid, "v1d");
    for (ti, &t) in aux.times.iter().enumerate() {
        let u = lower(aux.row("ux", ti), n, &xs, mid, dx);
        let ux = centred_diff(&u, dx);
        rec.push_snapshot(t, &[&u, &ux, aux.row("u", ti)]);
    }
    Ok(rec)
}

/// Even d >= 2. Fields: `u`, `ux`, `w1d` (1D solution on the Abel side).
///
/// The inverted data are not compactly supported; `u` at radius r and time t
/// is exact only while `r + T(t)` stays inside the window.
pub fn solve_radial_even(rc: &RegularizedCoeff, d: usize, data_moll: &Mollifier, eps: f64, grid: &Grid1D) -> Result<EpsRecord> {
    if d < 2 || d % 2 == 1 {
        return Err(Error::InvalidInput(format!("even radial solver needs even d >= 2, got {d}")));
    }
    let mid = check_symmetric(grid)?;
    let n = d / 2;
    let vdata = if n == 1 { Profile::Delta { x0: 0.0 } } else { radial_data(data_moll, n - 1, eps)? };
    let xs = grid.nodes();
    let dx = grid.dx();
    let step = (eps / 500.0).min(dx);
    let vfun = |s: f64| vdata.eval(s, 0, eps, data_moll);
    let half: Vec<f64> = xs[mid..].iter().map(|&r| abel_invert(vfun, r, step, &[eps])).collect();
    let ys: Vec<f64> = xs.iter().enumerate().map(|(i, _)| half[i.abs_diff(mid)]).collect();
    let wdata = Profile::Table(Arc::new(Table::new(xs.clone(), ys)?));
    let aux = solve_wave_t(rc, &Profile::Zero, &wdata, data_moll, eps, grid)?;

    let mut rec = radial_record(eps, aux.scale, aux.drift, grid, "w1d");
    for (ti, &t) in aux.times.iter().enumerate() {
        let w = &aux.row("u", ti)[mid..];
        let vh: Vec<f64> = (0..w.len()).map(|j| abel_forward_linear(w, dx, j)).collect();
        let v: Vec<f64> = (0..xs.len()).map(|i| vh[i.abs_diff(mid)]).collect();
        let u = if n == 1 { v } else { lower(&centred_diff(&v, dx), n - 1, &xs, mid, dx) };
        let ux = centred_diff(&u, dx);
        rec.push_snapshot(t, &[&u, &ux, aux.row("u", ti)]);
    }
    Ok(rec)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::coefficients::{PiecewiseConstantCoeff, Variable};
    use crate::mollifier::ScaleFn;
    use crate::quadrature::adaptive;

    fn constant(c: f64, eps: f64) -> RegularizedCoeff {
        let base = PiecewiseConstantCoeff::constant(c, Variable::Time).unwrap();
        RegularizedCoeff::new(base, Mollifier::default(), ScaleFn::Standard, eps).unwrap()
    }

    #[test]
    fn iterated_data_reduce_to_the_kernel() {
        let m = Mollifier::default();
        let eps = 0.3;
        for n in 1..=3 {
            let g = radial_data(&m, n, eps).unwrap();
            assert_eq!(g.eval(eps * 1.01, 0, eps, &m), 0.0);
            for &r in &[0.05, 0.13, 0.27] {
                assert!((g.eval(r, 0, eps, &m) - g.eval(-r, 0, eps, &m)).abs() < 1e-15);
                if n == 1 {
                    let lowered = -g.eval(r, 1, eps, &m) / r;
                    assert!((lowered - m.scaled(r, eps)).abs() < 1e-12);
                }
            }
            // continuity at the edge of the support
            assert!(g.eval(eps * (1.0 - 1e-9), 0, eps, &m).abs() < 1e-12);
        }
    }

    #[test]
    fn three_dimensional_constant_speed() {
        let (c, eps) = (1.0, 0.2);
        let rc = constant(c, eps);
        let m = Mollifier::default();
        let g = Grid1D::new(-3.0, 3.0, 1200, 1.5).with_snapshot_dt(0.5);
        let rec = solve_radial_odd(&rc, 3, &m, eps, &g).unwrap();
        let last = rec.times.len() - 1;
        let t = rec.times[last];
        let mut err: f64 = 0.0;
        for (i, &r) in g.nodes().iter().enumerate() {
            if r.abs() < 0.1 {
                continue;
            }
            let exact = adaptive(|s| s * m.scaled(s, eps), r - c * t, r + c * t, 1e-14) / (2.0 * c * r);
            err = err.max((rec.row("u", last)[i] - exact).abs());
        }
        assert!(err < 1e-4, "err = {err}");
        // Huygens: nothing behind the shell
        let inner = g.nodes().iter().position(|&r| r >= 0.0).unwrap();
        assert!(rec.row("u", last)[inner].abs() < 1e-10);
    }

    #[test]
    fn two_dimensional_constant_speed_centre() {
        let (c, eps) = (1.0, 0.2);
        let rc = constant(c, eps);
        let m = Mollifier::default();
        let g = Grid1D::new(-3.0, 3.0, 1200, 1.0).with_snapshot_dt(0.5);
        let rec = solve_radial_even(&rc, 2, &m, eps, &g).unwrap();
        let mid = g.nx / 2;
        for ti in 1..rec.times.len() {
            let t = rec.times[ti];
            let exact = adaptive(|s| s * m.scaled(s, eps) / (c * c * t * t - s * s).sqrt(), 0.0, eps, 1e-13) / c;
            let got = rec.row("u", ti)[mid];
            assert!((got - exact).abs() < 1e-3 * exact, "t = {t}: {got} vs {exact}");
        }
    }

    #[test]
    fn rejects_wrong_parity_and_bump() {
        let rc = constant(1.0, 0.2);
        let g = Grid1D::new(-3.0, 3.0, 1200, 1.0);
        let m = Mollifier::default();
        assert!(solve_radial_odd(&rc, 4, &m, 0.2, &g).is_err());
        assert!(solve_radial_even(&rc, 3, &m, 0.2, &g).is_err());
        assert!(matches!(solve_radial_odd(&rc, 3, &Mollifier::bump(), 0.2, &g), Err(Error::Unsupported(_))));
    }
}
