//! Discrete energies of wave solutions, computed from the stored `v`, `w`.
//!
//! For every supported form `(v^2 + w^2)/2 = u_t^2 + s^2 u_x^2` where `s` is
//! the characteristic speed, so the energy density never re-differences `u`.

use crate::coefficients::{RegularizedCoeff, Variable};
use crate::quadrature::adaptive;
use crate::solvers::EpsRecord;
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EnergyForm {
    /// `u_tt = (c(x) u_x)_x`, energy `int u_t^2 + c u_x^2` (conserved).
    ConservativeX,
    /// `u_tt = c(t)^2 u_xx`, energy `int u_t^2 + c^2 u_x^2` (Gronwall bound).
    NonConservativeT,
    /// `u_tt = c(x)^2 u_xx`, energy `int u_t^2 + c^2 u_x^2` (report only).
    NonConservativeX,
}

impl EnergyForm {
    pub fn name(&self) -> &'static str {
        match self {
            EnergyForm::ConservativeX => "conservative_x",
            EnergyForm::NonConservativeT => "nonconservative_t",
            EnergyForm::NonConservativeX => "nonconservative_x",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EnergyTrace {
    pub eps: f64,
    pub form: EnergyForm,
    pub times: Vec<f64>,
    pub energy: Vec<f64>,
}

impl EnergyTrace {
    /// `max_t |E(t) - E(0)| / E(0)`; zero for a zero trace.
    pub fn relative_drift(&self) -> f64 {
        let e0 = self.energy[0];
        if e0 == 0.0 {
            return 0.0;
        }
        self.energy.iter().map(|e| (e - e0).abs() / e0).fold(0.0, f64::max)
    }
}

/// Trapezoid sums of `(v^2 + w^2)/2` at every stored time.
pub fn energy_trace(rec: &EpsRecord, form: EnergyForm) -> Result<EnergyTrace> {
    if !rec.has_field("v") || !rec.has_field("w") {
        return Err(Error::InvalidInput("energy needs the v and w fields".into()));
    }
    let dx = rec.grid.dx();
    let energy = (0..rec.times.len())
        .map(|ti| {
            let (v, w) = (rec.row("v", ti), rec.row("w", ti));
            let n = v.len();
            let mut s = 0.0;
            for i in 0..n {
                let wt = if i == 0 || i == n - 1 { 0.5 } else { 1.0 };
                s += wt * 0.5 * (v[i] * v[i] + w[i] * w[i]);
            }
            s * dx
        })
        .collect();
    Ok(EnergyTrace { eps: rec.eps, form, times: rec.times.clone(), energy })
}

/// Growth factor of the t-dependent energy on [0, t].
///
/// With `a = c^2` as the coefficient of `u_xx`, the identity
/// `d/dt int (u_t^2 + a u_x^2) = a' int u_x^2` gives
/// `E(t) <= E(0) exp(int_0^t |a'| / inf a)`. The integral equals the total
/// variation of `c_eps^2`, which does not depend on eps.
pub fn gronwall_factor(rc: &RegularizedCoeff, t: f64) -> Result<f64> {
    if rc.variable() != Variable::Time {
        return Err(Error::InvalidInput("Gronwall bound needs a time coefficient".into()));
    }
    let b0 = rc.bounds().0;
    let mut tv = 0.0;
    for (a, b) in rc.kernel_neighborhoods() {
        let (a, b) = (a.max(0.0), b.min(t));
        if b > a {
            tv += adaptive(|s| (2.0 * rc.eval(s) * rc.deriv(s, 1).unwrap_or(0.0)).abs(), a, b, 1e-13);
        }
    }
    Ok((tv / (b0 * b0)).exp())
}

/// Largest `E(t) / (E(0) * bound(t))` over the trace; at most 1 when the bound holds.
pub fn gronwall_ratio(trace: &EnergyTrace, rc: &RegularizedCoeff) -> Result<f64> {
    let e0 = trace.energy[0];
    if e0 == 0.0 {
        return Ok(0.0);
    }
    let mut worst: f64 = 0.0;
    for (&t, &e) in trace.times.iter().zip(&trace.energy) {
        worst = worst.max(e / (e0 * gronwall_factor(rc, t)?));
    }
    Ok(worst)
}

/// The naive energy growth factor `exp(2 T ||c'||_inf max(1, 1/b0))` of the
/// non-conservative x-dependent form. It blows up like `exp(C/h)`.
pub fn nonconservative_growth_factor(rc: &RegularizedCoeff, t_end: f64) -> f64 {
    let mut sup: f64 = 0.0;
    for (a, b) in rc.kernel_neighborhoods() {
        for k in 0..=256 {
            let x = a + (b - a) * k as f64 / 256.0;
            sup = sup.max(rc.deriv(x, 1).unwrap_or(0.0).abs());
        }
    }
    let b0 = rc.bounds().0;
    (2.0 * t_end * sup * (1.0f64).max(1.0 / b0)).exp()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::coefficients::PiecewiseConstantCoeff;
    use crate::mollifier::{Mollifier, ScaleFn};
    use crate::profile::Profile;
    use crate::solvers::wave_t::solve_wave_t;
    use crate::solvers::Grid1D;

    fn t_jump(eps: f64) -> RegularizedCoeff {
        let base = PiecewiseConstantCoeff::jump(1.0, 1.0, 2.0, Variable::Time).unwrap();
        RegularizedCoeff::new(base, Mollifier::default(), ScaleFn::Standard, eps).unwrap()
    }

    #[test]
    fn gronwall_factor_is_eps_uniform() {
        for &eps in &[0.1, 0.01, 0.001] {
            let f = gronwall_factor(&t_jump(eps), 2.0).unwrap();
            assert!((f - 3.0f64.exp()).abs() < 1e-9 * f);
            assert_eq!(gronwall_factor(&t_jump(eps), 0.5).unwrap(), 1.0);
        }
    }

    #[test]
    fn zero_solution_has_zero_energy() {
        let rc = t_jump(0.1);
        let g = Grid1D::new(-4.0, 4.0, 1600, 2.0).with_snapshot_dt(0.5);
        let rec = solve_wave_t(&rc, &Profile::Zero, &Profile::Zero, &Mollifier::default(), 0.1, &g).unwrap();
        let tr = energy_trace(&rec, EnergyForm::NonConservativeT).unwrap();
        assert!(tr.energy.iter().all(|&e| e == 0.0));
        assert_eq!(tr.relative_drift(), 0.0);
    }

    #[test]
    fn t_jump_energy_respects_bound() {
        let eps = 0.1;
        let rc = t_jump(eps);
        let g = Grid1D::new(-5.0, 5.0, 2000, 2.0).with_snapshot_dt(0.25);
        let m = Mollifier::default();
        for u0 in [Profile::Zero, Profile::Bump { x0: 0.0, width: 0.5 }] {
            let rec = solve_wave_t(&rc, &u0, &Profile::Delta { x0: 0.0 }, &m, eps, &g).unwrap();
            let tr = energy_trace(&rec, EnergyForm::NonConservativeT).unwrap();
            assert!(gronwall_ratio(&tr, &rc).unwrap() <= 1.0 + 1e-12);
            // constant before the jump
            assert!((tr.energy[2] - tr.energy[0]).abs() < 1e-9 * tr.energy[0]);
        }
    }

    #[test]
    fn naive_factor_grows_as_h_shrinks() {
        let base = PiecewiseConstantCoeff::jump(0.0, 1.0, 2.0, Variable::Space).unwrap();
        let f = |eps| {
            let rc = RegularizedCoeff::new(base.clone(), Mollifier::default(), ScaleFn::Standard, eps).unwrap();
            nonconservative_growth_factor(&rc, 1.0).ln()
        };
        // ||c'||_inf = phi(0)/h
        assert!((f(0.01) - 2.0 * 15.0 / 16.0 / 0.01).abs() < 1e-9);
        assert!(f(0.001) > 9.0 * f(0.01));
    }
}
