//! Characteristic curves of `x' = c_eps(x)` and `x' = +-c_eps(t)`, plus the
//! closed forms for the speeds `-tanh(x/eps)` and `tanh(x/eps)`.

use std::sync::Arc;

use crate::coefficients::{CoeffAntideriv, Integrand, RegularizedCoeff, Variable};
use crate::{Error, Result};

/// `T_eps(t) = int_0^t c_eps(s) ds` for a time-dependent coefficient.
#[derive(Debug, Clone)]
pub struct TimeIntegral {
    inner: CoeffAntideriv,
}

impl TimeIntegral {
    pub fn new(rc: RegularizedCoeff) -> Result<Self> {
        if rc.variable() != Variable::Time {
            return Err(Error::InvalidInput("time integral needs a time-dependent coefficient".into()));
        }
        Ok(Self { inner: CoeffAntideriv::with_integrand(rc, Integrand::Direct) })
    }

    pub fn eval(&self, t: f64) -> f64 {
        self.inner.eval(t)
    }

    /// The time at which the integral reaches `y`.
    pub fn invert(&self, y: f64) -> f64 {
        self.inner.invert(y)
    }

    pub fn coeff(&self) -> &RegularizedCoeff {
        self.inner.coeff()
    }
}

/// Convenience wrapper: `T_eps(t)`.
pub fn time_integral(rc: &RegularizedCoeff, t: f64) -> Result<f64> {
    Ok(TimeIntegral::new(rc.clone())?.eval(t))
}

#[derive(Debug, Clone)]
pub enum CharCurve {
    XDependent(Arc<CoeffAntideriv>),
    /// Rays `x' = sign * c_eps(t)`, sign = +1 or -1.
    TDependent { integral: Arc<TimeIntegral>, sign: f64 },
    /// Speed `-tanh(x/eps)` (compressive at the origin).
    TanhMinus { eps: f64 },
    /// Speed `tanh(x/eps)` (expansive at the origin).
    TanhPlus { eps: f64 },
}

/// Partial derivatives of `gamma(t, x, 0)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GammaPartials {
    pub foot: f64,
    /// d/dx, d2/dx2, d3/dx3
    pub dx: [f64; 3],
    /// d/dt, d2/dt2, d3/dt3
    pub dt: [f64; 3],
}

impl CharCurve {
    pub fn x_dependent(rc: RegularizedCoeff) -> Result<Self> {
        if rc.variable() != Variable::Space {
            return Err(Error::InvalidInput("x-dependent characteristics need a space coefficient".into()));
        }
        Ok(CharCurve::XDependent(Arc::new(CoeffAntideriv::new(rc))))
    }

    /// Position at time `tau` of the characteristic through (t, x).
    pub fn gamma(&self, t: f64, x: f64, tau: f64) -> f64 {
        if t == tau {
            return x;
        }
        match self {
            CharCurve::XDependent(ca) => ca.invert(ca.eval(x) + tau - t),
            CharCurve::TDependent { integral, sign } => x + sign * (integral.eval(tau) - integral.eval(t)),
            CharCurve::TanhMinus { eps } => eps * asinh_exp_sinh((t - tau) / eps, x / eps),
            CharCurve::TanhPlus { eps } => eps * asinh_exp_sinh((tau - t) / eps, x / eps),
        }
    }

    /// d gamma(t, x, tau) / dx.
    pub fn gamma_dx(&self, t: f64, x: f64, tau: f64) -> f64 {
        match self {
            CharCurve::XDependent(ca) => {
                let c = ca.coeff();
                c.eval(self.gamma(t, x, tau)) / c.eval(x)
            }
            CharCurve::TDependent { .. } => 1.0,
            CharCurve::TanhMinus { eps } => d_asinh_exp_sinh((t - tau) / eps, x / eps),
            CharCurve::TanhPlus { eps } => d_asinh_exp_sinh((tau - t) / eps, x / eps),
        }
    }

    /// Closed-form partials of gamma(t, x, 0) up to third order.
    pub fn gamma_partials(&self, t: f64, x: f64) -> Result<GammaPartials> {
        let ca = match self {
            CharCurve::XDependent(ca) => ca,
            _ => return Err(Error::Unsupported("gamma partials need an x-dependent speed".into())),
        };
        let c = ca.coeff();
        let g = self.gamma(t, x, 0.0);
        let (cg, cg1, cg2) = (c.eval(g), c.deriv(g, 1)?, c.deriv(g, 2)?);
        let (cx, cx1, cx2) = (c.eval(x), c.deriv(x, 1)?, c.deriv(x, 2)?);
        let gx = cg / cx;
        let gxx = cg1 * gx / cx - cg * cx1 / (cx * cx);
        let gxxx = (cg2 * gx * gx + cg1 * gxx) / cx
            - cg1 * gx * cx1 / (cx * cx)
            - (cg1 * gx * cx1 + cg * cx2) / (cx * cx)
            + 2.0 * cg * cx1 * cx1 / (cx * cx * cx);
        let gt = -cg;
        let gtt = cg1 * cg;
        let gttt = -cg2 * cg * cg - cg1 * cg1 * cg;
        Ok(GammaPartials { foot: g, dx: [gx, gxx, gxxx], dt: [gt, gtt, gttt] })
    }
}

/// ln|sinh r|, stable for large |r|.
fn ln_abs_sinh(r: f64) -> f64 {
    let a = r.abs();
    if a > 1.0 {
        a + ((1.0 - (-2.0 * a).exp()) / 2.0).ln()
    } else {
        a.sinh().ln()
    }
}

/// ln cosh r, stable for large |r|.
fn ln_cosh(r: f64) -> f64 {
    let a = r.abs();
    a + (-2.0 * a).exp().ln_1p() - std::f64::consts::LN_2
}

/// asinh(e^s sinh r) without forming e^s.
pub fn asinh_exp_sinh(s: f64, r: f64) -> f64 {
    if r == 0.0 {
        return 0.0;
    }
    let sign = r.signum();
    let l = s + ln_abs_sinh(r);
    if l < 20.0 {
        (sign * l.exp()).asinh()
    } else {
        sign * (l + (1.0 + (1.0 + (-2.0 * l).exp()).sqrt()).ln())
    }
}

/// d/dr asinh(e^s sinh r) = e^s cosh r / sqrt(1 + e^{2s} sinh^2 r).
pub fn d_asinh_exp_sinh(s: f64, r: f64) -> f64 {
    let l2 = if r == 0.0 { f64::NEG_INFINITY } else { 2.0 * (s + ln_abs_sinh(r)) };
    let ln1p_e = if l2 > 40.0 { l2 + (-l2).exp().ln_1p() } else { l2.exp().ln_1p() };
    (s + ln_cosh(r) - 0.5 * ln1p_e).exp()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::coefficients::PiecewiseConstantCoeff;
    use crate::mollifier::{Mollifier, ScaleFn};
    use approx::assert_relative_eq;

    fn jump(eps: f64) -> RegularizedCoeff {
        let base = PiecewiseConstantCoeff::jump(0.0, 1.0, 2.0, Variable::Space).unwrap();
        RegularizedCoeff::new(base, Mollifier::default(), ScaleFn::Standard, eps).unwrap()
    }

    #[test]
    fn constant_speed_foot() {
        let base = PiecewiseConstantCoeff::constant(1.0, Variable::Space).unwrap();
        let rc = RegularizedCoeff::new(base, Mollifier::default(), ScaleFn::Standard, 0.1).unwrap();
        let cc = CharCurve::x_dependent(rc).unwrap();
        assert_relative_eq!(cc.gamma(0.7, 0.2, 0.0), 0.2 - 0.7, epsilon = 1e-14);
        let p = cc.gamma_partials(0.7, 0.2).unwrap();
        assert_relative_eq!(p.dx[0], 1.0);
        assert_eq!(p.dx[1], 0.0);
        assert_eq!(p.dx[2], 0.0);
    }

    #[test]
    fn corner_values() {
        for &eps in &[0.1, 0.02, 0.004] {
            let rc = jump(eps);
            let a = rc.mollifier().phi(0.0);
            let cc = CharCurve::x_dependent(rc).unwrap();
            let p = cc.gamma_partials(0.5, 0.0).unwrap();
            assert_relative_eq!(p.dx[0], 2.0 / 3.0, max_relative = 1e-12);
            assert_relative_eq!(p.dx[1], -4.0 * a / (9.0 * eps), max_relative = 1e-12);
            assert_relative_eq!(p.dx[2], 16.0 * a * a / (27.0 * eps * eps), max_relative = 1e-12);
        }
    }

    #[test]
    fn partials_match_differences() {
        let cc = CharCurve::x_dependent(jump(0.2)).unwrap();
        let (t, x) = (0.13, 0.05);
        let p = cc.gamma_partials(t, x).unwrap();
        let d = 1e-4;
        let g = |t: f64, x: f64| cc.gamma(t, x, 0.0);
        let gx = (g(t, x + d) - g(t, x - d)) / (2.0 * d);
        let gxx = (g(t, x + d) - 2.0 * g(t, x) + g(t, x - d)) / (d * d);
        let gt = (g(t + d, x) - g(t - d, x)) / (2.0 * d);
        let gtt = (g(t + d, x) - 2.0 * g(t, x) + g(t - d, x)) / (d * d);
        assert_relative_eq!(p.dx[0], gx, max_relative = 1e-6);
        assert_relative_eq!(p.dx[1], gxx, max_relative = 1e-4);
        assert_relative_eq!(p.dt[0], gt, max_relative = 1e-6);
        assert_relative_eq!(p.dt[1], gtt, max_relative = 1e-4);
        let d = 2e-3;
        let gxxx = (g(t, x + 2.0 * d) - 2.0 * g(t, x + d) + 2.0 * g(t, x - d) - g(t, x - 2.0 * d)) / (2.0 * d * d * d);
        let gttt = (g(t + 2.0 * d, x) - 2.0 * g(t + d, x) + 2.0 * g(t - d, x) - g(t - 2.0 * d, x)) / (2.0 * d * d * d);
        assert_relative_eq!(p.dx[2], gxxx, max_relative = 2e-3);
        assert_relative_eq!(p.dt[2], gttt, max_relative = 2e-3);
    }

    #[test]
    fn time_integral_jump() {
        let base = PiecewiseConstantCoeff::jump(1.0, 1.0, 2.0, Variable::Time).unwrap();
        let rc = RegularizedCoeff::new(base, Mollifier::default(), ScaleFn::Standard, 0.01).unwrap();
        assert_relative_eq!(time_integral(&rc, 0.5).unwrap(), 0.5, epsilon = 1e-14);
        // symmetric kernel: int over the layer equals the sharp value
        assert_relative_eq!(time_integral(&rc, 2.0).unwrap(), 3.0, epsilon = 1e-12);
        assert!(time_integral(&jump(0.1), 1.0).is_err());
    }

    #[test]
    fn tanh_closed_forms() {
        let cc = CharCurve::TanhMinus { eps: 0.01 };
        assert_eq!(cc.gamma(0.3, 0.2, 0.3), 0.2);
        // direct formula where it does not overflow
        let (t, x, eps) = (0.05f64, 0.003f64, 0.01f64);
        let direct = eps * ((t / eps).exp() * (x / eps).sinh()).asinh();
        assert_relative_eq!(cc.gamma(t, x, 0.0), direct, max_relative = 1e-13);
        // far regime: eps asinh(e^{t/eps} sinh(x/eps)) -> x + t sign(x)
        let far = cc.gamma(0.5, 0.3, 0.0);
        assert!((far - 0.8).abs() < 0.01 * 1.0);
        assert!(cc.gamma(0.5, -0.3, 0.0) < -0.79);
        // derivative at the origin is e^{t/eps}
        let d = cc.gamma_dx(0.5, 0.0, 0.0);
        assert_relative_eq!(d.ln(), 50.0, max_relative = 1e-12);
        let plus = CharCurve::TanhPlus { eps: 0.01 };
        assert_relative_eq!(plus.gamma_dx(0.5, 0.0, 0.0).ln(), -50.0, max_relative = 1e-12);
    }

    #[test]
    fn tanh_derivative_matches_difference() {
        for &(s, r) in &[(3.0f64, 0.4f64), (-2.0, -1.5), (10.0, 0.01), (0.5, 30.0)] {
            let d = 1e-6 * (1.0 + r.abs());
            let fd = (asinh_exp_sinh(s, r + d) - asinh_exp_sinh(s, r - d)) / (2.0 * d);
            assert_relative_eq!(d_asinh_exp_sinh(s, r), fd, max_relative = 1e-5);
        }
    }
}
