//! Piecewise-constant coefficients, their mollified families and the
//! cumulative integrals used by the characteristic flows.

use crate::mollifier::{Mollifier, ScaleFn};
use crate::quadrature::gl16;
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Variable {
    Space,
    Time,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PiecewiseConstantCoeff {
    breakpoints: Vec<f64>,
    values: Vec<f64>,
    variable: Variable,
}

impl PiecewiseConstantCoeff {
    pub fn new(breakpoints: Vec<f64>, values: Vec<f64>, variable: Variable) -> Result<Self> {
        if values.len() != breakpoints.len() + 1 {
            return Err(Error::InvalidInput(format!(
                "coefficient needs one more value than breakpoints ({} values, {} breakpoints)",
                values.len(),
                breakpoints.len()
            )));
        }
        if let Some(v) = values.iter().find(|v| !(**v > 0.0) || !v.is_finite()) {
            return Err(Error::InvalidInput(format!("coefficient values must be positive, got {v}")));
        }
        if breakpoints.windows(2).any(|w| !(w[1] > w[0])) || breakpoints.iter().any(|b| !b.is_finite()) {
            return Err(Error::InvalidInput("breakpoints must be finite and strictly increasing".into()));
        }
        Ok(Self { breakpoints, values, variable })
    }

    pub fn constant(c: f64, variable: Variable) -> Result<Self> {
        Self::new(Vec::new(), vec![c], variable)
    }

    /// Single jump from `c_minus` to `c_plus` at `at`.
    pub fn jump(at: f64, c_minus: f64, c_plus: f64, variable: Variable) -> Result<Self> {
        Self::new(vec![at], vec![c_minus, c_plus], variable)
    }

    pub fn breakpoints(&self) -> &[f64] {
        &self.breakpoints
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn variable(&self) -> Variable {
        self.variable
    }

    pub fn lower_bound(&self) -> f64 {
        self.values.iter().cloned().fold(f64::INFINITY, f64::min)
    }

    pub fn upper_bound(&self) -> f64 {
        self.values.iter().cloned().fold(0.0, f64::max)
    }

    /// The unregularized value (right-continuous at breakpoints).
    pub fn eval(&self, x: f64) -> f64 {
        let k = self.breakpoints.partition_point(|&b| b <= x);
        self.values[k]
    }
}

/// `c_eps = c * phi_h` with `h = scale(eps)`.
#[derive(Debug, Clone)]
pub struct RegularizedCoeff {
    base: PiecewiseConstantCoeff,
    mollifier: Mollifier,
    scale: ScaleFn,
    eps: f64,
    h: f64,
}

impl RegularizedCoeff {
    pub fn new(base: PiecewiseConstantCoeff, mollifier: Mollifier, scale: ScaleFn, eps: f64) -> Result<Self> {
        let h = scale.eval(eps)?;
        Ok(Self { base, mollifier, scale, eps, h })
    }

    pub fn base(&self) -> &PiecewiseConstantCoeff {
        &self.base
    }

    pub fn mollifier(&self) -> &Mollifier {
        &self.mollifier
    }

    pub fn scale(&self) -> ScaleFn {
        self.scale
    }

    pub fn eps(&self) -> f64 {
        self.eps
    }

    pub fn h(&self) -> f64 {
        self.h
    }

    pub fn variable(&self) -> Variable {
        self.base.variable
    }

    /// (b0, b1): lower and upper bounds of c_eps.
    pub fn bounds(&self) -> (f64, f64) {
        (self.base.lower_bound(), self.base.upper_bound())
    }

    pub fn eval(&self, x: f64) -> f64 {
        let v = &self.base.values;
        let mut c = v[0];
        for (j, &x0) in self.base.breakpoints.iter().enumerate() {
            let z = (x - x0) / self.h;
            if z >= 1.0 {
                c += v[j + 1] - v[j];
            } else if z > -1.0 {
                c += (v[j + 1] - v[j]) * self.mollifier.antideriv(z);
            }
        }
        c
    }

    /// k-th derivative of c_eps.
    pub fn deriv(&self, x: f64, k: usize) -> Result<f64> {
        if k == 0 {
            return Ok(self.eval(x));
        }
        if k - 1 > self.mollifier.max_order() {
            return Err(Error::OrderTooHigh { order: k, max: self.mollifier.max_order() + 1 });
        }
        let v = &self.base.values;
        let hk = self.h.powi(k as i32);
        let mut s = 0.0;
        for (j, &x0) in self.base.breakpoints.iter().enumerate() {
            let z = (x - x0) / self.h;
            if z.abs() < 1.0 {
                s += (v[j + 1] - v[j]) * self.mollifier.deriv(z, k - 1)?;
            }
        }
        Ok(s / hk)
    }

    /// Merged intervals [x0 - h, x0 + h] around the breakpoints.
    pub fn kernel_neighborhoods(&self) -> Vec<(f64, f64)> {
        let mut out: Vec<(f64, f64)> = Vec::new();
        for &x0 in &self.base.breakpoints {
            let (a, b) = (x0 - self.h, x0 + self.h);
            match out.last_mut() {
                Some(last) if a <= last.1 => last.1 = last.1.max(b),
                _ => out.push((a, b)),
            }
        }
        out
    }

    /// Distance from x to the nearest breakpoint.
    pub fn distance_to_breakpoints(&self, x: f64) -> f64 {
        self.base.breakpoints.iter().map(|b| (x - b).abs()).fold(f64::INFINITY, f64::min)
    }
}

/// Which function of the coefficient is integrated.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Integrand {
    /// 1 / c: travel time for speed c.
    Reciprocal,
    /// 1 / sqrt(c): travel time for speed sqrt(c).
    ReciprocalSqrt,
    /// c itself: distance covered at speed c(t).
    Direct,
}

impl Integrand {
    fn apply(self, c: f64) -> f64 {
        match self {
            Integrand::Reciprocal => 1.0 / c,
            Integrand::ReciprocalSqrt => 1.0 / c.sqrt(),
            Integrand::Direct => c,
        }
    }
}

#[derive(Debug, Clone, Copy)]
enum SegKind {
    Affine(f64),
    Panel,
}

#[derive(Debug, Clone, Copy)]
struct Segment {
    x0: f64,
    x1: f64,
    kind: SegKind,
    cum0: f64,
}

/// `F(x) = int_0^x f(c_eps(y)) dy`, affine outside the kernel
/// neighborhoods and tabulated by Gauss-Legendre panels of width h/8 inside.
#[derive(Debug, Clone)]
pub struct CoeffAntideriv {
    rc: RegularizedCoeff,
    integrand: Integrand,
    segments: Vec<Segment>,
    left_slope: f64,
    right_slope: f64,
    offset: f64,
    fmin: f64,
    fmax: f64,
}

impl CoeffAntideriv {
    /// C_eps(x) = int_0^x dy / c_eps(y).
    pub fn new(rc: RegularizedCoeff) -> Self {
        Self::with_integrand(rc, Integrand::Reciprocal)
    }

    pub fn with_integrand(rc: RegularizedCoeff, integrand: Integrand) -> Self {
        let values = rc.base.values.clone();
        let hoods = rc.kernel_neighborhoods();
        let panel = rc.h / 8.0;
        let mut segments = Vec::new();
        let mut cum = 0.0;
        let mut bp = 0usize;
        for (i, &(a, b)) in hoods.iter().enumerate() {
            if i > 0 {
                let prev_end = hoods[i - 1].1;
                let slope = integrand.apply(values[bp]);
                segments.push(Segment { x0: prev_end, x1: a, kind: SegKind::Affine(slope), cum0: cum });
                cum += slope * (a - prev_end);
            }
            let n = ((b - a) / panel).ceil().max(1.0) as usize;
            let w = (b - a) / n as f64;
            for k in 0..n {
                let x0 = a + w * k as f64;
                let x1 = if k + 1 == n { b } else { x0 + w };
                segments.push(Segment { x0, x1, kind: SegKind::Panel, cum0: cum });
                cum += gl16().integrate(|y| integrand.apply(rc.eval(y)), x0, x1);
            }
            bp = rc.base.breakpoints.partition_point(|&x| x < b);
        }
        let left_slope = integrand.apply(values[0]);
        let right_slope = integrand.apply(*values.last().unwrap());
        let (b0, b1) = rc.bounds();
        let (f0, f1) = (integrand.apply(b0), integrand.apply(b1));
        let mut ca = Self {
            rc,
            integrand,
            segments,
            left_slope,
            right_slope,
            offset: 0.0,
            fmin: f0.min(f1),
            fmax: f0.max(f1),
        };
        ca.offset = ca.raw(0.0);
        ca
    }

    pub fn coeff(&self) -> &RegularizedCoeff {
        &self.rc
    }

    pub fn integrand(&self) -> Integrand {
        self.integrand
    }

    /// Integrand value at x.
    pub fn density(&self, x: f64) -> f64 {
        self.integrand.apply(self.rc.eval(x))
    }

    fn raw(&self, x: f64) -> f64 {
        let segs = &self.segments;
        if segs.is_empty() {
            return self.left_slope * x;
        }
        let first = segs[0];
        if x <= first.x0 {
            return self.left_slope * (x - first.x0);
        }
        let last = segs[segs.len() - 1];
        if x >= last.x1 {
            let total = match last.kind {
                SegKind::Affine(s) => last.cum0 + s * (last.x1 - last.x0),
                SegKind::Panel => {
                    last.cum0 + gl16().integrate(|y| self.density(y), last.x0, last.x1)
                }
            };
            return total + self.right_slope * (x - last.x1);
        }
        let i = segs.partition_point(|s| s.x1 <= x).min(segs.len() - 1);
        let s = segs[i];
        match s.kind {
            SegKind::Affine(slope) => s.cum0 + slope * (x - s.x0),
            SegKind::Panel => s.cum0 + gl16().integrate(|y| self.density(y), s.x0, x),
        }
    }

    pub fn eval(&self, x: f64) -> f64 {
        self.raw(x) - self.offset
    }

    /// Solves F(x) = y by safeguarded Newton inside the sandwich bracket.
    pub fn invert(&self, y: f64) -> f64 {
        if y == 0.0 {
            return 0.0;
        }
        let (mut lo, mut hi) = if y > 0.0 { (y / self.fmax, y / self.fmin) } else { (y / self.fmin, y / self.fmax) };
        let mut x = if self.segments.is_empty() { y / self.left_slope } else { 0.5 * (lo + hi) };
        for _ in 0..200 {
            let r = self.eval(x) - y;
            if r.abs() <= 1e-14 * (1.0 + y.abs()) {
                return x;
            }
            if r > 0.0 {
                hi = hi.min(x);
            } else {
                lo = lo.max(x);
            }
            let mut next = x - r / self.density(x);
            if !(next > lo && next < hi) {
                next = 0.5 * (lo + hi);
            }
            if (next - x).abs() <= 1e-16 * (1.0 + x.abs()) || hi - lo <= 1e-16 * (1.0 + x.abs()) {
                return next;
            }
            x = next;
        }
        x
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::quadrature;
    use approx::assert_relative_eq;

    fn jump_rc(eps: f64) -> RegularizedCoeff {
        let base = PiecewiseConstantCoeff::jump(0.0, 1.0, 2.0, Variable::Space).unwrap();
        RegularizedCoeff::new(base, Mollifier::default(), ScaleFn::Standard, eps).unwrap()
    }

    #[test]
    fn rejects_bad_coefficients() {
        assert!(PiecewiseConstantCoeff::new(vec![0.0], vec![1.0], Variable::Space).is_err());
        assert!(PiecewiseConstantCoeff::new(vec![0.0], vec![1.0, -2.0], Variable::Space).is_err());
        assert!(PiecewiseConstantCoeff::new(vec![1.0, 0.0], vec![1.0, 2.0, 3.0], Variable::Space).is_err());
    }

    #[test]
    fn jump_values() {
        let rc = jump_rc(0.01);
        assert_relative_eq!(rc.eval(0.0), 1.5, epsilon = 1e-15);
        assert_eq!(rc.eval(0.02), 2.0);
        assert_eq!(rc.eval(-0.5), 1.0);
        let a = rc.mollifier().phi(0.0);
        assert_relative_eq!(rc.deriv(0.0, 1).unwrap(), a / 0.01, epsilon = 1e-12);
        assert_eq!(rc.deriv(0.3, 1).unwrap(), 0.0);
        assert_eq!(rc.deriv(0.0, 2).unwrap(), 0.0);
    }

    #[test]
    fn value_matches_direct_convolution() {
        let rc = jump_rc(0.05);
        let h = rc.h();
        let x = -h / 2.0;
        let m = rc.mollifier().clone();
        let conv = quadrature::adaptive(|y| rc.base().eval(y) * m.scaled(x - y, h), x - h, 0.0, 1e-14)
            + quadrature::adaptive(|y| rc.base().eval(y) * m.scaled(x - y, h), 0.0, x + h, 1e-14);
        assert_relative_eq!(rc.eval(x), conv, epsilon = 1e-10);
        assert_relative_eq!(rc.eval(x), 1.0 + m.antideriv(-0.5), epsilon = 1e-15);
    }

    #[test]
    fn derivatives_match_differences() {
        let rc = jump_rc(0.1);
        for &x in &[-0.07, -0.01, 0.03, 0.09] {
            for k in 0..3 {
                let d = 1e-6;
                let fd = (rc.deriv(x + d, k).unwrap() - rc.deriv(x - d, k).unwrap()) / (2.0 * d);
                let ex = rc.deriv(x, k + 1).unwrap();
                assert!((fd - ex).abs() < 1e-5 * (1.0 + ex.abs()), "k={k} x={x} fd={fd} ex={ex}");
            }
        }
    }

    #[test]
    fn antiderivative_against_adaptive_quadrature() {
        let rc = jump_rc(0.02);
        let ca = CoeffAntideriv::new(rc.clone());
        assert_eq!(ca.eval(0.0), 0.0);
        for &x in &[-3.0f64, -0.015, -0.001, 0.004, 0.019, 1.0, 7.5] {
            let (a, b) = if x > 0.0 { (0.0, x) } else { (x, 0.0) };
            let mut q = 0.0;
            let cuts = [a, a.max(-0.02).min(b), 0.0f64.max(a).min(b), b.min(0.02).max(a), b];
            for w in cuts.windows(2) {
                q += quadrature::adaptive(|y| 1.0 / rc.eval(y), w[0], w[1], 1e-15);
            }
            let q = if x > 0.0 { q } else { -q };
            assert!((ca.eval(x) - q).abs() <= 1e-12 * (1.0 + x.abs()), "x={x}");
        }
        // jump 1 -> 2, x = 1: 1/2 + O(h)
        assert!((ca.eval(1.0) - 0.5).abs() < 0.02);
    }

    #[test]
    fn constant_coefficient_inverse() {
        let base = PiecewiseConstantCoeff::constant(2.0, Variable::Space).unwrap();
        let rc = RegularizedCoeff::new(base, Mollifier::default(), ScaleFn::Standard, 0.1).unwrap();
        let ca = CoeffAntideriv::new(rc);
        assert_eq!(ca.eval(3.0), 1.5);
        assert_relative_eq!(ca.invert(3.0), 6.0, epsilon = 1e-14);
    }

    #[test]
    fn inverse_derivative_is_coefficient() {
        let rc = jump_rc(0.1);
        let ca = CoeffAntideriv::new(rc.clone());
        for &y in &[-0.08, -0.02, 0.0, 0.03, 0.05] {
            let d = 1e-6;
            let fd = (ca.invert(y + d) - ca.invert(y - d)) / (2.0 * d);
            let ex = rc.eval(ca.invert(y));
            assert!((fd - ex).abs() <= 1e-6 * ex, "y={y}");
        }
    }

    #[test]
    fn multi_jump_neighborhoods_merge() {
        let base = PiecewiseConstantCoeff::new(vec![0.0, 0.1, 2.0], vec![1.0, 3.0, 0.5, 2.0], Variable::Space).unwrap();
        let rc = RegularizedCoeff::new(base, Mollifier::default(), ScaleFn::Standard, 0.08).unwrap();
        assert_eq!(rc.kernel_neighborhoods().len(), 2);
        assert_eq!(rc.eval(1.0), 0.5);
        let ca = CoeffAntideriv::new(rc);
        for &x in &[-1.0, 0.05, 1.0, 2.05, 3.0] {
            assert!((ca.eval(ca.invert(ca.eval(x))) - ca.eval(x)).abs() < 1e-12);
            assert!((ca.invert(ca.eval(x)) - x).abs() < 1e-9);
        }
    }
}
