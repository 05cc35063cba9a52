//! Mollifiers supported in [-1, 1], their derivatives and antiderivatives,
//! and the regularization scales h(eps).

use std::sync::{Arc, OnceLock};

use crate::quadrature;
use crate::{Error, Result};

/// Number of nodes of the tabulated bump antiderivative.
const BUMP_TABLE_NODES: usize = 4097;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum MollifierFamily {
    /// `C_n (1 - x^2)^n` on [-1, 1].
    Polynomial(u32),
    /// `C exp(-1 / (1 - x^2))` on (-1, 1).
    Bump,
}

/// A nonnegative, even, unit-mass kernel supported in [-1, 1].
#[derive(Debug, Clone)]
pub struct Mollifier {
    family: MollifierFamily,
    normalization: f64,
    /// Monomial coefficients of the normalized density and its derivatives
    /// (polynomial family).
    poly: Vec<Vec<f64>>,
    /// Monomial coefficients of the antiderivative, offset so that it is 0 at -1.
    poly_anti: Vec<f64>,
    bump_table: Option<Arc<BumpTable>>,
}

impl Default for Mollifier {
    fn default() -> Self {
        Self::polynomial(2)
    }
}

impl Mollifier {
    pub fn polynomial(n: u32) -> Self {
        assert!(n >= 1, "polynomial mollifier needs n >= 1");
        // (1 - x^2)^n = sum_k binom(n,k) (-1)^k x^{2k}
        let mut raw = vec![0.0; 2 * n as usize + 1];
        let mut binom = 1.0;
        for k in 0..=n as usize {
            raw[2 * k] = if k % 2 == 0 { binom } else { -binom };
            binom = binom * (n as f64 - k as f64) / (k as f64 + 1.0);
        }
        let mass = poly_eval(&poly_integral(&raw), 1.0) - poly_eval(&poly_integral(&raw), -1.0);
        let normalization = 1.0 / mass;
        let base: Vec<f64> = raw.iter().map(|c| c * normalization).collect();
        let mut poly_anti = poly_integral(&base);
        let mut poly = vec![base];
        for _ in 0..4 {
            let next = poly_derivative(poly.last().unwrap());
            poly.push(next);
        }
        poly_anti[0] -= poly_eval(&poly_anti, -1.0);
        Self {
            family: MollifierFamily::Polynomial(n),
            normalization,
            poly,
            poly_anti,
            bump_table: None,
        }
    }

    pub fn bump() -> Self {
        let table = bump_table();
        Self {
            family: MollifierFamily::Bump,
            normalization: table.normalization,
            poly: Vec::new(),
            poly_anti: Vec::new(),
            bump_table: Some(table),
        }
    }

    pub fn family(&self) -> MollifierFamily {
        self.family
    }

    pub fn normalization(&self) -> f64 {
        self.normalization
    }

    /// Highest derivative order that is continuous on all of R.
    pub fn max_order(&self) -> usize {
        match self.family {
            MollifierFamily::Polynomial(n) => (2 * n as usize - 1).min(4),
            MollifierFamily::Bump => 4,
        }
    }

    pub fn phi(&self, x: f64) -> f64 {
        if x.abs() >= 1.0 {
            return 0.0;
        }
        match self.family {
            MollifierFamily::Polynomial(_) => poly_eval(&self.poly[0], x),
            MollifierFamily::Bump => self.normalization * bump_raw(x, 0),
        }
    }

    /// k-th derivative of phi, k <= `max_order()`.
    pub fn deriv(&self, x: f64, k: usize) -> Result<f64> {
        if k > self.max_order() {
            return Err(Error::OrderTooHigh { order: k, max: self.max_order() });
        }
        if x.abs() >= 1.0 {
            return Ok(0.0);
        }
        Ok(match self.family {
            MollifierFamily::Polynomial(_) => poly_eval(&self.poly[k], x),
            MollifierFamily::Bump => self.normalization * bump_raw(x, k),
        })
    }

    /// Phi(x) = integral of phi over (-inf, x].
    pub fn antideriv(&self, x: f64) -> f64 {
        if x <= -1.0 {
            return 0.0;
        }
        if x >= 1.0 {
            return 1.0;
        }
        match self.family {
            MollifierFamily::Polynomial(_) => poly_eval(&self.poly_anti, x),
            MollifierFamily::Bump => self.bump_table.as_ref().expect("bump table").eval(x),
        }
    }

    /// Scaled kernel phi_h(x) = phi(x/h)/h.
    pub fn scaled(&self, x: f64, h: f64) -> f64 {
        self.phi(x / h) / h
    }

    /// k-th derivative of phi_h.
    pub fn scaled_deriv(&self, x: f64, h: f64, k: usize) -> Result<f64> {
        Ok(self.deriv(x / h, k)? / h.powi(k as i32 + 1))
    }

    /// Coefficients in x of the normalized density; empty for the bump.
    pub fn polynomial_coefficients(&self) -> &[f64] {
        self.poly.first().map(|p| p.as_slice()).unwrap_or(&[])
    }
}

pub(crate) fn poly_eval(c: &[f64], x: f64) -> f64 {
    c.iter().rev().fold(0.0, |acc, &a| acc * x + a)
}

pub(crate) fn poly_derivative(c: &[f64]) -> Vec<f64> {
    if c.len() <= 1 {
        return vec![0.0];
    }
    c.iter().enumerate().skip(1).map(|(i, &a)| a * i as f64).collect()
}

pub(crate) fn poly_integral(c: &[f64]) -> Vec<f64> {
    let mut out = vec![0.0; c.len() + 1];
    for (i, &a) in c.iter().enumerate() {
        out[i + 1] = a / (i as f64 + 1.0);
    }
    out
}

/// k-th derivative of exp(-1/(1-x^2)) for |x| < 1, k <= 4.
fn bump_raw(x: f64, k: usize) -> f64 {
    let f = (-1.0 / (1.0 - x * x)).exp();
    if f == 0.0 {
        return 0.0;
    }
    // g = -1/(1-x^2) = -(1/(1-x) + 1/(1+x))/2
    let a = 1.0 / (1.0 - x);
    let b = 1.0 / (1.0 + x);
    let fact = [1.0, 1.0, 2.0, 6.0, 24.0];
    let g = |j: usize| -> f64 {
        let sign = if j % 2 == 0 { 1.0 } else { -1.0 };
        -0.5 * fact[j] * (a.powi(j as i32 + 1) + sign * b.powi(j as i32 + 1))
    };
    let (g1, g2, g3, g4) = (g(1), g(2), g(3), g(4));
    let m = match k {
        0 => 1.0,
        1 => g1,
        2 => g2 + g1 * g1,
        3 => g3 + 3.0 * g1 * g2 + g1.powi(3),
        _ => g4 + 4.0 * g1 * g3 + 3.0 * g2 * g2 + 6.0 * g1 * g1 * g2 + g1.powi(4),
    };
    m * f
}

#[derive(Debug)]
struct BumpTable {
    normalization: f64,
    nodes: Vec<f64>,
    values: Vec<f64>,
    slopes: Vec<f64>,
}

fn bump_table() -> Arc<BumpTable> {
    static TABLE: OnceLock<Arc<BumpTable>> = OnceLock::new();
    TABLE.get_or_init(|| Arc::new(BumpTable::build())).clone()
}

impl BumpTable {
    fn build() -> Self {
        let n = BUMP_TABLE_NODES - 1;
        let nodes: Vec<f64> = (0..=n)
            .map(|j| -(std::f64::consts::PI * j as f64 / n as f64).cos())
            .collect();
        let mut cum = vec![0.0; n + 1];
        for j in 1..=n {
            let piece = quadrature::adaptive(|x| bump_raw(x, 0), nodes[j - 1], nodes[j], 1e-15);
            cum[j] = cum[j - 1] + piece;
        }
        let mass = cum[n];
        let values: Vec<f64> = cum.iter().map(|v| v / mass).collect();
        let mut slopes: Vec<f64> = nodes.iter().map(|&x| bump_raw(x, 0) / mass).collect();
        // Fritsch-Carlson limiting keeps the interpolant monotone.
        for j in 0..n {
            let d = (values[j + 1] - values[j]) / (nodes[j + 1] - nodes[j]);
            if d <= 0.0 {
                slopes[j] = 0.0;
                slopes[j + 1] = 0.0;
                continue;
            }
            let (a, b) = (slopes[j] / d, slopes[j + 1] / d);
            let s = a * a + b * b;
            if s > 9.0 {
                let tau = 3.0 / s.sqrt();
                slopes[j] = tau * a * d;
                slopes[j + 1] = tau * b * d;
            }
        }
        Self { normalization: 1.0 / mass, nodes, values, slopes }
    }

    fn eval(&self, x: f64) -> f64 {
        let j = match self.nodes.binary_search_by(|p| p.partial_cmp(&x).unwrap()) {
            Ok(j) => return self.values[j],
            Err(j) => j - 1,
        };
        let (x0, x1) = (self.nodes[j], self.nodes[j + 1]);
        let h = x1 - x0;
        let s = (x - x0) / h;
        let h00 = (1.0 + 2.0 * s) * (1.0 - s) * (1.0 - s);
        let h10 = s * (1.0 - s) * (1.0 - s);
        let h01 = s * s * (3.0 - 2.0 * s);
        let h11 = s * s * (s - 1.0);
        h00 * self.values[j] + h10 * h * self.slopes[j] + h01 * self.values[j + 1] + h11 * h * self.slopes[j + 1]
    }
}

/// Regularization scale h(eps).
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ScaleFn {
    Standard,
    Logarithmic,
    SlowScale { p: f64 },
}

impl Default for ScaleFn {
    fn default() -> Self {
        ScaleFn::Standard
    }
}

impl ScaleFn {
    pub fn slow_scale_default() -> Self {
        ScaleFn::SlowScale { p: 4.0 }
    }

    pub fn eval(&self, eps: f64) -> Result<f64> {
        if !(eps > 0.0) {
            return Err(Error::Domain(format!("eps must be positive, got {eps}")));
        }
        match *self {
            ScaleFn::Standard => Ok(eps),
            ScaleFn::Logarithmic => {
                if eps >= 1.0 {
                    return Err(Error::Domain(format!("logarithmic scale needs eps < 1, got {eps}")));
                }
                Ok(1.0 / eps.ln().abs())
            }
            ScaleFn::SlowScale { p } => {
                if !(p > 1.0) {
                    return Err(Error::Domain(format!("slow scale exponent must exceed 1, got {p}")));
                }
                Ok(eps.powf(1.0 / p))
            }
        }
    }

    pub fn name(&self) -> String {
        match self {
            ScaleFn::Standard => "standard".into(),
            ScaleFn::Logarithmic => "logarithmic".into(),
            ScaleFn::SlowScale { p } => format!("slow_scale:{p}"),
        }
    }
}

/// eps_k = eps0 * ratio^k, k = 0..count.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EpsilonLadder {
    pub eps0: f64,
    pub ratio: f64,
    pub count: usize,
}

impl Default for EpsilonLadder {
    fn default() -> Self {
        Self { eps0: 0.1, ratio: 0.7, count: 10 }
    }
}

impl EpsilonLadder {
    pub fn new(eps0: f64, ratio: f64, count: usize) -> Result<Self> {
        let l = Self { eps0, ratio, count };
        l.validate()?;
        Ok(l)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.eps0 > 0.0 && self.eps0 < 1.0) {
            return Err(Error::InvalidInput(format!("ladder eps0 must lie in (0,1), got {}", self.eps0)));
        }
        if !(self.ratio > 0.0 && self.ratio < 1.0) {
            return Err(Error::InvalidInput(format!("ladder ratio must lie in (0,1), got {}", self.ratio)));
        }
        if self.count < 4 {
            return Err(Error::InvalidInput(format!("ladder needs at least 4 values, got {}", self.count)));
        }
        Ok(())
    }

    pub fn values(&self) -> Vec<f64> {
        (0..self.count).map(|k| self.eps0 * self.ratio.powi(k as i32)).collect()
    }

    pub fn smallest(&self) -> f64 {
        self.eps0 * self.ratio.powi(self.count as i32 - 1)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn quartic_kernel_values() {
        let m = Mollifier::polynomial(2);
        assert_relative_eq!(m.phi(0.0), 15.0 / 16.0, epsilon = 1e-15);
        assert_eq!(m.phi(1.5), 0.0);
        assert_eq!(m.phi(-0.3), m.phi(0.3));
        assert_relative_eq!(m.deriv(0.5, 1).unwrap(), -1.40625, epsilon = 1e-14);
        assert_eq!(m.deriv(0.0, 1).unwrap(), 0.0);
        assert_eq!(m.deriv(1.2, 2).unwrap(), 0.0);
        assert!(matches!(m.deriv(0.1, 4), Err(Error::OrderTooHigh { .. })));
    }

    #[test]
    fn antiderivative_landmarks() {
        for m in [Mollifier::polynomial(2), Mollifier::polynomial(5), Mollifier::bump()] {
            assert_eq!(m.antideriv(-1.0), 0.0);
            assert_relative_eq!(m.antideriv(0.0), 0.5, epsilon = 1e-12);
            assert_eq!(m.antideriv(1.0), 1.0);
            assert_relative_eq!(m.antideriv(0.37) + m.antideriv(-0.37), 1.0, epsilon = 1e-12);
        }
    }

    #[test]
    fn unit_mass_by_quadrature() {
        for m in [Mollifier::polynomial(1), Mollifier::polynomial(2), Mollifier::bump()] {
            let mass = quadrature::adaptive(|x| m.phi(x), -1.0, 1.0, 1e-14);
            assert_relative_eq!(mass, 1.0, epsilon = 1e-12);
            let h = 0.013;
            let mass_h = quadrature::adaptive(|x| m.scaled(x, h), -h, h, 1e-14);
            assert_relative_eq!(mass_h, 1.0, epsilon = 1e-10);
        }
    }

    #[test]
    fn bump_derivatives_match_differences() {
        let m = Mollifier::bump();
        for &x in &[-0.7, -0.2, 0.1, 0.55] {
            for k in 0..4 {
                let d = 1e-5;
                let fd = (m.deriv(x + d, k).unwrap() - m.deriv(x - d, k).unwrap()) / (2.0 * d);
                let exact = m.deriv(x, k + 1).unwrap();
                assert!((fd - exact).abs() < 1e-6 * (1.0 + exact.abs()), "k={k} x={x}");
            }
        }
    }

    #[test]
    fn bump_table_matches_direct_quadrature() {
        let m = Mollifier::bump();
        for &x in &[-0.93, -0.5, -0.01, 0.3, 0.88] {
            let direct = quadrature::adaptive(|y| m.phi(y), -1.0, x, 1e-15);
            assert!((m.antideriv(x) - direct).abs() < 1e-11);
        }
    }

    #[test]
    fn scale_examples() {
        assert_eq!(ScaleFn::Standard.eval(0.01).unwrap(), 0.01);
        assert_relative_eq!(ScaleFn::Logarithmic.eval((-10f64).exp()).unwrap(), 0.1, epsilon = 1e-14);
        assert_relative_eq!(ScaleFn::slow_scale_default().eval(1e-4).unwrap(), 0.1, epsilon = 1e-14);
        assert!(ScaleFn::Logarithmic.eval(1.0).is_err());
    }

    #[test]
    fn default_ladder() {
        let l = EpsilonLadder::default();
        let v = l.values();
        assert_eq!(v.len(), 10);
        assert_relative_eq!(v[9], 0.1 * 0.7f64.powi(9), epsilon = 1e-15);
        assert!(v.windows(2).all(|w| w[1] < w[0]));
        assert!(EpsilonLadder::new(0.1, 0.7, 3).is_err());
    }
}
