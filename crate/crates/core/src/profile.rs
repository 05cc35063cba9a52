//! Initial-data profiles, realized for a given eps.

use std::sync::Arc;

use crate::mollifier::Mollifier;
use crate::{Error, Result};

/// Piecewise-linear table of (x, value) pairs; zero outside.
#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    pub xs: Vec<f64>,
    pub ys: Vec<f64>,
}

impl Table {
    pub fn new(xs: Vec<f64>, ys: Vec<f64>) -> Result<Self> {
        if xs.len() != ys.len() || xs.len() < 2 {
            return Err(Error::InvalidInput("table needs at least two (x, value) rows".into()));
        }
        if xs.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(Error::InvalidInput("table x values must be strictly increasing".into()));
        }
        Ok(Self { xs, ys })
    }

    fn eval(&self, x: f64, order: usize) -> f64 {
        if x < self.xs[0] || x > *self.xs.last().unwrap() {
            return 0.0;
        }
        let i = self.xs.partition_point(|&p| p <= x).clamp(1, self.xs.len() - 1);
        let (x0, x1) = (self.xs[i - 1], self.xs[i]);
        let (y0, y1) = (self.ys[i - 1], self.ys[i]);
        match order {
            0 => y0 + (y1 - y0) * (x - x0) / (x1 - x0),
            1 => (y1 - y0) / (x1 - x0),
            _ => 0.0,
        }
    }
}

pub type CustomFn = Arc<dyn Fn(f64, usize) -> f64 + Send + Sync>;

#[derive(Clone)]
pub enum Profile {
    Zero,
    /// `phi_eps(x - x0)`, the regularized delta at x0 (scale eps).
    Delta { x0: f64 },
    /// `(1 - ((x - x0)/width)^2)^4`, peak 1, independent of eps.
    Bump { x0: f64, width: f64 },
    /// `sum_k a_k x^k`.
    Polynomial(Vec<f64>),
    Table(Arc<Table>),
    /// `factor * p'(x)`.
    Derivative { of: Box<Profile>, factor: f64 },
    /// `f(x, order)` returning the order-th derivative.
    Custom(CustomFn),
}

impl std::fmt::Debug for Profile {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}", self.describe())
    }
}

impl Profile {
    pub fn is_zero(&self) -> bool {
        match self {
            Profile::Zero => true,
            Profile::Polynomial(c) => c.iter().all(|&a| a == 0.0),
            Profile::Derivative { of, factor } => *factor == 0.0 || of.is_zero(),
            _ => false,
        }
    }

    /// order-th derivative at x (order <= 3).
    pub fn eval(&self, x: f64, order: usize, eps: f64, moll: &Mollifier) -> f64 {
        match self {
            Profile::Zero => 0.0,
            Profile::Delta { x0 } => moll.scaled_deriv(x - x0, eps, order).unwrap_or(0.0),
            Profile::Bump { x0, width } => {
                let z = (x - x0) / width;
                if z.abs() >= 1.0 {
                    return 0.0;
                }
                let q = 1.0 - z * z;
                match order {
                    0 => q.powi(4),
                    1 => -8.0 * z * q.powi(3) / width,
                    2 => (48.0 * z * z * q * q - 8.0 * q.powi(3)) / (width * width),
                    3 => (144.0 * z * q * q - 192.0 * z.powi(3) * q) / width.powi(3),
                    _ => f64::NAN,
                }
            }
            Profile::Polynomial(c) => {
                let mut d: Vec<f64> = c.clone();
                for _ in 0..order {
                    d = d.iter().enumerate().skip(1).map(|(i, &a)| a * i as f64).collect();
                }
                d.iter().rev().fold(0.0, |acc, &a| acc * x + a)
            }
            Profile::Table(t) => t.eval(x, order),
            Profile::Derivative { of, factor } => factor * of.eval(x, order + 1, eps, moll),
            Profile::Custom(f) => f(x, order),
        }
    }

    /// Interval outside which the profile vanishes, if bounded.
    pub fn support(&self, eps: f64) -> Option<(f64, f64)> {
        match self {
            Profile::Zero => Some((0.0, 0.0)),
            Profile::Delta { x0 } => Some((x0 - eps, x0 + eps)),
            Profile::Bump { x0, width } => Some((x0 - width, x0 + width)),
            Profile::Polynomial(_) => if self.is_zero() { Some((0.0, 0.0)) } else { None },
            Profile::Table(t) => Some((t.xs[0], *t.xs.last().unwrap())),
            Profile::Derivative { of, .. } => of.support(eps),
            Profile::Custom(_) => None,
        }
    }

    pub fn describe(&self) -> String {
        match self {
            Profile::Zero => "zero".into(),
            Profile::Delta { x0 } => format!("delta:{x0}"),
            Profile::Bump { x0, width } => format!("bump:{x0},{width}"),
            Profile::Polynomial(c) => {
                format!("polynomial:{}", c.iter().map(|a| a.to_string()).collect::<Vec<_>>().join(","))
            }
            Profile::Table(t) => format!("table({} rows)", t.xs.len()),
            Profile::Derivative { of, factor } => format!("{factor}*d/dx[{}]", of.describe()),
            Profile::Custom(_) => "custom".into(),
        }
    }
}
