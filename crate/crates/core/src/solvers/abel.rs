//! Abel-type pair linking even-dimensional radial waves to a 1D problem.
//!
//! Forward: `v(r) = int_0^1 w(r rho) / sqrt(1 - rho^2) d rho`.
//! Inverse: `w(r) = (1/pi) d/dr [2 r int_0^1 rho v(r rho) / sqrt(1 - rho^2) d rho]`.
//! Both integrals use `rho = sin(theta)`, which removes the endpoint singularity.

use std::f64::consts::{FRAC_PI_2, PI};

use crate::quadrature::adaptive;

/// Absolute tolerance of the inner theta integrals.
pub const ABEL_TOL: f64 = 1e-13;

/// Theta integral of `f` over [0, pi/2], split where `r sin(theta)` crosses
/// one of the radii in `breaks` (points where the radial profile is not smooth).
fn split_theta<F: Fn(f64) -> f64>(f: F, r: f64, breaks: &[f64]) -> f64 {
    let mut cuts = vec![0.0];
    for &b in breaks {
        let s = b.abs() / r.abs();
        if s > 0.0 && s < 1.0 {
            cuts.push(s.asin());
        }
    }
    cuts.push(FRAC_PI_2);
    cuts.sort_by(|a, b| a.partial_cmp(b).unwrap());
    cuts.windows(2).map(|w| adaptive(&f, w[0], w[1], ABEL_TOL)).sum()
}

/// Forward transform at r; `breaks` lists radii where `w` is not smooth.
pub fn abel_forward<F: Fn(f64) -> f64>(w: F, r: f64, breaks: &[f64]) -> f64 {
    if r == 0.0 {
        return FRAC_PI_2 * w(0.0);
    }
    split_theta(|th: f64| w(r * th.sin()), r, breaks)
}

/// `G(r) = 2 r int_0^{pi/2} sin(theta) v(r sin theta) d theta`, odd in r.
fn lifted<F: Fn(f64) -> f64>(v: &F, r: f64, breaks: &[f64]) -> f64 {
    if r == 0.0 {
        return 0.0;
    }
    2.0 * r * split_theta(|th: f64| th.sin() * v(r * th.sin()), r, breaks)
}

/// Inverse transform at r with a fourth-order centred difference of step `step`.
pub fn abel_invert<F: Fn(f64) -> f64>(v: F, r: f64, step: f64, breaks: &[f64]) -> f64 {
    let g = |s: f64| lifted(&v, s, breaks);
    let d = (-g(r + 2.0 * step) + 8.0 * g(r + step) - 8.0 * g(r - step) + g(r - 2.0 * step)) / (12.0 * step);
    d / PI
}

/// Forward transform at node `j` of data sampled on `r_i = i dr, i >= 0`,
/// integrating the piecewise-linear interpolant exactly against the kernel.
pub fn abel_forward_linear(data: &[f64], dr: f64, j: usize) -> f64 {
    if j == 0 {
        return FRAC_PI_2 * data[0];
    }
    let r = j as f64 * dr;
    let (mut acc, mut a0, mut b0) = (0.0, 0.0, -r);
    for i in 0..j {
        let s1 = (i + 1) as f64 * dr;
        let a1 = if i + 1 == j { FRAC_PI_2 } else { (s1 / r).asin() };
        let b1 = if i + 1 == j { 0.0 } else { -((r - s1) * (r + s1)).sqrt() };
        let slope = (data[i + 1] - data[i]) / dr;
        acc += (data[i] - slope * i as f64 * dr) * (a1 - a0) + slope * (b1 - b0);
        a0 = a1;
        b0 = b1;
    }
    acc
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mollifier::Mollifier;

    #[test]
    fn forward_closed_forms() {
        assert!((abel_forward(|_| 1.0, 0.7, &[]) - FRAC_PI_2).abs() < 1e-13);
        for &r in &[0.3, 1.0, 2.5] {
            assert!((abel_forward(|s| s * s, r, &[]) - r * r * PI / 4.0).abs() < 1e-12);
        }
    }

    #[test]
    fn invert_of_zero_is_zero() {
        assert_eq!(abel_invert(|_| 0.0, 0.4, 1e-3, &[]), 0.0);
    }

    #[test]
    fn round_trip_on_mollifier() {
        let m = Mollifier::default();
        let eps = 0.3;
        let w = |s: f64| m.scaled(s, eps);
        let v = |s: f64| abel_forward(w, s, &[eps]);
        let peak = w(0.0);
        for &r in &[0.02, 0.1, 0.17, 0.25, 0.29, 0.35] {
            let back = abel_invert(v, r, eps / 1000.0, &[eps]);
            assert!((back - w(r)).abs() < 1e-5 * peak, "r = {r}: {back} vs {}", w(r));
        }
    }

    #[test]
    fn linear_forward_matches_adaptive() {
        let dr = 1e-3;
        let data: Vec<f64> = (0..=1500).map(|i| (-(i as f64 * dr).powi(2)).exp()).collect();
        for &j in &[0usize, 1, 7, 400, 1500] {
            let exact = abel_forward(|s: f64| (-s * s).exp(), j as f64 * dr, &[]);
            assert!((abel_forward_linear(&data, dr, j) - exact).abs() < 1e-6);
        }
    }

    #[test]
    fn inverse_of_compact_data_has_a_tail() {
        // outside the support the inverse decays like -(2/(pi r^2)) int s v(s) ds
        let m = Mollifier::default();
        let eps = 0.2;
        let v = |s: f64| m.scaled(s, eps);
        let moment = adaptive(|s: f64| s * v(s), 0.0, eps, 1e-14);
        let r = 3.0;
        let w = abel_invert(v, r, 1e-3, &[eps]);
        let lead = -2.0 * moment / (PI * r * r);
        assert!(w < 0.0 && ((w - lead) / lead).abs() < 0.01, "{w} vs {lead}");
    }

    #[test]
    fn round_trip_on_gaussian() {
        let w = |s: f64| (-s * s).exp();
        let v = |s: f64| abel_forward(w, s, &[]);
        for &r in &[0.0, 0.5, 1.3] {
            let back = abel_invert(v, r, 1e-3, &[]);
            assert!((back - w(r)).abs() < 1e-6 * w(r).max(1e-3));
        }
    }
}
