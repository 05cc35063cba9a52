//! Scalar transport `u_t + c u_x = 0` evaluated exactly along characteristics.

use crate::characteristics::CharCurve;
use crate::mollifier::Mollifier;
use crate::profile::Profile;
use crate::solvers::{EpsRecord, Grid1D};
use crate::{Error, Result};

/// `u(t, x) = u0(gamma(t, x, 0))` on every node at every snapshot time.
///
/// Stores `u` and `ux = u0'(foot) * d gamma / dx`. `scale` is the finest
/// length scale of the member (used by the detector).
pub fn solve_transport(
    curve: &CharCurve,
    u0: &Profile,
    data_moll: &Mollifier,
    eps: f64,
    scale: f64,
    grid: &Grid1D,
) -> Result<EpsRecord> {
    grid.validate()?;
    let mut rec = EpsRecord::new(eps, scale, *grid);
    rec.add_field("u");
    rec.add_field("ux");
    let xs = grid.nodes();
    let mut u = vec![0.0; xs.len()];
    let mut ux = vec![0.0; xs.len()];
    for t in grid.snapshot_times() {
        for (i, &x) in xs.iter().enumerate() {
            let (foot, dfoot) = match curve {
                CharCurve::XDependent(ca) => {
                    let foot = curve.gamma(t, x, 0.0);
                    let c = ca.coeff();
                    (foot, c.eval(foot) / c.eval(x))
                }
                _ => (curve.gamma(t, x, 0.0), curve.gamma_dx(t, x, 0.0)),
            };
            u[i] = u0.eval(foot, 0, eps, data_moll);
            let d0 = u0.eval(foot, 1, eps, data_moll);
            ux[i] = if d0 == 0.0 { 0.0 } else { d0 * dfoot };
            if !u[i].is_finite() || !ux[i].is_finite() {
                return Err(Error::Numerical(format!("transport overflow at t = {t}, x = {x}, eps = {eps}")));
            }
        }
        rec.push_snapshot(t, &[&u, &ux]);
    }
    Ok(rec)
}
