//! Diagonal hyperbolic systems `(d_t + a_k(x) d_x) u_k = sum_j A_kj(t, x) u_j`
//! by second-order upwind differences and Heun time stepping.

use std::sync::Arc;

use crate::mollifier::Mollifier;
use crate::profile::Profile;
use crate::solvers::{EpsRecord, Grid1D};
use crate::{Error, Result};

/// Largest stable Courant number of upwind2 + Heun.
pub const UPWIND_CFL_LIMIT: f64 = 0.5;

pub type SpeedFn = Arc<dyn Fn(f64) -> f64 + Send + Sync>;
/// Fills the row-major m x m coupling matrix at (t, x).
pub type CouplingFn = Arc<dyn Fn(f64, f64, &mut [f64]) + Send + Sync>;

#[derive(Clone)]
pub struct SystemSpec {
    pub speeds: Vec<SpeedFn>,
    pub coupling: Option<CouplingFn>,
    /// Coupling does not depend on t, so it is sampled once.
    pub coupling_static: bool,
    pub data: Vec<Profile>,
}

impl SystemSpec {
    pub fn m(&self) -> usize {
        self.speeds.len()
    }
}

pub(crate) struct Upwind {
    m: usize,
    n: usize,
    dx: f64,
    xs: Vec<f64>,
    speeds: Vec<Vec<f64>>,
    coupling: Option<CouplingFn>,
    coupling_static: bool,
    a: Vec<f64>,
    k1: Vec<Vec<f64>>,
    k2: Vec<Vec<f64>>,
    y1: Vec<Vec<f64>>,
}

impl Upwind {
    pub(crate) fn new(grid: &Grid1D, speeds: Vec<Vec<f64>>, coupling: Option<CouplingFn>, coupling_static: bool) -> Self {
        let m = speeds.len();
        let n = grid.len();
        let xs = grid.nodes();
        let mut a = Vec::new();
        if let (Some(c), true) = (&coupling, coupling_static) {
            a = vec![0.0; n * m * m];
            for i in 0..n {
                c(0.0, xs[i], &mut a[i * m * m..(i + 1) * m * m]);
            }
        }
        Self {
            m,
            n,
            dx: grid.dx(),
            xs,
            speeds,
            coupling,
            coupling_static,
            a,
            k1: vec![vec![0.0; n]; m],
            k2: vec![vec![0.0; n]; m],
            y1: vec![vec![0.0; n]; m],
        }
    }

    pub(crate) fn max_speed(&self) -> f64 {
        self.speeds.iter().flatten().fold(0.0f64, |a, s| a.max(s.abs()))
    }

    fn rhs(&mut self, y: &[Vec<f64>], t: f64, out_first: bool) {
        let (m, n, dx) = (self.m, self.n, self.dx);
        if let (Some(c), false) = (&self.coupling, self.coupling_static) {
            if self.a.len() != n * m * m {
                self.a = vec![0.0; n * m * m];
            }
            for i in 0..n {
                c(t, self.xs[i], &mut self.a[i * m * m..(i + 1) * m * m]);
            }
        }
        let out = if out_first { &mut self.k1 } else { &mut self.k2 };
        let inv = 1.0 / (2.0 * dx);
        for k in 0..m {
            let yk = &y[k];
            let sp = &self.speeds[k];
            let o = &mut out[k];
            for i in 0..n {
                let s = sp[i];
                let d = if s > 0.0 {
                    let y1 = if i >= 1 { yk[i - 1] } else { 0.0 };
                    let y2 = if i >= 2 { yk[i - 2] } else { 0.0 };
                    (3.0 * yk[i] - 4.0 * y1 + y2) * inv
                } else if s < 0.0 {
                    let y1 = if i + 1 < n { yk[i + 1] } else { 0.0 };
                    let y2 = if i + 2 < n { yk[i + 2] } else { 0.0 };
                    (-3.0 * yk[i] + 4.0 * y1 - y2) * inv
                } else {
                    0.0
                };
                o[i] = -s * d;
            }
        }
        if !self.a.is_empty() {
            for i in 0..n {
                let ai = &self.a[i * m * m..(i + 1) * m * m];
                for k in 0..m {
                    let mut acc = 0.0;
                    for j in 0..m {
                        acc += ai[k * m + j] * y[j][i];
                    }
                    out[k][i] += acc;
                }
            }
        }
    }

    /// One Heun step of size dt from time t.
    pub(crate) fn step(&mut self, y: &mut [Vec<f64>], t: f64, dt: f64) {
        self.rhs(y, t, true);
        let mut y1 = std::mem::take(&mut self.y1);
        for k in 0..self.m {
            for i in 0..self.n {
                y1[k][i] = y[k][i] + dt * self.k1[k][i];
            }
        }
        self.rhs(&y1, t + dt, false);
        for k in 0..self.m {
            for i in 0..self.n {
                y[k][i] = 0.5 * (y[k][i] + y1[k][i] + dt * self.k2[k][i]);
            }
        }
        self.y1 = y1;
    }
}

/// Time step aligned with the snapshot cadence: (dt, steps per snapshot).
pub(crate) fn aligned_step(grid: &Grid1D, max_speed: f64) -> Result<(f64, usize)> {
    if grid.cfl > UPWIND_CFL_LIMIT {
        return Err(Error::Cfl { cfl: grid.cfl, limit: UPWIND_CFL_LIMIT });
    }
    let dt_max = grid.cfl * grid.dx() / max_speed.max(1e-300);
    let sub = (grid.snapshot_dt / dt_max).ceil().max(1.0) as usize;
    Ok((grid.snapshot_dt / sub as f64, sub))
}

/// Solves the system on `grid`, storing fields `u0 .. u{m-1}`.
pub fn solve_system(spec: &SystemSpec, data_moll: &Mollifier, eps: f64, scale: f64, grid: &Grid1D) -> Result<EpsRecord> {
    grid.validate()?;
    let m = spec.m();
    if m == 0 || spec.data.len() != m {
        return Err(Error::InvalidInput("system needs one data profile per component".into()));
    }
    let xs = grid.nodes();
    let speeds: Vec<Vec<f64>> = spec.speeds.iter().map(|s| xs.iter().map(|&x| s(x)).collect()).collect();
    let mut up = Upwind::new(grid, speeds, spec.coupling.clone(), spec.coupling_static);
    let (dt, sub) = aligned_step(grid, up.max_speed())?;
    let mut y: Vec<Vec<f64>> = spec.data.iter().map(|p| xs.iter().map(|&x| p.eval(x, 0, eps, data_moll)).collect()).collect();
    let mut rec = EpsRecord::new(eps, scale, *grid);
    for k in 0..m {
        rec.add_field(&format!("u{k}"));
    }
    let push = |rec: &mut EpsRecord, t: f64, y: &[Vec<f64>]| {
        let rows: Vec<&[f64]> = y.iter().map(|v| v.as_slice()).collect();
        rec.push_snapshot(t, &rows);
    };
    push(&mut rec, 0.0, &y);
    let mut t = 0.0;
    for s in 0..grid.snapshot_count() {
        for _ in 0..sub {
            up.step(&mut y, t, dt);
            t += dt;
        }
        if y.iter().flatten().any(|v| !v.is_finite()) {
            return Err(Error::Numerical(format!("system solution blew up before t = {t}")));
        }
        push(&mut rec, (s + 1) as f64 * grid.snapshot_dt, &y);
    }
    Ok(rec)
}
