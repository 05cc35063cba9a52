//! Solvers for the regularized problems and the containers they fill.

pub mod abel;
pub mod radial;
pub mod system;
pub mod transport;
pub mod wave_t;
pub mod wave_x;

use rayon::prelude::*;

use crate::mollifier::EpsilonLadder;
use crate::{Error, Result};

/// Uniform spatial grid with a time horizon and snapshot cadence.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Grid1D {
    pub x_min: f64,
    pub x_max: f64,
    pub nx: usize,
    pub t_end: f64,
    pub cfl: f64,
    pub snapshot_dt: f64,
}

impl Grid1D {
    pub fn new(x_min: f64, x_max: f64, nx: usize, t_end: f64) -> Self {
        Self { x_min, x_max, nx, t_end, cfl: 0.4, snapshot_dt: t_end / 30.0 }
    }

    pub fn with_snapshot_dt(mut self, dt: f64) -> Self {
        self.snapshot_dt = dt;
        self
    }

    pub fn with_cfl(mut self, cfl: f64) -> Self {
        self.cfl = cfl;
        self
    }

    pub fn dx(&self) -> f64 {
        (self.x_max - self.x_min) / self.nx as f64
    }

    pub fn x(&self, i: usize) -> f64 {
        self.x_min + self.dx() * i as f64
    }

    pub fn nodes(&self) -> Vec<f64> {
        (0..=self.nx).map(|i| self.x(i)).collect()
    }

    pub fn len(&self) -> usize {
        self.nx + 1
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn snapshot_count(&self) -> usize {
        (self.t_end / self.snapshot_dt).round() as usize
    }

    pub fn snapshot_times(&self) -> Vec<f64> {
        (0..=self.snapshot_count()).map(|k| k as f64 * self.snapshot_dt).collect()
    }

    /// Static checks independent of any coefficient.
    pub fn validate(&self) -> Result<()> {
        if !(self.x_max > self.x_min) || self.nx < 8 {
            return Err(Error::InvalidInput("grid needs x_max > x_min and nx >= 8".into()));
        }
        if !(self.t_end > 0.0) || !(self.snapshot_dt > 0.0) || self.snapshot_dt > self.t_end {
            return Err(Error::InvalidInput("grid needs 0 < snapshot_dt <= t_end".into()));
        }
        let k = self.t_end / self.snapshot_dt;
        if (k - k.round()).abs() > 1e-9 * k.max(1.0) {
            return Err(Error::InvalidInput("t_end must be a whole multiple of snapshot_dt".into()));
        }
        if !(self.cfl > 0.0 && self.cfl < 1.0) {
            return Err(Error::InvalidInput(format!("cfl must lie in (0,1), got {}", self.cfl)));
        }
        Ok(())
    }

    /// Resolution contract: dx <= h/16.
    pub fn check_resolution(&self, h: f64) -> Result<()> {
        let limit = h / 16.0;
        if self.dx() > limit * (1.0 + 1e-12) {
            return Err(Error::Resolution { dx: self.dx(), limit });
        }
        Ok(())
    }

    /// Same window with dx enlarged by `factor >= 1` (fewer cells).
    pub fn coarsened(&self, factor: f64) -> Self {
        let nx = ((self.nx as f64 / factor.max(1.0)).ceil() as usize).max(64);
        let nx = nx + nx % 2;
        Self { nx, ..*self }
    }
}

/// A field stored row-major as time x space.
#[derive(Debug, Clone, PartialEq)]
pub struct Field {
    pub name: String,
    pub data: Vec<f64>,
}

/// One member of the eps ladder.
#[derive(Debug, Clone, PartialEq)]
pub struct EpsRecord {
    pub eps: f64,
    /// Finest length scale of the member: min(data eps, coefficient h).
    pub scale: f64,
    /// Length over which features may drift between members: the coefficient
    /// scale h(eps) when there is one, otherwise `scale`.
    pub drift: f64,
    pub grid: Grid1D,
    pub times: Vec<f64>,
    pub fields: Vec<Field>,
}

impl EpsRecord {
    pub fn new(eps: f64, scale: f64, grid: Grid1D) -> Self {
        Self { eps, scale, drift: scale, grid, times: Vec::new(), fields: Vec::new() }
    }

    pub fn with_drift(mut self, drift: f64) -> Self {
        self.drift = drift;
        self
    }

    pub fn add_field(&mut self, name: &str) {
        self.fields.push(Field { name: name.to_string(), data: Vec::new() });
    }

    /// Appends one time row; `rows` must follow the field order.
    pub fn push_snapshot(&mut self, t: f64, rows: &[&[f64]]) {
        assert_eq!(rows.len(), self.fields.len());
        self.times.push(t);
        for (f, r) in self.fields.iter_mut().zip(rows) {
            assert_eq!(r.len(), self.grid.len());
            f.data.extend_from_slice(r);
        }
    }

    pub fn field(&self, name: &str) -> Option<&Field> {
        self.fields.iter().find(|f| f.name == name)
    }

    pub fn has_field(&self, name: &str) -> bool {
        self.field(name).is_some()
    }

    pub fn row(&self, name: &str, ti: usize) -> &[f64] {
        let f = self.field(name).unwrap_or_else(|| panic!("no field {name}"));
        let n = self.grid.len();
        &f.data[ti * n..(ti + 1) * n]
    }

    pub fn nearest_time_index(&self, t: f64) -> usize {
        let mut best = 0;
        for (i, &s) in self.times.iter().enumerate() {
            if (s - t).abs() < (self.times[best] - t).abs() {
                best = i;
            }
        }
        best
    }

    /// Cubic interpolation of a field row at x.
    pub fn sample(&self, name: &str, ti: usize, x: f64) -> f64 {
        interp_cubic(self.row(name, ti), self.grid.x_min, self.grid.dx(), x)
    }
}

/// Four-point Lagrange interpolation on a uniform grid; zero outside.
pub fn interp_cubic(data: &[f64], x0: f64, dx: f64, x: f64) -> f64 {
    let n = data.len();
    let s = (x - x0) / dx;
    if !(s >= 0.0) || s > (n - 1) as f64 {
        return 0.0;
    }
    let i = (s.floor() as usize).clamp(1, n.saturating_sub(3).max(1));
    if n < 4 {
        let j = (s.round() as usize).min(n - 1);
        return data[j];
    }
    let u = s - i as f64;
    let (f0, f1, f2, f3) = (data[i - 1], data[i], data[i + 1], data[i + 2]);
    let w0 = -u * (u - 1.0) * (u - 2.0) / 6.0;
    let w1 = (u + 1.0) * (u - 1.0) * (u - 2.0) / 2.0;
    let w2 = -(u + 1.0) * u * (u - 2.0) / 2.0;
    let w3 = (u + 1.0) * u * (u - 1.0) / 6.0;
    w0 * f0 + w1 * f1 + w2 * f2 + w3 * f3
}

/// Per-eps results of one scenario, ordered by decreasing eps.
#[derive(Debug, Clone, PartialEq)]
pub struct SolutionFamily {
    pub scenario_id: String,
    pub solver_id: String,
    pub records: Vec<EpsRecord>,
}

impl SolutionFamily {
    pub fn new(scenario_id: &str, solver_id: &str, mut records: Vec<EpsRecord>) -> Self {
        records.sort_by(|a, b| b.eps.partial_cmp(&a.eps).unwrap());
        Self { scenario_id: scenario_id.into(), solver_id: solver_id.into(), records }
    }

    pub fn eps_values(&self) -> Vec<f64> {
        self.records.iter().map(|r| r.eps).collect()
    }

    pub fn record(&self, eps: f64) -> Option<&EpsRecord> {
        self.records.iter().find(|r| (r.eps - eps).abs() <= 1e-15 * eps)
    }
}

/// Runs `solve` for every ladder member in parallel and merges by eps.
pub fn sweep<F>(scenario_id: &str, solver_id: &str, ladder: &EpsilonLadder, solve: F) -> Result<SolutionFamily>
where
    F: Fn(f64) -> Result<EpsRecord> + Sync,
{
    ladder.validate()?;
    let records: Vec<Result<EpsRecord>> = ladder.values().into_par_iter().map(&solve).collect();
    let records = records.into_iter().collect::<Result<Vec<_>>>()?;
    Ok(SolutionFamily::new(scenario_id, solver_id, records))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn cubic_interpolation_is_exact_for_cubics() {
        let f = |x: f64| 1.0 - 2.0 * x + 0.5 * x * x * x;
        let data: Vec<f64> = (0..=20).map(|i| f(0.1 * i as f64)).collect();
        for &x in &[0.0, 0.05, 0.93, 1.77, 1.99] {
            assert!((interp_cubic(&data, 0.0, 0.1, x) - f(x)).abs() < 1e-12);
        }
        assert_eq!(interp_cubic(&data, 0.0, 0.1, -0.1), 0.0);
    }

    #[test]
    fn grid_contracts() {
        let g = Grid1D::new(-1.0, 1.0, 400, 1.0).with_snapshot_dt(0.1);
        g.validate().unwrap();
        assert!(g.check_resolution(0.08).is_ok());
        assert!(matches!(g.check_resolution(0.07), Err(Error::Resolution { .. })));
        assert_eq!(g.snapshot_times().len(), 11);
        assert!(Grid1D::new(-1.0, 1.0, 400, 1.0).with_snapshot_dt(0.3).validate().is_err());
        assert_eq!(g.coarsened(2.0).nx, 200);
    }
}
