//! Executes a scenario: ladder sweep, then the requested analyses.
//!
//! Everything here is computed in memory; files are written afterwards by
//! [`crate::report::write_outputs`], single-threaded.

use std::sync::Arc;

use colwave_core::characteristics::{CharCurve, TimeIntegral};
use colwave_core::coefficients::{RegularizedCoeff, Variable};
use colwave_core::detector::{detect, fit_growth, predict_singsupp, DetectorConfig, RayScenario, RaySegment, SingSuppReport, Survey};
use colwave_core::energy::{energy_trace, gronwall_ratio, nonconservative_growth_factor, EnergyForm, EnergyTrace};
use colwave_core::mollifier::{EpsilonLadder, ScaleFn};
use colwave_core::oracle::{
    associate_check, pairing, tanh_minus_limit, tanh_plus_limit, AssociationVerdict, ConnectedSolution, DeltaSolution, PiecewiseTSolution,
    TestFunction,
};
use colwave_core::profile::Profile;
use colwave_core::quadrature::adaptive;
use colwave_core::solvers::radial::{solve_radial_even, solve_radial_odd};
use colwave_core::solvers::system::{solve_system, SpeedFn, SystemSpec};
use colwave_core::solvers::transport::solve_transport;
use colwave_core::solvers::wave_t::solve_wave_t;
use colwave_core::solvers::wave_x::{solve_wave_x, WaveForm, WaveXOptions};
use colwave_core::solvers::{sweep, EpsRecord, Grid1D, SolutionFamily};
use colwave_core::Error;

use crate::scenario::{Analysis, Problem, Scenario, FIELDS};

/// Failure classes, mapped to exit codes by [`RunError::exit_code`].
#[derive(Debug, Clone, PartialEq)]
pub enum RunError {
    Validation(String),
    Numerical(String),
    Io(String),
}

impl RunError {
    pub fn exit_code(&self) -> i32 {
        match self {
            RunError::Validation(_) => 2,
            RunError::Numerical(_) => 3,
            RunError::Io(_) => 1,
        }
    }
}

impl std::fmt::Display for RunError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            RunError::Validation(m) => write!(f, "validation error: {m}"),
            RunError::Numerical(m) => write!(f, "numerical failure: {m}"),
            RunError::Io(m) => write!(f, "i/o error: {m}"),
        }
    }
}

impl From<Error> for RunError {
    fn from(e: Error) -> Self {
        if e.is_numerical() {
            RunError::Numerical(e.to_string())
        } else if let Error::Io(m) = e {
            RunError::Io(m)
        } else {
            RunError::Validation(e.to_string())
        }
    }
}

fn invalid(m: impl Into<String>) -> RunError {
    RunError::Validation(m.into())
}

/// One compared quantity. `eps`/`t` are absent for ladder-level quantities.
#[derive(Debug, Clone, PartialEq)]
pub struct OracleRow {
    pub quantity: String,
    pub eps: Option<f64>,
    pub t: Option<f64>,
    pub measured: f64,
    pub reference: f64,
}

impl OracleRow {
    fn new(quantity: &str, eps: Option<f64>, t: Option<f64>, measured: f64, reference: f64) -> Self {
        Self { quantity: quantity.into(), eps, t, measured, reference }
    }

    pub fn rel_error(&self) -> f64 {
        if self.reference == 0.0 {
            self.measured.abs()
        } else {
            ((self.measured - self.reference) / self.reference).abs()
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EnergyRow {
    pub eps: f64,
    pub nx: usize,
    pub form: &'static str,
    pub drift: f64,
    /// `max E(t) / (E(0) bound(t))` for the t-dependent Gronwall bound.
    pub gronwall_ratio: Option<f64>,
    /// Naive growth factor of the non-conservative x-form (report only).
    pub growth_factor: Option<f64>,
}

#[derive(Debug, Clone)]
pub struct Association {
    pub psi: (f64, f64, f64, f64),
    pub reference: f64,
    pub verdict: AssociationVerdict,
}

#[derive(Debug, Clone)]
pub struct RunReport {
    pub scenario_id: String,
    pub problem: Problem,
    pub ladder: EpsilonLadder,
    pub family: Option<SolutionFamily>,
    pub detection: Option<SingSuppReport>,
    pub energy: Vec<EnergyRow>,
    pub energy_traces: Vec<(usize, EnergyTrace)>,
    pub associations: Vec<Association>,
    pub oracle: Vec<OracleRow>,
}

impl RunReport {
    pub fn oracle_rows(&self, quantity: &str) -> Vec<&OracleRow> {
        self.oracle.iter().filter(|r| r.quantity == quantity).collect()
    }
}

/// Applies `--ladder-override` and re-checks the resolution contract.
pub fn with_ladder(sc: &Scenario, ladder: Option<EpsilonLadder>) -> Result<Scenario, RunError> {
    let mut sc = sc.clone();
    if let Some(l) = ladder {
        l.validate()?;
        sc.ladder = l;
    }
    check_resolution(&sc)?;
    Ok(sc)
}

/// The finest member must satisfy dx <= scale/16.
pub fn check_resolution(sc: &Scenario) -> Result<(), RunError> {
    if sc.problem == Problem::Corner36 {
        return Ok(());
    }
    sc.grid.check_resolution(sc.member_scale(sc.ladder.smallest()))?;
    Ok(())
}

fn coeff(sc: &Scenario, eps: f64) -> Result<RegularizedCoeff, RunError> {
    Ok(RegularizedCoeff::new(sc.coefficient.clone(), sc.mollifier.clone(), sc.scale, eps)?)
}

fn solve_member(sc: &Scenario, eps: f64, grid: &Grid1D) -> colwave_core::Result<EpsRecord> {
    let m = &sc.mollifier;
    let rc = || RegularizedCoeff::new(sc.coefficient.clone(), m.clone(), sc.scale, eps);
    let scale = sc.member_scale(eps);
    match sc.problem {
        Problem::WaveX => solve_wave_x(&rc()?, &sc.u0, &sc.u1, m, eps, grid, WaveXOptions { form: sc.wave_form, scheme: sc.wave_scheme }),
        Problem::WaveT => solve_wave_t(&rc()?, &sc.u0, &sc.u1, m, eps, grid),
        Problem::RadialOdd => solve_radial_odd(&rc()?, sc.radial_dim, m, eps, grid),
        Problem::RadialEvenAbel => solve_radial_even(&rc()?, sc.radial_dim, m, eps, grid),
        Problem::Transport => {
            let rc = rc()?;
            let h = rc.h();
            let curve = match rc.variable() {
                Variable::Space => CharCurve::x_dependent(rc)?,
                Variable::Time => CharCurve::TDependent { integral: Arc::new(TimeIntegral::new(rc)?), sign: sc.transport_sign },
            };
            let mut rec = solve_transport(&curve, &sc.u0, m, eps, scale, grid)?;
            rec.drift = h.max(scale);
            Ok(rec)
        }
        Problem::TanhExample2 => solve_transport(&CharCurve::TanhMinus { eps }, &sc.u0, m, eps, eps, grid),
        Problem::TanhExample3 => solve_transport(&CharCurve::TanhPlus { eps }, &sc.u0, m, eps, eps, grid),
        Problem::System => {
            let rc = Arc::new(rc()?);
            let speeds: Vec<SpeedFn> = sc
                .system_speeds
                .iter()
                .map(|&k| {
                    let rc = rc.clone();
                    Arc::new(move |x: f64| k * rc.eval(x)) as SpeedFn
                })
                .collect();
            let spec = SystemSpec { speeds, coupling: None, coupling_static: true, data: sc.system_data.clone() };
            let mut rec = solve_system(&spec, m, eps, scale, grid)?;
            rec.drift = rc.h().max(scale);
            Ok(rec)
        }
        Problem::Corner36 => Err(Error::Unsupported("corner_3_6 has no field solution".into())),
    }
}

/// Solves every ladder member on its own grid.
pub fn solve_family(sc: &Scenario) -> Result<SolutionFamily, RunError> {
    Ok(sweep(&sc.id, sc.problem.name(), &sc.ladder, |eps| solve_member(sc, eps, &sc.member_grid(eps)))?)
}

fn single_jump(sc: &Scenario) -> Option<(f64, f64, f64)> {
    match (sc.coefficient.breakpoints(), sc.coefficient.values()) {
        ([at], [a, b]) => Some((*at, *a, *b)),
        _ => None,
    }
}

fn is_origin_point(p: &Profile) -> bool {
    match p {
        Profile::Zero => true,
        Profile::Delta { x0 } => *x0 == 0.0,
        Profile::Derivative { of, .. } => is_origin_point(of),
        _ => false,
    }
}

/// Predicted singular support for scenarios whose geometry is known.
pub fn geometry(sc: &Scenario) -> Option<RayScenario> {
    if sc.detect.geometry.as_deref() == Some("none") {
        return None;
    }
    let standard_scale = sc.scale == ScaleFn::Standard;
    let g = &sc.grid;
    match sc.problem {
        Problem::WaveX => {
            let (at, c0, c1) = single_jump(sc)?;
            match (&sc.u0, &sc.u1) {
                (Profile::Zero, Profile::Delta { x0 }) if at == 0.0 && *x0 < 0.0 => {
                    Some(RayScenario::XJumpDelta { c0, c1, x_delta: *x0, standard_scale, t_end: g.t_end })
                }
                _ => None,
            }
        }
        Problem::WaveT => {
            let (t_jump, c0, c1) = single_jump(sc)?;
            if !is_origin_point(&sc.u0) || !is_origin_point(&sc.u1) || (sc.u0.is_zero() && sc.u1.is_zero()) {
                return None;
            }
            let compatible = matches!(&sc.u1, Profile::Derivative { of, factor } if of.describe() == sc.u0.describe() && *factor == c0);
            Some(RayScenario::TJump { c0, c1, t_jump, standard_scale, jump_line: true, compatible, t_end: g.t_end, window: (g.x_min, g.x_max) })
        }
        Problem::RadialOdd | Problem::RadialEvenAbel => {
            let (t_jump, c0, c1) = match single_jump(sc) {
                Some(j) => j,
                None if sc.coefficient.values().len() == 1 => (g.t_end, sc.coefficient.values()[0], sc.coefficient.values()[0]),
                None => return None,
            };
            Some(RayScenario::Radial { dim: sc.radial_dim, c0, c1, t_jump, standard_scale, t_end: g.t_end })
        }
        _ => None,
    }
}

fn run_detect(sc: &Scenario, family: &SolutionFamily) -> Result<SingSuppReport, RunError> {
    let field = FIELDS.iter().find(|f| **f == sc.detect.field).ok_or_else(|| invalid(format!("detect.field '{}' is not a stored field", sc.detect.field)))?;
    if !family.records[0].has_field(field) {
        return Err(invalid(format!("detect.field '{field}' is not produced by {}", sc.problem.name())));
    }
    let cfg = DetectorConfig { theta: sc.detect.theta, alpha_max: sc.detect.alpha_max, field, ..DetectorConfig::default() };
    let g = &sc.grid;
    let times = sc.detect.times.clone().unwrap_or_else(|| family.records[0].times.iter().copied().filter(|&t| t > 0.0).collect());
    let xs = sc.detect.xs.clone().unwrap_or_else(|| {
        let (a, b) = (g.x_min + 0.1 * (g.x_max - g.x_min), g.x_max - 0.1 * (g.x_max - g.x_min));
        (0..=160).map(|k| a + (b - a) * k as f64 / 160.0).collect()
    });
    let predicted = match geometry(sc) {
        Some(r) => predict_singsupp(&r)?,
        None => vec![],
    };
    let survey = Survey { times, xs, ray_samples: sc.detect.ray_samples, rho: sc.detect.rho };
    Ok(detect(family, &survey, predicted, &cfg)?)
}

fn run_energy(sc: &Scenario, family: &SolutionFamily) -> Result<(Vec<EnergyRow>, Vec<(usize, EnergyTrace)>), RunError> {
    let mut rows = vec![];
    let mut traces = vec![];
    let mut push = |rec: &EpsRecord, rows: &mut Vec<EnergyRow>| -> Result<(), RunError> {
        let rc = coeff(sc, rec.eps)?;
        let (form, ratio, growth) = match (sc.problem, sc.wave_form) {
            (Problem::WaveX, WaveForm::Conservative) => (EnergyForm::ConservativeX, None, None),
            (Problem::WaveX, WaveForm::NonConservative) => (EnergyForm::NonConservativeX, None, Some(nonconservative_growth_factor(&rc, sc.grid.t_end))),
            _ => (EnergyForm::NonConservativeT, Some(()), None),
        };
        let tr = energy_trace(rec, form)?;
        let ratio = match ratio {
            Some(()) => Some(gronwall_ratio(&tr, &rc)?),
            None => None,
        };
        rows.push(EnergyRow { eps: rec.eps, nx: rec.grid.nx, form: form.name(), drift: tr.relative_drift(), gronwall_ratio: ratio, growth_factor: growth });
        traces.push((rec.grid.nx, tr));
        Ok(())
    };
    for rec in &family.records {
        push(rec, &mut rows)?;
    }
    // grid-halving study on the coarsest member
    let base = &family.records[0];
    let refined: Vec<colwave_core::Result<EpsRecord>> = (1..=sc.energy_refinements)
        .map(|k| {
            let g = Grid1D { nx: base.grid.nx << k, ..base.grid };
            solve_member(sc, base.eps, &g)
        })
        .collect();
    for rec in refined {
        push(&rec?, &mut rows)?;
    }
    Ok((rows, traces))
}

type RefFn = Box<dyn Fn(&TestFunction) -> f64 + Sync>;

/// Distributional limit paired with a test function, per problem.
fn association_reference(sc: &Scenario) -> Result<RefFn, RunError> {
    let m = sc.mollifier.clone();
    let u0 = sc.u0.clone();
    let u0f = move |x: f64| u0.eval(x, 0, 1.0, &m);
    match sc.problem {
        Problem::TanhExample2 => Ok(Box::new(move |psi| pairing(|t, x| tanh_minus_limit(&u0f, t, x), |_| vec![0.0], &[], psi))),
        Problem::TanhExample3 => Ok(Box::new(move |psi| pairing(|t, x| tanh_plus_limit(&u0f, t, x), |t| vec![-t, t], &[], psi))),
        Problem::WaveX => {
            let (at, cm, cp) = single_jump(sc).filter(|j| j.0 == 0.0).ok_or_else(|| invalid("associate on wave_x needs a single jump at x = 0"))?;
            let _ = at;
            if sc.wave_form != WaveForm::NonConservative {
                return Err(invalid("associate on wave_x compares with the non-conservative transmission problem"));
            }
            match (&sc.u0, &sc.u1) {
                (Profile::Zero, Profile::Delta { x0 }) if *x0 == -1.0 => {
                    let ds = DeltaSolution::new(cm, cp)?;
                    Ok(Box::new(move |psi| ds.pairing(psi)))
                }
                (Profile::Zero, Profile::Delta { .. }) => Err(invalid("the delta oracle is stated for delta data at x = -1")),
                _ if !has_delta(&sc.u0) && !has_delta(&sc.u1) => {
                    let cs = ConnectedSolution::from_profiles(cm, cp, sc.u0.clone(), sc.u1.clone(), 1.0, sc.mollifier.clone())?;
                    Ok(Box::new(move |psi| pairing(|t, x| cs.eval(t, x).2, |_| vec![0.0], &[], psi)))
                }
                _ => Err(invalid("associate on wave_x needs smooth data or u1 = delta:-1")),
            }
        }
        Problem::WaveT => {
            let (t_jump, c0, c1) = single_jump(sc).ok_or_else(|| invalid("associate on wave_t needs a single jump"))?;
            if t_jump != 1.0 || has_delta(&sc.u0) || has_delta(&sc.u1) {
                return Err(invalid("associate on wave_t needs the jump at t = 1 and smooth data"));
            }
            let ps = PiecewiseTSolution::from_profiles(c0, c1, sc.u0.clone(), sc.u1.clone(), 1.0, sc.mollifier.clone())?;
            Ok(Box::new(move |psi| pairing(|t, x| ps.eval(t, x).0, |_| vec![], &[1.0], psi)))
        }
        p => Err(invalid(format!("no distributional reference for {}", p.name()))),
    }
}

fn has_delta(p: &Profile) -> bool {
    match p {
        Profile::Delta { .. } => true,
        Profile::Derivative { of, .. } => has_delta(of),
        _ => false,
    }
}

fn run_associate(sc: &Scenario, family: &SolutionFamily, reference: &RefFn) -> Result<Vec<Association>, RunError> {
    let mut out = vec![];
    for &psi in &sc.psis {
        let tf = TestFunction::new(psi.0, psi.1, psi.2, psi.3)?;
        let r = reference(&tf);
        let verdict = associate_check(family, &sc.assoc_field, r, &tf, sc.assoc_tol)?;
        out.push(Association { psi, reference: r, verdict });
    }
    Ok(out)
}

fn slope(pts: &[(f64, f64)]) -> f64 {
    let n = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum::<f64>() / pts.iter().map(|p| (p.0 - mx).powi(2)).sum::<f64>()
}

/// Largest distance from a node with |u| > 1e-8 to the predicted rays.
fn support_distance(rec: &EpsRecord, rays: &[RaySegment]) -> f64 {
    let mut worst: f64 = 0.0;
    for (ti, &t) in rec.times.iter().enumerate() {
        for (i, &u) in rec.row("u", ti).iter().enumerate() {
            if u.abs() > 1e-8 {
                let x = rec.grid.x(i);
                worst = worst.max(rays.iter().map(|r| r.distance(t, x)).fold(f64::INFINITY, f64::min));
            }
        }
    }
    worst
}

fn run_oracle(sc: &Scenario, family: &SolutionFamily) -> Result<Vec<OracleRow>, RunError> {
    let mut rows = vec![];
    let finest = family.records.last().unwrap();
    let m = &sc.mollifier;
    match sc.problem {
        Problem::WaveX => {
            let (_, cm, cp) = single_jump(sc).ok_or_else(|| invalid("oracle_compare on wave_x needs a single jump"))?;
            match (&sc.u0, &sc.u1) {
                (Profile::Zero, Profile::Delta { x0 }) if *x0 == -1.0 => {
                    let ds = DeltaSolution::new(cm, cp)?;
                    let t = (1.0 / cm + 1.0).min(sc.grid.t_end);
                    let ti = finest.nearest_time_index(t);
                    let t = finest.times[ti];
                    let (g1, g3, g4) = (-1.0 - cm * t, 1.0 - cm * t, -cp / cm + cp * t);
                    let (xa, xb) = (finest.grid.x_min, finest.grid.x_max);
                    if !(xa < g1 && g4 < xb) {
                        return Err(invalid("window must contain the outer rays at the comparison time"));
                    }
                    let s = |x: f64| finest.sample("u", ti, x);
                    let (outside, left, plateau, right) = (s(0.5 * (xa + g1)), s(0.5 * (g1 + g3)), s(0.5 * (g3 + g4)), s(0.5 * (g4 + xb)));
                    let incident = left - outside;
                    let e = Some(finest.eps);
                    rows.push(OracleRow::new("plateau", e, Some(t), plateau, ds.plateau()));
                    rows.push(OracleRow::new("incident_jump", e, Some(t), incident, 0.5 / cm));
                    rows.push(OracleRow::new("reflected_ratio", e, Some(t), (plateau - left) / incident, (cp - cm) / (cp + cm)));
                    rows.push(OracleRow::new("transmitted_ratio", e, Some(t), (plateau - right) / incident, 2.0 * cp / (cp + cm)));
                }
                _ if !has_delta(&sc.u0) && !has_delta(&sc.u1) => {
                    let cs = ConnectedSolution::from_profiles(cm, cp, sc.u0.clone(), sc.u1.clone(), 1.0, m.clone())?;
                    let t_res = (0..=8).map(|k| sc.grid.t_end * k as f64 / 8.0).map(|t| cs.interface_residuals(t)).fold(0.0f64, |a, r| a.max(r.0.abs()).max(r.1.abs()));
                    rows.push(OracleRow::new("interface_residual", None, None, t_res, 0.0));
                    for rec in &family.records {
                        let ti = rec.times.len() - 1;
                        let stride = (rec.grid.nx / 400).max(1);
                        let err = (0..rec.grid.len()).step_by(stride).map(|i| (rec.row("u", ti)[i] - cs.eval(rec.times[ti], rec.grid.x(i)).2).abs()).fold(0.0, f64::max);
                        rows.push(OracleRow::new("linf_error", Some(rec.eps), Some(rec.times[ti]), err, 0.0));
                    }
                }
                _ => return Err(invalid("oracle_compare on wave_x needs smooth data or u1 = delta:-1")),
            }
        }
        Problem::WaveT => {
            let (t_jump, c0, c1) = single_jump(sc).ok_or_else(|| invalid("oracle_compare on wave_t needs a single jump"))?;
            if t_jump != 1.0 {
                return Err(invalid("the piecewise t-solution is stated for a jump at t = 1"));
            }
            let ps = PiecewiseTSolution::from_profiles(c0, c1, sc.u0.clone(), sc.u1.clone(), 1.0, m.clone())?;
            let (a, b) = ps.amplitudes();
            rows.push(OracleRow::new("transmitted_amplitude", None, None, a, 0.5 * (1.0 + c1 / c0)));
            rows.push(OracleRow::new("refracted_amplitude", None, None, b, 0.5 * (1.0 - c1 / c0)));
            for rec in &family.records {
                let ps = PiecewiseTSolution::from_profiles(c0, c1, sc.u0.clone(), sc.u1.clone(), rec.eps, m.clone())?;
                let ti = rec.times.len() - 1;
                let stride = (rec.grid.nx / 400).max(1);
                let err = (0..rec.grid.len()).step_by(stride).map(|i| (rec.row("u", ti)[i] - ps.eval(rec.times[ti], rec.grid.x(i)).0).abs()).fold(0.0, f64::max);
                rows.push(OracleRow::new("linf_error", Some(rec.eps), Some(rec.times[ti]), err, 0.0));
            }
        }
        Problem::RadialOdd => {
            let rays = match geometry(sc) {
                Some(g) => predict_singsupp(&g)?,
                None => vec![],
            };
            for rec in &family.records {
                rows.push(OracleRow::new("support_distance", Some(rec.eps), None, support_distance(rec, &rays), 0.0));
            }
            if sc.coefficient.values().len() == 1 && sc.radial_dim == 3 {
                let c = sc.coefficient.values()[0];
                for rec in &family.records {
                    let eps = rec.eps;
                    let mut err: f64 = 0.0;
                    for (ti, &t) in rec.times.iter().enumerate().skip(1) {
                        for (i, &u) in rec.row("u", ti).iter().enumerate() {
                            let r = rec.grid.x(i);
                            if r.abs() < 0.1 {
                                continue;
                            }
                            // integrate over the data support only, so the kinks at +-eps are end points
                            let (a, b) = ((r - c * t).max(-eps), (r + c * t).min(eps));
                            let exact = if b > a { adaptive(|s| s * m.scaled(s, eps), a, b, 1e-14) / (2.0 * c * r) } else { 0.0 };
                            err = err.max((u - exact).abs());
                        }
                    }
                    rows.push(OracleRow::new("spherical_linf", Some(eps), None, err, 0.0));
                }
            }
        }
        Problem::RadialEvenAbel => {
            let ti = finest.times.len() - 1;
            let row = finest.row("u", ti);
            let peak = row.iter().fold(0.0f64, |a, v| a.max(v.abs()));
            let centre = finest.sample("u", ti, 0.0).abs();
            rows.push(OracleRow::new("interior_to_peak", Some(finest.eps), Some(finest.times[ti]), if peak > 0.0 { centre / peak } else { 0.0 }, 0.0));
        }
        Problem::TanhExample2 => {
            let t = sc.growth_time;
            let pts: Vec<(f64, f64)> = family
                .records
                .iter()
                .map(|r| {
                    let ti = r.nearest_time_index(t);
                    let i = ((0.0 - r.grid.x_min) / r.grid.dx()).round() as usize;
                    (1.0 / r.eps, r.row("ux", ti)[i].abs().ln())
                })
                .collect();
            let ti = finest.nearest_time_index(t);
            if (finest.times[ti] - t).abs() > 1e-9 || (finest.grid.x_min + finest.grid.x_max).abs() > 1e-12 || finest.grid.nx % 2 != 0 {
                return Err(invalid("growth.time must be a snapshot time and the grid symmetric with even nx"));
            }
            rows.push(OracleRow::new("growth_rate", None, Some(t), slope(&pts), t));
        }
        Problem::TanhExample3 => {
            for a in 0..3usize {
                let mut pts = vec![];
                for r in &family.records {
                    let dx = r.grid.dx();
                    let mut sup: f64 = 0.0;
                    for ti in 0..r.times.len() {
                        let row = r.row(if a == 0 { "u" } else { "ux" }, ti);
                        for i in 1..row.len() - 1 {
                            let v = if a == 2 { (row[i + 1] - row[i - 1]) / (2.0 * dx) } else { row[i] };
                            sup = sup.max(v.abs());
                        }
                    }
                    pts.push((r.eps, sup));
                }
                let f = fit_growth(&pts)?;
                rows.push(OracleRow::new(&format!("moderate_exponent_{a}"), None, None, f.slope, a as f64));
            }
        }
        p => return Err(invalid(format!("oracle_compare is not available for {}", p.name()))),
    }
    Ok(rows)
}

/// Derivatives of the characteristic through the corner, against their closed forms.
fn run_corner(sc: &Scenario) -> Result<Vec<OracleRow>, RunError> {
    let (at, cm, cp) = single_jump(sc).ok_or_else(|| invalid("corner_3_6 needs a single jump"))?;
    let a = sc.mollifier.phi(0.0);
    let mut rows = vec![];
    for eps in sc.ladder.values() {
        let rc = coeff(sc, eps)?;
        let h = rc.h();
        let mid = rc.eval(at);
        let d = (cp - cm) * a / h;
        let expected = [cm / mid, -cm * d / (mid * mid), 2.0 * cm * d * d / (mid * mid * mid)];
        let curve = CharCurve::x_dependent(rc)?;
        for &t in &sc.corner_times {
            if cm * t <= h {
                return Err(invalid(format!("corner.times: t = {t} leaves the foot inside the smoothing layer for eps = {eps}")));
            }
            let p = curve.gamma_partials(t, at)?;
            for k in 0..3 {
                rows.push(OracleRow::new(&format!("d{}_gamma", k + 1), Some(eps), Some(t), p.dx[k], expected[k]));
            }
        }
    }
    Ok(rows)
}

/// Runs the scenario in memory.
pub fn run(sc: &Scenario) -> Result<RunReport, RunError> {
    check_resolution(sc)?;
    let mut report = RunReport {
        scenario_id: sc.id.clone(),
        problem: sc.problem,
        ladder: sc.ladder,
        family: None,
        detection: None,
        energy: vec![],
        energy_traces: vec![],
        associations: vec![],
        oracle: vec![],
    };
    if sc.problem == Problem::Corner36 {
        report.oracle = run_corner(sc)?;
        return Ok(report);
    }
    // references are built before solving so bad requests fail fast
    let reference = if sc.analyses.contains(&Analysis::Associate) { Some(association_reference(sc)?) } else { None };
    let family = solve_family(sc)?;
    for a in &sc.analyses {
        match a {
            Analysis::Detect => report.detection = Some(run_detect(sc, &family)?),
            Analysis::Energy => (report.energy, report.energy_traces) = run_energy(sc, &family)?,
            Analysis::Associate => report.associations = run_associate(sc, &family, reference.as_ref().unwrap())?,
            Analysis::OracleCompare => report.oracle = run_oracle(sc, &family)?,
        }
    }
    report.family = Some(family);
    Ok(report)
}
