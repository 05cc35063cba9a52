//! Scenario files: flat `key = value` lines with dotted keys.
//!
//! Blank lines and lines starting with `#` are ignored. Unknown and repeated
//! keys are errors, so typos surface as diagnostics instead of defaults.

use std::collections::BTreeMap;
use std::fmt;
use std::sync::Arc;

use colwave_core::coefficients::{PiecewiseConstantCoeff, Variable};
use colwave_core::mollifier::{EpsilonLadder, Mollifier, ScaleFn};
use colwave_core::oracle::TestFunction;
use colwave_core::profile::{Profile, Table};
use colwave_core::solvers::wave_x::{WaveForm, WaveScheme};
use colwave_core::solvers::Grid1D;

/// A validation failure pointing at a line and/or field of the scenario.
#[derive(Debug, Clone, PartialEq)]
pub struct Diagnostic {
    pub line: Option<usize>,
    pub field: String,
    pub message: String,
}

impl fmt::Display for Diagnostic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.line {
            Some(l) => write!(f, "line {l}, field '{}': {}", self.field, self.message),
            None => write!(f, "field '{}': {}", self.field, self.message),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Problem {
    Transport,
    WaveX,
    WaveT,
    System,
    RadialOdd,
    RadialEvenAbel,
    TanhExample2,
    TanhExample3,
    Corner36,
}

impl Problem {
    pub const ALL: [(&'static str, Problem); 9] = [
        ("transport", Problem::Transport),
        ("wave_x", Problem::WaveX),
        ("wave_t", Problem::WaveT),
        ("system", Problem::System),
        ("radial_odd", Problem::RadialOdd),
        ("radial_even_abel", Problem::RadialEvenAbel),
        ("tanh_example_2", Problem::TanhExample2),
        ("tanh_example_3", Problem::TanhExample3),
        ("corner_3_6", Problem::Corner36),
    ];

    pub fn name(&self) -> &'static str {
        Self::ALL.iter().find(|(_, p)| p == self).unwrap().0
    }

    fn variable(&self) -> Option<Variable> {
        match self {
            Problem::WaveX | Problem::System | Problem::Corner36 => Some(Variable::Space),
            Problem::WaveT | Problem::RadialOdd | Problem::RadialEvenAbel => Some(Variable::Time),
            Problem::Transport => None,
            Problem::TanhExample2 | Problem::TanhExample3 => None,
        }
    }

    /// Regularization is on the tanh speed itself, with scale eps.
    pub fn is_tanh(&self) -> bool {
        matches!(self, Problem::TanhExample2 | Problem::TanhExample3)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Analysis {
    Detect,
    Energy,
    Associate,
    OracleCompare,
}

impl Analysis {
    fn parse(s: &str) -> Option<Self> {
        match s {
            "detect" => Some(Analysis::Detect),
            "energy" => Some(Analysis::Energy),
            "associate" => Some(Analysis::Associate),
            "oracle_compare" => Some(Analysis::OracleCompare),
            _ => None,
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            Analysis::Detect => "detect",
            Analysis::Energy => "energy",
            Analysis::Associate => "associate",
            Analysis::OracleCompare => "oracle_compare",
        }
    }
}

/// Detector settings; ranges are `start:stop:step`.
#[derive(Debug, Clone, PartialEq)]
pub struct DetectSpec {
    pub geometry: Option<String>,
    pub alpha_max: usize,
    pub theta: f64,
    pub times: Option<Vec<f64>>,
    pub xs: Option<Vec<f64>>,
    pub ray_samples: usize,
    pub rho: Option<f64>,
    pub field: String,
}

#[derive(Debug, Clone)]
pub struct Scenario {
    pub id: String,
    pub description: String,
    pub problem: Problem,
    pub coefficient: PiecewiseConstantCoeff,
    pub mollifier: Mollifier,
    pub scale: ScaleFn,
    pub u0: Profile,
    pub u1: Profile,
    pub ladder: EpsilonLadder,
    /// Grid of the finest ladder member; coarser members get coarsened copies.
    pub grid: Grid1D,
    pub analyses: Vec<Analysis>,
    pub wave_form: WaveForm,
    pub wave_scheme: WaveScheme,
    pub radial_dim: usize,
    /// Speed multipliers of the diagonal system components.
    pub system_speeds: Vec<f64>,
    pub system_data: Vec<Profile>,
    pub transport_sign: f64,
    pub detect: DetectSpec,
    pub psis: Vec<(f64, f64, f64, f64)>,
    pub assoc_tol: f64,
    pub assoc_field: String,
    pub energy_refinements: usize,
    pub corner_times: Vec<f64>,
    pub growth_time: f64,
    pub dump: bool,
}

/// Field names a solver can store; the detector reads one of them.
pub const FIELDS: [&str; 8] = ["u", "v", "w", "ux", "u0", "u1", "u2", "u3"];

const KEYS: &[&str] = &[
    "id",
    "description",
    "problem",
    "coefficient.variable",
    "coefficient.jump_at",
    "coefficient.values",
    "mollifier",
    "scale",
    "data.u0",
    "data.u1",
    "ladder.eps0",
    "ladder.ratio",
    "ladder.count",
    "grid.x_min",
    "grid.x_max",
    "grid.nx",
    "grid.t_end",
    "grid.snapshot_dt",
    "grid.cfl",
    "analyses",
    "wave.form",
    "wave.scheme",
    "radial.dim",
    "system.speeds",
    "system.data",
    "transport.sign",
    "detect.geometry",
    "detect.alpha_max",
    "detect.theta",
    "detect.times",
    "detect.xs",
    "detect.ray_samples",
    "detect.rho",
    "detect.field",
    "associate.psi",
    "associate.tol",
    "associate.field",
    "energy.refinements",
    "corner.times",
    "growth.time",
    "output.dump",
];

struct Raw {
    map: BTreeMap<String, (usize, String)>,
}

impl Raw {
    fn diag(&self, key: &str, message: impl Into<String>) -> Diagnostic {
        Diagnostic { line: self.map.get(key).map(|v| v.0), field: key.to_string(), message: message.into() }
    }

    fn get(&self, key: &str) -> Option<&str> {
        self.map.get(key).map(|v| v.1.as_str())
    }

    fn req(&self, key: &str) -> Result<&str, Diagnostic> {
        self.get(key).ok_or_else(|| self.diag(key, "missing required field"))
    }

    fn f64_or(&self, key: &str, default: Option<f64>) -> Result<f64, Diagnostic> {
        match (self.get(key), default) {
            (Some(s), _) => s.parse::<f64>().ok().filter(|x| x.is_finite()).ok_or_else(|| self.diag(key, format!("expected a number, got '{s}'"))),
            (None, Some(d)) => Ok(d),
            (None, None) => Err(self.diag(key, "missing required field")),
        }
    }

    fn usize_or(&self, key: &str, default: Option<usize>) -> Result<usize, Diagnostic> {
        match (self.get(key), default) {
            (Some(s), _) => s.parse::<usize>().map_err(|_| self.diag(key, format!("expected a non-negative integer, got '{s}'"))),
            (None, Some(d)) => Ok(d),
            (None, None) => Err(self.diag(key, "missing required field")),
        }
    }

    fn list(&self, key: &str) -> Result<Vec<f64>, Diagnostic> {
        match self.get(key) {
            None => Ok(vec![]),
            Some(s) => parse_list(s).map_err(|m| self.diag(key, m)),
        }
    }

    fn range(&self, key: &str) -> Result<Option<Vec<f64>>, Diagnostic> {
        match self.get(key) {
            None => Ok(None),
            Some(s) => parse_range(s).map(Some).map_err(|m| self.diag(key, m)),
        }
    }

    fn flag(&self, key: &str) -> Result<bool, Diagnostic> {
        match self.get(key) {
            None | Some("false") => Ok(false),
            Some("true") => Ok(true),
            Some(s) => Err(self.diag(key, format!("expected true or false, got '{s}'"))),
        }
    }
}

fn parse_list(s: &str) -> Result<Vec<f64>, String> {
    if s.trim().is_empty() {
        return Ok(vec![]);
    }
    s.split(',')
        .map(|x| x.trim().parse::<f64>().ok().filter(|v| v.is_finite()).ok_or_else(|| format!("bad number '{}'", x.trim())))
        .collect()
}

/// `start:stop:step`, inclusive of stop up to rounding.
fn parse_range(s: &str) -> Result<Vec<f64>, String> {
    let p = parse_list(&s.replace(':', ","))?;
    if p.len() != 3 || !(p[2] > 0.0) || p[1] < p[0] {
        return Err(format!("expected start:stop:step with step > 0 and stop >= start, got '{s}'"));
    }
    let n = ((p[1] - p[0]) / p[2] + 1e-9).floor() as usize;
    Ok((0..=n).map(|k| p[0] + p[2] * k as f64).collect())
}

/// `zero | delta:x0 | bump:x0,width | poly:a0,a1,... | table:x,y;x,y;... | deriv:factor:<profile>`
pub fn parse_profile(s: &str) -> Result<Profile, String> {
    let s = s.trim();
    let (kind, rest) = s.split_once(':').unwrap_or((s, ""));
    match kind.trim() {
        "zero" if rest.trim().is_empty() => Ok(Profile::Zero),
        "delta" => match parse_list(rest)?.as_slice() {
            [x0] => Ok(Profile::Delta { x0: *x0 }),
            _ => Err("delta needs one position, e.g. delta:-1".into()),
        },
        "bump" => match parse_list(rest)?.as_slice() {
            [x0, w] if *w > 0.0 => Ok(Profile::Bump { x0: *x0, width: *w }),
            _ => Err("bump needs a centre and a positive width, e.g. bump:0,1".into()),
        },
        "poly" => {
            let c = parse_list(rest)?;
            if c.is_empty() {
                return Err("poly needs at least one coefficient".into());
            }
            Ok(Profile::Polynomial(c))
        }
        "table" => {
            let mut xs = vec![];
            let mut ys = vec![];
            for row in rest.split(';') {
                match parse_list(row)?.as_slice() {
                    [x, y] => {
                        xs.push(*x);
                        ys.push(*y);
                    }
                    _ => return Err(format!("table rows are x,y pairs separated by ';', got '{row}'")),
                }
            }
            Ok(Profile::Table(Arc::new(Table::new(xs, ys).map_err(|e| e.to_string())?)))
        }
        "deriv" => {
            let (f, inner) = rest.split_once(':').ok_or("deriv needs factor:<profile>")?;
            let factor = f.trim().parse::<f64>().map_err(|_| format!("bad derivative factor '{f}'"))?;
            Ok(Profile::Derivative { of: Box::new(parse_profile(inner)?), factor })
        }
        _ => Err(format!("unknown profile '{s}' (expected zero, delta, bump, poly, table or deriv)")),
    }
}

fn parse_scale(s: &str) -> Result<ScaleFn, String> {
    match s.split_once(':') {
        None if s == "standard" => Ok(ScaleFn::Standard),
        None if s == "logarithmic" => Ok(ScaleFn::Logarithmic),
        None if s == "slow" => Ok(ScaleFn::slow_scale_default()),
        Some(("slow", p)) => {
            let p = p.trim().parse::<f64>().map_err(|_| format!("bad slow-scale exponent '{p}'"))?;
            if !(p > 1.0) {
                return Err("slow-scale exponent must exceed 1".into());
            }
            Ok(ScaleFn::SlowScale { p })
        }
        _ => Err(format!("unknown scale '{s}' (expected standard, logarithmic or slow:p)")),
    }
}

fn parse_mollifier(s: &str) -> Result<Mollifier, String> {
    match s.split_once(':') {
        None if s == "bump" => Ok(Mollifier::bump()),
        None if s == "polynomial" => Ok(Mollifier::default()),
        Some(("polynomial", n)) => match n.trim().parse::<u32>() {
            Ok(n) if (1..=12).contains(&n) => Ok(Mollifier::polynomial(n)),
            _ => Err(format!("polynomial degree must be an integer in 1..=12, got '{n}'")),
        },
        _ => Err(format!("unknown mollifier '{s}' (expected polynomial:n or bump)")),
    }
}

/// Splits into (line, key, value) triples.
fn lines(text: &str) -> Result<Raw, Diagnostic> {
    let mut map = BTreeMap::new();
    for (n, line) in text.lines().enumerate() {
        let line_no = n + 1;
        let t = line.trim();
        if t.is_empty() || t.starts_with('#') {
            continue;
        }
        let (k, v) = t.split_once('=').ok_or_else(|| Diagnostic { line: Some(line_no), field: t.to_string(), message: "expected 'key = value'".into() })?;
        let (k, v) = (k.trim(), v.trim());
        if !KEYS.contains(&k) {
            return Err(Diagnostic { line: Some(line_no), field: k.into(), message: "unknown field".into() });
        }
        if let Some((first, _)) = map.insert(k.to_string(), (line_no, v.to_string())) {
            return Err(Diagnostic { line: Some(line_no), field: k.into(), message: format!("repeated field (first set on line {first})") });
        }
    }
    Ok(Raw { map })
}

impl Scenario {
    /// Parses and statically validates a scenario.
    pub fn parse(text: &str) -> Result<Self, Diagnostic> {
        let raw = lines(text)?;
        let id = raw.req("id")?.to_string();
        if id.is_empty() || !id.chars().all(|c| c.is_ascii_alphanumeric() || c == '_' || c == '-') {
            return Err(raw.diag("id", "id must be non-empty and use only letters, digits, '_' and '-'"));
        }
        let pname = raw.req("problem")?;
        let problem = Problem::ALL
            .iter()
            .find(|(n, _)| *n == pname)
            .map(|p| p.1)
            .ok_or_else(|| raw.diag("problem", format!("unknown problem kind '{pname}'")))?;

        let variable = match (raw.get("coefficient.variable"), problem.variable()) {
            (Some("space"), _) => Variable::Space,
            (Some("time"), _) => Variable::Time,
            (Some(v), _) => return Err(raw.diag("coefficient.variable", format!("expected space or time, got '{v}'"))),
            (None, Some(v)) => v,
            (None, None) => Variable::Space,
        };
        if let Some(expected) = problem.variable() {
            if variable != expected {
                return Err(raw.diag("coefficient.variable", format!("problem {} needs a {:?} coefficient", problem.name(), expected).to_lowercase()));
            }
        }
        let values = if problem.is_tanh() { vec![1.0] } else { raw.list("coefficient.values")? };
        let jumps = if problem.is_tanh() { vec![] } else { raw.list("coefficient.jump_at")? };
        if values.is_empty() && !problem.is_tanh() {
            return Err(raw.diag("coefficient.values", "missing required field"));
        }
        let coefficient = PiecewiseConstantCoeff::new(jumps, values, variable).map_err(|e| raw.diag("coefficient.values", e.to_string()))?;

        let mollifier = match raw.get("mollifier") {
            Some(s) => parse_mollifier(s).map_err(|m| raw.diag("mollifier", m))?,
            None => Mollifier::default(),
        };
        let scale = match raw.get("scale") {
            Some(s) => parse_scale(s).map_err(|m| raw.diag("scale", m))?,
            None => ScaleFn::Standard,
        };
        let profile = |key: &str| -> Result<Profile, Diagnostic> {
            match raw.get(key) {
                Some(s) => parse_profile(s).map_err(|m| raw.diag(key, m)),
                None => Ok(Profile::Zero),
            }
        };
        let (u0, u1) = (profile("data.u0")?, profile("data.u1")?);

        let ladder = EpsilonLadder {
            eps0: raw.f64_or("ladder.eps0", Some(0.1))?,
            ratio: raw.f64_or("ladder.ratio", Some(0.7))?,
            count: raw.usize_or("ladder.count", Some(10))?,
        };
        ladder.validate().map_err(|e| raw.diag("ladder.count", e.to_string()))?;

        let grid = if problem == Problem::Corner36 {
            Grid1D::new(-1.0, 1.0, 64, 1.0)
        } else {
            let t_end = raw.f64_or("grid.t_end", None)?;
            Grid1D::new(raw.f64_or("grid.x_min", None)?, raw.f64_or("grid.x_max", None)?, raw.usize_or("grid.nx", None)?, t_end)
                .with_snapshot_dt(raw.f64_or("grid.snapshot_dt", Some(t_end / 30.0))?)
                .with_cfl(raw.f64_or("grid.cfl", Some(0.4))?)
        };
        grid.validate().map_err(|e| raw.diag("grid.nx", e.to_string()))?;

        let mut analyses = vec![];
        for a in raw.get("analyses").unwrap_or("").split(',').map(str::trim).filter(|s| !s.is_empty()) {
            let a = Analysis::parse(a).ok_or_else(|| raw.diag("analyses", format!("unknown analysis '{a}'")))?;
            if !analyses.contains(&a) {
                analyses.push(a);
            }
        }

        let wave_form = match raw.get("wave.form") {
            None | Some("nonconservative") => WaveForm::NonConservative,
            Some("conservative") => WaveForm::Conservative,
            Some(s) => return Err(raw.diag("wave.form", format!("expected conservative or nonconservative, got '{s}'"))),
        };
        let wave_scheme = match raw.get("wave.scheme") {
            None | Some("characteristic") => WaveScheme::Characteristic,
            Some("upwind") => WaveScheme::Upwind,
            Some(s) => return Err(raw.diag("wave.scheme", format!("expected characteristic or upwind, got '{s}'"))),
        };
        let system_data = match raw.get("system.data") {
            None => vec![],
            Some(s) => s.split(';').map(parse_profile).collect::<Result<Vec<_>, _>>().map_err(|m| raw.diag("system.data", m))?,
        };
        let mut psis = vec![];
        if let Some(s) = raw.get("associate.psi") {
            for part in s.split(';') {
                match parse_list(part).map_err(|m| raw.diag("associate.psi", m))?.as_slice() {
                    [tc, xc, rt, rx] => {
                        TestFunction::new(*tc, *xc, *rt, *rx).map_err(|e| raw.diag("associate.psi", e.to_string()))?;
                        psis.push((*tc, *xc, *rt, *rx));
                    }
                    _ => return Err(raw.diag("associate.psi", "each test function is tc,xc,rt,rx; separate several with ';'")),
                }
            }
        }
        let detect = DetectSpec {
            geometry: raw.get("detect.geometry").map(str::to_string),
            alpha_max: raw.usize_or("detect.alpha_max", Some(2))?,
            theta: raw.f64_or("detect.theta", Some(0.5))?,
            times: raw.range("detect.times")?,
            xs: raw.range("detect.xs")?,
            ray_samples: raw.usize_or("detect.ray_samples", Some(40))?,
            rho: raw.get("detect.rho").map(|_| raw.f64_or("detect.rho", None)).transpose()?,
            field: raw.get("detect.field").unwrap_or("u").to_string(),
        };
        let sc = Scenario {
            id,
            description: raw.get("description").unwrap_or("").to_string(),
            problem,
            coefficient,
            mollifier,
            scale,
            u0,
            u1,
            ladder,
            grid,
            analyses,
            wave_form,
            wave_scheme,
            radial_dim: raw.usize_or("radial.dim", Some(3))?,
            system_speeds: raw.list("system.speeds")?,
            system_data,
            transport_sign: raw.f64_or("transport.sign", Some(1.0))?,
            detect,
            psis,
            assoc_tol: raw.f64_or("associate.tol", Some(1e-2))?,
            assoc_field: raw.get("associate.field").unwrap_or("u").to_string(),
            energy_refinements: raw.usize_or("energy.refinements", Some(0))?,
            corner_times: raw.list("corner.times")?,
            growth_time: raw.f64_or("growth.time", Some(0.5))?,
            dump: raw.flag("output.dump")?,
        };
        sc.check(&raw)?;
        Ok(sc)
    }

    /// Problem-specific constraints.
    fn check(&self, raw: &Raw) -> Result<(), Diagnostic> {
        let p = self.problem;
        let has = |a| self.analyses.contains(&a);
        if matches!(p, Problem::RadialOdd | Problem::RadialEvenAbel) {
            if !self.u0.is_zero() || !self.u1.is_zero() {
                return Err(raw.diag("data.u0", "radial problems use built-in delta data; leave data.u0 and data.u1 unset"));
            }
            let odd = self.radial_dim % 2 == 1;
            if (p == Problem::RadialOdd && (!odd || self.radial_dim < 3)) || (p == Problem::RadialEvenAbel && (odd || self.radial_dim < 2)) {
                return Err(raw.diag("radial.dim", format!("dimension {} does not match problem {}", self.radial_dim, p.name())));
            }
            if (self.grid.x_min + self.grid.x_max).abs() > 1e-12 || self.grid.nx % 2 != 0 {
                return Err(raw.diag("grid.nx", "radial grids must be symmetric about 0 with even nx"));
            }
        }
        if p == Problem::System {
            if self.system_speeds.is_empty() || self.system_speeds.len() != self.system_data.len() {
                return Err(raw.diag("system.data", "system needs one data profile per entry of system.speeds"));
            }
        } else if !self.system_speeds.is_empty() || !self.system_data.is_empty() {
            return Err(raw.diag("system.speeds", "only the system problem takes system.* fields"));
        }
        if p == Problem::Corner36 {
            if self.coefficient.breakpoints().len() != 1 || self.corner_times.is_empty() {
                return Err(raw.diag("corner.times", "corner_3_6 needs a single jump and at least one time"));
            }
            if !self.analyses.is_empty() {
                return Err(raw.diag("analyses", "corner_3_6 computes characteristic derivatives only"));
            }
        }
        if p == Problem::Transport && self.transport_sign.abs() != 1.0 {
            return Err(raw.diag("transport.sign", "expected 1 or -1"));
        }
        if p.is_tanh() && (self.u0.is_zero() || !self.u1.is_zero()) {
            return Err(raw.diag("data.u0", "tanh examples transport data.u0; data.u1 must be unset"));
        }
        if has(Analysis::Detect) && !(2..=3).contains(&self.detect.alpha_max) {
            return Err(raw.diag("detect.alpha_max", "alpha_max must be 2 or 3"));
        }
        if has(Analysis::Detect) && self.detect.alpha_max > self.mollifier.max_order() {
            return Err(raw.diag("detect.alpha_max", format!("the mollifier supports derivatives up to order {}", self.mollifier.max_order())));
        }
        if has(Analysis::Associate) && self.psis.is_empty() {
            return Err(raw.diag("associate.psi", "associate needs at least one test function"));
        }
        // pairings need 8 samples per test-function radius in t and x on every member
        let coarsest = self.member_grid(self.ladder.eps0);
        for &(_, _, rt, rx) in &self.psis {
            if self.grid.snapshot_dt > rt / 8.0 + 1e-12 {
                return Err(raw.diag("associate.psi", format!("rt = {rt} needs grid.snapshot_dt <= {}", rt / 8.0)));
            }
            if coarsest.dx() > rx / 8.0 {
                return Err(raw.diag("associate.psi", format!("rx = {rx} needs dx <= {} on the coarsest member, which has {:.3e}", rx / 8.0, coarsest.dx())));
            }
        }
        if has(Analysis::Energy) && !matches!(p, Problem::WaveX | Problem::WaveT) {
            return Err(raw.diag("analyses", format!("energy is defined for wave_x and wave_t, not {}", p.name())));
        }
        if !FIELDS.contains(&self.detect.field.as_str()) {
            return Err(raw.diag("detect.field", format!("expected one of {}", FIELDS.join(", "))));
        }
        if p != Problem::Corner36 {
            let h = self.member_scale(self.ladder.smallest());
            if self.grid.check_resolution(h).is_err() {
                let need = ((self.grid.x_max - self.grid.x_min) * 16.0 / h).ceil();
                return Err(raw.diag("grid.nx", format!("resolution contract violated: nx = {} but the finest member (scale {h:.3e}) needs nx >= {need}", self.grid.nx)));
            }
        }
        if let Some(g) = &self.detect.geometry {
            if !["auto", "none"].contains(&g.as_str()) {
                return Err(raw.diag("detect.geometry", format!("expected auto or none, got '{g}'")));
            }
        }
        Ok(())
    }

    /// Regularization scale `min(eps, h(eps))` that sets the member's grid.
    pub fn member_scale(&self, eps: f64) -> f64 {
        if self.problem.is_tanh() {
            return eps;
        }
        eps.min(self.scale.eval(eps).unwrap_or(eps))
    }

    /// Grid for one ladder member: the finest grid, coarsened in proportion to the scale.
    pub fn member_grid(&self, eps: f64) -> Grid1D {
        let factor = self.member_scale(eps) / self.member_scale(self.ladder.smallest());
        if factor <= 1.0 + 1e-12 {
            self.grid
        } else {
            self.grid.coarsened(factor)
        }
    }
}
