//! Scenario files, the run orchestrator and report writers behind the `colwave` binary.

pub mod report;
pub mod run;
pub mod scenario;

use std::path::Path;

use colwave_core::mollifier::EpsilonLadder;

use crate::run::{with_ladder, RunError, RunReport};
use crate::scenario::Scenario;

macro_rules! bundled {
    ($($id:literal),* $(,)?) => {
        &[$(($id, include_str!(concat!("../scenarios/", $id, ".scn")))),*]
    };
}

/// Scenario files shipped with the binary, as (id, text).
pub const BUNDLED: &[(&str, &str)] = bundled!(
    "thm41",
    "thm42",
    "prop42",
    "thm43a",
    "thm43b",
    "prop44_slow",
    "thm45_d3",
    "thm45_d3_const",
    "thm45_d2",
    "ex2_tanh",
    "ex3_tanh",
    "corner36",
    "appendix_assoc",
    "thm31_energy",
);

pub fn bundled(id: &str) -> Option<&'static str> {
    BUNDLED.iter().find(|(k, _)| *k == id).map(|(_, t)| *t)
}

/// Parses `"eps0,ratio,count"`.
pub fn parse_ladder_override(s: &str) -> Result<EpsilonLadder, RunError> {
    let bad = || RunError::Validation(format!("--ladder-override expects eps0,ratio,count, got '{s}'"));
    let parts: Vec<&str> = s.split(',').map(str::trim).collect();
    let [e, r, n] = parts.as_slice() else { return Err(bad()) };
    let l = EpsilonLadder { eps0: e.parse().map_err(|_| bad())?, ratio: r.parse().map_err(|_| bad())?, count: n.parse().map_err(|_| bad())? };
    l.validate()?;
    Ok(l)
}

/// All static checks, without solving.
pub fn validate(text: &str, ladder: Option<EpsilonLadder>) -> Result<Scenario, RunError> {
    let sc = Scenario::parse(text).map_err(|d| RunError::Validation(d.to_string()))?;
    with_ladder(&sc, ladder)
}

/// Validates, runs and writes the reports under `out_root/<id>/`.
pub fn run_text(text: &str, ladder: Option<EpsilonLadder>, out_root: &Path) -> Result<RunReport, RunError> {
    let sc = validate(text, ladder)?;
    let report = run::run(&sc)?;
    report::write_outputs(&sc, &report, out_root)?;
    Ok(report)
}
