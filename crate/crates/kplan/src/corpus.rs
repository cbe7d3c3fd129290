//! Golden-fixture support: a manifest of planning problems with expected
//! results, checked by the integration tests.

use std::collections::BTreeSet;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::ground::{ground_program, GroundProgram};
use crate::kparse::parse;
use crate::plan::{self, Limits};
use crate::secure;
use crate::transition::{self, StepMode};

/// A plan written with action names, one sorted set per step.
pub type NamedPlan = Vec<Vec<String>>;

#[derive(Clone, Debug, Deserialize, Serialize)]
pub struct Fixture {
    pub name: String,
    pub program: String,
    #[serde(default)]
    pub background: Option<String>,
    /// "sequential" or "concurrent".
    #[serde(default = "default_mode")]
    pub mode: String,
    #[serde(default)]
    pub note: Option<String>,
    /// "documented" for values stated with the problem, "computed" for
    /// frozen solver output.
    pub source: String,
    pub expect: Expect,
}

fn default_mode() -> String {
    "sequential".to_string()
}

#[derive(Clone, Debug, Default, Deserialize, Serialize)]
pub struct Expect {
    #[serde(default)]
    pub optimistic_exists: Option<bool>,
    #[serde(default)]
    pub optimistic_count: Option<usize>,
    #[serde(default)]
    pub secure_exists: Option<bool>,
    #[serde(default)]
    pub secure_count: Option<usize>,
    /// Exact set of optimistic plans.
    #[serde(default)]
    pub optimistic_plans: Option<Vec<NamedPlan>>,
    /// Exact set of secure plans.
    #[serde(default)]
    pub secure_plans: Option<Vec<NamedPlan>>,
    /// Plans that must be among the optimistic ones.
    #[serde(default)]
    pub contains_optimistic: Vec<NamedPlan>,
    /// Plans that must be among the secure ones.
    #[serde(default)]
    pub contains_secure: Vec<NamedPlan>,
    /// Plans that must be optimistic but not secure.
    #[serde(default)]
    pub insecure_optimistic: Vec<NamedPlan>,
}

pub fn load_manifest(path: &Path) -> Result<Vec<Fixture>, String> {
    let text = std::fs::read_to_string(path).map_err(|e| format!("{}: {e}", path.display()))?;
    serde_json::from_str(&text).map_err(|e| format!("{}: {e}", path.display()))
}

#[derive(Debug)]
pub struct FixtureOutcome {
    pub optimistic: Vec<NamedPlan>,
    pub secure: Vec<NamedPlan>,
    pub mismatches: Vec<String>,
}

fn named(gp: &GroundProgram, p: &plan::Plan) -> NamedPlan {
    p.iter()
        .map(|step| step.iter().map(|&a| gp.act_text(a).to_string()).collect())
        .collect()
}

pub fn mode_of(fx: &Fixture) -> Result<StepMode, String> {
    match fx.mode.as_str() {
        "sequential" => Ok(StepMode::Sequential),
        "concurrent" => Ok(StepMode::Concurrent),
        other => Err(format!("{}: unknown mode {other:?}", fx.name)),
    }
}

/// Solve a fixture and return its optimistic and secure plan sets as
/// action-name lists.
pub fn solve_fixture(dir: &Path, fx: &Fixture) -> Result<(Vec<NamedPlan>, Vec<NamedPlan>), String> {
    let text = std::fs::read_to_string(dir.join(&fx.program))
        .map_err(|e| format!("{}: {e}", fx.program))?;
    let bg = match &fx.background {
        Some(b) => {
            Some(std::fs::read_to_string(dir.join(b)).map_err(|e| format!("{b}: {e}"))?)
        }
        None => None,
    };
    let prog = parse(&text, bg.as_deref()).map_err(|e| format!("{}: {e}", fx.name))?;
    let gp = ground_program(&prog).map_err(|e| format!("{}: {e}", fx.name))?.ground;
    let mode = mode_of(fx)?;
    let optimistic = plan::optimistic_plans(&gp, mode, Limits::default())
        .map_err(|e| format!("{}: {e}", fx.name))?;
    let mut secure = Vec::new();
    for p in &optimistic {
        if secure::check_secure(&gp, p, transition::DEFAULT_CAP)
            .map_err(|e| format!("{}: {e}", fx.name))?
            .is_ok()
        {
            secure.push(p.clone());
        }
    }
    Ok((
        optimistic.iter().map(|p| named(&gp, p)).collect(),
        secure.iter().map(|p| named(&gp, p)).collect(),
    ))
}

/// Solve a fixture and compare the outcome against its expectations.
pub fn run_fixture(dir: &Path, fx: &Fixture) -> Result<FixtureOutcome, String> {
    let (optimistic, secure) = solve_fixture(dir, fx)?;
    let mut mism = Vec::new();
    let e = &fx.expect;
    let opt_set: BTreeSet<&NamedPlan> = optimistic.iter().collect();
    let sec_set: BTreeSet<&NamedPlan> = secure.iter().collect();
    if let Some(x) = e.optimistic_exists {
        if !optimistic.is_empty() != x {
            mism.push(format!("optimistic_exists: expected {x}, got {}", !optimistic.is_empty()));
        }
    }
    if let Some(n) = e.optimistic_count {
        if optimistic.len() != n {
            mism.push(format!("optimistic_count: expected {n}, got {}", optimistic.len()));
        }
    }
    if let Some(x) = e.secure_exists {
        if !secure.is_empty() != x {
            mism.push(format!("secure_exists: expected {x}, got {}", !secure.is_empty()));
        }
    }
    if let Some(n) = e.secure_count {
        if secure.len() != n {
            mism.push(format!("secure_count: expected {n}, got {}", secure.len()));
        }
    }
    if let Some(plans) = &e.optimistic_plans {
        let want: BTreeSet<&NamedPlan> = plans.iter().collect();
        if want != opt_set {
            mism.push(format!("optimistic_plans: expected {plans:?}, got {optimistic:?}"));
        }
    }
    if let Some(plans) = &e.secure_plans {
        let want: BTreeSet<&NamedPlan> = plans.iter().collect();
        if want != sec_set {
            mism.push(format!("secure_plans: expected {plans:?}, got {secure:?}"));
        }
    }
    for p in &e.contains_optimistic {
        if !opt_set.contains(p) {
            mism.push(format!("contains_optimistic: {p:?} not found"));
        }
    }
    for p in &e.contains_secure {
        if !sec_set.contains(p) {
            mism.push(format!("contains_secure: {p:?} not found"));
        }
    }
    for p in &e.insecure_optimistic {
        if !opt_set.contains(p) {
            mism.push(format!("insecure_optimistic: {p:?} is not optimistic"));
        } else if sec_set.contains(p) {
            mism.push(format!("insecure_optimistic: {p:?} is secure"));
        }
    }
    Ok(FixtureOutcome { optimistic, secure, mismatches: mism })
}
