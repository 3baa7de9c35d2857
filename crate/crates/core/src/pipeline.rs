//! End-to-end run: team program, strategic policy, coincidence set,
//! subsidy, incentivized policy, and the simulated comparison, written as
//! plot-ready files.

use std::fs;
use std::path::{Path, PathBuf};
use std::time::{Instant, SystemTime, UNIX_EPOCH};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result, Violation};
use crate::io;
use crate::model::{non_dominated_gammas, Params};
use crate::sim::{compare_regimes, occupancy_profile, DecisionRule, Lookup, RegimeInputs, RNG_NAME};
use crate::solver::{solve_average_reward, TIE_TOL};
use crate::strategic::{
    build_incentives_with, coincidence_set, incentivized_policy, strategic_policy, MechanismConfig,
};

pub const OCCUPANCY_BINS: usize = 50;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct RunConfig {
    #[serde(flatten)]
    pub params: Params,
    #[serde(flatten)]
    pub mechanism: MechanismConfig,
    pub lookup: Lookup,
    pub out: PathBuf,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            params: Params::default(),
            mechanism: MechanismConfig::default(),
            lookup: Lookup::default(),
            out: PathBuf::from("out"),
        }
    }
}

impl RunConfig {
    pub fn from_json_file(path: &Path) -> Result<Self> {
        io::read_json(path)
    }
}

/// Every broken invariant of `config`; never fails.
pub fn validate_config(config: &RunConfig) -> Vec<Violation> {
    let mut v = config.params.violations();
    let d = config.mechanism.extra_bonus_delta;
    if !(d >= 0.0 && d.is_finite()) {
        v.push(Violation::new(
            "extra_bonus_delta",
            d.to_string(),
            "extra_bonus_delta must be a finite nonnegative number",
        ));
    }
    if config.params.num_replications < 2 {
        v.push(Violation::new(
            "num_replications",
            config.params.num_replications.to_string(),
            "num_replications must be at least 2 for standard errors",
        ));
    }
    v
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Stage {
    Solve,
    Strategic,
    Mechanism,
    Simulate,
    All,
}

impl Stage {
    fn needs_team(self) -> bool {
        !matches!(self, Stage::Strategic)
    }

    fn needs_mechanism(self) -> bool {
        matches!(self, Stage::Mechanism | Stage::Simulate | Stage::All)
    }

    fn needs_simulation(self) -> bool {
        matches!(self, Stage::Simulate | Stage::All)
    }
}

pub const TEAM_POLICY: &str = "team_policy.csv";
pub const STRATEGIC_POLICY: &str = "strategic_policy.csv";
pub const INCENTIVIZED_POLICY: &str = "incentivized_policy.csv";
pub const COINCIDENCE: &str = "coincidence.csv";
pub const INCENTIVES: &str = "incentives.json";
pub const VALUE_FUNCTION: &str = "value_function.csv";
pub const COMPARISON_JSON: &str = "comparison.json";
pub const COMPARISON_CSV: &str = "comparison.csv";
pub const OCCUPANCY: &str = "occupancy.csv";
pub const METADATA: &str = "run_metadata.json";

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TieBreakRules {
    pub tolerance: f64,
    pub team: String,
    pub strategic: String,
    pub incentivized: String,
}

impl Default for TieBreakRules {
    fn default() -> Self {
        TieBreakRules {
            tolerance: TIE_TOL,
            team: "first rule in canonical order (gamma_id ascending) within tolerance of the max".into(),
            strategic: "first rule in canonical order within tolerance of the max".into(),
            incentivized: "inside the pay set, first informative reporting rule within tolerance of the max; \
                           otherwise first rule in canonical order"
                .into(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SolverSummary {
    pub rho: f64,
    pub iterations: usize,
    pub span: f64,
    pub ref_index: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MechanismSummary {
    pub coincidence_fraction: f64,
    pub pay_ranges: Vec<(usize, usize)>,
    pub amount: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct WallClock {
    pub started_unix_s: u64,
    pub elapsed_s: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunMetadata {
    pub code_version: String,
    pub schema_version: u32,
    pub stage: Stage,
    pub config: RunConfig,
    pub tie_break: TieBreakRules,
    pub rng: String,
    pub initial_state_distribution: [f64; 2],
    pub files: Vec<String>,
    pub solver: Option<SolverSummary>,
    pub mechanism: Option<MechanismSummary>,
    /// The only field that differs between identical runs.
    pub wall_clock: WallClock,
}

/// Files written by a run, relative to the output directory.
#[derive(Clone, Debug, PartialEq)]
pub struct RunOutput {
    pub dir: PathBuf,
    pub files: Vec<String>,
    pub metadata: RunMetadata,
}

/// Runs `stage` and writes its artifacts into `config.out`.
///
/// Files are first written to a staging directory and only moved into
/// place once every step has succeeded; on failure the staging directory
/// is removed and nothing in the output directory changes.
pub fn run_pipeline(config: &RunConfig, stage: Stage) -> Result<RunOutput> {
    let violations = validate_config(config);
    if !violations.is_empty() {
        return Err(Error::InvalidParams(violations));
    }
    let started = Instant::now();
    let started_unix_s = SystemTime::now()
        .duration_since(UNIX_EPOCH)
        .map(|d| d.as_secs())
        .unwrap_or(0);

    fs::create_dir_all(&config.out)?;
    let staging = config.out.join(format!(".staging-{}", std::process::id()));
    if staging.exists() {
        fs::remove_dir_all(&staging)?;
    }
    fs::create_dir_all(&staging)?;

    let result = write_stage(config, stage, &staging);
    let (mut files, solver, mechanism) = match result {
        Ok(x) => x,
        Err(e) => {
            let _ = fs::remove_dir_all(&staging);
            return Err(e);
        }
    };
    files.push(METADATA.to_owned());
    let metadata = RunMetadata {
        code_version: env!("CARGO_PKG_VERSION").to_owned(),
        schema_version: io::SCHEMA_VERSION,
        stage,
        config: config.clone(),
        tie_break: TieBreakRules::default(),
        rng: RNG_NAME.to_owned(),
        initial_state_distribution: [1.0 - config.params.initial_belief, config.params.initial_belief],
        files: files.clone(),
        solver,
        mechanism,
        wall_clock: WallClock {
            started_unix_s,
            elapsed_s: started.elapsed().as_secs_f64(),
        },
    };
    let commit = io::write_json(&staging.join(METADATA), &metadata).and_then(|_| {
        for f in &files {
            fs::rename(staging.join(f), config.out.join(f))?;
        }
        Ok(())
    });
    let _ = fs::remove_dir_all(&staging);
    commit?;
    Ok(RunOutput {
        dir: config.out.clone(),
        files,
        metadata,
    })
}

type StageOutput = (Vec<String>, Option<SolverSummary>, Option<MechanismSummary>);

fn write_stage(config: &RunConfig, stage: Stage, dir: &Path) -> Result<StageOutput> {
    let params = &config.params;
    let set = non_dominated_gammas();
    let mut files = Vec::new();
    let mut solver = None;
    let mut mechanism = None;

    let strategic = strategic_policy(params, &set)?;
    if stage != Stage::Solve {
        io::write_policy_csv(&dir.join(STRATEGIC_POLICY), &strategic)?;
        files.push(STRATEGIC_POLICY.to_owned());
    }
    if !stage.needs_team() {
        return Ok((files, solver, mechanism));
    }

    let (vt, team) = solve_average_reward(params, &set)?;
    io::write_policy_csv(&dir.join(TEAM_POLICY), &team)?;
    io::write_value_csv(&dir.join(VALUE_FUNCTION), &vt, &team)?;
    files.push(TEAM_POLICY.to_owned());
    files.push(VALUE_FUNCTION.to_owned());
    solver = Some(SolverSummary {
        rho: vt.rho,
        iterations: vt.iterations,
        span: vt.span,
        ref_index: vt.ref_index,
    });
    if !stage.needs_mechanism() {
        return Ok((files, solver, mechanism));
    }

    let cs = coincidence_set(&team, &strategic)?;
    let scheme = build_incentives_with(params, &cs, &config.mechanism);
    let incentivized = incentivized_policy(params, &scheme, &set)?;
    io::write_coincidence_csv(&dir.join(COINCIDENCE), &cs, &scheme)?;
    io::write_json(&dir.join(INCENTIVES), &scheme)?;
    io::write_policy_csv(&dir.join(INCENTIVIZED_POLICY), &incentivized)?;
    files.extend([COINCIDENCE, INCENTIVES, INCENTIVIZED_POLICY].map(String::from));
    mechanism = Some(MechanismSummary {
        coincidence_fraction: cs.fraction(),
        pay_ranges: scheme.pay_ranges.clone(),
        amount: scheme.amount,
    });
    if !stage.needs_simulation() {
        return Ok((files, solver, mechanism));
    }

    let inputs = RegimeInputs {
        team_values: &vt,
        team_policy: &team,
        strategic_policy: &strategic,
        incentivized_policy: &incentivized,
        scheme: &scheme,
        gamma_set: &set,
        lookup: config.lookup,
    };
    let report = compare_regimes(params, &inputs)?;
    io::write_json(&dir.join(COMPARISON_JSON), &report)?;
    io::write_comparison_csv(&dir.join(COMPARISON_CSV), &report)?;

    let occupancy = [
        ("team", DecisionRule::Greedy(&vt), None),
        ("strategic", DecisionRule::Myopic(&set), None),
        (
            "incentivized",
            DecisionRule::Incentivized {
                scheme: &scheme,
                gamma_set: &set,
            },
            Some(&scheme),
        ),
    ]
    .into_iter()
    .map(|(name, rule, s)| Ok((name, occupancy_profile(params, rule, s, params.seed, OCCUPANCY_BINS)?)))
    .collect::<Result<Vec<_>>>()?;
    io::write_occupancy_csv(&dir.join(OCCUPANCY), &occupancy)?;
    files.extend([COMPARISON_JSON, COMPARISON_CSV, OCCUPANCY].map(String::from));
    Ok((files, solver, mechanism))
}
