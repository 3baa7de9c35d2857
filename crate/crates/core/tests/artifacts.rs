use std::fs;

use cascade_core::io;
use cascade_core::pipeline::{self as pl, run_pipeline, RunConfig, RunMetadata, Stage};
use cascade_core::sim::ComparisonReport;
use cascade_core::strategic::IncentiveScheme;
use cascade_core::Params;

fn config(dir: &std::path::Path, c: f64) -> RunConfig {
    RunConfig {
        params: Params {
            c,
            grid_size: 201,
            horizon: 5000,
            burn_in: 500,
            num_replications: 3,
            seed: 11,
            ..Params::default()
        },
        out: dir.to_path_buf(),
        ..RunConfig::default()
    }
}

#[test]
fn every_stage_writes_its_files() {
    let expected: [(Stage, &[&str]); 4] = [
        (Stage::Strategic, &[pl::STRATEGIC_POLICY]),
        (Stage::Solve, &[pl::TEAM_POLICY, pl::VALUE_FUNCTION]),
        (
            Stage::Mechanism,
            &[
                pl::STRATEGIC_POLICY,
                pl::TEAM_POLICY,
                pl::VALUE_FUNCTION,
                pl::COINCIDENCE,
                pl::INCENTIVES,
                pl::INCENTIVIZED_POLICY,
            ],
        ),
        (
            Stage::All,
            &[
                pl::STRATEGIC_POLICY,
                pl::TEAM_POLICY,
                pl::VALUE_FUNCTION,
                pl::COINCIDENCE,
                pl::INCENTIVES,
                pl::INCENTIVIZED_POLICY,
                pl::COMPARISON_JSON,
                pl::COMPARISON_CSV,
                pl::OCCUPANCY,
            ],
        ),
    ];
    for (stage, files) in expected {
        let dir = tempfile::tempdir().unwrap();
        let out = run_pipeline(&config(dir.path(), 0.05), stage).unwrap();
        let mut want: Vec<String> = files.iter().map(|s| s.to_string()).collect();
        want.push(pl::METADATA.to_owned());
        assert_eq!(out.files, want, "{stage:?}");
        let mut on_disk: Vec<String> = fs::read_dir(dir.path())
            .unwrap()
            .map(|e| e.unwrap().file_name().into_string().unwrap())
            .collect();
        on_disk.sort();
        want.sort();
        assert_eq!(on_disk, want, "{stage:?}");
    }
}

#[test]
fn artifacts_load_back_and_metadata_echoes_config() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = config(dir.path(), 0.05);
    let out = run_pipeline(&cfg, Stage::All).unwrap();
    let d = dir.path();

    let meta: RunMetadata = io::read_json(&d.join(pl::METADATA)).unwrap();
    assert_eq!(meta.config, cfg);
    assert_eq!(meta.schema_version, io::SCHEMA_VERSION);
    assert_eq!(meta.initial_state_distribution, [0.5, 0.5]);
    let raw: serde_json::Value = serde_json::from_str(&fs::read_to_string(d.join(pl::METADATA)).unwrap()).unwrap();
    for key in ["epsilon", "p", "c", "grid_size", "vi_tol", "horizon", "seed", "pay_on_difference_set"] {
        assert!(raw["config"].get(key).is_some(), "metadata lacks {key}");
    }

    let team = io::read_policy_csv(&d.join(pl::TEAM_POLICY)).unwrap();
    let (vt, vpol) = io::read_value_csv(&d.join(pl::VALUE_FUNCTION)).unwrap();
    assert_eq!(team, vpol);
    assert_eq!(Some(vt.rho), out.metadata.solver.as_ref().map(|s| s.rho));
    let (cs, scheme) = io::read_coincidence_csv(&d.join(pl::COINCIDENCE)).unwrap();
    let json_scheme: IncentiveScheme = io::read_json(&d.join(pl::INCENTIVES)).unwrap();
    assert_eq!(scheme, json_scheme);
    assert_eq!(cs.fraction(), out.metadata.mechanism.as_ref().unwrap().coincidence_fraction);

    let report: ComparisonReport = io::read_json(&d.join(pl::COMPARISON_JSON)).unwrap();
    let rows = io::read_comparison_csv(&d.join(pl::COMPARISON_CSV)).unwrap();
    assert_eq!(rows, report.replications);
    let occ = io::read_occupancy_csv(&d.join(pl::OCCUPANCY)).unwrap();
    for regime in ["team", "strategic", "incentivized"] {
        let mass: f64 = occ.iter().filter(|r| r.regime == regime).map(|r| r.mass).sum();
        assert!((mass - 1.0).abs() < 1e-9, "{regime}: {mass}");
    }
}

#[test]
fn free_reports_need_no_subsidy() {
    let dir = tempfile::tempdir().unwrap();
    run_pipeline(&config(dir.path(), 0.0), Stage::Mechanism).unwrap();
    let strat = io::read_policy_csv(&dir.path().join(pl::STRATEGIC_POLICY)).unwrap();
    let inc = io::read_policy_csv(&dir.path().join(pl::INCENTIVIZED_POLICY)).unwrap();
    assert_eq!(strat.choice, inc.choice);
    let scheme: IncentiveScheme = io::read_json(&dir.path().join(pl::INCENTIVES)).unwrap();
    assert_eq!(scheme.amount, 0.0);
}

#[test]
fn rerun_replaces_previous_output() {
    let dir = tempfile::tempdir().unwrap();
    run_pipeline(&config(dir.path(), 0.05), Stage::Solve).unwrap();
    let first = fs::read(dir.path().join(pl::VALUE_FUNCTION)).unwrap();
    run_pipeline(&config(dir.path(), 0.05), Stage::Solve).unwrap();
    assert_eq!(first, fs::read(dir.path().join(pl::VALUE_FUNCTION)).unwrap());
    assert!(!fs::read_dir(dir.path())
        .unwrap()
        .any(|e| e.unwrap().file_name().to_string_lossy().starts_with(".staging")));
}
