//! Summary aggregation and report formats on synthetic trial batches.

use lqglab::experiments::trial::{LevelResult, TrialResult};
use lqglab::experiments::{summarize, TrialConfig};
use lqglab::io::report::{plot_series, read_flat_csv, SUMMARY_CSV, SUMMARY_JSON};
use lqglab::io::{emit_report, write_manifest, Format};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn synthetic(config: &TrialConfig, trials: u64) -> Vec<TrialResult> {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    (0..trials)
        .map(|index| {
            let gmc: Vec<f64> = (0..config.intervals).map(|_| rng.random_range(0.01..0.2)).collect();
            let levels = config
                .levels
                .iter()
                .map(|&n| {
                    let profile: Vec<f64> = gmc.iter().map(|m| m * rng.random_range(0.2..0.8)).collect();
                    LevelResult {
                        n,
                        proxy: profile.iter().map(|p| 2.0 * p).collect(),
                        busemann: profile.clone(),
                        nongood: vec![0.0; config.intervals],
                        good_fraction: 1.0,
                        atoms: vec![],
                        profile,
                    }
                })
                .collect();
            TrialResult {
                index,
                seed: index,
                levels,
                gmc,
                busemann_samples: vec![],
                restricted: vec![],
                weyl_residual: 0.0,
                domination_violations: 0,
                identity_checks: 0,
                identity_violations: 0,
                max_identity_error: 0.0,
            }
        })
        .collect()
}

#[test]
fn formats_and_round_trip() {
    let config = TrialConfig::standard();
    let summary = summarize(&config, &synthetic(&config, 200)).unwrap();
    assert!(summary.ratio_test.is_some());
    assert!(summary.skipped.iter().any(|s| s.name == "kappa"));
    let dir = tempfile::tempdir().unwrap();

    let files = emit_report(&summary, Format::Plotdata, dir.path()).unwrap();
    assert_eq!(files.len(), config.levels.len());
    assert_eq!(plot_series(&summary).len(), config.levels.len());
    let text = std::fs::read_to_string(&files[0]).unwrap();
    assert_eq!(text.lines().filter(|l| !l.starts_with('#')).count(), config.intervals);

    emit_report(&summary, Format::Json, dir.path()).unwrap();
    emit_report(&summary, Format::Csv, dir.path()).unwrap();
    let json: serde_json::Value = serde_json::from_slice(&std::fs::read(dir.path().join(SUMMARY_JSON)).unwrap()).unwrap();
    let from_csv = read_flat_csv(&std::fs::read(dir.path().join(SUMMARY_CSV)).unwrap()[..]).unwrap();
    assert_eq!(json, from_csv);
    assert_eq!(json, serde_json::to_value(&summary).unwrap());
    // Schema keys appear in declaration order.
    let keys: Vec<&String> = json.as_object().unwrap().keys().collect();
    assert_eq!(&keys[..5], ["config_echo", "seed", "trials", "kappa", "slopes"]);

    let manifest = write_manifest(dir.path()).unwrap();
    assert_eq!(manifest.len(), config.levels.len() + 2);
}

#[test]
fn empty_runs_are_rejected() {
    let config = TrialConfig::standard();
    assert!(summarize(&config, &[]).is_err());
    let mut summary = summarize(&config, &synthetic(&config, 3)).unwrap();
    assert!(summary.ratio_test.is_none());
    summary.trials = 0;
    let dir = tempfile::tempdir().unwrap();
    assert!(emit_report(&summary, Format::Json, dir.path()).is_err());
}
