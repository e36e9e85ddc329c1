//! End-to-end pipeline smoke tests: generated nights through feature
//! extraction, trajectory building, detection, and scoring.

use driftdetect_core::baselines::{ks_sliding_windows, random_labels, KsWindowConfig};
use driftdetect_core::clustering::{build_trajectory, ClusterConfig};
use driftdetect_core::datagen::{duration_drift_scenario, interruption_drift_scenario, Scenario};
use driftdetect_core::detector::{run, DetectorConfig};
use driftdetect_core::eval::score;
use driftdetect_core::events::{extract_daily_features, partition_and_split, ObservationWindow};

struct Outcome {
    f1: f64,
    ks_f1: f64,
    rnd_f1: f64,
    rate_normal: f64,
    rate_drift: f64,
}

fn pipeline(scenario: &Scenario, seed: u64) -> Outcome {
    let (seq, truth) = scenario.generate(seed).unwrap();
    let parts = partition_and_split(&seq).unwrap();
    let rows = extract_daily_features(&seq, &parts, &ObservationWindow::default()).unwrap();
    assert_eq!(rows.len(), truth.len());
    let traj = build_trajectory(&rows, &ClusterConfig::default()).unwrap();
    let report = run(&traj.rows, &DetectorConfig::realistic()).unwrap();
    let f1 = score(&report.labels.predicted, &truth).unwrap().f1;
    let ks = ks_sliding_windows(&traj.rows, &KsWindowConfig::default()).unwrap();
    let ks_f1 = score(&ks.predicted, &truth).unwrap().f1;
    let rnd = random_labels(truth.len(), seed);
    let rnd_f1 = score(&rnd.predicted, &truth).unwrap().f1;
    let start = scenario.drift_start_day();
    let p = &report.labels.predicted;
    let rate = |s: &[u8]| s.iter().map(|&b| b as usize).sum::<usize>() as f64 / s.len() as f64;
    Outcome { f1, ks_f1, rnd_f1, rate_normal: rate(&p[..start]), rate_drift: rate(&p[start..]) }
}

#[test]
#[ignore = "multi-seed preset evaluation; run manually with --nocapture"]
fn preset_seed_stability() {
    for (name, scenario) in
        [("duration", duration_drift_scenario()), ("interruption", interruption_drift_scenario())]
    {
        let seeds = 10;
        let mut f1s = Vec::new();
        let mut agg = (0.0, 0.0, 0.0, 0.0);
        for seed in 0..seeds {
            let o = pipeline(&scenario, seed);
            f1s.push(o.f1);
            agg.0 += o.ks_f1;
            agg.1 += o.rnd_f1;
            agg.2 += o.rate_normal;
            agg.3 += o.rate_drift;
        }
        let k = seeds as f64;
        let mean = f1s.iter().sum::<f64>() / k;
        let min = f1s.iter().cloned().fold(f64::INFINITY, f64::min);
        eprintln!(
            "{name:12} det mean {mean:.3} min {min:.3} | ks {:.3} rnd {:.3} | fire normal {:.3} drift {:.3}",
            agg.0 / k,
            agg.1 / k,
            agg.2 / k,
            agg.3 / k
        );
    }
}

#[test]
fn duration_drift_pipeline_beats_the_baselines() {
    let o = pipeline(&duration_drift_scenario(), 0);
    assert!(o.f1 >= 0.60, "detector F1 {:.3} below floor", o.f1);
    assert!(o.f1 > o.rnd_f1, "detector {:.3} not above random labelling {:.3}", o.f1, o.rnd_f1);
    assert!(o.f1 > o.ks_f1 + 0.10, "detector {:.3} not clear of KS windows {:.3}", o.f1, o.ks_f1);
    // The drift period fires much harder than the normal period.
    assert!(o.rate_drift > 0.85, "drift-period firing rate {:.3}", o.rate_drift);
    assert!(o.rate_normal < 0.60, "normal-period firing rate {:.3}", o.rate_normal);
}

#[test]
fn interruption_drift_pipeline_beats_the_baselines() {
    let o = pipeline(&interruption_drift_scenario(), 0);
    assert!(o.f1 >= 0.60, "detector F1 {:.3} below floor", o.f1);
    assert!(o.f1 > o.rnd_f1, "detector {:.3} not above random labelling {:.3}", o.f1, o.rnd_f1);
    assert!(o.f1 > o.ks_f1 + 0.10, "detector {:.3} not clear of KS windows {:.3}", o.f1, o.ks_f1);
    assert!(o.rate_drift > 0.85, "drift-period firing rate {:.3}", o.rate_drift);
    assert!(o.rate_normal < 0.60, "normal-period firing rate {:.3}", o.rate_normal);
}
