//! Exit criteria. Each test prints one PASS/FAIL line; run with
//! `cargo test --test acceptance -- --nocapture --test-threads=1` to see them.

mod common;

use std::fs;
use std::time::Instant;

use common::{check_outcome, random_set, report_line, EPSILONS};
use predmatch::io::{read_predictions, write_predictions, write_report, LogFormat, ReportFormat};
use predmatch::metrics::{
    confidence_histogram, ece, fraction_unmatched, reliability_curve, BinningSpec,
};
use predmatch::rng::StreamRng;
use predmatch::{
    build_report, make_shift_pair, match_greedy, match_indexed, repeat_match, sample_set, sweep,
    CalibrationFn, MatchConfig, MatchCriterion, PairEntry, PredictionRecord, PredictionSet,
    SynthSpec, TargetOrder,
};

const CRITERIA: [MatchCriterion; 2] = [
    MatchCriterion::LabelAndProbability,
    MatchCriterion::ProbabilityOnly,
];

fn shift_pair() -> (PredictionSet, PredictionSet) {
    make_shift_pair(
        &SynthSpec::beta(50_000, 10, 8.0, 2.0, CalibrationFn::Identity),
        &SynthSpec::beta(10_000, 10, 5.0, 3.0, CalibrationFn::Identity),
        20_240_601,
    )
    .unwrap()
}

#[test]
fn matching_invariant_suite() {
    let start = Instant::now();
    let mut rng = StreamRng::from_seed(1);
    let mut instances = 0;
    let mut failures = Vec::new();
    while instances < 1200 {
        let n = 1 + rng.below_usize(300);
        let m = 1 + rng.below_usize(300);
        let k = 1 + rng.below(10) as u32;
        let src = random_set(&mut rng, "s", n, k);
        let tgt = random_set(&mut rng, "t", m, k);
        let cfg = MatchConfig {
            epsilon: EPSILONS[instances % 4],
            criterion: CRITERIA[instances / 4 % 2],
            seed: rng.next_u64(),
            target_order: if instances % 5 == 0 {
                TargetOrder::ShuffledPerSeed
            } else {
                TargetOrder::FileOrder
            },
        };
        let out = match_indexed(&src, &tgt, &cfg).unwrap();
        if let Err(e) = check_outcome(&src, &tgt, &cfg, &out) {
            failures.push(format!("instance {instances}: {e}"));
        }
        instances += 1;
    }
    let secs = start.elapsed().as_secs_f64();
    let pass = failures.is_empty() && secs < 30.0;
    report_line(
        "matching invariant suite",
        pass,
        &format!(
            "{instances} instances, {} violations, {secs:.2}s (limit 30s)",
            failures.len()
        ),
    );
    assert!(pass, "{failures:?}");
}

#[test]
fn oracle_equivalence() {
    let start = Instant::now();
    let mut rng = StreamRng::from_seed(2);
    let mut compared = 0;
    let mut mismatches = 0;
    for instance in 0..100u64 {
        let src = random_set(&mut rng, "s", 500, 10);
        let tgt = random_set(&mut rng, "t", 500, 10);
        for criterion in CRITERIA {
            for epsilon in EPSILONS {
                let cfg = MatchConfig {
                    epsilon,
                    criterion,
                    seed: instance,
                    target_order: TargetOrder::FileOrder,
                };
                if match_indexed(&src, &tgt, &cfg).unwrap()
                    != match_greedy(&src, &tgt, &cfg).unwrap()
                {
                    mismatches += 1;
                }
                compared += 1;
            }
        }
    }
    let secs = start.elapsed().as_secs_f64();
    let pass = mismatches == 0 && secs < 60.0;
    report_line(
        "oracle equivalence",
        pass,
        &format!("{compared} comparisons on 100 instances (500x500), {mismatches} mismatches, {secs:.2}s (limit 60s)"),
    );
    assert!(pass);
}

#[test]
fn self_match_closure() {
    let spec = SynthSpec::beta(10_000, 10, 4.0, 2.0, CalibrationFn::Identity);
    let continuous = sample_set(&spec, 3, "self").unwrap();
    // Coarsened copy with heavy ties: confidences rounded to two decimals.
    let tied = PredictionSet::from_triples(
        "self_tied",
        10,
        continuous.records().iter().map(|r| {
            (
                r.ground_truth.id(),
                r.predicted.id(),
                (r.confidence * 100.0).round() / 100.0,
            )
        }),
    )
    .unwrap();
    let cfg = MatchConfig {
        epsilon: 0.0,
        criterion: MatchCriterion::LabelAndProbability,
        seed: 11,
        target_order: TargetOrder::FileOrder,
    };
    let mut fractions = Vec::new();
    for set in [&continuous, &tied] {
        for out in repeat_match(set, set, &cfg, 10).unwrap() {
            fractions.push(fraction_unmatched(&out));
        }
    }
    let pass = fractions.iter().all(|&f| f == 0.0);
    report_line(
        "self-match closure",
        pass,
        &format!(
            "{} runs over n=10000, K=10; max fraction unmatched {}",
            fractions.len(),
            fractions.iter().cloned().fold(0.0, f64::max)
        ),
    );
    assert!(pass);
}

#[test]
fn synthetic_shift_experiment() {
    let (src, tgt) = shift_pair();
    let start = Instant::now();
    let cfg = MatchConfig {
        epsilon: 0.005,
        criterion: MatchCriterion::ProbabilityOnly,
        seed: 0,
        target_order: TargetOrder::FileOrder,
    };
    let outs = repeat_match(&src, &tgt, &cfg, 10).unwrap();
    let report = build_report(&src, &tgt, &outs, BinningSpec::default()).unwrap();
    let secs = start.elapsed().as_secs_f64();
    let raw_gap = report.accuracy_gap;
    let matched_gap = report.matched_gap.unwrap().mean;
    let pass = (raw_gap - 0.175).abs() <= 0.015 && matched_gap.abs() <= 0.015 && secs < 20.0;
    report_line(
        "synthetic shift experiment",
        pass,
        &format!(
            "raw gap {raw_gap:.4} (0.175 +/- 0.015), matched gap {matched_gap:.4} (|.| <= 0.015), fraction unmatched {:.4}, {secs:.2}s (limit 20s)",
            report.fraction_unmatched.mean
        ),
    );
    assert!(pass);
}

fn narrowing_entries() -> Vec<PairEntry> {
    let calibrations = [
        CalibrationFn::Identity,
        CalibrationFn::Power { gamma: 2.0 },
        CalibrationFn::Affine {
            intercept: 0.1,
            slope: 0.85,
        },
        CalibrationFn::Power { gamma: 0.5 },
    ];
    (0..20u64)
        .map(|i| {
            let cal = calibrations[i as usize % 4];
            let a_src = 4.0 + (i % 5) as f64;
            let b_src = 1.5 + (i % 3) as f64 * 0.5;
            let a_tgt = a_src - 1.5 - (i % 3) as f64 * 0.5;
            let b_tgt = b_src + 0.5 + (i % 4) as f64 * 0.25;
            let (src, tgt) = make_shift_pair(
                &SynthSpec::beta(20_000, 10, a_src, b_src, cal),
                &SynthSpec::beta(5_000, 10, a_tgt, b_tgt, cal),
                1000 + i,
            )
            .unwrap();
            PairEntry::new(format!("model_{i:02}"), src, tgt).unwrap()
        })
        .collect()
}

#[test]
fn narrowing_sweep() {
    let entries = narrowing_entries();
    let rows = sweep(
        &entries,
        &MatchConfig::default(),
        10,
        BinningSpec::default(),
    )
    .unwrap();
    let narrower = rows
        .iter()
        .filter(|r| r.matched_gap.unwrap().abs() <= r.accuracy_gap.abs())
        .count();
    let sorted = rows
        .windows(2)
        .all(|w| w[0].accuracy_src <= w[1].accuracy_src);
    let pass = narrower >= 18 && rows.len() == 20 && sorted;
    report_line(
        "narrowing sweep",
        pass,
        &format!("|matched gap| <= |accuracy gap| in {narrower}/20 rows (need >= 18); rows sorted: {sorted}"),
    );
    assert!(pass);
}

#[test]
fn metrics_arithmetic() {
    let three = [
        PredictionRecord::new(0, 1, 1, 0.9),
        PredictionRecord::new(1, 0, 1, 0.8),
        PredictionRecord::new(2, 2, 2, 0.3),
    ];
    let two_bins = BinningSpec::new(2).unwrap();
    let e = ece(&three, two_bins).unwrap();
    let ece_ok = (e - 0.466_667).abs() <= 1e-6 && (e - 7.0 / 15.0).abs() <= 1e-9;

    let mut rng = StreamRng::from_seed(4);
    let mut density_err: f64 = 0.0;
    let mut partition_ok = true;
    for trial in 0..200 {
        let set = random_set(&mut rng, "h", 1 + trial * 7, 4);
        let bins = BinningSpec::new(1 + trial % 30).unwrap();
        let hist = confidence_histogram(set.records(), bins).unwrap();
        density_err = density_err.max((hist.iter().map(|b| b.density).sum::<f64>() - 1.0).abs());
        let curve = reliability_curve(set.records(), bins).unwrap();
        partition_ok &= curve.iter().map(|b| b.count).sum::<usize>() == set.len();
    }
    let pass = ece_ok && density_err <= 1e-12 && partition_ok;
    report_line(
        "metrics arithmetic",
        pass,
        &format!("ece {e:.9} (0.466667 +/- 1e-9 of 7/15); max |sum density - 1| {density_err:e}; bins partition counts: {partition_ok}"),
    );
    assert!(pass);
}

fn synth_to_report_bytes(dir: &std::path::Path) -> (Vec<u8>, Vec<Vec<u8>>) {
    let src_spec = SynthSpec::beta(5_000, 10, 8.0, 2.0, CalibrationFn::Identity);
    let tgt_spec = SynthSpec::beta(2_000, 10, 5.0, 3.0, CalibrationFn::Identity);
    let src_path = dir.join("src.jsonl");
    let tgt_path = dir.join("tgt.jsonl");
    let src = sample_set(&src_spec, 42, "src").unwrap();
    let tgt = sample_set(&tgt_spec, 43, "tgt").unwrap();
    write_predictions(&src, &src_path).unwrap();
    write_predictions(&tgt, &tgt_path).unwrap();
    let src_back = read_predictions(&src_path, LogFormat::JsonLines, 10).unwrap();
    let tgt_back = read_predictions(&tgt_path, LogFormat::JsonLines, 10).unwrap();
    assert_eq!(src_back.records(), src.records());
    assert_eq!(tgt_back.records(), tgt.records());

    let outs = repeat_match(
        &src_back,
        &tgt_back,
        &MatchConfig::default().with_seed(7),
        10,
    )
    .unwrap();
    let report = build_report(&src_back, &tgt_back, &outs, BinningSpec::default()).unwrap();
    let json = dir.join("report.json");
    write_report(&report, &json, ReportFormat::Json).unwrap();
    let bundle = dir.join("bundle");
    write_report(&report, &bundle, ReportFormat::CsvBundle).unwrap();
    let mut names: Vec<_> = fs::read_dir(&bundle)
        .unwrap()
        .map(|e| e.unwrap().path())
        .collect();
    names.sort();
    (
        fs::read(json).unwrap(),
        names.iter().map(|p| fs::read(p).unwrap()).collect(),
    )
}

#[test]
fn round_trip_and_determinism() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    let (json_a, bundle_a) = synth_to_report_bytes(a.path());
    let (json_b, bundle_b) = synth_to_report_bytes(b.path());
    let pass = json_a == json_b && bundle_a == bundle_b && !json_a.is_empty();
    report_line(
        "round trip and determinism",
        pass,
        &format!(
            "json report {} bytes identical: {}; csv bundle {} files identical: {}",
            json_a.len(),
            json_a == json_b,
            bundle_a.len(),
            bundle_a == bundle_b
        ),
    );
    assert!(pass);
}

#[test]
fn indexed_matcher_performance() {
    let (src, tgt) = shift_pair();
    let mut timings = Vec::new();
    for criterion in CRITERIA {
        let cfg = MatchConfig {
            criterion,
            ..MatchConfig::default()
        };
        let start = Instant::now();
        let out = match_indexed(&src, &tgt, &cfg).unwrap();
        timings.push((
            criterion,
            start.elapsed().as_secs_f64(),
            out.matched_pairs(),
        ));
    }
    let pass = timings.iter().all(|t| t.1 < 5.0);
    report_line(
        "indexed matcher performance",
        pass,
        &format!("50000x10000: {timings:?} (limit 5s each)"),
    );
    assert!(pass);
}
