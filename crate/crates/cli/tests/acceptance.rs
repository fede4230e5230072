//! One test per acceptance criterion, each printing a PASS or FAIL line.

use metasr_core::codemetrics::code_similarity;
use metasr_core::dataio::SyntheticProblem;
use metasr_core::dataio::make_split;
use metasr_core::engine::{run_sr, SRConfig};
use metasr_core::fitness::{fit_linear_scaling, loocv_case_errors, DEFAULT_LAMBDA};
use metasr_core::llm::{LlmGateway, MockGenerator};
use metasr_core::meta::*;
use metasr_core::selection::{
    boltzmann_probabilities, boltzmann_temperature, omni_comp_factor, omni_subsets, omni_with_subsets, Builtin,
    EvolutionStatus, OmniVariant, Phenotype, SelectionError, SelectionOperator, SelectionRequest,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use std::collections::BTreeSet;
use std::path::{Path, PathBuf};
use std::process::Command;
use std::sync::Arc;
use std::time::{Duration, Instant};

fn verdict(n: usize, title: &str, ok: bool, detail: String) {
    println!("criterion {n:>2} {} {title}: {detail}", if ok { "PASS" } else { "FAIL" });
    assert!(ok, "criterion {n} failed: {detail}");
}

#[test]
fn criterion_01_loocv_matches_refits() {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let mut worst: f64 = 0.0;
    for _ in 0..100 {
        let n = rng.gen_range(3..=30);
        let z: Vec<f64> = (0..n).map(|_| rng.gen_range(-3.0..3.0)).collect();
        let y: Vec<f64> = z.iter().map(|v| 2.0 * v - 1.0 + rng.gen_range(-1.0..1.0)).collect();
        let fast = loocv_case_errors(&fit_linear_scaling(&z, &y, DEFAULT_LAMBDA));
        for j in 0..n {
            // Ridge normal equations on the other n - 1 points.
            let (mut szz, mut sz, mut m, mut szy, mut sy) = (0.0, 0.0, 0.0, 0.0, 0.0);
            for i in (0..n).filter(|&i| i != j) {
                szz += z[i] * z[i];
                sz += z[i];
                m += 1.0;
                szy += z[i] * y[i];
                sy += y[i];
            }
            let (a11, a12, a22) = (szz + DEFAULT_LAMBDA, sz, m + DEFAULT_LAMBDA);
            let det = a11 * a22 - a12 * a12;
            let alpha = (szy * a22 - a12 * sy) / det;
            let beta = (a11 * sy - a12 * szy) / det;
            let brute = (y[j] - alpha * z[j] - beta).powi(2);
            worst = worst.max((fast[j] - brute).abs() / brute.abs().max(1e-9));
        }
    }
    let secs = start.elapsed().as_secs_f64();
    verdict(
        1,
        "LOOCV shortcut vs brute-force refits",
        worst <= 1e-6 && secs < 10.0,
        format!("100 instances, worst relative error {worst:.2e}, {secs:.2}s"),
    );
}

const WORDS: [&str; 8] = ["x", "y", "return", "if", "for", "np.mean", "+", "k"];

fn random_candidate(rng: &mut ChaCha8Rng, id: u64, dims: usize) -> OperatorCandidate {
    let lines = rng.gen_range(1..8);
    let source: String = (0..lines)
        .map(|_| {
            let words: Vec<&str> = (0..rng.gen_range(1..5)).map(|_| WORDS[rng.gen_range(0..WORDS.len())]).collect();
            format!("{}\n", words.join(" "))
        })
        .collect();
    let mut c = OperatorCandidate::new(id, source, 0, Provenance::Init);
    c.set_scores((0..dims).map(|_| rng.gen_range(0..4) as f64 / 4.0).collect());
    c
}

#[test]
fn criterion_02_survival_matches_exhaustive_oracle() {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let mut mismatches = 0;
    for _ in 0..200 {
        let size = rng.gen_range(2..=24);
        let n = rng.gen_range(1..=size);
        let pool: Vec<_> = (0..size as u64).map(|id| random_candidate(&mut rng, id * 7 % 31, 3)).collect();
        let s: Vec<f64> = (0..size)
            .map(|j| {
                (0..size)
                    .filter(|&i| i != j && pool[i].fitness >= pool[j].fitness && pool[i].code_length <= pool[j].code_length)
                    .map(|i| -code_similarity(&pool[i].source, &pool[j].source))
                    .sum()
            })
            .collect();
        let key = |i: usize| (s[i], pool[i].fitness, -(pool[i].code_length as f64), -(pool[i].id as f64));
        let expected: BTreeSet<u64> = (0..size)
            .filter(|&j| (0..size).filter(|&i| key(i) > key(j)).count() < n)
            .map(|j| pool[j].id)
            .collect();
        let got: BTreeSet<u64> = dominance_dissimilarity_survival(pool, n).iter().map(|c| c.id).collect();
        if got != expected {
            mismatches += 1;
        }
    }
    verdict(2, "survival vs exhaustive recomputation", mismatches == 0, format!("200 pools, {mismatches} mismatches"));
}

#[test]
fn criterion_03_complementarity_oracle() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let mut misses = 0;
    for _ in 0..500 {
        let size = rng.gen_range(2..=12);
        let dims = rng.gen_range(1..=5);
        let pool: Vec<_> = (0..size as u64).map(|id| random_candidate(&mut rng, id, dims)).collect();
        let (a, b) = semantic_parent_selection(&pool, &mut rng);
        let mu = |i: usize| complementarity(&pool[a].score_vector, &pool[i].score_vector);
        let best = (0..size).filter(|&i| i != a).map(mu).fold(f64::NEG_INFINITY, f64::max);
        if a == b || mu(b) != best {
            misses += 1;
        }
    }
    let mut constructed = Vec::new();
    for (id, scores) in [(0, vec![1.0, 0.0]), (1, vec![1.0, 0.0]), (2, vec![0.0, 1.0])] {
        let mut c = OperatorCandidate::new(id, format!("c{id}\n"), 0, Provenance::Init);
        c.set_scores(scores);
        constructed.push(c);
    }
    let mut wrong = 0;
    for _ in 0..200 {
        let (a, b) = semantic_parent_selection(&constructed, &mut rng);
        if a != 2 && b != 2 {
            wrong += 1;
        }
    }
    verdict(
        3,
        "second parent maximises complementarity",
        misses == 0 && wrong == 0,
        format!("500 pools with {misses} misses; constructed [1,0] vs {{[1,0],[0,1]}} wrong {wrong}/200"),
    );
}

const Y: [f64; 20] = [
    -0.83, 1.06, 0.49, 1.83, 0.0, 1.89, -0.11, -0.78, 1.47, -1.93, 1.44, 1.65, 0.29, -1.86, 1.77, 2.0, -0.19, 0.65,
    1.61, 0.38,
];

const PREDS: [[f64; 20]; 5] = [
    [
        -0.74, 0.73, -0.06, 1.72, -0.33, 1.57, 0.16, -0.6, 1.93, -1.75, 1.2, 2.01, 0.55, -1.61, 1.21, 2.03, 0.21, 0.3,
        2.21, 0.55,
    ],
    [
        -0.91, 1.11, 1.17, 1.98, -0.29, 2.39, -0.52, -1.29, 1.76, -2.3, 0.86, 1.2, 0.13, -2.16, 0.74, 1.69, -1.0, 0.51,
        1.61, -0.12,
    ],
    [
        -1.02, 0.89, 0.5, 1.99, 0.16, 1.71, -0.29, -0.7, 1.11, -1.86, 2.76, 2.9, 1.26, -0.13, 3.16, 3.58, 1.6, 2.23,
        3.1, 2.03,
    ],
    [
        -0.37, -0.52, 1.75, 2.13, -1.48, 2.04, 0.53, -0.9, 0.14, -2.13, 1.32, 2.06, -0.67, -1.84, 2.69, 2.92, -1.19,
        -0.29, 0.47, 0.84,
    ],
    [
        -1.02, 1.56, 0.95, 1.97, 0.11, 2.17, -0.05, -0.71, 1.14, -1.51, 1.49, 2.41, -0.37, -1.68, 1.35, 2.26, -1.07,
        0.67, 1.37, 1.35,
    ],
];

#[test]
fn criterion_04_omni_golden_trace() {
    let y: Arc<[f64]> = Y.to_vec().into();
    let shapes = [(7, 5), (2, 1), (5, 4), (1, 0), (6, 2)];
    let pop: Vec<Phenotype> = PREDS
        .iter()
        .zip(shapes)
        .map(|(p, (nodes, height))| Phenotype {
            case_values: Y.iter().zip(p).map(|(a, b)| (a - b).powi(2)).collect(),
            predicted_values: p.to_vec(),
            y: y.clone(),
            node_count: nodes,
            height,
        })
        .collect();
    let subsets = vec![(0..7).collect::<Vec<_>>(), vec![3, 8, 11, 14, 15, 17, 19]];
    let mut ok = true;
    let mut traces = Vec::new();
    for (stage, expected) in [(0.0, [2, 3, 0, 1]), (0.5, [2, 3, 0, 1]), (1.0, [2, 3, 0, 3])] {
        let req = SelectionRequest::from_slice(&pop, 4, EvolutionStatus::at_stage(stage), 0).unwrap();
        let got = omni_with_subsets(&req, &subsets, stage);
        ok &= got == expected;
        traces.push(format!("stage {stage}: {got:?}"));
    }
    let (lo, hi) = (omni_comp_factor(0.0), omni_comp_factor(1.0));
    ok &= lo == 0.25 && hi == 0.5;
    verdict(
        4,
        "Omni hand-traced instance",
        ok,
        format!("{}; comp_factor {lo} / {hi}", traces.join(", ")),
    );
}

fn random_population(rng: &mut ChaCha8Rng, n: usize, cases: usize) -> Vec<Phenotype> {
    let y: Arc<[f64]> = (0..cases).map(|_| rng.gen_range(-1.0..1.0)).collect::<Vec<_>>().into();
    (0..n)
        .map(|_| {
            let predicted_values: Vec<f64> = y.iter().map(|v| v + rng.gen_range(-0.5..0.5)).collect();
            Phenotype {
                case_values: y.iter().zip(&predicted_values).map(|(a, b)| (a - b).powi(2)).collect(),
                predicted_values,
                y: y.clone(),
                node_count: rng.gen_range(1..40),
                height: rng.gen_range(0..10),
            }
        })
        .collect()
}

#[test]
fn criterion_05_omni_r_repair() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let original = omni_subsets(8, 100, OmniVariant::Original, &mut rng.clone());
    let repaired = omni_subsets(8, 100, OmniVariant::Repaired, &mut rng);
    let empty_original = original.iter().filter(|s| s.is_empty()).count();
    let empty_repaired = repaired.iter().filter(|s| s.is_empty()).count();

    let mut rng = ChaCha8Rng::seed_from_u64(55);
    let (mut compared, mut differ) = (0, 0);
    while compared < 100 {
        let k = 2 * rng.gen_range(1..=30);
        let cases = rng.gen_range(8..=150);
        let probe = omni_subsets(cases, k, OmniVariant::Original, &mut ChaCha8Rng::seed_from_u64(0));
        if probe.iter().any(Vec::is_empty) {
            continue;
        }
        let n = rng.gen_range(2..=30);
        let pop = random_population(&mut rng, n, cases);
        let req = SelectionRequest::from_slice(&pop, k, EvolutionStatus::at_stage(rng.gen()), rng.gen()).unwrap();
        if Builtin::Omni.select(&req).unwrap() != Builtin::OmniR.select(&req).unwrap() {
            differ += 1;
        }
        compared += 1;
    }
    verdict(
        5,
        "Omni-R repair",
        empty_original >= 1 && empty_repaired == 0 && differ == 0,
        format!(
            "8 cases: omni {empty_original} empty subsets, omni_r {empty_repaired}; {differ}/100 seeded configs differ"
        ),
    );
}

#[test]
fn criterion_06_boltzmann() {
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let mut worst: f64 = 0.0;
    for _ in 0..1000 {
        let n = rng.gen_range(1..200);
        let scores: Vec<f64> = (0..n).map(|_| rng.gen_range(0.0..1.0)).collect();
        let t = boltzmann_temperature(0.1, rng.gen_range(0..100), 100);
        let p = boltzmann_probabilities(&scores, t);
        worst = worst.max((p.iter().sum::<f64>() - 1.0).abs());
    }
    let t0 = boltzmann_temperature(0.1, 0, 50);
    let cycle: Vec<f64> = (0..50).map(|g| boltzmann_temperature(0.1, g, 50)).collect();
    let decreasing = cycle.windows(2).all(|w| w[1] < w[0]);
    verdict(
        6,
        "Boltzmann probabilities and schedule",
        worst <= 1e-12 && t0 == 0.1 && decreasing,
        format!("worst |sum-1| {worst:.1e}; tau(0) {t0}; strictly decreasing over a cycle: {decreasing}"),
    );
}

fn bloat_lengths(survival: SurvivalMode) -> Vec<f64> {
    let dir = tempfile::tempdir().unwrap();
    let mut gateway = LlmGateway::live(Box::new(MockGenerator::new(17).with_inflation(10, 30)));
    let evaluator = FlatEvaluator { scores: vec![0.5, 0.5] };
    let config = MetaConfig {
        generations: 10,
        survival,
        seed: 7,
        ..MetaConfig::default()
    };
    run_meta(config, &mut gateway, &evaluator, OperatorFactory::new(dir.path()))
        .unwrap()
        .log
        .iter()
        .map(|r| r.mean_code_length)
        .collect()
}

#[test]
fn criterion_07_bloat_control() {
    let start = Instant::now();
    let controlled = bloat_lengths(SurvivalMode::DominanceDissimilarity);
    let replaced = bloat_lengths(SurvivalMode::ReplacementElitism);
    let c = controlled.last().unwrap() / controlled[0];
    let r = replaced.last().unwrap() / replaced[0];
    let secs = start.elapsed().as_secs_f64();
    verdict(
        7,
        "length control under an inflating generator",
        c <= 1.5 && r > 2.0 && secs < 300.0,
        format!("N=20, 10 generations: dominance-dissimilarity {c:.2}x, replacement+elitism {r:.2}x, {secs:.1}s"),
    );
}

fn median(mut v: Vec<f64>) -> f64 {
    v.sort_by(f64::total_cmp);
    let m = v.len() / 2;
    if v.len() % 2 == 1 {
        v[m]
    } else {
        (v[m - 1] + v[m]) / 2.0
    }
}

#[test]
fn criterion_08_desk_scale_comparison() {
    use rayon::prelude::*;
    let start = Instant::now();
    let mut r2_wins = 0;
    let mut size_ok = true;
    let mut lines = Vec::new();
    for problem in SyntheticProblem::ALL {
        let split = make_split(&problem.generate(500, problem.default_noise(), 0), 0).unwrap();
        let runs = |op: Builtin| -> (f64, f64) {
            let results: Vec<(f64, f64)> = (0..10u64)
                .into_par_iter()
                .map(|seed| {
                    let config = SRConfig {
                        seed,
                        ..SRConfig::default()
                    };
                    let r = run_sr(&split, &op, &config).unwrap();
                    (r.validation_r2, r.final_tree_size() as f64)
                })
                .collect();
            (
                median(results.iter().map(|r| r.0).collect()),
                median(results.iter().map(|r| r.1).collect()),
            )
        };
        let (omni_r2, omni_size) = runs(Builtin::OmniR);
        let (tour_r2, tour_size) = runs(Builtin::Tournament { size: 7 });
        if omni_r2 >= tour_r2 {
            r2_wins += 1;
        }
        size_ok &= omni_size <= tour_size;
        lines.push(format!(
            "{}: R2 {omni_r2:.4} vs {tour_r2:.4}, size {omni_size} vs {tour_size}",
            problem.name()
        ));
    }
    let secs = start.elapsed().as_secs_f64();
    verdict(
        8,
        "omni_r vs tournament7 on the synthetic suite",
        r2_wins >= 3 && size_ok && secs < 1800.0,
        format!("R2 wins {r2_wins}/4; {}; {secs:.0}s", lines.join("; ")),
    );
}

fn fixture(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("fixtures/replay").join(name)
}

fn replay(out: &Path, extra: &[&str]) -> std::process::Output {
    Command::new(env!("CARGO_BIN_EXE_metasr"))
        .args(["meta", "run", "--mode", "replay", "--manifest"])
        .arg(fixture("manifest.json"))
        .arg("--config")
        .arg(fixture("meta_config.json"))
        .arg("--transcript")
        .arg(fixture("transcript.jsonl"))
        .arg("--out")
        .arg(out)
        .args(extra)
        .output()
        .expect("binary runs")
}

#[test]
fn criterion_09_end_to_end_replay() {
    let dir = tempfile::tempdir().unwrap();
    let (a, b) = (dir.path().join("a"), dir.path().join("b"));
    let first = replay(&a, &[]);
    let second = replay(&b, &[]);
    let cp_a = std::fs::read(a.join("checkpoint.json")).unwrap_or_default();
    let cp_b = std::fs::read(b.join("checkpoint.json")).unwrap_or_default();
    let state = MetaCheckpoint::load(&a.join("checkpoint.json")).unwrap();
    let monotone = state.log.windows(2).all(|w| w[1].best_ever_fitness >= w[0].best_ever_fitness);
    let printed = String::from_utf8_lossy(&first.stdout).contains(&state.best_ever.source);
    let ok = first.status.success()
        && second.status.success()
        && !cp_a.is_empty()
        && cp_a == cp_b
        && state.generation == 5
        && state.pool.len() == 4
        && monotone
        && printed;
    verdict(
        9,
        "shipped transcript replays deterministically",
        ok,
        format!(
            "exit {:?}/{:?}, identical checkpoints {}, {} generations, best-ever non-decreasing {monotone}",
            first.status.code(),
            second.status.code(),
            cp_a == cp_b,
            state.generation
        ),
    );
}

struct ShortByOne;

impl SelectionOperator for ShortByOne {
    fn name(&self) -> String {
        "short_by_one".into()
    }
    fn select(&self, req: &SelectionRequest<'_>) -> Result<Vec<usize>, SelectionError> {
        Ok(vec![0; req.k - 1])
    }
}

struct Sleeper;

impl SelectionOperator for Sleeper {
    fn name(&self) -> String {
        "sleeper".into()
    }
    fn select(&self, req: &SelectionRequest<'_>) -> Result<Vec<usize>, SelectionError> {
        std::thread::sleep(Duration::from_secs(301));
        Ok(vec![0; req.k])
    }
}

#[test]
fn criterion_10_synthetic_gate() {
    let config = GateConfig {
        timeout_secs: 2.0,
        ..GateConfig::default()
    };
    let pass = gate_one(Arc::new(Builtin::Tournament { size: 3 }), &config);
    let short = gate_one(Arc::new(ShortByOne), &config);
    let start = Instant::now();
    let slow = gate_one(Arc::new(Sleeper), &config);
    let waited = start.elapsed().as_secs_f64();
    let ok = pass.passed()
        && short.reason() == Some(RejectReason::BadOutput)
        && slow.reason() == Some(RejectReason::Timeout)
        && waited < 4.0;
    verdict(
        10,
        "synthetic gate examples",
        ok,
        format!(
            "tournament {}; k-1 output {:?}; sleeping {:?} after {waited:.1}s (2s ceiling)",
            pass.reason().map_or("pass".to_string(), |r| format!("{r:?}")),
            short.reason(),
            slow.reason()
        ),
    );
}
