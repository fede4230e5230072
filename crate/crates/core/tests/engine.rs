use metasr_core::dataio::{make_split, synthetic_suite, RawDataset, SyntheticProblem};
use metasr_core::engine::{run_sr, SRConfig};
use metasr_core::selection::{Builtin, SelectionOperator, BUILTIN_NAMES};
use ndarray::{Array1, Array2};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use std::time::Instant;

fn identity_dataset() -> RawDataset {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let x = Array2::from_shape_fn((60, 1), |_| rng.gen_range(-1.0..1.0));
    let y = Array1::from_iter(x.column(0).iter().copied());
    RawDataset {
        name: "identity".into(),
        feature_names: vec!["x0".into()],
        x,
        y,
    }
}

fn small_config(seed: u64, generations: usize) -> SRConfig {
    SRConfig {
        population_size: 40,
        generations,
        seed,
        ..SRConfig::default()
    }
}

#[test]
fn identity_target_is_solved_by_linear_scaling() {
    let split = make_split(&identity_dataset(), 1).unwrap();
    let config = SRConfig {
        generations: 1,
        ..SRConfig::default()
    };
    let result = run_sr(&split, &Builtin::Tournament { size: 7 }, &config).unwrap();
    assert!(result.best.train_r2() > 1.0 - 1e-9, "r2 {}", result.best.train_r2());
    assert!(result.validation_r2 > 1.0 - 1e-9);
}

#[test]
fn every_evaluated_tree_is_unique() {
    let split = make_split(&SyntheticProblem::Product.generate(80, 0.0, 2), 2).unwrap();
    for name in ["tournament7", "omni_r", "truncation"] {
        let result = run_sr(&split, &Builtin::from_name(name).unwrap(), &small_config(3, 15)).unwrap();
        assert_eq!(result.evaluations, 40 * 16);
        assert_eq!(result.unique_genomes, result.evaluations, "{name}");
    }
}

#[test]
fn seeded_runs_repeat_exactly() {
    let split = make_split(&SyntheticProblem::Sine.generate(80, 0.0, 4), 4).unwrap();
    for name in BUILTIN_NAMES {
        let op = Builtin::from_name(name).unwrap();
        let a = run_sr(&split, &op, &small_config(9, 6)).unwrap();
        let b = run_sr(&split, &op, &small_config(9, 6)).unwrap();
        assert_eq!(a.history, b.history, "{}", op.name());
        assert_eq!(a.best.genome, b.best.genome);
    }
}

#[test]
fn elite_error_never_increases() {
    let split = make_split(&SyntheticProblem::Rational.generate(100, 0.05, 6), 6).unwrap();
    let result = run_sr(&split, &Builtin::Omni, &small_config(1, 25)).unwrap();
    assert_eq!(result.history.len(), 26);
    assert!(result
        .history
        .windows(2)
        .all(|w| w[1].best_train_error <= w[0].best_train_error));
}

#[test]
fn rejects_odd_population() {
    let split = make_split(&identity_dataset(), 1).unwrap();
    let config = SRConfig {
        population_size: 9,
        ..SRConfig::default()
    };
    assert!(run_sr(&split, &Builtin::Truncation, &config).is_err());
}

#[test]
#[ignore = "timing probe"]
fn full_size_run_timing() {
    for raw in synthetic_suite(0, 500) {
        let split = make_split(&raw, 0).unwrap();
        for name in ["tournament7", "omni_r"] {
            let start = Instant::now();
            let r = run_sr(&split, &Builtin::from_name(name).unwrap(), &SRConfig::default()).unwrap();
            println!(
                "{} {name}: r2 {:.4} size {} in {:.2?}",
                raw.name,
                r.validation_r2,
                r.final_tree_size(),
                start.elapsed()
            );
        }
    }
}
