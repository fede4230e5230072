use super::SelectionRequest;
use rand::seq::SliceRandom;
use rand::Rng;

fn median(values: &mut [f64]) -> f64 {
    let n = values.len();
    debug_assert!(n > 0);
    let mid = n / 2;
    let (_, upper, _) = values.select_nth_unstable_by(mid, f64::total_cmp);
    let upper = *upper;
    if n % 2 == 1 {
        upper
    } else {
        let lower = values[..mid]
            .iter()
            .copied()
            .fold(f64::NEG_INFINITY, f64::max);
        0.5 * (lower + upper)
    }
}

/// Median of absolute deviations from the median.
pub fn median_absolute_deviation(values: &[f64]) -> f64 {
    let mut scratch = values.to_vec();
    let m = median(&mut scratch);
    let mut deviations: Vec<f64> = values.iter().map(|v| (v - m).abs()).collect();
    median(&mut deviations)
}

/// Automatic epsilon-lexicase selection with dynamic epsilon.
///
/// For each pick, cases are visited in a fresh random order; on each case the
/// pool keeps candidates within `best + MAD` of the pool's errors on that
/// case. Remaining ties after all cases are broken uniformly.
pub fn auto_epsilon_lexicase<R: Rng + ?Sized>(req: &SelectionRequest<'_>, rng: &mut R) -> Vec<usize> {
    let n = req.len();
    let mut cases: Vec<usize> = (0..req.n_cases()).collect();
    let mut errors = Vec::with_capacity(n);
    (0..req.k)
        .map(|_| {
            let mut pool: Vec<usize> = (0..n).collect();
            cases.shuffle(rng);
            for &case in &cases {
                if pool.len() <= 1 {
                    break;
                }
                errors.clear();
                errors.extend(pool.iter().map(|&i| req.population[i].case_values()[case]));
                let best = errors.iter().copied().fold(f64::INFINITY, f64::min);
                let threshold = best + median_absolute_deviation(&errors);
                let mut kept = 0;
                for j in 0..pool.len() {
                    if errors[j] <= threshold {
                        pool[kept] = pool[j];
                        kept += 1;
                    }
                }
                pool.truncate(kept);
            }
            pool[rng.gen_range(0..pool.len())]
        })
        .collect()
}
