use super::SelectionRequest;
use rand::seq::index;
use rand::Rng;
use std::collections::HashMap;

/// `Original` keeps empty structured subsets (their MSE is infinite, so the
/// pick degenerates to lowest complexity); `Repaired` drops them and draws
/// extra random subsets instead.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum OmniVariant {
    Original,
    Repaired,
}

/// Case subsets: `half_k / 2` contiguous blocks followed by random blocks
/// drawn without replacement. Random blocks are capped at `n_cases`.
pub fn omni_subsets<R: Rng + ?Sized>(
    n_cases: usize,
    k: usize,
    variant: OmniVariant,
    rng: &mut R,
) -> Vec<Vec<usize>> {
    let half_k = k / 2;
    let ssize = 7.max(n_cases / (2 * half_k).max(1));
    let half_struct = half_k / 2;
    let mut subsets: Vec<Vec<usize>> = (0..half_struct)
        .map(|i| ((i * ssize).min(n_cases)..((i + 1) * ssize).min(n_cases)).collect())
        .collect();
    if variant == OmniVariant::Repaired {
        subsets.retain(|s| !s.is_empty());
    }
    let n_random = half_k - subsets.len();
    let draw = ssize.min(n_cases);
    for _ in 0..n_random {
        subsets.push(index::sample(rng, n_cases, draw).into_vec());
    }
    subsets
}

/// Weight of normalized complexity in the mate score.
pub fn omni_comp_factor(stage: f64) -> f64 {
    0.25 + 0.25 * stage.clamp(0.0, 1.0)
}

pub fn omni<R: Rng + ?Sized>(req: &SelectionRequest<'_>, variant: OmniVariant, rng: &mut R) -> Vec<usize> {
    let subsets = omni_subsets(req.n_cases(), req.k, variant, rng);
    omni_with_subsets(req, &subsets, req.status.stage)
}

/// Pair construction for given subsets. One `(a, b)` pair per subset,
/// interleaved and truncated to `k`.
pub fn omni_with_subsets(req: &SelectionRequest<'_>, subsets: &[Vec<usize>], stage: f64) -> Vec<usize> {
    let stage = stage.clamp(0.0, 1.0);
    let n = req.len();
    let residuals: Vec<Vec<f64>> = req.population.iter().map(|ind| ind.residuals()).collect();
    let mut complexity: Vec<f64> = req
        .population
        .iter()
        .map(|ind| (ind.node_count() + ind.height()) as f64)
        .collect();
    let max_complexity = complexity.iter().copied().fold(1.0, f64::max);
    complexity.iter_mut().for_each(|c| *c /= max_complexity);
    let comp_factor = omni_comp_factor(stage);

    let parent_a: Vec<usize> = subsets
        .iter()
        .map(|s| {
            let mse: Vec<f64> = residuals
                .iter()
                .map(|r| {
                    if s.is_empty() {
                        f64::INFINITY
                    } else {
                        s.iter().map(|&j| r[j] * r[j]).sum::<f64>() / s.len() as f64
                    }
                })
                .collect();
            (0..n)
                .min_by(|&i, &j| {
                    mse[i]
                        .total_cmp(&mse[j])
                        .then(complexity[i].total_cmp(&complexity[j]))
                        .then(i.cmp(&j))
                })
                .expect("non-empty population")
        })
        .collect();

    let norms: Vec<f64> = residuals
        .iter()
        .map(|r| r.iter().map(|v| v * v).sum::<f64>().sqrt() + 1e-12)
        .collect();
    let mut mates: HashMap<usize, usize> = HashMap::new();
    let mut out = Vec::with_capacity(2 * parent_a.len());
    for &a in &parent_a {
        let b = *mates.entry(a).or_insert_with(|| {
            let res_a = &residuals[a];
            let scores: Vec<f64> = (0..n)
                .map(|i| {
                    let cos = if i == a {
                        1.0
                    } else {
                        let dot: f64 = residuals[i].iter().zip(res_a).map(|(x, y)| x * y).sum();
                        dot / (norms[i] * norms[a])
                    };
                    cos.abs() + comp_factor * complexity[i]
                })
                .collect();
            super::argmin(&scores)
        });
        out.push(a);
        out.push(b);
    }
    out.truncate(req.k);
    out
}
