use super::SelectionRequest;
use rand::seq::index;
use rand::Rng;

/// `k` independent tournaments on mean case error. Competitors are drawn
/// without replacement (at most the population size); the first-sampled
/// competitor wins ties.
pub fn tournament<R: Rng + ?Sized>(req: &SelectionRequest<'_>, size: usize, rng: &mut R) -> Vec<usize> {
    let errors = req.mean_errors();
    run_tournaments(&errors, req.k, size, rng)
}

pub(crate) fn run_tournaments<R: Rng + ?Sized>(
    scores: &[f64],
    k: usize,
    size: usize,
    rng: &mut R,
) -> Vec<usize> {
    let n = scores.len();
    let size = size.clamp(1, n);
    (0..k)
        .map(|_| {
            let mut competitors = index::sample(rng, n, size).into_iter();
            let mut best = competitors.next().expect("size >= 1");
            for c in competitors {
                if scores[c] < scores[best] {
                    best = c;
                }
            }
            best
        })
        .collect()
}

/// Deterministic truncation: indices sorted by mean case error (stable on
/// index), repeated cyclically until `k` are chosen.
pub fn truncation(req: &SelectionRequest<'_>) -> Vec<usize> {
    let errors = req.mean_errors();
    let mut order: Vec<usize> = (0..errors.len()).collect();
    order.sort_by(|&a, &b| errors[a].total_cmp(&errors[b]));
    order.iter().copied().cycle().take(req.k).collect()
}
