use super::SelectionRequest;
use rand::Rng;

/// Per-individual quantities that drive the tournament draw.
#[derive(Clone, Debug, PartialEq)]
pub struct OmniZeroScores {
    pub errors: Vec<f64>,
    pub base_probs: Vec<f64>,
    pub novelty: Vec<f64>,
    pub novelty_weight: f64,
    pub mixed: Vec<f64>,
}

fn safe_norm(values: &[f64]) -> Vec<f64> {
    let m = values.iter().copied().fold(f64::NEG_INFINITY, f64::max).max(1e-10);
    values.iter().map(|v| v / m).collect()
}

fn variance(values: &[f64]) -> f64 {
    let mean = values.iter().sum::<f64>() / values.len() as f64;
    values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / values.len() as f64
}

fn l2(values: &[f64]) -> f64 {
    values.iter().map(|v| v * v).sum::<f64>().sqrt()
}

/// Shift to nonnegative and normalize; all-zero becomes uniform.
fn shift_normalize(values: &mut [f64]) {
    let min = values.iter().copied().fold(f64::INFINITY, f64::min);
    values.iter_mut().for_each(|v| *v -= min);
    if values.iter().sum::<f64>() == 0.0 {
        values.iter_mut().for_each(|v| *v = 1.0);
    }
    let total: f64 = values.iter().sum();
    values.iter_mut().for_each(|v| *v /= total);
}

/// One minus mean cosine similarity of row-centered vectors, scaled by its max.
fn novelty_score(rows: &[Vec<f64>]) -> Vec<f64> {
    let normed: Vec<Vec<f64>> = rows
        .iter()
        .map(|r| {
            let mean = r.iter().sum::<f64>() / r.len() as f64;
            let centered: Vec<f64> = r.iter().map(|v| v - mean).collect();
            let norm = l2(&centered) + 1e-10;
            centered.into_iter().map(|v| v / norm).collect()
        })
        .collect();
    let n = normed.len() as f64;
    let nov: Vec<f64> = normed
        .iter()
        .map(|a| {
            let sim: f64 = normed
                .iter()
                .map(|b| a.iter().zip(b).map(|(x, y)| x * y).sum::<f64>())
                .sum();
            1.0 - sim / n
        })
        .collect();
    let max = nov.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let scale = if max > 0.0 { max } else { 1.0 };
    nov.into_iter().map(|v| v / scale).collect()
}

pub fn omni_zero_scores(req: &SelectionRequest<'_>) -> OmniZeroScores {
    let stage = req.status.stage;
    let pop = &req.population;
    let errors = req.mean_errors();
    let sizes: Vec<f64> = pop.iter().map(|p| p.node_count() as f64).collect();
    let heights: Vec<f64> = pop.iter().map(|p| p.height() as f64).collect();
    let residuals: Vec<Vec<f64>> = pop.iter().map(|p| p.residuals()).collect();
    let preds: Vec<Vec<f64>> = pop.iter().map(|p| p.predicted_values().to_vec()).collect();

    let norm_size = safe_norm(&sizes);
    let norm_height = safe_norm(&heights);
    let norm_var = safe_norm(&residuals.iter().map(|r| variance(r)).collect::<Vec<_>>());
    let norm_resnorm = safe_norm(&residuals.iter().map(|r| l2(r)).collect::<Vec<_>>());
    let norm_err = safe_norm(&errors);

    let (alpha, beta) = (1.0 - stage, stage);
    let mut base_probs: Vec<f64> = (0..pop.len())
        .map(|i| {
            let complexity = (norm_size[i] + norm_height[i] + norm_var[i] + norm_resnorm[i]) / 4.0;
            beta * (1.0 - norm_err[i]) + alpha * (1.0 - complexity)
        })
        .collect();
    shift_normalize(&mut base_probs);

    let novelty: Vec<f64> = novelty_score(&residuals)
        .into_iter()
        .zip(novelty_score(&preds))
        .map(|(r, p)| 0.5 * (r + p))
        .collect();
    let novelty_weight = 0.35 + 0.3 * (1.0 - stage).powf(0.8);
    let mut mixed: Vec<f64> = base_probs
        .iter()
        .zip(&novelty)
        .map(|(b, v)| (1.0 - novelty_weight) * b + novelty_weight * v)
        .collect();
    shift_normalize(&mut mixed);

    OmniZeroScores {
        errors,
        base_probs,
        novelty,
        novelty_weight,
        mixed,
    }
}

/// Successive weighted draws without replacement. Once the remaining mass is
/// zero, the rest are drawn uniformly from what is left.
fn weighted_sample_without_replacement<R: Rng + ?Sized>(
    weights: &[f64],
    count: usize,
    rng: &mut R,
) -> Vec<usize> {
    let mut remaining: Vec<usize> = (0..weights.len()).collect();
    let mut chosen = Vec::with_capacity(count);
    while chosen.len() < count {
        let mass: f64 = remaining.iter().map(|&i| weights[i]).sum();
        let pos = if mass > 0.0 {
            let target = rng.gen::<f64>() * mass;
            let mut acc = 0.0;
            let mut pick = None;
            for (p, &i) in remaining.iter().enumerate() {
                acc += weights[i];
                if weights[i] > 0.0 && target < acc {
                    pick = Some(p);
                    break;
                }
            }
            pick.unwrap_or_else(|| {
                remaining.iter().rposition(|&i| weights[i] > 0.0).expect("positive mass")
            })
        } else {
            rng.gen_range(0..remaining.len())
        };
        chosen.push(remaining.remove(pos));
    }
    chosen
}

/// Stage-adaptive tournament over a novelty-weighted draw. The winner has the
/// lowest mean error; exact ties go to the highest base probability plus novelty.
pub fn omni_zero<R: Rng + ?Sized>(req: &SelectionRequest<'_>, rng: &mut R) -> Vec<usize> {
    let scores = omni_zero_scores(req);
    let n = req.len();
    let tour_size = (3 + (req.status.stage * 2.0) as usize).min(n);
    (0..req.k)
        .map(|_| {
            let chosen = weighted_sample_without_replacement(&scores.mixed, tour_size, rng);
            let best_err = chosen
                .iter()
                .map(|&i| scores.errors[i])
                .fold(f64::INFINITY, f64::min);
            let mut winner = None;
            let mut winner_score = f64::NEG_INFINITY;
            for &i in &chosen {
                if scores.errors[i] == best_err {
                    let s = scores.base_probs[i] + scores.novelty[i];
                    if winner.is_none() || s > winner_score {
                        winner = Some(i);
                        winner_score = s;
                    }
                }
            }
            winner.expect("non-empty tournament")
        })
        .collect()
}
