//! Survival and parent selection over operator candidates.

use super::candidate::{elite_index, rank_order, OperatorCandidate};
use crate::codemetrics::{token_similarity, tokenize};
use rand::seq::SliceRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SurvivalMode {
    #[default]
    DominanceDissimilarity,
    /// Offspring replace parents; the best parent is kept.
    ReplacementElitism,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ParentSelection {
    #[default]
    Semantic,
    Random,
}

/// `a` weakly dominates `b`: no worse fitness and no longer code.
pub fn weakly_dominates(a: &OperatorCandidate, b: &OperatorCandidate) -> bool {
    a.fitness >= b.fitness && a.code_length <= b.code_length
}

/// Sum over each candidate's dominators of the negated code similarity, with
/// the dominator as reference.
pub fn dominance_scores(pool: &[OperatorCandidate]) -> Vec<f64> {
    let tokens: Vec<Vec<String>> = pool.iter().map(|c| tokenize(&c.source)).collect();
    (0..pool.len())
        .map(|j| {
            (0..pool.len())
                .filter(|&i| i != j && weakly_dominates(&pool[i], &pool[j]))
                .map(|i| -token_similarity(&tokens[i], &tokens[j]))
                .sum()
        })
        .collect()
}

/// Keeps the `n` candidates with the highest dominance score. Ties go to
/// higher fitness, then shorter code, then the older id.
pub fn dominance_dissimilarity_survival(pool: Vec<OperatorCandidate>, n: usize) -> Vec<OperatorCandidate> {
    let scores = dominance_scores(&pool);
    let mut order: Vec<usize> = (0..pool.len()).collect();
    order.sort_by(|&a, &b| {
        scores[b]
            .total_cmp(&scores[a])
            .then_with(|| rank_order(&pool[a], &pool[b]))
    });
    order.truncate(n);
    let mut slots: Vec<Option<OperatorCandidate>> = pool.into_iter().map(Some).collect();
    order.into_iter().map(|i| slots[i].take().expect("unique index")).collect()
}

/// The best parent plus the best offspring; parents fill any shortfall.
pub fn replacement_elitism_survival(
    parents: Vec<OperatorCandidate>,
    mut offspring: Vec<OperatorCandidate>,
    n: usize,
) -> Vec<OperatorCandidate> {
    let mut parents = parents;
    parents.sort_by(rank_order);
    offspring.sort_by(rank_order);
    let mut parents = parents.into_iter();
    let mut survivors: Vec<OperatorCandidate> = parents.next().into_iter().collect();
    survivors.extend(offspring.into_iter().take(n.saturating_sub(survivors.len())));
    survivors.extend(parents.take(n.saturating_sub(survivors.len())));
    survivors
}

/// Mean of the coordinate-wise maximum of two score vectors.
pub fn complementarity(a: &[f64], b: &[f64]) -> f64 {
    let d = a.len().min(b.len());
    if d == 0 {
        return 0.0;
    }
    a.iter().zip(b).map(|(x, y)| x.max(*y)).sum::<f64>() / d as f64
}

/// Uniform first parent; the second maximises complementarity with it, ties
/// broken uniformly. Returns pool indices, never equal.
pub fn semantic_parent_selection<R: Rng>(pool: &[OperatorCandidate], rng: &mut R) -> (usize, usize) {
    assert!(pool.len() >= 2, "parent selection needs two candidates");
    let a = rng.gen_range(0..pool.len());
    let mu: Vec<(usize, f64)> = (0..pool.len())
        .filter(|&i| i != a)
        .map(|i| (i, complementarity(&pool[a].score_vector, &pool[i].score_vector)))
        .collect();
    let best = mu.iter().map(|&(_, m)| m).fold(f64::NEG_INFINITY, f64::max);
    let ties: Vec<usize> = mu.iter().filter(|&&(_, m)| m == best).map(|&(i, _)| i).collect();
    (a, *ties.choose(rng).expect("at least one other candidate"))
}

pub fn random_parent_selection<R: Rng>(pool: &[OperatorCandidate], rng: &mut R) -> (usize, usize) {
    assert!(pool.len() >= 2, "parent selection needs two candidates");
    let picked = rand::seq::index::sample(rng, pool.len(), 2);
    (picked.index(0), picked.index(1))
}

/// Best of the pool by fitness, then length, then id.
pub fn elite(pool: &[OperatorCandidate]) -> Option<&OperatorCandidate> {
    elite_index(pool).map(|i| &pool[i])
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::meta::candidate::Provenance;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn cand(id: u64, fitness: f64, lines: usize, body: &str) -> OperatorCandidate {
        let source: String = (0..lines).map(|i| format!("{body}_{i} = {i}\n")).collect();
        let mut c = OperatorCandidate::new(id, source, 0, Provenance::Init);
        c.set_scores(vec![fitness]);
        c
    }

    #[test]
    fn non_dominated_scores_zero() {
        let pool = vec![cand(0, 0.9, 5, "a"), cand(1, 0.5, 2, "b"), cand(2, 0.4, 6, "a")];
        let s = dominance_scores(&pool);
        assert_eq!(s[0], 0.0);
        assert_eq!(s[1], 0.0);
        assert!(s[2] < 0.0);
        let kept = dominance_dissimilarity_survival(pool, 2);
        assert_eq!(kept.iter().map(|c| c.id).collect::<Vec<_>>(), vec![0, 1]);
    }

    #[test]
    fn identical_pool_falls_back_to_ids() {
        let pool: Vec<_> = (0..4).rev().map(|id| cand(id, 0.5, 3, "x")).collect();
        let s = dominance_scores(&pool);
        assert!(s.iter().all(|&v| v == -3.0));
        let kept = dominance_dissimilarity_survival(pool, 2);
        assert_eq!(kept.iter().map(|c| c.id).collect::<Vec<_>>(), vec![0, 1]);
    }

    #[test]
    fn complementary_partner_is_chosen() {
        let mut a = cand(0, 0.0, 1, "a");
        a.set_scores(vec![1.0, 0.0]);
        let mut same = cand(1, 0.0, 1, "b");
        same.set_scores(vec![1.0, 0.0]);
        let mut other = cand(2, 0.0, 1, "c");
        other.set_scores(vec![0.0, 1.0]);
        let pool = vec![a, same, other];
        assert_eq!(complementarity(&pool[0].score_vector, &pool[1].score_vector), 0.5);
        assert_eq!(complementarity(&pool[0].score_vector, &pool[2].score_vector), 1.0);
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        for _ in 0..50 {
            let (x, y) = semantic_parent_selection(&pool, &mut rng);
            assert_ne!(x, y);
            if x == 0 {
                assert_eq!(y, 2);
            }
        }
    }

    #[test]
    fn pair_pool_picks_the_other() {
        let pool = vec![cand(0, 0.1, 1, "a"), cand(1, 0.2, 1, "b")];
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for _ in 0..20 {
            let (a, b) = semantic_parent_selection(&pool, &mut rng);
            assert_eq!(a + b, 1);
            let (a, b) = random_parent_selection(&pool, &mut rng);
            assert_eq!(a + b, 1);
        }
    }

    #[test]
    fn replacement_keeps_best_parent() {
        let parents = vec![cand(0, 0.2, 3, "p"), cand(1, 0.9, 3, "q")];
        let offspring = vec![cand(2, 0.1, 9, "r"), cand(3, 0.0, 9, "s"), cand(4, 0.3, 9, "t")];
        let kept = replacement_elitism_survival(parents, offspring, 3);
        assert_eq!(kept.iter().map(|c| c.id).collect::<Vec<_>>(), vec![1, 4, 2]);
    }
}
