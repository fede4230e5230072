use super::tournament::run_tournaments;
use super::SelectionRequest;
use rand::Rng;

/// Number of cases on which `mate` is strictly better than `parent`.
pub fn complement_count(parent: &[f64], mate: &[f64]) -> usize {
    parent.iter().zip(mate).filter(|(p, m)| m < p).count()
}

/// Complementary phenotype selection: tournament-selected first parents, each
/// mated with the individual that beats it on the most cases.
pub fn cps<R: Rng + ?Sized>(req: &SelectionRequest<'_>, size: usize, rng: &mut R) -> Vec<usize> {
    let errors = req.mean_errors();
    let firsts = run_tournaments(&errors, req.k / 2, size, rng);
    let mut out = Vec::with_capacity(req.k);
    for a in firsts {
        let parent = req.population[a].case_values();
        let mut best = 0;
        let mut best_count = 0;
        for (i, ind) in req.population.iter().enumerate() {
            let count = complement_count(parent, ind.case_values());
            if count > best_count {
                best = i;
                best_count = count;
            }
        }
        out.push(a);
        out.push(best);
    }
    out
}
