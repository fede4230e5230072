# builtin: boltzmann
import numpy as np


def selection(population, k=100, status={}, tau0=0.1):
    errors = np.array([np.mean(ind.case_values) for ind in population])
    spread = errors.max() - errors.min()
    scores = (errors.max() - errors) / spread if spread > 0 else np.zeros(len(errors))
    stage = status.get("evolutionary_stage", 0)
    temperature = max(tau0 * (1 - stage), 1e-6)
    weights = np.exp((scores - scores.max()) / temperature)
    idx = np.random.choice(len(population), size=k, p=weights / weights.sum())
    return [population[i] for i in idx]
