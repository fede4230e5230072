# builtin: rds_tour
import math
import random

import numpy as np


def selection(population, k=100, status={}, ratio=0.1, tour_size=7):
    errors = np.array([ind.case_values for ind in population])
    n_cases = errors.shape[1]
    cases = random.sample(range(n_cases), max(1, math.ceil(ratio * n_cases)))
    scores = errors[:, cases].mean(axis=1)
    size = min(tour_size, len(population))
    selected = []
    for _ in range(k):
        competitors = random.sample(range(len(population)), size)
        selected.append(population[min(competitors, key=lambda i: scores[i])])
    return selected
