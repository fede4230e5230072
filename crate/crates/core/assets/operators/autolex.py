# builtin: autolex
import random

import numpy as np


def selection(population, k=100, status={}):
    errors = np.array([ind.case_values for ind in population])
    n_cases = errors.shape[1]
    selected = []
    for _ in range(k):
        pool = np.arange(len(population))
        for case in random.sample(range(n_cases), n_cases):
            if len(pool) <= 1:
                break
            col = errors[pool, case]
            mad = np.median(np.abs(col - np.median(col)))
            pool = pool[col <= col.min() + mad]
        selected.append(population[random.choice(list(pool))])
    return selected
