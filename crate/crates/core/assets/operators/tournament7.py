# builtin: tournament7
import random

import numpy as np


def selection(population, k=100, status={}):
    errors = np.array([np.mean(ind.case_values) for ind in population])
    size = min(7, len(population))
    selected = []
    for _ in range(k):
        competitors = random.sample(range(len(population)), size)
        selected.append(population[min(competitors, key=lambda i: errors[i])])
    return selected
