# builtin: cps
import random

import numpy as np


def selection(population, k=100, status={}, tour_size=7):
    errors = np.array([ind.case_values for ind in population])
    means = errors.mean(axis=1)
    size = min(tour_size, len(population))
    selected = []
    for _ in range(k // 2):
        competitors = random.sample(range(len(population)), size)
        a = min(competitors, key=lambda i: means[i])
        mate = int(np.argmax((errors < errors[a]).sum(axis=1)))
        selected += [population[a], population[mate]]
    return selected
