# builtin: truncation
import numpy as np


def selection(population, k=100, status={}):
    errors = np.array([np.mean(ind.case_values) for ind in population])
    order = np.argsort(errors, kind="stable")
    return [population[order[i % len(order)]] for i in range(k)]
