import numpy as np
import random

def selection(individuals, k=100, tour_size=3):
    # Tournament selection
    # Compute mean error for each individual
    mean_errors = [np.mean(ind.case_values) for ind in individuals]
    selected_individuals = []

    # Select `k` individuals
    for _ in range(k):
        # Randomly select competitors
        competitors = random.sample(range(len(individuals)), tour_size)
        # Select the one with the lowest error
        best_idx = min(competitors, key=lambda idx: mean_errors[idx])
        selected_individuals.append(individuals[best_idx])

    return selected_individuals
