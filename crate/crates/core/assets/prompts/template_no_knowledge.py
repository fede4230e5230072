def selection(population, k=100, status={}):
    # Each individual exposes:
    #   individual.case_values        per-case squared errors
    #   individual.predicted_values   predictions on the training cases
    #   individual.y                  training targets
    #   len(individual)               number of nodes
    #   individual.height             tree height
    # status["evolutionary_stage"] goes from 0 (first generation) to 1 (last).

    # selection logic goes here
    return selected_individuals
