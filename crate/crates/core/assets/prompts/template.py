def selection(population, k=100, status={}):
    # Each individual exposes:
    #   individual.case_values        per-case squared errors
    #   individual.predicted_values   predictions on the training cases
    #   individual.y                  training targets
    #   len(individual)               number of nodes
    #   individual.height             tree height
    # status["evolutionary_stage"] goes from 0 (first generation) to 1 (last).
    #
    # 1. Choose k // 2 first parents by how well they do on different subsets
    #    of the training cases, structured or random. Overall error and tree
    #    size may also count; repeats are allowed.
    # 2. For each first parent choose a mate whose residuals are weakly
    #    correlated with it. Size may also count.
    # 3. Return the parents interleaved as crossover pairs.
    selected_individuals = [ind for pair in zip(parent_a, parent_b) for ind in pair]
    return selected_individuals
