def mean_value(xs):
    if not xs:
        return 0.0
    return sum(xs) / len(xs)
