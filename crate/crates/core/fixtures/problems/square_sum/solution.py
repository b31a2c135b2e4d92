def square_sum(xs):
    total = 0
    for x in xs:
        total += x * x
    return total
