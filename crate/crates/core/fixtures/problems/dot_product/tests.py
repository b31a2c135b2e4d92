assert abs(dot_product([], []) - 0) < 1e-6
assert abs(dot_product([1.0], [2.0]) - 2.0) < 1e-6
assert abs(dot_product([1.5, 2.0], [2.0, 0.25]) - 3.5) < 1e-6
assert abs(dot_product([-1.0, 1.0, 3.0], [1.0, 1.0, 0.5]) - 1.5) < 1e-6
assert abs(dot_product([0.1, 0.2], [0.3, 0.4]) - 0.11000000000000001) < 1e-6
