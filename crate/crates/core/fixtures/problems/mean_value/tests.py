import math

assert math.isclose(mean_value([]), 0.0, abs_tol=1e-6)
assert math.isclose(mean_value([1.0]), 1.0, abs_tol=1e-6)
assert math.isclose(mean_value([1.0, 2.0]), 1.5, abs_tol=1e-6)
assert math.isclose(mean_value([0.5, 0.25, 0.25]), 0.3333333333333333, abs_tol=1e-6)
assert math.isclose(mean_value([-3.5, 3.5, 10.0]), 3.3333333333333335, abs_tol=1e-6)
assert math.isclose(mean_value([0.001, 0.002]), 0.0015, abs_tol=1e-6)
