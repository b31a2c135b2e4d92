import math

assert math.isclose(celsius_to_fahrenheit(0.0), 32.0, abs_tol=1e-6)
assert math.isclose(celsius_to_fahrenheit(100.0), 212.0, abs_tol=1e-6)
assert math.isclose(celsius_to_fahrenheit(-40.0), -40.0, abs_tol=1e-6)
assert math.isclose(celsius_to_fahrenheit(37.5), 99.5, abs_tol=1e-6)
assert math.isclose(celsius_to_fahrenheit(-273.15), -459.66999999999996, abs_tol=1e-6)
