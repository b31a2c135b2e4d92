assert not is_prime(0)
assert not is_prime(1)
assert is_prime(2)
assert not is_prime(9)
assert is_prime(17)
assert not is_prime(25)
assert is_prime(7919)
assert not is_prime(-3)
