def check(candidate):
    assert candidate(1, 2) == 3
    assert candidate(0, 0) == 0
    assert candidate(-5, 3) == -2
    assert candidate(100, -100) == 0
    assert candidate(123456789, 987654321) == 1111111110
    assert candidate(-7, -8) == -15


check(add_two)
