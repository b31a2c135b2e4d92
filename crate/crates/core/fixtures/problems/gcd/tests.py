def check(candidate):
    assert candidate(12, 18) == 6
    assert candidate(7, 13) == 1
    assert candidate(0, 5) == 5
    assert candidate(5, 0) == 5
    assert candidate(-24, 36) == 12
    assert candidate(1000000007, 3) == 1


check(gcd)
