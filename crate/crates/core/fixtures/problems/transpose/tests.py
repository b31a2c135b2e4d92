def check(candidate):
    assert candidate([]) == []
    assert candidate([[1]]) == [[1]]
    assert candidate([[1, 2], [3, 4]]) == [[1, 3], [2, 4]]
    assert candidate([[1, 2, 3], [4, 5, 6]]) == [[1, 4], [2, 5], [3, 6]]
    assert candidate([[7], [8], [9]]) == [[7, 8, 9]]


check(transpose)
