def check(candidate):
    assert candidate([]) == 0
    assert candidate([[5]]) == 5
    assert candidate([[1, 2], [3, 4]]) == 5
    assert candidate([[1, 0, 0], [0, 2, 0], [0, 0, 3]]) == 6
    assert candidate([[-1, 9], [9, -1]]) == -2


check(matrix_trace)
