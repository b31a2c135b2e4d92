def check(candidate):
    assert candidate([]) == []
    assert candidate([1]) == [1]
    assert candidate([1, 3, 2, 5, 4]) == [1, 3, 3, 5, 5]
    assert candidate([5, 4, 3]) == [5, 5, 5]
    assert candidate([-2, -1, -3, 0]) == [-2, -1, -1, 0]


check(running_max)
