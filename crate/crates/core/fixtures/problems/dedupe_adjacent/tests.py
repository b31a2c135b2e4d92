def check(candidate):
    assert candidate([]) == []
    assert candidate([1, 1, 1]) == [1]
    assert candidate([1, 2, 2, 3, 1]) == [1, 2, 3, 1]
    assert candidate([4, 5, 6]) == [4, 5, 6]
    assert candidate([-1, -1, 0, 0, -1]) == [-1, 0, -1]


check(dedupe_adjacent)
