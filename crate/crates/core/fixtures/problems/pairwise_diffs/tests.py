assert pairwise_diffs([]) == []
assert pairwise_diffs([7]) == []
assert pairwise_diffs([1, 4, 9, 16]) == [3, 5, 7]
assert pairwise_diffs([5, 3, 3, 10]) == [-2, 0, 7]
assert pairwise_diffs([-2, 2]) == [4]
