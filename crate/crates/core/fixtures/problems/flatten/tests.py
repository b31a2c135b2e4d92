assert flatten([]) == []
assert flatten([[]]) == []
assert flatten([[1, 2], [3]]) == [1, 2, 3]
assert flatten([[1], [], [2, 3, 4]]) == [1, 2, 3, 4]
assert flatten([[5, 6, 7]]) == [5, 6, 7]
