assert square_sum([]) == 0
assert square_sum([3]) == 9
assert square_sum([1, 2, 3]) == 14
assert square_sum([-4, 4]) == 32
assert square_sum([10, 0, -1]) == 101
