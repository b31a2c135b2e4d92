assert all_positive([])
assert all_positive([1, 2, 3])
assert not all_positive([1, 0, 3])
assert not all_positive([-1])
assert all_positive([5])
