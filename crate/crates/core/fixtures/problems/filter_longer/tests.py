def check(candidate):
    assert candidate([], 3) == []
    assert candidate(['a', 'abcd', 'xyz'], 2) == ['abcd', 'xyz']
    assert candidate(['hello', 'hi'], 0) == ['hello', 'hi']
    assert candidate(['same', 'size'], 4) == []
    assert candidate(['', 'q'], -1) == ['', 'q']


check(filter_longer)
