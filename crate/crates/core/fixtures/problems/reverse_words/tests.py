def check(candidate):
    assert candidate('hello world') == 'world hello'
    assert candidate('a b c') == 'c b a'
    assert candidate('single') == 'single'
    assert candidate('') == ''
    assert candidate('x  y') == 'y  x'
    assert candidate('one two three four') == 'four three two one'


check(reverse_words)
