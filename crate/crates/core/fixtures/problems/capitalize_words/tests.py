def check(candidate):
    assert candidate('') == ''
    assert candidate('hello world') == 'Hello World'
    assert candidate('a b') == 'A B'
    assert candidate('already Done') == 'Already Done'
    assert candidate('x1 y2  z3') == 'X1 Y2  Z3'


check(capitalize_words)
