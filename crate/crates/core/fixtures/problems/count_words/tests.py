assert count_words('') == 0
assert count_words('one') == 1
assert count_words('two words') == 2
assert count_words('  padded  text ') == 2
assert count_words('tab\tand\nnewline') == 3
