assert most_frequent_char('') == ''
assert most_frequent_char('a') == 'a'
assert most_frequent_char('abca') == 'a'
assert most_frequent_char('zzyy') == 'y'
assert most_frequent_char('mississippi') == 'i'
assert most_frequent_char('baab') == 'a'
