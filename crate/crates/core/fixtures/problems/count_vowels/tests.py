assert count_vowels('') == 0
assert count_vowels('hello') == 2
assert count_vowels('AEIOU') == 5
assert count_vowels('rhythm') == 0
assert count_vowels('a"b\nE') == 2
assert count_vowels("Quote's \\ back") == 4
