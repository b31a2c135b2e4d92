assert is_palindrome('')
assert is_palindrome('a')
assert is_palindrome('abba')
assert not is_palindrome('abc')
assert is_palindrome('racecar')
assert not is_palindrome('ab')
assert not is_palindrome('Aa')
