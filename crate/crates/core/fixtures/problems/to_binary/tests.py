assert to_binary(0) == '0'
assert to_binary(1) == '1'
assert to_binary(2) == '10'
assert to_binary(5) == '101'
assert to_binary(255) == '11111111'
assert to_binary(1024) == '10000000000'
