def test_digit_sum():
    assert digit_sum(0) == 0
    assert digit_sum(7) == 7
    assert digit_sum(123) == 6
    assert digit_sum(-456) == 15
    assert digit_sum(9999999999) == 90
    assert digit_sum(1000) == 1
