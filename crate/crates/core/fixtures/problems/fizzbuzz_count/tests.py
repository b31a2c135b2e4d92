def test_fizzbuzz_count():
    assert fizzbuzz_count(0) == 0
    assert fizzbuzz_count(1) == 0
    assert fizzbuzz_count(3) == 1
    assert fizzbuzz_count(5) == 2
    assert fizzbuzz_count(15) == 7
    assert fizzbuzz_count(100) == 47
    assert fizzbuzz_count(1000) == 467
