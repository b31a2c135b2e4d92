def fizzbuzz_count(n):
    return sum(1 for i in range(1, n + 1) if i % 3 == 0 or i % 5 == 0)
