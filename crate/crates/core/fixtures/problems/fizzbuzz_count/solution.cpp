long long fizzbuzz_count(long long n) {
    long long c = 0;
    for (long long i = 1; i <= n; i++) {
        if (i % 3 == 0 || i % 5 == 0) c++;
    }
    return c;
}
