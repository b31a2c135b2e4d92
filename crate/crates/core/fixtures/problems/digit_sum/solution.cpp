long long digit_sum(long long n) {
    if (n < 0) n = -n;
    long long total = 0;
    while (n > 0) {
        total += n % 10;
        n /= 10;
    }
    return total;
}
