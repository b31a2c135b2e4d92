long long square_sum(std::vector<long long> xs) {
    long long total = 0;
    for (long long x : xs) total += x * x;
    return total;
}
