bool all_positive(std::vector<long long> xs) {
    for (long long x : xs) {
        if (x <= 0) return false;
    }
    return true;
}
