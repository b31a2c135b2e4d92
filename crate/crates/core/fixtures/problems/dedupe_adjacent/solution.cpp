std::vector<long long> dedupe_adjacent(std::vector<long long> xs) {
    std::vector<long long> out;
    for (long long x : xs) {
        if (out.empty() || out.back() != x) out.push_back(x);
    }
    return out;
}
