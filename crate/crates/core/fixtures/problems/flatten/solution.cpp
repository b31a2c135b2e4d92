std::vector<long long> flatten(std::vector<std::vector<long long>> rows) {
    std::vector<long long> out;
    for (const auto& row : rows) {
        for (long long x : row) out.push_back(x);
    }
    return out;
}
