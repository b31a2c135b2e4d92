std::vector<long long> pairwise_diffs(std::vector<long long> xs) {
    std::vector<long long> out;
    for (size_t i = 0; i + 1 < xs.size(); i++) out.push_back(xs[i + 1] - xs[i]);
    return out;
}
