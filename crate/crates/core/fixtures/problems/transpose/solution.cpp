std::vector<std::vector<long long>> transpose(std::vector<std::vector<long long>> m) {
    std::vector<std::vector<long long>> out;
    if (m.empty()) return out;
    for (size_t j = 0; j < m[0].size(); j++) {
        std::vector<long long> col;
        for (size_t i = 0; i < m.size(); i++) col.push_back(m[i][j]);
        out.push_back(col);
    }
    return out;
}
