long long matrix_trace(std::vector<std::vector<long long>> m) {
    long long t = 0;
    for (size_t i = 0; i < m.size() && i < m[i].size(); i++) t += m[i][i];
    return t;
}
