double dot_product(std::vector<double> a, std::vector<double> b) {
    double s = 0.0;
    for (size_t i = 0; i < a.size() && i < b.size(); i++) s += a[i] * b[i];
    return s;
}
