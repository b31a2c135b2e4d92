std::vector<long long> running_max(std::vector<long long> xs) {
    std::vector<long long> out;
    for (size_t i = 0; i < xs.size(); i++) {
        if (i == 0 || xs[i] > out.back()) out.push_back(xs[i]);
        else out.push_back(out.back());
    }
    return out;
}
