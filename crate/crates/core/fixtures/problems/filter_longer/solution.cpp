std::vector<std::string> filter_longer(std::vector<std::string> words, long long k) {
    std::vector<std::string> out;
    for (const auto& w : words) {
        if ((long long) w.size() > k) out.push_back(w);
    }
    return out;
}
