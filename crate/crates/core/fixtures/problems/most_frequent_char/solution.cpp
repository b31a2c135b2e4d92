std::string most_frequent_char(std::string s) {
    if (s.empty()) return "";
    std::map<char, int> counts;
    for (char c : s) counts[c]++;
    char best = 0;
    int n = -1;
    for (const auto& kv : counts) {
        if (kv.second > n) {
            best = kv.first;
            n = kv.second;
        }
    }
    return std::string(1, best);
}
