std::string reverse_words(std::string s) {
    std::vector<std::string> parts;
    std::string cur;
    for (char c : s) {
        if (c == ' ') {
            parts.push_back(cur);
            cur.clear();
        } else {
            cur += c;
        }
    }
    parts.push_back(cur);
    std::string out;
    for (size_t i = parts.size(); i-- > 0;) {
        out += parts[i];
        if (i > 0) out += ' ';
    }
    return out;
}
