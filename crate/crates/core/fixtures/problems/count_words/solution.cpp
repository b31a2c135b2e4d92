long long count_words(std::string s) {
    long long n = 0;
    bool in_word = false;
    for (char c : s) {
        bool space = c == ' ' || c == '\t' || c == '\n';
        if (!space && !in_word) n++;
        in_word = !space;
    }
    return n;
}
