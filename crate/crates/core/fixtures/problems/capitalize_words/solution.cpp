std::string capitalize_words(std::string s) {
    bool prev_space = true;
    for (char& c : s) {
        if (prev_space && c >= 'a' && c <= 'z') c = c - 32;
        prev_space = c == ' ';
    }
    return s;
}
