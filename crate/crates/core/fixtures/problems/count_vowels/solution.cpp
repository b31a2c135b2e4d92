long long count_vowels(std::string s) {
    long long n = 0;
    for (char c : s) {
        if (std::string("aeiouAEIOU").find(c) != std::string::npos) n++;
    }
    return n;
}
