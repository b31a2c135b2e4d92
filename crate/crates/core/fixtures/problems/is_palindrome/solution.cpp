bool is_palindrome(std::string s) {
    std::string r(s.rbegin(), s.rend());
    return s == r;
}
