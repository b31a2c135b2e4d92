std::string to_binary(long long n) {
    if (n == 0) return "0";
    std::string bits;
    while (n > 0) {
        bits.insert(bits.begin(), char('0' + n % 2));
        n /= 2;
    }
    return bits;
}
