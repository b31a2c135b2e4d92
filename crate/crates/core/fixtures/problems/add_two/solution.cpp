long long add_two(long long a, long long b) {
    return a + b;
}
