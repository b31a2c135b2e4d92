class Solution {
    public long add_two(long a, long b) {
        return a + b;
    }
}
