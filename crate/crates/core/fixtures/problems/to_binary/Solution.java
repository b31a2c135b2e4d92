class Solution {
    public String to_binary(long n) {
        if (n == 0) return "0";
        StringBuilder bits = new StringBuilder();
        while (n > 0) {
            bits.insert(0, (char) ('0' + n % 2));
            n /= 2;
        }
        return bits.toString();
    }
}
