class Solution {
    public long count_vowels(String s) {
        long n = 0;
        for (char c : s.toCharArray()) {
            if ("aeiouAEIOU".indexOf(c) >= 0) n++;
        }
        return n;
    }
}
