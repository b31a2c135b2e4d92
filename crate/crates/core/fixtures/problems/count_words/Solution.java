class Solution {
    public long count_words(String s) {
        long n = 0;
        boolean inWord = false;
        for (char c : s.toCharArray()) {
            boolean space = c == ' ' || c == '\t' || c == '\n';
            if (!space && !inWord) n++;
            inWord = !space;
        }
        return n;
    }
}
