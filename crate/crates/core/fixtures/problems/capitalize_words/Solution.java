class Solution {
    public String capitalize_words(String s) {
        StringBuilder out = new StringBuilder();
        boolean prevSpace = true;
        for (char c : s.toCharArray()) {
            if (prevSpace && c >= 'a' && c <= 'z') out.append((char) (c - 32));
            else out.append(c);
            prevSpace = c == ' ';
        }
        return out.toString();
    }
}
