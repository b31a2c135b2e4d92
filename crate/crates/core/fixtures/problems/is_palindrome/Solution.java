class Solution {
    public boolean is_palindrome(String s) {
        String r = new StringBuilder(s).reverse().toString();
        return s.equals(r);
    }
}
