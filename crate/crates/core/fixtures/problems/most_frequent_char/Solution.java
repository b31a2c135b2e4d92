import java.util.*;

class Solution {
    public String most_frequent_char(String s) {
        if (s.isEmpty()) return "";
        TreeMap<Character, Integer> counts = new TreeMap<>();
        for (char c : s.toCharArray()) counts.merge(c, 1, Integer::sum);
        char best = 0;
        int n = -1;
        for (Map.Entry<Character, Integer> e : counts.entrySet()) {
            if (e.getValue() > n) {
                best = e.getKey();
                n = e.getValue();
            }
        }
        return String.valueOf(best);
    }
}
