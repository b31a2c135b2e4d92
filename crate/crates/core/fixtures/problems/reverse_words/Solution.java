import java.util.*;

class Solution {
    public String reverse_words(String s) {
        String[] parts = s.split(" ", -1);
        StringBuilder out = new StringBuilder();
        for (int i = parts.length - 1; i >= 0; i--) {
            out.append(parts[i]);
            if (i > 0) out.append(' ');
        }
        return out.toString();
    }
}
