import java.util.*;

class Solution {
    public List<String> filter_longer(List<String> words, long k) {
        List<String> out = new ArrayList<>();
        for (String w : words) {
            if (w.length() > k) out.add(w);
        }
        return out;
    }
}
