import java.util.*;

class Solution {
    public List<Long> dedupe_adjacent(List<Long> xs) {
        List<Long> out = new ArrayList<>();
        for (Long x : xs) {
            if (out.isEmpty() || !out.get(out.size() - 1).equals(x)) out.add(x);
        }
        return out;
    }
}
