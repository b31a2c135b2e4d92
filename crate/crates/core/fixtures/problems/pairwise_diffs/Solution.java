import java.util.*;

class Solution {
    public List<Long> pairwise_diffs(List<Long> xs) {
        List<Long> out = new ArrayList<>();
        for (int i = 0; i + 1 < xs.size(); i++) out.add(xs.get(i + 1) - xs.get(i));
        return out;
    }
}
