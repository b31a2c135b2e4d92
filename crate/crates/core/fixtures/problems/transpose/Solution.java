import java.util.*;

class Solution {
    public List<List<Long>> transpose(List<List<Long>> m) {
        List<List<Long>> out = new ArrayList<>();
        if (m.isEmpty()) return out;
        for (int j = 0; j < m.get(0).size(); j++) {
            List<Long> col = new ArrayList<>();
            for (int i = 0; i < m.size(); i++) col.add(m.get(i).get(j));
            out.add(col);
        }
        return out;
    }
}
