import java.util.*;

class Solution {
    public List<Long> flatten(List<List<Long>> rows) {
        List<Long> out = new ArrayList<>();
        for (List<Long> row : rows) out.addAll(row);
        return out;
    }
}
