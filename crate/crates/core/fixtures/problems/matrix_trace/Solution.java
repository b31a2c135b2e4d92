import java.util.List;

class Solution {
    public long matrix_trace(List<List<Long>> m) {
        long t = 0;
        for (int i = 0; i < m.size() && i < m.get(i).size(); i++) t += m.get(i).get(i);
        return t;
    }
}
