import java.util.List;

class Solution {
    public double dot_product(List<Double> a, List<Double> b) {
        double s = 0.0;
        for (int i = 0; i < a.size() && i < b.size(); i++) s += a.get(i) * b.get(i);
        return s;
    }
}
