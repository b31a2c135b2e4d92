import java.util.List;

class Solution {
    public double mean_value(List<Double> xs) {
        if (xs.isEmpty()) return 0.0;
        double s = 0.0;
        for (double x : xs) s += x;
        return s / xs.size();
    }
}
