import java.util.List;

class Solution {
    public long square_sum(List<Long> xs) {
        long total = 0;
        for (long x : xs) total += x * x;
        return total;
    }
}
