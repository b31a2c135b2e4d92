import java.util.List;

class Solution {
    public boolean all_positive(List<Long> xs) {
        for (long x : xs) {
            if (x <= 0) return false;
        }
        return true;
    }
}
