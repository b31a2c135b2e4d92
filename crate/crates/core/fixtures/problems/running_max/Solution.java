import java.util.ArrayList;
import java.util.List;

class Solution {
    public List<Long> running_max(List<Long> xs) {
        List<Long> out = new ArrayList<>();
        for (int i = 0; i < xs.size(); i++) {
            long x = xs.get(i);
            if (i == 0 || x > out.get(i - 1)) out.add(x);
            else out.add(out.get(i - 1));
        }
        return out;
    }
}
