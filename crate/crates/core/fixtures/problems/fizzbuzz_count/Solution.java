class Solution {
    public long fizzbuzz_count(long n) {
        long c = 0;
        for (long i = 1; i <= n; i++) {
            if (i % 3 == 0 || i % 5 == 0) c++;
        }
        return c;
    }
}
