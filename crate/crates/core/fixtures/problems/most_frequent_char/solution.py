def most_frequent_char(s):
    if not s:
        return ""
    counts = {}
    for c in s:
        counts[c] = counts.get(c, 0) + 1
    best = max(counts.values())
    return min(c for c in counts if counts[c] == best)
