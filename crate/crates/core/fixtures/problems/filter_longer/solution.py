def filter_longer(words, k):
    return [w for w in words if len(w) > k]
