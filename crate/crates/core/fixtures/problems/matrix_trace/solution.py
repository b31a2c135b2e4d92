def matrix_trace(m):
    return sum(m[i][i] for i in range(min(len(m), len(m[0]) if m else 0)))
