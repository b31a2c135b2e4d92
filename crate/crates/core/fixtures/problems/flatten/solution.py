def flatten(rows):
    return [x for row in rows for x in row]
