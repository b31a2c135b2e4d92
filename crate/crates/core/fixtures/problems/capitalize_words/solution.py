def capitalize_words(s):
    out = []
    prev_space = True
    for c in s:
        if prev_space and "a" <= c <= "z":
            out.append(chr(ord(c) - 32))
        else:
            out.append(c)
        prev_space = c == " "
    return "".join(out)
