# cython: language_level=3, boundscheck=False, wraparound=False
"""Compiled elimination kernels; same contract as ``wmlab._kernels_py``."""

from math import gcd


cdef object _content(list row):
    cdef object g = 0
    cdef object v
    for v in row:
        if v:
            g = gcd(g, v)
            if g == 1:
                return 1
    return g


def echelon_int(list rows, Py_ssize_t ncols):
    cdef list pivots = []
    cdef Py_ssize_t rank = 0
    cdef Py_ssize_t nrows, col, r, best, j
    cdef list prow, row, new, out
    cdef object p, a, g, mp, ma, v, av, best_abs, c

    rows = [x for x in rows if any(x)]
    nrows = len(rows)
    for col in range(ncols):
        if rank == nrows:
            break
        best = -1
        best_abs = 0
        for r in range(rank, nrows):
            v = (<list>rows[r])[col]
            if v:
                av = v if v > 0 else -v
                if best < 0 or av < best_abs:
                    best = r
                    best_abs = av
                    if av == 1:
                        break
        if best < 0:
            continue
        rows[rank], rows[best] = rows[best], rows[rank]
        prow = <list>rows[rank]
        p = prow[col]
        if p < 0:
            prow = [-v for v in prow]
            p = -p
            rows[rank] = prow
        for r in range(nrows):
            if r == rank:
                continue
            row = <list>rows[r]
            a = row[col]
            if not a:
                continue
            g = gcd(p, a)
            mp = p // g
            ma = a // g
            new = [None] * ncols
            for j in range(ncols):
                new[j] = mp * row[j] - ma * prow[j]
            c = _content(new)
            if c > 1:
                for j in range(ncols):
                    new[j] = new[j] // c
            rows[r] = new
        pivots.append(col)
        rank += 1
    out = []
    for r in range(rank):
        row = <list>rows[r]
        c = _content(row)
        if c > 1:
            row = [x // c for x in row]
        out.append(row)
    return out, pivots


def matmul(list a, list b, Py_ssize_t inner, Py_ssize_t ncols):
    cdef list out = []
    cdef list arow, brow, acc
    cdef Py_ssize_t k, j
    cdef object x, y
    for arow in a:
        acc = [0] * ncols
        for k in range(inner):
            x = arow[k]
            if x:
                brow = <list>b[k]
                for j in range(ncols):
                    y = brow[j]
                    if y:
                        acc[j] = acc[j] + x * y
        out.append(acc)
    return out
