"""Pure-Python elimination kernels.

Both functions mirror ``wmlab._kernels`` (the compiled build) exactly; the
backend module picks one at import time.
"""
from __future__ import annotations

from math import gcd


def _content(row):
    g = 0
    for v in row:
        if v:
            g = gcd(g, v)
            if g == 1:
                return 1
    return g


def echelon_int(rows, ncols):
    """Fraction-free reduced row echelon form of an integer matrix.

    ``rows`` is consumed. Returns ``(basis_rows, pivots)``: the nonzero rows of
    the reduced form, each divided by its content and with a positive pivot,
    and the pivot column of each row. Dividing every row by its pivot gives
    the usual RREF.
    """
    rows = [r for r in rows if any(r)]
    pivots = []
    rank = 0
    nrows = len(rows)
    for col in range(ncols):
        if rank == nrows:
            break
        best = -1
        best_abs = 0
        for r in range(rank, nrows):
            v = rows[r][col]
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
        prow = rows[rank]
        p = prow[col]
        if p < 0:
            prow = [-v for v in prow]
            p = -p
            rows[rank] = prow
        for r in range(nrows):
            if r == rank:
                continue
            row = rows[r]
            a = row[col]
            if not a:
                continue
            g = gcd(p, a)
            mp = p // g
            ma = a // g
            new = [mp * x - ma * y for x, y in zip(row, prow)]
            c = _content(new)
            if c > 1:
                new = [x // c for x in new]
            rows[r] = new
        pivots.append(col)
        rank += 1
    out = []
    for r in range(rank):
        row = rows[r]
        c = _content(row)
        if c > 1:
            row = [x // c for x in row]
        out.append(row)
    return out, pivots


def matmul(a, b, inner, ncols):
    """Product of row lists ``a`` (n x inner) and ``b`` (inner x ncols)."""
    out = []
    for arow in a:
        acc = [0] * ncols
        for k in range(inner):
            x = arow[k]
            if x:
                brow = b[k]
                for j in range(ncols):
                    y = brow[j]
                    if y:
                        acc[j] += x * y
        out.append(acc)
    return out
