"""Pure-Python fallback for the chain sweep kernel (same contract as _sweep)."""
from math import inf

BACKEND = "python"


def sweep_aligned(old, new, starts, lengths, stride, di,
                  bestdir, l1a, l2a, lama, wbuf, ybuf, cbuf, threads):
    """Per-direction lower-envelope update over disjoint lattice chains.

    Mirrors the compiled kernel exactly (same arithmetic, same update
    order); ``threads`` and the scratch buffers are accepted for interface
    parity, the sweep itself is sequential.
    """
    stride = int(stride)
    for s, L in zip(starts.tolist(), lengths.tolist()):
        if L < 2:
            continue
        w = [old[s + j * stride] for j in range(L)]
        y = []
        c = []
        for j in range(L):
            wi = w[j]
            if wi == inf:
                continue
            while len(y) >= 2 and (
                (c[-1] - c[-2]) * (j - y[-1]) >= (wi - c[-1]) * (y[-1] - y[-2])
            ):
                y.pop()
                c.pop()
            y.append(j)
            c.append(wi)
        if len(y) < 2:
            continue
        for t in range(len(y) - 1):
            lo, hi = y[t], y[t + 1]
            clo, chi = c[t], c[t + 1]
            for j in range(lo + 1, hi):
                if w[j] == inf:
                    continue
                lam = float(j - lo) / float(hi - lo)
                val = lam * chi + (1.0 - lam) * clo
                node = s + j * stride
                if val < new[node]:
                    new[node] = val
                    bestdir[node] = di
                    l1a[node] = lo - j
                    l2a[node] = hi - j
                    lama[node] = lam
