"""Pure-Python twin of the compiled ``_lattice`` kernel (same API, same order)."""

import numpy as np

MAX_NODES = 63


def _acyclic(lab, k, edges):
    inmask = [0] * k
    for u, v in edges:
        a, b = lab[u], lab[v]
        if a != b:
            inmask[b] |= 1 << a
    remaining = (1 << k) - 1
    while remaining:
        progress = False
        for j in range(k):
            if (remaining >> j) & 1 and not inmask[j] & remaining:
                remaining &= ~(1 << j)
                progress = True
        if not progress:
            return False
    return True


def quotient_is_acyclic(labels, eu, ev):
    lab = [int(x) for x in labels]
    k = max(lab) + 1 if lab else 0
    return _acyclic(lab, k, list(zip((int(x) for x in eu), (int(x) for x in ev))))


def partition_labels(d, eu=None, ev=None, capacity=0):
    if d < 1 or d > MAX_NODES:
        raise ValueError(f"d must be in 1..{MAX_NODES}")
    check = eu is not None
    edges = list(zip((int(x) for x in eu), (int(x) for x in ev))) if check else []
    a = [0] * d
    mx = [0] * d
    out = []
    while True:
        if not check or _acyclic(a, mx[-1] + 1, edges):
            if len(out) >= capacity:
                raise ValueError("capacity exceeded")
            out.append(tuple(a))
        i = d - 1
        while i >= 1 and a[i] > mx[i - 1]:
            i -= 1
        if i < 1:
            break
        a[i] += 1
        mx[i] = max(mx[i - 1], a[i])
        for j in range(i + 1, d):
            a[j] = 0
            mx[j] = mx[i]
    return np.array(out, dtype=np.int8).reshape(len(out), d)
