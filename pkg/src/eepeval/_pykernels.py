"""Pure-Python inner loops. Used when the compiled extension is unavailable.

Every function mirrors ``_ckernels.pyx`` operation for operation so both
backends produce identical floating-point results.
"""

from __future__ import annotations


def lipschitz_pairs(times, scores, c):
    """Sum of ``|ds| / dt`` over pairs with ``0 < dt <= c``, and the pair count.

    ``times`` must be sorted ascending.
    """
    t = times.tolist() if hasattr(times, "tolist") else list(times)
    s = scores.tolist() if hasattr(scores, "tolist") else list(scores)
    n = len(t)
    total = 0.0
    count = 0
    for i in range(n):
        ti = t[i]
        si = s[i]
        for j in range(i + 1, n):
            dt = t[j] - ti
            if dt > c:
                break
            if dt > 0.0:
                total += abs(s[j] - si) / dt
                count += 1
    return total, count


def count_flips(scores, tau):
    s = scores.tolist() if hasattr(scores, "tolist") else list(scores)
    flips = 0
    prev = -1
    for x in s:
        state = 1 if x >= tau else 0
        if prev != -1 and state != prev:
            flips += 1
        prev = state
    return flips


def mann_whitney_u(scores, labels):
    """U statistic of the positives; ``scores`` ascending, ``labels`` in {0, 1}."""
    s = scores.tolist() if hasattr(scores, "tolist") else list(scores)
    y = labels.tolist() if hasattr(labels, "tolist") else list(labels)
    n = len(s)
    u = 0.0
    neg_below = 0
    i = 0
    while i < n:
        j = i
        p = 0
        q = 0
        while j < n and s[j] == s[i]:
            if y[j]:
                p += 1
            else:
                q += 1
            j += 1
        u += p * neg_below + 0.5 * p * q
        neg_below += q
        i = j
    return u


def average_precision(scores, labels):
    """Step-integrated precision over recall; ``scores`` descending.

    Tied scores form a single threshold.
    """
    s = scores.tolist() if hasattr(scores, "tolist") else list(scores)
    y = labels.tolist() if hasattr(labels, "tolist") else list(labels)
    n = len(s)
    total_pos = 0
    for v in y:
        if v:
            total_pos += 1
    if total_pos == 0:
        return 0.0
    ap = 0.0
    tp = 0
    seen = 0
    i = 0
    while i < n:
        j = i
        gp = 0
        while j < n and s[j] == s[i]:
            if y[j]:
                gp += 1
            j += 1
        seen += j - i
        tp += gp
        if gp:
            ap += (tp / seen) * gp
        i = j
    return ap / total_pos
