"""Compiled RFD + range coder loops for whole-file coding.

Mirrors :mod:`rfdlab.coder`'s pure-Python coder and
:func:`rfdlab.estimator.update` step for step; the test-suite checks that both
routes emit identical bytes.  Everything is int64: ``low < 2**57``,
``range < 2**56`` and ``code < 2**48`` before a shift.
"""

import math

import numpy as np
from numba import njit

WINDOW_BITS = 56
TOP = 1 << WINDOW_BITS
BOT = 1 << (WINDOW_BITS - 8)
LOW_MASK = BOT - 1
FF_LIMIT = 0xFF << (WINDOW_BITS - 8)


@njit(cache=True)
def _fw_build(tree, counts, n):
    for i in range(1, n + 1):
        tree[i] = counts[i - 1]
    for i in range(1, n + 1):
        j = i + (i & -i)
        if j <= n:
            tree[j] += tree[i]


@njit(cache=True)
def _fw_prefix(tree, i):
    s = 0
    while i > 0:
        s += tree[i]
        i -= i & -i
    return s


@njit(cache=True)
def _fw_add(tree, i, delta, n):
    i += 1
    while i <= n:
        tree[i] += delta
        i += i & -i


@njit(cache=True)
def _fw_find(tree, v, n, top_bit):
    pos = 0
    rem = v
    step = top_bit
    while step > 0:
        nxt = pos + step
        if nxt <= n and tree[nxt] <= rem:
            pos = nxt
            rem -= tree[nxt]
        step >>= 1
    return pos, v - rem


@njit(cache=True)
def _rescale(counts, tree, n, num, den):
    t = 0
    for i in range(n):
        v = (num * counts[i]) // den
        if v == 0:
            v = 1
        counts[i] = v
        t += v
    _fw_build(tree, counts, n)
    return t


@njit(cache=True)
def _top_bit(n):
    b = 1
    while b * 2 <= n:
        b *= 2
    return b


@njit(cache=True)
def encode_rfd(symbols, n_sym, d, num, den, T, s0):
    """Returns (raw output, length, ideal bits, final counts, final total, rescale count).

    The raw output still carries the leading zero byte of the carry cache.
    The stream ends with the shortest aligned block lying wholly inside the
    final interval, so any continuation (the decoder pads zeros) decodes the
    same symbols and the payload never undercuts the ideal length.
    """
    n = symbols.shape[0]
    counts = s0.copy()
    tree = np.zeros(n_sym + 1, dtype=np.int64)
    _fw_build(tree, counts, n_sym)
    t = 0
    for i in range(n_sym):
        t += counts[i]

    out = np.empty(4 * n + 64, dtype=np.uint8)
    pos = 0
    low = 0
    rng = TOP - 1
    cache = 0
    cache_size = 1
    ideal = 0.0
    rescales = 0

    for k in range(n):
        x = np.int64(symbols[k])
        f = counts[x]
        ideal += math.log2(t / f)
        cum = _fw_prefix(tree, x)
        r = rng // t
        low += r * cum
        rng = r * f
        while rng < BOT:
            rng <<= 8
            if low < FF_LIMIT or low >= TOP:
                carry = low >> WINDOW_BITS
                temp = cache
                while True:
                    out[pos] = (temp + carry) & 0xFF
                    pos += 1
                    temp = 0xFF
                    cache_size -= 1
                    if cache_size == 0:
                        break
                cache = (low >> (WINDOW_BITS - 8)) & 0xFF
            cache_size += 1
            low = (low & LOW_MASK) << 8

        if t + d > T:
            t = _rescale(counts, tree, n_sym, num, den)
            rescales += 1
        counts[x] += d
        _fw_add(tree, x, d, n_sym)
        t += d

    # flush: largest aligned block [v, v + 2**kbit) inside [low, low + rng)
    kbit = WINDOW_BITS - 1
    while kbit >= 0:
        m = 1 << kbit
        v = ((low + m - 1) >> kbit) << kbit
        if v + m <= low + rng:
            low = v
            break
        kbit -= 1
    for _ in range(WINDOW_BITS // 8 + 1):
        if low < FF_LIMIT or low >= TOP:
            carry = low >> WINDOW_BITS
            temp = cache
            while True:
                out[pos] = (temp + carry) & 0xFF
                pos += 1
                temp = 0xFF
                cache_size -= 1
                if cache_size == 0:
                    break
            cache = (low >> (WINDOW_BITS - 8)) & 0xFF
        cache_size += 1
        low = (low & LOW_MASK) << 8
    # keep bytes up to the one holding bit kbit of the final window
    pos = pos - WINDOW_BITS // 8 + (WINDOW_BITS - 1 - kbit) // 8 + 1
    if n == 0:
        pos = 1
    return out, pos, ideal, counts, t, rescales


@njit(cache=True)
def decode_rfd(payload, out, n_sym, d, num, den, T, s0):
    """Fills ``out`` with decoded symbols; returns (final counts, final total)."""
    n = out.shape[0]
    m = payload.shape[0]
    counts = s0.copy()
    tree = np.zeros(n_sym + 1, dtype=np.int64)
    _fw_build(tree, counts, n_sym)
    top_bit = _top_bit(n_sym)
    t = 0
    for i in range(n_sym):
        t += counts[i]

    pos = 0
    code = 0
    for _ in range(WINDOW_BITS // 8):
        b = 0
        if pos < m:
            b = np.int64(payload[pos])
        pos += 1
        code = (code << 8) | b
    rng = TOP - 1

    for k in range(n):
        r = rng // t
        v = code // r
        if v >= t:
            v = t - 1
        x, cum = _fw_find(tree, v, n_sym, top_bit)
        f = counts[x]
        code -= r * cum
        rng = r * f
        while rng < BOT:
            b = 0
            if pos < m:
                b = np.int64(payload[pos])
            pos += 1
            code = (code << 8) | b
            rng <<= 8
        out[k] = x

        if t + d > T:
            t = _rescale(counts, tree, n_sym, num, den)
        counts[x] += d
        _fw_add(tree, x, d, n_sym)
        t += d
    return counts, t
