"""Compiled inner loops.

Everything that runs once per symbol lives here so that the OGD driver,
the compressor and the decompressor share one floating-point code path.
Encoder and decoder must see bit-identical weights, so these helpers fix
the order of every reduction; do not enable fastmath.
"""

import numpy as np
from numba import njit

LIN = 0
GEO = 1

LOG2E = 1.4426950408889634

# arithmetic coder: 32-bit window, 16-bit frequency totals
CODE_BITS = 32
TOP = (1 << 32) - 1
HALF = 1 << 31
QUARTER = 1 << 30
THREE_QUARTERS = 3 << 30
FREQ_BITS = 16
FREQ_TOTAL = 1 << 16


# ---------------------------------------------------------------- projection


@njit(cache=True)
def project_simplex(v, out):
    m = v.size
    u = np.sort(v)[::-1]
    css = 0.0
    theta = 0.0
    for j in range(m):
        css += u[j]
        t = (css - 1.0) / (j + 1)
        if u[j] - t > 0.0:
            theta = t
    s = 0.0
    for i in range(m):
        z = v[i] - theta
        if z < 0.0:
            z = 0.0
        out[i] = z
        s += z
    if abs(s - 1.0) > 1e-15:
        for i in range(m):
            out[i] /= s


@njit(cache=True)
def project_box(v, r, out):
    for i in range(v.size):
        z = v[i]
        if z > r:
            z = r
        elif z < -r:
            z = -r
        out[i] = z


@njit(cache=True)
def project(v, is_box, r, out):
    if is_box:
        project_box(v, r, out)
    else:
        project_simplex(v, out)


# ------------------------------------------------------------------ mixtures


@njit(cache=True)
def neg_log2(P, L):
    m, N = P.shape
    for i in range(m):
        for y in range(N):
            L[i, y] = -np.log2(P[i, y])


@njit(cache=True)
def mix_dist(kind, w, P, L, out):
    """Mixture distribution into ``out``; ``L`` must hold ``-log2 P``."""
    m, N = P.shape
    if kind == LIN:
        for y in range(N):
            s = 0.0
            for i in range(m):
                s += w[i] * P[i, y]
            out[y] = s
        return
    emax = -np.inf
    for y in range(N):
        e = 0.0
        for i in range(m):
            e -= w[i] * L[i, y]
        out[y] = e
        if e > emax:
            emax = e
    z = 0.0
    for y in range(N):
        q = np.exp2(out[y] - emax)
        out[y] = q
        z += q
    for y in range(N):
        out[y] /= z


@njit(cache=True)
def loss_grad(kind, w, P, L, p, x, out):
    """Gradient of ``-log2 mix(x)`` given the mixture ``p`` at ``w``."""
    m, N = P.shape
    if kind == LIN:
        px = p[x]
        for i in range(m):
            out[i] = -LOG2E * P[i, x] / px
        return
    for i in range(m):
        s = 0.0
        lx = L[i, x]
        for y in range(N):
            if y != x:
                s += p[y] * (lx - L[i, y])
        out[i] = s


@njit(cache=True)
def ogd_update(w, grad, alpha, is_box, r, tmp, out):
    for i in range(w.size):
        tmp[i] = w[i] - alpha * grad[i]
    project(tmp, is_box, r, out)


@njit(cache=True)
def run_ogd(Ps, xs, w1, alpha, kind, is_box, r, store_mix):
    """Algorithm loop over a fixed matrix sequence; returns the full trace."""
    n, m, N = Ps.shape
    W = np.empty((n, m))
    G = np.empty((n, m))
    bits = np.empty(n)
    mixes = np.empty((n if store_mix else 0, N))
    L = np.empty((m, N))
    p = np.empty(N)
    g = np.empty(m)
    tmp = np.empty(m)
    w = w1.copy()
    w_next = np.empty(m)
    for k in range(n):
        P = Ps[k]
        x = xs[k]
        neg_log2(P, L)
        mix_dist(kind, w, P, L, p)
        W[k] = w
        bits[k] = -np.log2(p[x])
        if store_mix:
            mixes[k] = p
        loss_grad(kind, w, P, L, p, x, g)
        G[k] = g
        ogd_update(w, g, alpha, is_box, r, tmp, w_next)
        w[:] = w_next
    return W, G, bits, mixes, w


# -------------------------------------------------------------- quantization


@njit(cache=True)
def quantize(p, total, out):
    """Largest-remainder rounding of ``p * total`` with every count >= 1.

    Remainder ties go to the lower symbol index. If the floor of one count
    overshoots the total, the excess comes off the largest count.
    """
    N = p.size
    rem = np.empty(N)
    acc = 0
    for i in range(N):
        s = p[i] * total
        f = np.floor(s)
        if f < 1.0:
            out[i] = 1
            rem[i] = -1.0
        else:
            out[i] = np.int64(f)
            rem[i] = s - f
        acc += out[i]
    diff = total - acc
    if diff > 0:
        # threshold = diff-th largest remainder
        thr = -np.partition(-rem, diff - 1)[diff - 1]
        above = 0
        for i in range(N):
            if rem[i] > thr:
                out[i] += 1
                above += 1
        left = diff - above
        for i in range(N):
            if left == 0:
                break
            if rem[i] == thr:
                out[i] += 1
                left -= 1
    elif diff < 0:
        big = 0
        for i in range(1, N):
            if out[i] > out[big]:
                big = i
        out[big] += diff


@njit(cache=True)
def cumulative(freq, cum):
    cum[0] = 0
    for i in range(freq.size):
        cum[i + 1] = cum[i] + freq[i]


# ---------------------------------------------------------- arithmetic coder
# state: [low, high, pending, nbits]


@njit(cache=True)
def _put_bit(buf, state, bit):
    nb = state[3]
    if bit:
        buf[nb >> 3] |= np.uint8(0x80 >> (nb & 7))
    state[3] = nb + 1


@njit(cache=True)
def _emit(buf, state, bit):
    _put_bit(buf, state, bit)
    for _ in range(state[2]):
        _put_bit(buf, state, 1 - bit)
    state[2] = 0


@njit(cache=True)
def enc_init(state):
    state[0] = 0
    state[1] = TOP
    state[2] = 0
    state[3] = 0


@njit(cache=True)
def enc_symbol(buf, state, c_lo, c_hi):
    low = state[0]
    high = state[1]
    rng = high - low + 1
    high = low + ((rng * c_hi) >> FREQ_BITS) - 1
    low = low + ((rng * c_lo) >> FREQ_BITS)
    while True:
        if high < HALF:
            _emit(buf, state, 0)
        elif low >= HALF:
            _emit(buf, state, 1)
            low -= HALF
            high -= HALF
        elif low >= QUARTER and high < THREE_QUARTERS:
            state[2] += 1
            low -= QUARTER
            high -= QUARTER
        else:
            break
        low = low << 1
        high = (high << 1) | 1
    state[0] = low
    state[1] = high


@njit(cache=True)
def enc_finish(buf, state):
    """Emit the shortest tail that pins a value inside the final interval."""
    low = state[0]
    high = state[1]
    v = low
    for j in range(CODE_BITS - 1, -1, -1):
        step = np.int64(1) << j
        c = ((low + step - 1) >> j) << j
        if c <= high:
            v = c
            break
    _emit(buf, state, (v >> (CODE_BITS - 1)) & 1)
    for j in range(CODE_BITS - 2, -1, -1):
        _put_bit(buf, state, (v >> j) & 1)
    nb = state[3]
    # the decoder pads with zeros, so trailing zero bits are redundant
    while nb > 0 and (buf[(nb - 1) >> 3] >> (7 - ((nb - 1) & 7))) & 1 == 0:
        nb -= 1
    state[3] = nb
    return nb


@njit(cache=True)
def _get_bit(buf, nbits, pos):
    if pos >= nbits:
        return 0
    return (buf[pos >> 3] >> (7 - (pos & 7))) & 1


# decoder state: [low, high, value, pos]


@njit(cache=True)
def dec_init(buf, nbits, state):
    v = 0
    for i in range(CODE_BITS):
        v = (v << 1) | _get_bit(buf, nbits, i)
    state[0] = 0
    state[1] = TOP
    state[2] = v
    state[3] = CODE_BITS


@njit(cache=True)
def dec_symbol(buf, nbits, state, cum):
    low = state[0]
    high = state[1]
    value = state[2]
    pos = state[3]
    rng = high - low + 1
    off = value - low
    # largest s with (rng * cum[s]) >> 16 <= off
    lo = 0
    hi = cum.size - 2
    while lo < hi:
        mid = (lo + hi + 1) >> 1
        if (rng * cum[mid]) >> FREQ_BITS <= off:
            lo = mid
        else:
            hi = mid - 1
    s = lo
    high = low + ((rng * cum[s + 1]) >> FREQ_BITS) - 1
    low = low + ((rng * cum[s]) >> FREQ_BITS)
    while True:
        if high < HALF:
            pass
        elif low >= HALF:
            low -= HALF
            high -= HALF
            value -= HALF
        elif low >= QUARTER and high < THREE_QUARTERS:
            low -= QUARTER
            high -= QUARTER
            value -= QUARTER
        else:
            break
        low = low << 1
        high = (high << 1) | 1
        value = (value << 1) | _get_bit(buf, nbits, pos)
        pos += 1
    state[0] = low
    state[1] = high
    state[2] = value
    state[3] = pos
    return s


@njit(cache=True)
def encode_cums(cums, xs, buf):
    """Encode symbols against precomputed cumulative frequency rows."""
    state = np.empty(4, np.int64)
    enc_init(state)
    for k in range(xs.size):
        x = xs[k]
        enc_symbol(buf, state, cums[k, x], cums[k, x + 1])
    return enc_finish(buf, state)


@njit(cache=True)
def adaptive_order0_code(data, N, refresh, eps, buf, out, decode, nbits):
    """Byte coder with an order-0 count model refreshed every ``refresh`` symbols.

    Encodes ``data`` into ``buf`` (``decode`` false) or decodes ``out.size``
    symbols from ``buf`` into ``out``. Returns ``(nbits, ideal_bits)`` where the
    ideal bits use the unquantized distribution in force at each step.
    """
    counts = np.ones(N, np.int64)
    p = np.empty(N)
    freq = np.empty(N, np.int64)
    cum = np.empty(N + 1, np.int64)
    state = np.empty(4, np.int64)
    n = out.size if decode else data.size
    if decode:
        dec_init(buf, nbits, state)
    else:
        enc_init(state)
    ideal = 0.0
    for k in range(n):
        if k % refresh == 0:
            tot = 0
            for y in range(N):
                tot += counts[y]
            for y in range(N):
                p[y] = (1.0 - N * eps) * (counts[y] / tot) + eps
            quantize(p, FREQ_TOTAL, freq)
            cumulative(freq, cum)
        if decode:
            x = dec_symbol(buf, nbits, state, cum)
            out[k] = x
        else:
            x = np.int64(data[k])
            enc_symbol(buf, state, cum[x], cum[x + 1])
        ideal -= np.log2(p[x])
        counts[x] += 1
    if decode:
        return nbits, ideal
    return enc_finish(buf, state), ideal


# --------------------------------------------------------- context models


@njit(cache=True)
def ctx_layout(N, orders):
    """Per-model offsets into the flat count/total tables.

    A model of order k owns contexts of every length j <= k (the shorter
    ones are only used at stream start); length-j context ids start at
    ``sum_{t<j} N^t``.
    """
    m = orders.size
    ctx_off = np.zeros(m + 1, np.int64)
    for i in range(m):
        c = 0
        pw = 1
        for _ in range(orders[i] + 1):
            c += pw
            pw *= N
        ctx_off[i + 1] = ctx_off[i] + c
    return ctx_off


@njit(cache=True)
def ctx_index(N, k, pos, val):
    j = k if pos >= k else pos
    base = 0
    pw = 1
    for _ in range(j):
        base += pw
        pw *= N
    return base + val


@njit(cache=True)
def models_predict(counts, totals, ctx_off, cur, N, delta, eps, P):
    m = cur.size
    for i in range(m):
        c = ctx_off[i] + cur[i]
        denom = totals[c] + N * delta
        row = c * N
        for y in range(N):
            P[i, y] = (1.0 - N * eps) * ((counts[row + y] + delta) / denom) + eps


@njit(cache=True)
def models_predict_logs(counts, totals, ctx_off, cur, N, delta, eps, P, L):
    """``models_predict`` plus ``L = -log2 P``; unseen symbols share one value per row."""
    m = cur.size
    for i in range(m):
        c = ctx_off[i] + cur[i]
        denom = totals[c] + N * delta
        row = c * N
        p0 = (1.0 - N * eps) * ((0 + delta) / denom) + eps
        l0 = -np.log2(p0)
        for y in range(N):
            cnt = counts[row + y]
            if cnt == 0:
                P[i, y] = p0
                L[i, y] = l0
            else:
                q = (1.0 - N * eps) * ((cnt + delta) / denom) + eps
                P[i, y] = q
                L[i, y] = -np.log2(q)


@njit(cache=True)
def models_update(counts, totals, ctx_off, cur, vals, orders, N, pos, x):
    """Count ``x`` in each model's current context, then advance the contexts."""
    m = cur.size
    for i in range(m):
        c = ctx_off[i] + cur[i]
        counts[c * N + x] += 1
        totals[c] += 1
        k = orders[i]
        if k > 0:
            mod = 1
            for _ in range(k):
                mod *= N
            vals[i] = (vals[i] * N + x) % mod
        cur[i] = ctx_index(N, k, pos + 1, vals[i])


@njit(cache=True)
def build_matrices(xs, N, orders, delta, eps):
    n = xs.size
    m = orders.size
    ctx_off = ctx_layout(N, orders)
    counts = np.zeros(ctx_off[m] * N, np.int64)
    totals = np.zeros(ctx_off[m], np.int64)
    cur = np.zeros(m, np.int64)
    vals = np.zeros(m, np.int64)
    Ps = np.empty((n, m, N))
    for k in range(n):
        models_predict(counts, totals, ctx_off, cur, N, delta, eps, Ps[k])
        models_update(counts, totals, ctx_off, cur, vals, orders, N, k, xs[k])
    return Ps


# ---------------------------------------------------------- fused codec


@njit(cache=True)
def mix_codec(xs, n, N, orders, delta, eps, kind, is_box, r, alpha, w1,
              buf, nbits_in, decode, code, rec_w, rec_bits, rec_gnorm):
    """Model -> mix -> code -> OGD loop for one stream.

    ``decode`` reconstructs ``n`` symbols into ``xs`` from ``buf``; otherwise
    ``xs`` is read and (when ``code``) written to ``buf``. ``rec_*`` arrays of
    length ``n`` receive the trace; pass empty arrays to skip recording.
    Returns ``(nbits, ideal_bits, per_model_bits, final_w)``.
    """
    m = orders.size
    ctx_off = ctx_layout(N, orders)
    counts = np.zeros(ctx_off[m] * N, np.int64)
    totals = np.zeros(ctx_off[m], np.int64)
    cur = np.zeros(m, np.int64)
    vals = np.zeros(m, np.int64)
    P = np.empty((m, N))
    L = np.empty((m, N))
    p = np.empty(N)
    g = np.empty(m)
    tmp = np.empty(m)
    w = w1.copy()
    w_next = np.empty(m)
    freq = np.empty(N, np.int64)
    cum = np.empty(N + 1, np.int64)
    state = np.empty(4, np.int64)
    model_bits = np.zeros(m)
    ideal = 0.0
    record = rec_bits.size > 0
    if decode:
        dec_init(buf, nbits_in, state)
    else:
        enc_init(state)
    for k in range(n):
        models_predict_logs(counts, totals, ctx_off, cur, N, delta, eps, P, L)
        mix_dist(kind, w, P, L, p)
        if decode or code:
            quantize(p, FREQ_TOTAL, freq)
            cumulative(freq, cum)
        if decode:
            x = dec_symbol(buf, nbits_in, state, cum)
            xs[k] = x
        else:
            x = xs[k]
            if code:
                enc_symbol(buf, state, cum[x], cum[x + 1])
        b = -np.log2(p[x])
        ideal += b
        for i in range(m):
            model_bits[i] += L[i, x]
        loss_grad(kind, w, P, L, p, x, g)
        if record:
            rec_w[k] = w
            rec_bits[k] = b
            s = 0.0
            for i in range(m):
                s += g[i] * g[i]
            rec_gnorm[k] = np.sqrt(s)
        ogd_update(w, g, alpha, is_box, r, tmp, w_next)
        w[:] = w_next
        models_update(counts, totals, ctx_off, cur, vals, orders, N, k, x)
    nbits = nbits_in
    if not decode and code:
        nbits = enc_finish(buf, state)
    return nbits, ideal, model_bits, w


@njit(cache=True)
def segment_dp(S, penalty, scale):
    """Optimal segmentation under best-single-model costs from prefix sums ``S`` (n+1, m).

    D[j] = min_i (D[i-1] + penalty) + scale * min_model(S[j] - S[i-1]);
    strict comparison keeps the earliest start on ties.
    """
    n = S.shape[0] - 1
    m = S.shape[1]
    D = np.empty(n + 1)
    arg = np.empty(n + 1, dtype=np.int64)
    D[0] = 0.0
    for j in range(1, n + 1):
        best = np.inf
        bi = 1
        for i in range(j):
            c = S[j, 0] - S[i, 0]
            for mm in range(1, m):
                v = S[j, mm] - S[i, mm]
                if v < c:
                    c = v
            cand = (D[i] + penalty) + scale * c
            if cand < best:
                best = cand
                bi = i + 1
        D[j] = best
        arg[j] = bi
    return D, arg
