"""Hot loops: particle-system trajectories and the cutoff front map.

Every routine exists twice, a numba kernel (``*_nb``) and a numpy version
(``*_np``), and both consume the generator in the same order:

1. innovation draws, binomial for levels with at most ``EXACT_MAX`` firms,
   ascending by level;
2. standard normals for larger levels, ascending;
3. the same two passes for imitation (skipped entirely when ``mu == 1``).

Counts are float64. Up to ``EXACT_MAX = 2**53`` they are exact integers and
draws are exact binomials; above it a level's draw uses the rounded normal
approximation (relative skew below 1e-8 there).
"""
import numpy as np

from ._accel import USE_NUMBA, njit

EXACT_MAX = 2.0**53

MODE_TOP_N = 0
MODE_WINDOW = 1


# ---------------------------------------------------------------- numpy path


def draw_counts_np(c, p, rng):
    small = c <= EXACT_MAX
    n = np.where(small, c, 0.0).astype(np.int64)
    k = rng.binomial(n, p).astype(np.float64)
    if not small.all():
        big = c[~small]
        z = rng.standard_normal(big.size)
        k[~small] = np.minimum(np.maximum(np.rint(big * p + np.sqrt(big * p * (1.0 - p)) * z), 0.0), big)
    return k


def evolve_counts_np(c, a, mu, rng):
    """One reproduction phase on a compact count vector; result is one level longer."""
    inn = draw_counts_np(c, a, rng)
    imi = c.copy() if mu == 1.0 else draw_counts_np(c, mu, rng)
    out = np.zeros(c.size + 1)
    out[:-1] = c - inn + imi
    out[1:] += inn
    return out


def trim_np(c, floor):
    nz = np.flatnonzero(c)
    if nz.size == 0:
        return c[:0], floor
    return c[nz[0]: nz[-1] + 1], floor + int(nz[0])


def total_np(c):
    # sequential left-to-right sum, matching the kernel
    return float(np.cumsum(c)[-1]) if c.size else 0.0


def cull_np(c, floor, mode, param):
    if mode == MODE_TOP_N:
        excess = total_np(c) - param
        if excess > 0:
            cs = np.cumsum(c)
            k = int(np.searchsorted(cs, excess, side="right"))
            c = c[k:].copy()
            c[0] = cs[k] - excess
            floor += k
    else:
        start = max(0, c.size - int(param))
        c = c[start:]
        floor += start
    return trim_np(c, floor)


def run_np(c0, floor0, a, mu, mode, param, steps, rng, snapshot_every):
    c = np.asarray(c0, dtype=np.float64).copy()
    floor = int(floor0)
    ymax = np.empty(steps, dtype=np.int64)
    ymin = np.empty(steps, dtype=np.int64)
    tot = np.empty(steps)
    snap_steps, snap_offsets, snap_chunks = [], [0], []
    for t in range(steps):
        c = evolve_counts_np(c, a, mu, rng)
        c, floor = trim_np(c, floor)
        c, floor = cull_np(c, floor, mode, param)
        ymin[t] = floor
        ymax[t] = floor + c.size - 1
        tot[t] = total_np(c)
        if snapshot_every > 0 and (t + 1) % snapshot_every == 0:
            snap_steps.append(t + 1)
            snap_chunks.append(c.copy())
            snap_offsets.append(snap_offsets[-1] + c.size)
    data = np.concatenate(snap_chunks) if snap_chunks else np.empty(0)
    return (c, floor, ymax, ymin, tot, np.array(snap_steps, dtype=np.int64),
            np.array(snap_offsets, dtype=np.int64), data)


def cutoff_advance_np(h, base, a, mu, eps, steps):
    """Advance the deterministic front ``steps`` times; return interpolated positions."""
    b = 1.0 - a + mu
    pos = np.empty(steps)
    for t in range(steps):
        new = np.empty(h.size + 1)
        new[0] = min(1.0, b * h[0] + a)
        new[1:-1] = np.minimum(1.0, b * h[1:] + a * h[:-1])
        new[-1] = a * h[-1]
        # h is non-increasing, so entries under the cutoff form a suffix
        keep = new.size
        while keep > 1 and new[keep - 1] < eps:
            keep -= 1
        new = new[:keep]
        if new[0] < eps:
            new[0] = 0.0
        ones = 0
        while ones + 1 < new.size and new[ones + 1] >= 1.0:
            ones += 1
        h = new[ones:]
        base += ones
        pos[t] = _half_position(h, base)
    return h, base, pos


def _half_position(h, base):
    # h(base - 1) = 1; find the last index with h >= 1/2 and interpolate
    j = -1
    for i in range(h.size):
        if h[i] >= 0.5:
            j = i
        else:
            break
    hj = 1.0 if j < 0 else h[j]
    hn = h[j + 1] if j + 1 < h.size else 0.0
    return base + j + (hj - 0.5) / (hj - hn)


# ---------------------------------------------------------------- numba path


# numba's built-in Generator.binomial drifts from numpy's stream (its BTPE
# squeeze has a mistyped Stirling constant), so the sampler is restated here
# line for line from numpy's C source, drawing uniforms via rng.random().


@njit(cache=True, nogil=True)
def _binomial_inversion_nb(rng, n, p):
    q = 1.0 - p
    qn = np.exp(n * np.log(q))
    np_ = n * p
    bound = min(n, np_ + 10.0 * np.sqrt(np_ * q + 1))
    X = 0
    px = qn
    U = rng.random()
    while U > px:
        X += 1
        if X > bound:
            X = 0
            px = qn
            U = rng.random()
        else:
            U -= px
            px = ((n - X + 1) * p * px) / (X * q)
    return X


@njit(cache=True, nogil=True)
def _stirling_tail(x, x2):
    return (13680. - (462. - (132. - (99. - 140. / x2) / x2) / x2) / x2) / x / 166320.


@njit(cache=True, nogil=True)
def _binomial_btpe_nb(rng, n, p):
    r = min(p, 1.0 - p)
    q = 1.0 - r
    fm = n * r + r
    m = np.int64(np.floor(fm))
    p1 = np.floor(2.195 * np.sqrt(n * r * q) - 4.6 * q) + 0.5
    xm = m + 0.5
    xl = xm - p1
    xr = xm + p1
    c = 0.134 + 20.5 / (15.3 + m)
    a = (fm - xl) / (fm - xl * r)
    laml = a * (1.0 + a / 2.0)
    a = (xr - fm) / (xr * q)
    lamr = a * (1.0 + a / 2.0)
    p2 = p1 * (1.0 + 2.0 * c)
    p3 = p2 + c / laml
    p4 = p3 + c / lamr
    nrq = n * r * q
    while True:
        u = rng.random() * p4
        v = rng.random()
        if u <= p1:
            y = np.int64(np.floor(xm - p1 * v + u))
            break
        if u <= p2:
            x = xl + (u - p1) / c
            v = v * c + 1.0 - np.fabs(m - x + 0.5) / p1
            if v > 1.0:
                continue
            y = np.int64(np.floor(x))
        elif u <= p3:
            y = np.int64(np.floor(xl + np.log(v) / laml))
            if y < 0 or v == 0.0:
                continue
            v = v * (u - p2) * laml
        else:
            y = np.int64(np.floor(xr - np.log(v) / lamr))
            if y > n or v == 0.0:
                continue
            v = v * (u - p3) * lamr
        k = abs(y - m)
        if not (k > 20 and k < nrq / 2.0 - 1):
            s = r / q
            a = s * (n + 1)
            F = 1.0
            if m < y:
                for i in range(m + 1, y + 1):
                    F = F * (a / i - s)
            elif m > y:
                for i in range(y + 1, m + 1):
                    F = F / (a / i - s)
            if v > F:
                continue
            break
        rho = (k / nrq) * ((k * (k / 3.0 + 0.625) + 0.16666666666666666) / nrq + 0.5)
        t = -(k * k) / (2 * nrq)
        A = np.log(v)
        if A < t - rho:
            break
        if A > t + rho:
            continue
        x1 = y + 1.0
        f1 = m + 1.0
        z = n + 1.0 - m
        w = n - y + 1.0
        bound = (xm * np.log(f1 / x1) + (n - m + 0.5) * np.log(z / w) + (y - m) * np.log(w * r / (x1 * q))
                 + _stirling_tail(f1, f1 * f1) + _stirling_tail(z, z * z)
                 + _stirling_tail(x1, x1 * x1) + _stirling_tail(w, w * w))
        if A > bound:
            continue
        break
    if p > 0.5:
        y = n - y
    return y


@njit(cache=True, nogil=True)
def binomial_nb(rng, n, p):
    """Same stream as ``numpy.random.Generator.binomial(n, p)``."""
    if n == 0 or p == 0.0:
        return np.int64(0)
    if p <= 0.5:
        if p * n <= 30.0:
            return np.int64(_binomial_inversion_nb(rng, n, p))
        return _binomial_btpe_nb(rng, n, p)
    q = 1.0 - p
    if q * n <= 30.0:
        return n - _binomial_inversion_nb(rng, n, q)
    return n - _binomial_btpe_nb(rng, n, q)


@njit(cache=True, nogil=True)
def _draw_into_nb(buf, lo, hi, p, rng, out):
    for i in range(lo, hi):
        n = buf[i]
        if n <= EXACT_MAX:
            out[i - lo] = binomial_nb(rng, np.int64(n), p)
    for i in range(lo, hi):
        n = buf[i]
        if n > EXACT_MAX:
            z = rng.standard_normal()
            k = np.rint(n * p + np.sqrt(n * p * (1.0 - p)) * z)
            out[i - lo] = min(max(k, 0.0), n)


@njit(cache=True)
def _half_position_nb(h, n, base):
    j = -1
    for i in range(n):
        if h[i] >= 0.5:
            j = i
        else:
            break
    hj = 1.0 if j < 0 else h[j]
    hn = h[j + 1] if j + 1 < n else 0.0
    return base + j + (hj - 0.5) / (hj - hn)


@njit(cache=True, nogil=True)
def run_nb(c0, floor0, a, mu, mode, param, steps, rng, snapshot_every):
    w0 = c0.size
    cap = 2 * w0 + 64
    buf = np.zeros(cap)
    buf[:w0] = c0
    lo = 0
    hi = w0
    floor = floor0
    inn = np.zeros(cap)
    imi = np.zeros(cap)
    ymax = np.empty(steps, dtype=np.int64)
    ymin = np.empty(steps, dtype=np.int64)
    tot = np.empty(steps)
    n_snap = steps // snapshot_every if snapshot_every > 0 else 0
    snap_steps = np.empty(n_snap, dtype=np.int64)
    snap_offsets = np.zeros(n_snap + 1, dtype=np.int64)
    snap_data = np.empty(max(16, n_snap * (w0 + 16)))
    k_snap = 0
    for t in range(steps):
        w = hi - lo
        if hi + 1 > cap:
            if 2 * (w + 1) > cap:
                cap = 2 * cap
                inn = np.zeros(cap)
                imi = np.zeros(cap)
            nb = np.zeros(cap)
            nb[:w] = buf[lo:hi]
            buf = nb
            lo = 0
            hi = w
        _draw_into_nb(buf, lo, hi, a, rng, inn)
        if mu == 1.0:
            for i in range(w):
                imi[i] = buf[lo + i]
        else:
            _draw_into_nb(buf, lo, hi, mu, rng, imi)
        buf[hi] = 0.0
        for i in range(hi - 1, lo - 1, -1):
            k = i - lo
            buf[i + 1] += inn[k]
            buf[i] = buf[i] - inn[k] + imi[k]
        hi += 1
        while hi > lo and buf[hi - 1] == 0.0:
            hi -= 1
        while lo < hi and buf[lo] == 0.0:
            lo += 1
            floor += 1
        if mode == MODE_TOP_N:
            total = 0.0
            for i in range(lo, hi):
                total += buf[i]
            excess = total - param
            if excess > 0:
                acc = 0.0
                while acc + buf[lo] <= excess:
                    acc += buf[lo]
                    buf[lo] = 0.0
                    lo += 1
                    floor += 1
                buf[lo] = (acc + buf[lo]) - excess
        else:
            cut = (floor + hi - lo - 1) - np.int64(param) + 1
            while floor < cut:
                buf[lo] = 0.0
                lo += 1
                floor += 1
        while lo < hi and buf[lo] == 0.0:
            lo += 1
            floor += 1
        total = 0.0
        for i in range(lo, hi):
            total += buf[i]
        ymin[t] = floor
        ymax[t] = floor + hi - lo - 1
        tot[t] = total
        if snapshot_every > 0 and (t + 1) % snapshot_every == 0:
            start = snap_offsets[k_snap]
            need = start + hi - lo
            if need > snap_data.size:
                grown = np.empty(2 * need)
                grown[:start] = snap_data[:start]
                snap_data = grown
            snap_data[start:need] = buf[lo:hi]
            snap_steps[k_snap] = t + 1
            snap_offsets[k_snap + 1] = need
            k_snap += 1
    return (buf[lo:hi].copy(), floor, ymax, ymin, tot, snap_steps, snap_offsets,
            snap_data[: snap_offsets[k_snap]].copy())


@njit(cache=True)
def cutoff_advance_nb(h, base, a, mu, eps, steps):
    b = 1.0 - a + mu
    cap = h.size + 8
    cur = np.zeros(cap)
    cur[: h.size] = h
    n = h.size
    pos = np.empty(steps)
    for t in range(steps):
        if n + 1 > cap:
            cap = 2 * cap
            grown = np.zeros(cap)
            grown[:n] = cur[:n]
            cur = grown
        cur[n] = a * cur[n - 1]
        for i in range(n - 1, 0, -1):
            cur[i] = min(1.0, b * cur[i] + a * cur[i - 1])
        cur[0] = min(1.0, b * cur[0] + a)
        n += 1
        while n > 1 and cur[n - 1] < eps:
            n -= 1
        if cur[0] < eps:
            cur[0] = 0.0
        ones = 0
        while ones + 1 < n and cur[ones + 1] >= 1.0:
            ones += 1
        if ones > 0:
            for i in range(n - ones):
                cur[i] = cur[i + ones]
            n -= ones
            base += ones
        pos[t] = _half_position_nb(cur, n, base)
    return cur[:n].copy(), base, pos


# ---------------------------------------------------------------- dispatch

if USE_NUMBA:
    run_trajectory = run_nb
    cutoff_advance = cutoff_advance_nb
else:
    run_trajectory = run_np
    cutoff_advance = cutoff_advance_np
