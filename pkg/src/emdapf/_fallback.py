"""Pure-Python/numpy implementations of the hot kernels.

Semantics are identical to the compiled ``_kernels`` module; the test-suite
checks both against each other when the extension is available.
"""

import numpy as np


def local_extrema(x):
    """Indices of interior local maxima and minima of ``x``.

    Strict three-point extrema, with a flat plateau reported once at its
    midpoint (lower-middle for even lengths). Plateaus touching either end of
    the array are not extrema.
    """
    x = np.ascontiguousarray(x, dtype=np.float64)
    empty = np.empty(0, dtype=np.int64)
    if x.size < 3:
        return empty, empty.copy()
    d = np.diff(x)
    nz = np.flatnonzero(d)
    if nz.size < 2:
        return empty, empty.copy()
    s = np.sign(d[nz])
    turn = np.flatnonzero(s[:-1] != s[1:])
    left = nz[turn] + 1
    right = nz[turn + 1]
    mid = (left + right) // 2
    is_max = s[turn] > 0
    return mid[is_max].astype(np.int64), mid[~is_max].astype(np.int64)


def zero_crossings(x):
    """Number of sign changes between successive non-zero samples."""
    x = np.asarray(x, dtype=np.float64)
    sg = np.sign(x)
    sg = sg[sg != 0]
    if sg.size < 2:
        return 0
    return int(np.count_nonzero(sg[1:] != sg[:-1]))


def sd_sum(h_prev, h_cur, eps):
    """Sum of (h_prev - h_cur)^2 / h_prev^2 over samples with |h_prev| >= eps.

    Returns ``(total, n_used)``.
    """
    h_prev = np.asarray(h_prev, dtype=np.float64)
    h_cur = np.asarray(h_cur, dtype=np.float64)
    keep = np.abs(h_prev) >= eps
    hp = h_prev[keep]
    diff = hp - h_cur[keep]
    return float(np.sum(diff * diff / (hp * hp))), int(keep.sum())


def hysteresis_track(ref, band, slew, dt, x0, s0, feedback_leg=-1):
    """Closed-loop hysteresis control of slew-limited current legs.

    ``ref`` has shape ``(legs, n)``. Each step every leg compares its error
    ``ref - current`` against ``+/- band/2``, latches a switch state, then
    ramps its current by ``+/- slew*dt``. When ``feedback_leg`` is a valid
    leg index, that leg's reference at each step is augmented by the summed
    tracking error of all other legs (measured after they have moved), so it
    cancels their residual common-mode current. Returns ``(current, state)``.
    """
    ref = np.ascontiguousarray(ref, dtype=np.float64)
    legs, n = ref.shape
    cur = np.empty((legs, n), dtype=np.float64)
    state = np.empty((legs, n), dtype=np.uint8)
    x = [float(v) for v in x0]
    s = [int(v) for v in s0]
    half = 0.5 * band
    step = slew * dt
    order = [leg for leg in range(legs) if leg != feedback_leg]
    if 0 <= feedback_leg < legs:
        order.append(feedback_leg)
    rows = ref.tolist()
    for k in range(n):
        other_err = 0.0
        for leg in order:
            r = rows[leg][k]
            if leg == feedback_leg:
                r += other_err
            e = r - x[leg]
            if e > half:
                s[leg] = 1
            elif e < -half:
                s[leg] = 0
            x[leg] += step if s[leg] else -step
            cur[leg, k] = x[leg]
            state[leg, k] = s[leg]
            if leg != feedback_leg:
                other_err += r - x[leg]
    return cur, state
