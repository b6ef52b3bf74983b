"""Pure numpy implementations of the hot kernels.

These mirror ``_ckernels.pyx`` one to one and are used whenever the compiled
module is unavailable (or ``COGRA_PURE_PYTHON=1`` is set).
"""
import numpy as np

LOG2E = 1.4426950408889634


def policy_power(h, g, d0, kg, n0, s2, cw, clamp):
    """Closed-form power at every fading node.

    The policy is the positive root of the quadratic obtained from the
    stationarity condition ``log2(e) * [(1-cw) h/(n0+P h) + cw h/(n0+s2+P h)]
    = d0 + kg * g``, projected onto ``[0, clamp]``.
    """
    h = np.asarray(h, dtype=float)
    g = np.asarray(g, dtype=float)
    d = d0 + kg * g
    with np.errstate(divide="ignore", invalid="ignore", over="ignore"):
        c = LOG2E / d
        a = c - (2.0 * n0 + s2) / h
        cc = n0 * (n0 + s2) / (h * h) - c * (n0 + (1.0 - cw) * s2) / h
        disc = a * a - 4.0 * cc
        sq = np.sqrt(np.where(disc >= 0.0, disc, 0.0))
        # the A < 0 branch avoids cancellation between A and sqrt(disc)
        root = np.where(a >= 0.0, 0.5 * (a + sq), 2.0 * cc / (a - sq))
        p = np.where(disc >= 0.0, root, 0.0)
        p = np.where(np.isnan(p), 0.0, p)
    p = np.maximum(p, 0.0)
    p = np.where(d <= 0.0, np.inf, p)
    p = np.where(h <= 0.0, 0.0, p)
    return np.minimum(p, clamp)


def policy_moments(h, g, w, d0, kg, n0, s2, cw, clamp):
    """Weighted sums ``(sum w P, sum w P g)`` over the nodes."""
    p = policy_power(h, g, d0, kg, n0, s2, cw, clamp)
    with np.errstate(invalid="ignore"):
        return float(np.dot(w, p)), float(np.dot(w, p * g))


def rate_moments(h, g, w, d0, kg, n0, s2, cw, clamp):
    """Weighted sums of power, interference and the two log-rate terms.

    Returns ``(E[P], E[P g], E[log2(1 + P h/n0)], E[log2(1 + P h/(n0+s2))])``.
    """
    p = policy_power(h, g, d0, kg, n0, s2, cw, clamp)
    ph = p * np.asarray(h, dtype=float)
    with np.errstate(invalid="ignore"):
        clean = np.log1p(ph / n0) * LOG2E
        noisy = np.log1p(ph / (n0 + s2)) * LOG2E
        return (
            float(np.dot(w, p)),
            float(np.dot(w, p * g)),
            float(np.dot(w, clean)),
            float(np.dot(w, noisy)),
        )


def renewal_overlap(start_busy, unit_exp, mean_on, mean_off, horizon):
    """Time spent ON within ``(0, horizon]`` for each trial.

    Row ``i`` of ``unit_exp`` holds unit-mean exponential draws consumed in
    order; segment ``k`` lasts ``unit_exp[i, k]`` times the mean of its state,
    and states alternate starting from ``start_busy[i]``. Returns the overlap
    per trial and a flag marking rows that ran out of draws before reaching
    the horizon.
    """
    start_busy = np.asarray(start_busy, dtype=bool)
    unit_exp = np.asarray(unit_exp, dtype=float)
    k = np.arange(unit_exp.shape[1])
    busy = start_busy[:, None] ^ (k % 2 == 1)[None, :]
    dur = unit_exp * np.where(busy, mean_on, mean_off)
    ends = np.cumsum(dur, axis=1)
    starts = ends - dur
    seg = np.clip(np.minimum(ends, horizon) - starts, 0.0, None)
    overlap = np.where(busy, seg, 0.0).sum(axis=1)
    overflow = ends[:, -1] < horizon
    return overlap, overflow
