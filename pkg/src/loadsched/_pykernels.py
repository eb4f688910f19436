"""Pure-Python (numpy) scoring kernels.

Same contract and the same floating-point operation order as the compiled
``_ckernels`` module:

* demand is subtracted from the forecast one load at a time, in load order;
* per-candidate costs are accumulated over the horizon front to back.
"""
from __future__ import annotations

import math

import numpy as np

CHUNK_ELEMENTS = 1 << 21


def row_traces(rows, hold, p0, a_on, b_on, a_off, p_off):
    rows = np.asarray(rows, dtype=np.uint8)
    count, horizon = rows.shape
    out = np.empty((count, horizon * hold))
    p = np.full(count, float(p0))
    on = rows.astype(bool)
    for col in range(horizon):
        w = on[:, col]
        for sub in range(hold):
            p = np.where(w, b_on + a_on * p, p_off + a_off * (p - p_off))
            out[:, col * hold + sub] = p
    return out


def _errors(forecast, traces, head):
    """Tracking errors for every candidate whose load-0 row is in ``head``."""
    e = forecast[None, :] - traces[0][head]
    for t in traces[1:]:
        e = (e[:, None, :] - t[None, :, :]).reshape(-1, e.shape[-1])
    return e


def _chunks(traces):
    c0 = traces[0].shape[0]
    per_head = max(1, math.prod(t.shape[0] for t in traces[1:]) * traces[0].shape[1])
    step = max(1, CHUNK_ELEMENTS // per_head)
    tail = math.prod(t.shape[0] for t in traces[1:])
    for start in range(0, c0, step):
        stop = min(c0, start + step)
        yield start * tail, slice(start, stop)


def _first_on(first_bits, head):
    n_on = first_bits[0][head].astype(np.int64)
    for bits in first_bits[1:]:
        n_on = (n_on[:, None] + bits[None, :].astype(np.int64)).reshape(-1)
    return n_on


def best_candidate(forecast, traces, first_bits, mu, floor, pref, hard, threads=1, n_cost=None, seed=None):
    """Return ``(flat_index, cost, any_finite)`` of the lexicographic argmin.

    ``flat_index`` is the row-major index into the product of the per-load
    candidate rows (load 0 most significant).  When ``hard`` is set and no
    candidate keeps every error strictly positive, the fallback ordering
    (least squared predicted exceedance, fewest loads on first, index) picks
    the result and ``cost`` is ``inf``.

    Columns from ``n_cost`` on only take part in the hard feasibility test.
    ``threads`` and ``seed`` (a warm-start hint for the compiled search) do
    not change the result and are ignored here.
    """
    forecast = np.asarray(forecast, dtype=float)
    traces = [np.asarray(t, dtype=float) for t in traces]
    first_bits = [np.asarray(b, dtype=np.uint8) for b in first_bits]
    log_floor = math.log(floor / pref)
    n_cost = forecast.shape[0] if n_cost is None else n_cost

    best_cost, best_idx = math.inf, -1
    for offset, head in _chunks(traces):
        e = _errors(forecast, traces, head)
        cost = np.zeros(e.shape[0])
        with np.errstate(divide="ignore", invalid="ignore"):
            for col in range(n_cost):
                el = e[:, col]
                lg = np.where(el > floor, np.log(np.maximum(el, floor) / pref), log_floor)
                cost = cost + (el * el - mu * lg)
        if hard:
            cost[np.any(e <= 0.0, axis=1)] = math.inf
        local = int(np.argmin(cost))
        if cost[local] < best_cost:
            best_cost, best_idx = float(cost[local]), offset + local
    if best_idx >= 0:
        return best_idx, best_cost, True

    best_key, best_idx = None, -1
    for offset, head in _chunks(traces):
        e = _errors(forecast, traces, head)
        exceed = np.zeros(e.shape[0])
        for col in range(n_cost):
            neg = np.minimum(e[:, col], 0.0)
            exceed = exceed + neg * neg
        n_on = _first_on(first_bits, head)
        order = np.lexsort((np.arange(len(exceed)), n_on, exceed))
        local = int(order[0])
        key = (float(exceed[local]), int(n_on[local]))
        if best_key is None or key < best_key:
            best_key, best_idx = key, offset + local
    return best_idx, math.inf, False
