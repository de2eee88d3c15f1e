"""Fixpoint kernels over CSR adjacency arrays.

``succ_ptr/succ_idx`` and ``pred_ptr/pred_idx`` describe the deduplicated
edge relation.  Set ``BPKB_NUMBA=0`` to force the pure-numpy versions.
"""
from __future__ import annotations

import os

import numpy as np

try:
    from numba import njit
except ImportError:  # pragma: no cover - numba is a declared dependency
    njit = None

USE_NUMBA = njit is not None and os.environ.get("BPKB_NUMBA", "1") != "0"


# --- numpy ---------------------------------------------------------------------


def _sources(succ_ptr):
    n = len(succ_ptr) - 1
    return np.repeat(np.arange(n), np.diff(succ_ptr))


def ex_numpy(mask, succ_ptr, succ_idx):
    src = _sources(succ_ptr)
    hit = np.zeros(len(mask), dtype=np.int64)
    np.add.at(hit, src, mask[succ_idx].astype(np.int64))
    return hit > 0


def eu_numpy(left, right, succ_ptr, succ_idx, pred_ptr, pred_idx):
    z = right.copy()
    while True:
        nz = z | (left & ex_numpy(z, succ_ptr, succ_idx))
        if np.array_equal(nz, z):
            return z
        z = nz


def eg_numpy(mask, succ_ptr, succ_idx, pred_ptr, pred_idx):
    sink = np.diff(succ_ptr) == 0
    z = mask.copy()
    while True:
        nz = z & (sink | ex_numpy(z, succ_ptr, succ_idx))
        if np.array_equal(nz, z):
            return z
        z = nz


# --- numba ---------------------------------------------------------------------

if njit is not None:

    @njit(cache=True)
    def ex_numba(mask, succ_ptr, succ_idx):
        n = len(mask)
        out = np.zeros(n, dtype=np.bool_)
        for i in range(n):
            for k in range(succ_ptr[i], succ_ptr[i + 1]):
                if mask[succ_idx[k]]:
                    out[i] = True
                    break
        return out

    @njit(cache=True)
    def eu_numba(left, right, succ_ptr, succ_idx, pred_ptr, pred_idx):
        n = len(left)
        out = right.copy()
        stack = np.empty(n, dtype=np.int64)
        top = 0
        for i in range(n):
            if out[i]:
                stack[top] = i
                top += 1
        while top > 0:
            top -= 1
            v = stack[top]
            for k in range(pred_ptr[v], pred_ptr[v + 1]):
                u = pred_idx[k]
                if left[u] and not out[u]:
                    out[u] = True
                    stack[top] = u
                    top += 1
        return out

    @njit(cache=True)
    def eg_numba(mask, succ_ptr, succ_idx, pred_ptr, pred_idx):
        # keep a state while it is a sink or still has a successor inside the set
        n = len(mask)
        out = mask.copy()
        count = np.zeros(n, dtype=np.int64)
        stack = np.empty(n, dtype=np.int64)
        top = 0
        for i in range(n):
            if not out[i]:
                continue
            deg = succ_ptr[i + 1] - succ_ptr[i]
            if deg == 0:
                continue
            c = 0
            for k in range(succ_ptr[i], succ_ptr[i + 1]):
                if mask[succ_idx[k]]:
                    c += 1
            count[i] = c
            if c == 0:
                out[i] = False
                stack[top] = i
                top += 1
        while top > 0:
            top -= 1
            v = stack[top]
            for k in range(pred_ptr[v], pred_ptr[v + 1]):
                u = pred_idx[k]
                if out[u]:
                    count[u] -= 1
                    if count[u] == 0:
                        out[u] = False
                        stack[top] = u
                        top += 1
        return out

else:  # pragma: no cover
    ex_numba = eu_numba = eg_numba = None


BACKENDS = {"numpy": (ex_numpy, eu_numpy, eg_numpy)}
if njit is not None:
    BACKENDS["numba"] = (ex_numba, eu_numba, eg_numba)


def backend(name: str | None = None):
    """(ex, eu, eg) for ``name``, or the default selected by ``BPKB_NUMBA``."""
    if name is None:
        name = "numba" if USE_NUMBA else "numpy"
    return BACKENDS[name]
