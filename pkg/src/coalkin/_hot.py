"""Inner loops of the right-hand side, in two interchangeable flavours.

Every routine exists as ``<name>_numpy`` and, when numba is importable,
``<name>_numba`` with the same signature.  The module-level names
(``conv``, ``midpoint_gain``, ``logmass_gain``) are bound to the backend
chosen in :mod:`coalkin._backend`.

Array conventions: ``ext`` is the node array padded with ``pad`` ghost
entries on each side, so node ``i`` lives at ``ext[pad + i]``.  Kernels are
even, so only taps with offset ``k >= 0`` are passed (ascending); tap values
are raw kernel values and the ``dx`` quadrature factor is applied here.
"""
from __future__ import annotations

import math

import numpy as np

from ._backend import BACKEND, HAVE_NUMBA

SHAPE_CODES = {"gaussian": 0, "step": 1}
_INV_SQRT_2PI = 1.0 / math.sqrt(2.0 * math.pi)
_EDGE_RTOL = 1e-9


# ---------------------------------------------------------------------------
# numpy path
# ---------------------------------------------------------------------------

def conv_numpy(ext, offs, vals, n, pad, dx):
    k = int(offs[-1]) if offs.size else 0
    dense = np.zeros(2 * k + 1)
    dense[k + offs] = vals
    dense[k - offs] = vals
    seg = ext[pad - k: pad + n + k]
    return np.convolve(seg, dense, mode="valid") * dx


def midpoint_gain_numpy(ext, offs, vals, n, pad, dx):
    out = np.zeros(n)
    for k, w in zip(offs, vals):
        k = int(k)
        if k == 0:
            out += w * ext[pad: pad + n] ** 2
        else:
            out += 2.0 * w * ext[pad + k: pad + k + n] * ext[pad - k: pad - k + n]
    return out * dx


def _keval_numpy(shape, lam, sigma, h, x):
    def base(u):
        if shape == 0:
            return lam * _INV_SQRT_2PI / sigma * np.exp(-0.5 * (u / sigma) ** 2)
        au = np.abs(u)
        tol = _EDGE_RTOL * max(1.0, sigma)
        plateau = lam / (2.0 * sigma)
        val = np.where(au < sigma - tol, plateau, 0.0)
        return np.where(np.abs(au - sigma) <= tol, 0.5 * plateau, val)

    if h == 0.0:
        return base(x)
    return 0.5 * (base(x - h) + base(x + h))


def logmass_pieces(shape, lam, sigma, h, radius):
    """Intervals of ``s = y* - z`` to integrate over, with a constant factor each.

    Gaussians give one interval ``[-radius, radius]`` with factor 1 (the kernel
    is sampled at the nodes instead).  Step kernels are split at their jumps
    and each piece carries the kernel's constant value there, so the jumps
    never fall inside a quadrature cell.
    """
    if shape == 0:
        return np.array([-radius]), np.array([radius]), np.array([1.0])
    bps = np.unique(np.array([-h - sigma, -h + sigma, h - sigma, h + sigma]))
    lo, hi = bps[:-1], bps[1:]
    val = _keval_numpy(shape, lam, sigma, h, 0.5 * (lo + hi))
    keep = val > 0
    return lo[keep], hi[keep], val[keep]


def _logmass_row_numpy(rho, x0, dx, i, shape, lam, sigma, h, s_lo, s_hi, pval):
    x = x0 + i * dx
    cap = x + np.log1p(-np.exp(x0 - x))            # y* = x0 here
    jlo = max(0, int(np.floor((x - np.log1p(np.exp(s_hi.max())) - x0) / dx)) - 1)
    z = x0 + dx * np.arange(jlo, i + 1)
    q = np.exp(z - x)
    ok = (z < cap) & (np.arange(jlo, i + 1) < i)
    qs = np.where(ok, q, 0.0)
    ystar = x + np.log1p(-qs)
    g = np.where(ok, np.interp(ystar, x0 + dx * np.arange(rho.size), rho) * rho[jlo: i + 1] / (1.0 - qs), 0.0)
    if shape == 0:
        g = g * np.where(ok, _keval_numpy(shape, lam, sigma, h, ystar - z), 0.0)
    cum = np.concatenate(([0.0], np.cumsum(0.5 * dx * (g[1:] + g[:-1]))))
    m = g.size

    def prim(zz):
        pos = (zz - x0) / dx - jlo
        c = np.clip(np.floor(pos).astype(np.int64), 0, m - 2)
        f = pos - c
        gz = g[c] * (1.0 - f) + g[c + 1] * f
        return cum[c] + 0.5 * f * dx * (g[c] + gz)

    za = np.maximum(x - np.log1p(np.exp(s_hi)), x0)
    zb = np.minimum(x - np.log1p(np.exp(s_lo)), cap)
    use = za < zb
    if m < 2 or not use.any():
        return 0.0
    return 0.5 * float(np.sum(pval[use] * (prim(zb[use]) - prim(za[use]))))


def logmass_gain_numpy(rho, x0, dx, shape, lam, sigma, h, s_lo, s_hi, pval):
    out = np.zeros(rho.size)
    for i in range(1, rho.size):
        out[i] = _logmass_row_numpy(rho, x0, dx, i, shape, lam, sigma, h, s_lo, s_hi, pval)
    return out


# ---------------------------------------------------------------------------
# numba path
# ---------------------------------------------------------------------------

if HAVE_NUMBA:
    from numba import njit

    @njit(cache=True, nogil=True)
    def conv_numba(ext, offs, vals, n, pad, dx):
        # Tap-major sweeps keep the inner loop contiguous so it vectorizes.
        out = np.zeros(n)
        for t in range(offs.shape[0]):
            k = offs[t]
            w = vals[t]
            if k == 0:
                for i in range(n):
                    out[i] += w * ext[pad + i]
            else:
                lo = pad - k
                hi = pad + k
                for i in range(n):
                    out[i] += w * (ext[lo + i] + ext[hi + i])
        for i in range(n):
            out[i] *= dx
        return out

    @njit(cache=True, nogil=True)
    def midpoint_gain_numba(ext, offs, vals, n, pad, dx):
        out = np.zeros(n)
        for t in range(offs.shape[0]):
            k = offs[t]
            if k == 0:
                w = vals[t]
                for i in range(n):
                    out[i] += w * ext[pad + i] * ext[pad + i]
            else:
                w = 2.0 * vals[t]
                lo = pad - k
                hi = pad + k
                for i in range(n):
                    out[i] += w * ext[hi + i] * ext[lo + i]
        for i in range(n):
            out[i] *= dx
        return out

    @njit(cache=True, nogil=True, inline="always")
    def _kbase(shape, lam, sigma, u):
        if shape == 0:
            return lam * _INV_SQRT_2PI / sigma * math.exp(-0.5 * (u / sigma) ** 2)
        au = abs(u)
        tol = _EDGE_RTOL * max(1.0, sigma)
        plateau = lam / (2.0 * sigma)
        if abs(au - sigma) <= tol:
            return 0.5 * plateau
        if au < sigma:
            return plateau
        return 0.0

    @njit(cache=True, nogil=True, inline="always")
    def _keval_numba(shape, lam, sigma, h, u):
        if h == 0.0:
            return _kbase(shape, lam, sigma, u)
        return 0.5 * (_kbase(shape, lam, sigma, u - h) + _kbase(shape, lam, sigma, u + h))

    @njit(cache=True, nogil=True, inline="always")
    def _prim(g, cum, m, pos, dx):
        # Integral of the piecewise-linear interpolant of g from node 0 to pos.
        c = int(math.floor(pos))
        if c < 0:
            c = 0
        elif c > m - 2:
            c = m - 2
        f = pos - c
        gz = g[c] * (1.0 - f) + g[c + 1] * f
        return cum[c] + 0.5 * f * dx * (g[c] + gz)

    @njit(cache=True, nogil=True)
    def logmass_gain_numba(rho, x0, dx, shape, lam, sigma, h, s_lo, s_hi, pval):
        n = rho.shape[0]
        out = np.zeros(n)
        reach = math.log1p(math.exp(s_hi.max()))
        g = np.zeros(n + 1)
        cum = np.zeros(n + 1)
        for i in range(1, n):
            x = x0 + i * dx
            cap = x + math.log1p(-math.exp(x0 - x))
            jlo = int(math.floor((x - reach - x0) / dx)) - 1
            if jlo < 0:
                jlo = 0
            m = i + 1 - jlo
            if m < 2:
                continue
            for t in range(m):
                j = jlo + t
                z = x0 + j * dx
                if j == i or z >= cap:
                    g[t] = 0.0
                    continue
                q = math.exp(z - x)
                ystar = x + math.log1p(-q)
                pos = (ystar - x0) / dx
                k = int(math.floor(pos))
                if k >= n - 1:
                    ry = rho[n - 1]
                elif k < 0:
                    ry = rho[0]
                else:
                    fr = pos - k
                    ry = rho[k] * (1.0 - fr) + rho[k + 1] * fr
                val = ry * rho[j] / (1.0 - q)
                if shape == 0:
                    val *= _keval_numba(shape, lam, sigma, h, ystar - z)
                g[t] = val
            cum[0] = 0.0
            for t in range(1, m):
                cum[t] = cum[t - 1] + 0.5 * dx * (g[t] + g[t - 1])
            acc = 0.0
            for p in range(s_lo.shape[0]):
                za = max(x - math.log1p(math.exp(s_hi[p])), x0)
                zb = min(x - math.log1p(math.exp(s_lo[p])), cap)
                if za >= zb:
                    continue
                acc += pval[p] * (_prim(g, cum, m, (zb - x0) / dx - jlo, dx) - _prim(g, cum, m, (za - x0) / dx - jlo, dx))
            out[i] = 0.5 * acc
        return out

IMPLS = {
    "numpy": {
        "conv": conv_numpy,
        "midpoint_gain": midpoint_gain_numpy,
        "logmass_gain": logmass_gain_numpy,
    }
}
if HAVE_NUMBA:
    # np.convolve outruns the hand-written loop for kernel widths used here,
    # so both backends share it; conv_numba stays for the benchmark.
    IMPLS["numba"] = {
        "conv": conv_numpy,
        "midpoint_gain": midpoint_gain_numba,
        "logmass_gain": logmass_gain_numba,
    }

conv = IMPLS[BACKEND]["conv"]
midpoint_gain = IMPLS[BACKEND]["midpoint_gain"]
logmass_gain = IMPLS[BACKEND]["logmass_gain"]
