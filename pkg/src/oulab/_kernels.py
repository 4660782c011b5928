"""Off-grid evaluation of truncated Fourier series, and its transpose.

Forward (``evaluate``)::

    out[p] = Re sum_k a[k] exp(i xi_k . y[p])

Transpose (``spread``)::

    b[k] = sum_p w[p] exp(i xi_k . y[p])

``a``/``b`` are N-d complex arrays over the frequency lattice in numpy FFT
order, ``y`` has shape (P, N) and ``xi`` is the 1-D axis frequency vector
(the same on every axis).  Both kernels cost O(P M^N).  The numba versions
rebuild the per-axis exponentials by recurrence and work on split real and
imaginary parts; the numpy versions use chunked BLAS contractions.
"""
from __future__ import annotations

import numpy as np

from ._backend import BACKEND, HAVE_NUMBA

__all__ = ["evaluate", "spread", "evaluate_numpy", "spread_numpy", "BACKEND"]

_CHUNK = 4096


def _axis_exp(y, xi):
    return np.exp(1j * np.multiply.outer(y, xi))


def evaluate_numpy(a: np.ndarray, y: np.ndarray, xi: np.ndarray) -> np.ndarray:
    n = a.ndim
    P = y.shape[0]
    out = np.empty(P)
    for s in range(0, P, _CHUNK):
        yc = y[s:s + _CHUNK]
        e = [_axis_exp(yc[:, i], xi) for i in range(n)]
        if n == 1:
            out[s:s + _CHUNK] = (e[0] @ a).real
        elif n == 2:
            tmp = e[1] @ a.T  # (c, M) indexed by k0
            out[s:s + _CHUNK] = np.einsum("pk,pk->p", e[0], tmp).real
        else:
            tmp = np.einsum("ijk,pk->pij", a, e[2])
            tmp = np.einsum("pij,pj->pi", tmp, e[1])
            out[s:s + _CHUNK] = np.einsum("pi,pi->p", tmp, e[0]).real
    return out


def spread_numpy(w: np.ndarray, y: np.ndarray, xi: np.ndarray, ndim: int) -> np.ndarray:
    M = xi.size
    b = np.zeros((M,) * ndim, dtype=complex)
    P = y.shape[0]
    for s in range(0, P, _CHUNK):
        yc = y[s:s + _CHUNK]
        wc = w[s:s + _CHUNK]
        e = [_axis_exp(yc[:, i], xi) for i in range(ndim)]
        if ndim == 1:
            b += wc @ e[0]
        elif ndim == 2:
            b += (e[0] * wc[:, None]).T @ e[1]
        else:
            b += np.einsum("pi,pj,pk->ijk", e[0] * wc[:, None], e[1], e[2])
    return b


if HAVE_NUMBA:
    import numba as nb

    # Real and imaginary parts are kept in separate float arrays so the inner
    # loops vectorize; complex128 accumulation does not.

    @nb.njit(cache=True, fastmath=True)
    def _fill_axis(cr, ci, y, dxi, M):
        # c[k] = exp(i xi_k y) with xi_k = dxi * m_k, m_k the FFT-order integer
        wr = np.cos(dxi * y)
        wi = np.sin(dxi * y)
        zr, zi = 1.0, 0.0
        half = M // 2
        for m in range(half):
            cr[m] = zr
            ci[m] = zi
            if m > 0:
                cr[M - m] = zr
                ci[M - m] = -zi
            zr, zi = zr * wr - zi * wi, zr * wi + zi * wr
        # Nyquist index M/2 carries m = -M/2
        cr[half] = zr
        ci[half] = -zi

    @nb.njit(cache=True, fastmath=True)
    def _eval1(ar, ai, y, dxi):
        M = ar.shape[0]
        P = y.shape[0]
        out = np.empty(P)
        cr = np.empty(M)
        ci = np.empty(M)
        for p in range(P):
            _fill_axis(cr, ci, y[p, 0], dxi, M)
            s = 0.0
            for k in range(M):
                s += ar[k] * cr[k] - ai[k] * ci[k]
            out[p] = s
        return out

    @nb.njit(cache=True, fastmath=True)
    def _eval2(ar, ai, y, dxi):
        M = ar.shape[0]
        P = y.shape[0]
        out = np.empty(P)
        c0r = np.empty(M)
        c0i = np.empty(M)
        c1r = np.empty(M)
        c1i = np.empty(M)
        for p in range(P):
            _fill_axis(c0r, c0i, y[p, 0], dxi, M)
            _fill_axis(c1r, c1i, y[p, 1], dxi, M)
            s = 0.0
            for i in range(M):
                accr = 0.0
                acci = 0.0
                for j in range(M):
                    accr += ar[i, j] * c1r[j] - ai[i, j] * c1i[j]
                    acci += ar[i, j] * c1i[j] + ai[i, j] * c1r[j]
                s += accr * c0r[i] - acci * c0i[i]
            out[p] = s
        return out

    @nb.njit(cache=True, fastmath=True)
    def _eval3(ar, ai, y, dxi):
        M = ar.shape[0]
        P = y.shape[0]
        out = np.empty(P)
        c0r = np.empty(M)
        c0i = np.empty(M)
        c1r = np.empty(M)
        c1i = np.empty(M)
        c2r = np.empty(M)
        c2i = np.empty(M)
        for p in range(P):
            _fill_axis(c0r, c0i, y[p, 0], dxi, M)
            _fill_axis(c1r, c1i, y[p, 1], dxi, M)
            _fill_axis(c2r, c2i, y[p, 2], dxi, M)
            s = 0.0
            for i in range(M):
                sr = 0.0
                si = 0.0
                for j in range(M):
                    accr = 0.0
                    acci = 0.0
                    for k in range(M):
                        accr += ar[i, j, k] * c2r[k] - ai[i, j, k] * c2i[k]
                        acci += ar[i, j, k] * c2i[k] + ai[i, j, k] * c2r[k]
                    sr += accr * c1r[j] - acci * c1i[j]
                    si += accr * c1i[j] + acci * c1r[j]
                s += sr * c0r[i] - si * c0i[i]
            out[p] = s
        return out

    @nb.njit(cache=True, fastmath=True)
    def _spread1(w, y, dxi, M):
        br = np.zeros(M)
        bi = np.zeros(M)
        cr = np.empty(M)
        ci = np.empty(M)
        for p in range(y.shape[0]):
            if w[p] == 0.0:
                continue
            _fill_axis(cr, ci, y[p, 0], dxi, M)
            for k in range(M):
                br[k] += w[p] * cr[k]
                bi[k] += w[p] * ci[k]
        return br, bi

    @nb.njit(cache=True, fastmath=True)
    def _spread2(w, y, dxi, M):
        br = np.zeros((M, M))
        bi = np.zeros((M, M))
        c0r = np.empty(M)
        c0i = np.empty(M)
        c1r = np.empty(M)
        c1i = np.empty(M)
        for p in range(y.shape[0]):
            if w[p] == 0.0:
                continue
            _fill_axis(c0r, c0i, y[p, 0], dxi, M)
            _fill_axis(c1r, c1i, y[p, 1], dxi, M)
            for i in range(M):
                xr = w[p] * c0r[i]
                xi_ = w[p] * c0i[i]
                for j in range(M):
                    br[i, j] += xr * c1r[j] - xi_ * c1i[j]
                    bi[i, j] += xr * c1i[j] + xi_ * c1r[j]
        return br, bi

    @nb.njit(cache=True, fastmath=True)
    def _spread3(w, y, dxi, M):
        br = np.zeros((M, M, M))
        bi = np.zeros((M, M, M))
        c0r = np.empty(M)
        c0i = np.empty(M)
        c1r = np.empty(M)
        c1i = np.empty(M)
        c2r = np.empty(M)
        c2i = np.empty(M)
        for p in range(y.shape[0]):
            if w[p] == 0.0:
                continue
            _fill_axis(c0r, c0i, y[p, 0], dxi, M)
            _fill_axis(c1r, c1i, y[p, 1], dxi, M)
            _fill_axis(c2r, c2i, y[p, 2], dxi, M)
            for i in range(M):
                xr = w[p] * c0r[i]
                xi_ = w[p] * c0i[i]
                for j in range(M):
                    yr = xr * c1r[j] - xi_ * c1i[j]
                    yi = xr * c1i[j] + xi_ * c1r[j]
                    for k in range(M):
                        br[i, j, k] += yr * c2r[k] - yi * c2i[k]
                        bi[i, j, k] += yr * c2i[k] + yi * c2r[k]
        return br, bi

    _EVAL = {1: _eval1, 2: _eval2, 3: _eval3}
    _SPREAD = {1: _spread1, 2: _spread2, 3: _spread3}

    def evaluate_numba(a, y, xi):
        dxi = float(xi[1] - xi[0])
        a = np.asarray(a, dtype=np.complex128)
        return _EVAL[a.ndim](np.ascontiguousarray(a.real), np.ascontiguousarray(a.imag),
                             np.ascontiguousarray(y, dtype=np.float64), dxi)

    def spread_numba(w, y, xi, ndim):
        dxi = float(xi[1] - xi[0])
        br, bi = _SPREAD[ndim](np.ascontiguousarray(w, dtype=np.float64),
                               np.ascontiguousarray(y, dtype=np.float64), dxi, xi.size)
        return br + 1j * bi

    evaluate = evaluate_numba
    spread = spread_numba
    __all__ += ["evaluate_numba", "spread_numba"]
else:  # pragma: no cover - exercised with OULAB_BACKEND=numpy
    evaluate = evaluate_numpy
    spread = spread_numpy
