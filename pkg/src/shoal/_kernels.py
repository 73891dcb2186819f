"""Hilbert-curve numeric kernels.

The encode/decode loops are the hottest numeric paths in the package (every
non-shed update and every search cell touch them, and the test suite pushes
millions of round trips through the batch forms). They are compiled with numba
when it is available; setting the environment variable ``SHOAL_NO_NUMBA=1``
forces the fallback path (vectorized numpy for the batch forms, plain Python
for the scalar forms), which is also used when numba is not importable.

Grid convention: cells are addressed by integer grid coordinates
``0 <= x, y < 2**level``; the curve index ``d`` satisfies ``0 <= d < 4**level``.
The base orientation visits the four level-1 quadrants in the order
lower-left, upper-left, upper-right, lower-right, so each pair of curve digits
(base 4) is 0, 1, 2, 3 for those quadrants respectively.
"""

from __future__ import annotations

import os

import numpy as np

if os.environ.get("SHOAL_NO_NUMBA", "0") == "1":
    NUMBA_ENABLED = False
else:
    try:
        from numba import njit

        NUMBA_ENABLED = True
    except ImportError:
        NUMBA_ENABLED = False


def _encode_cell_py(x: int, y: int, level: int) -> int:
    d = 0
    s = 1 << (level - 1) if level > 0 else 0
    while s > 0:
        rx = 1 if (x & s) > 0 else 0
        ry = 1 if (y & s) > 0 else 0
        d += s * s * ((3 * rx) ^ ry)
        if ry == 0:
            if rx == 1:
                x = s - 1 - x
                y = s - 1 - y
            x, y = y, x
        s >>= 1
    return d


def _decode_cell_py(d: int, level: int) -> tuple[int, int]:
    x = y = 0
    t = d
    s = 1
    n = 1 << level
    while s < n:
        rx = 1 & (t >> 1)
        ry = 1 & (t ^ rx)
        if ry == 0:
            if rx == 1:
                x = s - 1 - x
                y = s - 1 - y
            x, y = y, x
        x += s * rx
        y += s * ry
        t >>= 2
        s <<= 1
    return x, y


def _encode_cells_np(xs: np.ndarray, ys: np.ndarray, level: int) -> np.ndarray:
    x = np.ascontiguousarray(xs, dtype=np.int64).copy()
    y = np.ascontiguousarray(ys, dtype=np.int64).copy()
    d = np.zeros(x.shape, np.int64)
    s = np.int64(1 << (level - 1)) if level > 0 else np.int64(0)
    while s > 0:
        rx = ((x & s) > 0).astype(np.int64)
        ry = ((y & s) > 0).astype(np.int64)
        d += s * s * ((3 * rx) ^ ry)
        swap = ry == 0
        flip = swap & (rx == 1)
        xf = x[flip]
        x[flip] = s - 1 - xf
        y[flip] = s - 1 - y[flip]
        tx = x[swap].copy()
        x[swap] = y[swap]
        y[swap] = tx
        s >>= 1
    return d


def _decode_cells_np(ds: np.ndarray, level: int) -> tuple[np.ndarray, np.ndarray]:
    t = np.ascontiguousarray(ds, dtype=np.int64).copy()
    x = np.zeros(t.shape, np.int64)
    y = np.zeros(t.shape, np.int64)
    s = np.int64(1)
    n = np.int64(1) << level
    while s < n:
        rx = np.int64(1) & (t >> 1)
        ry = np.int64(1) & (t ^ rx)
        swap = ry == 0
        flip = swap & (rx == 1)
        xf = x[flip]
        x[flip] = s - 1 - xf
        y[flip] = s - 1 - y[flip]
        tx = x[swap].copy()
        x[swap] = y[swap]
        y[swap] = tx
        x += s * rx
        y += s * ry
        t >>= 2
        s <<= 1
    return x, y


if NUMBA_ENABLED:

    @njit(cache=True, nogil=True)
    def _encode_cell_nb(x: int, y: int, level: int) -> int:  # pragma: no cover
        d = np.int64(0)
        s = np.int64(1) << (level - 1) if level > 0 else np.int64(0)
        while s > 0:
            rx = 1 if (x & s) > 0 else 0
            ry = 1 if (y & s) > 0 else 0
            d += s * s * ((3 * rx) ^ ry)
            if ry == 0:
                if rx == 1:
                    x = s - 1 - x
                    y = s - 1 - y
                t = x
                x = y
                y = t
            s >>= 1
        return d

    @njit(cache=True, nogil=True)
    def _decode_cell_nb(d: int, level: int):  # pragma: no cover
        x = np.int64(0)
        y = np.int64(0)
        t = np.int64(d)
        s = np.int64(1)
        n = np.int64(1) << level
        while s < n:
            rx = np.int64(1) & (t >> 1)
            ry = np.int64(1) & (t ^ rx)
            if ry == 0:
                if rx == 1:
                    x = s - 1 - x
                    y = s - 1 - y
                u = x
                x = y
                y = u
            x += s * rx
            y += s * ry
            t >>= 2
            s <<= 1
        return x, y

    @njit(cache=True, nogil=True)
    def _encode_cells_nb(xs, ys, level, out):  # pragma: no cover
        for i in range(xs.shape[0]):
            out[i] = _encode_cell_nb(xs[i], ys[i], level)

    @njit(cache=True, nogil=True)
    def _decode_cells_nb(ds, level, ox, oy):  # pragma: no cover
        for i in range(ds.shape[0]):
            x, y = _decode_cell_nb(ds[i], level)
            ox[i] = x
            oy[i] = y

    def encode_cell(x: int, y: int, level: int) -> int:
        return int(_encode_cell_nb(x, y, level))

    def decode_cell(d: int, level: int) -> tuple[int, int]:
        x, y = _decode_cell_nb(d, level)
        return int(x), int(y)

    def encode_cells(xs: np.ndarray, ys: np.ndarray, level: int) -> np.ndarray:
        xs = np.ascontiguousarray(xs, dtype=np.int64)
        ys = np.ascontiguousarray(ys, dtype=np.int64)
        out = np.empty(xs.shape, np.int64)
        _encode_cells_nb(xs, ys, level, out)
        return out

    def decode_cells(ds: np.ndarray, level: int) -> tuple[np.ndarray, np.ndarray]:
        ds = np.ascontiguousarray(ds, dtype=np.int64)
        ox = np.empty(ds.shape, np.int64)
        oy = np.empty(ds.shape, np.int64)
        _decode_cells_nb(ds, level, ox, oy)
        return ox, oy

else:
    encode_cell = _encode_cell_py
    decode_cell = _decode_cell_py
    encode_cells = _encode_cells_np
    decode_cells = _decode_cells_np
