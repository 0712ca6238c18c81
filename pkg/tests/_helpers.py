"""Shared test utilities: deterministic inputs and scalar oracle kernels.

The oracles here are deliberate re-derivations: plain per-pixel Python
loops in float32, independent of the vectorized implementations they check.
"""

from __future__ import annotations

import numpy as np

from ispbench.images import PlanarImage, RawBayerImage, planar_from_planes
from ispbench.params import GamutParams, PipelineParams, ToneLUT, TransformMatrix, random_gamut

F = np.float32


def rand_planar(width=8, height=6, seed=0, lo=0.0, hi=1.0) -> PlanarImage:
    rng = np.random.default_rng(seed)
    planes = (lo + (hi - lo) * rng.random((3, height, width))).astype(np.float32)
    return PlanarImage(width=width, height=height, planes=planes)


def rand_raw(width=8, height=6, seed=0) -> RawBayerImage:
    rng = np.random.default_rng(seed)
    return RawBayerImage(
        width=width, height=height, mosaic=rng.random((height, width), dtype=np.float32)
    )


def rand_params(n=16, seed=1) -> PipelineParams:
    rng = np.random.default_rng(seed + 1000)
    return PipelineParams(
        transform=TransformMatrix((rng.random((3, 3)) - 0.5).astype(np.float32)),
        gamut=random_gamut(n, seed),
        tone=ToneLUT(rng.random((256, 3)).astype(np.float32)),
    )


# ---------------------------------------------------------------------------
# Scalar oracles
# ---------------------------------------------------------------------------

def demosaic_oracle(raw: RawBayerImage) -> PlanarImage:
    h, w = raw.height, raw.width
    m = raw.mosaic
    quarter, half = F(0.25), F(0.5)

    def at(y, x):
        return m[min(max(y, 0), h - 1), min(max(x, 0), w - 1)]

    out = np.empty((3, h, w), np.float32)
    for y in range(h):
        for x in range(w):
            edges = ((at(y - 1, x) + at(y + 1, x)) + at(y, x - 1)) + at(y, x + 1)
            diags = ((at(y - 1, x - 1) + at(y - 1, x + 1)) + at(y + 1, x - 1)) + at(
                y + 1, x + 1
            )
            if y % 2 == 0 and x % 2 == 0:  # R site
                r, g, b = at(y, x), edges * quarter, diags * quarter
            elif y % 2 == 0:  # G on an R row: R left/right, B up/down
                g = at(y, x)
                r = (at(y, x - 1) + at(y, x + 1)) * half
                b = (at(y - 1, x) + at(y + 1, x)) * half
            elif x % 2 == 0:  # G on a B row: R up/down, B left/right
                g = at(y, x)
                r = (at(y - 1, x) + at(y + 1, x)) * half
                b = (at(y, x - 1) + at(y, x + 1)) * half
            else:  # B site
                b, g, r = at(y, x), edges * quarter, diags * quarter
            out[0, y, x], out[1, y, x], out[2, y, x] = r, g, b
    return PlanarImage(width=w, height=h, planes=out)


def denoise_oracle(img: PlanarImage) -> PlanarImage:
    h, w = img.height, img.width
    out = np.empty((3, h, w), np.float32)
    for c in range(3):
        plane = img.planes[c]
        for y in range(h):
            for x in range(w):
                window = [
                    plane[min(max(y + dy, 0), h - 1), min(max(x + dx, 0), w - 1)]
                    for dy in (-1, 0, 1)
                    for dx in (-1, 0, 1)
                ]
                out[c, y, x] = sorted(window)[4]
    return PlanarImage(width=w, height=h, planes=out)


def transform_oracle(img: PlanarImage, m: TransformMatrix) -> PlanarImage:
    h, w = img.height, img.width
    out = np.empty((3, h, w), np.float32)
    mm = m.m
    for y in range(h):
        for x in range(w):
            r, g, b = img.planes[0, y, x], img.planes[1, y, x], img.planes[2, y, x]
            for c in range(3):
                out[c, y, x] = (mm[c, 0] * r + mm[c, 1] * g) + mm[c, 2] * b
    return PlanarImage(width=w, height=h, planes=out)


def gamut_oracle(img: PlanarImage, gp: GamutParams, unroll: int = 1) -> PlanarImage:
    """Two-loop scalar gamut: distances first, then left-to-right accumulation.

    With ``unroll`` > 1 the accumulation runs in that many partial sums
    (remainder chunk last, lanes folded left to right).
    """
    h, w = img.height, img.width
    n = gp.n
    pts, wts, coefs = gp.ctrl_pts, gp.weights, gp.coefs
    out = np.empty((3, h, w), np.float32)
    for y in range(h):
        for x in range(w):
            r, g, b = img.planes[0, y, x], img.planes[1, y, x], img.planes[2, y, x]
            d = np.empty(n, np.float32)
            for i in range(n):
                dr = r - pts[i, 0]
                dg = g - pts[i, 1]
                db = b - pts[i, 2]
                d[i] = np.sqrt((dr * dr + dg * dg) + db * db)
            for c in range(3):
                lanes = [F(0.0)] * unroll
                for i in range(n):
                    lanes[i % unroll] = lanes[i % unroll] + wts[i, c] * d[i]
                acc = lanes[0]
                for j in range(1, unroll):
                    acc = acc + lanes[j]
                acc = acc + coefs[0, c]
                acc = acc + coefs[1, c] * r
                acc = acc + coefs[2, c] * g
                acc = acc + coefs[3, c] * b
                out[c, y, x] = acc
    return PlanarImage(width=w, height=h, planes=out)


def tone_oracle(img: PlanarImage, t: ToneLUT) -> PlanarImage:
    h, w = img.height, img.width
    out = np.empty((3, h, w), np.float32)
    for c in range(3):
        for y in range(h):
            for x in range(w):
                v = img.planes[c, y, x] * F(255.0)
                idx = int(np.sign(v) * np.floor(np.abs(v) + F(0.5)))
                idx = min(max(idx, 0), 255)
                out[c, y, x] = t.lut[idx, c]
    return PlanarImage(width=w, height=h, planes=out)


def planar_from_rgb(rgb_rows) -> PlanarImage:
    """Build a PlanarImage from nested [[(r,g,b), ...], ...] rows."""
    arr = np.asarray(rgb_rows, dtype=np.float32)
    return planar_from_planes(arr[..., 0], arr[..., 1], arr[..., 2])
