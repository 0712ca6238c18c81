"""Reference implementations of the five pipeline stages.

These are the correctness oracles every optimization variant is checked
against, so the per-element float32 operation order is part of the contract:

* demosaic neighbor sums accumulate up, down, left, right (edge neighbors)
  and upper-left, upper-right, lower-left, lower-right (diagonals), then
  multiply by 0.25 (or 0.5 for two-neighbor means);
* the gamut distance is ``sqrt((dr*dr + dg*dg) + db*db)`` and the weighted
  distances accumulate in control-point order, left to right, in float32;
* the gamut bias terms are added in the order constant, r-term, g-term,
  b-term.

All arithmetic is float32 end to end; nothing clamps between stages (only
the tone-map index is clamped).
"""

from __future__ import annotations

import time

import numpy as np

from .images import PlanarImage, RawBayerImage, _round_half_away, planar_from_planes
from .params import GamutParams, PipelineParams, ToneLUT, TransformMatrix

# pixels per block in the gamut distance-matrix computation; keeps the
# (chunk, n_points) scratch arrays small enough to stay cache-resident
GAMUT_CHUNK = 1024

F32 = np.float32

STAGE_NAMES = ("demosaic", "denoise", "transform", "gamut", "tonemap")


def demosaic(raw: RawBayerImage) -> PlanarImage:
    """Bilinear RGGB interpolation with edge replication.

    R sites take G from the 4 edge neighbors and B from the 4 diagonals;
    G sites take R and B from their 2 co-linear neighbors; B sites mirror
    R sites.
    """
    h, w = raw.height, raw.width
    p = np.pad(raw.mosaic, 1, mode="edge")
    quarter = F32(0.25)
    half = F32(0.5)

    # neighbor views of the padded mosaic, aligned to output coordinates
    ctr = p[1:-1, 1:-1]
    up = p[:-2, 1:-1]
    dn = p[2:, 1:-1]
    lf = p[1:-1, :-2]
    rt = p[1:-1, 2:]
    ul = p[:-2, :-2]
    ur = p[:-2, 2:]
    dl = p[2:, :-2]
    dr = p[2:, 2:]

    r = np.empty((h, w), np.float32)
    g = np.empty((h, w), np.float32)
    b = np.empty((h, w), np.float32)

    ee = np.s_[0::2, 0::2]  # R sites
    eo = np.s_[0::2, 1::2]  # G sites on R rows
    oe = np.s_[1::2, 0::2]  # G sites on B rows
    oo = np.s_[1::2, 1::2]  # B sites

    r[ee] = ctr[ee]
    g[ee] = (((up[ee] + dn[ee]) + lf[ee]) + rt[ee]) * quarter
    b[ee] = (((ul[ee] + ur[ee]) + dl[ee]) + dr[ee]) * quarter

    g[eo] = ctr[eo]
    r[eo] = (lf[eo] + rt[eo]) * half
    b[eo] = (up[eo] + dn[eo]) * half

    g[oe] = ctr[oe]
    r[oe] = (up[oe] + dn[oe]) * half
    b[oe] = (lf[oe] + rt[oe]) * half

    b[oo] = ctr[oo]
    g[oo] = (((up[oo] + dn[oo]) + lf[oo]) + rt[oo]) * quarter
    r[oo] = (((ul[oo] + ur[oo]) + dl[oo]) + dr[oo]) * quarter

    return planar_from_planes(r, g, b)


def denoise(img: PlanarImage) -> PlanarImage:
    """Per-channel 3x3 median with edge replication (full sort of 9)."""
    h, w = img.height, img.width
    out = np.empty_like(img.planes)
    for c in range(3):
        p = np.pad(img.planes[c], 1, mode="edge")
        stack = np.empty((h, w, 9), np.float32)
        k = 0
        for dy in range(3):
            for dx in range(3):
                stack[..., k] = p[dy : dy + h, dx : dx + w]
                k += 1
        stack.sort(axis=-1)
        out[c] = stack[..., 4]
    return PlanarImage(width=w, height=h, planes=out)


def transform(img: PlanarImage, m: TransformMatrix) -> PlanarImage:
    """out = m . [r, g, b]^T per pixel; no clamping."""
    r, g, b = img.planes
    mm = m.m
    out = np.empty_like(img.planes)
    for c in range(3):
        out[c] = (mm[c, 0] * r + mm[c, 1] * g) + mm[c, 2] * b
    return PlanarImage(width=img.width, height=img.height, planes=out)


def _distance_block(r, g, b, ctrl_pts, t, u):
    """Fill t[:len(r)] with L2 distances from each pixel to each point."""
    k = r.shape[0]
    tk, uk = t[:k], u[:k]
    np.subtract(r[:, None], ctrl_pts[:, 0], out=tk)
    np.multiply(tk, tk, out=tk)
    np.subtract(g[:, None], ctrl_pts[:, 1], out=uk)
    np.multiply(uk, uk, out=uk)
    tk += uk
    np.subtract(b[:, None], ctrl_pts[:, 2], out=uk)
    np.multiply(uk, uk, out=uk)
    tk += uk
    np.sqrt(tk, out=tk)
    return tk


def gamut_map(img: PlanarImage, gp: GamutParams) -> PlanarImage:
    """Weighted sum of distances to the control points, plus an affine bias.

    ``np.cumsum`` performs the float32 accumulation strictly left to right,
    so the result is bit-identical to a scalar loop over points.
    """
    h, w = img.height, img.width
    n = gp.n
    total = h * w
    flat = img.planes.reshape(3, total)
    out = np.empty((3, total), np.float32)
    chunk = min(GAMUT_CHUNK, total)
    t = np.empty((chunk, n), np.float32)
    u = np.empty((chunk, n), np.float32)
    scratch = np.empty((chunk, n), np.float32)
    coefs = gp.coefs
    for s in range(0, total, chunk):
        e = min(s + chunk, total)
        r, g, b = flat[0, s:e], flat[1, s:e], flat[2, s:e]
        d = _distance_block(r, g, b, gp.ctrl_pts, t, u)
        m = scratch[: e - s]
        for c in range(3):
            np.multiply(d, gp.weights[:, c], out=m)
            np.cumsum(m, axis=1, out=m)
            acc = m[:, -1] + coefs[0, c]
            acc += coefs[1, c] * r
            acc += coefs[2, c] * g
            acc += coefs[3, c] * b
            out[c, s:e] = acc
    return PlanarImage(width=w, height=h, planes=out.reshape(3, h, w))


def tone_index(values: np.ndarray) -> np.ndarray:
    """Quantize to the LUT row: clamp(round(v*255), 0, 255), ties away from 0."""
    scaled = _round_half_away(values * F32(255.0))
    return np.clip(scaled, 0.0, 255.0).astype(np.int64)


def tone_map(img: PlanarImage, t: ToneLUT) -> PlanarImage:
    out = np.empty_like(img.planes)
    for c in range(3):
        out[c] = t.lut[tone_index(img.planes[c]), c]
    return PlanarImage(width=img.width, height=img.height, planes=out)


def run_pipeline(
    raw: RawBayerImage, params: PipelineParams, with_times: bool = False
) -> PlanarImage | tuple[PlanarImage, dict[str, float]]:
    """Run the five stages in order; optionally report per-stage wall time."""
    times: dict[str, float] = {}

    def timed(name, fn, *args):
        t0 = time.perf_counter()
        result = fn(*args)
        times[name] = time.perf_counter() - t0
        return result

    img = timed("demosaic", demosaic, raw)
    img = timed("denoise", denoise, img)
    img = timed("transform", transform, img, params.transform)
    img = timed("gamut", gamut_map, img, params.gamut)
    img = timed("tonemap", tone_map, img, params.tone)
    if with_times:
        return img, times
    return img


def reference_stage(stage: str, data, params: PipelineParams):
    """Dispatch one stage by name on its natural input."""
    if stage == "demosaic":
        return demosaic(data)
    if stage == "denoise":
        return denoise(data)
    if stage == "transform":
        return transform(data, params.transform)
    if stage == "gamut":
        return gamut_map(data, params.gamut)
    if stage == "tonemap":
        return tone_map(data, params.tone)
    raise ValueError(f"unknown stage {stage!r}")


def stage_input(stage: str, raw: RawBayerImage, params: PipelineParams):
    """Produce the reference input for a stage by running its upstream chain."""
    if stage == "demosaic":
        return raw
    img = demosaic(raw)
    if stage == "denoise":
        return img
    img = denoise(img)
    if stage == "transform":
        return img
    img = transform(img, params.transform)
    if stage == "gamut":
        return img
    img = gamut_map(img, params.gamut)
    if stage == "tonemap":
        return img
    raise ValueError(f"unknown stage {stage!r}")
