"""Pipeline parameter types and the JSON parameter-file loader.

A parameter file is a single JSON document:

.. code-block:: json

    {
      "transform": [[1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 1.0]],
      "gamut": {"n": 3611, "seed": 7},
      "tone": {"kind": "gamma", "gamma": 2.2},
      "perfmodel": {"pipeline_depth": 100, "assumed_dep_ii": 64,
                    "costs": {"base_cost": 50.0, "datapath_cost": 4.0,
                              "ram_cost": 0.05, "capacity": 100000.0}}
    }

``gamut`` may instead spell out ``ctrl_pts`` / ``weights`` / ``coefs``
explicitly, and ``tone`` may carry a full 256x3 ``lut``.  The ``perfmodel``
section is optional and feeds the analytic model defaults.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

DEFAULT_GAMUT_POINTS = 3611
TONE_LEVELS = 256


class ParamsError(ValueError):
    pass


def _as_f32(x, shape, name: str) -> np.ndarray:
    arr = np.asarray(x, dtype=np.float32)
    if arr.shape != shape:
        raise ParamsError(f"{name} must have shape {shape}, got {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise ParamsError(f"{name} contains non-finite entries")
    return arr


@dataclass(frozen=True)
class TransformMatrix:
    """3x3 color transform; row = output channel, column = input channel."""

    m: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "m", _as_f32(self.m, (3, 3), "transform matrix"))

    def __eq__(self, other):
        if not isinstance(other, TransformMatrix):
            return NotImplemented
        return np.array_equal(self.m, other.m)


@dataclass(frozen=True)
class GamutParams:
    """Control points, per-channel weights, and the 4x3 affine bias."""

    ctrl_pts: np.ndarray  # (n, 3)
    weights: np.ndarray  # (n, 3)
    coefs: np.ndarray  # (4, 3): constant row, then one row per input channel

    def __post_init__(self):
        n = np.asarray(self.ctrl_pts).shape[0] if np.asarray(self.ctrl_pts).ndim == 2 else 0
        if n < 1:
            raise ParamsError("gamut needs at least one control point")
        object.__setattr__(self, "ctrl_pts", _as_f32(self.ctrl_pts, (n, 3), "ctrl_pts"))
        object.__setattr__(self, "weights", _as_f32(self.weights, (n, 3), "weights"))
        object.__setattr__(self, "coefs", _as_f32(self.coefs, (4, 3), "coefs"))

    @property
    def n(self) -> int:
        return self.ctrl_pts.shape[0]

    @property
    def readonly_bytes(self) -> int:
        """Size of the flat read-only region: points, weights, coefs."""
        return 4 * (6 * self.n + 12)

    def __eq__(self, other):
        if not isinstance(other, GamutParams):
            return NotImplemented
        return (
            np.array_equal(self.ctrl_pts, other.ctrl_pts)
            and np.array_equal(self.weights, other.weights)
            and np.array_equal(self.coefs, other.coefs)
        )


@dataclass(frozen=True)
class ToneLUT:
    """256x3 lookup table; row = quantized input level, column = channel."""

    lut: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "lut", _as_f32(self.lut, (TONE_LEVELS, 3), "tone lut"))

    def __eq__(self, other):
        if not isinstance(other, ToneLUT):
            return NotImplemented
        return np.array_equal(self.lut, other.lut)


@dataclass(frozen=True)
class PipelineParams:
    transform: TransformMatrix
    gamut: GamutParams
    tone: ToneLUT


@dataclass(frozen=True)
class PerfModelConfig:
    """Defaults for the analytic loop-pipelining model."""

    pipeline_depth: int = 100
    assumed_dep_ii: int = 64
    costs: dict = field(
        default_factory=lambda: {
            "base_cost": 50.0,
            "datapath_cost": 4.0,
            "ram_cost": 0.05,
            "capacity": 100000.0,
        }
    )


# ---------------------------------------------------------------------------
# Constructors
# ---------------------------------------------------------------------------

def identity_transform() -> TransformMatrix:
    return TransformMatrix(np.eye(3, dtype=np.float32))


def identity_tone() -> ToneLUT:
    levels = np.arange(TONE_LEVELS, dtype=np.float32) / np.float32(255.0)
    return ToneLUT(np.repeat(levels[:, None], 3, axis=1))


def gamma_tone(gamma: float = 2.2) -> ToneLUT:
    levels = (np.arange(TONE_LEVELS, dtype=np.float32) / np.float32(255.0)) ** np.float32(
        1.0 / gamma
    )
    return ToneLUT(np.repeat(levels[:, None], 3, axis=1))


def affine_identity_coefs() -> np.ndarray:
    """Zero constant row, rows 1..3 the identity: the bias passes RGB through."""
    coefs = np.zeros((4, 3), dtype=np.float32)
    coefs[1:] = np.eye(3, dtype=np.float32)
    return coefs


def neutral_gamut(n: int = 1) -> GamutParams:
    """Zero weights + pass-through bias: gamut mapping becomes the identity."""
    return GamutParams(
        ctrl_pts=np.zeros((n, 3), dtype=np.float32),
        weights=np.zeros((n, 3), dtype=np.float32),
        coefs=affine_identity_coefs(),
    )


def random_gamut(n: int = DEFAULT_GAMUT_POINTS, seed: int = 7) -> GamutParams:
    rng = np.random.default_rng(seed)
    ctrl_pts = rng.random((n, 3), dtype=np.float32)
    weights = (rng.random((n, 3), dtype=np.float32) - np.float32(0.5)) * np.float32(2.0)
    coefs = (rng.random((4, 3), dtype=np.float32) - np.float32(0.5)) * np.float32(2.0)
    return GamutParams(ctrl_pts=ctrl_pts, weights=weights, coefs=coefs)


def neutral_params() -> PipelineParams:
    """Identity transform, pass-through gamut, identity tone curve."""
    return PipelineParams(
        transform=identity_transform(), gamut=neutral_gamut(), tone=identity_tone()
    )


def default_params(n_points: int = DEFAULT_GAMUT_POINTS, seed: int = 7) -> PipelineParams:
    """Deterministic benchmark defaults: mild white balance, seeded gamut, gamma."""
    wb = TransformMatrix(np.diag([1.15, 1.0, 0.85]).astype(np.float32))
    return PipelineParams(transform=wb, gamut=random_gamut(n_points, seed), tone=gamma_tone())


# ---------------------------------------------------------------------------
# File I/O
# ---------------------------------------------------------------------------

def _gamut_from_spec(spec) -> GamutParams:
    if not isinstance(spec, dict):
        raise ParamsError("gamut section must be an object")
    if "ctrl_pts" in spec:
        for key in ("weights", "coefs"):
            if key not in spec:
                raise ParamsError(f"explicit gamut needs {key!r}")
        return GamutParams(
            ctrl_pts=np.asarray(spec["ctrl_pts"], dtype=np.float32),
            weights=np.asarray(spec["weights"], dtype=np.float32),
            coefs=np.asarray(spec["coefs"], dtype=np.float32),
        )
    n = int(spec.get("n", DEFAULT_GAMUT_POINTS))
    return random_gamut(n, int(spec.get("seed", 7)))


def _tone_from_spec(spec) -> ToneLUT:
    if not isinstance(spec, dict):
        raise ParamsError("tone section must be an object")
    if "lut" in spec:
        return ToneLUT(np.asarray(spec["lut"], dtype=np.float32))
    kind = spec.get("kind", "identity")
    if kind == "identity":
        return identity_tone()
    if kind == "gamma":
        return gamma_tone(float(spec.get("gamma", 2.2)))
    raise ParamsError(f"unknown tone kind {kind!r}")


def load_params_file(path: str | Path) -> tuple[PipelineParams, PerfModelConfig]:
    try:
        doc = json.loads(Path(path).read_text())
    except json.JSONDecodeError as exc:
        raise ParamsError(f"invalid JSON in {path}: {exc}") from exc
    if not isinstance(doc, dict):
        raise ParamsError("parameter file must contain a JSON object")
    transform = TransformMatrix(
        np.asarray(doc.get("transform", np.eye(3).tolist()), dtype=np.float32)
    )
    gamut = _gamut_from_spec(doc.get("gamut", {}))
    tone = _tone_from_spec(doc.get("tone", {"kind": "identity"}))
    pm = doc.get("perfmodel", {})
    if not isinstance(pm, dict):
        raise ParamsError("perfmodel section must be an object")
    defaults = PerfModelConfig()
    perf = PerfModelConfig(
        pipeline_depth=int(pm.get("pipeline_depth", defaults.pipeline_depth)),
        assumed_dep_ii=int(pm.get("assumed_dep_ii", defaults.assumed_dep_ii)),
        costs={**defaults.costs, **pm.get("costs", {})},
    )
    if perf.pipeline_depth <= 0 or perf.assumed_dep_ii < 1:
        raise ParamsError("perfmodel depths must be positive")
    return PipelineParams(transform=transform, gamut=gamut, tone=tone), perf


def save_params_file(path: str | Path, params: PipelineParams,
                     perf: PerfModelConfig | None = None) -> None:
    doc = {
        "transform": params.transform.m.tolist(),
        "gamut": {
            "ctrl_pts": params.gamut.ctrl_pts.tolist(),
            "weights": params.gamut.weights.tolist(),
            "coefs": params.gamut.coefs.tolist(),
        },
        "tone": {"lut": params.tone.lut.tolist()},
    }
    if perf is not None:
        doc["perfmodel"] = {
            "pipeline_depth": perf.pipeline_depth,
            "assumed_dep_ii": perf.assumed_dep_ii,
            "costs": perf.costs,
        }
    Path(path).write_text(json.dumps(doc, indent=2) + "\n")
