"""Rotary positional embedding numerics for base-frequency scaling checks.

Desk-scale verification of the rotation math behind context extension: the
per-pair frequencies, the position rotation itself, and the relative-position
property of rotated dot products. Raising the base slows every non-trivial
rotation, which is what stretches the usable context.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np


@dataclass(frozen=True)
class RopeConfig:
    """Rotation base and head dimension; ``head_dim`` must be even."""

    base: float = 10000.0
    head_dim: int = 64

    def __post_init__(self):
        if self.head_dim <= 0 or self.head_dim % 2:
            raise ValueError("head_dim must be a positive even integer")
        if self.base <= 1:
            raise ValueError("base must be > 1")


def rope_frequencies(cfg: RopeConfig) -> np.ndarray:
    """Per-pair angular frequencies base**(-2i/d), strictly decreasing in i."""
    i = np.arange(cfg.head_dim // 2, dtype=np.float64)
    return cfg.base ** (-2.0 * i / cfg.head_dim)


def apply_rope(vec, position: int, cfg: RopeConfig) -> np.ndarray:
    """Rotate each (v[2i], v[2i+1]) pair by angle position * freq[i]."""
    v = np.asarray(vec, dtype=np.float64)
    if v.shape != (cfg.head_dim,):
        raise ValueError(f"expected vector of length {cfg.head_dim}, got shape {v.shape}")
    angles = position * rope_frequencies(cfg)
    cos, sin = np.cos(angles), np.sin(angles)
    even, odd = v[0::2], v[1::2]
    out = np.empty_like(v)
    out[0::2] = even * cos - odd * sin
    out[1::2] = even * sin + odd * cos
    return out


def relative_score(q, k, m: int, n: int, cfg: RopeConfig) -> float:
    """Dot product of rotated q at position m and rotated k at position n.

    Depends only on m - n: shifting both positions by any t leaves the score
    unchanged up to floating-point error.
    """
    return float(np.dot(apply_rope(q, m, cfg), apply_rope(k, n, cfg)))


def frequency_report(cfg: RopeConfig) -> list[tuple[int, float, float]]:
    """Rows (i, frequency, wavelength 2*pi/frequency) for the CLI report."""
    freqs = rope_frequencies(cfg)
    return [(i, float(w), float(2.0 * np.pi / w)) for i, w in enumerate(freqs)]
