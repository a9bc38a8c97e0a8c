"""Token-seeded reference generation and its condition embedding.

Both ends hold the same generator, so the token alone reproduces the exact
reference latent that conditioned the transmitter: a keyed noise draw is
denoised over the full schedule with key and feature conditioning but a
zeroed reference slot.  The reference then enters the condition set as a
fixed seeded projection of its per-channel statistics, a stand-in for an
image-feature adapter.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .edict import SamplerParams, ddim_sample
from .predictor import ConditionSet, Predictor
from .rng import Seed64, gaussian_stream, hash_token
from .schedule import NoiseSchedule


@dataclass(frozen=True)
class ReferenceLatent:
    grid: np.ndarray
    source_token_hash: Seed64


def generate_reference(token: bytes | str, conditions: ConditionSet, sched: NoiseSchedule,
                       pred: Predictor, shape: tuple[int, ...]) -> ReferenceLatent:
    """Denoise a keyed draw over the full schedule into a reference latent."""
    seed = hash_token(token, "ref")
    size = int(np.prod(shape))
    start = gaussian_stream(seed, size).reshape(shape)
    params = SamplerParams(mixing_p=1.0, t_start=0, t_end=sched.T)
    grid = ddim_sample(start, sched, pred, conditions.without_reference(), "denoising", params)
    return ReferenceLatent(grid=grid, source_token_hash=seed)


_POOL_SEGMENTS = 16


def _pooled_stats(channel: np.ndarray) -> np.ndarray:
    # mean and variance pooled over row-major segments; each family is
    # centered so the component shared by every reference (moments of the
    # common sampling distribution) drops out and only the grid's own
    # layout survives into the embedding
    segments = np.array_split(channel, min(_POOL_SEGMENTS, channel.size))
    means = np.array([s.mean() for s in segments])
    variances = np.array([s.var() for s in segments])
    return np.concatenate([means - means.mean(), variances - variances.mean()])


def embed_reference(ref: ReferenceLatent, d: int = 64) -> np.ndarray:
    """Project pooled per-channel statistics to a unit vector in R^d.

    The projection (centering plus a fixed seeded Gaussian map) is one
    linear map shared by all parties, so both ends embed a regenerated
    reference identically.
    """
    if d < 1:
        raise ValueError("embedding dimension must be positive")
    grid = np.asarray(ref.grid, dtype=np.float64)
    if grid.ndim < 1:
        raise ValueError("reference grid must have at least one axis")
    channels = grid.reshape(grid.shape[0], -1) if grid.ndim > 1 else grid.reshape(1, -1)
    stats = np.concatenate([_pooled_stats(c) for c in channels])
    proj = gaussian_stream(hash_token(b"reference-embedding", "proj"), d * stats.size)
    proj = proj.reshape(d, stats.size) / np.sqrt(stats.size)
    v = proj @ stats
    n = float(np.linalg.norm(v))
    if n == 0.0:  # degenerate stats guard (constant reference grid)
        v = np.zeros(d)
        v[0] = 1.0
        return v
    return v / n
