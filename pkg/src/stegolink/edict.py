"""Exactly invertible coupled-chain sampler (EDICT) and a DDIM baseline.

EDICT maintains two chains (z, u) that take turns denoising each other, with
an affine mixing layer that keeps them close.  Because every sub-step is an
invertible affine map given the other chain, the noising direction can undo
the denoising direction exactly, to floating-point precision, even though the
noise predictor itself is a black box.

Reverse (denoise) step t, applied for t = t_end .. t_start+1:

    z_inter = a[t] z + b[t] eps(u, t, c)
    u_inter = a[t] u + b[t] eps(z_inter, t, c)
    z'      = p z_inter + (1 - p) u_inter
    u'      = p u_inter + (1 - p) z'

Forward (noise) step t, applied for t = t_start+1 .. t_end, is the exact
inverse: unmix, then undo the two affine denoise sub-steps in reverse order.
The same eps evaluations appear at the same states in both directions, which
is what makes the round trip exact.

The plain DDIM baseline reuses eps at the state it has when noising, which
is only approximate; its round-trip error is the gap EDICT closes.

Stability note: the unmixing layer expands the difference between the chains
by 1/p^2 per forward step.  With p well below 1 and many steps the expansion
outruns double precision and exactness is unrecoverable; parameter defaults
(p = 0.93, 50 steps) keep the total expansion small.
"""

from __future__ import annotations

import math

from dataclasses import dataclass

import numpy as np

from .predictor import ConditionSet, Predictor, guided_predict
from .schedule import NoiseSchedule


class SamplerDivergenceError(RuntimeError):
    """A sampler produced a non-finite intermediate state."""

    def __init__(self, op: str, step: int):
        super().__init__(f"{op} produced a non-finite state at step {step}")
        self.op = op
        self.step = step


@dataclass
class CoupledState:
    """The two coupled chains; shapes must match."""

    z: np.ndarray
    u: np.ndarray

    def __post_init__(self):
        self.z = np.asarray(self.z, dtype=np.float64)
        self.u = np.asarray(self.u, dtype=np.float64)
        if self.z.shape != self.u.shape:
            raise ValueError("coupled chains must share one shape")
        if not (np.isfinite(self.z).all() and np.isfinite(self.u).all()):
            raise ValueError("coupled chains must be finite")

    def copy(self) -> "CoupledState":
        return CoupledState(self.z.copy(), self.u.copy())


@dataclass(frozen=True)
class SamplerParams:
    """Mixing coefficient and the slice of the schedule to traverse.

    When t_start/t_end are omitted the window covers the first
    ceil(edit_strength * T) steps from the clean end.
    """

    mixing_p: float = 0.93
    edit_strength: float = 1.0
    t_start: int | None = None
    t_end: int | None = None

    def __post_init__(self):
        if not 0.0 < self.mixing_p <= 1.0:
            raise ValueError("mixing_p must lie in (0, 1]")
        if not 0.0 < self.edit_strength <= 1.0:
            raise ValueError("edit_strength must lie in (0, 1]")

    def window(self, T: int) -> tuple[int, int]:
        lo = 0 if self.t_start is None else int(self.t_start)
        hi = math.ceil(self.edit_strength * T) if self.t_end is None else int(self.t_end)
        if not 0 <= lo < hi <= T:
            raise ValueError(f"invalid step window [{lo}, {hi}] for T={T}")
        return lo, hi


def _eps(pred: Predictor, x: np.ndarray, t: int, conditions: ConditionSet | None) -> np.ndarray:
    if conditions is None:
        return pred.predict(x, t, None)
    return guided_predict(pred, x, t, conditions)


def _check_finite(op: str, t: int, *arrays: np.ndarray) -> None:
    for arr in arrays:
        if not np.isfinite(arr).all():
            raise SamplerDivergenceError(op, t)


def edict_forward(state: CoupledState, sched: NoiseSchedule, pred: Predictor,
                  conditions: ConditionSet | None, params: SamplerParams) -> CoupledState:
    """Noise a coupled state across the window; exact inverse of edict_reverse."""
    lo, hi = params.window(sched.T)
    p = params.mixing_p
    z, u = state.z.copy(), state.u.copy()
    for t in range(lo + 1, hi + 1):
        # intermediates are checked before feeding the predictor so an
        # unmix overflow surfaces as a divergence at its step, not as an
        # input error deep inside the predictor
        with np.errstate(over="ignore", invalid="ignore"):
            u_inter = (u - (1.0 - p) * z) / p
            z_inter = (z - (1.0 - p) * u_inter) / p
        _check_finite("edict_forward", t, u_inter, z_inter)
        u = sched.gamma[t] * u_inter - sched.omega[t] * _eps(pred, z_inter, t, conditions)
        _check_finite("edict_forward", t, u)
        z = sched.gamma[t] * z_inter - sched.omega[t] * _eps(pred, u, t, conditions)
        _check_finite("edict_forward", t, z)
    return CoupledState(z, u)


def edict_reverse(state: CoupledState, sched: NoiseSchedule, pred: Predictor,
                  conditions: ConditionSet | None, params: SamplerParams) -> CoupledState:
    """Denoise a coupled state across the window; exact inverse of edict_forward."""
    lo, hi = params.window(sched.T)
    p = params.mixing_p
    z, u = state.z.copy(), state.u.copy()
    for t in range(hi, lo, -1):
        z_inter = sched.a[t] * z + sched.b[t] * _eps(pred, u, t, conditions)
        _check_finite("edict_reverse", t, z_inter)
        u_inter = sched.a[t] * u + sched.b[t] * _eps(pred, z_inter, t, conditions)
        with np.errstate(over="ignore", invalid="ignore"):
            z = p * z_inter + (1.0 - p) * u_inter
            u = p * u_inter + (1.0 - p) * z
        _check_finite("edict_reverse", t, z, u)
    return CoupledState(z, u)


def ddim_sample(z: np.ndarray, sched: NoiseSchedule, pred: Predictor,
                conditions: ConditionSet | None, direction: str, params: SamplerParams) -> np.ndarray:
    """Single-chain DDIM pass across the window.

    "denoising" applies z <- a[t] z + b[t] eps(z, t).  "noising" applies the
    standard approximate inversion z <- gamma[t] z - omega[t] eps(z, t),
    which reuses eps at the state available before the step.
    """
    if direction not in ("noising", "denoising"):
        raise ValueError("direction must be 'noising' or 'denoising'")
    lo, hi = params.window(sched.T)
    x = np.asarray(z, dtype=np.float64).copy()
    if direction == "denoising":
        for t in range(hi, lo, -1):
            x = sched.a[t] * x + sched.b[t] * _eps(pred, x, t, conditions)
            _check_finite("ddim_sample", t, x)
    else:
        for t in range(lo + 1, hi + 1):
            x = sched.gamma[t] * x - sched.omega[t] * _eps(pred, x, t, conditions)
            _check_finite("ddim_sample", t, x)
    return x
