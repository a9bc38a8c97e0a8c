"""End-to-end hiding pipeline and threat-model evaluation.

Transmitter: noise the secret with the coupled sampler (no conditions),
sign-perturb the noised chains with the token mask, then denoise under
guided conditioning (public key text, implicit feature text, and a
token-seeded reference) into an innocuous stego latent.  Receiver: rebuild
the identical conditions from the token, run the conditioned noising pass
(exact inverse of the transmitter's denoise), undo the mask, and denoise
unconditioned back to the secret.

Wire format: the coupled sampler is only exactly invertible given both
chains, so the stego grid stacks the visible chain z with a difference
panel gain*(z - u) along the channel axis.  The gain is the power of two
nearest the unmixing layer's total expansion (1/p^2 per step), chosen so
additive channel noise lands with comparable effect on the inverse
sampler's stable and expanding directions; a power of two makes the
pack/unpack round trip bit-exact.  The first half of the stack is the
stego image an onlooker sees.

Eavesdroppers: E1 holds only the channel decoder and sees the stego image;
E2 runs the full keyed reveal with a wrong token (wrong mask, wrong
reference); E3 runs the reveal with no token at all, skipping mask
restoration and falling back to a stock reference seed.
"""

from __future__ import annotations

import json
import math

from dataclasses import dataclass, fields

import numpy as np

from .channel import ChannelConfig, decode, encode, transmit
from .edict import CoupledState, SamplerParams, edict_forward, edict_reverse
from .metrics import MetricsReport, compare
from .predictor import ConditionSet, Predictor, embed_text
from .reference import embed_reference, generate_reference
from .rng import RandomStream, Seed64, derive
from .schedule import build_schedule
from .tokenkey import build_mask, perturb, restore

STOCK_REFERENCE_TOKEN = "stock-reference"  # what a tokenless receiver falls back to

EAVESDROPPER_MODELS = ("E1", "E2", "E3")


@dataclass(frozen=True)
class PipelineConfig:
    """Full experiment configuration; every field has a JSON-safe value."""

    token: str = "9000"
    public_key_text: str = "a calm coastal landscape at dusk"
    feature_text: str = "broad horizon with a single foreground shape"
    guidance_weight: float = 1.0
    steps: int = 50
    beta_start: float = 1e-4
    beta_end: float = 2e-2
    predictor_kind: str = "tiny-mlp"
    predictor_seed: int = 7
    embed_dim: int = 64
    mixing_p: float = 0.93
    edit_strength: float = 0.5
    eta: float = 0.05
    perturb_both_chains: bool = True
    shape: tuple[int, int, int] = (1, 16, 16)
    snr_db: float = 10.0
    h: float = 1.0
    noiseless: bool = False
    complex_iq: bool = False
    noise_seed: int = 1
    secret_seed: int = 11
    eavesdropper_token: str = "856427"
    reference_steps: int | None = None
    reference_predictor_seed: int | None = None

    def __post_init__(self):
        object.__setattr__(self, "shape", tuple(int(s) for s in self.shape))
        if not self.token:
            raise ValueError("token: must be a non-empty string")
        if not 0.0 <= self.guidance_weight <= 1.0:
            raise ValueError("guidance_weight: must lie in [0, 1]")
        if self.steps < 1:
            raise ValueError("steps: must be a positive integer")
        if not (0.0 < self.beta_start < 1.0 and 0.0 < self.beta_end < 1.0):
            raise ValueError("beta_start/beta_end: must lie in (0, 1)")
        if self.predictor_kind not in ("zero", "linear", "tiny-mlp"):
            raise ValueError("predictor_kind: must be zero, linear, or tiny-mlp")
        if self.embed_dim < 1:
            raise ValueError("embed_dim: must be positive")
        if not 0.0 < self.mixing_p <= 1.0:
            raise ValueError("mixing_p: must lie in (0, 1]")
        if not 0.0 < self.edit_strength <= 1.0:
            raise ValueError("edit_strength: must lie in (0, 1]")
        if not 0.0 <= self.eta <= 1.0:
            raise ValueError("eta: must lie in [0, 1]")
        if len(self.shape) != 3 or any(s < 1 for s in self.shape):
            raise ValueError("shape: must be three positive integers (channels, height, width)")
        if not math.isfinite(self.snr_db):
            raise ValueError("snr_db: must be finite")
        if self.h == 0.0 or not math.isfinite(self.h):
            raise ValueError("h: channel gain must be nonzero and finite")
        if not self.eavesdropper_token:
            raise ValueError("eavesdropper_token: must be a non-empty string")
        if self.reference_steps is not None and self.reference_steps < 1:
            raise ValueError("reference_steps: must be positive when set")

    @property
    def channel(self) -> ChannelConfig:
        return ChannelConfig(snr_db=self.snr_db, h=self.h, noise_seed=self.noise_seed,
                             noiseless=self.noiseless, complex_iq=self.complex_iq)

    def to_dict(self) -> dict:
        out = {}
        for f in fields(self):
            v = getattr(self, f.name)
            out[f.name] = list(v) if isinstance(v, tuple) else v
        return out

    @staticmethod
    def from_dict(d: dict) -> "PipelineConfig":
        known = {f.name for f in fields(PipelineConfig)}
        unknown = set(d) - known
        if unknown:
            raise ValueError(f"unknown config field(s): {', '.join(sorted(unknown))}")
        kwargs = dict(d)
        if "shape" in kwargs:
            kwargs["shape"] = tuple(kwargs["shape"])
        return PipelineConfig(**kwargs)


# -- deterministic construction helpers --------------------------------------

def _predictor(cfg: PipelineConfig) -> Predictor:
    return Predictor(cfg.predictor_kind, Seed64(cfg.predictor_seed), cfg.embed_dim)


def _reference_predictor(cfg: PipelineConfig) -> Predictor:
    # the reference generator is a different pretrained model than the
    # hiding sampler, modeled here as a distinct weight seed
    if cfg.reference_predictor_seed is not None:
        seed = Seed64(cfg.reference_predictor_seed)
    else:
        seed = derive(Seed64(cfg.predictor_seed), "reference-model")
    return Predictor(cfg.predictor_kind, seed, cfg.embed_dim)


def _sampler_params(cfg: PipelineConfig) -> SamplerParams:
    return SamplerParams(mixing_p=cfg.mixing_p, edit_strength=cfg.edit_strength)


def build_conditions(cfg: PipelineConfig, reference_token: str) -> ConditionSet:
    """Assemble the guided condition set for a given reference token."""
    key_e = embed_text(cfg.public_key_text, cfg.embed_dim)
    feat_e = embed_text(cfg.feature_text, cfg.embed_dim)
    base = ConditionSet(key_e, feat_e, np.zeros(cfg.embed_dim), cfg.guidance_weight)
    ref_sched = build_schedule(cfg.reference_steps or cfg.steps, cfg.beta_start, cfg.beta_end)
    ref = generate_reference(reference_token, base, ref_sched, _reference_predictor(cfg), cfg.shape)
    return ConditionSet(key_e, feat_e, embed_reference(ref, cfg.embed_dim), cfg.guidance_weight)


def sync_gain(mixing_p: float, steps: int) -> float:
    """Power of two nearest the unmix expansion (1/p^2)^steps, capped finite."""
    exponent = round(-2.0 * steps * math.log2(mixing_p))
    return 2.0 ** min(int(exponent), 1000)


def _pair_gain(cfg: PipelineConfig) -> float:
    lo, hi = _sampler_params(cfg).window(cfg.steps)
    return sync_gain(cfg.mixing_p, hi - lo)


def _pack_pair(state: CoupledState, gain: float) -> np.ndarray:
    return np.concatenate([state.z, gain * (state.z - state.u)], axis=0)


def _unpack_pair(grid: np.ndarray, channels: int, gain: float) -> CoupledState:
    z = grid[:channels]
    u = z - grid[channels:] / gain
    return CoupledState(z.copy(), u)


# -- transmitter / receiver ---------------------------------------------------

def hide(secret: np.ndarray, cfg: PipelineConfig) -> np.ndarray:
    """Render the secret into a stego latent keyed by cfg.token."""
    secret = np.asarray(secret, dtype=np.float64)
    if secret.shape != cfg.shape:
        raise ValueError(f"secret shape {secret.shape} does not match config shape {cfg.shape}")
    if not np.isfinite(secret).all():
        raise ValueError("secret contains non-finite values")
    sched = build_schedule(cfg.steps, cfg.beta_start, cfg.beta_end)
    pred = _predictor(cfg)
    params = _sampler_params(cfg)
    conditions = build_conditions(cfg, cfg.token)

    state = CoupledState(secret.copy(), secret.copy())
    state = edict_forward(state, sched, pred, None, params)
    mask = build_mask(cfg.token, cfg.shape, cfg.eta)
    state = CoupledState(perturb(state.z, mask),
                         perturb(state.u, mask) if cfg.perturb_both_chains else state.u)
    state = edict_reverse(state, sched, pred, conditions, params)
    return _pack_pair(state, _pair_gain(cfg))


def _keyed_reveal(stego_hat: np.ndarray, cfg: PipelineConfig, reveal_token: str,
                  restore_mask: bool) -> np.ndarray:
    channels = cfg.shape[0]
    expected = (2 * channels,) + cfg.shape[1:]
    stego_hat = np.asarray(stego_hat, dtype=np.float64)
    if stego_hat.shape != expected:
        raise ValueError(f"stego shape {stego_hat.shape} does not match expected {expected}")
    sched = build_schedule(cfg.steps, cfg.beta_start, cfg.beta_end)
    pred = _predictor(cfg)
    params = _sampler_params(cfg)
    conditions = build_conditions(cfg, reveal_token)

    state = _unpack_pair(stego_hat, channels, _pair_gain(cfg))
    state = edict_forward(state, sched, pred, conditions, params)
    if restore_mask:
        mask = build_mask(reveal_token, cfg.shape, cfg.eta)
        state = CoupledState(restore(state.z, mask),
                             restore(state.u, mask) if cfg.perturb_both_chains else state.u)
    state = edict_reverse(state, sched, pred, None, params)
    return state.z


def reveal(stego_hat: np.ndarray, cfg: PipelineConfig) -> np.ndarray:
    """Invert hide with the correct token; exact up to float drift."""
    return _keyed_reveal(stego_hat, cfg, cfg.token, restore_mask=True)


def eavesdrop(stego_hat: np.ndarray, cfg: PipelineConfig, model: str) -> np.ndarray:
    """Run one adversary model against a decoded stego grid.

    E1 returns the visible stego image unchanged (decoder-only adversary).
    E2 runs the full reveal with cfg.eavesdropper_token.  E3 runs the reveal
    with mask restoration skipped and the stock reference seed.
    """
    if model not in EAVESDROPPER_MODELS:
        raise ValueError(f"model must be one of {EAVESDROPPER_MODELS}")
    if model == "E1":
        return np.asarray(stego_hat, dtype=np.float64)[:cfg.shape[0]].copy()
    if model == "E2":
        return _keyed_reveal(stego_hat, cfg, cfg.eavesdropper_token, restore_mask=True)
    return _keyed_reveal(stego_hat, cfg, STOCK_REFERENCE_TOKEN, restore_mask=False)


# -- synthetic secrets --------------------------------------------------------

def make_secret(seed: Seed64 | int, shape: tuple[int, int, int]) -> np.ndarray:
    """Structured synthetic secret: smooth seeded waves plus one step edge.

    Stands in for natural-image latents; never constant, so its dynamic
    range is always a valid PSNR peak.
    """
    channels, height, width = (int(s) for s in shape)
    stream = RandomStream(derive(seed if isinstance(seed, Seed64) else Seed64(int(seed)), "secret-field"))
    yy, xx = np.meshgrid((np.arange(height) + 0.5) / height,
                         (np.arange(width) + 0.5) / width, indexing="ij")
    grids = []
    for _ in range(channels):
        u = stream.take(12)
        plane = np.zeros((height, width))
        for k in range(3):
            fy = 0.5 + 2.5 * u[3 * k]
            fx = 0.5 + 2.5 * u[3 * k + 1]
            phase = 2.0 * np.pi * u[3 * k + 2]
            plane += (1.0 / (k + 1)) * np.cos(2.0 * np.pi * (fy * yy + fx * xx) + phase)
        angle = 2.0 * np.pi * u[9]
        cy, cx = 0.3 + 0.4 * u[10], 0.3 + 0.4 * u[11]
        side = np.sign((yy - cy) * np.cos(angle) + (xx - cx) * np.sin(angle))
        grids.append(plane + 0.8 * side)
    return np.stack(grids, axis=0)


# -- trial runner -------------------------------------------------------------

@dataclass(frozen=True)
class TrialRecord:
    """One hide/transmit/recover cycle with all four receivers scored."""

    config: dict
    legit: MetricsReport
    eaves1: MetricsReport
    eaves2: MetricsReport
    eaves3: MetricsReport
    edict_roundtrip_error: float
    peak: float

    def to_dict(self) -> dict:
        return {
            "config": self.config,
            "legit": self.legit.to_dict(),
            "eaves1": self.eaves1.to_dict(),
            "eaves2": self.eaves2.to_dict(),
            "eaves3": self.eaves3.to_dict(),
            "edict_roundtrip_error": self.edict_roundtrip_error,
            "peak": self.peak,
        }

    @staticmethod
    def from_dict(d: dict) -> "TrialRecord":
        return TrialRecord(config=dict(d["config"]),
                           legit=MetricsReport.from_dict(d["legit"]),
                           eaves1=MetricsReport.from_dict(d["eaves1"]),
                           eaves2=MetricsReport.from_dict(d["eaves2"]),
                           eaves3=MetricsReport.from_dict(d["eaves3"]),
                           edict_roundtrip_error=float(d["edict_roundtrip_error"]),
                           peak=float(d["peak"]))

    def to_json_line(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True)

    @staticmethod
    def from_json_line(line: str) -> "TrialRecord":
        return TrialRecord.from_dict(json.loads(line))


def run_trial(secret: np.ndarray, cfg: PipelineConfig) -> TrialRecord:
    """Hide, transmit, and score every receiver against the secret.

    The E1 report scores the visible stego image against the secret; its
    "recovery" is by definition just the stego.  A channel-free reveal of
    the same stego is included as the sampler round-trip diagnostic.
    """
    secret = np.asarray(secret, dtype=np.float64)
    peak = float(secret.max() - secret.min())
    if peak <= 0.0:
        raise ValueError("secret must not be constant (needs a positive dynamic range)")

    stego = hide(secret, cfg)
    frame = encode(stego)
    received = transmit(frame, cfg.channel)
    stego_hat = decode(received, cfg.channel, stego.shape)

    recovered = reveal(stego_hat, cfg)
    outputs = {model: eavesdrop(stego_hat, cfg, model) for model in EAVESDROPPER_MODELS}
    roundtrip = reveal(stego, cfg)

    return TrialRecord(
        config=cfg.to_dict(),
        legit=compare(recovered, secret, peak),
        eaves1=compare(outputs["E1"], secret, peak),
        eaves2=compare(outputs["E2"], secret, peak),
        eaves3=compare(outputs["E3"], secret, peak),
        edict_roundtrip_error=float(np.max(np.abs(roundtrip - secret))),
        peak=peak,
    )
