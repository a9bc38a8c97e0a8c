"""Deterministic seeding, hashing, and random streams.

Every random value in the package is a pure function of a byte-string token,
so two parties that share the token regenerate identical latents with no
state exchange.  The stack is:

    SHA-256(token | 0x1F | domain)  ->  64-bit seed
    SplitMix64(seed)                ->  uniform doubles in [0, 1)
    Box-Muller on uniform pairs     ->  standard normal doubles

SplitMix64 reference: https://prng.di.unimi.it/splitmix64.c
Box-Muller transform: https://en.wikipedia.org/wiki/Box%E2%80%93Muller_transform

SplitMix64 is counter-based (state after n draws is seed + n*GOLDEN mod 2^64),
which lets us evaluate any block of the stream as a vectorized elementwise
finalizer instead of a sequential loop.  The integer layer is exact; the
float layers use only IEEE-754 double operations.
"""

from __future__ import annotations

from dataclasses import dataclass

import hashlib

import numpy as np

_U64_MAX = 0xFFFFFFFFFFFFFFFF
_GOLDEN = np.uint64(0x9E3779B97F4A7C15)
_MIX_1 = np.uint64(0xBF58476D1CE4E5B9)
_MIX_2 = np.uint64(0x94D049BB133111EB)
_DOMAIN_SEPARATOR = b"\x1f"
_INV_2_53 = 2.0 ** -53


@dataclass(frozen=True)
class Seed64:
    """A 64-bit unsigned seed, normally produced by hash_token."""

    value: int

    def __post_init__(self):
        if not isinstance(self.value, int) or not 0 <= self.value <= _U64_MAX:
            raise ValueError("Seed64 value must be an integer in [0, 2^64)")

    def to_bytes(self) -> bytes:
        return self.value.to_bytes(8, "big")


def _as_seed(seed: Seed64 | int) -> Seed64:
    return seed if isinstance(seed, Seed64) else Seed64(seed)


def hash_token(token: bytes | str, domain: bytes | str = b"") -> Seed64:
    """Map (token, domain) to a Seed64: big-endian first 8 bytes of SHA-256.

    The hash input is token | 0x1F | domain; the 0x1F separator keeps
    ("ab", "c") distinct from ("a", "bc").  Domains partition one token into
    independent streams ("init", "mask", "ref", ...).  The fully empty case
    (empty token and empty domain) hashes the empty string with no separator
    so the seed equals the head of the published SHA-256 empty-string vector;
    that case exists as a fixed reference point for tests.
    """
    tok = token.encode("utf-8") if isinstance(token, str) else bytes(token)
    dom = domain.encode("utf-8") if isinstance(domain, str) else bytes(domain)
    data = b"" if (not tok and not dom) else tok + _DOMAIN_SEPARATOR + dom
    digest = hashlib.sha256(data).digest()
    return Seed64(int.from_bytes(digest[:8], "big"))


def derive(seed: Seed64 | int, label: bytes | str) -> Seed64:
    """Derive a labeled sub-seed (model weights, projections, per-trial use)."""
    return hash_token(_as_seed(seed).to_bytes(), label)


def _splitmix_block(seed_value: int, start: int, count: int) -> np.ndarray:
    # draws start+1 .. start+count of the stream, as raw uint64 words;
    # all arithmetic wraps mod 2^64 (numpy C semantics)
    k = np.arange(start + 1, start + count + 1, dtype=np.uint64)
    with np.errstate(over="ignore"):
        z = np.uint64(seed_value) + k * _GOLDEN
        z = (z ^ (z >> np.uint64(30))) * _MIX_1
        z = (z ^ (z >> np.uint64(27))) * _MIX_2
        z = z ^ (z >> np.uint64(31))
    return z


def _bits_to_unit(bits: np.ndarray) -> np.ndarray:
    # top 53 bits scaled into [0, 1); 53-bit integers are exact in a double
    return (bits >> np.uint64(11)).astype(np.float64) * _INV_2_53


def uniform_stream(seed: Seed64 | int, n: int) -> np.ndarray:
    """First n uniform [0, 1) doubles of the seed's SplitMix64 stream."""
    if n < 0:
        raise ValueError("n must be non-negative")
    return _bits_to_unit(_splitmix_block(_as_seed(seed).value, 0, n))


def _gaussian_pairs(seed_value: int, first_pair: int, pairs: int) -> np.ndarray:
    # pair j consumes uniform draws (2j, 2j+1); returns 2*pairs values with
    # both Box-Muller outputs of each pair kept, in order
    u = _bits_to_unit(_splitmix_block(seed_value, 2 * first_pair, 2 * pairs))
    u1 = u[0::2]
    u2 = u[1::2]
    u1 = np.where(u1 == 0.0, _INV_2_53, u1)  # keep log finite
    radius = np.sqrt(-2.0 * np.log(u1))
    angle = (2.0 * np.pi) * u2
    out = np.empty(2 * pairs, dtype=np.float64)
    out[0::2] = radius * np.cos(angle)
    out[1::2] = radius * np.sin(angle)
    return out


def gaussian_stream(seed: Seed64 | int, n: int) -> np.ndarray:
    """First n standard normal doubles via Box-Muller on uniform pairs.

    Pair boundaries are fixed at even stream offsets, so any prefix of the
    output is independent of how many values are requested.
    """
    if n < 0:
        raise ValueError("n must be non-negative")
    pairs = (n + 1) // 2
    return _gaussian_pairs(_as_seed(seed).value, 0, pairs)[:n]


class RandomStream:
    """Stateful view of a SplitMix64 uniform stream.

    Advancing n draws and then m draws yields exactly the same values as
    advancing n+m draws from a fresh stream with the same seed.
    """

    def __init__(self, seed: Seed64 | int):
        self.seed = _as_seed(seed)
        self.draws_emitted = 0

    @property
    def state(self) -> int:
        # SplitMix64 internal state after draws_emitted draws
        with np.errstate(over="ignore"):
            s = np.uint64(self.seed.value) + np.uint64(self.draws_emitted % (1 << 64)) * _GOLDEN
        return int(s)

    def take(self, n: int) -> np.ndarray:
        if n < 0:
            raise ValueError("n must be non-negative")
        block = _bits_to_unit(_splitmix_block(self.seed.value, self.draws_emitted, n))
        self.draws_emitted += n
        return block


class GaussianStream:
    """Stateful Box-Muller stream over a RandomStream.

    take(n) followed by take(m) concatenates to gaussian_stream(seed, n+m);
    a half-consumed pair is carried between calls.
    """

    def __init__(self, seed: Seed64 | int):
        self.seed = _as_seed(seed)
        self._position = 0  # gaussian values emitted so far

    def take(self, n: int) -> np.ndarray:
        if n < 0:
            raise ValueError("n must be non-negative")
        first_pair = self._position // 2
        last_pair = (self._position + n + 1) // 2
        block = _gaussian_pairs(self.seed.value, first_pair, last_pair - first_pair)
        lo = self._position - 2 * first_pair
        self._position += n
        return block[lo:lo + n]
