"""Binary-input channel models: BEC, BSC and BPSK-modulated AWGN.

A channel is an immutable (kind, parameter) pair.  `sample` adds i.i.d.
noise to a codeword using a caller-supplied numpy Generator, so parallel
trials can run on independent counter-based streams.  `priors` converts the
received symbols into per-position posteriors over the transmitted bit
(uniform input prior), which is exactly what the SC decoder consumes.

Symbol conventions: bits are 0/1, a BEC erasure is marked ERASED (-1), and
AWGN symbols are reals under the BPSK map 0 -> +1, 1 -> -1.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.special import expit

__all__ = [
    "Channel",
    "ERASED",
    "bec",
    "bsc",
    "biawgn",
    "figures",
    "parse_channel",
    "prior",
    "priors",
    "sample",
]

ERASED = -1

_KINDS = ("bec", "bsc", "awgn")


@dataclass(frozen=True)
class Channel:
    """A memoryless binary-input channel.

    kind: "bec" (param = erasure probability), "bsc" (param = flip
    probability) or "awgn" (param = noise standard deviation, unit-energy
    BPSK signalling).
    """

    kind: str
    param: float

    def __post_init__(self):
        if self.kind not in _KINDS:
            raise ValueError(f"unknown channel kind {self.kind!r}")
        if self.kind in ("bec", "bsc") and not 0.0 <= self.param <= 1.0:
            raise ValueError(f"{self.kind} parameter must lie in [0, 1]")
        if self.kind == "awgn" and not self.param > 0.0:
            raise ValueError("awgn noise std must be positive")

    def __str__(self):
        return f"{self.kind}:{self.param:g}"


def bec(eps: float) -> Channel:
    return Channel("bec", float(eps))


def bsc(p: float) -> Channel:
    return Channel("bsc", float(p))


def biawgn(sigma: float) -> Channel:
    return Channel("awgn", float(sigma))


def parse_channel(text: str) -> Channel:
    """Parse a CLI channel string like "bec:0.5", "bsc:0.08" or "awgn:1.0"."""
    kind, sep, value = text.partition(":")
    if not sep:
        raise ValueError(f"channel spec {text!r} must look like 'kind:param'")
    try:
        param = float(value)
    except ValueError:
        raise ValueError(f"bad channel parameter {value!r}") from None
    return Channel(kind.strip().lower(), param)


def sample(ch: Channel, codeword, rng: np.random.Generator) -> np.ndarray:
    """Transmit a codeword (or batch of codewords) through the channel.

    Args:
        ch: the channel.
        codeword: (N,) or (B, N) array-like of bits.
        rng: numpy Generator; exactly the noise for these positions is drawn
            from it, in position order.

    Returns:
        Received symbols, same shape.  BEC: int8 with ERASED marks; BSC:
        uint8 bits; AWGN: float64 reals.
    """
    x = np.asarray(codeword, dtype=np.uint8)
    if ch.kind == "bec":
        out = x.astype(np.int8)
        out[rng.random(x.shape) < ch.param] = ERASED
        return out
    if ch.kind == "bsc":
        flips = rng.random(x.shape) < ch.param
        return x ^ flips.astype(np.uint8)
    return (1.0 - 2.0 * x) + ch.param * rng.standard_normal(x.shape)


def priors(ch: Channel, received) -> np.ndarray:
    """Per-position posteriors over the transmitted bit, shape (..., 2).

    Bayes' rule with a uniform input prior.  BEC: an erasure gives
    (0.5, 0.5), a received bit is certain.  BSC: received 0 gives (1-p, p).
    AWGN: received r gives probabilities proportional to
    (exp(-(r-1)^2 / 2 sigma^2), exp(-(r+1)^2 / 2 sigma^2)).
    """
    y = np.asarray(received)
    out = np.empty(y.shape + (2,), dtype=np.float64)
    if ch.kind == "bec":
        if not np.all((y == 0) | (y == 1) | (y == ERASED)):
            raise ValueError("BEC symbols must be 0, 1 or ERASED")
        erased = y == ERASED
        out[..., 0] = np.where(erased, 0.5, y == 0)
        out[..., 1] = np.where(erased, 0.5, y == 1)
        return out
    if ch.kind == "bsc":
        if not np.all((y == 0) | (y == 1)):
            raise ValueError("BSC symbols must be bits")
        p = ch.param
        out[..., 0] = np.where(y == 0, 1.0 - p, p)
        out[..., 1] = np.where(y == 0, p, 1.0 - p)
        return out
    # p0 / p1 = exp(+2r/sigma^2), so p0 = logistic(2r/sigma^2); stable for
    # any magnitude of r
    p0 = expit(2.0 * y.astype(np.float64) / ch.param**2)
    out[..., 0] = p0
    out[..., 1] = 1.0 - p0
    return out


def prior(ch: Channel, symbol):
    """Posterior for a single received symbol as an arity-1 ProbTensor."""
    from .scdecode import ProbTensor

    return ProbTensor(priors(ch, symbol))


def _binary_entropy(p: float) -> float:
    if p <= 0.0 or p >= 1.0:
        return 0.0
    return float(-p * np.log2(p) - (1.0 - p) * np.log2(1.0 - p))


_GH_ORDER = 201  # converges below 1e-11 even for sigma down to 0.5
_GH_NODES, _GH_WEIGHTS = np.polynomial.hermite.hermgauss(_GH_ORDER)


def figures(ch: Channel) -> tuple[float, float]:
    """Symmetric capacity I and Bhattacharyya parameter Z of the channel.

    Closed forms for BEC (1 - eps, eps) and BSC (1 - h2(p), 2 sqrt(p(1-p))).
    For BPSK-AWGN, Z = exp(-1 / 2 sigma^2) and I is evaluated by
    Gauss-Hermite quadrature of E[log2(1 + exp(-2y/sigma^2))] under y ~
    N(+1, sigma^2).
    """
    if ch.kind == "bec":
        return 1.0 - ch.param, ch.param
    if ch.kind == "bsc":
        p = ch.param
        return 1.0 - _binary_entropy(p), 2.0 * np.sqrt(p * (1.0 - p))
    sigma = ch.param
    y = 1.0 + np.sqrt(2.0) * sigma * _GH_NODES
    soft = np.logaddexp(0.0, -2.0 * y / sigma**2) / np.log(2.0)
    i = 1.0 - float(_GH_WEIGHTS @ soft) / np.sqrt(np.pi)
    return i, float(np.exp(-1.0 / (2.0 * sigma**2)))
