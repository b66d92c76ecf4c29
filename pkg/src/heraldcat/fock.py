r"""Truncated single-mode Fock-basis states.

Everything here works with real amplitude vectors indexed by photon number
``0..n_max``. Factorial-heavy amplitudes (squeezed vacuum, cat states) are
built in log space so that ``n_max`` of a few hundred does not overflow.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field

import numpy as np
from scipy.special import gammaln, xlogy

__all__ = [
    "DEFAULT_N_MAX",
    "DEFAULT_TAIL_TOL",
    "Parity",
    "FockVector",
    "CatTarget",
    "TruncationError",
    "log_factorial",
    "smsv_log_amplitudes",
    "smsv_state",
    "cat_log_amplitudes",
    "cat_state",
    "vacuum",
    "number_state",
    "inner_product",
    "mean_photon_number",
]

DEFAULT_N_MAX = 256
DEFAULT_TAIL_TOL = 1e-10


class TruncationError(ValueError):
    """The Fock cutoff is too small to hold the requested state."""


class Parity(str, enum.Enum):
    EVEN = "even"
    ODD = "odd"
    MIXED = "mixed"

    def flipped(self) -> "Parity":
        if self is Parity.MIXED:
            return self
        return Parity.ODD if self is Parity.EVEN else Parity.EVEN


def _support_parity(amplitudes: np.ndarray) -> Parity:
    nonzero = np.flatnonzero(amplitudes)
    if nonzero.size == 0 or np.all(nonzero % 2 == 0):
        return Parity.EVEN
    if np.all(nonzero % 2 == 1):
        return Parity.ODD
    return Parity.MIXED


@dataclass(frozen=True, eq=False)
class FockVector:
    """Real amplitudes over photon numbers ``0..n_max`` with a parity tag.

    The parity is validated once at construction: an ``EVEN`` vector must
    vanish on odd photon numbers and vice versa.
    """

    amplitudes: np.ndarray
    parity: Parity = field(default=None)  # type: ignore[assignment]

    def __post_init__(self):
        amps = np.array(self.amplitudes, dtype=float)
        if amps.ndim != 1 or amps.size == 0:
            raise ValueError("amplitudes must be a non-empty 1-d sequence")
        amps.setflags(write=False)
        object.__setattr__(self, "amplitudes", amps)
        if self.parity is None:
            object.__setattr__(self, "parity", _support_parity(amps))
            return
        parity = Parity(self.parity)
        object.__setattr__(self, "parity", parity)
        if parity is Parity.EVEN and np.any(amps[1::2] != 0):
            raise ValueError("even FockVector has weight on odd photon numbers")
        if parity is Parity.ODD and np.any(amps[0::2] != 0):
            raise ValueError("odd FockVector has weight on even photon numbers")

    @property
    def n_max(self) -> int:
        return self.amplitudes.size - 1

    def __len__(self):
        return self.amplitudes.size

    def __getitem__(self, k):
        return self.amplitudes[k]

    @property
    def probabilities(self) -> np.ndarray:
        return self.amplitudes**2

    def norm(self) -> float:
        return math.sqrt(math.fsum(self.probabilities))

    def normalize(self) -> "FockVector":
        nrm = self.norm()
        if nrm == 0.0:
            raise ValueError("cannot normalize the zero vector")
        return FockVector(self.amplitudes / nrm, self.parity)

    def resized(self, n_max: int) -> "FockVector":
        """Zero-pad or cut to a new cutoff (cutting drops the tail)."""
        out = np.zeros(n_max + 1)
        keep = min(n_max, self.n_max) + 1
        out[:keep] = self.amplitudes[:keep]
        return FockVector(out, self.parity)

    def allclose(self, other: "FockVector", atol: float = 1e-10, up_to_sign: bool = False) -> bool:
        a, b = self.amplitudes, other.amplitudes
        if a.size != b.size:
            return False
        if up_to_sign:
            return bool(np.allclose(a, b, rtol=0, atol=atol) or np.allclose(a, -b, rtol=0, atol=atol))
        return bool(np.allclose(a, b, rtol=0, atol=atol))


@dataclass(frozen=True)
class CatTarget:
    r"""Even (``+``) or odd (``-``) cat state :math:`|\beta\rangle \pm |-\beta\rangle`."""

    beta: float
    parity: Parity = Parity.EVEN

    def __post_init__(self):
        if not (math.isfinite(self.beta) and self.beta > 0):
            raise ValueError(f"beta must be finite and > 0, got {self.beta}")
        parity = Parity(self.parity)
        if parity is Parity.MIXED:
            raise ValueError("cat target parity must be even or odd")
        object.__setattr__(self, "parity", parity)

    @property
    def normalization(self) -> float:
        """``N_+`` or ``N_-``; the odd case uses expm1 to survive small beta."""
        b2 = 2.0 * self.beta**2
        if self.parity is Parity.EVEN:
            return (2.0 * (1.0 + math.exp(-b2))) ** -0.5
        return (-2.0 * math.expm1(-b2)) ** -0.5


def log_factorial(n):
    """``ln(n!)`` for integer (or integer array) ``n >= 0``."""
    n_arr = np.asarray(n)
    if np.any(n_arr < 0):
        raise ValueError("log_factorial needs n >= 0")
    out = gammaln(n_arr + 1.0)
    return float(out) if out.ndim == 0 else out


def smsv_log_amplitudes(s, n_pairs: int) -> np.ndarray:
    r"""``ln b_{2l}`` for ``l = 0..n_pairs-1``.

    ``s`` may be an array; the photon-pair index runs along the last axis.
    At ``s = 0`` every entry beyond ``l = 0`` is ``-inf``.
    """
    s = np.asarray(s, dtype=float)[..., None]
    l = np.arange(n_pairs, dtype=float)
    with np.errstate(divide="ignore"):
        half_tanh = np.tanh(s) / 2.0
        return (
            -0.5 * np.log(np.cosh(s))
            + xlogy(l, half_tanh)
            + 0.5 * gammaln(2.0 * l + 1.0)
            - gammaln(l + 1.0)
        )


def smsv_state(s: float, n_max: int = DEFAULT_N_MAX, tail_tol: float = DEFAULT_TAIL_TOL) -> FockVector:
    r"""Single-mode squeezed vacuum truncated at ``n_max``.

    .. math:: b_{2l} = \frac{1}{\sqrt{\cosh s}}\left(\frac{\tanh s}{2}\right)^l
              \frac{\sqrt{(2l)!}}{l!}

    Raises :class:`TruncationError` if the retained norm falls short of one by
    more than ``tail_tol``.
    """
    if s < 0:
        raise ValueError("squeezing s must be >= 0")
    if n_max < 0:
        raise ValueError("n_max must be >= 0")
    amps = np.zeros(n_max + 1)
    amps[0::2] = np.exp(smsv_log_amplitudes(s, n_max // 2 + 1))
    vec = FockVector(amps, Parity.EVEN)
    deficit = 1.0 - vec.norm() ** 2
    if deficit > tail_tol:
        raise TruncationError(
            f"n_max={n_max} keeps only 1-{deficit:.3g} of the squeezed vacuum (s={s})"
        )
    return vec


def cat_log_amplitudes(beta: float, parity: Parity, n_max: int) -> tuple[np.ndarray, np.ndarray]:
    """Photon numbers and log amplitudes of the cat state support up to ``n_max``."""
    target = CatTarget(beta, parity)
    start = 0 if target.parity is Parity.EVEN else 1
    k = np.arange(start, n_max + 1, 2, dtype=float)
    logs = (
        math.log(2.0 * target.normalization)
        - beta**2 / 2.0
        + k * math.log(beta)
        - 0.5 * gammaln(k + 1.0)
    )
    return k.astype(int), logs


def cat_state(target: CatTarget, n_max: int = DEFAULT_N_MAX, tail_tol: float = DEFAULT_TAIL_TOL) -> FockVector:
    """Even/odd cat state in the Fock basis.

    Rejects cutoffs below ``beta**2 + 10*beta``, where the Poisson-like tail
    is no longer negligible, and any cutoff whose retained norm is short by
    more than ``tail_tol``.
    """
    beta = target.beta
    if n_max < beta**2 + 10.0 * beta:
        raise TruncationError(f"n_max={n_max} too small for a cat of beta={beta}")
    k, logs = cat_log_amplitudes(beta, target.parity, n_max)
    amps = np.zeros(n_max + 1)
    amps[k] = np.exp(logs)
    vec = FockVector(amps, target.parity)
    deficit = abs(1.0 - vec.norm() ** 2)
    if deficit > tail_tol:
        raise TruncationError(f"cat state norm off by {deficit:.3g} at n_max={n_max}")
    return vec


def number_state(n: int, n_max: int) -> FockVector:
    if not 0 <= n <= n_max:
        raise ValueError(f"photon number {n} outside 0..{n_max}")
    amps = np.zeros(n_max + 1)
    amps[n] = 1.0
    return FockVector(amps, Parity.EVEN if n % 2 == 0 else Parity.ODD)


def vacuum(n_max: int) -> FockVector:
    return number_state(0, n_max)


def inner_product(a: FockVector, b: FockVector) -> float:
    """Real overlap; exactly zero for opposite definite parities."""
    if a.n_max != b.n_max:
        raise ValueError(f"dimension mismatch: n_max {a.n_max} vs {b.n_max}")
    if {a.parity, b.parity} == {Parity.EVEN, Parity.ODD}:
        return 0.0
    return math.fsum(a.amplitudes * b.amplitudes)


def mean_photon_number(v: FockVector) -> float:
    probs = v.probabilities
    total = math.fsum(probs)
    if abs(total - 1.0) > 1e-8:
        raise ValueError(f"state not normalized (norm^2 = {total})")
    return math.fsum(np.arange(v.amplitudes.size) * probs)
