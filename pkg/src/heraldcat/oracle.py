r"""Brute-force two-mode beam splitter in the truncated Fock basis.

This is the reference the closed-form heralded states are checked against.
Nothing here is used on production paths.

Convention: the beam splitter maps creation operators as

.. math:: a_1^\dagger \to t\,a_1^\dagger + \sigma r\,a_2^\dagger,\qquad
          a_2^\dagger \to -\sigma r\,a_1^\dagger + t\,a_2^\dagger

with :data:`REFLECTION_SIGN` :math:`\sigma = -1`, so ``|1,0> -> t|1,0> - r|0,1>``
and the odd-herald terms of ``BS(|SMSV>|0>)`` pick up a minus sign.

Each block of fixed total photon number ``N`` is the matrix exponential of
the generator ``phi (a1^dag a2 - a2^dag a1)`` restricted to that block.
Alternating binomial sums for the same matrix elements lose all digits to
cancellation well before ``N = 80``; scaling-and-squaring keeps the blocks
orthogonal to ~1e-13 up to ``N`` of a few hundred.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np
from scipy.linalg import expm

from .conditioning import Ancilla, ConditionResult, HeraldOutcome, SchemeConfig, output_parity
from .fock import FockVector, TruncationError, smsv_log_amplitudes

__all__ = [
    "REFLECTION_SIGN",
    "ORACLE_N_MAX",
    "TwoModeState",
    "beam_splitter_block",
    "apply_beam_splitter",
    "project_mode2",
    "oracle_condition",
    "product_state",
]

REFLECTION_SIGN = -1
ORACLE_N_MAX = 80
_INPUT_TAIL_TOL = 1e-17


@dataclass(frozen=True, eq=False)
class TwoModeState:
    """Real amplitudes ``c[n1, n2]`` supported on ``n1 + n2 <= n_max``."""

    amplitudes: np.ndarray

    def __post_init__(self):
        amps = np.array(self.amplitudes, dtype=float)
        if amps.ndim != 2 or amps.shape[0] != amps.shape[1]:
            raise ValueError("two-mode amplitudes must be a square matrix")
        n1, n2 = np.indices(amps.shape)
        if np.any(amps[n1 + n2 > amps.shape[0] - 1] != 0):
            raise TruncationError("two-mode state has weight above the total-photon cutoff")
        amps.setflags(write=False)
        object.__setattr__(self, "amplitudes", amps)

    @property
    def n_max(self) -> int:
        return self.amplitudes.shape[0] - 1

    def norm(self) -> float:
        return math.sqrt(math.fsum(self.amplitudes.ravel() ** 2))

    def inner(self, other: "TwoModeState") -> float:
        return math.fsum((self.amplitudes * other.amplitudes).ravel())

    def total_photon_support(self) -> set[int]:
        n1, n2 = np.nonzero(self.amplitudes)
        return set((n1 + n2).tolist())


def product_state(mode1: FockVector | np.ndarray, mode2: FockVector | np.ndarray, n_max: int) -> TwoModeState:
    """``|a>|b>`` with any amplitude above the total cutoff rejected."""
    a = np.asarray(getattr(mode1, "amplitudes", mode1), dtype=float)
    b = np.asarray(getattr(mode2, "amplitudes", mode2), dtype=float)
    out = np.zeros((n_max + 1, n_max + 1))
    ka, kb = min(a.size, n_max + 1), min(b.size, n_max + 1)
    if np.any(a[ka:] != 0) or np.any(b[kb:] != 0):
        raise TruncationError("factor state exceeds the oracle cutoff")
    out[:ka, :kb] = np.outer(a[:ka], b[:kb])
    return TwoModeState(out)


def _check_t(t):
    if not 0.0 < t < 1.0:
        raise ValueError(f"t must lie in (0, 1), got {t}")


def _generator(N: int) -> np.ndarray:
    """``a1^dag a2 - a2^dag a1`` on the block ``|N-j, j>``, ``j = 0..N``."""
    j = np.arange(1, N + 1, dtype=float)
    off = np.sqrt(j * (N - j + 1.0))  # <N-j+1, j-1| a1^dag a2 |N-j, j>
    K = np.zeros((N + 1, N + 1))
    K[np.arange(N), np.arange(1, N + 1)] = off
    K[np.arange(1, N + 1), np.arange(N)] = -off
    return K


@lru_cache(maxsize=1024)
def _block(t: float, N: int, sign: int) -> np.ndarray:
    phi = -sign * math.atan2(math.sqrt((1.0 - t) * (1.0 + t)), t)
    U = expm(phi * _generator(N))
    U.setflags(write=False)
    return U


def beam_splitter_block(t: float, N: int) -> np.ndarray:
    """Orthogonal ``(N+1) x (N+1)`` block acting on total photon number ``N``.

    ``U_N[j, j'] = <N-j, j| U |N-j', j'>`` with ``U = exp(phi (a1^dag a2 - a2^dag a1))``
    and ``cos(phi) = t``.
    """
    _check_t(t)
    if N < 0:
        raise ValueError("photon number must be >= 0")
    return _block(float(t), int(N), int(REFLECTION_SIGN))


def apply_beam_splitter(state: TwoModeState, t: float) -> TwoModeState:
    """Apply the lossless beam splitter block by block."""
    _check_t(t)
    amps = state.amplitudes
    out = np.zeros_like(amps)
    for N in sorted(state.total_photon_support()):
        j = np.arange(N + 1)
        out[N - j, j] = beam_splitter_block(t, N) @ amps[N - j, j]
    return TwoModeState(out)


def project_mode2(state: TwoModeState, n: int) -> tuple[FockVector | None, float]:
    """Herald ``n`` photons in mode 2: normalized mode-1 state and probability.

    An impossible outcome gives ``(None, 0.0)``.
    """
    if not 0 <= n <= state.n_max:
        raise ValueError(f"n={n} outside 0..{state.n_max}")
    row = state.amplitudes[:, n]
    prob = math.fsum(row**2)
    if prob == 0.0:
        return None, 0.0
    return FockVector(row / math.sqrt(prob)), prob


def _oracle_input_cutoff(s: float, n_max: int) -> int:
    """Total-photon cutoff large enough that the squeezed-vacuum tail is ~1e-17."""
    probs = np.exp(2.0 * smsv_log_amplitudes(s, 2048))
    tails = np.cumsum(probs[::-1])[::-1]  # tails[l] = sum of pairs >= l
    pairs = int(np.argmax(tails < _INPUT_TAIL_TOL))
    if tails[pairs] >= _INPUT_TAIL_TOL:
        raise TruncationError(f"squeezing s={s} too large for the brute-force oracle")
    return max(n_max, 2 * pairs) + 1


def oracle_condition(cfg: SchemeConfig, n: int, n_max: int = ORACLE_N_MAX) -> ConditionResult:
    """Prepare squeezed vacuum and ancilla, apply the beam splitter, herald ``n``.

    The input is prepared with its own, larger cutoff so the reported
    probability is not biased by the squeezed-vacuum tail; the returned
    mode-1 state is then cut at ``n_max``.
    """
    cutoff = _oracle_input_cutoff(cfg.s, n_max + n)
    pairs = smsv_log_amplitudes(cfg.s, (cutoff - 1) // 2 + 1)
    smsv = np.zeros(cutoff + 1)
    smsv[0 : 2 * pairs.size : 2] = np.exp(pairs)
    anc = np.zeros(2)
    anc[0 if cfg.ancilla is Ancilla.VACUUM else 1] = 1.0
    joint = apply_beam_splitter(product_state(smsv, anc, cutoff), cfg.t)
    vec, prob = project_mode2(joint, n)
    outcome = HeraldOutcome(n)
    if vec is None:
        return ConditionResult(None, 0.0, math.inf, cfg, outcome)
    amps = vec.resized(n_max).amplitudes.copy()
    nz = np.flatnonzero(amps)
    if nz.size and amps[nz[0]] < 0:
        amps = -amps
    amps /= math.sqrt(math.fsum(amps**2))
    state = FockVector(amps, output_parity(cfg.ancilla, n))
    # the oracle has no closed-form L_n; report the one implied by the probability
    return ConditionResult(state, prob, math.nan, cfg, outcome)
