r"""Heralded output states of the squeezed-vacuum / beam-splitter scheme.

A squeezed vacuum enters mode 1 of a real beam splitter (transmittance ``t``,
reflectance ``r = sqrt(1 - t**2)``) while mode 2 carries either the vacuum or
a single photon. Registering ``n`` photons in output mode 2 leaves mode 1 in
one of four closed-form states, depending on the ancilla and on the parity
of ``n``:

==============  ===========  ===================================
ancilla         herald       output support
==============  ===========  ===================================
vacuum          ``2m``       even, ``b_{2(k+m)}``
vacuum          ``2m+1``     odd, ``b_{2(k+m+1)}``
single photon   ``0``        odd, ``b_{2k} sqrt(2k+1)``
single photon   ``2m >= 2``  odd, with sign-changing bracket
single photon   ``2m+1``     even, with sign-changing bracket
==============  ===========  ===================================

All amplitudes are evaluated as ``exp(sum of logs)`` times the (possibly
negative) bracket so large herald counts and cutoffs stay finite. The batch
helpers at the bottom accept arrays of ``s`` and ``t`` and are what the
optimizer uses on its grids.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np
from scipy.special import gammaln, xlogy

from .fock import (
    DEFAULT_N_MAX,
    CatTarget,
    FockVector,
    Parity,
    TruncationError,
    cat_log_amplitudes,
    cat_state,
    inner_product,
)

__all__ = [
    "Ancilla",
    "SchemeConfig",
    "HeraldOutcome",
    "ConditionResult",
    "FidelityReport",
    "output_parity",
    "condition",
    "condition_vacuum_even",
    "condition_vacuum_odd",
    "condition_photon_even_click",
    "condition_photon_zero_click",
    "condition_photon_odd_click",
    "herald_fidelity",
    "probability_completeness",
    "distribution_discrepancy",
    "branch_fidelity_probability",
    "branch_states",
    "branch_log_quantities",
]

TRUNCATION_TOL = 1e-12
# a log-squared term this far below the peak is treated as negligible
_TAIL_LOG_MARGIN = 80.0
_MAX_TERMS = 1 << 16


class Ancilla(str, enum.Enum):
    VACUUM = "vacuum"
    SINGLE_PHOTON = "single_photon"

    @classmethod
    def parse(cls, value) -> "Ancilla":
        if isinstance(value, cls):
            return value
        key = str(value).strip().lower().replace("-", "_")
        if key in ("photon", "single", "1"):
            return cls.SINGLE_PHOTON
        if key in ("vac", "0"):
            return cls.VACUUM
        return cls(key)


@dataclass(frozen=True)
class SchemeConfig:
    """Squeezing ``s``, transmittance ``t`` and the mode-2 ancilla.

    Only ``t`` is stored; ``r`` is always derived so ``t**2 + r**2 == 1``.
    """

    s: float
    t: float
    ancilla: Ancilla = Ancilla.VACUUM

    def __post_init__(self):
        if not (math.isfinite(self.s) and self.s >= 0):
            raise ValueError(f"s must be finite and >= 0, got {self.s}")
        if not 0.0 < self.t < 1.0:
            raise ValueError(f"t must lie in (0, 1), got {self.t}")
        object.__setattr__(self, "ancilla", Ancilla.parse(self.ancilla))

    @property
    def r(self) -> float:
        return math.sqrt((1.0 - self.t) * (1.0 + self.t))


@dataclass(frozen=True)
class HeraldOutcome:
    n: int

    def __post_init__(self):
        if self.n < 0:
            raise ValueError("herald photon count must be >= 0")

    @property
    def m(self) -> int:
        return self.n // 2

    @property
    def is_even(self) -> bool:
        return self.n % 2 == 0


@dataclass(frozen=True)
class ConditionResult:
    """Normalized mode-1 state, success probability and ``L_n`` / ``K_n``.

    Impossible outcomes carry ``probability == 0`` and ``state is None``.
    ``norm_constant`` is the reciprocal norm of the unnormalized closed-form
    sum; ``log_norm_constant`` keeps it usable when it over/underflows.
    """

    state: FockVector | None
    probability: float
    log_norm_constant: float
    config: SchemeConfig
    outcome: HeraldOutcome

    @property
    def possible(self) -> bool:
        return self.state is not None and self.probability > 0.0

    @property
    def norm_constant(self) -> float:
        return math.exp(self.log_norm_constant) if self.log_norm_constant < 709 else math.inf

    @property
    def parity(self) -> Parity:
        return output_parity(self.config.ancilla, self.outcome.n)


@dataclass(frozen=True)
class FidelityReport:
    fidelity: float
    target: CatTarget
    outcome: HeraldOutcome


def output_parity(ancilla, n: int) -> Parity:
    """Parity of the mode-1 state left after heralding ``n`` photons."""
    ancilla = Ancilla.parse(ancilla)
    even_herald = n % 2 == 0
    if ancilla is Ancilla.VACUUM:
        return Parity.EVEN if even_herald else Parity.ODD
    return Parity.ODD if even_herald else Parity.EVEN


# --------------------------------------------------------------------------
# branch tables


@dataclass(frozen=True)
class _Branch:
    ancilla: Ancilla
    n: int
    out_start: int  # first output photon number (0 or 1)
    pair_offset: int  # squeezed-vacuum pair index j = k + pair_offset

    @property
    def m(self) -> int:
        return self.n // 2

    def static_logs(self, n_terms: int) -> np.ndarray:
        """s,t-independent part of ``ln|v_k|`` for ``k = 0..n_terms-1``."""
        return _static_logs(self.ancilla, self.n, n_terms)

    def bracket_coefficients(self, n_terms: int) -> np.ndarray | None:
        k = np.arange(n_terms, dtype=float)
        if self.ancilla is Ancilla.VACUUM or self.n == 0:
            return None
        m = self.m
        if self.n % 2 == 0:
            return (2.0 * k + 1.0) / (2.0 * m)
        return 2.0 * k / (2.0 * m + 1.0)

    def log_prefactor2(self, t):
        """ln of the squared herald amplitude prefactor (``r^{2m}/(2m)!`` etc.)."""
        t = np.asarray(t, dtype=float)
        log_r2 = np.log1p(-(t**2))
        log_t2 = 2.0 * np.log(t)
        m, n = self.m, self.n
        if self.ancilla is Ancilla.VACUUM:
            if n % 2 == 0:
                return n * log_r2 - gammaln(n + 1.0)
            return log_t2 + n * log_r2 - gammaln(n + 1.0)
        if n == 0:
            return log_r2
        if n % 2 == 0:
            return math.log(2 * m) + 2.0 * log_t2 + (2 * m - 1) * log_r2 - gammaln(2.0 * m)
        return math.log(2 * m + 1) + log_t2 + 2 * m * log_r2 - gammaln(2.0 * m + 1.0)


def _branch(ancilla, n: int) -> _Branch:
    ancilla = Ancilla.parse(ancilla)
    if n < 0:
        raise ValueError("herald photon count must be >= 0")
    m = n // 2
    if ancilla is Ancilla.VACUUM:
        if n % 2 == 0:
            return _Branch(ancilla, n, 0, m)
        return _Branch(ancilla, n, 1, m + 1)
    if n % 2 == 0:
        return _Branch(ancilla, n, 1, m)
    return _Branch(ancilla, n, 0, m)


@lru_cache(maxsize=256)
def _static_logs_cached(ancilla: Ancilla, n: int, n_terms: int) -> np.ndarray:
    br = _branch(ancilla, n)
    k = np.arange(n_terms, dtype=float)
    j = k + br.pair_offset
    out = 2.0 * k + br.out_start
    smsv_part = 0.5 * gammaln(2.0 * j + 1.0) - gammaln(j + 1.0)
    if ancilla is Ancilla.SINGLE_PHOTON and n == 0:
        extra = 0.5 * np.log(out)
    else:
        extra = 0.5 * (gammaln(2.0 * j + 1.0) - gammaln(out + 1.0))
    logs = smsv_part + extra
    logs.setflags(write=False)
    return logs


def _static_logs(ancilla, n, n_terms):
    return _static_logs_cached(Ancilla.parse(ancilla), int(n), int(n_terms))


def _log_magnitudes(br: _Branch, s, t, n_terms: int) -> np.ndarray:
    """``ln|v_k|`` without the bracket, broadcast over ``s`` and ``t``."""
    s = np.asarray(s, dtype=float)[..., None]
    t = np.asarray(t, dtype=float)[..., None]
    k = np.arange(n_terms, dtype=float)
    j = k + br.pair_offset
    with np.errstate(divide="ignore"):
        return (
            -0.5 * np.log(np.cosh(s))
            + xlogy(j, np.tanh(s) / 2.0)
            + 2.0 * k * np.log(t)
            + br.static_logs(n_terms)
        )


def _terms_needed(br: _Branch, s, t, minimum: int = 16) -> int:
    """Smallest power-of-two term count whose dropped tail is negligible."""
    n_terms = 1 << max(4, int(math.ceil(math.log2(max(minimum, 16)))))
    while True:
        logs = _log_magnitudes(br, s, t, n_terms)
        peak = np.max(logs, axis=-1)
        last, prev = logs[..., -1], logs[..., -2]
        # squared terms: factor 2 on the log magnitudes; all -inf rows (s=0) count as settled
        with np.errstate(invalid="ignore"):
            settled = (~np.isfinite(peak)) | (
                (2.0 * (last - peak) < -_TAIL_LOG_MARGIN) & (last <= prev)
            )
        if np.all(settled):
            return n_terms
        if n_terms >= _MAX_TERMS:
            raise TruncationError(
                f"herald n={br.n} needs more than {_MAX_TERMS} terms at the requested (s, t)"
            )
        n_terms *= 2


def _scaled_vectors(br: _Branch, s, t, n_terms: int):
    """Return ``(log_scale, scaled)`` with ``v_k = exp(log_scale) * scaled_k``."""
    logs = _log_magnitudes(br, s, t, n_terms)
    log_scale = np.max(logs, axis=-1)
    safe = np.where(np.isfinite(log_scale), log_scale, 0.0)
    scaled = np.exp(logs - safe[..., None])
    coeffs = br.bracket_coefficients(n_terms)
    if coeffs is not None:
        t_arr = np.asarray(t, dtype=float)[..., None]
        ratio = (1.0 - t_arr) * (1.0 + t_arr) / t_arr**2
        scaled = scaled * (1.0 - coeffs * ratio)
    return log_scale, scaled


# --------------------------------------------------------------------------
# scalar API


def _zero_result(cfg, n):
    return ConditionResult(None, 0.0, math.inf, cfg, HeraldOutcome(n))


def condition(
    cfg: SchemeConfig, n: int, n_max: int = DEFAULT_N_MAX, tail_tol: float = TRUNCATION_TOL
) -> ConditionResult:
    """Heralded state and probability for ``n`` photons counted in mode 2.

    The returned state is cut at ``n_max``; :class:`TruncationError` is raised
    when the discarded part carries more than ``tail_tol`` of the weight. The
    probability always uses the untruncated sum.
    """
    br = _branch(cfg.ancilla, n)
    k_out = (n_max - br.out_start) // 2 + 1 if n_max >= br.out_start else 0
    n_terms = _terms_needed(br, cfg.s, cfg.t, minimum=k_out + 2)
    log_scale, scaled = _scaled_vectors(br, cfg.s, cfg.t, n_terms)
    log_scale = float(log_scale)
    sq = scaled**2
    total = math.fsum(np.sort(sq)[::-1])
    if total == 0.0 or not math.isfinite(log_scale):
        return _zero_result(cfg, n)
    kept = math.fsum(np.sort(sq[:k_out])[::-1])
    if (total - kept) > tail_tol * total:
        raise TruncationError(
            f"n_max={n_max} drops {(total - kept) / total:.3g} of the heralded state "
            f"(s={cfg.s}, t={cfg.t}, n={n})"
        )
    amps = np.zeros(n_max + 1)
    amps[br.out_start : br.out_start + 2 * k_out : 2] = scaled[:k_out]
    nz = np.flatnonzero(amps)
    if nz.size and amps[nz[0]] < 0:
        amps = -amps
    amps /= math.sqrt(kept)
    log_norm2 = 2.0 * log_scale + math.log(total)
    prob = math.exp(float(br.log_prefactor2(cfg.t)) + log_norm2)
    state = FockVector(amps, output_parity(cfg.ancilla, n))
    return ConditionResult(state, min(prob, 1.0), -0.5 * log_norm2, cfg, HeraldOutcome(n))


def _require(cfg, ancilla):
    if cfg.ancilla is not ancilla:
        raise ValueError(f"this branch needs the {ancilla.value} ancilla, config has {cfg.ancilla.value}")


def condition_vacuum_even(
    cfg: SchemeConfig, m: int, n_max: int = DEFAULT_N_MAX, tail_tol: float = TRUNCATION_TOL
) -> ConditionResult:
    r"""Vacuum ancilla, ``2m`` photons heralded.

    .. math:: |\Psi_{2m}\rangle = L_{2m}\sum_k b_{2(k+m)} t^{2k}
              \sqrt{\frac{(2(m+k))!}{(2k)!}}|2k\rangle,\qquad
              P_{2m} = \frac{(1-t^2)^{2m}}{(2m)!\,L_{2m}^2}
    """
    _require(cfg, Ancilla.VACUUM)
    if m < 0:
        raise ValueError("m must be >= 0")
    return condition(cfg, 2 * m, n_max, tail_tol)


def condition_vacuum_odd(
    cfg: SchemeConfig, m: int, n_max: int = DEFAULT_N_MAX, tail_tol: float = TRUNCATION_TOL
) -> ConditionResult:
    r"""Vacuum ancilla, ``2m+1`` photons heralded; odd output.

    .. math:: P_{2m+1} = \frac{t^2(1-t^2)^{2m+1}}{(2m+1)!\,L_{2m+1}^2}

    At ``s == 0`` the outcome is impossible and a zero-probability result
    comes back.
    """
    _require(cfg, Ancilla.VACUUM)
    if m < 0:
        raise ValueError("m must be >= 0")
    return condition(cfg, 2 * m + 1, n_max, tail_tol)


def condition_photon_zero_click(
    cfg: SchemeConfig, n_max: int = DEFAULT_N_MAX, tail_tol: float = TRUNCATION_TOL
) -> ConditionResult:
    """Single-photon ancilla, nothing detected: ``r * sum b_2k t^2k sqrt(2k+1) |2k+1>``."""
    _require(cfg, Ancilla.SINGLE_PHOTON)
    return condition(cfg, 0, n_max, tail_tol)


def condition_photon_even_click(
    cfg: SchemeConfig, m: int, n_max: int = DEFAULT_N_MAX, tail_tol: float = TRUNCATION_TOL
) -> ConditionResult:
    r"""Single-photon ancilla, ``2m >= 2`` photons heralded; odd output.

    The amplitude of :math:`|2k+1\rangle` carries the bracket
    :math:`1 - \frac{2k+1}{2m}\frac{r^2}{t^2}`, which changes sign once
    ``2k+1`` exceeds ``2m t^2/r^2``.
    """
    _require(cfg, Ancilla.SINGLE_PHOTON)
    if m < 1:
        raise ValueError("even click needs m >= 1; use condition_photon_zero_click for n == 0")
    return condition(cfg, 2 * m, n_max, tail_tol)


def condition_photon_odd_click(
    cfg: SchemeConfig, m: int, n_max: int = DEFAULT_N_MAX, tail_tol: float = TRUNCATION_TOL
) -> ConditionResult:
    r"""Single-photon ancilla, ``2m+1`` photons heralded; even output.

    Bracket :math:`1 - \frac{2k}{2m+1}\frac{r^2}{t^2}`, probability
    :math:`(2m+1)t^2(1-t^2)^{2m} / ((2m)!\,K_{2m+1}^2)`.
    """
    _require(cfg, Ancilla.SINGLE_PHOTON)
    if m < 0:
        raise ValueError("m must be >= 0")
    return condition(cfg, 2 * m + 1, n_max, tail_tol)


def herald_fidelity(res: ConditionResult, target: CatTarget) -> FidelityReport:
    if not res.possible or res.state.parity is not target.parity:
        return FidelityReport(0.0, target, res.outcome)
    cat = cat_state(target, res.state.n_max)
    overlap = inner_product(res.state, cat)
    return FidelityReport(min(overlap**2, 1.0), target, res.outcome)


def probability_completeness(cfg: SchemeConfig, n_cut: int, n_max: int = DEFAULT_N_MAX) -> float:
    """Sum of the herald probabilities for ``n = 0..n_cut``."""
    if n_cut > n_max:
        raise ValueError("n_cut must not exceed n_max")
    probs = branch_probabilities(cfg.ancilla, np.arange(n_cut + 1), cfg.s, cfg.t)
    return math.fsum(probs)


def branch_probabilities(ancilla, ns, s: float, t: float) -> np.ndarray:
    """Untruncated herald probabilities for each count in ``ns``."""
    out = []
    for n in ns:
        br = _branch(ancilla, int(n))
        n_terms = _terms_needed(br, s, t)
        log_scale, scaled = _scaled_vectors(br, s, t, n_terms)
        total = math.fsum(np.sort(scaled**2)[::-1])
        if total == 0.0 or not np.isfinite(log_scale):
            out.append(0.0)
            continue
        out.append(math.exp(float(br.log_prefactor2(t)) + 2.0 * float(log_scale) + math.log(total)))
    return np.array(out)


def distribution_discrepancy(res: ConditionResult, target: CatTarget) -> tuple[float, int]:
    """Largest per-Fock probability difference to the target and where it sits."""
    if not res.possible:
        raise ValueError("impossible herald outcome has no distribution")
    if res.state.parity is not target.parity:
        raise ValueError("parities of the heralded state and the target differ")
    cat = cat_state(target, res.state.n_max)
    diff = np.abs(res.state.probabilities - cat.probabilities)
    k = int(np.argmax(diff))
    return float(diff[k]), k


# --------------------------------------------------------------------------
# batch evaluation over (s, t) arrays


def _cat_vector(target: CatTarget, br: _Branch, n_terms: int) -> np.ndarray:
    """Cat amplitudes aligned with the branch's output index ``2k + out_start``."""
    n_max_cat = br.out_start + 2 * (n_terms - 1)
    k, logs = cat_log_amplitudes(target.beta, target.parity, n_max_cat)
    return np.exp(logs)


def _branch_eval(ancilla, n: int, s, t, n_terms: int | None = None):
    br = _branch(ancilla, n)
    s, t = np.broadcast_arrays(np.asarray(s, dtype=float), np.asarray(t, dtype=float))
    if n_terms is None:
        n_terms = _terms_needed(br, s, t)
    log_scale, scaled = _scaled_vectors(br, s, t, n_terms)
    total = np.sum(scaled**2, axis=-1)
    ok = (total > 0) & np.isfinite(log_scale)
    norm = np.sqrt(np.where(ok, total, 1.0))
    states = np.where(ok[..., None], scaled / norm[..., None], 0.0)
    log_norm2 = np.where(ok, 2.0 * np.where(ok, log_scale, 0.0) + np.log(np.where(ok, total, 1.0)), -np.inf)
    return br, states, log_norm2, br.log_prefactor2(t)


def branch_states(ancilla, n: int, s, t, n_terms: int | None = None):
    """Batch closed-form states over broadcast ``s``/``t`` arrays.

    Returns ``(states, probability, out_start)`` where ``states[..., k]`` is
    the normalized amplitude of photon number ``2k + out_start``. Impossible
    outcomes yield all-zero rows and probability 0.
    """
    br, states, log_norm2, log_pref2 = _branch_eval(ancilla, n, s, t, n_terms)
    prob = np.minimum(np.exp(log_pref2 + log_norm2), 1.0)
    return states, prob, br.out_start


def branch_log_quantities(ancilla, n: int, target: CatTarget | None, s, t, n_terms: int | None = None):
    """``(fidelity, ln P_n, ln(1/L_n^2))`` over broadcast ``s``/``t`` arrays.

    ``1/L_n^2`` is the squared norm of the unnormalized closed-form sum; the
    log forms stay finite where the probability itself would underflow.
    Without a target the fidelity is returned as NaN.
    """
    br, states, log_norm2, log_pref2 = _branch_eval(ancilla, n, s, t, n_terms)
    log_prob = np.minimum(log_pref2 + log_norm2, 0.0)
    if target is None:
        fid = np.full(log_prob.shape, np.nan)
    elif output_parity(ancilla, n) is not target.parity:
        fid = np.zeros(log_prob.shape)
    else:
        cat = _cat_vector(target, br, states.shape[-1])
        fid = np.minimum((states @ cat) ** 2, 1.0)
    return fid, log_prob, log_norm2


def branch_fidelity_probability(ancilla, n: int, target: CatTarget, s, t, n_terms: int | None = None):
    """Vectorized ``(fidelity, probability)`` over broadcast ``s``/``t`` arrays.

    The fidelity is zero when the branch parity differs from the target.
    """
    fid, log_prob, _ = branch_log_quantities(ancilla, n, target, s, t, n_terms)
    return fid, np.exp(log_prob)
