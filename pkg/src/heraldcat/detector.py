r"""Inefficient photon-number-resolving detection.

An efficiency-``eta`` counter is an ideal counter behind a fictitious beam
splitter of transmissivity ``eta``. Its POVM is diagonal,

.. math:: \Pi_n(\eta) = \sum_{k \ge n} \binom{k}{n}\eta^n(1-\eta)^{k-n}|k\rangle\langle k|,

so the state heralded by outcome ``n`` is the mixture of the ideal heralded
states ``|Psi_k>`` (``k >= n``) weighted by ``w_k P_k``. Two independent
routes to its cat fidelity are provided: the direct mixture over all
branches and the closed ratio over loss index ``x`` for the vacuum/even
branch. Lower bounds for all four branches follow the first-order expansion
in ``1 - eta``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.special import gammaln, logsumexp

from .conditioning import (
    Ancilla,
    SchemeConfig,
    branch_fidelity_probability,
    branch_log_quantities,
    condition,
    herald_fidelity,
)
from .fock import DEFAULT_N_MAX, CatTarget, Parity, mean_photon_number

__all__ = [
    "DetectorModel",
    "PovmDiagonal",
    "SeriesCoefficients",
    "LowerBoundValidityError",
    "ImpossibleOutcomeError",
    "povm_element",
    "imperfect_fidelity_closed",
    "imperfect_fidelity_direct",
    "imperfect_fidelity_grid",
    "series_coefficients",
    "lower_bound",
    "LB_MIN_TRANSMITTANCE",
]

LB_MIN_TRANSMITTANCE = 0.4
_WEIGHT_FLOOR = 1e-16


class LowerBoundValidityError(ValueError):
    """The first-order lower bound is only claimed for ``t > 0.4``."""


class ImpossibleOutcomeError(ValueError):
    """The herald outcome has zero probability, so no state is conditioned."""


@dataclass(frozen=True)
class DetectorModel:
    """Efficiency ``eta`` and an optional fixed cut on the loss index ``x``.

    With ``x_max=None`` the cut is chosen per call so that the dropped loss
    weight ``((1 - eta)(1 - t^2))^x`` falls below ``1e-16``.
    """

    eta: float
    x_max: int | None = None

    def __post_init__(self):
        if not 0.0 < self.eta <= 1.0:
            raise ValueError(f"eta must lie in (0, 1], got {self.eta}")
        if self.x_max is not None and self.x_max < 0:
            raise ValueError("x_max must be >= 0")

    def loss_cutoff(self, t: float) -> int:
        if self.x_max is not None:
            return self.x_max
        ratio = (1.0 - self.eta) * (1.0 - t * t)
        if ratio <= 0.0:
            return 0
        return max(1, int(math.ceil(math.log(_WEIGHT_FLOOR) / math.log(ratio))))


@dataclass(frozen=True)
class PovmDiagonal:
    n: int
    weights: np.ndarray  # over true photon number k = 0..n_max


@dataclass(frozen=True)
class SeriesCoefficients:
    """Coefficients of ``Fid(eta)/Fid(1) = 1 - (1-eta) g1 + (1-eta)^2 g2 + ...``.

    ``g2`` is the closed expression in terms of ``L_{2m}``, ``L_{2m+1}`` and
    ``L_{2m+2}`` as usually quoted; ``g2_taylor`` is the exact second-order
    Taylor coefficient of the loss-index ratio. They differ by the factor
    ``L_{2m+2}^2 / L_{2m+1}^2`` in the ``t^4`` term.
    """

    g1: float
    g2: float
    g2_taylor: float


def povm_element(det: DetectorModel, n: int, n_max: int = DEFAULT_N_MAX) -> PovmDiagonal:
    if not 0 <= n <= n_max:
        raise ValueError(f"outcome n={n} outside 0..{n_max}")
    k = np.arange(n_max + 1)
    w = np.zeros(n_max + 1)
    kk = k[n:].astype(float)
    log_binom = gammaln(kk + 1) - gammaln(n + 1.0) - gammaln(kk - n + 1)
    if det.eta == 1.0:
        w[n] = 1.0
    else:
        w[n:] = np.exp(log_binom + n * math.log(det.eta) + (kk - n) * math.log1p(-det.eta))
    return PovmDiagonal(n, w)


def _loss_terms(cfg: SchemeConfig, n: int, det: DetectorModel, target: CatTarget):
    """Per-true-count ``(ln(w_k P_k), F_k)`` for ``k = n, n+1, ...``."""
    eta = det.eta
    if eta == 1.0:
        ks = np.array([n])
    else:
        ks = np.arange(n, n + 2 * det.loss_cutoff(cfg.t) + 2)
    log_wp, fids = [], []
    for k in ks:
        fid, log_prob, _ = branch_log_quantities(cfg.ancilla, int(k), target, cfg.s, cfg.t)
        log_w = gammaln(k + 1.0) - gammaln(n + 1.0) - gammaln(k - n + 1.0) + n * math.log(eta)
        if k > n:
            log_w += (k - n) * math.log1p(-eta)
        log_wp.append(log_w + float(log_prob))
        fids.append(float(fid))
    return ks, np.array(log_wp), np.array(fids)


def imperfect_fidelity_direct(
    cfg: SchemeConfig, n: int, det: DetectorModel, target: CatTarget
) -> tuple[float, float]:
    r"""Fidelity and probability of the state heralded by an inefficient counter.

    .. math:: F = \frac{\sum_{k\ge n} w_k P_k F_k}{\sum_{k\ge n} w_k P_k}

    Branches of the wrong parity add to the denominator only.
    """
    ks, log_wp, fids = _loss_terms(cfg, n, det, target)
    if not np.any(np.isfinite(log_wp)):
        raise ImpossibleOutcomeError(f"outcome n={n} cannot occur at s={cfg.s}")
    log_den = logsumexp(log_wp)
    weights = np.exp(log_wp - log_den)
    fid = math.fsum(weights * fids)
    return min(fid, 1.0), float(math.exp(log_den))


def imperfect_fidelity_grid(ancilla, n: int, det: DetectorModel, target: CatTarget, s, t):
    """Vectorized :func:`imperfect_fidelity_direct` over ``s``/``t`` arrays."""
    s, t = np.broadcast_arrays(np.asarray(s, dtype=float), np.asarray(t, dtype=float))
    eta = det.eta
    if eta == 1.0:
        return branch_fidelity_probability(ancilla, n, target, s, t)
    x_cut = max(det.loss_cutoff(float(np.min(t))), 1)
    num = np.zeros(s.shape)
    den = np.zeros(s.shape)
    # common factor eta^n (scaled out of both sums, restored for the probability)
    for k in range(n, n + 2 * x_cut + 2):
        fid, prob = branch_fidelity_probability(ancilla, k, target, s, t)
        log_w = gammaln(k + 1.0) - gammaln(n + 1.0) - gammaln(k - n + 1.0) + (k - n) * math.log1p(-eta)
        wp = math.exp(log_w) * prob
        num += wp * fid
        den += wp
    ok = den > 0
    fid = np.where(ok, num / np.where(ok, den, 1.0), 0.0)
    return np.minimum(fid, 1.0), den * eta**n


def _vacuum_even_logs(cfg: SchemeConfig, m: int, target: CatTarget, x_cut: int):
    """``ln(1/L^2)`` for herald ``2(m+x)`` and ``2(m+x)+1``, plus the even fidelities."""
    log_inv_l2_even, log_inv_l2_odd, fids = [], [], []
    for x in range(x_cut + 1):
        fid, _, le = branch_log_quantities(Ancilla.VACUUM, 2 * (m + x), target, cfg.s, cfg.t)
        _, _, lo = branch_log_quantities(Ancilla.VACUUM, 2 * (m + x) + 1, None, cfg.s, cfg.t)
        fids.append(float(fid))
        log_inv_l2_even.append(float(le))
        log_inv_l2_odd.append(float(lo))
    return np.array(log_inv_l2_even), np.array(log_inv_l2_odd), np.array(fids)


def imperfect_fidelity_closed(cfg: SchemeConfig, m: int, det: DetectorModel, target: CatTarget) -> float:
    r"""Vacuum ancilla, ``2m`` counted, even target: ratio over loss index ``x``.

    .. math::
        \mathrm{Fid}_{2m} = \frac{\sum_x c_x F_{2(m+x)}}
        {\sum_x c_x \left(1 + (1-\eta)\frac{t^2(1-t^2) L_{2(m+x)}^2}{(2x+1) L_{2(m+x)+1}^2}\right)},
        \qquad c_x = \frac{(1-\eta)^{2x}(1-t^2)^{2x}}{(2x)!\,L_{2(m+x)}^2}
    """
    if cfg.ancilla is not Ancilla.VACUUM:
        raise ValueError("closed form covers the vacuum ancilla only")
    if target.parity is not Parity.EVEN:
        raise ValueError("closed form covers the even cat target only")
    eta, t = det.eta, cfg.t
    x_cut = 0 if eta == 1.0 else det.loss_cutoff(t)
    le, lo, fids = _vacuum_even_logs(cfg, m, target, x_cut)
    if not np.isfinite(le[0]):
        raise ImpossibleOutcomeError(f"outcome n={2 * m} cannot occur at s={cfg.s}")
    x = np.arange(x_cut + 1, dtype=float)
    log_r2 = math.log1p(-t * t)
    if eta == 1.0:
        return float(fids[0])
    log_loss = math.log1p(-eta)
    log_c = 2 * x * (log_loss + log_r2) - gammaln(2 * x + 1) + le
    # (1-eta) t^2 (1-t^2) L_even^2 / ((2x+1) L_odd^2), with 1/L^2 stored as le, lo
    leak = np.exp(log_loss + 2 * math.log(t) + log_r2 - np.log(2 * x + 1) + lo - le)
    shift = np.max(log_c)
    c = np.exp(log_c - shift)
    return min(math.fsum(c * fids) / math.fsum(c * (1.0 + leak)), 1.0)


def series_coefficients(
    cfg: SchemeConfig, m: int, target: CatTarget, n_max: int = DEFAULT_N_MAX
) -> SeriesCoefficients:
    """First/second order coefficients in ``1 - eta`` for the vacuum/even branch."""
    if cfg.ancilla is not Ancilla.VACUUM:
        raise ValueError("series coefficients are defined for the vacuum ancilla")
    le, lo, fids = _vacuum_even_logs(cfg, m, target, 1)
    t2 = cfg.t**2
    r2 = 1.0 - t2
    # L_{2m}^2 / L_{2m+1}^2 = (1/L_{2m+1}^2) / (1/L_{2m}^2)
    ratio_01 = math.exp(lo[0] - le[0])
    ratio_02 = math.exp(le[1] - le[0])  # L_{2m}^2 / L_{2m+2}^2
    g1 = t2 * r2 * ratio_01
    f_ratio = fids[1] / fids[0] if fids[0] > 0 else 0.0
    a = r2**2 * ratio_02 / 2.0
    g2 = a * (2.0 * t2**2 * ratio_01 + f_ratio - 1.0)
    g2_taylor = g1**2 + a * (f_ratio - 1.0)
    return SeriesCoefficients(g1, g2, g2_taylor)


def lower_bound(
    cfg: SchemeConfig,
    n: int,
    det: DetectorModel,
    target: CatTarget,
    mean_n: float | None = None,
    n_max: int = DEFAULT_N_MAX,
) -> float:
    r"""First-order lower bound on the inefficient-detector fidelity.

    ``mean_n`` defaults to the mean photon number of the ideal heralded state.
    Refuses ``t <= 0.4`` where higher orders in ``1 - eta`` are not small.
    """
    if cfg.t <= LB_MIN_TRANSMITTANCE:
        raise LowerBoundValidityError(f"lower bound needs t > {LB_MIN_TRANSMITTANCE}, got t={cfg.t}")
    if cfg.ancilla is Ancilla.SINGLE_PHOTON and n == 0:
        raise ValueError("no lower bound for the zero-click photon-ancilla branch")
    res = condition(cfg, n, n_max)
    if not res.possible:
        raise ImpossibleOutcomeError(f"outcome n={n} cannot occur at s={cfg.s}")
    fid1 = herald_fidelity(res, target).fidelity
    if mean_n is None:
        mean_n = mean_photon_number(res.state)
    loss = 1.0 - det.eta
    t2 = cfg.t**2
    r2 = 1.0 - t2
    th2 = math.tanh(cfg.s) ** 2
    m = n // 2
    if cfg.ancilla is Ancilla.VACUUM and n % 2 == 0:
        coef = t2 * r2 * th2 * (mean_n + (m + 1) ** 2)
    elif cfg.ancilla is Ancilla.SINGLE_PHOTON and n % 2 == 1:
        coef = t2 * r2 * th2 * (2 * (m + 1) / (2 * m + 1)) ** 2 * (mean_n + 4 * m * (1 + m))
    elif cfg.ancilla is Ancilla.VACUUM:
        coef = r2 / t2 * mean_n
    else:
        coef = ((2 * m + 1) / (2 * m)) ** 2 * r2 / t2 * mean_n
    return fid1 * (1.0 - loss * coef)
