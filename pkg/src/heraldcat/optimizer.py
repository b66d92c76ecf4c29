r"""Two-parameter search over squeezing ``s`` and transmittance ``t``.

Fidelity landscapes of the vacuum-ancilla branches are degenerate along
curves of constant ``tanh(s) t^2`` (the normalized heralded state only
depends on that product), which shows up as long curved ridges in the
``(s, t)`` plane. Pure local search from a cold start tends to stall on such
ridges, so every query starts from a coarse grid and then refines the best
grid cells with a bounded Nelder-Mead simplex.

Grid states do not depend on the cat size, so they are cached per
``(ancilla, n, grid)`` and re-used across ``beta`` scans.
"""

from __future__ import annotations

import enum
import logging
import math
from collections import OrderedDict
from dataclasses import dataclass, field, replace

import numpy as np
from scipy.optimize import minimize, minimize_scalar

from .conditioning import (
    Ancilla,
    _branch,
    _cat_vector,
    _terms_needed,
    branch_fidelity_probability,
    branch_states,
    output_parity,
)
from .detector import DetectorModel, imperfect_fidelity_grid
from .fock import CatTarget, Parity

__all__ = [
    "Regime",
    "SearchPolicy",
    "OptimizationResult",
    "IsolineSet",
    "ThresholdResult",
    "ThresholdBracketError",
    "Landscape",
    "maximize_fidelity",
    "maximize_probability_with_floor",
    "fidelity_isolines",
    "beta_threshold",
    "max_fidelity_curve",
    "best_squeezing",
]

log = logging.getLogger(__name__)

# cached grid states keep this many terms (photon numbers up to ~320)
_CACHED_TERMS = 161
_CACHE_SIZE = 16


class Regime(str, enum.Enum):
    FID_OPTIMAL = "fid_optimal"
    PROB_OPTIMAL = "prob_optimal"


@dataclass(frozen=True)
class SearchPolicy:
    """Grid + simplex refinement settings.

    ``starts`` is the number of best grid local maxima that get refined;
    ``random_starts`` adds that many extra starts drawn with ``seed``.
    """

    s_bounds: tuple[float, float] = (0.05, 2.5)
    t_bounds: tuple[float, float] = (0.3, 0.999)
    grid_s: int = 60
    grid_t: int = 60
    refine_evals: int = 200
    starts: int = 3
    random_starts: int = 0
    seed: int = 0
    xatol: float = 1e-7
    fatol: float = 1e-13
    report_floor: float = 0.99  # local optima above report_floor - 0.005 are kept

    def grid(self) -> tuple[np.ndarray, np.ndarray]:
        s = np.linspace(*self.s_bounds, self.grid_s)
        t = np.linspace(*self.t_bounds, self.grid_t)
        return s, t

    def cache_key(self):
        return (self.s_bounds, self.t_bounds, self.grid_s, self.grid_t)


@dataclass(frozen=True)
class OptimizationResult:
    s: float
    t: float
    fidelity: float
    probability: float
    regime: Regime
    evaluations: int
    feasible: bool = True
    n_max: int = 0
    local_optima: tuple = ()  # ((s, t, fidelity, probability), ...) best first


@dataclass(frozen=True)
class IsolineSet:
    level: float
    polylines: list = field(default_factory=list)  # each an (P, 2) array of (s, t)

    @property
    def empty(self) -> bool:
        return len(self.polylines) == 0


@dataclass(frozen=True)
class ThresholdResult:
    n: int
    beta_threshold: float
    fidelity_at_threshold: float
    fidelity_below: float  # at beta_threshold - resolution
    fidelity_above: float  # at beta_threshold + resolution
    resolution: float
    evaluations: int


class ThresholdBracketError(ValueError):
    """The fidelity floor cannot be bracketed in the scanned ``beta`` range."""


def _target_parity(ancilla, n) -> Parity:
    return output_parity(ancilla, n)


def _check_branch(ancilla, n, target):
    ancilla = Ancilla.parse(ancilla)
    if n < 0:
        raise ValueError("n must be >= 0")
    if ancilla is Ancilla.SINGLE_PHOTON and n == 0:
        raise ValueError("photon-ancilla even branch needs n >= 1")
    if output_parity(ancilla, n) is not target.parity:
        raise ValueError(
            f"{ancilla.value} ancilla with n={n} gives a {output_parity(ancilla, n).value} state; "
            f"target cat is {target.parity.value}"
        )
    return ancilla


_grid_cache: "OrderedDict[tuple, tuple]" = OrderedDict()


def _grid_states(ancilla: Ancilla, n: int, policy: SearchPolicy):
    """Normalized grid states (first ``_CACHED_TERMS`` terms), probabilities, term count."""
    key = (ancilla, n, policy.cache_key())
    if key in _grid_cache:
        _grid_cache.move_to_end(key)
        return _grid_cache[key]
    s_axis, t_axis = policy.grid()
    states = np.empty((s_axis.size, t_axis.size, _CACHED_TERMS))
    probs = np.empty((s_axis.size, t_axis.size))
    max_terms = 0
    br = _branch(ancilla, n)
    for i, s in enumerate(s_axis):
        n_terms = max(_terms_needed(br, s, t_axis), _CACHED_TERMS)
        st, p, _ = branch_states(ancilla, n, s, t_axis, n_terms)
        states[i] = st[:, :_CACHED_TERMS]
        probs[i] = p
        max_terms = max(max_terms, n_terms)
    value = (states, probs, max_terms)
    _grid_cache[key] = value
    if len(_grid_cache) > _CACHE_SIZE:
        _grid_cache.popitem(last=False)
    return value


class Landscape:
    """Fidelity and probability of one herald branch as functions of ``(s, t)``."""

    def __init__(self, ancilla, n: int, target: CatTarget, detector: DetectorModel | None = None):
        self.ancilla = _check_branch(ancilla, n, target)
        self.n = n
        self.target = target
        self.detector = detector if detector is not None and detector.eta < 1.0 else None
        self.evaluations = 0

    def grid(self, policy: SearchPolicy) -> tuple[np.ndarray, np.ndarray]:
        """Fidelity and probability on the policy grid, shape ``(grid_s, grid_t)``."""
        s_axis, t_axis = policy.grid()
        self.evaluations += s_axis.size * t_axis.size
        if self.detector is not None:
            # row by row so the term count adapts to each s
            rows = [
                imperfect_fidelity_grid(self.ancilla, self.n, self.detector, self.target, s, t_axis)
                for s in s_axis
            ]
            return np.array([r[0] for r in rows]), np.array([r[1] for r in rows])
        states, probs, _ = _grid_states(self.ancilla, self.n, policy)
        cat = _cat_vector(self.target, _branch(self.ancilla, self.n), _CACHED_TERMS)
        fid = np.minimum((states @ cat) ** 2, 1.0)
        return fid, probs.copy()

    def __call__(self, s: float, t: float) -> tuple[float, float]:
        self.evaluations += 1
        if self.detector is not None:
            f, p = imperfect_fidelity_grid(self.ancilla, self.n, self.detector, self.target, s, t)
            return float(f), float(p)
        br = _branch(self.ancilla, self.n)
        n_terms = max(_terms_needed(br, s, t), _CACHED_TERMS)
        st, p, _ = branch_states(self.ancilla, self.n, s, t, n_terms)
        cat = _cat_vector(self.target, br, n_terms)
        return min(float(st @ cat) ** 2, 1.0), float(p)

    def n_max_at(self, s: float, t: float) -> int:
        """Photon cutoff the closed form needs to stay converged at ``(s, t)``."""
        br = _branch(self.ancilla, self.n)
        return br.out_start + 2 * (max(_terms_needed(br, s, t), _CACHED_TERMS) - 1)


def _grid_local_maxima(values: np.ndarray, mask: np.ndarray | None = None) -> list[tuple[int, int]]:
    """Indices of 8-neighbourhood local maxima, best first."""
    v = np.where(mask, values, -np.inf) if mask is not None else values
    padded = np.pad(v, 1, constant_values=-np.inf)
    core = padded[1:-1, 1:-1]
    is_max = np.isfinite(core)
    for di in (-1, 0, 1):
        for dj in (-1, 0, 1):
            if di == 0 and dj == 0:
                continue
            shifted = padded[1 + di : padded.shape[0] - 1 + di, 1 + dj : padded.shape[1] - 1 + dj]
            is_max &= core >= shifted
    idx = np.argwhere(is_max)
    order = np.lexsort((idx[:, 1], idx[:, 0], -core[is_max]))
    return [tuple(map(int, ij)) for ij in idx[order]]


def _refine(objective, x0, policy: SearchPolicy, step) -> tuple[np.ndarray, float]:
    lo = np.array([policy.s_bounds[0], policy.t_bounds[0]])
    hi = np.array([policy.s_bounds[1], policy.t_bounds[1]])
    x0 = np.clip(np.asarray(x0, dtype=float), lo, hi)
    simplex = np.array([x0, x0 + [step[0], 0.0], x0 + [0.0, step[1]]])
    # keep the simplex inside the box by mirroring offending vertices
    for v in simplex[1:]:
        for d in range(2):
            if v[d] > hi[d]:
                v[d] = x0[d] - (v[d] - x0[d])
    res = minimize(
        objective,
        x0,
        method="Nelder-Mead",
        bounds=list(zip(lo, hi)),
        options={
            "initial_simplex": simplex,
            "maxfev": policy.refine_evals,
            "xatol": policy.xatol,
            "fatol": policy.fatol,
        },
    )
    return np.clip(res.x, lo, hi), float(res.fun)


def _starts(values, mask, policy: SearchPolicy, extra=()):
    s_axis, t_axis = policy.grid()
    picks = _grid_local_maxima(values, mask)[: policy.starts]
    pts = [(s_axis[i], t_axis[j]) for i, j in picks]
    if policy.random_starts:
        rng = np.random.default_rng(policy.seed)
        lo = np.array([policy.s_bounds[0], policy.t_bounds[0]])
        hi = np.array([policy.s_bounds[1], policy.t_bounds[1]])
        pts += [tuple(lo + (hi - lo) * u) for u in rng.random((policy.random_starts, 2))]
    pts += [tuple(p) for p in extra]
    return pts


def _step(policy: SearchPolicy):
    return (
        (policy.s_bounds[1] - policy.s_bounds[0]) / max(policy.grid_s - 1, 1),
        (policy.t_bounds[1] - policy.t_bounds[0]) / max(policy.grid_t - 1, 1),
    )


def _in_window(p, window):
    return window is None or (window[0] <= p <= window[1])


def maximize_fidelity(
    ancilla,
    n: int,
    target: CatTarget,
    search: SearchPolicy | None = None,
    detector: DetectorModel | None = None,
    probability_window: tuple[float, float] | None = None,
    warm_start: tuple[float, float] | None = None,
) -> OptimizationResult:
    """Find ``(s, t)_Fid``, the point of highest fidelity inside the search box.

    With a ``detector`` the inefficient-detector fidelity is maximized. A
    ``probability_window`` restricts the search to points whose herald
    probability lies inside it; if no grid point qualifies the result is
    flagged infeasible.
    """
    policy = search or SearchPolicy()
    land = Landscape(ancilla, n, target, detector)
    fid, prob = land.grid(policy)
    mask = None
    if probability_window is not None:
        mask = (prob >= probability_window[0]) & (prob <= probability_window[1])
        if not mask.any():
            return _infeasible(land, fid, prob, policy, Regime.FID_OPTIMAL)

    def objective(x):
        f, p = land(*x)
        if not _in_window(p, probability_window):
            return 1.0 + abs(math.log10(max(p, 1e-300)) - math.log10(_nearest(p, probability_window)))
        return -f

    extra = [warm_start] if warm_start is not None else []
    candidates = []
    for x0 in _starts(fid, mask, policy, extra):
        x, _ = _refine(objective, x0, policy, _step(policy))
        f, p = land(*x)
        if _in_window(p, probability_window):
            candidates.append((float(x[0]), float(x[1]), f, p))
    s_axis, t_axis = policy.grid()
    # the best grid point is always a candidate, so refinement can only help
    gi, gj = np.unravel_index(np.argmax(np.where(mask, fid, -np.inf) if mask is not None else fid), fid.shape)
    candidates.append((float(s_axis[gi]), float(t_axis[gj]), float(fid[gi, gj]), float(prob[gi, gj])))
    candidates.sort(key=lambda c: (-c[2], -c[3], c[0], c[1]))
    best = candidates[0]
    return OptimizationResult(
        s=best[0],
        t=best[1],
        fidelity=best[2],
        probability=best[3],
        regime=Regime.FID_OPTIMAL,
        evaluations=land.evaluations,
        feasible=True,
        n_max=land.n_max_at(best[0], best[1]),
        local_optima=tuple(c for c in _dedupe(candidates) if c[2] >= policy.report_floor - 0.005),
    )


def _nearest(p, window):
    return min(max(p, window[0]), window[1])


def _dedupe(candidates, tol=1e-6):
    out = []
    for c in candidates:
        if all(abs(c[0] - o[0]) > tol or abs(c[1] - o[1]) > tol for o in out):
            out.append(c)
    return out


def _infeasible(land, fid, prob, policy, regime):
    s_axis, t_axis = policy.grid()
    gi, gj = np.unravel_index(np.argmax(fid), fid.shape)
    return OptimizationResult(
        s=float(s_axis[gi]),
        t=float(t_axis[gj]),
        fidelity=float(fid[gi, gj]),
        probability=float(prob[gi, gj]),
        regime=regime,
        evaluations=land.evaluations,
        feasible=False,
        n_max=land.n_max_at(float(s_axis[gi]), float(t_axis[gj])),
    )


def maximize_probability_with_floor(
    ancilla,
    n: int,
    target: CatTarget,
    floor: float = 0.99,
    search: SearchPolicy | None = None,
    detector: DetectorModel | None = None,
) -> OptimizationResult:
    """Find ``(s, t)_Prob``: highest herald probability with fidelity >= ``floor``.

    Infeasible floors come back as a result with ``feasible=False`` that
    carries the best fidelity seen, not as an exception.
    """
    policy = search or SearchPolicy()
    fid_opt = maximize_fidelity(ancilla, n, target, policy, detector)
    land = Landscape(ancilla, n, target, detector)
    land.evaluations = fid_opt.evaluations
    fid, prob = land.grid(policy)
    feasible = fid >= floor
    if not feasible.any() and fid_opt.fidelity < floor:
        best = _infeasible(land, fid, prob, policy, Regime.PROB_OPTIMAL)
        return replace(best, s=fid_opt.s, t=fid_opt.t, fidelity=fid_opt.fidelity, probability=fid_opt.probability)

    def objective(x):
        f, p = land(*x)
        if f < floor:
            return 1e3 + (floor - f)
        return -math.log(max(p, 1e-300))

    extra = [(fid_opt.s, fid_opt.t)] if fid_opt.fidelity >= floor else []
    log_p = np.log(np.maximum(prob, 1e-300))
    candidates = []
    if fid_opt.fidelity >= floor:
        candidates.append((fid_opt.s, fid_opt.t, fid_opt.fidelity, fid_opt.probability))
    s_axis, t_axis = policy.grid()
    for i, j in zip(*np.nonzero(feasible)):
        candidates.append((float(s_axis[i]), float(t_axis[j]), float(fid[i, j]), float(prob[i, j])))
    for x0 in _starts(log_p, feasible if feasible.any() else None, policy, extra):
        x, _ = _refine(objective, x0, policy, _step(policy))
        f, p = land(*x)
        if f >= floor:
            candidates.append((float(x[0]), float(x[1]), f, p))
    candidates.sort(key=lambda c: (-c[3], -c[2], c[0], c[1]))
    best = candidates[0]
    return OptimizationResult(
        s=best[0],
        t=best[1],
        fidelity=best[2],
        probability=best[3],
        regime=Regime.PROB_OPTIMAL,
        evaluations=land.evaluations,
        feasible=True,
        n_max=land.n_max_at(best[0], best[1]),
        local_optima=tuple(_dedupe(candidates[: policy.starts + 2])),  # all satisfy the floor
    )


# --------------------------------------------------------------------------
# isolines


def _bisect_edge(f, a, b, fa, fb, level, tol):
    """Point on segment ``a-b`` where ``f`` crosses ``level`` (``fa``/``fb`` straddle it)."""
    for _ in range(200):
        mid = 0.5 * (a + b)
        fm = f(*mid)
        if abs(fm - level) < tol or np.allclose(a, b, rtol=0, atol=1e-15):
            return mid
        if (fa - level) * (fm - level) <= 0:
            b, fb = mid, fm
        else:
            a, fa = mid, fm
    return 0.5 * (a + b)


# marching-squares table: corner bits (bl, br, tr, tl) -> pairs of crossed edges
# edges: 0 bottom, 1 right, 2 top, 3 left
_CASES = {
    1: [(3, 0)], 2: [(0, 1)], 3: [(3, 1)], 4: [(1, 2)], 5: [(3, 2), (0, 1)],
    6: [(0, 2)], 7: [(3, 2)], 8: [(2, 3)], 9: [(0, 2)], 10: [(3, 0), (1, 2)],
    11: [(1, 2)], 12: [(1, 3)], 13: [(0, 1)], 14: [(3, 0)],
}


def _edge_key(i, j, e):
    """Canonical key of edge ``e`` of cell ``(i, j)`` in node coordinates."""
    if e == 0:
        return ((i, j), (i + 1, j))
    if e == 1:
        return ((i + 1, j), (i + 1, j + 1))
    if e == 2:
        return ((i, j + 1), (i + 1, j + 1))
    return ((i, j), (i, j + 1))


def _link_segments(segments):
    adj: dict = {}
    for a, b in segments:
        adj.setdefault(a, []).append(b)
        adj.setdefault(b, []).append(a)
    seen_edges = set()
    lines = []
    # open chains first (endpoints have one neighbour), then closed loops
    starts = sorted(k for k, v in adj.items() if len(v) == 1) + sorted(adj)
    for start in starts:
        if all(frozenset((start, nb)) in seen_edges for nb in adj[start]):
            continue
        chain = [start]
        cur = start
        while True:
            nxt = [nb for nb in adj[cur] if frozenset((cur, nb)) not in seen_edges]
            if not nxt:
                break
            seen_edges.add(frozenset((cur, nxt[0])))
            cur = nxt[0]
            chain.append(cur)
            if cur == start:
                break
        if len(chain) > 1:
            lines.append(chain)
    return lines


def fidelity_isolines(
    ancilla,
    n: int,
    target: CatTarget,
    level: float,
    grid: SearchPolicy | None = None,
    tol: float = 1e-5,
    detector: DetectorModel | None = None,
) -> IsolineSet:
    """Contours ``F(s, t) = level`` by marching squares plus edge bisection.

    Every emitted vertex lies on a grid edge and is refined by bisection of
    the exact fidelity to within ``tol`` of ``level``.
    """
    if not 0.0 < level < 1.0:
        raise ValueError("level must lie in (0, 1)")
    policy = grid or SearchPolicy()
    land = Landscape(ancilla, n, target, detector)
    fid, _ = land.grid(policy)
    s_axis, t_axis = policy.grid()
    if fid.max() < level:
        return IsolineSet(level, [])
    above = fid >= level
    segments = []
    for i in range(s_axis.size - 1):
        for j in range(t_axis.size - 1):
            code = (
                int(above[i, j])
                | int(above[i + 1, j]) << 1
                | int(above[i + 1, j + 1]) << 2
                | int(above[i, j + 1]) << 3
            )
            for e1, e2 in _CASES.get(code, []):
                segments.append((_edge_key(i, j, e1), _edge_key(i, j, e2)))
    points: dict = {}

    def f_only(s, t):
        return land(s, t)[0]

    for edge in {e for seg in segments for e in seg}:
        (i0, j0), (i1, j1) = edge
        a = np.array([s_axis[i0], t_axis[j0]])
        b = np.array([s_axis[i1], t_axis[j1]])
        points[edge] = _bisect_edge(f_only, a, b, fid[i0, j0], fid[i1, j1], level, tol)
    polylines = [np.array([points[e] for e in chain]) for chain in _link_segments(segments)]
    return IsolineSet(level, polylines)


# --------------------------------------------------------------------------
# beta scans


def max_fidelity_curve(
    ancilla,
    n: int,
    betas,
    search: SearchPolicy | None = None,
    detector: DetectorModel | None = None,
    warm: bool = True,
) -> list[OptimizationResult]:
    """``(s, t)_Fid`` for each cat size, warm-starting from the previous optimum."""
    parity = _target_parity(ancilla, n)
    out = []
    prev = None
    for beta in betas:
        res = maximize_fidelity(
            ancilla, n, CatTarget(float(beta), parity), search, detector,
            warm_start=prev if warm else None,
        )
        prev = (res.s, res.t)
        out.append(res)
    return out


def beta_threshold(
    ancilla,
    n: int,
    floor: float = 0.99,
    resolution: float = 0.05,
    search: SearchPolicy | None = None,
    beta_range: tuple[float, float] = (0.3, 8.0),
) -> ThresholdResult:
    """Largest cat size whose best achievable fidelity still reaches ``floor``.

    Bisection over ``beta`` assuming the maximized fidelity decreases with
    ``beta``; the bracket is checked at both ends and the returned value is
    re-evaluated together with ``beta + resolution``.
    """
    parity = _target_parity(ancilla, n)
    policy = search or SearchPolicy()
    evals = 0

    def best(beta):
        nonlocal evals
        res = maximize_fidelity(ancilla, n, CatTarget(beta, parity), policy)
        evals += res.evaluations
        return res.fidelity

    lo, hi = beta_range
    if best(lo) < floor:
        raise ThresholdBracketError(f"max fidelity below {floor} already at beta={lo} (n={n})")
    # walk upwards in unit steps to find an upper bracket
    probe = lo
    while True:
        nxt = min(probe + 1.0, hi)
        if best(nxt) < floor:
            lo, hi = probe, nxt
            break
        if nxt >= hi:
            raise ThresholdBracketError(f"max fidelity still >= {floor} at beta={hi} (n={n})")
        probe = nxt
    while hi - lo > resolution / 2:
        mid = 0.5 * (lo + hi)
        if best(mid) >= floor:
            lo = mid
        else:
            hi = mid
    f_at = best(lo)
    f_below = best(lo - resolution) if lo - resolution > 0 else f_at
    f_above = best(lo + resolution)
    if not (f_below >= floor and f_above < floor):
        log.warning("beta threshold n=%d: fidelity not monotone around %.4f", n, lo)
    log.debug("beta threshold n=%d: %.4f (F=%.5f, F(+res)=%.5f)", n, lo, f_at, f_above)
    return ThresholdResult(n, lo, f_at, f_below, f_above, resolution, evals)


def best_squeezing(
    ancilla,
    n: int,
    target: CatTarget,
    t: float,
    s_bounds: tuple[float, float] = (0.05, 2.5),
    grid: int = 200,
) -> OptimizationResult:
    """Fidelity-optimal squeezing at a fixed transmittance (ideal detector)."""
    land = Landscape(ancilla, n, target)
    s_axis = np.linspace(*s_bounds, grid)
    fid, _ = branch_fidelity_probability(land.ancilla, n, target, s_axis, t)
    land.evaluations += grid
    i = int(np.argmax(fid))
    lo = s_axis[max(i - 1, 0)]
    hi = s_axis[min(i + 1, grid - 1)]
    res = minimize_scalar(lambda x: -land(x, t)[0], bounds=(lo, hi), method="bounded", options={"xatol": 1e-10})
    s_best = float(res.x) if -res.fun >= fid[i] else float(s_axis[i])
    f, p = land(s_best, t)
    return OptimizationResult(
        s=s_best, t=float(t), fidelity=f, probability=p, regime=Regime.FID_OPTIMAL,
        evaluations=land.evaluations, n_max=land.n_max_at(s_best, t),
    )
