r"""Command-line front end.

Subcommands
-----------
``shape``      heralded state, probability and cat fidelity at one ``(s, t, n)``
``optimize``   ``(s, t)_Fid`` or ``(s, t)_Prob`` for one branch and cat size
``sweep``      optimization over a list of herald counts and cat sizes (CSV)
``figure``     datasets behind figures ``fig2`` .. ``fig6`` (CSV + JSON sidecar)
``selfcheck``  oracle equivalence, completeness and POVM consistency checks

Global flags (``--n-max --format --out --seed --threads --config``) may be
given before or after the subcommand. A ``--config`` file holds ``key = value``
lines whose keys are flag names without dashes (``n_max``, ``ancilla`` ...).
Precedence: built-in defaults < config file < command line.

CSV columns
-----------
sweep:  ancilla, n, beta, parity, regime, floor, eta, s, t, fidelity, probability, feasible, evaluations, n_max
fig2/fig4: same columns as sweep, both regimes per point
fig3:   s, t, fidelity, probability (grid); isolines go to ``fig3_isolines.csv``
        with polyline, index, s, t, fidelity
fig5:   config, ancilla, n, beta, parity, s, t, k, p_state, p_target, d_k, d_max
fig6:   n, beta, t, s, eta, fidelity, fidelity_ideal, probability

Exit codes: 0 ok, 1 selfcheck failure, 2 invalid input, 3 truncation,
4 infeasible fidelity floor, 5 unknown figure id.
"""

from __future__ import annotations

import argparse
import configparser
import csv
import hashlib
import io
import json
import logging
import math
import os
import sys
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path

import numpy as np

from . import __version__
from . import oracle
from .conditioning import (
    Ancilla,
    SchemeConfig,
    branch_probabilities,
    condition,
    distribution_discrepancy,
    herald_fidelity,
    output_parity,
)
from .detector import DetectorModel, imperfect_fidelity_closed, imperfect_fidelity_direct
from .fock import CatTarget, FockVector, Parity, TruncationError
from .optimizer import (
    SearchPolicy,
    best_squeezing,
    fidelity_isolines,
    maximize_fidelity,
    maximize_probability_with_floor,
)

__all__ = ["main", "build_parser", "SELFCHECK_SCHEMA", "FIGURES"]

log = logging.getLogger(__name__)

EXIT_OK, EXIT_SELFCHECK, EXIT_INVALID, EXIT_TRUNCATION, EXIT_INFEASIBLE, EXIT_UNKNOWN_ID = range(6)
FIGURES = ("fig2", "fig3", "fig4", "fig5", "fig6")

# configurations whose Fock distributions are compared with the target cat
FIG5_CONFIGS = (
    ("vacuum", 30, 3.1),
    ("vacuum", 31, 3.2),
    ("single_photon", 31, 4.2),
    ("single_photon", 30, 4.1),
)

SELFCHECK_SCHEMA = {
    "$schema": "https://json-schema.org/draft/2020-12/schema",
    "type": "object",
    "required": ["schema", "version", "passed", "first_failure", "checks"],
    "additionalProperties": False,
    "properties": {
        "schema": {"const": "heraldcat.selfcheck/1"},
        "version": {"type": "string"},
        "passed": {"type": "boolean"},
        "first_failure": {"type": ["string", "null"]},
        "checks": {
            "type": "array",
            "items": {
                "type": "object",
                "required": ["name", "passed", "error", "tolerance"],
                "additionalProperties": False,
                "properties": {
                    "name": {"type": "string"},
                    "passed": {"type": "boolean"},
                    "error": {"type": "number"},
                    "tolerance": {"type": "number"},
                },
            },
        },
    },
}


class UnknownFigureError(KeyError):
    pass


# --------------------------------------------------------------------------
# argument types; argparse turns ArgumentTypeError into exit code 2


def _ranged(name, lo, hi, lo_open=True, hi_open=True):
    def parse(text):
        try:
            x = float(text)
        except ValueError:
            raise argparse.ArgumentTypeError(f"{name} must be a number, got {text!r}") from None
        ok_lo = x > lo if lo_open else x >= lo
        ok_hi = x < hi if hi_open else x <= hi
        if not (math.isfinite(x) and ok_lo and ok_hi):
            lb = "(" if lo_open else "["
            rb = ")" if hi_open else "]"
            raise argparse.ArgumentTypeError(f"{name}={x} outside {lb}{lo}, {hi}{rb}")
        return x

    parse.__name__ = name
    return parse


_t_type = _ranged("t", 0.0, 1.0)
_eta_type = _ranged("eta", 0.0, 1.0, hi_open=False)
_s_type = _ranged("s", 0.0, math.inf, lo_open=False)
_beta_type = _ranged("beta", 0.0, math.inf)
_floor_type = _ranged("floor", 0.0, 1.0, hi_open=False)


def _nonneg_int(text):
    try:
        v = int(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected an integer, got {text!r}") from None
    if v < 0:
        raise argparse.ArgumentTypeError(f"expected an integer >= 0, got {v}")
    return v


def _ancilla_type(text):
    try:
        return Ancilla.parse(text)
    except ValueError as exc:
        raise argparse.ArgumentTypeError(str(exc)) from None


def _list_of(kind):
    def parse(text):
        return [kind(x) for x in str(text).split(",") if x.strip()]

    return parse


# --------------------------------------------------------------------------
# output helpers


def _num(x) -> str:
    if isinstance(x, (bool, np.bool_)):
        return "true" if x else "false"
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    if isinstance(x, (float, np.floating)):
        return format(float(x), ".17g")
    return str(x)


def _csv_bytes(header, rows) -> bytes:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for row in rows:
        w.writerow([_num(v) for v in row])
    return buf.getvalue().encode("utf-8")


def _json_bytes(obj) -> bytes:
    return (json.dumps(obj, indent=2, ensure_ascii=False, allow_nan=True) + "\n").encode("utf-8")


def _hash(payload) -> str:
    if not isinstance(payload, bytes):
        payload = json.dumps(payload, sort_keys=True, separators=(",", ":")).encode("utf-8")
    return hashlib.sha256(payload).hexdigest()


def _provenance(args, n_max, evaluations, x_max=None, payload=None) -> dict:
    prov = {
        "engine": "heraldcat",
        "version": __version__,
        "n_max": int(n_max),
        "x_max": None if x_max is None else int(x_max),
        "evaluations": int(evaluations),
        "seed": int(args.seed),
    }
    prov["hash"] = _hash({"provenance": prov, "payload": payload})
    return prov


def _emit(args, data: bytes, suffix: str = "") -> None:
    if args.out in (None, "-"):
        sys.stdout.buffer.write(data)
        sys.stdout.buffer.flush()
        return
    path = Path(args.out)
    if suffix:
        path = path.with_name(path.stem + suffix)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_bytes(data)


def _emit_record(args, record: dict) -> None:
    if args.format == "csv":
        flat = {k: v for k, v in record.items() if not isinstance(v, (dict, list))}
        for k, v in record["provenance"].items():
            flat[f"provenance_{k}"] = "" if v is None else v
        _emit(args, _csv_bytes(list(flat), [list(flat.values())]))
    else:
        _emit(args, _json_bytes(record))


def _policy(args) -> SearchPolicy:
    return SearchPolicy(
        grid_s=args.grid_s,
        grid_t=args.grid_t,
        refine_evals=args.budget,
        random_starts=args.random_starts,
        seed=args.seed,
    )


def _target_for(ancilla, n, beta, parity=None) -> CatTarget:
    branch = output_parity(ancilla, n)
    if parity is not None and Parity(parity) is not branch:
        raise ValueError(f"{ancilla.value} ancilla with n={n} heralds a {branch.value} state, not {parity}")
    return CatTarget(beta, branch)


def _detector(args):
    eta = getattr(args, "eta", 1.0)
    return None if eta is None or eta == 1.0 else DetectorModel(eta)


# --------------------------------------------------------------------------
# commands


def cmd_shape(args) -> int:
    cfg = SchemeConfig(args.s, args.t, args.ancilla)
    res = condition(cfg, args.n, args.n_max)
    record = {
        "command": "shape",
        "s": args.s,
        "t": args.t,
        "ancilla": cfg.ancilla.value,
        "n": args.n,
        "parity": res.parity.value if res.possible else None,
        "probability": res.probability,
        "norm_constant": res.norm_constant if res.possible else None,
    }
    x_max = None
    if args.beta is not None:
        target = _target_for(cfg.ancilla, args.n, args.beta, args.parity)
        record["beta"] = args.beta
        record["fidelity"] = herald_fidelity(res, target).fidelity
        det = _detector(args)
        if det is not None:
            f, p = imperfect_fidelity_direct(cfg, args.n, det, target)
            x_max = det.loss_cutoff(cfg.t)
            record["eta"] = det.eta
            record["fidelity_eta"] = f
            record["probability_eta"] = p
    if args.state:
        record["state"] = [float(a) for a in res.state.amplitudes] if res.possible else None
    record["provenance"] = _provenance(args, args.n_max, 1, x_max, record)
    _emit_record(args, record)
    return EXIT_OK


def _optimize_row(ancilla, n, beta, regime, floor, eta, policy):
    target = _target_for(ancilla, n, beta)
    det = None if eta == 1.0 else DetectorModel(eta)
    if regime == "fid":
        res = maximize_fidelity(ancilla, n, target, policy, det)
    else:
        res = maximize_probability_with_floor(ancilla, n, target, floor, policy, det)
    return res, [
        ancilla.value, n, beta, target.parity.value, res.regime.value, floor, eta,
        res.s, res.t, res.fidelity, res.probability, res.feasible, res.evaluations, res.n_max,
    ]


_SWEEP_HEADER = [
    "ancilla", "n", "beta", "parity", "regime", "floor", "eta",
    "s", "t", "fidelity", "probability", "feasible", "evaluations", "n_max",
]


def cmd_optimize(args) -> int:
    policy = _policy(args)
    res, _ = _optimize_row(args.ancilla, args.n, args.beta, args.regime, args.floor, args.eta, policy)
    record = {
        "command": "optimize",
        "ancilla": args.ancilla.value,
        "n": args.n,
        "beta": args.beta,
        "parity": output_parity(args.ancilla, args.n).value,
        "regime": res.regime.value,
        "floor": args.floor,
        "eta": args.eta,
        "s": res.s,
        "t": res.t,
        "fidelity": res.fidelity,
        "probability": res.probability,
        "feasible": res.feasible,
        "local_optima": [
            {"s": s, "t": t, "fidelity": f, "probability": p} for s, t, f, p in res.local_optima
        ],
    }
    record["provenance"] = _provenance(args, res.n_max, res.evaluations, None, record)
    _emit_record(args, record)
    return EXIT_OK if res.feasible else EXIT_INFEASIBLE


def _run_rows(args, jobs):
    """Evaluate ``(ancilla, n, beta, regime)`` jobs on a pool; output order follows ``jobs``."""
    policy = _policy(args)
    eta = getattr(args, "eta", 1.0)
    floor = getattr(args, "floor", 0.99)

    def one(job):
        return _optimize_row(*job[:4], floor, eta, policy)[1]

    jobs = sorted(jobs, key=lambda j: (j[0].value, j[1], j[2], j[3]))
    with ThreadPoolExecutor(max_workers=max(1, args.threads)) as pool:
        return list(pool.map(one, jobs))


def _sidecar(args, name, csv_data: bytes, rows: int, n_max: int, evaluations: int, extra=None, x_max=None):
    meta = {"figure" if name.startswith("fig") else "command": name, "rows": rows, "csv_sha256": _hash(csv_data)}
    if extra:
        meta.update(extra)
    meta["provenance"] = _provenance(args, n_max, evaluations, x_max, meta)
    return _json_bytes(meta)


def cmd_sweep(args) -> int:
    jobs = [(args.ancilla, n, b, r) for n in args.n_list for b in args.betas for r in args.regimes]
    rows = _run_rows(args, jobs)
    data = _csv_bytes(_SWEEP_HEADER, rows)
    if args.format == "json":
        records = [dict(zip(_SWEEP_HEADER, r)) for r in rows]
        payload = {"command": "sweep", "rows": records}
        payload["provenance"] = _provenance(
            args, max(r[-1] for r in rows), sum(r[-2] for r in rows), None, payload
        )
        _emit(args, _json_bytes(payload))
    else:
        _emit(args, data)
    return EXIT_OK


def _figure_curves(args, ancilla, n_default):
    ns = args.n_list or n_default
    betas = args.betas or [round(1.0 + 0.25 * i, 10) for i in range(13)]
    jobs = [(ancilla, n, b, r) for n in ns for b in betas for r in ("fid", "prob")
            if not (ancilla is Ancilla.SINGLE_PHOTON and n == 0)]
    rows = _run_rows(args, jobs)
    return _SWEEP_HEADER, rows, max(r[-1] for r in rows), sum(r[-2] for r in rows), {}


def _figure3(args):
    ancilla = args.ancilla or Ancilla.VACUUM
    n = args.n if args.n is not None else 10
    beta = args.beta if args.beta is not None else 2.0
    target = _target_for(ancilla, n, beta)
    policy = _policy(args)
    from .optimizer import Landscape

    land = Landscape(ancilla, n, target)
    fid, prob = land.grid(policy)
    s_axis, t_axis = policy.grid()
    rows = [
        [s_axis[i], t_axis[j], fid[i, j], prob[i, j]]
        for i in range(s_axis.size)
        for j in range(t_axis.size)
    ]
    iso = fidelity_isolines(ancilla, n, target, args.level, policy)
    iso_rows = [
        [k, i, p[0], p[1], land(p[0], p[1])[0]]
        for k, line in enumerate(iso.polylines)
        for i, p in enumerate(line)
    ]
    extra = {
        "ancilla": ancilla.value, "n": n, "beta": beta, "level": args.level,
        "isolines": len(iso.polylines),
        "isoline_csv_sha256": _hash(_csv_bytes(["polyline", "index", "s", "t", "fidelity"], iso_rows)),
    }
    n_max = land.n_max_at(s_axis[-1], t_axis[-1])
    return ["s", "t", "fidelity", "probability"], rows, n_max, land.evaluations, extra, iso_rows


def _figure5(args):
    policy = _policy(args)
    rows = []
    evals = 0
    n_max = 0
    summary = []
    for idx, (anc, n, beta) in enumerate(FIG5_CONFIGS):
        ancilla = Ancilla.parse(anc)
        target = _target_for(ancilla, n, beta)
        opt = maximize_fidelity(ancilla, n, target, policy)
        evals += opt.evaluations
        n_max = max(n_max, opt.n_max)
        res = condition(SchemeConfig(opt.s, opt.t, ancilla), n, opt.n_max)
        d_max, k_max = distribution_discrepancy(res, target)
        from .fock import cat_state

        cat = cat_state(target, opt.n_max).probabilities
        p = res.state.probabilities
        keep = np.flatnonzero((p > 1e-17) | (cat > 1e-17))
        for k in keep:
            rows.append([idx, ancilla.value, n, beta, target.parity.value, opt.s, opt.t,
                         int(k), p[k], cat[k], abs(p[k] - cat[k]), d_max])
        summary.append({"config": idx, "ancilla": ancilla.value, "n": n, "beta": beta,
                        "fidelity": opt.fidelity, "d_max": d_max, "k_max": k_max})
    header = ["config", "ancilla", "n", "beta", "parity", "s", "t", "k", "p_state", "p_target", "d_k", "d_max"]
    return header, rows, n_max, evals, {"configs": summary}


def _figure6(args):
    ancilla = args.ancilla or Ancilla.VACUUM
    n = args.n if args.n is not None else 10
    t = args.t if args.t is not None else 0.99
    betas = args.betas or [round(0.5 + 0.1 * i, 10) for i in range(26)]
    etas = args.etas or [0.9, 0.95, 0.98, 1.0]
    rows = []
    evals = 0
    n_max = 0
    x_max = 0
    for beta in betas:
        target = _target_for(ancilla, n, beta)
        opt = best_squeezing(ancilla, n, target, t)
        evals += opt.evaluations
        n_max = max(n_max, opt.n_max)
        cfg = SchemeConfig(opt.s, t, ancilla)
        for eta in etas:
            det = DetectorModel(eta)
            if ancilla is Ancilla.VACUUM and n % 2 == 0:
                f = imperfect_fidelity_closed(cfg, n // 2, det, target)
                _, p = imperfect_fidelity_direct(cfg, n, det, target)
            else:
                f, p = imperfect_fidelity_direct(cfg, n, det, target)
            x_max = max(x_max, det.loss_cutoff(t))
            rows.append([n, beta, t, opt.s, eta, f, opt.fidelity, p])
    header = ["n", "beta", "t", "s", "eta", "fidelity", "fidelity_ideal", "probability"]
    return header, rows, n_max, evals, {"ancilla": ancilla.value, "x_max": x_max}


def cmd_figure(args) -> int:
    fig = args.figure_id
    if fig not in FIGURES:
        raise UnknownFigureError(fig)
    iso_rows = None
    if fig == "fig2":
        header, rows, n_max, evals, extra = _figure_curves(args, Ancilla.VACUUM, [10, 20, 30])
    elif fig == "fig4":
        header, rows, n_max, evals, extra = _figure_curves(args, Ancilla.SINGLE_PHOTON, [10, 21, 31])
    elif fig == "fig3":
        header, rows, n_max, evals, extra, iso_rows = _figure3(args)
    elif fig == "fig5":
        header, rows, n_max, evals, extra = _figure5(args)
    else:
        header, rows, n_max, evals, extra = _figure6(args)
    data = _csv_bytes(header, rows)
    out_dir = Path(args.out) if args.out not in (None, "-") else Path(".")
    out_dir.mkdir(parents=True, exist_ok=True)
    (out_dir / f"{fig}.csv").write_bytes(data)
    if iso_rows is not None:
        (out_dir / f"{fig}_isolines.csv").write_bytes(
            _csv_bytes(["polyline", "index", "s", "t", "fidelity"], iso_rows)
        )
    x_max = extra.pop("x_max", None)
    (out_dir / f"{fig}.json").write_bytes(_sidecar(args, fig, data, len(rows), n_max, evals, extra, x_max))
    return EXIT_OK


# --------------------------------------------------------------------------
# selfcheck


def _check_bs_convention(n_max):
    # |1,0> -> t|1,0> - r|0,1>: the reflected photon carries a minus sign
    t = 0.6
    r = 0.8
    one = np.zeros(3)
    one[1] = 1.0
    zero = np.zeros(3)
    zero[0] = 1.0
    out = oracle.apply_beam_splitter(oracle.product_state(one, zero, 2), t).amplitudes
    return max(abs(out[1, 0] - t), abs(out[0, 1] + r)), 1e-14


def _check_oracle(n_max):
    worst = 0.0
    for s in (0.4, 0.9):
        for t in (0.6, 0.85):
            for anc in Ancilla:
                cfg = SchemeConfig(s, t, anc)
                for n in range(5):
                    a = condition(cfg, n, n_max, tail_tol=1e-6)
                    b = oracle.oracle_condition(cfg, n, n_max)
                    worst = max(worst, abs(a.probability - b.probability) * 100.0)
                    if a.possible:
                        worst = max(worst, float(np.max(np.abs(a.state.amplitudes - b.state.amplitudes))))
    return worst, 1e-10


def _check_completeness(n_max):
    worst = 0.0
    for anc in Ancilla:
        total = math.fsum(branch_probabilities(anc, range(61), 1.0, 0.8))
        worst = max(worst, 1.0 - total)
    return worst, 1e-8


def _check_povm(n_max):
    worst = 0.0
    target = CatTarget(2.0)
    for s in (0.5, 1.0):
        for t in (0.6, 0.9):
            for eta in (0.9, 0.98):
                cfg = SchemeConfig(s, t, Ancilla.VACUUM)
                det = DetectorModel(eta)
                f1 = imperfect_fidelity_closed(cfg, 5, det, target)
                f2, _ = imperfect_fidelity_direct(cfg, 10, det, target)
                worst = max(worst, abs(f1 - f2))
    return worst, 1e-9


SELFCHECKS = (
    ("bs_convention", _check_bs_convention),
    ("oracle_equivalence", _check_oracle),
    ("completeness", _check_completeness),
    ("povm_consistency", _check_povm),
)


def run_selfcheck(n_max: int = 40) -> dict:
    checks = []
    first = None
    for name, fn in SELFCHECKS:
        try:
            err, tol = fn(n_max)
            ok = bool(err <= tol)
        except Exception as exc:  # a crashing check is a failing check
            log.error("selfcheck %s raised %r", name, exc)
            err, tol, ok = math.inf, 0.0, False
        checks.append({"name": name, "passed": ok, "error": float(err) if math.isfinite(err) else 1e308,
                       "tolerance": tol})
        if not ok and first is None:
            first = name
    return {
        "schema": "heraldcat.selfcheck/1",
        "version": __version__,
        "passed": first is None,
        "first_failure": first,
        "checks": checks,
    }


def cmd_selfcheck(args) -> int:
    report = run_selfcheck(min(args.n_max, 40))
    _emit(args, _json_bytes(report))
    if report["first_failure"]:
        print(f"selfcheck failed: {report['first_failure']}", file=sys.stderr)
        return EXIT_SELFCHECK
    return EXIT_OK


# --------------------------------------------------------------------------
# parser


def _global_flags(parser, suppress: bool):
    d = argparse.SUPPRESS if suppress else None
    g = parser.add_argument_group("global options")
    g.add_argument("--n-max", type=_nonneg_int, default=d if suppress else 256,
                   help="Fock cutoff for returned states (default 256)")
    g.add_argument("--format", choices=("json", "csv"), default=d if suppress else "json",
                   help="record format for shape/optimize/sweep (figure data is always CSV + JSON)")
    g.add_argument("--out", default=d, help="output file (shape/optimize/sweep/selfcheck) or directory (figure)")
    g.add_argument("--seed", type=_nonneg_int, default=d if suppress else 0, help="search seed")
    g.add_argument("--threads", type=_nonneg_int, default=d if suppress else (os.cpu_count() or 1),
                   help="worker threads for sweeps")
    g.add_argument("--config", default=d, help="key = value file mirroring the flags")


def _search_flags(p):
    p.add_argument("--grid-s", type=_nonneg_int, default=60, help="grid points in s")
    p.add_argument("--grid-t", type=_nonneg_int, default=60, help="grid points in t")
    p.add_argument("--budget", type=_nonneg_int, default=200, help="simplex evaluations per start")
    p.add_argument("--random-starts", type=_nonneg_int, default=0, help="extra seeded starts")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="heraldcat",
        description="Heralded cat-state shaping from squeezed vacuum.",
        formatter_class=argparse.RawDescriptionHelpFormatter,
        epilog=__doc__,
    )
    _global_flags(parser, suppress=False)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("shape", help="heralded state at one operating point")
    _global_flags(p, suppress=True)
    p.add_argument("--s", type=_s_type, required=True)
    p.add_argument("--t", type=_t_type, required=True)
    p.add_argument("--ancilla", type=_ancilla_type, default=Ancilla.VACUUM)
    p.add_argument("--n", type=_nonneg_int, required=True)
    p.add_argument("--beta", type=_beta_type)
    p.add_argument("--parity", choices=("even", "odd"))
    p.add_argument("--eta", type=_eta_type, default=1.0)
    p.add_argument("--state", action="store_true", help="include the amplitude vector")
    p.set_defaults(func=cmd_shape)

    p = sub.add_parser("optimize", help="(s, t)_Fid or (s, t)_Prob")
    _global_flags(p, suppress=True)
    p.add_argument("--ancilla", type=_ancilla_type, default=Ancilla.VACUUM)
    p.add_argument("--n", type=_nonneg_int, required=True)
    p.add_argument("--beta", type=_beta_type, required=True)
    p.add_argument("--regime", choices=("fid", "prob"), default="fid")
    p.add_argument("--floor", type=_floor_type, default=0.99)
    p.add_argument("--eta", type=_eta_type, default=1.0)
    _search_flags(p)
    p.set_defaults(func=cmd_optimize)

    p = sub.add_parser("sweep", help="optimize over herald counts and cat sizes")
    _global_flags(p, suppress=True)
    p.add_argument("--ancilla", type=_ancilla_type, default=Ancilla.VACUUM)
    p.add_argument("--n-list", type=_list_of(int), required=True)
    p.add_argument("--betas", type=_list_of(_beta_type), required=True)
    p.add_argument("--regimes", type=_list_of(str), default=["fid"])
    p.add_argument("--floor", type=_floor_type, default=0.99)
    p.add_argument("--eta", type=_eta_type, default=1.0)
    _search_flags(p)
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("figure", help="dataset behind one figure")
    _global_flags(p, suppress=True)
    p.add_argument("figure_id", help="one of " + ", ".join(FIGURES))
    p.add_argument("--ancilla", type=_ancilla_type)
    p.add_argument("--n", type=_nonneg_int)
    p.add_argument("--n-list", type=_list_of(int))
    p.add_argument("--beta", type=_beta_type)
    p.add_argument("--betas", type=_list_of(_beta_type))
    p.add_argument("--etas", type=_list_of(_eta_type))
    p.add_argument("--t", type=_t_type)
    p.add_argument("--level", type=_ranged("level", 0.0, 1.0), default=0.99)
    p.add_argument("--floor", type=_floor_type, default=0.99)
    _search_flags(p)
    p.set_defaults(func=cmd_figure)

    p = sub.add_parser("selfcheck", help="run the internal consistency checks")
    _global_flags(p, suppress=True)
    p.set_defaults(func=cmd_selfcheck)
    return parser


def _read_config(path) -> dict:
    cp = configparser.ConfigParser(interpolation=None)
    text = Path(path).read_text(encoding="utf-8")
    if not text.lstrip().startswith("["):
        text = "[heraldcat]\n" + text
    cp.read_string(text)
    out = {}
    for section in cp.sections():
        for key, value in cp.items(section):
            out[key.replace("-", "_")] = value
    return out


def _apply_config(parser, argv) -> None:
    pre = argparse.ArgumentParser(add_help=False)
    pre.add_argument("--config")
    known, _ = pre.parse_known_args(argv)
    if not known.config:
        return
    try:
        values = _read_config(known.config)
    except (OSError, configparser.Error) as exc:
        parser.error(f"cannot read config {known.config}: {exc}")
    sub_action = next(a for a in parser._actions if isinstance(a, argparse._SubParsersAction))
    global_keys = {a.dest for a in parser._actions}
    # string defaults are run through the flag's type, so validation still applies;
    # global keys live on the top parser only so a flag before the subcommand still wins
    parser.set_defaults(**{k: v for k, v in values.items() if k in global_keys})
    for sp in sub_action.choices.values():
        dests = {a.dest for a in sp._actions} - global_keys
        sp.set_defaults(**{k: v for k, v in values.items() if k in dests})
        for action in sp._actions:
            if action.dest in values and action.dest in dests:
                action.required = False  # supplied by the file
    known_keys = {a.dest for sp in [parser, *sub_action.choices.values()] for a in sp._actions}
    unknown = sorted(set(values) - known_keys)
    if unknown:
        parser.error(f"unknown config keys: {', '.join(unknown)}")


def main(argv=None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    logging.basicConfig(level=logging.WARNING, format="%(levelname)s %(name)s: %(message)s")
    parser = build_parser()
    try:
        _apply_config(parser, argv)
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        return args.func(args)
    except TruncationError as exc:
        print(f"truncation: {exc}", file=sys.stderr)
        return EXIT_TRUNCATION
    except UnknownFigureError as exc:
        print(f"unknown figure id {exc.args[0]!r}; choose from {', '.join(FIGURES)}", file=sys.stderr)
        return EXIT_UNKNOWN_ID
    except ValueError as exc:
        print(f"invalid input: {exc}", file=sys.stderr)
        return EXIT_INVALID


if __name__ == "__main__":
    sys.exit(main())
