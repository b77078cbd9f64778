"""Command-line surface: compute metrics, run verification sweeps, export CSVs.

Three subcommands:

* ``compute``   -- evaluate tv / atv / kl on a pair of process-spec files
* ``verify``    -- run the property sweep on a generated ensemble
* ``tightness`` -- evaluate the Bernoulli tightness grid and emit CSV

All behavior is controlled by flags (no environment variables), outputs
are byte-identical across runs for identical flags, results go to stdout
and diagnostics to stderr.  Every error path exits nonzero after printing
a machine-parsable first line ``error: <code>: <message>``.

Exit codes: 0 success, 1 verification failure, 2 parse/validation or
usage error, 3 size cap exceeded, 4 solver failure.
"""

from __future__ import annotations

import argparse
import csv
import hashlib
import io
import json
import math
import sys
from dataclasses import dataclass

import numpy as np

from .atv import atv_dp, atv_recursive, coupling_cost, optimal_bicausal_coupling
from .bicausal_lp import DEFAULT_VAR_CAP, atv_lp, is_bicausal
from .ensembles import EnsembleSpec, generate_ensemble
from .errors import AtvLabError, BadSpec, CapExceeded, SolverFailure
from .inequalities import (
    DEFAULT_N_LIST,
    check_adapted_pinsker,
    check_classical_pinsker,
    check_sandwich,
    geometric_grid,
    tightness_experiment,
)
from .measures import Alphabet, ProcessLaw, from_joint, kl, kl_chain, path_tv

# defaults of the verification sweep
DEFAULT_VERIFY_SEED = 42
DEFAULT_VERIFY_COUNT = 1000
DEFAULT_VERIFY_HORIZONS = (1, 2, 3, 4)
DEFAULT_VERIFY_ALPHABET = 2
DEFAULT_VERIFY_FAMILY = "uniform-random"
#: LP cross-check runs only when the instance has at most this many variables.
LP_VAR_GATE = 128

# fixed cross-method tolerances
DP_AGREEMENT_TOL = 1e-9
LP_AGREEMENT_TOL = 1e-7
CHAIN_RULE_TOL = 1e-10
ATTAINMENT_TOL = 1e-9
BICAUSAL_CHECK_TOL = 1e-9

REPRODUCER_PATH = "verify_reproducer.json"

_SPEC_KEYS = {"n", "alphabets", "format", "probs"}
_SPARSE_KEYS = {"path", "p"}


# ---------------------------------------------------------------------------
# process-spec files
# ---------------------------------------------------------------------------

def _parse_alphabets(raw, path: str) -> list[Alphabet]:
    if not isinstance(raw, list) or not raw:
        raise BadSpec(f"{path}: 'alphabets' must be a nonempty list")
    out = []
    for entry in raw:
        if isinstance(entry, int):
            out.append(Alphabet(entry))
        elif isinstance(entry, list) and all(isinstance(x, str) for x in entry):
            out.append(Alphabet(len(entry), tuple(entry)))
        else:
            raise BadSpec(
                f"{path}: each alphabet must be an int size or a list of labels"
            )
    return out


def load_process_spec(path: str) -> ProcessLaw:
    """Parse and validate one process-spec JSON file."""
    with open(path, "r", encoding="utf-8") as fh:
        doc = json.load(fh)
    if not isinstance(doc, dict):
        raise BadSpec(f"{path}: top level must be a JSON object")
    unknown = set(doc) - _SPEC_KEYS
    if unknown:
        raise BadSpec(f"{path}: unknown keys {sorted(unknown)}")
    missing = _SPEC_KEYS - set(doc)
    if missing:
        raise BadSpec(f"{path}: missing keys {sorted(missing)}")
    alphabets = _parse_alphabets(doc["alphabets"], path)
    n = doc["n"]
    if not isinstance(n, int) or n != len(alphabets):
        raise BadSpec(f"{path}: 'n' must equal the number of alphabets")
    sizes = tuple(a.size for a in alphabets)
    fmt = doc["format"]
    if fmt == "dense":
        probs = doc["probs"]
        expected = int(np.prod(sizes))
        if not isinstance(probs, list) or len(probs) != expected:
            raise BadSpec(
                f"{path}: dense 'probs' must be a flat list of length {expected}"
            )
        table = np.asarray(probs, dtype=float).reshape(sizes)
    elif fmt == "sparse":
        entries = doc["probs"]
        if not isinstance(entries, list):
            raise BadSpec(f"{path}: sparse 'probs' must be a list of entries")
        table: dict[tuple[int, ...], float] = {}
        for entry in entries:
            if not isinstance(entry, dict) or set(entry) != _SPARSE_KEYS:
                raise BadSpec(
                    f"{path}: sparse entries must be objects with keys "
                    f"{sorted(_SPARSE_KEYS)}"
                )
            key = tuple(int(s) for s in entry["path"])
            if key in table:
                raise BadSpec(f"{path}: duplicate sparse path {list(key)}")
            table[key] = float(entry["p"])
    else:
        raise BadSpec(f"{path}: 'format' must be 'dense' or 'sparse'")
    try:
        return from_joint(table, alphabets)
    except AtvLabError as exc:
        raise type(exc)(f"{path}: {exc}") from exc


def law_to_spec(law: ProcessLaw) -> dict:
    """Serialize a law as a dense process-spec document."""
    alphabets = [
        list(a.labels) if a.labels is not None else a.size for a in law.alphabets
    ]
    return {
        "n": law.n,
        "alphabets": alphabets,
        "format": "dense",
        "probs": [float(p) for p in law.joint_table().ravel()],
    }


def _sha256(path: str) -> str:
    with open(path, "rb") as fh:
        return hashlib.sha256(fh.read()).hexdigest()


# ---------------------------------------------------------------------------
# compute
# ---------------------------------------------------------------------------

def _compute_value(args, mu: ProcessLaw, nu: ProcessLaw):
    if args.metric == "tv":
        return path_tv(mu, nu), None, {"input_normalization": 1e-9}
    if args.metric == "kl":
        return kl(mu, nu), None, {"input_normalization": 1e-9}
    if args.method == "recursive":
        breakdown = atv_recursive(mu, nu)
        stages = list(breakdown.per_stage) if args.breakdown else None
        return breakdown.total, stages, {
            "input_normalization": 1e-9,
            "stage_sum": 1e-12,
        }
    if args.method == "dp":
        return atv_dp(mu, nu), None, {
            "input_normalization": 1e-9,
            "vertex_feasibility": 1e-12,
        }
    return atv_lp(mu, nu, cap=args.cap), None, {
        "input_normalization": 1e-9,
        "lp_feasibility": 1e-9,
        "lp_reduced_cost": 1e-9,
    }


def cmd_compute(args) -> int:
    mu = load_process_spec(args.mu)
    nu = load_process_spec(args.nu)
    value, breakdown, tolerances = _compute_value(args, mu, nu)
    record = {
        "metric": args.metric,
        "method": args.method if args.metric == "atv" else None,
        "value": "inf" if math.isinf(value) else value,
        "tolerances": tolerances,
        "inputs": {
            "mu": {"path": args.mu, "sha256": _sha256(args.mu)},
            "nu": {"path": args.nu, "sha256": _sha256(args.nu)},
        },
    }
    if breakdown is not None:
        record["breakdown"] = breakdown
    text = json.dumps(record, sort_keys=True, indent=2) + "\n"
    if args.out:
        with open(args.out, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)
    return 0


# ---------------------------------------------------------------------------
# verify
# ---------------------------------------------------------------------------

@dataclass
class CheckStats:
    """Aggregate outcome of one named check over a sweep."""

    label: str  # 'slack' (min is worst) or 'residual' (max is worst)
    total: int = 0
    passed: int = 0
    worst: float = math.inf

    def record(self, ok: bool, measure: float) -> None:
        self.total += 1
        self.passed += ok
        if self.label == "slack":
            self.worst = min(self.worst, measure)
        else:
            self.worst = measure if self.worst is math.inf else max(self.worst, measure)


@dataclass
class Failure:
    check: str
    instance: int
    n: int
    mu: ProcessLaw
    nu: ProcessLaw


@dataclass
class VerifySummary:
    stats: dict[str, CheckStats]
    failures: list[Failure]
    instances: int

    @property
    def ok(self) -> bool:
        return not self.failures


def _evaluate_instance(mu, nu, tol: float, lp_gate: int):
    """All per-instance checks as ``(name, kind, ok, measure)`` tuples."""
    results = []
    cp = check_classical_pinsker(mu, nu, tol=tol)
    results.append(("classical_pinsker", "slack", cp.passed, cp.slack))
    ap = check_adapted_pinsker(mu, nu, tol=tol)
    results.append(("adapted_pinsker", "slack", ap.passed, ap.slack))
    sw = check_sandwich(mu, nu, tol=tol)
    results.append(
        ("sandwich", "slack", sw.passed, min(sw.lower_slack, sw.upper_slack))
    )

    h, h_chain = kl(mu, nu), kl_chain(mu, nu)
    if math.isinf(h) or math.isinf(h_chain):
        chain_ok, chain_resid = math.isinf(h) and math.isinf(h_chain), 0.0
    else:
        chain_resid = abs(h - h_chain)
        chain_ok = chain_resid <= CHAIN_RULE_TOL
    results.append(("chain_rule", "residual", chain_ok, chain_resid))

    rec = atv_recursive(mu, nu).total
    dp_resid = abs(rec - atv_dp(mu, nu))
    results.append(("oracle_dp", "residual", dp_resid <= DP_AGREEMENT_TOL, dp_resid))

    npaths = int(np.prod(mu.sizes))
    if npaths * npaths <= lp_gate:
        lp_resid = abs(rec - atv_lp(mu, nu))
        results.append(
            ("oracle_lp", "residual", lp_resid <= LP_AGREEMENT_TOL, lp_resid)
        )

    pi = optimal_bicausal_coupling(mu, nu)
    att_resid = abs(coupling_cost(pi) - rec)
    results.append(
        ("attainment", "residual", att_resid <= ATTAINMENT_TOL, att_resid)
    )
    report = is_bicausal(pi, tol=BICAUSAL_CHECK_TOL)
    results.append(("bicausal", "residual", report.ok, report.max_violation))
    return results


def run_verify(
    *,
    seed: int = DEFAULT_VERIFY_SEED,
    count: int = DEFAULT_VERIFY_COUNT,
    horizons=DEFAULT_VERIFY_HORIZONS,
    alphabet: int = DEFAULT_VERIFY_ALPHABET,
    family: str = DEFAULT_VERIFY_FAMILY,
    tol: float = 1e-9,
    lp_gate: int = LP_VAR_GATE,
) -> VerifySummary:
    """Run all property checks on a generated ensemble of law pairs.

    ``count`` is split as evenly as possible across the horizons; each
    horizon group draws from its own seeded generator, so the sweep is
    deterministic and insensitive to evaluation order.
    """
    horizons = tuple(horizons)
    if not horizons:
        raise BadSpec("at least one horizon is required")
    base, extra = divmod(count, len(horizons))
    stats: dict[str, CheckStats] = {}
    failures: list[Failure] = []
    instance = 0
    for idx, n in enumerate(horizons):
        group = base + (1 if idx < extra else 0)
        if group == 0:
            continue
        spec = EnsembleSpec(
            n=n, sizes=alphabet, family=family, count=group, seed=seed + idx
        )
        for mu, nu in generate_ensemble(spec):
            for name, kind, ok, measure in _evaluate_instance(mu, nu, tol, lp_gate):
                if name not in stats:
                    stats[name] = CheckStats(label=kind)
                stats[name].record(ok, measure)
                if not ok:
                    failures.append(Failure(name, instance, n, mu, nu))
            instance += 1
    return VerifySummary(stats=stats, failures=failures, instances=instance)


def _parse_int_list(text: str, flag: str) -> tuple[int, ...]:
    try:
        values = tuple(int(part) for part in text.split(","))
    except ValueError as exc:
        raise BadSpec(f"{flag} expects comma-separated integers, got {text!r}") from exc
    if not values:
        raise BadSpec(f"{flag} must not be empty")
    return values


def cmd_verify(args) -> int:
    if args.count < 1:
        raise BadSpec(f"--count must be >= 1, got {args.count}")
    horizons = _parse_int_list(args.n, "--n")
    summary = run_verify(
        seed=args.seed,
        count=args.count,
        horizons=horizons,
        alphabet=args.alphabet,
        family=args.family,
        tol=args.tol,
    )
    for name in sorted(summary.stats):
        s = summary.stats[name]
        kind = "worst slack" if s.label == "slack" else "worst residual"
        sys.stdout.write(f"{name}: {s.passed}/{s.total} pass, {kind} {s.worst!r}\n")
    if summary.ok:
        sys.stdout.write(
            f"all checks passed ({len(summary.stats)} checks, "
            f"{summary.instances} instances)\n"
        )
        return 0
    first = summary.failures[0]
    reproducer = {
        "check": first.check,
        "instance_index": first.instance,
        "n": first.n,
        "seed": args.seed,
        "count": args.count,
        "alphabet": args.alphabet,
        "family": args.family,
        "mu": law_to_spec(first.mu),
        "nu": law_to_spec(first.nu),
    }
    with open(REPRODUCER_PATH, "w", encoding="utf-8", newline="\n") as fh:
        json.dump(reproducer, fh, sort_keys=True, indent=2)
        fh.write("\n")
    sys.stderr.write(
        f"error: VerifyFailed: {first.check} failed on instance "
        f"{first.instance} (n={first.n}); reproducer written to "
        f"{REPRODUCER_PATH}\n"
    )
    return 1


# ---------------------------------------------------------------------------
# tightness
# ---------------------------------------------------------------------------

def _parse_eps_grid(text: str) -> list[float]:
    if text.startswith("geometric:"):
        parts = text.split(":")
        if len(parts) != 4:
            raise BadSpec(
                f"geometric grid must look like geometric:HI:LO:COUNT, got {text!r}"
            )
        try:
            hi, lo, count = float(parts[1]), float(parts[2]), int(parts[3])
        except ValueError as exc:
            raise BadSpec(f"bad geometric grid {text!r}") from exc
        return geometric_grid(hi, lo, count)
    try:
        return [float(part) for part in text.split(",")]
    except ValueError as exc:
        raise BadSpec(f"--eps-grid expects geometric:HI:LO:COUNT or floats, got {text!r}") from exc


def tightness_csv(rows) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(
        ["n", "eps", "atv", "atv_closed", "kl", "kl_closed", "ratio", "bound_ok"]
    )
    for r in rows:
        writer.writerow(
            [
                r.n,
                repr(r.eps),
                repr(r.atv),
                repr(r.atv_closed),
                repr(r.kl),
                repr(r.kl_closed),
                repr(r.ratio),
                "true" if r.bound_ok else "false",
            ]
        )
    return buf.getvalue()


def cmd_tightness(args) -> int:
    n_list = _parse_int_list(args.n_list, "--n-list")
    grid = _parse_eps_grid(args.eps_grid)
    rows = tightness_experiment(n_list, grid)
    text = tightness_csv(rows)
    if args.out:
        with open(args.out, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)
    return 0


# ---------------------------------------------------------------------------
# parser / entry point
# ---------------------------------------------------------------------------

class _Parser(argparse.ArgumentParser):
    def error(self, message):
        sys.stderr.write(f"error: usage: {message}\n")
        raise SystemExit(2)


def _build_parser() -> _Parser:
    parser = _Parser(
        prog="atvlab",
        description="Adapted total variation toolkit for finite process laws.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("compute", help="evaluate a metric on two process files")
    p.add_argument("--mu", required=True, help="JSON process spec of the first law")
    p.add_argument("--nu", required=True, help="JSON process spec of the second law")
    p.add_argument("--metric", required=True, choices=["tv", "atv", "kl"])
    p.add_argument(
        "--method",
        choices=["recursive", "dp", "lp"],
        default="recursive",
        help="algorithm for atv (ignored by tv and kl)",
    )
    p.add_argument(
        "--breakdown",
        action="store_true",
        help="include the per-stage decomposition (atv + recursive only)",
    )
    p.add_argument("--out", help="write the result record here instead of stdout")
    p.add_argument(
        "--cap",
        type=int,
        default=DEFAULT_VAR_CAP,
        help="variable cap for --method lp",
    )
    p.set_defaults(func=cmd_compute)

    p = sub.add_parser("verify", help="run the property sweep on an ensemble")
    p.add_argument("--seed", type=int, default=DEFAULT_VERIFY_SEED)
    p.add_argument("--count", type=int, default=DEFAULT_VERIFY_COUNT)
    p.add_argument(
        "--n",
        default=",".join(str(n) for n in DEFAULT_VERIFY_HORIZONS),
        help="comma-separated horizons; count is split across them",
    )
    p.add_argument("--alphabet", type=int, default=DEFAULT_VERIFY_ALPHABET)
    p.add_argument(
        "--family",
        default=DEFAULT_VERIFY_FAMILY,
        choices=["uniform-random", "markov", "product"],
    )
    p.add_argument("--tol", type=float, default=1e-9)
    p.set_defaults(func=cmd_verify)

    p = sub.add_parser("tightness", help="evaluate the Bernoulli tightness grid")
    p.add_argument("--n-list", default=",".join(str(n) for n in DEFAULT_N_LIST))
    p.add_argument("--eps-grid", default="geometric:0.25:1e-5:12")
    p.add_argument("--out", help="write CSV here instead of stdout")
    p.set_defaults(func=cmd_tightness)
    return parser


def main(argv=None) -> int:
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return exc.code if isinstance(exc.code, int) else 0
    try:
        return args.func(args)
    except json.JSONDecodeError as exc:
        sys.stderr.write(f"error: parse: line {exc.lineno}: {exc.msg}\n")
        return 2
    except CapExceeded as exc:
        sys.stderr.write(f"error: CapExceeded: {exc}\n")
        return 3
    except SolverFailure as exc:
        sys.stderr.write(f"error: SolverFailure: {exc}\n")
        return 4
    except AtvLabError as exc:
        sys.stderr.write(f"error: {type(exc).__name__}: {exc}\n")
        return 2
    except OSError as exc:
        sys.stderr.write(f"error: io: {exc}\n")
        return 2


if __name__ == "__main__":
    sys.exit(main())
