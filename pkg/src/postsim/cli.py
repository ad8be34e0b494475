"""Command-line interface.

Outcome labels and partition blocks are 1-based in every input and output.
Exit codes: 0 success, 2 invalid input or failed validation, 3 failed
statistical check.
"""
from __future__ import annotations

import argparse
import csv
import io as _io
import json
import math
import os
import subprocess
import sys
import time
import warnings
from pathlib import Path

import numpy as np

from . import __version__
from .bounds import (
    SQUARE_C,
    q_upper_bound,
    q_upper_bound_rank_one,
    concentration_threshold,
    visibility_robustness,
)
from .generators import (
    DEFAULT_ALPHA,
    NotASicError,
    find_fiducial,
    fourier_povm,
    haar_random_povm,
    haar_unitary,
    ic_covariant_povm,
    read_fiducial,
    sic_povm,
)
from .io import dilation_to_dict, read_povm, read_state, scheme_to_dict, write_json, write_povm, write_state
from .noise import (
    compare_implementations,
    noisy_post_bound,
    noisy_scheme_distribution,
    worst_case_tvd_lower_bound,
)
from .partitions import best_of_random, greedy_improve, standard_partition
from .povm import QuantumState, StructuralError, InvalidPovmError, born, tvd
from .rng import check_seed, stream, time_seed
from .sampling import sample_direct, sample_scheme
from .scheme import build_scheme, dilate_scheme, naimark_dilate, success_probability

EXIT_OK, EXIT_INVALID, EXIT_STATISTICS = 0, 2, 3
SCAN_FIELDS = ("d", "n", "q_succ_best", "q_succ_mean", "seconds")
HIST_FIELDS = ("bin_low", "bin_high", "count", "above_threshold")


class CliError(Exception):
    def __init__(self, message: str, code: int = EXIT_INVALID):
        super().__init__(message)
        self.code = code


def artifact_version() -> str:
    try:
        out = subprocess.run(["git", "describe", "--always", "--dirty"], capture_output=True,
                             text=True, cwd=Path(__file__).parent, timeout=5)
        if out.returncode == 0 and out.stdout.strip():
            return f"{__version__}+{out.stdout.strip()}"
    except (OSError, subprocess.SubprocessError):
        pass
    return __version__


def resolve_seed(args) -> int:
    if args.seed is not None:
        return check_seed(args.seed)
    if args.ci or os.environ.get("CI", "").lower() not in ("", "0", "false"):
        raise CliError("an explicit --seed is required in CI mode")
    seed = time_seed()
    print(f"seed: {seed}", file=sys.stderr)
    return seed


def emit(args, command: str, params: dict, outputs: dict, seed=None, started=None,
         echo: bool = True) -> None:
    record = {
        "command": command,
        "parameters": params,
        "seed": seed,
        "version": artifact_version(),
        "outputs": outputs,
        "wall_time": None if started is None else round(time.perf_counter() - started, 6),
    }
    text = json.dumps(record, indent=1, default=_jsonable)
    if getattr(args, "report", None):
        Path(args.report).write_text(text + "\n")
    if echo:
        print(text)


def _jsonable(x):
    if isinstance(x, np.generic):
        return x.item()
    if isinstance(x, np.ndarray):
        return x.tolist()
    raise TypeError(f"cannot serialise {type(x).__name__}")


def parse_complex(text: str) -> complex:
    return complex(text.replace(" ", "").replace("i", "j"))


def make_povm(kind: str, d: int, n: int | None, seed: int | None, alpha=DEFAULT_ALPHA,
              fiducial=None, fiducial_dir=None):
    if kind == "haar":
        return haar_random_povm(d, n or d * d, seed, d)
    if kind == "fourier":
        return fourier_povm(d, n or d * d)
    if kind == "ic":
        return ic_covariant_povm(d, alpha)
    if kind == "sic":
        path = fiducial or find_fiducial(d, fiducial_dir)
        if path is None:
            raise FileNotFoundError(f"no SIC fiducial for d={d}")
        povm, _ = sic_povm(d, read_fiducial(path))
        return povm
    raise CliError(f"unknown kind {kind!r}")


def choose_partition(povm, m: int, strategy: str, seed: int | None, passes: int):
    """Returns (partition, q_succ, evaluated q values)."""
    n = povm.n_outcomes
    name, _, arg = strategy.partition(":")
    if name == "standard":
        part = standard_partition(n, m)
        q = success_probability(povm, part)
        return part, q, [q]
    if name not in ("random", "greedy"):
        raise CliError(f"unknown strategy {strategy!r}")
    if seed is None:
        raise CliError("random strategies need a seed")
    if name == "random":
        res = best_of_random(povm, m, int(arg or 24), seed)
        return res.partition, res.q_succ, res.evaluated
    if arg:
        start = best_of_random(povm, m, int(arg), seed)
        evaluated = list(start.evaluated)
        start_part = start.partition
    else:
        start_part = standard_partition(n, m)
        evaluated = []
    res = greedy_improve(povm, start_part, max_passes=passes, seed=seed)
    return res.partition, res.q_succ, evaluated + res.trace


def upper_bound_for(povm, m: int) -> float:
    if povm.is_rank_one():
        return q_upper_bound_rank_one(povm.weights(), m)
    return q_upper_bound(povm, m)


# --- commands -------------------------------------------------------------

def cmd_gen_povm(args) -> int:
    started = time.perf_counter()
    seed = resolve_seed(args) if args.kind == "haar" else args.seed
    alpha = parse_complex(args.alpha) if args.alpha else DEFAULT_ALPHA
    try:
        povm = make_povm(args.kind, args.dim, args.outcomes, seed, alpha, args.fiducial)
    except (FileNotFoundError, NotASicError) as exc:
        raise CliError(str(exc)) from None
    write_povm(args.out, povm)
    params = {"kind": args.kind, "dim": args.dim, "outcomes": povm.n_outcomes,
              "alpha": str(alpha) if args.kind == "ic" else None, "out": args.out}
    emit(args, "gen-povm", params, {"outcomes": povm.n_outcomes,
                                     "weights": povm.weights()}, seed, started)
    return EXIT_OK


def cmd_gen_state(args) -> int:
    started = time.perf_counter()
    seed = None
    if args.kind == "mixed":
        state = QuantumState.maximally_mixed(args.dim)
    elif args.kind == "basis":
        state = QuantumState.basis(args.dim, args.index - 1)
    else:
        seed = resolve_seed(args)
        state = QuantumState.pure(haar_unitary(args.dim, seed)[:, 0])
    write_state(args.out, state)
    emit(args, "gen-state", {"kind": args.kind, "dim": args.dim, "out": args.out}, {}, seed, started)
    return EXIT_OK


def cmd_qsucc(args) -> int:
    started = time.perf_counter()
    if args.m < 2:
        raise CliError("m must be at least 2")
    povm = read_povm(args.povm)
    seed = resolve_seed(args) if args.strategy != "standard" else args.seed
    part, q, evaluated = choose_partition(povm, args.m, args.strategy, seed, args.passes)
    bound = upper_bound_for(povm, args.m)
    conseq = visibility_robustness(min(q, 1.0))
    outputs = {
        "q_succ": q,
        "partition": part.labels(),
        "upper_bound": bound,
        "visibility_lower": conseq.t_lower,
        "robustness_upper": conseq.R_upper,
        "evaluated": len(evaluated),
    }
    emit(args, "qsucc", {"povm": args.povm, "m": args.m, "strategy": args.strategy}, outputs, seed, started)
    if args.scheme_out:
        write_json(args.scheme_out, scheme_to_dict(build_scheme(povm, part)))
    return EXIT_OK


def scan_rows(kind: str, dims, k: int, seed: int, fiducial_dir=None):
    """Yields (csv row, evaluated q values, upper bound) per constructible dimension."""
    for d in dims:
        t0 = time.perf_counter()
        try:
            povm = make_povm(kind, d, None, seed, fiducial_dir=fiducial_dir)
        except (FileNotFoundError, NotASicError) as exc:
            warnings.warn(f"skipping d={d}: {exc}", RuntimeWarning, stacklevel=2)
            continue
        res = best_of_random(povm, d, k, seed, d)
        yield {
            "d": d,
            "n": povm.n_outcomes,
            "q_succ_best": res.q_succ,
            "q_succ_mean": float(np.mean(res.evaluated)),
            "seconds": round(time.perf_counter() - t0, 3),
        }, res.evaluated, upper_bound_for(povm, d)


def cmd_scan(args) -> int:
    seed = resolve_seed(args)
    dims = [int(x) for x in args.dims.split(",") if x.strip()] if args.dims else []
    buf = _io.StringIO()
    writer = csv.DictWriter(buf, fieldnames=SCAN_FIELDS, lineterminator="\n")
    writer.writeheader()
    with warnings.catch_warnings(record=True) as caught:
        warnings.simplefilter("always")
        for row, _, _ in scan_rows(args.kind, dims, args.partitions, seed, args.fiducial_dir):
            writer.writerow(row)
    for w in caught:
        print(f"warning: {w.message}", file=sys.stderr)
    _write_text(args.out, buf.getvalue())
    return EXIT_OK


def _write_text(path, text: str) -> None:
    if path and path != "-":
        Path(path).write_text(text)
    else:
        sys.stdout.write(text)


def cmd_sample(args) -> int:
    started = time.perf_counter()
    povm = read_povm(args.povm)
    state = read_state(args.state) if args.state else QuantumState.maximally_mixed(povm.dim)
    seed = resolve_seed(args)
    exact = born(povm, state)
    n = povm.n_outcomes
    failed = []
    if args.mode == "direct":
        report = sample_direct(povm, state, args.shots, seed)
        outputs = {"empirical_tvd": report.empirical_tvd_vs_target}
    else:
        m = args.m or povm.dim
        part, _, _ = choose_partition(povm, m, args.strategy, seed, args.passes)
        scheme = build_scheme(povm, part)
        report = sample_scheme(scheme, state, args.shots, seed)
        if report.success_count == 0:
            raise CliError("no postselected shots", EXIT_STATISTICS)
        q = scheme.q_succ
        sigma = math.sqrt(q * (1 - q) / args.shots)
        rate = report.empirical_success_rate
        outputs = {
            "empirical_tvd": report.empirical_tvd_vs_target,
            "q_succ": q,
            "empirical_success_rate": rate,
            "success_rate_sigmas": (rate - q) / sigma if sigma > 0 else 0.0,
            "partition": part.labels(),
        }
        if args.check and abs(rate - q) > 4 * sigma:
            failed.append("success rate outside 4 sigma")
    tvd_limit = 3 * math.sqrt(n / (report.success_count or report.shots))
    outputs["tvd_limit"] = tvd_limit
    if args.check and report.empirical_tvd_vs_target > tvd_limit:
        failed.append("empirical TVD above limit")
    outputs["check_failures"] = failed
    if args.out:
        write_json(args.out, report.to_dict())
    if args.csv:
        lines = ["outcome,count,exact_probability"]
        counts = report.counts if report.postselected_counts is None else report.postselected_counts
        lines += [f"{i + 1},{int(c)},{exact[i]!r}" for i, c in enumerate(counts)]
        Path(args.csv).write_text("\n".join(lines) + "\n")
    emit(args, "sample", {"povm": args.povm, "state": args.state, "shots": args.shots,
                          "mode": args.mode}, outputs, seed, started)
    return EXIT_STATISTICS if failed else EXIT_OK


def _roundtrip_error(dil, d: int, seed: int, trials: int = 50) -> float:
    worst = 0.0
    for t in range(trials):
        psi = stream(seed, t).standard_normal((d, 2)) @ np.array([1, 1j])
        state = QuantumState.pure(psi)
        worst = max(worst, float(np.max(np.abs(dil.grouped_probabilities(state) - born(dil.source, state)))))
    return worst


def cmd_dilate(args) -> int:
    started = time.perf_counter()
    povm = read_povm(args.povm)
    seed = args.seed if args.seed is not None else 0
    if args.m:
        scheme = build_scheme(povm, standard_partition(povm.n_outcomes, args.m))
        dils = dilate_scheme(scheme, pad_to=args.pad_to)
        data = {"q_succ": scheme.q_succ, "partition": scheme.partition.labels(),
                "dilations": [dilation_to_dict(x) for x in dils]}
    else:
        dils = [naimark_dilate(povm, pad_to=args.pad_to)]
        data = dilation_to_dict(dils[0])
    write_json(args.out, data)
    outputs = {
        "big_dims": [x.big_dim for x in dils],
        "rank_dims": [x.rank_dim for x in dils],
        "isometry_error": max(x.isometry_error() for x in dils),
        "reconstruction_error": max(x.reconstruction_error() for x in dils),
        "roundtrip_error": max(_roundtrip_error(x, povm.dim, seed) for x in dils),
    }
    emit(args, "dilate", {"povm": args.povm, "pad_to": args.pad_to, "m": args.m}, outputs, seed, started)
    return EXIT_OK


def cmd_noise(args) -> int:
    started = time.perf_counter()
    povm = read_povm(args.povm)
    state = read_state(args.state) if args.state else QuantumState.maximally_mixed(povm.dim)
    m = args.m or povm.dim
    scheme = build_scheme(povm, standard_partition(povm.n_outcomes, m))
    if args.r2 is not None:
        n_qubits = int(round(math.log2(povm.dim)))
        if 2 ** n_qubits != povm.dim:
            raise CliError(f"dimension {povm.dim} is not a power of two")
        report = compare_implementations(n_qubits, args.r2, scheme, state)
        outputs = report.to_dict()
        if args.csv:
            buf = _io.StringIO()
            writer = csv.DictWriter(buf, fieldnames=report.CSV_FIELDS, lineterminator="\n")
            writer.writeheader()
            writer.writerow(report.csv_row())
            Path(args.csv).write_text(buf.getvalue())
    else:
        eta = 1.0 if args.eta is None else args.eta
        noisy, kept = noisy_scheme_distribution(scheme, state, eta, args.d_tot)
        outputs = {
            "eta": eta,
            "q_succ": scheme.q_succ,
            "naimark_tvd_lower": worst_case_tvd_lower_bound(povm, eta) if povm.generator is not None else None,
            "post_tvd_exact": tvd(born(povm, state), noisy),
            "post_tvd_upper": noisy_post_bound(scheme.q_succ, eta),
            "postselection_probability": kept,
        }
    emit(args, "noise", {"povm": args.povm, "eta": args.eta, "r2": args.r2, "m": m}, outputs, None, started)
    return EXIT_OK


def concentration_values(d: int, n: int, m: int, trials: int, seed: int):
    """Standard-partition success probabilities and upper bounds over Haar draws."""
    part = standard_partition(n, m)
    qs, ubs = [], []
    for t in range(trials):
        povm = haar_random_povm(d, n, seed, t)
        qs.append(success_probability(povm, part))
        ubs.append(q_upper_bound_rank_one(povm.weights(), m))
    return np.array(qs), np.array(ubs)


def cmd_concentration(args) -> int:
    started = time.perf_counter()
    seed = resolve_seed(args)
    d, n, m = args.dim, args.outcomes or args.dim**2, args.m or args.dim
    qs, ubs = concentration_values(d, n, m, args.trials, seed)
    threshold = SQUARE_C if m == d else concentration_threshold(d, n, m, 1e-12)[0]
    counts, edges = np.histogram(qs, bins=args.bins, range=(0.0, max(0.5, float(qs.max()))))
    buf = _io.StringIO()
    writer = csv.DictWriter(buf, fieldnames=HIST_FIELDS, lineterminator="\n")
    writer.writeheader()
    for c, lo, hi in zip(counts, edges[:-1], edges[1:]):
        writer.writerow({"bin_low": lo, "bin_high": hi, "count": int(c), "above_threshold": bool(lo >= threshold)})
    _write_text(args.out, buf.getvalue())
    outputs = {
        "threshold": threshold,
        "fraction_above_threshold": float(np.mean(qs >= threshold)),
        "mean": float(qs.mean()),
        "min": float(qs.min()),
        "max": float(qs.max()),
        "sandwich_violations": int(np.sum(qs > ubs + 1e-10)),
    }
    if args.eps is not None:
        outputs["eps_threshold"], outputs["eps_probability"] = concentration_threshold(d, n, m, args.eps)
    emit(args, "concentration", {"dim": d, "outcomes": n, "m": m, "trials": args.trials},
         outputs, seed, started, echo=args.out not in (None, "-"))
    if args.check and outputs["fraction_above_threshold"] < 0.95:
        return EXIT_STATISTICS
    return EXIT_OK


# --- parser ---------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="postsim", description=__doc__.splitlines()[0])
    p.add_argument("--version", action="version", version=__version__)
    sub = p.add_subparsers(dest="command", required=True)

    def seeded(sp):
        sp.add_argument("--seed", type=int)
        sp.add_argument("--ci", action="store_true", help="refuse to run without --seed")
        sp.add_argument("--report", help="also write the JSON record here")

    g = sub.add_parser("gen-povm", help="write a POVM file")
    g.add_argument("--kind", choices=("haar", "ic", "sic", "fourier"), required=True)
    g.add_argument("--dim", type=int, required=True)
    g.add_argument("--outcomes", type=int)
    g.add_argument("--alpha", help="IC fiducial parameter, e.g. 0.5+0.5i")
    g.add_argument("--fiducial", help="SIC fiducial file")
    g.add_argument("--out", required=True)
    seeded(g)
    g.set_defaults(func=cmd_gen_povm)

    s = sub.add_parser("gen-state", help="write a state file")
    s.add_argument("--kind", choices=("mixed", "basis", "haar"), default="mixed")
    s.add_argument("--dim", type=int, required=True)
    s.add_argument("--index", type=int, default=1, help="1-based basis index")
    s.add_argument("--out", required=True)
    seeded(s)
    s.set_defaults(func=cmd_gen_state)

    q = sub.add_parser("qsucc", help="success probability of the postselection scheme")
    q.add_argument("povm")
    q.add_argument("--m", type=int, required=True)
    q.add_argument("--strategy", default="standard", help="standard | random:K | greedy | greedy:K")
    q.add_argument("--passes", type=int, default=20)
    q.add_argument("--scheme-out")
    seeded(q)
    q.set_defaults(func=cmd_qsucc)

    sc = sub.add_parser("scan", help="best-of-k success probability per dimension, m = d")
    sc.add_argument("--kind", choices=("haar", "ic", "sic", "fourier"), required=True)
    sc.add_argument("--dims", default="", help="comma-separated dimensions")
    sc.add_argument("--partitions", type=int, default=24)
    sc.add_argument("--fiducial-dir")
    sc.add_argument("--out", default="-")
    seeded(sc)
    sc.set_defaults(func=cmd_scan)

    sa = sub.add_parser("sample", help="Monte-Carlo sampling, direct or through the scheme")
    sa.add_argument("povm")
    sa.add_argument("--state")
    sa.add_argument("--shots", type=int, default=100_000)
    sa.add_argument("--mode", choices=("direct", "scheme"), default="direct")
    sa.add_argument("--m", type=int)
    sa.add_argument("--strategy", default="standard")
    sa.add_argument("--passes", type=int, default=20)
    sa.add_argument("--out", help="sample report JSON")
    sa.add_argument("--csv", help="per-outcome counts CSV")
    sa.add_argument("--check", action="store_true", help="exit 3 if statistical checks fail")
    seeded(sa)
    sa.set_defaults(func=cmd_sample)

    di = sub.add_parser("dilate", help="Naimark dilation of a POVM or of its sub-measurements")
    di.add_argument("povm")
    di.add_argument("--pad-to", type=int)
    di.add_argument("--m", type=int, help="dilate the sub-measurements of the standard partition")
    di.add_argument("--out", required=True)
    seeded(di)
    di.set_defaults(func=cmd_dilate)

    no = sub.add_parser("noise", help="depolarizing-noise report")
    no.add_argument("povm")
    no.add_argument("--eta", type=float)
    no.add_argument("--r2", type=float, help="two-qubit error rate; compares Naimark and postselection")
    no.add_argument("--m", type=int)
    no.add_argument("--d-tot", type=int)
    no.add_argument("--state")
    no.add_argument("--csv")
    seeded(no)
    no.set_defaults(func=cmd_noise)

    co = sub.add_parser("concentration", help="histogram of standard-partition success over Haar POVMs")
    co.add_argument("--dim", type=int, required=True)
    co.add_argument("--outcomes", type=int)
    co.add_argument("--m", type=int)
    co.add_argument("--trials", type=int, default=200)
    co.add_argument("--bins", type=int, default=20)
    co.add_argument("--eps", type=float)
    co.add_argument("--out", default="-")
    co.add_argument("--check", action="store_true", help="exit 3 if under 95%% clear the threshold")
    seeded(co)
    co.set_defaults(func=cmd_concentration)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except CliError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return exc.code
    except (StructuralError, InvalidPovmError, ValueError, FileNotFoundError, KeyError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INVALID


if __name__ == "__main__":
    sys.exit(main())
