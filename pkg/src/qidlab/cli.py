"""Batch front end.

Every run records its full configuration, including the master seed, at the
top of its output; identical configurations produce byte-identical files.

Exit codes: 0 success, 2 validation failure (bad spec, non-cptp channel),
3 infeasible construction.  Failures also print one JSON object to stderr.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import math
import os
import sys

import numpy as np

from . import capacity as cap
from . import channels as ch
from . import chernoff as cb
from . import decoupling as dc
from . import idcodes as ic
from .entropy import channel_information
from .qmat import StateError, maximally_mixed, rng_stream

EXIT_OK, EXIT_INVALID, EXIT_INFEASIBLE = 0, 2, 3
DEFAULT_SEED = 0


def load_channel_spec(text: str) -> ch.QuantumChannel:
    """Channel from a JSON file path, an inline JSON object, or ``name:params`` shorthand."""
    if os.path.isfile(text):
        with open(text) as fh:
            data = json.load(fh)
    elif text.lstrip().startswith("{"):
        try:
            data = json.loads(text)
        except json.JSONDecodeError as exc:
            raise ch.ChannelError(f"cannot parse channel JSON: {exc}") from exc
    else:
        return ch.make_standard(ch.parse_shorthand(text))
    return ch.channel_from_json(data)


def parse_grid(text: str) -> list[float]:
    """``start:stop:step`` (inclusive) or a comma-separated list."""
    if ":" in text:
        start, stop, step = (float(x) for x in text.split(":"))
        if step <= 0:
            raise ValueError("grid step must be positive")
        n = int(math.floor((stop - start) / step + 1e-9))
        return [round(start + i * step, 12) for i in range(n + 1)]
    return [float(x) for x in text.split(",") if x]


def fmt(x) -> str:
    if isinstance(x, bool) or x is None:
        return str(x)
    if isinstance(x, (float, np.floating)):
        return f"{float(x):.9g}"
    return str(x)


def _clean(obj):
    """JSON-safe copy: numpy scalars to Python, NaN to null."""
    if isinstance(obj, dict):
        return {k: _clean(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_clean(v) for v in obj]
    if isinstance(obj, (np.floating, float)):
        v = float(obj)
        return None if math.isnan(v) else v
    if isinstance(obj, np.integer):
        return int(obj)
    if isinstance(obj, np.bool_):
        return bool(obj)
    return obj


def render(config: dict, columns, rows, fmt_name: str, extra=None) -> str:
    if fmt_name == "json":
        payload = {"config": config, "rows": rows}
        if extra is not None:
            payload["result"] = extra
        return json.dumps(_clean(payload), indent=2, sort_keys=True) + "\n"
    buf = io.StringIO()
    buf.write("# qidlab " + config["command"] + "\n")
    buf.write("# config: " + json.dumps(_clean(config), sort_keys=True) + "\n")
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(columns)
    for r in rows:
        w.writerow([fmt(r.get(c)) for c in columns])
    return buf.getvalue()


def _opts(args) -> cap.OptimizerOptions:
    return cap.OptimizerOptions(restarts=args.restarts, max_iters=args.max_iters, seed=args.seed)


# -- commands ---------------------------------------------------------------

def cmd_channel_info(args, config):
    channel = load_channel_spec(args.channel)
    rep = ch.validate_cptp(channel)
    v, comp = ch.complementary(channel)
    info = channel_information(channel, maximally_mixed(channel.dim_in))
    row = {"label": channel.label, "dim_in": channel.dim_in, "dim_out": channel.dim_out,
           "dim_env": v.dim_E, "tp_residual": rep.tp_residual,
           "choi_min_eig": rep.choi_min_eig, **info.to_json()}
    return list(row), [row], None


def cmd_capacity(args, config):
    channel = load_channel_spec(args.channel)
    funcs = {"c1": cap.c1_capacity, "q1": cap.q1_capacity, "ce": cap.ce_capacity,
             "qid1": cap.qid1_capacity}
    which = [w.strip() for w in args.which.split(",") if w.strip()]
    bad = [w for w in which if w not in funcs]
    if bad:
        raise ValueError(f"unknown capacity {bad}; choose from {sorted(funcs)}")
    opts = _opts(args)
    results = {w: funcs[w](channel, opts) for w in which}
    row = {"channel": channel.label, **{w: r.value for w, r in results.items()}}
    return ["channel", *which], [row], {w: r.to_json() for w, r in results.items()}


def cmd_curves(args, config):
    rows = cap.erasure_curves(parse_grid(args.q))
    cols = list(cap.CURVE_COLUMNS)
    if args.optimize:
        opts = _opts(args)
        for r in rows:
            e = ch.erasure(r["q"])
            r["C_opt"] = cap.c1_capacity(e, opts).value
            r["Q_opt"] = cap.q1_capacity(e, opts).value
            r["C_E_opt"] = cap.ce_capacity(e, opts).value
        cols += ["C_opt", "Q_opt", "C_E_opt"]
    return cols, rows, None


def cmd_idcode(args, config):
    code = ic.rs_id_code(args.field, args.k)
    dense_ok = code.messages * code.alphabet**2 <= 2**26
    rep = code.verify_exhaustive()
    row = {"q": code.q, "k": code.k, "messages": code.messages, "alphabet": code.alphabet,
           "lambda1": rep.lambda1, "lambda2": rep.lambda2, "bound": (code.k - 1) / code.q,
           "pairs": rep.pair_count, "mode": "exhaustive"}
    if args.pairs:
        s = code.verify_sampled(args.pairs, args.seed)
        row["sampled_lambda2"], row["sampled_pairs"] = s.lambda2, s.pair_count
    if dense_ok:
        dense = code.to_classical_code()
        d = ic.verify_classical_id(dense, ch.identity(code.alphabet))
        sim = ic.verify_simultaneity(dense, code.witness(), require_disjoint=False)
        row.update(dense_lambda1=d.lambda1, dense_lambda2=d.lambda2,
                   simultaneity_residual=sim.residual)
    return list(row), [row], code.to_json()


def cmd_qidcode(args, config):
    channel = load_channel_spec(args.channel)
    qcode = ic.QuantumIdCode.naive(channel.dim_in)
    if channel.dim_out != channel.dim_in:
        raise ValueError("the naive code needs equal input and output dimensions")
    rep = ic.verify_quantum_id(qcode, channel, args.trials, args.seed)
    row = {"channel": channel.label, "epsilon": rep.epsilon, "test_set_size": rep.test_set_size}
    if args.fingerprints:
        _, crep, eps_q = ic.fingerprint_to_classical(qcode, channel, args.fingerprints,
                                                     args.overlap, args.seed, args.trials)
        row.update(fingerprints=args.fingerprints, overlap=args.overlap,
                   lambda1=crep.lambda1, lambda2=crep.lambda2,
                   lambda2_bound=args.overlap**2 + 2 * eps_q)
    return list(row), [row], None


def cmd_decouple(args, config):
    rows = []
    if args.channel:
        channel = load_channel_spec(args.channel)
        g = dc.check_forgetful_implies_geometry(channel, None, args.trials, args.seed)
        rows.append({"instance": channel.label, "epsilon": None, "delta": g.delta,
                     "eps_bound": None, "gap_min": g.geometry_gap_min,
                     "gap_max": g.geometry_gap_max, "gap_bound": g.epsilon_bound,
                     "mu": g.mu, "lambda": g.lam, "eta": g.eta,
                     "test_set_size": g.test_set_size, "pass": g.passed})
    else:
        for i in range(args.instances):
            code, noisy, meta = dc.random_blind_code(rng_stream(args.seed, i))
            r = dc.check_id_implies_forgetful(code, noisy, args.trials, args.seed + i)
            g = dc.check_forgetful_implies_geometry(ch.compose(code.encoder, noisy), None,
                                                    args.trials, args.seed + i)
            rows.append({"instance": i, "epsilon": r.epsilon, "delta": r.delta,
                         "eps_bound": r.epsilon_bound, "gap_min": g.geometry_gap_min,
                         "gap_max": g.geometry_gap_max, "gap_bound": g.epsilon_bound,
                         "mu": r.mu, "lambda": r.lam, "eta": r.eta,
                         "test_set_size": r.test_set_size, "pass": r.passed and g.passed})
    return list(rows[0]), rows, {"passed": all(r["pass"] for r in rows)}


def cmd_chernoff(args, config):
    if args.suite != "default":
        raise ValueError(f"unknown suite {args.suite!r}")
    v = cb.validate_bound(cb.default_suite(args.seed), args.trials, args.seed)
    rows = []
    for i, r in enumerate(v.rows):
        rows.append({"case": i, "ensemble": r.case, "n": r.n, "d": r.d, "alpha": r.alpha,
                     "mu": r.mu, "direction": r.direction, "empirical": r.empirical,
                     "ci": r.ci, "bound": r.bound, "pass": r.passed, "exact": r.exact,
                     "exact_in_ci": r.exact_in_ci})
    return list(rows[0]), rows, {"passed": v.passed}


COMMANDS = {
    "channel-info": cmd_channel_info, "capacity": cmd_capacity, "curves": cmd_curves,
    "idcode": cmd_idcode, "qidcode": cmd_qidcode, "decouple": cmd_decouple,
    "chernoff": cmd_chernoff,
}


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--seed", type=int, default=DEFAULT_SEED, help="master seed (recorded)")
    common.add_argument("--format", choices=("csv", "json"), default="csv")
    common.add_argument("--out", help="output path (default: stdout)")

    optim = argparse.ArgumentParser(add_help=False)
    optim.add_argument("--restarts", type=int, default=32)
    optim.add_argument("--max-iters", type=int, default=2000)

    p = argparse.ArgumentParser(prog="qidlab", description=__doc__.splitlines()[0])
    sub = p.add_subparsers(dest="command", required=True)

    s = sub.add_parser("channel-info", parents=[common], help="validate and describe a channel")
    s.add_argument("--channel", required=True)

    s = sub.add_parser("capacity", parents=[common, optim], help="single-letter capacities")
    s.add_argument("--channel", required=True)
    s.add_argument("--which", default="c1,q1,ce")

    s = sub.add_parser("curves", parents=[common, optim], help="erasure-channel curves")
    s.add_argument("--q", default="0:1:0.05")
    s.add_argument("--optimize", action="store_true", help="add optimizer columns")

    s = sub.add_parser("idcode", parents=[common], help="Reed-Solomon ID code report")
    s.add_argument("--field", "-q", type=int, default=8, help="field size")
    s.add_argument("--k", type=int, default=2)
    s.add_argument("--pairs", type=int, default=0, help="also sample this many pairs")

    s = sub.add_parser("qidcode", parents=[common], help="naive quantum ID code deviation")
    s.add_argument("--channel", required=True)
    s.add_argument("--trials", type=int, default=500)
    s.add_argument("--fingerprints", type=int, default=0)
    s.add_argument("--overlap", type=float, default=0.5)

    s = sub.add_parser("decouple", parents=[common], help="weak-decoupling checks")
    s.add_argument("--channel", help="single channel geometry check instead of the suite")
    s.add_argument("--instances", type=int, default=20)
    s.add_argument("--trials", type=int, default=dc.DEFAULT_TRIALS)

    s = sub.add_parser("chernoff", parents=[common], help="operator Chernoff validation")
    s.add_argument("--suite", default="default")
    s.add_argument("--trials", type=int, default=100_000)
    return p


def _fail(code: int, exc: Exception) -> int:
    sys.stderr.write(json.dumps({"error": type(exc).__name__, "message": str(exc),
                                 "exit_code": code}) + "\n")
    return code


def run(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    config = {k: v for k, v in sorted(vars(args).items()) if k not in ("out", "format")}
    try:
        columns, rows, extra = COMMANDS[args.command](args, config)
    except ic.InfeasibleError as exc:
        return _fail(EXIT_INFEASIBLE, exc)
    except (ch.ChannelError, StateError, ValueError, json.JSONDecodeError) as exc:
        return _fail(EXIT_INVALID, exc)
    text = render(config, columns, rows, args.format, extra)
    if args.out:
        with open(args.out, "w", newline="") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)
    failed = isinstance(extra, dict) and extra.get("passed") is False
    return EXIT_INVALID if failed else EXIT_OK


def main():
    sys.exit(run())


if __name__ == "__main__":
    main()
