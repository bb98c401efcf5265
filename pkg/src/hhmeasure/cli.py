"""Experiment runner: every library operation behind one deterministic CLI.

Contract: the same config and binary produce byte-identical artifact files.
Floats are serialized with 17 significant digits; wall-clock metadata is
confined to the sidecar run.log.  Exit codes: 0 all PASS (or plain success),
1 any FAIL, 2 any INCONCLUSIVE, 3 and above for errors.
"""

from __future__ import annotations

import argparse
import csv
import datetime
import json
import os
import sys
from fractions import Fraction
from pathlib import Path

from .checks import CHECK_IDS, EVIDENCE_COLUMNS, run_check
from .lattice import LINE, Site, set_from_json
from .measures import (
    DEFAULT_C_SCHEDULE,
    constant_c,
    edge_hm_L0,
    inharmonic,
    scaling_limit_report,
    stationary_hm,
    truncated_hm,
    truncated_hm_mc,
)
from .montecarlo import DEFAULT_STREAMS, mc_hit
from .potential import KAPPA, get_kernel

_USAGE_EXIT = 3
_ERROR_EXIT = 4


class _CliError(Exception):
    """User-facing failure with a precise location message."""


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise _CliError(message)


def _fmt(v):
    if isinstance(v, float):
        return format(v, ".17g")
    if isinstance(v, Fraction):
        return f"{v.numerator}/{v.denominator}"
    return v


def _jsonable(obj):
    """Deep-convert to JSON-safe values with 17-digit float strings."""
    if isinstance(obj, float):
        return format(obj, ".17g")
    if isinstance(obj, Fraction):
        return f"{obj.numerator}/{obj.denominator}"
    if isinstance(obj, dict):
        return {str(_fmt(k)): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if hasattr(obj, "as_dict"):
        return _jsonable(obj.as_dict())
    return obj


def _write_json(path: Path, payload: dict) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w") as fh:
        json.dump(_jsonable(payload), fh, indent=2, sort_keys=True)
        fh.write("\n")


def _write_csv(path: Path, rows) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", newline="") as fh:
        w = csv.DictWriter(fh, fieldnames=EVIDENCE_COLUMNS)
        w.writeheader()
        for r in rows:
            w.writerow({k: _fmt(r.get(k, "")) for k in EVIDENCE_COLUMNS})


def _log(out: Path, message: str) -> None:
    out.mkdir(parents=True, exist_ok=True)
    stamp = datetime.datetime.now().isoformat(timespec="seconds")
    with open(out / "run.log", "a") as fh:
        fh.write(f"{stamp} {message}\n")


def _row(quantity, value, *, set_hash="", x="", index="", method="solver",
         lo=None, hi=None, std_error=""):
    return {
        "quantity": quantity, "set_hash": set_hash,
        "x": " ".join(str(t) for t in x) if isinstance(x, tuple) else x,
        "index": index, "method": method, "value": value,
        "bracket_lo": value if lo is None else lo,
        "bracket_hi": value if hi is None else hi,
        "std_error": std_error,
    }


def _parse_site(text: str) -> Site:
    try:
        a, b = text.split(",")
        return Site(int(a), int(b))
    except Exception:
        raise _CliError(f"expected a site as 'x1,x2', got {text!r}")


def _parse_int_list(text: str) -> list[int]:
    """Accept '25,50,100' and inclusive ranges '2..6'."""
    try:
        if ".." in text:
            a, b = text.split("..")
            return list(range(int(a), int(b) + 1))
        return [int(float(t)) for t in text.split(",") if t]
    except _CliError:
        raise
    except Exception:
        raise _CliError(f"expected integers 'a,b,c' or a range 'a..b', got {text!r}")


def _parse_float_list(text: str) -> list[float]:
    try:
        return [float(t) for t in text.split(",") if t]
    except Exception:
        raise _CliError(f"expected floats 'a,b,c', got {text!r}")


def _parse_count(text: str) -> int:
    """Sample counts accept float-ish spellings like 1e7."""
    try:
        return int(float(text))
    except Exception:
        raise _CliError(f"expected a count, got {text!r}")


def _parse_set(text: str):
    try:
        return set_from_json(text)
    except json.JSONDecodeError as e:
        raise _CliError(f"set-spec JSON invalid at line {e.lineno} column {e.colno}: {e.msg}")
    except (KeyError, ValueError, TypeError) as e:
        raise _CliError(f"set-spec rejected: {e}")


def _load_config(path: str | None) -> dict:
    if path is None:
        return {}
    try:
        with open(path) as fh:
            obj = json.load(fh)
    except OSError as e:
        raise _CliError(f"cannot read config {path}: {e.strerror}")
    except json.JSONDecodeError as e:
        raise _CliError(f"{path}:{e.lineno}:{e.colno}: {e.msg}")
    if not isinstance(obj, dict):
        raise _CliError(f"{path}: config must be a JSON object")
    return obj


def _mv_rows(name, mv, set_hash="", x="", index=""):
    return [_row(name, mv.value, set_hash=set_hash, x=x, index=index,
                 method=mv.method, lo=mv.lower, hi=mv.upper,
                 std_error=mv.std_error if mv.std_error is not None else "")]


def _series_payload(series) -> dict:
    return {
        "indices": list(series.indices),
        "values": [mv.as_dict() for mv in series.values],
        "limit": series.limit.as_dict() if series.limit is not None else None,
        "cauchy_gap": series.cauchy_gap,
        "monotone": series.monotone,
    }


def _build_parser() -> _Parser:
    common = _Parser(add_help=False)
    common.add_argument("--out", default="hh-out", help="artifact directory")
    common.add_argument("--config", default=None,
                        help="JSON file with defaults for the flags")
    common.add_argument("--seed", type=_parse_count, default=None,
                        help="RNG seed (default: HH_SEED or 0)")
    common.add_argument("--threads", type=int, default=None,
                        help="solver/MC thread cap (default: HH_THREADS or library default)")
    common.add_argument("--kernel-radius", type=int, default=None,
                        help="pre-build the potential kernel to this radius")

    p = _Parser(prog="hhm", description=__doc__.splitlines()[0])
    sub = p.add_subparsers(dest="command", required=True)

    def add_parser(name, **kw):
        return sub.add_parser(name, parents=[common], **kw)

    sp = add_parser("constant-c", help="segment constant c and partner C")
    sp.add_argument("--n", type=_parse_int_list, default=list(DEFAULT_C_SCHEDULE))

    sp = add_parser("scaling-limit", help="C*n*H_{A_n}(x) against the stationary value")
    sp.add_argument("--set", default='{"kind": "L0_plus", "sites": [[0, 1]]}')
    sp.add_argument("--x", default="0,1")
    sp.add_argument("--n", type=_parse_int_list, default=[25, 50, 100, 200])
    sp.add_argument("--tolerance", type=float, default=0.10)

    sp = add_parser("stationary", help="stationary measure H-bar_A(x)")
    sp.add_argument("--set", default='{"kind": "L0"}')
    sp.add_argument("--x", default="0,0")
    sp.add_argument("--m", type=int, default=None)
    sp.add_argument("--width", type=int, default=None, help="line-sum width override")
    sp.add_argument("--method", choices=("visits-green", "line-sum", "both"),
                    default="both")

    sp = add_parser("inharmonic", help="single-start measure pi*n*P_(0,n)(hit at x)")
    sp.add_argument("--set", default='{"kind": "L0"}')
    sp.add_argument("--x", default="0,0")
    sp.add_argument("--n", type=int, default=100)

    sp = add_parser("truncated", help="harmonic measure from infinity of A_n")
    sp.add_argument("--set", default='{"kind": "L0"}')
    sp.add_argument("--x", default="0,0")
    sp.add_argument("--n", type=int, default=100)
    sp.add_argument("--edge", action="store_true",
                    help="from-above edge value (x on the line)")
    sp.add_argument("--mc-samples", type=_parse_count, default=None,
                    help="also cross-check by Monte Carlo from a circle")

    sp = add_parser("mc", help="Monte Carlo first-hit estimate")
    sp.add_argument("--set", default='{"kind": "L0"}')
    sp.add_argument("--start", required=True)
    sp.add_argument("--target", required=True)
    sp.add_argument("--prev", default=None,
                    help="restrict to arrivals from this neighbor (edge estimate)")
    sp.add_argument("--samples", type=_parse_count, default=100_000)
    sp.add_argument("--cap", type=_parse_count, default=None)
    sp.add_argument("--streams", type=int, default=DEFAULT_STREAMS)

    sp = add_parser("check", help="run one named check, or all of them")
    sp.add_argument("id", choices=CHECK_IDS + ("all",))
    sp.add_argument("--n", type=_parse_int_list, default=None)
    sp.add_argument("--m", type=_parse_int_list, default=None)
    sp.add_argument("--deltas", type=_parse_float_list, default=None)
    sp.add_argument("--alpha", type=float, default=None)
    sp.add_argument("--c0", type=float, default=None)
    sp.add_argument("--set", default=None)
    sp.add_argument("--x", default=None)

    sp = add_parser("kernel", help="potential-kernel table utilities")
    sp.add_argument("action", choices=("build", "fit-c0"))
    sp.add_argument("--radius", type=int, default=256)
    sp.add_argument("--path", default=None, help="kernel table file (build: save target)")

    sp = add_parser("segment", help="segment masses against the arcsine law")
    sp.add_argument("--deltas", type=_parse_float_list, default=[0.25, 0.5, 0.75])
    sp.add_argument("--n", type=_parse_int_list, default=[25, 50, 100, 200, 400])
    sp.add_argument("--tolerance", type=float, default=0.02)

    add_parser("report", help="aggregate artifacts in --out into one table")
    return p


_VERDICT_EXIT = {"PASS": 0, "FAIL": 1, "INCONCLUSIVE": 2}


def _worst_exit(codes) -> int:
    order = (1, 2, 0)
    for c in order:
        if c in codes:
            return c
    return 0


# ---------------------------------------------------------------------------
# command bodies


def _cmd_constant_c(args, out: Path, cfg: dict, kernel) -> int:
    sc = constant_c(tuple(args.n), kernel=kernel)
    rows = []
    for n, mv in zip(sc.series.indices, sc.series.values):
        rows += _mv_rows("n_times_segment_mass", mv, index=n, x=(0, 0),
                         set_hash=LINE.spec_hash())
    rows.append(_row("constant_c", sc.c, method="aitken",
                     lo=sc.c - sc.series.cauchy_gap, hi=sc.c + sc.series.cauchy_gap))
    rows.append(_row("constant_C", sc.C, method="aitken"))
    _write_csv(out / "constant_c.csv", rows)
    _write_json(out / "constant_c.json", {
        "config": cfg, "c": sc.c, "C": sc.C, "series": _series_payload(sc.series),
    })
    print(f"c = {sc.c:.10f}  C = {sc.C:.10f}  (cauchy gap {sc.series.cauchy_gap:.2e})")
    return 0


def _cmd_scaling_limit(args, out: Path, cfg: dict, kernel) -> int:
    A = _parse_set(args.set)
    x = _parse_site(args.x)
    rep = scaling_limit_report(A, x, tuple(args.n), tolerance=args.tolerance,
                               kernel=kernel)
    rows = []
    for e in rep["entries"]:
        rows.append(_row("scaled_truncated_measure", e["scaled"], index=e["n"],
                         x=tuple(x), set_hash=A.spec_hash(), method=e["method"]))
        rows.append(_row("relative_gap", e["rel_gap"], index=e["n"], x=tuple(x),
                         set_hash=A.spec_hash(), method=e["method"]))
    rows.append(_row("stationary_reference", rep["reference"], x=tuple(x),
                     set_hash=A.spec_hash()))
    _write_csv(out / "scaling_limit.csv", rows)
    payload = dict(rep)
    payload["constants"] = {"c": rep["constants"].c, "C": rep["constants"].C}
    payload["config"] = cfg
    _write_json(out / "scaling_limit.json", payload)
    gaps = [e["rel_gap"] for e in rep["entries"]]
    verdict = "PASS" if rep["pass"] else "FAIL"
    print(f"{verdict}: rel gap {gaps[0]:.4%} -> {gaps[-1]:.4%} "
          f"(tolerance {args.tolerance:.0%}, reference {rep['reference']:.8g})")
    return 0 if rep["pass"] else 1


def _cmd_stationary(args, out: Path, cfg: dict, kernel) -> int:
    A = _parse_set(args.set)
    x = _parse_site(args.x)
    got = stationary_hm(A, x, m=args.m, W=args.width, method=args.method,
                        kernel=kernel)
    results = got if isinstance(got, dict) else {args.method: got}
    rows = []
    for method, mv in results.items():
        rows += _mv_rows("stationary_measure", mv, x=tuple(x),
                         set_hash=A.spec_hash(), index=args.m if args.m else "")
        print(f"{method}: {mv.value:.12g}  bracket [{mv.lower:.12g}, {mv.upper:.12g}]")
    _write_csv(out / "stationary.csv", rows)
    _write_json(out / "stationary.json", {
        "config": cfg, "set": A.to_json(), "x": list(x),
        "values": {m: mv.as_dict() for m, mv in results.items()},
    })
    return 0


def _cmd_inharmonic(args, out: Path, cfg: dict, kernel) -> int:
    A = _parse_set(args.set)
    x = _parse_site(args.x)
    mv = inharmonic(A, args.n, x, kernel=kernel)
    _write_csv(out / "inharmonic.csv",
               _mv_rows("single_start_measure", mv, x=tuple(x),
                        set_hash=A.spec_hash(), index=args.n))
    _write_json(out / "inharmonic.json", {
        "config": cfg, "set": A.to_json(), "x": list(x), "n": args.n,
        "value": mv.as_dict(),
    })
    print(f"{mv.value:.12g}  bracket [{mv.lower:.12g}, {mv.upper:.12g}]")
    return 0


def _cmd_truncated(args, out: Path, cfg: dict, kernel) -> int:
    A = _parse_set(args.set)
    x = _parse_site(args.x)
    if args.edge:
        mv = edge_hm_L0(A, args.n, x, kernel=kernel)
        name = "edge_truncated_measure"
    else:
        mv = truncated_hm(A, args.n, x, kernel=kernel)
        name = "truncated_measure"
    rows = _mv_rows(name, mv, x=tuple(x), set_hash=A.spec_hash(), index=args.n)
    payload = {"config": cfg, "set": A.to_json(), "x": list(x), "n": args.n,
               "value": mv.as_dict()}
    if args.mc_samples:
        est = truncated_hm_mc(A, args.n, x, samples=args.mc_samples, seed=args.seed)
        rows += _mv_rows("truncated_measure_mc", est, x=tuple(x),
                         set_hash=A.spec_hash(), index=args.n)
        payload["mc"] = est.as_dict()
        sig = abs(est.value - mv.value) / est.std_error if est.std_error else 0.0
        payload["mc_sigmas"] = sig
        print(f"mc cross-check: {est.value:.8g} ({sig:.2f} sigma from solver)")
    _write_csv(out / "truncated.csv", rows)
    _write_json(out / "truncated.json", payload)
    print(f"{mv.value:.12g}  bracket [{mv.lower:.12g}, {mv.upper:.12g}]")
    return 0


def _cmd_mc(args, out: Path, cfg: dict, kernel) -> int:
    A = _parse_set(args.set)
    start = _parse_site(args.start)
    target = _parse_site(args.target)
    tgt = (tuple(target), tuple(_parse_site(args.prev))) if args.prev else tuple(target)
    est = mc_hit(start, A, tgt, samples=args.samples, cap=args.cap,
                 seed=args.seed, streams=args.streams)
    _write_csv(out / "mc.csv", [
        _row("mc_hit_probability", est.mean, x=tuple(target), set_hash=A.spec_hash(),
             method="mc", lo=est.mean - 3 * est.std_error,
             hi=est.mean + 3 * est.std_error, std_error=est.std_error),
    ])
    _write_json(out / "mc.json", {
        "config": cfg, "set": A.to_json(), "start": list(start),
        "target": list(target), "prev": args.prev,
        "samples": args.samples, "seed": args.seed, "streams": args.streams,
        "mean": est.mean, "std_error": est.std_error,
        "timeout_fraction": est.timeout_fraction,
    })
    print(f"{est.mean:.10g} +- {est.std_error:.3g} "
          f"(timeouts {est.timeout_fraction:.3g})")
    return 0


_CHECK_PARAM_MAP = {
    "reflection": {},
    "tail-escape": {"m": "m_values", "alpha": "alpha", "x": "x"},
    "flatness": {"n": "n_values", "deltas": "deltas"},
    "segment": {"n": "n_values", "deltas": "deltas"},
    "escape-bounds": {"n": "n_values", "c0": "c0"},
    "away": {"n": "n_values", "set": "set_spec", "x": "x"},
    "line-decomposition": {"n": "n_values", "set": "set_spec", "x": "x"},
    "box-coupling": {"n": "n_values"},
    "halfbox": {"n": "n_values"},
    "l6-schedule": {"m": "m_values", "alpha": "alpha", "set": "set_spec", "x": "x"},
}


def _cmd_check(args, out: Path, cfg: dict, kernel) -> int:
    ids = CHECK_IDS if args.id == "all" else (args.id,)
    codes = []
    summary_rows = []
    for cid in ids:
        kwargs = {}
        mapping = _CHECK_PARAM_MAP[cid]
        for flag, kw in mapping.items():
            raw = getattr(args, flag if flag != "m" else "m", None)
            if raw is None:
                continue
            if flag == "set":
                kwargs[kw] = _parse_set(raw)
            elif flag == "x":
                kwargs[kw] = _parse_site(raw)
            elif flag in ("n", "m"):
                kwargs[kw] = tuple(raw)
            else:
                kwargs[kw] = raw
        rep = run_check(cid, out_dir=out, kernel=kernel, **kwargs)
        codes.append(_VERDICT_EXIT[rep.verdict])
        summary_rows.append(_row("check_verdict", rep.verdict, index=cid,
                                 method="check"))
        print(f"{cid}: {rep.verdict} - {rep.reason}")
    if args.id == "all":
        _write_csv(out / "check_summary.csv", summary_rows)
        _write_json(out / "check_summary.json", {
            "config": cfg,
            "verdicts": {cid: code for cid, code in zip(ids, codes)},
        })
    return _worst_exit(codes)


def _cmd_kernel(args, out: Path, cfg: dict, kernel) -> int:
    k = get_kernel(args.radius)
    if args.action == "build":
        path = Path(args.path) if args.path else out / f"kernel_{args.radius}.npz"
        path.parent.mkdir(parents=True, exist_ok=True)
        k.save(path)
        _write_json(out / "kernel_build.json", {
            "config": cfg, "radius": args.radius, "path": str(path),
            "classical_values": {
                "a(1,0)": k.a(1, 0), "a(1,1)": k.a(1, 1), "a(2,0)": k.a(2, 0),
            },
        })
        print(f"kernel radius {args.radius} saved to {path}")
        return 0
    c0 = k.c0
    _write_json(out / "kernel_c0.json", {
        "config": cfg, "radius": args.radius, "c0": c0, "kappa": KAPPA,
        "difference": c0 - KAPPA,
    })
    print(f"fitted c0 = {c0:.16f}  closed form {KAPPA:.16f}  "
          f"difference {c0 - KAPPA:.3e}")
    return 0


def _cmd_segment(args, out: Path, cfg: dict, kernel) -> int:
    rep = run_check("segment", kernel=kernel, deltas=tuple(args.deltas),
                    n_values=tuple(args.n), tolerance=args.tolerance)
    _write_csv(out / "segment.csv", rep.rows)
    _write_json(out / "segment.json", {"config": cfg, **rep.as_dict()})
    print(f"{rep.verdict}: {rep.reason}")
    return _VERDICT_EXIT[rep.verdict]


def _cmd_report(args, out: Path, cfg: dict, kernel) -> int:
    rows = []
    codes = [0]
    for path in sorted(out.glob("*.json")):
        try:
            with open(path) as fh:
                obj = json.load(fh)
        except (OSError, json.JSONDecodeError):
            continue
        name = path.stem
        if "verdict" in obj:
            rows.append(_row("verdict", obj["verdict"], index=name, method="check"))
            codes.append(_VERDICT_EXIT.get(obj["verdict"], 0))
        for key in ("c", "C", "mean", "value"):
            if key in obj and isinstance(obj[key], (int, float, str)):
                rows.append(_row(key, obj[key], index=name, method="artifact"))
    if not rows:
        print(f"no artifacts under {out}")
        return 0
    _write_csv(out / "report.csv", rows)
    for r in rows:
        print(f"{r['index']:>24}  {r['quantity']:<10} {r['value']}")
    return _worst_exit(codes)


_COMMANDS = {
    "constant-c": _cmd_constant_c,
    "scaling-limit": _cmd_scaling_limit,
    "stationary": _cmd_stationary,
    "inharmonic": _cmd_inharmonic,
    "truncated": _cmd_truncated,
    "mc": _cmd_mc,
    "check": _cmd_check,
    "kernel": _cmd_kernel,
    "segment": _cmd_segment,
    "report": _cmd_report,
}


def _apply_config(parser, cfg: dict) -> None:
    """Rewrite flag defaults from config; explicit flags still override.

    Subparsers parse into a fresh namespace, so the defaults must be planted
    on the subparser actions themselves, not on the root parser.
    """
    wanted = {k.replace("-", "_"): v for k, v in cfg.items()}
    seen = set()
    stack = [parser]
    while stack:
        p = stack.pop()
        for a in p._actions:
            if isinstance(a, argparse._SubParsersAction):
                stack.extend(a.choices.values())
            elif a.dest in wanted and a.option_strings:
                a.default = wanted[a.dest]
                seen.add(a.dest)
    missing = sorted(set(wanted) - seen)
    if missing:
        raise _CliError(f"config keys do not match any flag: {', '.join(missing)}")


def main(argv=None) -> int:
    parser = _build_parser()
    try:
        pre = _Parser(add_help=False)
        pre.add_argument("--config", default=None)
        known, _ = pre.parse_known_args(argv)
        cfg = _load_config(known.config)
        _apply_config(parser, cfg)
        args = parser.parse_args(argv)
        for attr in ("samples", "cap", "seed", "mc_samples"):
            v = getattr(args, attr, None)
            if isinstance(v, float):
                setattr(args, attr, int(v))
        if args.seed is None:
            args.seed = int(os.environ.get("HH_SEED", "0"))
        if args.threads is None:
            env = os.environ.get("HH_THREADS")
            args.threads = int(env) if env else None
        if args.threads is not None:
            try:
                import numba

                cap = numba.config.NUMBA_NUM_THREADS
                numba.set_num_threads(min(max(1, args.threads), cap))
            except ImportError:
                pass
        out = Path(args.out)
        kernel = get_kernel(args.kernel_radius) if args.kernel_radius else None
        code = _COMMANDS[args.command](args, out, cfg, kernel)
        _log(out, f"{args.command} exit {code}")
        return code
    except _CliError as e:
        print(f"usage error: {e}", file=sys.stderr)
        return _USAGE_EXIT
    except (ValueError, KeyError, RuntimeError, OSError) as e:
        print(f"error: {e}", file=sys.stderr)
        return _ERROR_EXIT


if __name__ == "__main__":
    sys.exit(main())
