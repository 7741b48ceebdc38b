"""Command-line runner: ``twistrec <subcommand> [--config PATH] [overrides]``.

Configuration is a sectioned key=value file.  Every key lives in
``[experiment]`` (shared) or in a section named after the subcommand.
Flags override the file.  The fully resolved configuration is written next
to each report as ``<subcommand>.config.ini``, so feeding it back through
``--config`` reproduces the report byte for byte.
"""

import argparse
import configparser
import csv
from dataclasses import asdict, is_dataclass
from fractions import Fraction
import io
import json
import os
import sys

import mpmath

from . import conditions, cylinders, estimators, oracle
from .errors import ConfigError, IndeterminateExcess, TwistrecError
from .systems import parse_system
from .targets import eval as psi_eval, parse_psi
from .twists import parse_twist

SUBCOMMANDS = ("measure", "pairwise", "hits", "verdict", "cylinders", "conditions", "oracle")

EXIT_OK, EXIT_CONFIG, EXIT_INDET = 0, 2, 3

DEFAULTS = {
    "experiment": {
        "system": "beta:2",
        "f": "identity",
        "psi": "power:0.01,1",
        "N": "1024",
        "samples": "10000",
        "seed": "0",
        "precision": "auto",
        "max_precision": "auto",
        "threads": "1",
        "confidence": "0.95",
    },
    "measure": {"ns": "5,10,15"},
    "pairwise": {"m_min": "10", "n_max": "40", "step": "5"},
    "hits": {},
    "verdict": {"theta_full": "0.9", "theta_null": "0.1"},
    "cylinders": {"m": "4"},
    "conditions": {"m_max": "8", "mixing_ns": "1,2,4,8"},
    "oracle": {"n": "10"},
    "output": {"out": "."},
}


# -- configuration ---------------------------------------------------------------------

def resolve_config(subcommand, path=None, overrides=None):
    """ConfigParser holding defaults, then the file, then the overrides."""
    cp = configparser.ConfigParser(interpolation=None)
    cp.optionxform = str
    used = ("experiment", subcommand, "output")
    for sec in used:
        cp[sec] = dict(DEFAULTS[sec])
    if path:
        src = configparser.ConfigParser(interpolation=None)
        src.optionxform = str
        try:
            with open(path, encoding="utf-8") as fh:
                src.read_file(fh)
        except (OSError, configparser.Error) as exc:
            raise ConfigError("config", f"cannot read {path}: {exc}") from exc
        for sec in src.sections():
            if sec not in DEFAULTS:
                raise ConfigError(sec, "unknown section")
            if sec not in used:
                continue
            for key, value in src[sec].items():
                if key not in DEFAULTS[sec]:
                    raise ConfigError(f"{sec}.{key}", "unknown key")
                cp[sec][key] = value
    for (sec, key), value in (overrides or {}).items():
        if value is not None:
            cp[sec][key] = str(value)
    return cp


def dump_config(cp):
    buf = io.StringIO()
    cp.write(buf)
    return buf.getvalue()


def _int(cp, sec, key, minimum=None):
    raw = cp[sec][key]
    try:
        v = int(raw)
    except ValueError:
        raise ConfigError(f"{sec}.{key}", f"expected an integer, got {raw!r}") from None
    if minimum is not None and v < minimum:
        raise ConfigError(f"{sec}.{key}", f"must be >= {minimum}, got {v}")
    return v


def _float(cp, sec, key, lo=None, hi=None):
    raw = cp[sec][key]
    try:
        v = float(raw)
    except ValueError:
        raise ConfigError(f"{sec}.{key}", f"expected a number, got {raw!r}") from None
    if (lo is not None and v < lo) or (hi is not None and v > hi):
        raise ConfigError(f"{sec}.{key}", f"must lie in [{lo}, {hi}], got {v}")
    return v


def _int_list(cp, sec, key):
    raw = cp[sec][key]
    try:
        vals = [int(v) for v in raw.split(",") if v.strip()]
    except ValueError:
        raise ConfigError(f"{sec}.{key}", f"expected comma-separated integers, got {raw!r}") from None
    if not vals or min(vals) < 1:
        raise ConfigError(f"{sec}.{key}", "needs positive integers")
    return vals


def _opt_bits(cp, key):
    raw = cp["experiment"][key]
    if raw == "auto":
        return None
    return _int(cp, "experiment", key, 16)


class Context:
    """Validated values from a resolved configuration."""

    def __init__(self, cp):
        ex = "experiment"
        self.cp = cp
        self.system = parse_system(cp[ex]["system"])
        self.f = parse_twist(cp[ex]["f"])
        self.psi = parse_psi(cp[ex]["psi"])
        self.N = _int(cp, ex, "N", 2)
        self.samples = _int(cp, ex, "samples", 1)
        self.seed = _int(cp, ex, "seed", 0)
        if self.seed >= 1 << 64:
            raise ConfigError("experiment.seed", "must fit in 64 bits")
        self.precision = _opt_bits(cp, "precision")
        self.max_precision = _opt_bits(cp, "max_precision")
        self.threads = _int(cp, ex, "threads", 1)
        self.confidence = _float(cp, ex, "confidence", 0.5, 0.999999)
        self.out = cp["output"]["out"]

    @property
    def kw(self):
        return {"prec": self.precision, "max_prec": self.max_precision}

    def need_samples(self, minimum=100):
        if self.samples < minimum:
            raise ConfigError("experiment.samples", f"must be >= {minimum}, got {self.samples}")


# -- output helpers -------------------------------------------------------------------------

def fmt(v):
    """Locale-free, round-trippable number formatting."""
    if isinstance(v, bool) or v is None:
        return str(v)
    if isinstance(v, int):
        return str(v)
    if isinstance(v, Fraction):
        return repr(float(v))
    return repr(float(v))


def jsonable(obj):
    if is_dataclass(obj):
        return jsonable(asdict(obj))
    if isinstance(obj, dict):
        return {str(k): jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [jsonable(v) for v in obj]
    if isinstance(obj, bool) or obj is None or isinstance(obj, (str, int)):
        return obj
    if isinstance(obj, (float, Fraction)) or type(obj).__name__ == "mpf":
        return float(obj)
    return str(obj)


def write_csv(path, header, rows):
    with open(path, "w", encoding="utf-8", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for row in rows:
            w.writerow([v if isinstance(v, str) else fmt(v) for v in row])


def write_json(path, data):
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        json.dump(jsonable(data), fh, indent=2, sort_keys=True)
        fh.write("\n")


# -- subcommands -------------------------------------------------------------------------------

def run_measure(ctx):
    ctx.need_samples()
    ns = _int_list(ctx.cp, "measure", "ns")
    est = estimators.estimate_mu_An_sweep(ctx.system, ctx.f, ctx.psi, ns, ctx.samples, ctx.seed,
                                          ctx.confidence, workers=ctx.threads, **ctx.kw)
    rows = [(n, psi_eval(ctx.psi, n), e.mean, e.ci_low, e.ci_high, e.indeterminate_count, e.n_samples, e.seed)
            for n, e in sorted(est.items())]
    path = os.path.join(ctx.out, "measure.csv")
    write_csv(path, ("n", "psi_n", "mean", "ci_low", "ci_high", "indet", "samples", "seed"), rows)
    return [path]


def run_pairwise(ctx):
    ctx.need_samples()
    sec = "pairwise"
    m_min = _int(ctx.cp, sec, "m_min", 1)
    n_max = _int(ctx.cp, sec, "n_max", 2)
    step = _int(ctx.cp, sec, "step", 1)
    if n_max <= m_min:
        raise ConfigError("pairwise.n_max", "must exceed pairwise.m_min")
    grid = range(m_min, n_max + 1, step)
    pairs = [(m, n) for m in grid for n in grid if n > m]
    if not pairs:
        raise ConfigError("pairwise.step", "grid has no pairs m < n")
    reps = estimators.pairwise_grid(ctx.system, ctx.f, ctx.psi, pairs, ctx.samples, ctx.seed,
                                    ctx.confidence, workers=ctx.threads, **ctx.kw)
    rows = [(r.m, r.n, r.est_joint.mean, r.marg_m.mean, r.marg_n.mean, r.bound_value, r.ratio) for r in reps]
    path = os.path.join(ctx.out, "pairwise.csv")
    write_csv(path, ("m", "n", "joint", "marg_m", "marg_n", "bound", "ratio"), rows)
    return [path]


def _stats(ctx):
    return estimators.hit_statistics(ctx.system, ctx.f, ctx.psi, ctx.N, ctx.samples, ctx.seed,
                                     workers=ctx.threads, **ctx.kw)


def run_hits(ctx):
    st = _stats(ctx)
    path = os.path.join(ctx.out, "hits.csv")
    write_csv(path, ("point_index", "n"), [(r.point_index, n) for r in st.records for n in r.hit_times])
    summary = {k: getattr(st, k) for k in ("N", "samples", "seed", "mean_S_N", "tail_fraction",
                                           "tail_fraction_high", "sum_mu_hat", "sum_psi_delta",
                                           "indeterminate_count")}
    summary["indeterminate"] = [[r.point_index, n] for r in st.records for n in r.indeterminate_times]
    spath = os.path.join(ctx.out, "hits_summary.json")
    write_json(spath, summary)
    return [path, spath]


def run_verdict(ctx):
    if not ctx.psi.tends_to_zero:
        raise ConfigError("experiment.psi", "verdict needs lim psi(n) = 0, a hypothesis of the zero-one law")
    theta_full = _float(ctx.cp, "verdict", "theta_full", 0, 1)
    theta_null = _float(ctx.cp, "verdict", "theta_null", 0, 1)
    if theta_null >= theta_full:
        raise ConfigError("verdict.theta_null", "must be below verdict.theta_full")
    v = estimators.verdict(ctx.system, ctx.f, ctx.psi, ctx.N, ctx.samples, ctx.seed, theta_full, theta_null,
                           workers=ctx.threads, **ctx.kw)
    data = dict(v.evidence)
    data["config"] = {s: dict(ctx.cp[s]) for s in ctx.cp.sections()}
    path = os.path.join(ctx.out, "verdict.json")
    write_json(path, data)
    print(v.cls)
    return [path]


def run_cylinders(ctx):
    m = _int(ctx.cp, "cylinders", "m", 1)
    rows = []
    for word, g in cylinders.cylinders_of_order(ctx.system, m):
        rows.append((" ".join(map(str, word.digits)), g.left, g.right, g.k_j,
                     "" if g.is_full is None else str(bool(g.is_full)), "" if g.mu is None else g.mu))
    path = os.path.join(ctx.out, "cylinders.csv")
    with mpmath.workprec(128):
        rows = [tuple(v if isinstance(v, str) else fmt(v) for v in r) for r in rows]
    write_csv(path, ("word", "left", "right", "k_j", "is_full", "mu"), rows)
    return [path]


def run_conditions(ctx):
    m_max = _int(ctx.cp, "conditions", "m_max", 1)
    mixing_ns = _int_list(ctx.cp, "conditions", "mixing_ns")
    rep = conditions.condition_report(ctx.system, m_max, tuple(mixing_ns), ctx.seed)
    rep["config"] = {s: dict(ctx.cp[s]) for s in ctx.cp.sections()}
    path = os.path.join(ctx.out, "conditions.json")
    write_json(path, rep)
    return [path]


def run_oracle(ctx):
    n = _int(ctx.cp, "oracle", "n", 1)
    try:
        b = oracle._base(ctx.system)
    except TwistrecError as exc:
        raise ConfigError("experiment.system", str(exc)) from None
    psi_n = oracle._psi_exact(ctx.psi, n)
    rows = oracle.An_branch_table(b, ctx.f, psi_n, n)
    total = sum((r[3] for r in rows), Fraction(0))
    path = os.path.join(ctx.out, "oracle.csv")
    write_csv(path, ("branch", "lo", "hi", "length"), [(k, str(lo), str(hi), str(ln)) for k, lo, hi, ln in rows])
    jpath = os.path.join(ctx.out, "oracle.json")
    write_json(jpath, {"n": n, "psi_n": str(psi_n), "leb_exact": str(total), "leb": float(total),
                       "two_psi": float(2 * psi_n), "intervals": len(rows)})
    return [path, jpath]


RUNNERS = {
    "measure": run_measure, "pairwise": run_pairwise, "hits": run_hits, "verdict": run_verdict,
    "cylinders": run_cylinders, "conditions": run_conditions, "oracle": run_oracle,
}


def build_parser():
    ap = argparse.ArgumentParser(prog="twistrec", description="Twisted recurrence experiments.")
    ap.add_argument("subcommand", choices=SUBCOMMANDS)
    ap.add_argument("--config", metavar="PATH")
    ap.add_argument("--seed", type=int)
    ap.add_argument("--samples", type=int)
    ap.add_argument("--out", metavar="DIR")
    ap.add_argument("--threads", type=int)
    ap.add_argument("--precision", type=int, metavar="BITS")
    ap.add_argument("--max-precision", type=int, metavar="BITS")
    ap.add_argument("--system")
    ap.add_argument("--f")
    ap.add_argument("--psi")
    ap.add_argument("--N", type=int)
    ap.add_argument("--set", action="append", default=[], metavar="SECTION.KEY=VALUE",
                    help="override any configuration key")
    return ap


def _overrides(args):
    ov = {}
    for key in ("seed", "samples", "threads", "precision", "system", "f", "psi", "N"):
        ov[("experiment", key)] = getattr(args, key)
    ov[("experiment", "max_precision")] = args.max_precision
    ov[("output", "out")] = args.out
    for item in args.set:
        lhs, sep, value = item.partition("=")
        sec, dot, key = lhs.partition(".")
        if not sep or not dot:
            raise ConfigError("--set", f"expected SECTION.KEY=VALUE, got {item!r}")
        if sec not in DEFAULTS or key not in DEFAULTS[sec]:
            raise ConfigError(lhs, "unknown key")
        ov[(sec, key)] = value
    return ov


def run(subcommand, cp):
    """Run one subcommand on a resolved config; returns written paths."""
    ctx = Context(cp)
    os.makedirs(ctx.out, exist_ok=True)
    paths = RUNNERS[subcommand](ctx)
    cpath = os.path.join(ctx.out, f"{subcommand}.config.ini")
    with open(cpath, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(dump_config(cp))
    return paths + [cpath]


def main(argv=None):
    args = build_parser().parse_args(argv)
    try:
        cp = resolve_config(args.subcommand, args.config, _overrides(args))
        paths = run(args.subcommand, cp)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except IndeterminateExcess as exc:
        print(f"indeterminate excess: {exc}", file=sys.stderr)
        return EXIT_INDET
    except (ValueError, TwistrecError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    for p in paths:
        print(p)
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
