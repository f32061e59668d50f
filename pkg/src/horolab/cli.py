"""horolab command line: experiment sweeps written as CSV or JSON.

Every file starts with the tool version and the full configuration. Thread
count is left out of that echo on purpose, since results never depend on it.
"""

from __future__ import annotations

import argparse
import json
import math
import os
import sys
import warnings
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from . import __version__
from .dynamics import FareyFraction, cusp_probe, equidist_ratio, fit_exponent
from .errors import HorolabError, NumericalError, ValidationError
from .halfplane import Box, HPoint, box_area, domain_area, horocycle_image, reduce_to_fundamental
from .lattice import eisenstein_direct, eisenstein_star, theta1, theta2
from .modfun import BUILTINS, builtin, constant_term
from .specialfn import zeta_zero_find
from .transforms import (
    _poles, a0_values, asymptotic_fit, growth_terms, i_of_t_many, inversion_check, large_t_law,
    rs_context, rs_transform, small_t_law, theta_pairing,
)

EXIT_OK, EXIT_VALIDATION, EXIT_NUMERICAL = 0, 2, 3
COLUMNS = ("param", "value_re", "value_im", "err_est")


@dataclass
class RunConfig:
    command: str
    function: dict = field(default_factory=dict)
    grids: dict = field(default_factory=dict)
    eps: float = 1e-10
    threads: int = 1
    fmt: str = "csv"
    output: str = "-"
    extra: dict = field(default_factory=dict)

    def __post_init__(self):
        if not 1e-14 <= self.eps <= 1e-2:
            raise ValidationError("eps must lie in [1e-14, 1e-2]")
        for name, g in self.grids.items():
            if len(g) == 0:
                raise ValidationError(f"grid {name} is empty")
            keys = [(complex(v).real, complex(v).imag) for v in g]
            if any(b < a for a, b in zip(keys, keys[1:])):
                raise ValidationError(f"grid {name} must be sorted")
        if self.threads < 1:
            raise ValidationError("threads must be >= 1")

    def echo(self) -> dict:
        grids = {k: [_cjson(v) if isinstance(v, complex) else v for v in g] for k, g in self.grids.items()}
        return {"command": self.command, "function": self.function, "grids": grids,
                "eps": self.eps, "format": self.fmt, **self.extra}


# -- parsing helpers ----------------------------------------------------------------

def parse_grid(text: str) -> list:
    """'1,2,4' as given, or 'lo:hi:n' for n log-spaced points."""
    text = text.strip()
    if ":" in text:
        parts = text.split(":")
        if len(parts) != 3:
            raise ValidationError(f"bad grid {text!r}; use lo:hi:n")
        lo, hi, n = float(parts[0]), float(parts[1]), int(parts[2])
        if not (0 < lo <= hi and n >= 1):
            raise ValidationError(f"bad grid {text!r}")
        return [float(v) for v in np.geomspace(lo, hi, n)]
    try:
        return [float(v) for v in text.split(",") if v.strip()]
    except ValueError as exc:
        raise ValidationError(f"bad grid {text!r}") from exc


def parse_complex_grid(text: str) -> list:
    try:
        return [complex(v.replace(" ", "")) for v in text.split(",") if v.strip()]
    except ValueError as exc:
        raise ValidationError(f"bad complex grid {text!r}") from exc


def parse_cusp(text: str) -> FareyFraction:
    try:
        a, c = text.split("/")
        return FareyFraction(int(a), int(c))
    except ValueError as exc:
        raise ValidationError(f"cusp must look like a/c, got {text!r}") from exc


def _fn_params(args) -> dict:
    name = args.fn
    if name not in BUILTINS:
        raise ValidationError(f"unknown builtin {name!r}; expected one of {', '.join(BUILTINS)}")
    keys = {"poincare_typeII": ("alpha", "log_power"), "poincare_heterotic": ("alpha", "beta", "kappa"),
            "eisenstein_fixed": ("s0",)}.get(name, ())
    out = {"name": name}
    for k in keys:
        v = getattr(args, k)
        if v is not None:
            if k == "alpha":
                try:
                    v = float(v)
                except ValueError:
                    pass  # complex exponents stay as typed
            out[k] = v
    return out


def _make_fn(spec: dict):
    params = {k: v for k, v in spec.items() if k != "name"}
    if "log_power" in params:
        params["n"] = params.pop("log_power")
    if "alpha" in params:
        params["alpha"] = complex(params["alpha"]) if isinstance(params["alpha"], str) else params["alpha"]
    return builtin(spec["name"], **params)


def _map(fn, items, threads):
    """Ordered map; the result order never depends on the thread count."""
    if threads <= 1 or len(items) <= 1:
        return [fn(v) for v in items]
    with ThreadPoolExecutor(threads) as ex:
        return list(ex.map(fn, items))


# -- commands -----------------------------------------------------------------------
# each returns (rows, meta) with rows of (param, complex value, err_est)

def cmd_reduce(cfg, args):
    z = HPoint(args.x, args.y)
    r = reduce_to_fundamental(z)
    a, b, c, d = r.matrix.as_tuple()
    rows = [("z", complex(r.point.x, r.point.y), 0.0)]
    rows += [(k, complex(v), 0.0) for k, v in zip("abcd", (a, b, c, d))]
    rows.append(("steps", complex(r.steps), 0.0))
    return rows, {}


def cmd_horocycle_plot(cfg, args):
    res = horocycle_image(args.y, args.n)
    rows = [(str(k), complex(r.point.x, r.point.y), 0.0) for k, r in enumerate(res)]
    return rows, {"note": "value_re, value_im are the reduced x, y of the k-th midpoint"}


def cmd_eval(cfg, args):
    z = HPoint(args.x, args.y)
    kind = args.kind
    grid = cfg.grids["param"]
    budget = cfg.eps

    def one(p):
        if kind == "theta1":
            return complex(theta1(p, budget))
        if kind == "theta2":
            return complex(theta2(p, z, budget))
        if kind == "eisenstein":
            return complex(eisenstein_direct(p, z, budget))
        return complex(eisenstein_star(p, z, budget))

    vals = _map(one, grid, cfg.threads)
    return [(_fmt_param(p), v, cfg.eps) for p, v in zip(grid, vals)], {}


def cmd_avg(cfg, args):
    f = _make_fn(cfg.function)
    ys = cfg.grids["y"]
    vals = _map(lambda y: constant_term(f, y, budget=cfg.eps, use_exact=False), ys, cfg.threads)
    rows = []
    for y, v in zip(ys, vals):
        err = cfg.eps * max(abs(v), 1e-300)
        if f.exact_a0 is not None and y >= f.exact_a0_ymin:
            err = abs(v - complex(f.exact_a0(y)))
        rows.append((_fmt_param(y), v, err))
    return rows, {"err_est": "distance to the unfolded constant term where one exists, else eps*|a0|"}


def cmd_unfold_check(cfg, args):
    f = _make_fn(cfg.function)
    ts = cfg.grids["t"]
    its = i_of_t_many(f, ts)
    pairs = _map(lambda t: theta_pairing(f, t, budget=cfg.eps), ts, cfg.threads)
    rows = []
    for t, i, p in zip(ts, its, pairs):
        res = abs(p - i) / max(abs(i), 1e-300)
        rows.append((f"{_fmt_param(t)}:pairing", p, res))
        rows.append((f"{_fmt_param(t)}:i_of_t", i, res))
    return rows, {"err_est": "relative residual between the two routes"}


def cmd_lemma_check(cfg, args):
    f = _make_fn(cfg.function)
    checks = inversion_check(f, cfg.grids["t"], constant=args.constant)
    rows = []
    for c in checks:
        rows.append((f"{_fmt_param(c.t)}:lhs", c.lhs, c.residual))
        rows.append((f"{_fmt_param(c.t)}:rhs", c.rhs, c.residual))
    return rows, {"constant": args.constant, "C": _cjson(checks[0].constant)}


def cmd_i_asym(cfg, args):
    f = _make_fn(cfg.function)
    ts = np.array(cfg.grids["t"])
    terms = growth_terms(f)
    its = i_of_t_many(f, ts)
    from .transforms import integral_C
    C = integral_C(f) / 2
    big = large_t_law(terms, ts) if terms else np.zeros(ts.size)
    small = small_t_law(terms, C, ts)
    rows = []
    for t, i, lb, ls in zip(ts, its, big, small):
        p = _fmt_param(t)
        rows.append((f"{p}:i", i, cfg.eps))
        if lb != 0:
            rows.append((f"{p}:ratio_large_t", i / lb, abs(i / lb - 1)))
        rows.append((f"{p}:ratio_small_t", i / ls, abs(i / ls - 1)))
    return rows, {"C": _cjson(C), "err_est": "distance of the ratio from 1 (the law's own error)"}


def cmd_rs(cfg, args):
    f = _make_fn(cfg.function)
    ctx = rs_context(f)
    ss = cfg.grids["s"]
    rows = [(_fmt_param(s), rs_transform(f, s, context=ctx), cfg.eps) for s in ss]
    if args.poles:
        delta = args.pole_offset
        for loc, res in _poles(ctx.terms, ctx.C):
            s = complex(loc) + delta
            fit = delta * rs_transform(f, s, context=ctx)
            err = abs(fit - res) if res is not None else math.nan
            rows.append((f"pole@{_fmt_param(loc)}", fit, err))
    return rows, {"C": _cjson(ctx.C), "pole_offset": args.pole_offset if args.poles else None}


def cmd_fit(cfg, args):
    f = _make_fn(cfg.function)
    ys = cfg.grids["y"]
    a0 = a0_values(f, ys, sampled=args.sampled, budget=cfg.eps)
    r = asymptotic_fit(list(zip(ys, a0)), f.growth, zero_terms=args.zero_terms)
    rows = [("C0_hat", r.C0_hat, math.nan)] + [(label, c, math.nan) for label, c in r.term_coeffs]
    meta = {"residual_exponent": r.residual_exponent, "condition_number": r.condition_number,
            "flags": list(r.flags)}
    if f.exact_C0 is not None:
        ref = 3 / math.pi * complex(f.exact_C0)
        rows[0] = ("C0_hat", r.C0_hat, abs(r.C0_hat - ref))
        meta["C0_reference"] = _cjson(ref)
    return rows, meta


def cmd_equidist(cfg, args):
    u = Box(*args.box)
    ys = cfg.grids["y"]
    ratios = _map(lambda y: equidist_ratio(y, u, args.n, threads=1), ys, cfg.threads)
    target = box_area(u) / domain_area()
    rows = [(_fmt_param(y), complex(r), 1 / args.n) for y, r in zip(ys, ratios)]
    meta = {"target": target}
    if len(ys) >= 2 and ys[-1] / ys[0] >= 100 and all(r != target for r in ratios):
        fit = fit_exponent(ys, np.array(ratios) - target, args.n)
        rows.append(("exponent", complex(fit.exponent), math.nan))
        meta["flags"] = list(fit.flags)
    return rows, meta


def cmd_cusp_probe(cfg, args):
    f = _make_fn(cfg.function)
    p = cusp_probe(f, parse_cusp(args.cusp), cfg.grids["y"])
    rows = [(_fmt_param(y), v, abs(v / pred - 1)) for y, v, pred in p.samples]
    rows += [("slope", complex(p.slope), math.nan), ("slope_transport", complex(p.slope_transport), 0.0),
             ("slope_printed", complex(p.slope_printed), 0.0)]
    return rows, {"flags": list(p.flags), "err_est": "relative distance to the transported prediction"}


def cmd_zeros(cfg, args):
    if args.count < 1:
        raise ValidationError("count must be >= 1")
    return [(str(k), complex(zeta_zero_find(k)), 1e-12) for k in range(1, args.count + 1)], {}


COMMANDS = {
    "reduce": cmd_reduce, "horocycle-plot": cmd_horocycle_plot, "eval": cmd_eval, "avg": cmd_avg,
    "unfold-check": cmd_unfold_check, "lemma-check": cmd_lemma_check, "i-asym": cmd_i_asym, "rs": cmd_rs,
    "fit": cmd_fit, "equidist": cmd_equidist, "cusp-probe": cmd_cusp_probe, "zeros": cmd_zeros,
}


# -- output -------------------------------------------------------------------------

def _fmt_param(p) -> str:
    p = complex(p)
    if p.imag == 0:
        return repr(float(p.real))
    return f"{p.real!r}{p.imag:+}j"


def _fnum(v: float) -> str:
    return repr(float(v))


def _cjson(z):
    z = complex(z)
    return [z.real, z.imag]


def render(cfg: RunConfig, rows, meta) -> str:
    head = {"tool": "horolab", "version": __version__, "config": cfg.echo(), **meta}
    if cfg.fmt == "json":
        body = [{"param": p, "value_re": v.real, "value_im": v.imag, "err_est": e} for p, v, e in rows]
        return json.dumps({"meta": head, "rows": body}, indent=1, sort_keys=True, allow_nan=True) + "\n"
    lines = ["# " + json.dumps(head, sort_keys=True), ",".join(COLUMNS)]
    for p, v, e in rows:
        lines.append(",".join((p if "," not in p else f'"{p}"', _fnum(v.real), _fnum(v.imag), _fnum(e))))
    return "\n".join(lines) + "\n"


# -- argument parser ----------------------------------------------------------------

def _add_common(p):
    p.add_argument("--eps", type=float, default=1e-10, help="error budget in [1e-14, 1e-2]")
    p.add_argument("--threads", type=int, default=None, help="worker threads (default: $HOROLAB_THREADS or 1)")
    p.add_argument("--out", choices=("csv", "json"), default="csv", help="output format")
    p.add_argument("--output", "-o", default="-", help="output path, '-' for stdout")


def _add_fn(p, default="poincare_typeII"):
    p.add_argument("--fn", default=default, help=f"builtin function ({', '.join(BUILTINS)})")
    p.add_argument("--alpha", default=None, help="growth exponent (typeII, heterotic)")
    p.add_argument("--beta", type=float, default=None, help="exponential rate (heterotic)")
    p.add_argument("--kappa", type=int, default=None, help="Fourier index of the seed (heterotic)")
    p.add_argument("--s0", type=float, default=None, help="Eisenstein parameter")
    p.add_argument("--log-power", dest="log_power", type=int, default=None, help="log power n (typeII)")


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="horolab", description=__doc__.splitlines()[0])
    ap.add_argument("--version", action="version", version=f"horolab {__version__}")
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("reduce", help="reduce a point to the fundamental domain")
    p.add_argument("--x", type=float, required=True)
    p.add_argument("--y", type=float, required=True)
    _add_common(p)

    p = sub.add_parser("horocycle-plot", help="reduced midpoints of the closed horocycle at height y")
    p.add_argument("--y", type=float, required=True)
    p.add_argument("--n", type=int, required=True)
    _add_common(p)

    p = sub.add_parser("eval", help="theta1 | theta2 | eisenstein | estar on a parameter grid")
    p.add_argument("--kind", choices=("theta1", "theta2", "eisenstein", "estar"), required=True)
    p.add_argument("--x", type=float, default=0.0)
    p.add_argument("--y", type=float, default=1.0)
    p.add_argument("--param", required=True, help="t grid (theta) or s grid (Eisenstein)")
    _add_common(p)

    p = sub.add_parser("avg", help="sampled horocycle average a0(y)")
    _add_fn(p)
    p.add_argument("--y", required=True, help="y grid")
    _add_common(p)

    p = sub.add_parser("unfold-check", help="theta pairing against i(t)")
    _add_fn(p)
    p.add_argument("--t", required=True, help="t grid")
    _add_common(p)

    p = sub.add_parser("lemma-check", help="inversion identity for i(t)")
    _add_fn(p)
    p.add_argument("--t", default="0.2:5:9", help="t grid")
    p.add_argument("--constant", choices=("integral", "half"), default="integral")
    _add_common(p)

    p = sub.add_parser("i-asym", help="i(t) against its small- and large-t laws")
    _add_fn(p)
    p.add_argument("--t", default="0.001,0.01,10,100", help="t grid")
    _add_common(p)

    p = sub.add_parser("rs", help="Rankin-Selberg transform values and pole residues")
    _add_fn(p)
    p.add_argument("--s", required=True, help="comma-separated (complex) s values")
    p.add_argument("--poles", action="store_true", help="also fit residues at every pole")
    p.add_argument("--pole-offset", dest="pole_offset", type=float, default=1e-3)
    _add_common(p)

    p = sub.add_parser("fit", help="small-y asymptotic fit of a0")
    _add_fn(p)
    p.add_argument("--y", default="0.001:0.05:24", help="y grid inside (0, 0.2]")
    p.add_argument("--zero-terms", dest="zero_terms", type=int, default=0)
    p.add_argument("--sampled", action="store_true", help="sample a0 instead of using the unfolded form")
    _add_common(p)

    p = sub.add_parser("equidist", help="share of a long horocycle inside a box")
    p.add_argument("--box", type=float, nargs=4, metavar=("X_LO", "X_HI", "Y_LO", "Y_HI"),
                   default=(0.1, 0.4, 1.2, 2.0))
    p.add_argument("--y", default="1e-4,3e-4,1e-3,3e-3,1e-2", help="y grid")
    p.add_argument("--n", type=int, default=10 ** 6)
    _add_common(p)

    p = sub.add_parser("cusp-probe", help="values of f straight down onto a rational cusp")
    _add_fn(p, default="poincare_heterotic")
    p.add_argument("--cusp", default="1/2", help="a/c")
    p.add_argument("--y", default="0.02,0.03,0.04,0.05,0.06", help="y grid")
    _add_common(p)

    p = sub.add_parser("zeros", help="ordinates of the first zeta zeros")
    p.add_argument("--count", type=int, default=3)
    _add_common(p)
    return ap


def _config(args) -> RunConfig:
    threads = args.threads
    if threads is None:
        env = os.environ.get("HOROLAB_THREADS", "")
        try:
            threads = int(env) if env else 1
        except ValueError as exc:
            raise ValidationError(f"HOROLAB_THREADS must be an integer, got {env!r}") from exc
    grids, extra = {}, {}
    function = _fn_params(args) if hasattr(args, "fn") else {}
    cmd = args.command
    if cmd == "eval":
        grids["param"] = parse_complex_grid(args.param) if args.kind in ("eisenstein", "estar") \
            else parse_grid(args.param)
        extra.update(kind=args.kind, x=args.x, y=args.y)
    elif cmd == "rs":
        grids["s"] = parse_complex_grid(args.s)
        extra.update(poles=args.poles)
    elif cmd in ("avg", "fit", "equidist", "cusp-probe"):
        grids["y"] = parse_grid(args.y)
    elif cmd in ("unfold-check", "lemma-check", "i-asym"):
        grids["t"] = parse_grid(args.t)
    if cmd == "reduce":
        extra.update(x=args.x, y=args.y)
    elif cmd == "horocycle-plot":
        extra.update(y=args.y, n=args.n)
    elif cmd == "lemma-check":
        extra.update(constant=args.constant)
    elif cmd == "fit":
        extra.update(zero_terms=args.zero_terms, sampled=args.sampled)
    elif cmd == "equidist":
        extra.update(box=list(args.box), n=args.n)
    elif cmd == "cusp-probe":
        extra.update(cusp=args.cusp)
    elif cmd == "zeros":
        extra.update(count=args.count)
    return RunConfig(cmd, function, grids, args.eps, threads, args.out, args.output, extra)


def run(argv=None) -> int:
    ap = build_parser()
    try:
        args = ap.parse_args(argv)
    except SystemExit as exc:
        return EXIT_OK if exc.code in (0, None) else EXIT_VALIDATION
    try:
        cfg = _config(args)
        with warnings.catch_warnings(record=True) as caught:
            warnings.simplefilter("always")
            rows, meta = COMMANDS[args.command](cfg, args)
        if caught:
            meta = {**meta, "warnings": sorted({str(w.message) for w in caught})}
        text = render(cfg, rows, meta)
    except ValidationError as exc:
        print(f"horolab: invalid input: {exc}", file=sys.stderr)
        return EXIT_VALIDATION
    except (NumericalError, ArithmeticError) as exc:
        print(f"horolab: numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL
    except HorolabError as exc:
        print(f"horolab: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL
    try:
        if cfg.output == "-":
            sys.stdout.write(text)
        else:
            with open(cfg.output, "w", encoding="utf-8") as fh:
                fh.write(text)
    except OSError as exc:
        print(f"horolab: cannot write output: {exc}", file=sys.stderr)
        return EXIT_VALIDATION
    return EXIT_OK


def main() -> None:
    sys.exit(run())
