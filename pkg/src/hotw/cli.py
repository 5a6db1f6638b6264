"""Command-line front end: dist, chi, tail and limit reports as CSV or JSON."""
import argparse
import json
import logging
import sys
import warnings
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .asymptotics import estimate_chi, fit_slope, tail_fit
from .cache import ResultCache, canonical_key
from .exceptions import HOTWError, InvalidArgumentError, NoConvergenceError, UnresolvedError
from .fredholm import M_CAP, evaluate_grid, one_minus_F
from .limitdist import F_inf, LimitKernel, ParametrixConfig
from .painleve import KernelEvaluator, ModelParams

log = logging.getLogger(__name__)

EXIT_OK, EXIT_PARTIAL, EXIT_UNRESOLVED, EXIT_CONFIG = 0, 2, 3, 4
CSV_HEADER = "s,F,density,err_est"

DEFAULT_RANGES = {
    "dist": (-6.0, 3.0, 0.1),
    "chi": (None, -0.5, 0.5),
    "tail": (1.5, 4.0, 0.25),
    "limit": (-0.5, 0.95, 0.05),
}


@dataclass
class RunConfig:
    command: str
    k: int = 0
    t: tuple = ()
    s_min: float = None
    s_max: float = None
    step: float = None
    rh_tol: float = 1e-12
    det_tol: float = 1e-12
    m_cap: int = M_CAP
    out: str = None
    format: str = None
    cache_dir: str = None
    emit_plot: str = None
    extra: dict = field(default_factory=dict)

    def __post_init__(self):
        lo, hi, st = DEFAULT_RANGES[self.command]
        self.s_min = lo if self.s_min is None else self.s_min
        self.s_max = hi if self.s_max is None else self.s_max
        self.step = st if self.step is None else self.step
        if self.format is None:
            self.format = "json" if self.command in ("chi", "tail") else "csv"
        self.validate()

    def validate(self):
        if self.format not in ("csv", "json"):
            raise InvalidArgumentError("format must be csv or json")
        if not self.step > 0:
            raise InvalidArgumentError("step must be positive")
        if self.k < 0:
            raise InvalidArgumentError("k must be nonnegative")
        if self.t and len(self.t) != 2 * self.k:
            raise InvalidArgumentError(f"t must have 2k = {2 * self.k} entries")
        if self.rh_tol < 1e-13 or self.det_tol < 1e-13:
            raise InvalidArgumentError("tolerances must be >= 1e-13")
        if self.s_min is not None and self.s_max < self.s_min:
            raise InvalidArgumentError("s-max must not be below s-min")
        if self.m_cap < 40:
            raise InvalidArgumentError("m-cap must be >= 40")

    def grid(self):
        n = int(np.floor((self.s_max - self.s_min) / self.step + 1e-9)) + 1
        return np.round(self.s_min + self.step * np.arange(n), 12)


def fmt(x):
    """Decimal with 16 significant digits; nan/inf spelled out."""
    x = float(x)
    if not np.isfinite(x):
        return "nan" if np.isnan(x) else ("inf" if x > 0 else "-inf")
    return f"{x:.16g}"


def to_csv(rows):
    lines = [CSV_HEADER] + [",".join(fmt(v) for v in r) for r in rows]
    return "\n".join(lines) + "\n"


def _row_cache_key(cfg, kind, s):
    return canonical_key(kind, k=cfg.k, t=list(cfg.t), rh_tol=cfg.rh_tol, det_tol=cfg.det_tol,
                         m_cap=cfg.m_cap, s=float(s))


def _cached_rows(cfg, kind, grid, compute):
    """Rows (s, F, density, err) with per-point replay from the cache."""
    cache = ResultCache(cfg.cache_dir)
    rows, todo = {}, []
    for s in grid:
        hit = cache.get(_row_cache_key(cfg, kind, s))
        if hit is not None:
            rows[float(s)] = tuple(float(v) for v in hit[1]["row"])
        else:
            todo.append(float(s))
    if todo:
        for s, r in zip(todo, compute(cache, todo)):
            row = (s, r.F, r.density, r.err)
            rows[s] = row
            if np.isfinite(r.err):
                cache.put(_row_cache_key(cfg, kind, s), {"m": r.m, "b": r.b},
                          {"row": np.array(row, dtype=float)})
    return [rows[float(s)] for s in grid]


def _model(cfg):
    return ModelParams(cfg.k, tuple(cfg.t), tol=cfg.rh_tol)


def cmd_dist(cfg):
    def compute(cache, pts):
        ev = KernelEvaluator.solve(_model(cfg), cache=cache)
        return evaluate_grid(ev, pts, cfg.det_tol, cfg.m_cap)
    rows = _cached_rows(cfg, "dist", cfg.grid(), compute)
    code = EXIT_UNRESOLVED if any(np.isnan(r[3]) for r in rows) else EXIT_OK
    return rows, code


def cmd_limit(cfg):
    r = cfg.extra.get("r", 0.25)
    pts = cfg.grid()
    if pts[0] <= -1 or pts[-1] >= 1:
        raise InvalidArgumentError("limit grid must lie inside (-1, 1)")

    def compute(cache, todo):
        ker = LimitKernel.solve(ParametrixConfig(r), max(cfg.rh_tol, 1e-10), cache=cache)
        out = []
        for s in todo:
            try:
                out.append(F_inf(ker, s, cfg.det_tol, cfg.m_cap))
            except UnresolvedError as err:
                res = err.best
                res.err = float("nan")
                out.append(res)
        return out
    rows = _cached_rows(cfg, f"limit-r{r}", pts, compute)
    code = EXIT_UNRESOLVED if any(np.isnan(r[3]) for r in rows) else EXIT_OK
    return rows, code


def residual_slope(grid, chi_values, chi, noise):
    """Slope of log|chi(s) - chi| against log|s| where the residual clears the noise."""
    grid = np.asarray(grid, dtype=float)
    r = np.abs(np.asarray(chi_values) - chi)
    keep = (r > 100 * noise) & (grid < 0)
    if keep.sum() < 3:
        return float("nan")
    return fit_slope(np.log(np.abs(grid[keep])), np.log(r[keep]))[0]


def cmd_chi(cfg):
    ev = KernelEvaluator.solve(_model(cfg), cache=ResultCache(cfg.cache_dir))
    code = EXIT_OK
    kw = {"M": cfg.s_max, "tol": cfg.extra.get("tol", 1e-6), "det_tol": max(cfg.det_tol, 1e-13),
          "rh_tail": ev.solution.tail}
    if cfg.s_min is not None:
        kw["s_deep"] = cfg.s_min
    try:
        est = estimate_chi(ev, cfg.k, **kw)
    except NoConvergenceError as err:
        est = err.diagnostics["estimate"]
        code = EXIT_UNRESOLVED
    if code == EXIT_OK and not est.converged:
        code = EXIT_PARTIAL
    rep = est.as_dict()
    noise = max(est.spread, float(np.max(est.point_errors)))
    rep["slope"] = residual_slope(est.grid, est.chi_values, est.value, noise)
    rep["params"] = {"k": cfg.k, "t": list(ev.params.t), "rh_tol": cfg.rh_tol, "det_tol": cfg.det_tol}
    return rep, code


def cmd_tail(cfg):
    ev = KernelEvaluator.solve(_model(cfg), cache=ResultCache(cfg.cache_dir))
    grid = cfg.grid()
    if grid[0] <= 1:
        raise InvalidArgumentError("tail grid must lie in (1, inf)")
    q, code = [], EXIT_OK
    for s in grid:
        try:
            q.append(one_minus_F(ev, s, m_cap=cfg.m_cap))
        except UnresolvedError as err:
            q.append(float("nan") if err.best is None else float(err.best))
            code = EXIT_UNRESOLVED
    q = np.array(q)
    with warnings.catch_warnings(record=True) as caught:
        warnings.simplefilter("always")
        ok = np.isfinite(q)
        p, c = tail_fit(grid[ok], q[ok])
    if caught and code == EXIT_OK:
        code = EXIT_PARTIAL
    rep = {
        "k": cfg.k,
        "slope": p,
        "c": c,
        "expected_slope": (4 * cfg.k + 3) / 2,
        "grid": [float(s) for s in grid],
        "one_minus_F": [float(x) for x in q],
        "err_components": {"floor_points": int(np.sum(~(q > 1e-300)))},
        "warnings": [str(w.message) for w in caught],
    }
    return rep, code


def _cached_report(fn):
    """Replay whole JSON reports from the cache (exact: floats round-trip through repr)."""
    def wrapped(cfg):
        cache = ResultCache(cfg.cache_dir)
        key = canonical_key(cfg.command, k=cfg.k, t=list(cfg.t), s_min=cfg.s_min, s_max=cfg.s_max,
                            step=cfg.step, rh_tol=cfg.rh_tol, det_tol=cfg.det_tol, m_cap=cfg.m_cap,
                            extra=sorted(cfg.extra.items()))
        hit = cache.get(key)
        if hit is not None:
            return hit[0]["report"], hit[0]["code"]
        rep, code = fn(cfg)
        if code in (EXIT_OK, EXIT_PARTIAL):
            cache.put(key, {"report": rep, "code": code}, {})
        return rep, code
    wrapped.__name__ = fn.__name__
    return wrapped


COMMANDS = {"dist": cmd_dist, "limit": cmd_limit, "chi": _cached_report(cmd_chi),
            "tail": _cached_report(cmd_tail)}


def plot_script(cfg, data_path):
    """gnuplot script for a CSV result file."""
    title = {"dist": f"F_{cfg.k}", "limit": "F_inf"}.get(cfg.command, cfg.command)
    return "\n".join([
        "set datafile separator ','",
        "set key top left",
        "set xlabel 's'",
        "set grid",
        f"plot '{data_path}' using 1:2 skip 1 with lines title '{title}', \\",
        f"     '{data_path}' using 1:3 skip 1 with lines title 'density'",
        "",
    ])


def render(cfg, result):
    if cfg.format == "csv":
        if isinstance(result, dict):
            raise InvalidArgumentError(f"{cfg.command} produces a JSON report")
        return to_csv(result)
    if isinstance(result, dict):
        return json.dumps(result, indent=2, sort_keys=True) + "\n"
    keys = CSV_HEADER.split(",")
    return json.dumps({"grid": [r[0] for r in result],
                       "rows": [dict(zip(keys, map(float, r))) for r in result]},
                      indent=2, sort_keys=True) + "\n"


def _write(path, text):
    p = Path(path)
    tmp = p.with_name(p.name + ".tmp")
    with open(tmp, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(text)
    tmp.replace(p)


def build_parser():
    ap = argparse.ArgumentParser(prog="hotw", description="Higher-order Tracy-Widom distributions "
                                 "from Riemann-Hilbert solves.")
    sub = ap.add_subparsers(dest="command", required=True)
    helps = {"dist": "F_k and its density on a grid (CSV)",
             "chi": "constant term of the large-gap expansion (JSON)",
             "tail": "right-tail exponent fit of 1 - F_k (JSON)",
             "limit": "large-k limit F_inf on a grid in (-1, 1) (CSV)"}
    for name in COMMANDS:
        sp = sub.add_parser(name, help=helps[name])
        sp.add_argument("--k", type=int, default=0)
        sp.add_argument("--t", type=str, default="", help="comma-separated t_0,...,t_{2k-1}")
        sp.add_argument("--s-min", type=float)
        sp.add_argument("--s-max", type=float)
        sp.add_argument("--step", type=float)
        sp.add_argument("--rh-tol", type=float, default=1e-12)
        sp.add_argument("--det-tol", type=float, default=1e-12)
        sp.add_argument("--m-cap", type=int, default=M_CAP)
        sp.add_argument("--out", type=str, help="output file (default stdout)")
        sp.add_argument("--format", choices=("csv", "json"))
        sp.add_argument("--cache-dir", type=str, help="result cache (default $HOTW_CACHE_DIR)")
        sp.add_argument("--emit-plot", type=str, help="write a gnuplot script here")
        sp.add_argument("-v", "--verbose", action="store_true")
        if name == "limit":
            sp.add_argument("--r", type=float, default=0.25, help="parametrix disk radius")
        if name == "chi":
            sp.add_argument("--tol", type=float, default=1e-6, help="plateau tolerance")
    return ap


def config_from_args(ns):
    t = tuple(float(x) for x in ns.t.split(",") if x.strip()) if ns.t else ()
    extra = {}
    if getattr(ns, "r", None) is not None:
        extra["r"] = ns.r
    if getattr(ns, "tol", None) is not None:
        extra["tol"] = ns.tol
    return RunConfig(ns.command, ns.k, t, ns.s_min, ns.s_max, ns.step, ns.rh_tol, ns.det_tol,
                     ns.m_cap, ns.out, ns.format, ns.cache_dir, ns.emit_plot, extra)


def run(cfg):
    """Run a command; returns (rendered text, exit code)."""
    with warnings.catch_warnings(record=True) as caught:
        warnings.simplefilter("always")
        result, code = COMMANDS[cfg.command](cfg)
    for w in caught:
        log.warning("%s", w.message)
    if caught and code == EXIT_OK:
        code = EXIT_PARTIAL
    return render(cfg, result), code


def main(argv=None):
    try:
        ns = build_parser().parse_args(argv)
    except SystemExit as err:
        return EXIT_CONFIG if err.code else EXIT_OK
    logging.basicConfig(level=logging.INFO if ns.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        cfg = config_from_args(ns)
        text, code = run(cfg)
    except InvalidArgumentError as err:
        print(f"hotw {ns.command}: invalid configuration: {err}", file=sys.stderr)
        return EXIT_CONFIG
    except (UnresolvedError, HOTWError) as err:
        print(f"hotw {ns.command}: {type(err).__name__}: {err}", file=sys.stderr)
        return EXIT_UNRESOLVED
    if cfg.out:
        _write(cfg.out, text)
        if cfg.emit_plot and cfg.format == "csv":
            _write(cfg.emit_plot, plot_script(cfg, cfg.out))
        elif cfg.emit_plot:
            print("hotw: --emit-plot applies to CSV output only", file=sys.stderr)
    else:
        sys.stdout.write(text)
        if cfg.emit_plot:
            print("hotw: --emit-plot needs --out", file=sys.stderr)
    return code


if __name__ == "__main__":
    sys.exit(main())
