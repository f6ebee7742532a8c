"""Command-line driver.

Curve files are CurveTables: comma-separated text whose header row holds the
grid points and whose other rows hold one curve each.  Leading columns with a
non-numeric header (``id``, ``region``, ...) carry labels.

Exit codes: 0 success, 2 parse or usage error, 3 shape or grid error,
4 numerical failure.
"""

from __future__ import annotations

import argparse
import csv
import json
import math
import os
import sys
from dataclasses import dataclass, replace
from importlib import resources
from pathlib import Path

import numpy as np

from fofrboot import __version__
from fofrboot import rng as rngmod
from fofrboot.bootstrap import BootConfig
from fofrboot.errors import (
    DegenerateInputError,
    FofrError,
    IncompatibleGridError,
    InvalidArgumentError,
    NumericalFailureError,
    TruncationTooLargeError,
)
from fofrboot.experiments import coverage_study, cubic_curve
from fofrboot.fofr import fit_fofr, loocv_select, residuals_of
from fofrboot.fpca import fit_fpca
from fofrboot.fungrid import Fn, FnSet, Grid, trapezoid_grid
from fofrboot.inference import MeanResponseInference
from fofrboot.simgen import Scenario, ScoreLaw, SlopeSpec, SpectrumSpec, gen_dataset

EXIT_OK, EXIT_PARSE, EXIT_SHAPE, EXIT_NUMERIC = 0, 2, 3, 4
SEED_ENV = "FOFR_SEED"
WEATHER_DAYS = 365


class CurveParseError(InvalidArgumentError):
    """A CurveTable cell is not a real number."""

    def __init__(self, path, line: int, column: int, cell: str, reason: str = "not a real number"):
        super().__init__(f"{path}: line {line}, column {column}: {cell!r} is {reason}")
        self.line, self.column = line, column


class ShapeError(IncompatibleGridError):
    """Tables are ragged or disagree in size."""


class ConfigError(InvalidArgumentError):
    pass


# -- CurveTable I/O ------------------------------------------------------

def _is_number(s: str) -> bool:
    try:
        float(s)
    except ValueError:
        return False
    return True


@dataclass(frozen=True, eq=False)
class CurveTable:
    curves: FnSet
    label_names: tuple = ()
    labels: tuple = ()  # one tuple of strings per curve

    @property
    def grid(self) -> Grid:
        return self.curves.grid

    def column(self, name: str) -> list:
        if name not in self.label_names:
            raise InvalidArgumentError(f"no label column {name!r}; have {list(self.label_names)}")
        j = self.label_names.index(name)
        return [lab[j] for lab in self.labels]


def read_curve_table(path) -> CurveTable:
    """Parse a CurveTable; errors name the offending line and column (1-based)."""
    with open(path, newline="", encoding="utf-8") as fh:
        # blank rows and '#' metadata rows are skipped; line numbers stay those of the file
        rows = [(i, r) for i, r in enumerate(csv.reader(fh), start=1)
                if r and any(c.strip() for c in r) and not r[0].lstrip().startswith("#")]
    if not rows:
        raise CurveParseError(path, 1, 1, "", "empty (no header row)")
    hline, header = rows[0]
    header = [c.strip() for c in header]
    nlab = 0
    while nlab < len(header) and not _is_number(header[nlab]):
        nlab += 1
    if nlab == len(header):
        raise CurveParseError(path, hline, 1, header[0], "not a grid point (header has no numeric cells)")
    points = []
    for j, c in enumerate(header[nlab:], start=nlab + 1):
        if not _is_number(c):
            raise CurveParseError(path, hline, j, c)
        points.append(float(c))
    try:
        grid = trapezoid_grid(points)
    except InvalidArgumentError as exc:
        raise IncompatibleGridError(f"{path}: invalid grid in header: {exc}") from None
    values, labels = [], []
    for line, r in rows[1:]:
        if len(r) != len(header):
            raise ShapeError(f"{path}: line {line} has {len(r)} cells, header has {len(header)}")
        vals = []
        for j, c in enumerate(r[nlab:], start=nlab + 1):
            try:
                v = float(c)
            except ValueError:
                raise CurveParseError(path, line, j, c) from None
            if not math.isfinite(v):
                raise CurveParseError(path, line, j, c, "not finite")
            vals.append(v)
        values.append(vals)
        labels.append(tuple(c.strip() for c in r[:nlab]))
    if not values:
        raise ShapeError(f"{path}: no curve rows")
    return CurveTable(FnSet(grid, np.array(values)), tuple(header[:nlab]), tuple(labels))


def write_curve_table(path, curves: FnSet, ids=None, meta: str | None = None):
    """Write curves with ``repr`` floats so that reading them back is exact."""
    with open(path, "w", newline="", encoding="utf-8") as fh:
        if meta:
            fh.write(f"# {meta}\n")
        wr = csv.writer(fh, lineterminator="\n")
        head = [repr(float(t)) for t in curves.grid.points]
        wr.writerow((["id"] if ids is not None else []) + head)
        for i, row in enumerate(curves.rows):
            cells = [repr(float(v)) for v in row]
            wr.writerow(([ids[i]] if ids is not None else []) + cells)


def _same_grid(*tables: CurveTable):
    g = tables[0].grid
    for t in tables[1:]:
        if not g.same_as(t.grid):
            raise IncompatibleGridError("curve files use different grids")


# -- config --------------------------------------------------------------

def load_schema() -> dict:
    return json.loads(resources.files("fofrboot").joinpath("study_config.schema.json").read_text())


def load_config(path) -> dict:
    """Read and validate a StudyConfig; unknown keys are rejected."""
    import jsonschema

    if path is None:
        return {}
    try:
        cfg = json.loads(Path(path).read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{path}: line {exc.lineno}, column {exc.colno}: {exc.msg}") from None
    try:
        jsonschema.validate(cfg, load_schema())
    except jsonschema.ValidationError as exc:
        where = "/".join(str(p) for p in exc.absolute_path) or "<root>"
        raise ConfigError(f"{path}: {where}: {exc.message}") from None
    return cfg


def scenario_from_config(cfg: dict) -> Scenario:
    s = cfg.get("scenario", {})
    d = Scenario()
    return Scenario(
        spectrum=SpectrumSpec(s.get("a", d.spectrum.a), s.get("J0", d.spectrum.J0)),
        x_law=ScoreLaw(s.get("x_latent", d.x_law.latent), s.get("x_w", d.x_law.w_law)),
        eps_law=ScoreLaw(s.get("eps_latent", d.eps_law.latent), s.get("eps_w", d.eps_law.w_law)),
        slope=SlopeSpec(s.get("slope", d.slope.kind), s.get("b1", d.slope.b1), s.get("b2", d.slope.b2),
                        s.get("sign_seed", d.slope.sign_seed)),
        n=s.get("n", d.n),
        m=s.get("m", d.m),
        eps_scale=s.get("eps_scale", d.eps_scale),
        x_basis=s.get("x_basis", d.x_basis),
        eps_basis=s.get("eps_basis", d.eps_basis),
        slope_J0=s.get("slope_J0", d.slope_J0),
    )


def resolve_seed(args, cfg: dict) -> int:
    """Command-line flag, then ``FOFR_SEED``, then the config, then 0."""
    if getattr(args, "seed", None) is not None:
        return args.seed
    env = os.environ.get(SEED_ENV)
    if env is not None:
        try:
            return int(env)
        except ValueError:
            raise ConfigError(f"{SEED_ENV}={env!r} is not an integer") from None
    return int(cfg.get("bootstrap", {}).get("seed", 0))


def _pick(args, name, cfg, section, key=None, default=None):
    v = getattr(args, name, None)
    if v is not None:
        return v
    return cfg.get(section, {}).get(key or name, default)


# -- argument types ------------------------------------------------------

def k_arg(s: str):
    if s == "loocv":
        return s
    try:
        k = int(s)
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected a positive integer or 'loocv', got {s!r}") from None
    if k < 1:
        raise argparse.ArgumentTypeError("k must be >= 1")
    return k


def reals_arg(s: str):
    try:
        return [float(v) for v in s.split(",") if v.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated reals, got {s!r}") from None


def _meta(seed, **extra) -> str:
    parts = [rngmod.describe(seed)] + [f"{k}={v}" for k, v in extra.items()]
    return "# " + " ".join(parts)


class _Out:
    """Standard output or a file given by ``--out``."""

    def __init__(self, path):
        self.path = path

    def __enter__(self):
        self.fh = open(self.path, "w", encoding="utf-8", newline="") if self.path else sys.stdout
        return self.fh

    def __exit__(self, *exc):
        if self.path:
            self.fh.close()


# -- shared pieces -------------------------------------------------------

def _load_pair(args):
    X = read_curve_table(args.x_csv)
    Y = read_curve_table(args.y_csv)
    _same_grid(X, Y)
    if X.curves.n != Y.curves.n:
        raise ShapeError(f"{X.curves.n} regressor curves but {Y.curves.n} response curves")
    return X, Y


def _load_x0(args, X: CurveTable) -> tuple[Fn, str]:
    if args.group_by:
        if args.group is None:
            raise InvalidArgumentError("--group-by needs --group")
        col = X.column(args.group_by)
        idx = [i for i, v in enumerate(col) if v == args.group]
        if not idx:
            raise InvalidArgumentError(f"no curves with {args.group_by}={args.group!r}")
        return Fn(X.grid, X.curves.rows[idx].mean(axis=0)), f"{args.group_by}={args.group}"
    if args.x0_csv is None:
        raise InvalidArgumentError("give an x0 file or --group-by/--group")
    t = read_curve_table(args.x0_csv)
    _same_grid(X, t)
    if t.curves.n != 1:
        raise ShapeError(f"x0 file must hold exactly one curve, found {t.curves.n}")
    return t.curves[0], Path(args.x0_csv).stem


def _truncations(args, cfg, X: FnSet, Y: FnSet):
    """Resolve ``(k, g, h, k_selected_by_cv)`` from flags and config."""
    k = _pick(args, "k", cfg, "truncation", default="loocv")
    selected = None
    if k == "loocv":
        fp = fit_fpca(X)
        k_max = _pick(args, "k_max", cfg, "truncation", default=10)
        # folds that lose a component score inf, so the full rank is searchable
        k = selected = loocv_select(X, Y, max(1, min(k_max, fp.rank)))
    g = _pick(args, "g", cfg, "truncation", default=k)
    delta = _pick(args, "delta", cfg, "truncation", default=0)
    h = _pick(args, "h", cfg, "truncation", default=k + delta)
    return int(k), int(g), int(h), selected


def _proj_curves(spec, grid: Grid):
    if spec is None or spec == "cubic":
        return [cubic_curve(grid)], ["cubic"]
    if spec == "constant":
        return [grid.constant(1.0)], ["constant"]
    t = read_curve_table(spec)
    if not grid.same_as(t.grid):
        raise IncompatibleGridError("projection curves use a different grid")
    names = [lab[0] if lab else f"{Path(spec).stem}[{i}]" for i, lab in enumerate(t.labels)]
    return list(t.curves), names


def _with_grid(sc: Scenario, m):
    if m is None:
        return sc
    if m < 3:
        raise InvalidArgumentError(f"--grid-m must be at least 3, got {m}")
    return replace(sc, m=m)


def _fmt(v) -> str:
    return "" if v is None else repr(float(v))


# -- commands ------------------------------------------------------------

def cmd_fit(args) -> int:
    Xt, Yt = _load_pair(args)
    X, Y = Xt.curves, Yt.curves
    seed = resolve_seed(args, {})
    k, _, _, selected = _truncations(args, {}, X, Y)
    fp = fit_fpca(X)
    model = fit_fofr(X, Y, k, fpca=fp)
    res = residuals_of(model, X, Y, center=False).residuals.rows
    err = float(np.mean(res**2 @ X.grid.weights))
    with _Out(args.out_summary) as fh:
        fh.write(_meta(seed, n=X.n, m=X.grid.m) + "\n")
        if selected is not None:
            fh.write(f"k_selected: {selected}\n")
        fh.write(f"k: {k}\n")
        fh.write("component,eigenvalue,cumulative_share\n")
        total = fp.eigvals.sum()
        cum = np.cumsum(fp.eigvals) / total
        for j in range(min(fp.rank, max(k, 10))):
            fh.write(f"{j + 1},{float(fp.eigvals[j])!r},{float(cum[j])!r}\n")
        fh.write(f"in_sample_error: {err!r}\n")
    if args.model:
        np.savez(args.model, k=k, grid=X.grid.points, weights=X.grid.weights,
                 intercept=model.intercept.values, slope=model.slope_kernel().kernel,
                 eigvals=fp.eigvals[:k])
    return EXIT_OK


def _inference_setup(args):
    cfg = load_config(args.config)
    Xt, Yt = _load_pair(args)
    X, Y = Xt.curves, Yt.curves
    x0, x0_name = _load_x0(args, Xt)
    seed = resolve_seed(args, cfg)
    k, g, h, selected = _truncations(args, cfg, X, Y)
    B = _pick(args, "B", cfg, "bootstrap", default=1000)
    level = _pick(args, "level", cfg, "inference", default=0.95)
    inf = MeanResponseInference(X, Y, x0)
    boot = BootConfig(k, g, h, B, seed)
    return cfg, Xt, inf, x0_name, seed, boot, level, selected


def cmd_infer(args) -> int:
    cfg, Xt, inf, x0_name, seed, boot, level, selected = _inference_setup(args)
    method = _pick(args, "method", cfg, "inference", default="both")
    proj_spec = _pick(args, "proj", cfg, "inference")
    eval_ts = _pick(args, "eval_t", cfg, "inference", default=[])
    xs, names = _proj_curves(proj_spec, Xt.grid)
    k, h = boot.k, boot.h
    rows = []
    draws = inf.bootstrap(boot, xs, eval_ts) if method in ("rb", "both") else None
    if method in ("clt", "both"):
        b = inf.clt_ball(h, k, level, seed=seed)
        rows.append(("MR", "CLT", None, b.radius, None, None))
        for x, nm in zip(xs, names):
            iv = inf.clt_proj_interval(x, h, k, level)
            rows.append((f"proj:{nm}", "CLT", iv.center, iv.half_width, iv.lower, iv.upper))
        for t in eval_ts:
            iv = inf.clt_eval_interval(t, h, k, level)
            rows.append((f"eval:{t!r}", "CLT", iv.center, iv.half_width, iv.lower, iv.upper))
    if draws is not None:
        b = inf.rb_ball(draws, level)
        rows.append(("MR", "RB", None, b.radius, None, None))
        for p, (x, nm) in enumerate(zip(xs, names)):
            iv = inf.rb_proj_interval(x, draws, p, level)
            rows.append((f"proj:{nm}", "RB", iv.center, iv.half_width, iv.lower, iv.upper))
        for q, t in enumerate(eval_ts):
            iv = inf.rb_eval_interval(draws, q, level)
            rows.append((f"eval:{t!r}", "RB", iv.center, iv.half_width, iv.lower, iv.upper))
    with _Out(args.out) as fh:
        extra = {"x0": x0_name, "k": k, "g": boot.g, "h": h, "B": boot.B}
        if selected is not None:
            extra["k_selected"] = selected
        fh.write(_meta(seed, **extra) + "\n")
        wr = csv.writer(fh, lineterminator="\n")
        wr.writerow(["target", "method", "center", "radius", "lower", "upper", "level", "seed",
                     "generator"])
        for target, meth, c, r, lo, up in rows:
            wr.writerow([target, meth, _fmt(c), _fmt(r), _fmt(lo), _fmt(up), repr(level), seed,
                         rngmod.GENERATOR_NAME])
    return EXIT_OK


def cmd_test(args) -> int:
    cfg, Xt, inf, x0_name, seed, boot, level, selected = _inference_setup(args)
    res = inf.mean_equality_test(inf.bootstrap(boot))
    with _Out(args.out) as fh:
        fh.write(_meta(seed, x0=x0_name, k=boot.k, g=boot.g, h=boot.h) + "\n")
        fh.write("statistic,p_value,B\n")
        fh.write(f"{res.statistic!r},{res.p_value!r},{res.B}\n")
    return EXIT_OK


def cmd_simulate(args) -> int:
    cfg = load_config(args.config)
    sc = _with_grid(scenario_from_config(cfg), args.grid_m)
    if args.n is not None:
        sc = sc.with_n(args.n)
    seed = resolve_seed(args, cfg)
    X, Y, truth = gen_dataset(sc, rngmod.stream(seed, rngmod.DATA, sc.n, args.replication))
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    meta = _meta(seed, n=sc.n, m=sc.m, replication=args.replication)[2:]
    ids = [str(i + 1) for i in range(X.n)]
    write_curve_table(out / "X.csv", X, ids, meta)
    write_curve_table(out / "Y.csv", Y, ids, meta)
    write_curve_table(out / "x0.csv", FnSet(X.grid, truth.x0.values[None]), ["x0"], meta)
    write_curve_table(out / "truth.csv", FnSet(X.grid, truth.mu_x0.values[None]), ["mu_x0"], meta)
    print(_meta(seed, n=sc.n, m=sc.m, replication=args.replication))
    print(f"wrote {out / 'X.csv'}, {out / 'Y.csv'}, {out / 'x0.csv'}, {out / 'truth.csv'}")
    return EXIT_OK


def cmd_coverage(args) -> int:
    cfg = load_config(args.config)
    sc = _with_grid(scenario_from_config(cfg), args.grid_m)
    st = cfg.get("study", {})
    seed = resolve_seed(args, cfg)
    report = coverage_study(
        sc,
        n_list=st.get("n_list", [sc.n]),
        delta_list=st.get("delta_list", [0, 1, 2]),
        M=args.M if args.M is not None else st.get("M", 1000),
        B=args.B if args.B is not None else cfg.get("bootstrap", {}).get("B", 1000),
        seed=seed,
        levels=st.get("levels", [0.95]),
        workers=args.workers if args.workers is not None else st.get("workers", 1),
        k_max=cfg.get("truncation", {}).get("k_max", 10),
    )
    out = args.out or st.get("out")
    text = report.to_csv(out)
    if not out:
        sys.stdout.write(text)
    return EXIT_OK


def cmd_plotdata(args) -> int:
    """Long-format ``series,t,value`` rows for curve files and, with ``--x/--y``,
    the estimated mean response and its pointwise bootstrap band."""
    series = []
    for path in args.curves:
        t = read_curve_table(path)
        stem = Path(path).stem
        for i, f in enumerate(t.curves):
            name = "/".join(t.labels[i]) if t.labels and t.labels[i] else str(i + 1)
            series.append((f"{stem}:{name}", f.grid.points, f.values))
    seed = resolve_seed(args, {})
    if args.x_csv:
        args.y_csv = args.y
        _, Xt, inf, x0_name, seed, boot, level, _ = _inference_setup(args)
        ts = list(Xt.grid.points)
        draws = inf.bootstrap(boot, eval_ts=ts)
        center = inf.center(boot.h)
        lo, up = [], []
        for q in range(len(ts)):
            iv = inf.rb_eval_interval(draws, q, level)
            lo.append(iv.lower)
            up.append(iv.upper)
        pts = Xt.grid.points
        series += [("center", pts, center.values), ("band_lower", pts, np.array(lo)),
                   ("band_upper", pts, np.array(up))]
    with _Out(args.out) as fh:
        fh.write(_meta(seed) + "\n")
        wr = csv.writer(fh, lineterminator="\n")
        wr.writerow(["series", "t", "value"])
        for name, pts, vals in series:
            for t, v in zip(pts, vals):
                wr.writerow([name, repr(float(t)), repr(float(v))])
    return EXIT_OK


def cmd_convert_weather(args) -> int:
    """Long daily table ``place,region,day,temperature,precipitation`` to two CurveTables.

    Day ``d`` (1..365) maps to ``(d - 1) / 364``.  Responses are
    ``log10(precipitation)``, so every precipitation value must be positive.
    """
    data = {}
    regions = {}
    with open(args.input, newline="", encoding="utf-8") as fh:
        rd = csv.DictReader(fh)
        need = {"place", "region", "day", "temperature", "precipitation"}
        if rd.fieldnames is None or not need <= set(rd.fieldnames):
            raise CurveParseError(args.input, 1, 1, ",".join(rd.fieldnames or []),
                                  f"not a header with columns {sorted(need)}")
        cols = rd.fieldnames
        bad = []
        for line, r in enumerate(rd, start=2):
            try:
                day = int(r["day"])
            except ValueError:
                raise CurveParseError(args.input, line, cols.index("day") + 1, r["day"],
                                      "not a day index") from None
            if not 1 <= day <= WEATHER_DAYS:
                raise CurveParseError(args.input, line, cols.index("day") + 1, r["day"],
                                      "outside 1..365")
            vals = []
            for c in ("temperature", "precipitation"):
                try:
                    vals.append(float(r[c]))
                except ValueError:
                    raise CurveParseError(args.input, line, cols.index(c) + 1, r[c]) from None
            if not vals[1] > 0:
                bad.append(f"line {line} ({r['place']}, day {day}): {r['precipitation']}")
            place = r["place"]
            regions.setdefault(place, r["region"])
            data.setdefault(place, {})[day] = vals
    if bad:
        shown = "; ".join(bad[:10]) + (f"; ... {len(bad) - 10} more" if len(bad) > 10 else "")
        raise CurveParseError(args.input, 0, 0, "precipitation",
                              f"non-positive, cannot take log10 in {len(bad)} cells: {shown}")
    places = list(data)
    for p in places:
        if len(data[p]) != WEATHER_DAYS:
            raise ShapeError(f"{p} has {len(data[p])} days, expected {WEATHER_DAYS}")
    grid_pts = [(d - 1) / (WEATHER_DAYS - 1) for d in range(1, WEATHER_DAYS + 1)]
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    for fname, col, fn in (("temperature.csv", 0, float), ("log10precip.csv", 1, math.log10)):
        with open(out / fname, "w", newline="", encoding="utf-8") as fh:
            wr = csv.writer(fh, lineterminator="\n")
            wr.writerow(["id", "region"] + [repr(t) for t in grid_pts])
            for p in places:
                wr.writerow([p, regions[p]] + [repr(fn(data[p][d][col])) for d in range(1, WEATHER_DAYS + 1)])
    print(f"wrote {len(places)} curves to {out / 'temperature.csv'} and {out / 'log10precip.csv'}")
    return EXIT_OK


# -- parser --------------------------------------------------------------

def _add_truncation_flags(p):
    p.add_argument("--k", type=k_arg, help="residual truncation: an integer or 'loocv' (default)")
    p.add_argument("--k-max", dest="k_max", type=int, help="largest k tried by LOOCV (default 10)")
    p.add_argument("--g", type=int, help="generation truncation (default k)")
    p.add_argument("--h", type=int, help="estimation truncation (default k + delta)")
    p.add_argument("--delta", type=int, help="h = k + delta when --h is absent (default 0)")


def _add_inference_flags(p):
    p.add_argument("x_csv", help="regressor CurveTable")
    p.add_argument("y_csv", help="response CurveTable")
    p.add_argument("x0_csv", nargs="?", help="single-curve CurveTable with the new regressor")
    p.add_argument("--group-by", dest="group_by", help="label column used to average x0")
    p.add_argument("--group", help="value of --group-by whose curves are averaged into x0")
    p.add_argument("--config", help="StudyConfig JSON")
    _add_truncation_flags(p)
    p.add_argument("--B", type=int, help="bootstrap resamples (default 1000)")
    p.add_argument("--level", type=float, help="confidence level (default 0.95)")
    p.add_argument("--seed", type=int, help=f"seed (overrides ${SEED_ENV} and the config)")
    p.add_argument("--out", help="output file (default standard output)")


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="fofrboot", description=__doc__.split("\n\n")[0])
    ap.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("fit", help="fit the regression and print a summary")
    p.add_argument("x_csv")
    p.add_argument("y_csv")
    _add_truncation_flags(p)
    p.add_argument("--seed", type=int)
    p.add_argument("--out", dest="out_summary", help="summary file (default standard output)")
    p.add_argument("--model", help="write intercept and slope kernel to this .npz file")
    p.set_defaults(func=cmd_fit)

    p = sub.add_parser("infer", help="confidence sets for the mean response at x0")
    _add_inference_flags(p)
    p.add_argument("--proj", help="projection curves: 'cubic' (default), 'constant' or a CurveTable")
    p.add_argument("--eval-t", dest="eval_t", type=reals_arg, help="evaluation points, comma-separated")
    p.add_argument("--method", choices=("clt", "rb", "both"))
    p.set_defaults(func=cmd_infer)

    p = sub.add_parser("test", help="bootstrap test of mu(x0) = E[Y]")
    _add_inference_flags(p)
    p.set_defaults(func=cmd_test)

    p = sub.add_parser("simulate", help="draw one synthetic dataset")
    p.add_argument("--config", help="StudyConfig JSON")
    p.add_argument("--n", type=int, help="sample size (overrides the config)")
    p.add_argument("--grid-m", dest="grid_m", type=int, help="grid size (overrides the config)")
    p.add_argument("--replication", type=int, default=0, help="replication index of the data stream")
    p.add_argument("--seed", type=int)
    p.add_argument("--out", required=True, help="output directory")
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("coverage", help="Monte Carlo coverage study")
    p.add_argument("--config", help="StudyConfig JSON")
    p.add_argument("--M", type=int, help="replications per sample size")
    p.add_argument("--grid-m", dest="grid_m", type=int, help="grid size (overrides the config)")
    p.add_argument("--B", type=int)
    p.add_argument("--seed", type=int)
    p.add_argument("--workers", type=int)
    p.add_argument("--out")
    p.set_defaults(func=cmd_coverage)

    p = sub.add_parser("plotdata", help="long-format series for plotting")
    p.add_argument("curves", nargs="*", help="CurveTables to emit as series")
    p.add_argument("--x", dest="x_csv", help="regressors, to add the center and band series")
    p.add_argument("--y", help="responses")
    p.add_argument("--x0", dest="x0_csv")
    p.add_argument("--group-by", dest="group_by")
    p.add_argument("--group")
    p.add_argument("--config")
    _add_truncation_flags(p)
    p.add_argument("--B", type=int)
    p.add_argument("--level", type=float)
    p.add_argument("--seed", type=int)
    p.add_argument("--out")
    p.set_defaults(func=cmd_plotdata)

    p = sub.add_parser("convert-weather", help="daily weather table to temperature/log10 precipitation CurveTables")
    p.add_argument("input", help="CSV with columns place,region,day,temperature,precipitation")
    p.add_argument("--out", required=True, help="output directory")
    p.set_defaults(func=cmd_convert_weather)
    return ap


def exit_code_for(exc: BaseException) -> int:
    if isinstance(exc, (IncompatibleGridError,)):
        return EXIT_SHAPE
    if isinstance(exc, (NumericalFailureError, DegenerateInputError, TruncationTooLargeError)):
        return EXIT_NUMERIC
    if isinstance(exc, (InvalidArgumentError, OSError)):
        return EXIT_PARSE
    return EXIT_NUMERIC


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (FofrError, OSError, FloatingPointError, np.linalg.LinAlgError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return exit_code_for(exc)


if __name__ == "__main__":
    sys.exit(main())
