"""Experiment runner.

    slabdecay verify --config cfg.json --out runs/thm11
    slabdecay report runs

A config is JSON; ``run`` writes records.csv, summary.json and
manifest.json into the output directory and exits 0 only when every pass
flag is true.  Invalid configs exit with status 2 and write nothing.
"""
from __future__ import annotations

import argparse
import csv
import json
import math
import sys
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np

from . import __version__
from . import geometry as geo
from . import lattice as lat
from . import oscint
from . import surface as srf
from . import verify as ver

EXPERIMENTS = ("decay", "slab", "thm11", "thm12", "uniform", "lemma15", "eq31", "union",
               "lattice", "full-report")
SUBCOMMAND_EXPERIMENTS = {
    "decay": ("decay",),
    "slab": ("slab",),
    "lattice": ("lattice",),
    "verify": ("thm11", "thm12", "uniform", "lemma15", "eq31", "union", "full-report"),
}
DEFAULT_THRESHOLDS = {"trend": 0.05, "stability": 0.20, "lemma_spread": 0.10,
                      "lattice_slack": lat.PASS_SLACK, "alpha_tol": 0.02}
STATUS_OK, STATUS_FAIL, STATUS_INVALID = 0, 1, 2


class ConfigError(ValueError):
    pass


@dataclass
class ExperimentConfig:
    experiment: str
    patch: dict | None = None
    body: dict | None = None
    grids: dict = field(default_factory=dict)
    thresholds: dict = field(default_factory=dict)
    params: dict = field(default_factory=dict)
    output: str | None = None
    seed: int = 0

    @classmethod
    def from_dict(cls, data) -> "ExperimentConfig":
        if not isinstance(data, dict):
            raise ConfigError("config must be a JSON object")
        known = {f for f in cls.__dataclass_fields__}
        extra = set(data) - known
        if extra:
            raise ConfigError(f"unknown config keys: {sorted(extra)}")
        if "experiment" not in data:
            raise ConfigError("config needs an 'experiment'")
        cfg = cls(**data)
        cfg.validate()
        return cfg

    @classmethod
    def from_json(cls, text: str) -> "ExperimentConfig":
        try:
            data = json.loads(text)
        except json.JSONDecodeError as exc:
            raise ConfigError(f"malformed JSON: {exc}") from None
        return cls.from_dict(data)

    def to_dict(self) -> dict:
        return asdict(self)

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=True)

    def validate(self):
        if self.experiment not in EXPERIMENTS:
            raise ConfigError(f"unknown experiment {self.experiment!r}")
        for name in ("patch", "body"):
            spec = getattr(self, name)
            if spec is not None and not (isinstance(spec, dict) and isinstance(spec.get("name"), str)):
                raise ConfigError(f"{name} must be an object with a 'name'")
        for name in ("grids", "thresholds", "params"):
            if not isinstance(getattr(self, name), dict):
                raise ConfigError(f"{name} must be an object")
        if not isinstance(self.seed, int) or isinstance(self.seed, bool):
            raise ConfigError("seed must be an integer")
        g = self.grids
        for key in ("t_min", "t_max", "per_decade", "directions", "k_min", "k_max", "k_count"):
            if key in g and not (_is_number(g[key]) and g[key] > 0):
                raise ConfigError(f"grids.{key} must be positive")
        if "t_min" in g and "t_max" in g and not g["t_min"] < g["t_max"]:
            raise ConfigError("grids.t_min must be below grids.t_max")
        if "k_min" in g and "k_max" in g and not g["k_min"] < g["k_max"]:
            raise ConfigError("grids.k_min must be below grids.k_max")
        for key, val in self.thresholds.items():
            if not _is_number(val) or val < 0:
                raise ConfigError(f"thresholds.{key} must be a nonnegative number")
        needs = {"thm11": "patch", "thm12": "patch", "slab": "patch", "decay": "body",
                 "eq31": "body", "lattice": "body", "lemma15": "body"}
        req = needs.get(self.experiment)
        if req and getattr(self, req) is None:
            raise ConfigError(f"experiment {self.experiment!r} needs a {req}")
        if self.experiment == "uniform" and (self.patch is None) == (self.body is None):
            raise ConfigError("uniform needs exactly one of patch or body")
        if self.experiment in ("uniform", "union"):
            alpha = self.params.get("alpha", 0.5)
            if not (_is_number(alpha) and 0 < alpha < 1):
                raise ConfigError("params.alpha must lie in (0, 1)")
        if self.experiment == "lemma15":
            delta = self.params.get("delta", 0.5)
            if not (_is_number(delta) and 0 < delta < 1):
                raise ConfigError("params.delta must lie in (0, 1)")
        if self.experiment == "full-report":
            runs = self.params.get("runs")
            if not isinstance(runs, list) or not runs:
                raise ConfigError("full-report needs params.runs, a list of configs")
            for sub in runs:
                sub_cfg = ExperimentConfig.from_dict(sub)
                if sub_cfg.experiment == "full-report":
                    raise ConfigError("full-report runs cannot nest")
        # building the catalog objects catches bad names and parameters early
        try:
            if self.patch is not None:
                build_patch(self.patch)
            if self.body is not None:
                build_body(self.body)
        except (srf.CatalogError, TypeError, ValueError) as exc:
            raise ConfigError(str(exc)) from None

    def threshold(self, key):
        return float(self.thresholds.get(key, DEFAULT_THRESHOLDS[key]))


def _is_number(x):
    return isinstance(x, (int, float)) and not isinstance(x, bool) and math.isfinite(x)


def build_patch(spec: dict) -> srf.ConvexPatch:
    spec = dict(spec)
    carving = spec.pop("carving", None)
    patch = srf.make_catalog_patch(spec.pop("name"), spec)
    if carving is None:
        return patch
    kind = carving if isinstance(carving, str) else carving.get("kind")
    if kind == "noop":
        return patch.with_carving(srf.noop_carving())
    if kind == "halfspace":
        opts = {} if isinstance(carving, str) else carving
        return patch.with_carving(srf.halfspace_carving(int(opts.get("axis", 0)),
                                                        float(opts.get("sign", 1.0))))
    raise ValueError(f"unknown carving {carving!r}")


def build_body(spec: dict) -> srf.ClosedBody:
    spec = dict(spec)
    return srf.make_closed_body(spec.pop("name"), spec)


# ---------------------------------------------------------------------------
# experiments
# ---------------------------------------------------------------------------

def _directions(cfg, n):
    count = cfg.grids.get("directions")
    return ver.direction_grid(n, int(count) if count else None)


def _ts(cfg, n):
    g = cfg.grids
    t_max = g.get("t_max", 1e5 if n == 1 else 1e4)
    return ver.frequency_grid(float(g.get("t_min", 10.0)), float(t_max),
                              int(g.get("per_decade", 24)))


def _fan(fn, dirs, threads):
    """Run ``fn`` on direction chunks; records come back in grid order."""
    if threads <= 1 or len(dirs) < 2:
        return fn(dirs).records
    chunks = [c for c in np.array_split(dirs, min(threads * 4, len(dirs))) if len(c)]
    with ThreadPoolExecutor(max_workers=threads) as pool:
        parts = list(pool.map(lambda c: fn(c).records, chunks))
    return [r for part in parts for r in part]


def _ratio_result(summary, cfg, records=None, pass_extra=None):
    flags = {"trend": bool(math.isfinite(summary.sup_ratio)
                           and summary.trend <= cfg.threshold("trend"))}
    flags.update(pass_extra or {})
    ts, sups = summary.per_t_sup()
    data = summary.to_json()
    data["pass"] = flags
    data["series"] = {"name": "sup_ratio_vs_t", "x": ts.tolist(), "y": sups.tolist()}
    return _verify_rows(records or summary.records), data


def _verify_rows(records):
    n = len(records[0].v) - 1 if records else 1
    header = ["theorem", *[f"v{i + 1}" for i in range(n + 1)], "t", "lhs", "rhs", "ratio",
              "est_error"]
    return header, [r.row() for r in records]


def _run_ratio(cfg, threads):
    exp = cfg.experiment
    if exp in ("thm11", "thm12"):
        patch = build_patch(cfg.patch)
        dirs, ts = _directions(cfg, patch.n), _ts(cfg, patch.n)
        check = ver.check_thm11 if exp == "thm11" else ver.check_thm12
        recs = _fan(lambda d: check(patch, d, ts), dirs, threads)
    elif exp in ("uniform", "union"):
        alpha = float(cfg.params.get("alpha", 0.5))
        if exp == "union":
            obj = build_body(cfg.body or {"name": "two_disk_union"})
            n = obj.n
        elif cfg.patch is not None:
            obj = build_patch(cfg.patch)
            n = obj.n
        else:
            obj = build_body(cfg.body)
            n = obj.n
        dirs, ts = _directions(cfg, n), _ts(cfg, n)
        theorem = "union" if exp == "union" else None
        recs = _fan(lambda d: ver.check_uniform_decay(obj, alpha, d, ts, theorem=theorem),
                    dirs, threads)
    elif exp == "eq31":
        body = build_body(cfg.body)
        dirs, ts = _directions(cfg, 1), _ts(cfg, 1)
        recs = _fan(lambda d: ver.check_eq31(body, d, ts), dirs, threads)
        # log-free ratios are re-derived from the merged records
        free = [ver.VerificationRecord.make("eq31_nolog", r.v, r.t, r.lhs,
                                            r.rhs / math.log(2 + r.t), r.est_error)
                for r in recs]
        nolog = ver.summarize(free)
        summary = ver.summarize(recs, log_free_sup=nolog.sup_ratio, log_free_trend=nolog.trend)
        return _ratio_result(summary, cfg, pass_extra={
            "finite": bool(math.isfinite(summary.sup_ratio)),
            "log_free_finite": bool(math.isfinite(nolog.sup_ratio))})
    else:
        raise AssertionError(exp)
    summary = ver.summarize(recs, **({"alpha": cfg.params.get("alpha", 0.5)}
                                     if exp in ("uniform", "union") else {}))
    return _ratio_result(summary, cfg)


def _run_lemma15(cfg, threads):
    body = build_body(cfg.body)
    v = np.asarray(cfg.params.get("v", [0.0] * body.n + [1.0]), float)
    v = v / np.linalg.norm(v)
    delta = float(cfg.params.get("delta", 0.5))
    eps = np.logspace(math.log10(cfg.params.get("eps_min", 1e-6)),
                      math.log10(cfg.params.get("eps_max", 1e-2)),
                      int(cfg.params.get("eps_count", 9)))
    ts = _ts(cfg, body.n)
    summary = ver.check_lemma15(body, v, cfg.params.get("A"), delta, eps, ts=ts)
    flags = {"premise": bool(summary.extra["premise_ok"]),
             "stable": bool(summary.extra["spread_all"] <= cfg.threshold("lemma_spread"))}
    data = summary.to_json()
    data["pass"] = flags
    data["series"] = {"name": "c_delta_vs_eps", "x": eps.tolist(),
                      "y": np.asarray(summary.extra["per_eps"]).tolist()}
    return _verify_rows(summary.records), data


def _decay_rows(dirs, ts, table, label):
    n = dirs.shape[1]
    header = [*[f"v{i + 1}" for i in range(n)], "t", label]
    rows = [[*map(repr, map(float, v)), repr(float(t)), repr(float(val))]
            for v, vals in zip(dirs, table) for t, val in zip(ts, vals)]
    return header, rows


def _fit_result(ts, table, cfg, name):
    sup = np.max(table, axis=0)
    fit = geo.fit_power_law(zip(ts, sup))
    data = {"experiment": name, "alpha": fit.alpha, "c": fit.c, "residual": fit.residual,
            "series": {"name": "sup_" + name + "_vs_t", "x": list(map(float, ts)),
                       "y": sup.tolist()}}
    flags = {"finite": bool(math.isfinite(fit.alpha))}
    expected = cfg.params.get("expected_alpha")
    if expected is not None:
        data["expected_alpha"] = float(expected)
        flags["alpha"] = bool(abs(fit.alpha - expected) <= cfg.threshold("alpha_tol"))
    data["pass"] = flags
    return data


def _run_decay(cfg, threads):
    body = build_body(cfg.body)
    dirs = _directions(cfg, body.n)
    g = cfg.grids
    ts = ver.frequency_grid(float(g.get("t_min", 1e2)), float(g.get("t_max", 1e6)),
                            int(g.get("per_decade", 4)))
    table = _map(lambda v: geo.max_slab_profile(body, v, ts), dirs, threads)
    return _decay_rows(dirs, ts, table, "a"), _fit_result(ts, table, cfg, "decay")


def _run_slab(cfg, threads):
    patch = build_patch(cfg.patch)
    dirs, ts = _directions(cfg, patch.n), _ts(cfg, patch.n)
    table = _map(lambda v: geo.anchored_measures(patch, v, 1.0 / ts), dirs, threads)
    return _decay_rows(dirs, ts, table, "slab"), _fit_result(ts, table, cfg, "slab")


def _map(fn, items, threads):
    if threads <= 1:
        return np.array([fn(x) for x in items])
    with ThreadPoolExecutor(max_workers=threads) as pool:
        return np.array(list(pool.map(fn, items)))


def _run_lattice(cfg, threads):
    body = build_body(cfg.body)
    g = cfg.grids
    if "k_min" in g or "k_max" in g or "k_count" in g:
        lo, hi = (10, 5000) if body.dim == 2 else (5, 300)
        ks = np.unique(np.round(np.logspace(math.log10(g.get("k_min", lo)),
                                            math.log10(g.get("k_max", hi)),
                                            int(g.get("k_count", 200)))).astype(int))
    else:
        ks = lat.default_ks(body.dim)
    profile = lat.discrepancy_profile(body, [int(k) for k in ks])
    alpha = cfg.params.get("alpha")
    alpha_src = "config"
    if alpha is None:
        if not body.patches:
            raise ConfigError(f"body {body.name!r} needs params.alpha (no boundary patches)")
        dirs = ver.direction_grid(body.n, int(g.get("directions", 16)))
        ts = ver.frequency_grid(float(g.get("t_min", 1e2)), float(g.get("t_max", 1e5)),
                                int(g.get("per_decade", 3)))
        alpha = lat.slab_alpha(body, dirs, ts).alpha
        alpha_src = "max_slab fit"
    cmp = lat.compare_to_theorem(profile, float(alpha), cfg.threshold("lattice_slack"))
    ek, ev = profile.envelope
    data = {"experiment": "lattice", "body": body.name, "alpha_source": alpha_src, **cmp,
            "sign_changes": profile.sign_changes(),
            "series": {"name": "disc_envelope_vs_k", "x": list(ek), "y": list(ev)}}
    data["pass"] = {"exponent": cmp["pass"]}
    header = ["k", "N", "main", "disc"]
    rows = [[str(k), str(N), repr(m), repr(d)] for k, N, m, d in profile.rows]
    return (header, rows), data


RUNNERS = {"decay": _run_decay, "slab": _run_slab, "lattice": _run_lattice,
           "lemma15": _run_lemma15}


def _manifest(cfg, data):
    return {
        "config": cfg.to_dict(),
        "version": __version__,
        "catalog": {"patches": list(srf.CATALOG_PATCHES), "bodies": list(srf.CATALOG_BODIES)},
        "tolerances": {"abs_tol": oscint.ABS_TOL, "rel_tol": oscint.REL_TOL,
                       "sweep_panel_phase": ver.SWEEP_PANEL_PHASE,
                       "envelope_window_decades": ver.ENVELOPE_WINDOW,
                       "support_tol": geo.SUPPORT_TOL},
        "thresholds": {k: cfg.threshold(k) for k in DEFAULT_THRESHOLDS},
    }


def execute(cfg: ExperimentConfig, threads: int = 1):
    """Run one experiment; returns ((header, rows), summary dict)."""
    runner = RUNNERS.get(cfg.experiment, _run_ratio)
    (header, rows), data = runner(cfg, threads)
    data["all_pass"] = bool(all(data["pass"].values()))
    return (header, rows), data


def run(cfg: ExperimentConfig, out=None, threads: int = 1) -> int:
    """Run ``cfg`` and write its reports; returns the exit status."""
    out = Path(out or cfg.output or "out")
    if cfg.experiment == "full-report":
        status = STATUS_OK
        for i, sub in enumerate(cfg.params["runs"]):
            sub_cfg = ExperimentConfig.from_dict(sub)
            sub_cfg.seed = cfg.seed
            name = f"{i:02d}_{sub_cfg.experiment}"
            status = max(status, run(sub_cfg, out / name, threads))
        report(out)
        return status
    (header, rows), data = execute(cfg, threads)
    out.mkdir(parents=True, exist_ok=True)
    with open(out / "records.csv", "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        w.writerows(rows)
    data = {"experiment": cfg.experiment, **data}
    data["thresholds"] = {k: cfg.threshold(k) for k in DEFAULT_THRESHOLDS}
    _write_json(out / "summary.json", data)
    _write_json(out / "manifest.json", _manifest(cfg, data))
    return STATUS_OK if data["all_pass"] else STATUS_FAIL


def _write_json(path, obj):
    with open(path, "w") as fh:
        json.dump(_jsonable(obj), fh, indent=2, sort_keys=True)
        fh.write("\n")


def _jsonable(obj):
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return _jsonable(obj.tolist())
    if isinstance(obj, (np.floating, float)):
        x = float(obj)
        return x if math.isfinite(x) else str(x)
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, np.bool_):
        return bool(obj)
    return obj


# ---------------------------------------------------------------------------
# report
# ---------------------------------------------------------------------------

def report(directory) -> int:
    """Collect every summary.json below ``directory`` into report.md and .dat files."""
    root = Path(directory)
    paths = sorted(p for p in root.rglob("summary.json")) if root.is_dir() else []
    if not paths:
        print(f"no summary.json under {directory}", file=sys.stderr)
        return STATUS_INVALID
    lines = ["# Experiment report", ""]
    bad = []
    for path in paths:
        rel = path.parent.relative_to(root).as_posix() or "."
        try:
            data = json.loads(path.read_text())
            if not isinstance(data, dict) or "pass" not in data:
                raise ValueError("missing pass flags")
        except (ValueError, OSError) as exc:
            bad.append((rel, str(exc)))
            continue
        lines += _report_section(rel, data)
        series = data.get("series")
        if series:
            stem = rel.replace("/", "_") if rel != "." else "root"
            dat = root / f"{stem}.{series['name']}.dat"
            with open(dat, "w") as fh:
                for x, y in zip(series["x"], series["y"]):
                    fh.write(f"{float(x)!r} {float(y)!r}\n")
    if bad:
        lines += ["## Unreadable summaries", ""]
        lines += [f"- `{rel}`: {msg}" for rel, msg in bad]
        lines.append("")
    (root / "report.md").write_text("\n".join(lines))
    return STATUS_OK


def _fmt(x):
    if isinstance(x, float):
        return f"{x:.6g}"
    return str(x)


def _report_section(rel, data):
    exp = data.get("experiment", "?")
    out = [f"## {exp}: `{rel}`", "", "| case | sup_ratio | trend | pass |", "|---|---|---|---|"]
    case = data.get("body") or data.get("theorem") or exp
    if exp == "lattice":
        sup, trend = data.get("empirical"), data.get("predicted")
        out[2] = "| case | empirical exponent | predicted exponent | pass |"
    elif exp in ("decay", "slab"):
        sup, trend = data.get("alpha"), data.get("residual")
        out[2] = "| case | alpha | fit residual | pass |"
    else:
        sup, trend = data.get("sup_ratio"), data.get("trend")
    out.append(f"| {case} | {_fmt(sup)} | {_fmt(trend)} | {data.get('all_pass')} |")
    flags = ", ".join(f"{k}={v}" for k, v in sorted(data["pass"].items()))
    out += ["", f"pass flags: {flags}", ""]
    return out


# ---------------------------------------------------------------------------
# entry point
# ---------------------------------------------------------------------------

def _parser():
    ap = argparse.ArgumentParser(prog="slabdecay", description=__doc__.split("\n\n")[0])
    sub = ap.add_subparsers(dest="command", required=True)
    for name in ("decay", "slab", "verify", "lattice"):
        p = sub.add_parser(name, help=f"run a {name} experiment from a JSON config")
        p.add_argument("--config", required=True, help="experiment config (JSON)")
        p.add_argument("--out", help="output directory (overrides config.output)")
        p.add_argument("--threads", type=int, default=1)
        p.add_argument("--seed", type=int, help="overrides config.seed")
    p = sub.add_parser("report", help="consolidate summaries into report.md")
    p.add_argument("directory")
    return ap


def main(argv=None) -> int:
    args = _parser().parse_args(argv)
    if args.command == "report":
        return report(args.directory)
    try:
        try:
            text = Path(args.config).read_text()
        except OSError as exc:
            raise ConfigError(f"cannot read config: {exc}") from None
        try:
            raw = json.loads(text)
        except json.JSONDecodeError as exc:
            raise ConfigError(f"malformed JSON: {exc}") from None
        if isinstance(raw, dict) and "experiment" not in raw and \
                len(SUBCOMMAND_EXPERIMENTS.get(args.command, ())) == 1:
            raw["experiment"] = SUBCOMMAND_EXPERIMENTS[args.command][0]
        cfg = ExperimentConfig.from_dict(raw)
        if cfg.experiment not in SUBCOMMAND_EXPERIMENTS[args.command]:
            raise ConfigError(f"experiment {cfg.experiment!r} does not belong to "
                              f"'{args.command}'")
        if args.seed is not None:
            cfg.seed = args.seed
        if args.threads < 1:
            raise ConfigError("--threads must be at least 1")
        if not (args.out or cfg.output):
            raise ConfigError("no output directory: pass --out or set config.output")
    except ConfigError as exc:
        print(f"invalid config: {exc}", file=sys.stderr)
        return STATUS_INVALID
    return run(cfg, args.out, args.threads)


if __name__ == "__main__":
    sys.exit(main())
