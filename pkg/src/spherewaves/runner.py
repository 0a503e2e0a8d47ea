"""Experiment orchestration.

An experiment is a JSON config.  It expands into an ordered list of tasks;
task ``i`` draws from the stream keyed by (master seed, experiment id, i),
so results do not depend on the worker count.  Results are appended to
``records.ndjson`` strictly in task order by a single writer, which makes
an interrupted run a prefix of the complete one; rerunning replays only
the missing indices.
"""
from __future__ import annotations

import csv
import hashlib
import io
import json
import logging
import math
import os
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field
from functools import lru_cache
from pathlib import Path
from typing import Any

import numpy as np

from . import chaos, nodal, quadrature, specfun, stats
from .rng import RngStream
from .sphere_field import evaluate_on_grid, sample_coefficients

log = logging.getLogger(__name__)

KINDS = (
    "nodal-mean",
    "nodal-cap",
    "trispectrum-var",
    "clt",
    "reduction",
    "mdp-diag",
    "calibration",
    "hilb-scan",
    "variance-slope",
)
OUTPUT_ENV = "SPHEREWAVES_OUTPUT"

__all__ = [
    "ConfigError",
    "ExperimentConfig",
    "IncompleteRun",
    "ResultRecord",
    "build_hash",
    "emit_report",
    "load_config",
    "run_experiment",
]


class ConfigError(ValueError):
    pass


class IncompleteRun(RuntimeError):
    pass


@lru_cache(maxsize=1)
def build_hash() -> str:
    """Digest of the package sources, stamped on every record."""
    root = Path(__file__).parent
    h = hashlib.sha256()
    for path in sorted(root.glob("*.py")) + sorted(root.glob("*.pyx")):
        h.update(path.name.encode())
        h.update(path.read_bytes())
    return h.hexdigest()[:16]


def fmt(x: Any) -> str:
    """17 significant digits for floats, plain text otherwise."""
    if isinstance(x, (float, np.floating)):
        return format(float(x), ".17g")
    return str(x)


@dataclass
class ExperimentConfig:
    kind: str
    experiment_id: str
    ells: list[int] = field(default_factory=list)
    reps: int = 1
    rho: float = 8.0
    grid_order: int = 4
    cap: dict | None = None
    master_seed: int = 0
    workers: int = 1
    output_dir: str | None = None
    params: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ConfigError(f"unknown experiment kind {self.kind!r}; expected one of {KINDS}")
        if not self.experiment_id or "/" in self.experiment_id:
            raise ConfigError("experiment_id must be a non-empty name without '/'")
        self.ells = [int(e) for e in self.ells]
        if any(e < 1 for e in self.ells):
            raise ConfigError("every ell must be >= 1")
        if self.reps < 1:
            raise ConfigError("reps must be >= 1")
        if self.workers < 1:
            raise ConfigError("workers must be >= 1")
        if self.rho < nodal.MIN_RHO:
            raise ConfigError(f"rho must be >= {nodal.MIN_RHO}")
        if self.cap is not None:
            rule = self.cap.get("rule")
            if rule == "fixed":
                radii = self.cap.get("radii", [self.cap.get("r")])
                if not radii or any(r is None or not 0 < float(r) <= math.pi for r in radii):
                    raise ConfigError("fixed cap rule needs radii in (0, pi]")
            elif rule == "power":
                beta = float(self.cap.get("beta", -1))
                if not 0.0 <= beta < 1.0:
                    raise ConfigError("power cap rule needs beta in [0, 1) so that r_ell * ell -> infinity")
                if float(self.cap.get("c", 1.0)) <= 0:
                    raise ConfigError("power cap rule needs c > 0")
            else:
                raise ConfigError("cap rule must be 'fixed' or 'power'")
        if self.kind == "nodal-cap" and self.cap is None:
            raise ConfigError("nodal-cap needs a cap rule")

    def radii(self, ell: int) -> list[float | None]:
        if self.cap is None:
            return [None]
        if self.cap["rule"] == "fixed":
            return [float(r) for r in self.cap.get("radii", [self.cap.get("r")])]
        c = float(self.cap.get("c", 1.0))
        return [min(math.pi, c * ell ** -float(self.cap["beta"]))]

    def out_dir(self) -> Path:
        root = self.output_dir or os.environ.get(OUTPUT_ENV) or "runs"
        return Path(root) / self.experiment_id

    def resolved(self) -> dict:
        d = asdict(self)
        d.pop("workers")
        d.pop("output_dir")
        return d


def load_config(path: str | os.PathLike, **overrides) -> ExperimentConfig:
    try:
        data = json.loads(Path(path).read_text())
    except (OSError, json.JSONDecodeError) as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    data.update({k: v for k, v in overrides.items() if v is not None})
    unknown = set(data) - set(ExperimentConfig.__dataclass_fields__)
    if unknown:
        raise ConfigError(f"unknown config keys: {sorted(unknown)}")
    try:
        return ExperimentConfig(**data)
    except TypeError as exc:
        raise ConfigError(str(exc)) from exc


@dataclass(frozen=True)
class ResultRecord:
    experiment: str
    index: int
    ell: int
    radius: float | None
    rep: int
    stream_id: int
    payload: dict
    wall_time: float
    version: str


# -- tasks ------------------------------------------------------------------

SINGLE_TASK_KINDS = ("calibration", "hilb-scan", "variance-slope")


def _tasks(cfg: ExperimentConfig) -> list[tuple[int, float | None, int]]:
    if cfg.kind == "calibration":
        return [(0, None, 0)]
    if cfg.kind in ("hilb-scan", "variance-slope"):
        return [(ell, None, 0) for ell in cfg.ells]
    return [(ell, r, rep) for ell in cfg.ells for r in cfg.radii(ell) for rep in range(cfg.reps)]


@lru_cache(maxsize=8)
def _quad_grid(ell: int, radius: float | None, order: int):
    return chaos.trispectrum_grid(ell, radius, order=order)


@lru_cache(maxsize=8)
def _contour(ell: int, rho: float):
    return nodal.contour_grid(ell, rho)


def _region(radius):
    return nodal.FULL_SPHERE if radius is None else nodal.cap(radius)


def _replicate(kind: str, ell: int, radius, cfg: dict, stream: RngStream) -> dict:
    params = cfg["params"]
    if kind == "hilb-scan":
        return _hilb_scan(ell, int(params.get("points", 4000)))
    if kind == "variance-slope":
        return {"oracle_variance": chaos.trispectrum_variance_oracle(ell)}
    if kind == "calibration":
        return _calibration(params, stream)
    if kind in ("nodal-mean", "nodal-cap"):
        s = nodal.nodal_length_replicate(ell, cfg["rho"], _region(radius), stream)
        return {"length": s.length, "n_segments": s.n_segments}
    coeffs = sample_coefficients(ell, stream)
    if kind in ("trispectrum-var", "clt", "mdp-diag"):
        f = evaluate_on_grid(coeffs, _quad_grid(ell, radius, cfg["grid_order"]))
        return {"m": chaos.sample_trispectrum(f).value}
    if kind == "reduction":
        want_chaos = bool(params.get("chaos", False))
        f = evaluate_on_grid(coeffs, _quad_grid(ell, radius, cfg["grid_order"]), want_gradients=want_chaos)
        grid = _contour(ell, cfg["rho"]).populated(coeffs)
        out = {"length": nodal.extract_nodal_length(grid, _region(radius)).length, "m": chaos.sample_trispectrum(f).value}
        if want_chaos:
            out["l4"] = chaos.chaos_projection(f, 2).value
        return out
    raise ConfigError(f"unknown kind {kind}")


def _hilb_scan(ell: int, points: int) -> dict:
    theta = np.linspace(1.0 / ell, math.pi / 2, points)
    err = np.abs(specfun.legendre_p(ell, np.cos(theta)) - specfun.hilb_approximation(ell, theta))
    i = int(np.argmax(err))
    return {"scaled_sup_error": float(ell**1.5 * err[i]), "theta_at_sup": float(theta[i])}


def _calibration(params: dict, stream: RngStream) -> dict:
    thresholds = [float(x) for x in params.get("thresholds", [0.0, 0.5, 1.0, 1.5])]
    curve = stats.iid_mdp_calibration(
        int(params.get("n", 10_000)),
        float(params.get("a", 2.0)),
        params.get("distribution", "rademacher"),
        thresholds,
        int(params.get("sim_reps", 10**6)),
        stream,
    )
    out = {"x": thresholds, "rate": curve.rate.tolist(), "ci_lo": curve.ci_lo.tolist(), "ci_hi": curve.ci_hi.tolist(), "counts": curve.counts.tolist()}
    # Gaussian cross-check: simulated N(0,1) rates against the closed form on an (a, x) grid
    cross = []
    g_stream = RngStream(stream.master_seed, stream.stream_id ^ 0x5DEECE66D)
    g = g_stream.generator().standard_normal(int(params.get("sim_reps", 10**6)))
    for a in params.get("cross_a", [1.0, 1.5, 2.0]):
        c = stats.mdp_rate(g, float(a), params.get("cross_x", [0.5, 1.0, 1.5]))
        ref = stats.gaussian_reference_rate(float(a), c.x)
        for xi, lo, hi, r in zip(c.x, c.ci_lo, c.ci_hi, ref):
            cross.append({"a": float(a), "x": float(xi), "ci_lo": float(lo), "ci_hi": float(hi), "closed_form": float(r)})
    out["gaussian_cross_check"] = cross
    return out


def _run_task(args) -> tuple[dict, float]:
    cfg, index, ell, radius, rep = args
    stream = RngStream.for_replication(cfg["master_seed"], cfg["experiment_id"], index)
    t0 = time.perf_counter()
    payload = _replicate(cfg["kind"], ell, radius, cfg, stream)
    return payload, time.perf_counter() - t0


# -- persistence ------------------------------------------------------------


def _read_records(path: Path) -> list[dict]:
    """Complete records in file order; a torn final line is discarded."""
    if not path.exists():
        return []
    records = []
    with path.open("r") as fh:
        for line in fh:
            if not line.endswith("\n"):
                break
            records.append(json.loads(line))
    return records


def _truncate_torn_tail(path: Path) -> None:
    if not path.exists():
        return
    data = path.read_bytes()
    cut = data.rfind(b"\n") + 1
    if cut != len(data):
        with path.open("r+b") as fh:
            fh.truncate(cut)


def run_experiment(cfg: ExperimentConfig, max_new_records: int | None = None, force: bool = False) -> Path:
    """Execute (or resume) an experiment; returns the manifest path.

    ``max_new_records`` stops early after that many new records, leaving a
    resumable partial run (used to exercise crash recovery).
    """
    out = cfg.out_dir()
    out.mkdir(parents=True, exist_ok=True)
    rec_path = out / "records.ndjson"
    _truncate_torn_tail(rec_path)
    existing = _read_records(rec_path)
    version = build_hash()
    stale = {r["version"] for r in existing} - {version}
    if stale and not force:
        raise IncompleteRun(f"{rec_path} holds records from build(s) {sorted(stale)}; rerun with force to merge")
    config_path = out / "config.json"
    resolved = json.dumps(cfg.resolved(), sort_keys=True, indent=2) + "\n"
    if config_path.exists() and existing and config_path.read_text() != resolved:
        raise ConfigError(f"{out} holds a run with a different config")
    config_path.write_text(resolved)

    tasks = _tasks(cfg)
    for i, r in enumerate(existing):
        if r["index"] != i:
            raise IncompleteRun(f"record file {rec_path} is not an index-ordered prefix")
    todo = list(range(len(existing), len(tasks)))
    if max_new_records is not None:
        todo = todo[:max_new_records]
    cfg_dict = cfg.resolved()
    jobs = [(cfg_dict, i, *tasks[i]) for i in todo]
    if jobs:
        log.info("%s: running %d of %d tasks", cfg.experiment_id, len(jobs), len(tasks))
        with rec_path.open("a") as fh:
            if cfg.workers == 1:
                results = map(_run_task, jobs)
                _append(fh, cfg, jobs, results, version)
            else:
                with ProcessPoolExecutor(max_workers=cfg.workers) as pool:
                    chunk = max(1, len(jobs) // (8 * cfg.workers))
                    _append(fh, cfg, jobs, pool.map(_run_task, jobs, chunksize=chunk), version)
    records = _read_records(rec_path)
    complete = len(records) == len(tasks)
    _write_samples_csv(out / "samples.csv", records)
    manifest = {
        "experiment_id": cfg.experiment_id,
        "kind": cfg.kind,
        "config": cfg.resolved(),
        "version": version,
        "n_tasks": len(tasks),
        "n_records": len(records),
        "complete": complete,
        "records": "records.ndjson",
        "samples": "samples.csv",
    }
    path = out / "manifest.json"
    path.write_text(json.dumps(manifest, sort_keys=True, indent=2) + "\n")
    return path


def _append(fh, cfg, jobs, results, version):
    for job, (payload, wall) in zip(jobs, results):
        _, index, ell, radius, rep = job
        rec = ResultRecord(
            cfg.experiment_id,
            index,
            ell,
            radius,
            rep,
            RngStream.for_replication(cfg.master_seed, cfg.experiment_id, index).stream_id,
            payload,
            wall,
            version,
        )
        fh.write(json.dumps(asdict(rec), sort_keys=True) + "\n")
        fh.flush()


def _flat_payload(payload: dict) -> dict:
    return {k: v for k, v in payload.items() if not isinstance(v, (list, dict))}


def _write_samples_csv(path: Path, records: list[dict]) -> None:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    keys = sorted({k for r in records for k in _flat_payload(r["payload"])})
    w.writerow(["index", "ell", "radius", "rep", "stream_id", *keys])
    for r in records:
        p = _flat_payload(r["payload"])
        w.writerow([r["index"], r["ell"], "" if r["radius"] is None else fmt(r["radius"]), r["rep"], r["stream_id"], *(fmt(p.get(k, "")) for k in keys)])
    path.write_text(buf.getvalue())


# -- reports ----------------------------------------------------------------


def _check(name: str, passed: bool, **detail) -> dict:
    return {"name": name, "passed": bool(passed), **{k: _jsonable(v) for k, v in detail.items()}}


def _jsonable(v):
    if isinstance(v, (np.floating, float)):
        v = float(v)
        return v if math.isfinite(v) else str(v)
    if isinstance(v, np.integer):
        return int(v)
    if isinstance(v, (list, tuple, np.ndarray)):
        return [_jsonable(x) for x in v]
    if isinstance(v, dict):
        return {k: _jsonable(x) for k, x in v.items()}
    return v


def _group(records, key="ell"):
    groups: dict = {}
    for r in records:
        groups.setdefault((r["ell"], r["radius"]), []).append(r["payload"])
    return groups


def variance_se(x: np.ndarray) -> float:
    """Standard error of the sample variance, using the fourth central moment."""
    c = x - x.mean()
    m2 = np.mean(c**2)
    m4 = np.mean(c**4)
    return math.sqrt(max(m4 - m2**2, 0.0) / x.size)


def _bootstrap_se(stat, x: np.ndarray, n_boot: int = 200, seed: int = 0) -> float:
    rng = np.random.Generator(np.random.Philox(seed))
    vals = [stat(x[rng.integers(0, x.size, x.size)]) for _ in range(n_boot)]
    return float(np.std(vals, ddof=1))


def _standardized_m(cfg: dict, ell: int, radius, m: np.ndarray) -> np.ndarray:
    if radius is None:
        return m / math.sqrt(chaos.trispectrum_variance_oracle(ell))
    pilot = chaos.pilot_cap_variance(ell, radius, int(cfg["params"].get("pilot", 2000)), cfg["master_seed"])
    return m / math.sqrt(pilot.value)


def summarize_records(cfg: dict, records: list[dict]) -> dict:
    kind = cfg["kind"]
    params = cfg["params"]
    groups = _group(records)
    rows: list[dict] = []
    checks: list[dict] = []
    plot: dict[str, list] = {}
    if kind in ("nodal-mean", "nodal-cap"):
        tol = float(params.get("rel_tol", 0.01 if kind == "nodal-mean" else 0.02))
        for (ell, radius), ps in sorted(groups.items(), key=lambda kv: (kv[0][0], kv[0][1] or 0)):
            x = np.array([p["length"] for p in ps])
            target = nodal.expected_nodal_length(ell, _region(radius))
            se = float(x.std(ddof=1) / math.sqrt(x.size)) if x.size > 1 else float("nan")
            band = max(3 * se, tol * target)
            rows.append({"ell": ell, "radius": radius, "n": x.size, "mean": x.mean(), "se": se, "expected": target, "rel_err": x.mean() / target - 1, "band": band})
            checks.append(_check(f"mean ell={ell} r={radius}", abs(x.mean() - target) <= band, mean=x.mean(), expected=target, band=band))
    elif kind == "trispectrum-var":
        for (ell, radius), ps in sorted(groups.items(), key=lambda kv: kv[0]):
            m = np.array([p["m"] for p in ps])
            var, se = float(np.var(m, ddof=1)), variance_se(m)
            oracle = chaos.trispectrum_variance_oracle(ell) if radius is None else float("nan")
            mean_se = float(m.std(ddof=1) / math.sqrt(m.size))
            rows.append({"ell": ell, "radius": radius, "n": m.size, "mc_variance": var, "variance_se": se, "oracle_variance": oracle, "mean": m.mean(), "mean_se": mean_se})
            if radius is None:
                checks.append(_check(f"variance ell={ell}", abs(var - oracle) <= 3 * se, mc=var, oracle=oracle, se=se))
            checks.append(_check(f"mean ell={ell}", abs(m.mean()) <= 3 * mean_se, mean=m.mean(), se=mean_se))
    elif kind == "clt":
        kol_max = float(params.get("kol_max", 0.1))
        prev = None
        for (ell, radius), ps in sorted(groups.items(), key=lambda kv: kv[0]):
            z = _standardized_m(cfg, ell, radius, np.array([p["m"] for p in ps]))
            d_k, d_w = stats.kolmogorov_distance(z), stats.wasserstein1_to_gaussian(z)
            se_k = _bootstrap_se(stats.kolmogorov_distance, z, seed=ell)
            se_w = _bootstrap_se(stats.wasserstein1_to_gaussian, z, seed=ell + 1)
            s = stats.summarize(z)
            row = {"ell": ell, "radius": radius, "n": z.size, "d_kol": d_k, "d_kol_se": se_k, "w1": d_w, "w1_se": se_w, "k4": s.k4, "k4_se": s.se_k4, "mean": s.mean, "variance": s.variance}
            rows.append(row)
            if prev is not None:
                for key in ("d_kol", "w1"):
                    slack = 2 * math.hypot(prev[key + "_se"], row[key + "_se"])
                    checks.append(_check(f"{key} nonincreasing {prev['ell']}->{ell}", row[key] <= prev[key] + slack, before=prev[key], after=row[key], slack=slack))
            prev = row
        if rows:
            checks.append(_check(f"d_kol <= {kol_max} at ell={rows[-1]['ell']}", rows[-1]["d_kol"] <= kol_max, d_kol=rows[-1]["d_kol"]))
    elif kind == "reduction":
        min_corr = float(params.get("min_corr", 0.9))
        for (ell, radius), ps in sorted(groups.items(), key=lambda kv: kv[0]):
            length = np.array([p["length"] for p in ps])
            m = np.array([p["m"] for p in ps])
            # sample centring: the rho-grid bias grows like ell and would swamp the fluctuation
            lt = (length - length.mean()) / length.std(ddof=1)
            mt = m / math.sqrt(chaos.trispectrum_variance_oracle(ell)) if radius is None else m / m.std(ddof=1)
            d2 = (lt - mt) ** 2
            row = {"ell": ell, "radius": radius, "n": length.size, "mse": d2.mean(), "mse_se": d2.std(ddof=1) / math.sqrt(d2.size), "corr": np.corrcoef(length, m)[0, 1], "var_length": length.var(ddof=1), "var_m": m.var(ddof=1), "mean_bias": length.mean() - nodal.expected_nodal_length(ell, _region(radius))}
            if "l4" in ps[0]:
                l4 = np.array([p["l4"] for p in ps])
                row["corr_l4_m"] = np.corrcoef(l4, m)[0, 1]
            rows.append(row)
        mses = [r["mse"] for r in rows]
        if rows:
            checks.append(_check("mse strictly decreasing in ell", all(b < a for a, b in zip(mses, mses[1:])), mse=mses))
            checks.append(_check(f"corr >= {min_corr} at ell={rows[-1]['ell']}", rows[-1]["corr"] >= min_corr, corr=rows[-1]["corr"]))
    elif kind == "mdp-diag":
        lo_band, hi_band = params.get("band", [0.7, 1.3])
        xs = params.get("thresholds", [1.0, 1.5, 2.0])
        for (ell, radius), ps in sorted(groups.items(), key=lambda kv: kv[0]):
            z = _standardized_m(cfg, ell, radius, np.array([p["m"] for p in ps]))
            td = stats.tail_log_ratio(z, xs)
            a = float(params["a"]) if "a" in params else stats.scale_schedule("sphere", float(params.get("gamma", 0.25)), ell) if ell > 15 else 1.0
            curve = stats.mdp_rate(z, a, params.get("mdp_x", [0.0, 0.25, 0.5, 0.75, 1.0]))
            rows.append({"ell": ell, "radius": radius, "n": z.size, "a": a, "x": td.x, "right": td.right, "left": td.left, "right_ci": list(zip(td.right_lo, td.right_hi)), "left_ci": list(zip(td.left_lo, td.left_hi))})
            plot[f"mdp_curve_ell{ell}"] = [{"x": x, "rate": r, "ci_lo": lo, "ci_hi": hi, "half_x_squared": ref} for x, r, lo, hi, ref in curve.rows()]
            plot[f"tail_ratio_ell{ell}"] = [{"x": x, "estimate": e, "ci_lo": lo, "ci_hi": hi, "reference": ref} for x, e, lo, hi, ref in td.rows()]
            for side in ("right", "left"):
                vals = getattr(td, side)
                checks.append(_check(f"{side} log-tail ratios in [{lo_band}, {hi_band}] ell={ell}", bool(np.all((vals >= lo_band) & (vals <= hi_band))), ratios=vals))
    elif kind == "calibration":
        p = records[0]["payload"] if records else None
        if p is not None:
            lo_band, hi_band = params.get("band", [0.35, 0.65])
            x_check = float(params.get("x_check", 1.0))
            i = p["x"].index(x_check)
            rows.append({"x": p["x"], "rate": p["rate"], "ci_lo": p["ci_lo"], "ci_hi": p["ci_hi"], "reference": [0.5 * x * x for x in p["x"]]})
            checks.append(_check(f"rate at x={x_check} in [{lo_band}, {hi_band}]", lo_band <= p["rate"][i] <= hi_band, rate=p["rate"][i], ci=[p["ci_lo"][i], p["ci_hi"][i]]))
            cc = p["gaussian_cross_check"]
            ok = all(c["ci_lo"] <= c["closed_form"] <= c["ci_hi"] for c in cc)
            checks.append(_check("gaussian closed form inside simulated CI on every grid point", ok, grid=cc))
            plot["mdp_curve"] = [{"x": x, "rate": r, "ci_lo": lo, "ci_hi": hi, "half_x_squared": 0.5 * x * x} for x, r, lo, hi in zip(p["x"], p["rate"], p["ci_lo"], p["ci_hi"])]
    elif kind == "hilb-scan":
        vals = []
        for (ell, _), ps in sorted(groups.items(), key=lambda kv: kv[0]):
            rows.append({"ell": ell, **ps[0]})
            vals.append(ps[0]["scaled_sup_error"])
        if vals:
            ratio = max(vals) / min(vals)
            checks.append(_check("scaled sup error varies <= 2x", ratio <= float(params.get("max_ratio", 2.0)), ratio=ratio, values=vals))
    elif kind == "variance-slope":
        ells, v = [], []
        for (ell, _), ps in sorted(groups.items(), key=lambda kv: kv[0]):
            ells.append(ell)
            v.append(ps[0]["oracle_variance"])
            rows.append({"ell": ell, "oracle_variance": ps[0]["oracle_variance"]})
        plot["variance_slope"] = [{"ell": e, "oracle_variance": x, "reference_one_thirtysecond_log_ell": math.log(e) / 32.0} for e, x in zip(ells, v)]
        if len(ells) >= 2:
            slope = float(np.polyfit(np.log(ells), v, 1)[0])
            tol = float(params.get("rel_tol", 0.2))
            checks.append(_check("slope vs log ell within tolerance of 1/32", abs(slope - 1 / 32) <= tol / 32, slope=slope))
    return {"rows": _jsonable(rows), "checks": checks, "plot": _jsonable(plot)}


def emit_report(manifest_path: str | os.PathLike, force: bool = False) -> dict:
    """Write summary.json and plot-ready CSVs next to the manifest."""
    manifest_path = Path(manifest_path)
    manifest = json.loads(manifest_path.read_text())
    if not manifest["complete"]:
        raise IncompleteRun(
            f"{manifest['experiment_id']}: {manifest['n_records']} of {manifest['n_tasks']} records; "
            "resume with `spherewaves run --config <config>`"
        )
    out = manifest_path.parent
    records = _read_records(out / manifest["records"])
    versions = {r["version"] for r in records}
    if len(versions) > 1 and not force:
        raise IncompleteRun(f"records come from several builds {sorted(versions)}; pass force to merge")
    cfg = manifest["config"]
    summary = summarize_records(cfg, records)
    report = {
        "experiment_id": manifest["experiment_id"],
        "kind": manifest["kind"],
        "version": manifest["version"],
        "passed": all(c["passed"] for c in summary["checks"]),
        **summary,
    }
    (out / "summary.json").write_text(json.dumps(report, sort_keys=True, indent=2) + "\n")
    for name, rows in summary["plot"].items():
        if not rows:
            continue
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        keys = list(rows[0])
        w.writerow(keys)
        for r in rows:
            w.writerow([fmt(r[k]) for k in keys])
        (out / f"{name}.csv").write_text(buf.getvalue())
    return report
