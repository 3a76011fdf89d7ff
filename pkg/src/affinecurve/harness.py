"""Config-driven experiment runner and deterministic report emitters.

A config is one JSON object; every key is optional and unknown keys are
errors::

    {
      "curves": [{"id": "circle", "generator": "circle", "params": {"r": 1}}, ...],
      "resolution": 4096,              # nodes for smooth generators (measure)
      "delta_exponents": [2, ..., 7],  # delta = diameter * 2**-k
      "n_pieces": 8,                   # equal-turning partition size
      "exponents": [1.2],              # p values for the norm ratios
      "maximal": [false, true],        # which ratios to compute
      "restrict_resolution": 256,      # nodes for smooth generators (restrict)
      "bank": ["standard", ...],       # names from the default bank or
                                       # {"name", "center", "inverse_covariance",
                                       #  "modulation", "amplitude"} objects
      "probe": {"functions": [...], "points": 8, "scales": 8, "curves": null},
      "fields": {"extent": 4.0, "n": 33},
      "seed": 0,
      "out": "results"
    }

``amplitude`` is a number or a ``[re, im]`` pair. ``probe.curves`` null means
every curve. Outputs written to the output directory:

* ``comparability.csv`` and ``comparability.json`` (with the covering rects),
* ``norm_ratios.csv`` and ``norm_ratios.json`` (with per-curve maxima),
* ``lebesgue_probe.csv``,
* ``fields/<curve>_extension.txt``, the extension of ``f = 1`` on a grid,
* ``manifest.json``.

Floats are written with ``repr`` so identical inputs give identical bytes.
"""

from __future__ import annotations

import csv
import json
import math
import platform
import sys
import warnings
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np
import scipy

from . import __version__, families
from . import checks as _checks
from .affine import comparability_constants, comparability_report, default_partition
from .chart import arclength_chart
from .errors import BoundaryAttainmentWarning, ConfigError, CurveError, ResolutionWarning
from .restriction import (
    TestFunction,
    dual_exponent,
    extension_grid,
    lebesgue_point_probe,
    loglog_slope,
    norm_ratio,
    write_field_grid,
)

COMMANDS = ("measure", "restrict", "probe")
#: Acceptance criteria run alongside each command; ``all`` runs every one.
COMMAND_CHECKS = {
    "measure": ("AC1", "AC2", "AC3", "AC4"),
    "restrict": ("AC5", "AC6", "AC7"),
    "probe": ("AC8",),
}
#: Row statuses that mark a resolution limit rather than a failure.
BENIGN_STATUSES = {"ok", "ResolutionExhausted"}

_PROBE_KEYS = {"functions", "points", "scales", "curves"}
_FIELD_KEYS = {"extent", "n"}
_TF_KEYS = {"name", "center", "inverse_covariance", "modulation", "amplitude"}


def _default_probe() -> dict:
    return {"functions": [tf.name for tf in _checks.probe_bank()], "points": 8, "scales": 8, "curves": None}


@dataclass
class ExperimentConfig:
    curves: list = field(default_factory=lambda: [dict(e) for e in families.STANDARD_FAMILY])
    resolution: int = 4096
    delta_exponents: list = field(default_factory=lambda: list(range(2, 8)))
    n_pieces: int = 8
    exponents: list = field(default_factory=lambda: [1.2])
    maximal: list = field(default_factory=lambda: [False, True])
    restrict_resolution: int = 256
    bank: list = field(default_factory=lambda: [tf.name for tf in _checks.default_bank()])
    probe: dict = field(default_factory=_default_probe)
    fields: dict = field(default_factory=lambda: {"extent": 4.0, "n": 33})
    seed: int = 0
    out: str = "results"

    @classmethod
    def from_mapping(cls, data: dict) -> "ExperimentConfig":
        if not isinstance(data, dict):
            raise ConfigError("config must be a JSON object")
        known = set(cls.__dataclass_fields__)
        unknown = set(data) - known
        if unknown:
            raise ConfigError(f"unknown config keys: {sorted(unknown)}")
        cfg = cls(**data)
        cfg.validate()
        return cfg

    @classmethod
    def load(cls, path) -> "ExperimentConfig":
        try:
            with open(path, encoding="utf-8") as fh:
                data = json.load(fh)
        except json.JSONDecodeError as exc:
            raise ConfigError(f"{path}: invalid JSON ({exc})") from None
        return cls.from_mapping(data)

    @classmethod
    def reproducibility_config(cls) -> "ExperimentConfig":
        """A small configuration that exercises every output in a few seconds."""
        return cls(
            curves=[
                {"id": "circle", "generator": "circle", "params": {"r": 1.0}},
                {"id": "random_12", "generator": "random_convex_polygon", "params": {"n": 12}},
            ],
            resolution=512,
            delta_exponents=[2, 3, 4],
            n_pieces=4,
            restrict_resolution=128,
            bank=["standard", "hat_at_e1"],
            probe={"functions": ["standard"], "points": 2, "scales": 4, "curves": ["circle"]},
            fields={"extent": 2.0, "n": 5},
            seed=7,
        )

    def validate(self) -> None:
        if not isinstance(self.curves, list):
            raise ConfigError("'curves' must be a list")
        if int(self.resolution) < 16 or int(self.restrict_resolution) < 16:
            raise ConfigError("resolutions must be at least 16")
        if not self.delta_exponents or any(int(k) != k for k in self.delta_exponents):
            raise ConfigError("'delta_exponents' must be a non-empty list of integers")
        if int(self.n_pieces) < 1:
            raise ConfigError("'n_pieces' must be positive")
        if any(not isinstance(m, bool) for m in self.maximal):
            raise ConfigError("'maximal' must be a list of booleans")
        for key, allowed, section in (("probe", _PROBE_KEYS, self.probe), ("fields", _FIELD_KEYS, self.fields)):
            if not isinstance(section, dict):
                raise ConfigError(f"'{key}' must be an object")
            unknown = set(section) - allowed
            if unknown:
                raise ConfigError(f"unknown keys in '{key}': {sorted(unknown)}")
        self.test_functions()
        self.probe_functions()

    def test_functions(self) -> list[TestFunction]:
        return [_test_function(entry) for entry in self.bank]

    def probe_functions(self) -> list[TestFunction]:
        return [_test_function(entry) for entry in self.probe.get("functions", _default_probe()["functions"])]

    def to_dict(self) -> dict:
        return asdict(self)


def _test_function(entry) -> TestFunction:
    if isinstance(entry, str):
        named = {tf.name: tf for tf in _checks.default_bank()}
        if entry not in named:
            raise ConfigError(f"unknown test function {entry!r}; known: {sorted(named)}")
        return named[entry]
    if not isinstance(entry, dict):
        raise ConfigError("bank entries must be names or objects")
    unknown = set(entry) - _TF_KEYS
    if unknown:
        raise ConfigError(f"unknown keys in test function: {sorted(unknown)}")
    amp = entry.get("amplitude", 1.0)
    if isinstance(amp, (list, tuple)):
        amp = complex(amp[0], amp[1])
    try:
        return TestFunction(
            center=np.asarray(entry.get("center", (0.0, 0.0)), float),
            inverse_covariance=np.asarray(entry.get("inverse_covariance", np.eye(2)), float),
            modulation=np.asarray(entry.get("modulation", (0.0, 0.0)), float),
            amplitude=amp,
            name=str(entry.get("name", "gaussian")),
        )
    except ValueError as exc:
        raise ConfigError(f"bad test function: {exc}") from None


# -- emitters ---------------------------------------------------------------


def _fmt(v) -> str:
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, (float, np.floating)):
        return repr(float(v))
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    return str(v)


def _write_csv(path: Path, header, rows) -> None:
    with open(path, "w", encoding="utf-8", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for row in rows:
            w.writerow([_fmt(v) for v in row])


def _json_float(v):
    v = float(v)
    return v if math.isfinite(v) else None


def _write_json(path: Path, data) -> None:
    path.write_text(json.dumps(data, indent=2, sort_keys=False) + "\n", encoding="utf-8")


# -- stages -----------------------------------------------------------------

COMPARABILITY_COLUMNS = (
    "curve_id",
    "interval_start",
    "interval_end",
    "nu",
    "mu_upper_cost",
    "lower_bound",
    "ratio_upper",
    "ratio_lower",
    "delta",
    "n_rects",
    "status",
)
NORM_RATIO_COLUMNS = ("curve_id", "function_id", "p", "q", "maximal", "numerator", "denominator", "ratio", "status")
PROBE_COLUMNS = ("curve_id", "function_id", "t", "scale", "average_error", "maximal_error")


def _measure(config, curves, out: Path) -> list[str]:
    const = comparability_constants()
    csv_rows, json_curves, statuses = [], {}, []
    for cid, curve in curves:
        chart = arclength_chart(curve)
        deltas = [chart.diameter * 2.0 ** -int(k) for k in config.delta_exponents]
        report = comparability_report(chart, default_partition(chart, int(config.n_pieces)), deltas)
        entries = []
        for r in report.rows:
            csv_rows.append(
                (cid, r.interval_start, r.interval_end, r.nu, r.mu_upper_cost, r.lower_bound,
                 r.ratio_upper, r.ratio_lower, r.delta, r.n_rects, r.status)
            )
            statuses.append(r.status)
            entries.append(
                {
                    "interval_start": r.interval_start,
                    "interval_end": r.interval_end,
                    "nu": r.nu,
                    "mu_upper_cost": _json_float(r.mu_upper_cost),
                    "lower_bound": r.lower_bound,
                    "ratio_upper": _json_float(r.ratio_upper),
                    "ratio_lower": _json_float(r.ratio_lower),
                    "delta": r.delta,
                    "n_rects": r.n_rects,
                    "status": r.status,
                    "rects": [rect.to_dict() for rect in r.covering.rects] if r.covering is not None else [],
                }
            )
        json_curves[cid] = entries
    _write_csv(out / "comparability.csv", COMPARABILITY_COLUMNS, csv_rows)
    _write_json(out / "comparability.json", {"A": const.A, "B": const.B, "curves": json_curves})
    return statuses


def _restrict(config, curves, out: Path) -> list[str]:
    bank = config.test_functions()
    rows, statuses, best = [], [], {}
    fdir = out / "fields"
    fdir.mkdir(exist_ok=True)
    axis = np.linspace(-float(config.fields["extent"]), float(config.fields["extent"]), int(config.fields["n"]))
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", BoundaryAttainmentWarning)
        for cid, curve in curves:
            chart = arclength_chart(curve)
            try:
                values = extension_grid(chart, axis, axis)
            except CurveError as exc:
                statuses.append(f"field:{type(exc).__name__}")
            else:
                write_field_grid(fdir / f"{cid}_extension.txt", axis, axis, values, label=f"{cid} f=1")
            for p in config.exponents:
                for maximal in config.maximal:
                    for tf in bank:
                        try:
                            r = norm_ratio(chart, tf, float(p), maximal=maximal, curve_id=cid)
                        except CurveError as exc:
                            q = _safe_q(p)
                            rows.append((cid, tf.name, float(p), q, maximal, math.nan, math.nan, math.nan, type(exc).__name__))
                            statuses.append(type(exc).__name__)
                            continue
                        rows.append((cid, tf.name, r.p, r.q, maximal, r.numerator, r.denominator, r.ratio, "ok"))
                        statuses.append("ok")
                        key = f"p={float(p)!r},maximal={'true' if maximal else 'false'}"
                        best.setdefault(cid, {})
                        best[cid][key] = max(best[cid].get(key, 0.0), r.ratio)
    _write_csv(out / "norm_ratios.csv", NORM_RATIO_COLUMNS, rows)
    _write_json(
        out / "norm_ratios.json",
        {
            "rows": [dict(zip(NORM_RATIO_COLUMNS, (_json_float(v) if isinstance(v, float) else v for v in row))) for row in rows],
            "max_ratio_per_curve": best,
        },
    )
    return statuses


def _safe_q(p) -> float:
    try:
        return dual_exponent(float(p))
    except (CurveError, ValueError, ZeroDivisionError):
        return math.nan


def _probe(config, curves, out: Path) -> tuple[list[str], dict]:
    settings = {**_default_probe(), **config.probe}
    wanted = settings["curves"]
    scales = _checks.probe_scales(int(settings["scales"]))
    rows, statuses, slopes = [], [], {}
    for cid, curve in curves:
        if wanted is not None and cid not in wanted:
            continue
        chart = arclength_chart(curve)
        worst = math.inf
        for tf in config.probe_functions():
            for t in _checks.probe_points(chart, int(settings["points"])):
                try:
                    probe = lebesgue_point_probe(chart, tf, float(t), scales)
                except CurveError as exc:
                    statuses.append(type(exc).__name__)
                    continue
                statuses.append("ok")
                for pr in probe:
                    rows.append((cid, tf.name, pr.t, pr.scale, pr.average_error, pr.maximal_error))
                worst = min(worst, loglog_slope([pr.scale for pr in probe], [pr.maximal_error for pr in probe]))
        slopes[cid] = _json_float(worst)
    _write_csv(out / "lebesgue_probe.csv", PROBE_COLUMNS, rows)
    return statuses, slopes


# -- runner -----------------------------------------------------------------


@dataclass
class ExperimentResult:
    out: Path
    manifest: dict
    exit_code: int


def _expand(commands) -> tuple[str, ...]:
    out = []
    for c in commands:
        if c == "all":
            out.extend(COMMANDS)
        elif c in COMMANDS:
            out.append(c)
        else:
            raise ConfigError(f"unknown command {c!r}")
    return tuple(dict.fromkeys(out))


def run_experiment(config: ExperimentConfig, out=None, commands=("all",), checks: bool = True) -> ExperimentResult:
    """Run the requested stages and write their reports under ``out``.

    Parameters
    ----------
    config : ExperimentConfig
    out : path, optional
        Output directory; defaults to ``config.out``.
    commands : sequence of str
        Any of ``measure``, ``restrict``, ``probe`` and ``all``.
    checks : bool
        Run the acceptance criteria tied to the stages (all of them for
        ``all``) and record them in the manifest. Criteria not run are
        recorded with ``passed`` null.

    Returns
    -------
    ExperimentResult
        ``exit_code`` is 0 when no row failed and every criterion run passed.

    Raises
    ------
    ConfigError
        Bad config, unknown command or an empty curve family; nothing is
        written in that case.
    """
    stages = _expand(commands)
    config.validate()
    curves = families.generate_family(config.curves, seed=int(config.seed), resolution=int(config.resolution))
    if not curves:
        raise ConfigError("no curves")
    restrict_curves = None
    if "restrict" in stages:
        restrict_curves = families.generate_family(
            config.curves, seed=int(config.seed), resolution=int(config.restrict_resolution)
        )
    out = Path(config.out if out is None else out)
    out.mkdir(parents=True, exist_ok=True)

    statuses: dict[str, list[str]] = {}
    summary = {}
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", ResolutionWarning)
        if "measure" in stages:
            statuses["comparability"] = _measure(config, curves, out)
        if "restrict" in stages:
            statuses["norm_ratios"] = _restrict(config, restrict_curves, out)
        if "probe" in stages:
            statuses["lebesgue_probe"], summary["min_probe_slope"] = _probe(config, curves, out)

    acceptance = {cid: {"passed": None, "value": None, "detail": "not run", "seconds_budget": None} for cid in checks_ids()}
    if checks:
        wanted = checks_ids() if "all" in commands else [c for s in stages for c in COMMAND_CHECKS[s]]
        for cid in wanted:
            acceptance[cid] = _run_check(cid)

    row_errors = {
        name: dict(sorted(_count(s for s in sts if s not in BENIGN_STATUSES).items())) for name, sts in statuses.items()
    }
    failed_rows = any(row_errors.values())
    failed_checks = any(entry["passed"] is False for entry in acceptance.values())
    const = comparability_constants()
    manifest = {
        "package": "affinecurve",
        "versions": {
            "affinecurve": __version__,
            "python": platform.python_version(),
            "numpy": np.__version__,
            "scipy": scipy.__version__,
        },
        "constants": {"A": const.A, "B": const.B},
        "commands": list(stages),
        "config": config.to_dict(),
        "acceptance": acceptance,
        "row_errors": row_errors,
        "resolution_limited_rows": sum(s == "ResolutionExhausted" for sts in statuses.values() for s in sts),
        "summary": summary,
        "exit_code": int(failed_rows or failed_checks),
    }
    _write_json(out / "manifest.json", manifest)
    return ExperimentResult(out=out, manifest=manifest, exit_code=manifest["exit_code"])


def checks_ids() -> tuple[str, ...]:
    return _checks.ACCEPTANCE_IDS


def _count(items) -> dict[str, int]:
    counts: dict[str, int] = {}
    for s in items:
        counts[s] = counts.get(s, 0) + 1
    return counts


def _run_check(cid: str) -> dict:
    try:
        result = _checks.ALL_CHECKS[cid]()
    except Exception as exc:  # a crashing check is a failed criterion, not a crashed run
        print(f"{cid} crashed: {type(exc).__name__}: {exc}", file=sys.stderr)
        return {"passed": False, "value": None, "detail": f"{type(exc).__name__}: {exc}", "seconds_budget": None}
    print(result.line(), file=sys.stderr)
    return result.to_dict()
