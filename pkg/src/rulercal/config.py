"""Run configuration: YAML ingestion and whole-config validation.

Validation collects every violation (with its field path) before anything
is simulated, so a bad config fails fast with a complete report.
"""
from __future__ import annotations

import os
from dataclasses import dataclass, field, fields as dc_fields

import yaml

from .abm.params import District, ModelParams, solve_influence_probs
from .objective import CalibrationTargets
from .ruler import MT_COMMENTED, MT_TEXT
from .space import DiscreteSpace

__all__ = [
    "RunConfig", "RulerConfig", "SstConfig", "SyntheticConfig",
    "ValidationReport", "ConfigError", "load_config", "parse_config",
    "validate_config", "default_config_dict", "HCV_AXES", "HCV_TARGETS",
]

# Calibration lattice and targets for the HCV model: per-event medical
# infection probability, needle-sharing probability, influence probability
# against antibody / RNA / IDU prevalence targets.
HCV_AXES = (
    (0.035, 0.03525, 0.0355, 0.03575, 0.036, 0.03625, 0.0365, 0.03675, 0.037),
    (0.2, 0.25, 0.3, 0.35, 0.4),
    (1.9e-5, 2.0e-5, 2.1e-5, 2.2e-5, 2.3e-5),
)
HCV_TARGETS = (3.6, 2.6, 0.1)


class ConfigError(ValueError):
    """Configuration failed validation; the message lists every violation."""


@dataclass
class ValidationReport:
    errors: list[tuple[str, str]] = field(default_factory=list)

    def add(self, path: str, message: str):
        self.errors.append((path, message))

    @property
    def ok(self) -> bool:
        return not self.errors

    def format(self) -> str:
        if self.ok:
            return "configuration valid"
        lines = [f"{len(self.errors)} configuration error(s):"]
        lines += [f"  {path}: {message}" for path, message in self.errors]
        return "\n".join(lines)


@dataclass(frozen=True)
class RulerConfig:
    a: float = 0.1
    b: float | None = None          # None: estimate from the lattice extremes
    deltas: tuple[float, ...] = (0.45, 0.375, 0.3, 0.2)
    budget: int = 40
    mt_schedule: str = MT_TEXT
    start: str = "xl"               # "xl", "xr", or comma-separated indices


@dataclass(frozen=True)
class SstConfig:
    enabled: bool = False
    replicates: int | None = None   # None: reuse the main replicate count


@dataclass(frozen=True)
class SyntheticConfig:
    kind: str = "affine"
    intercepts: tuple[float, ...] = ()
    weights: tuple[tuple[float, ...], ...] = ()
    noise_sd: tuple[float, ...] = (0.0,)


@dataclass(frozen=True)
class RunConfig:
    oracle: str = "abm"             # "abm" or "synthetic"
    targets: tuple[float, ...] = HCV_TARGETS
    axes: tuple[tuple[float, ...], ...] = HCV_AXES
    ruler: RulerConfig = RulerConfig()
    sst: SstConfig = SstConfig()
    synthetic: SyntheticConfig = SyntheticConfig()
    model: ModelParams = ModelParams()
    k_replicates: int = 5
    master_seed: int = 0
    n_jobs: int = 1
    output_dir: str = "runs"

    def space(self) -> DiscreteSpace:
        return DiscreteSpace(self.axes)

    def calibration_targets(self) -> CalibrationTargets:
        return CalibrationTargets(self.targets)


def default_config_dict() -> dict:
    """The desk-scale HCV configuration as a plain dict (YAML-shaped)."""
    return {
        "oracle": "abm",
        "targets": list(HCV_TARGETS),
        "lattice": {"axes": [list(a) for a in HCV_AXES]},
        "ruler": {"a": 0.1, "b": None, "deltas": [0.45, 0.375, 0.3, 0.2],
                  "budget": 40, "mt_schedule": MT_TEXT, "start": "xl"},
        "sst": {"enabled": False, "replicates": None},
        "model": {},
        "k_replicates": 5,
        "master_seed": 0,
        "n_jobs": 1,
        "output_dir": "runs",
    }


def _model_params(raw: dict, report: ValidationReport) -> ModelParams:
    known = {f.name for f in dc_fields(ModelParams)}
    kwargs = {}
    for key, value in raw.items():
        if key not in known:
            report.add(f"model.{key}", "unknown model parameter")
            continue
        kwargs[key] = value
    if "district_data" in kwargs:
        try:
            kwargs["district_data"] = tuple(
                District(**d) if isinstance(d, dict) else District(*d)
                for d in kwargs["district_data"]
            )
        except (TypeError, ValueError) as exc:
            report.add("model.district_data", str(exc))
            del kwargs["district_data"]
    try:
        return ModelParams(**kwargs)
    except (TypeError, ValueError) as exc:
        report.add("model", str(exc))
        return ModelParams()


def parse_config(raw: dict) -> tuple[RunConfig, ValidationReport]:
    """Build a RunConfig from a raw mapping, collecting all violations."""
    report = ValidationReport()
    raw = dict(raw or {})

    oracle = raw.get("oracle", "abm")
    if oracle not in ("abm", "synthetic"):
        report.add("oracle", f"must be 'abm' or 'synthetic', got {oracle!r}")

    targets = tuple(raw.get("targets", HCV_TARGETS))
    if not targets:
        report.add("targets", "must be non-empty")
    elif any(t <= 0 for t in targets):
        report.add("targets", f"all components must be positive, got {targets}")

    axes_raw = (raw.get("lattice") or {}).get("axes", HCV_AXES)
    axes = tuple(tuple(float(v) for v in axis) for axis in axes_raw)
    for i, axis in enumerate(axes):
        if len(axis) < 3:
            report.add(f"lattice.axes[{i}]",
                       f"needs at least 3 values for the wrap-around neighborhood, got {len(axis)}")
        if any(b <= a for a, b in zip(axis, axis[1:])):
            report.add(f"lattice.axes[{i}]", "values must be strictly increasing")

    ruler_raw = raw.get("ruler") or {}
    deltas = tuple(float(d) for d in ruler_raw.get("deltas", (0.45, 0.375, 0.3, 0.2)))
    ruler = RulerConfig(
        a=float(ruler_raw.get("a", 0.1)),
        b=None if ruler_raw.get("b") is None else float(ruler_raw["b"]),
        deltas=deltas,
        budget=int(ruler_raw.get("budget", 40)),
        mt_schedule=ruler_raw.get("mt_schedule", MT_TEXT),
        start=str(ruler_raw.get("start", "xl")),
    )
    if ruler.b is not None and not ruler.a < ruler.b:
        report.add("ruler", f"requires a < b, got a={ruler.a}, b={ruler.b}")
    if not deltas:
        report.add("ruler.deltas", "must list at least one stop threshold")
    elif min(deltas) <= ruler.a:
        report.add("ruler.deltas",
                   f"every delta must exceed a={ruler.a} so the ruler can reward "
                   f"sub-threshold values; got min delta {min(deltas)}")
    if ruler.budget < 0:
        report.add("ruler.budget", "must be >= 0")
    if ruler.mt_schedule not in (MT_TEXT, MT_COMMENTED):
        report.add("ruler.mt_schedule", f"must be '{MT_TEXT}' or '{MT_COMMENTED}'")

    sst_raw = raw.get("sst") or {}
    sst = SstConfig(enabled=bool(sst_raw.get("enabled", False)),
                    replicates=None if sst_raw.get("replicates") is None
                    else int(sst_raw["replicates"]))
    if sst.replicates is not None and sst.replicates < 1:
        report.add("sst.replicates", "must be >= 1")

    synth_raw = raw.get("synthetic") or {}
    synthetic = SyntheticConfig(
        kind=synth_raw.get("kind", "affine"),
        intercepts=tuple(float(c) for c in synth_raw.get("intercepts", ())),
        weights=tuple(tuple(float(w) for w in row) for row in synth_raw.get("weights", ())),
        noise_sd=tuple(float(s) for s in _as_seq(synth_raw.get("noise_sd", 0.0))),
    )
    if oracle == "synthetic":
        if len(synthetic.intercepts) != len(targets):
            report.add("synthetic.intercepts",
                       f"need one per target ({len(targets)}), got {len(synthetic.intercepts)}")
        if len(synthetic.weights) != len(targets):
            report.add("synthetic.weights",
                       f"need one row per target ({len(targets)}), got {len(synthetic.weights)}")
        elif any(len(row) != len(axes) for row in synthetic.weights):
            report.add("synthetic.weights", f"each row needs one weight per axis ({len(axes)})")
        if synthetic.kind not in ("affine", "product"):
            report.add("synthetic.kind", "must be 'affine' or 'product'")

    model = _model_params(raw.get("model") or {}, report)
    if oracle == "abm":
        if len(targets) != 3:
            report.add("targets", "the simulation oracle produces exactly 3 outcomes")
        if len(axes) != 3:
            report.add("lattice.axes", "the simulation oracle takes exactly 3 parameters")
        else:
            for name, i in (("x1", 0), ("x2", 1), ("x3", 2)):
                if any(not 0 <= v <= 1 for v in axes[i]):
                    report.add(f"lattice.axes[{i}]", f"{name} values must be probabilities")
            try:
                solve_influence_probs(max(axes[2]), model.p_ue_idu, model.p_ue_gen)
            except ValueError as exc:
                report.add("lattice.axes[2]", str(exc))

    k = int(raw.get("k_replicates", 5))
    if k < 1:
        report.add("k_replicates", "must be >= 1")
    n_jobs = int(raw.get("n_jobs", 1))
    if n_jobs < 1 and n_jobs != -1:
        report.add("n_jobs", "must be >= 1 (or -1 for all cores)")
    master_seed = int(raw.get("master_seed", 0))
    if master_seed < 0:
        report.add("master_seed", "must be >= 0")

    config = RunConfig(
        oracle=oracle, targets=targets, axes=axes, ruler=ruler, sst=sst,
        synthetic=synthetic, model=model, k_replicates=k,
        master_seed=master_seed, n_jobs=n_jobs,
        output_dir=str(raw.get("output_dir", "runs")),
    )
    return config, report


def _as_seq(value):
    if isinstance(value, (int, float)):
        return (value,)
    return tuple(value)


def validate_config(raw: dict) -> ValidationReport:
    """Full structural and invariant validation; violations are the output."""
    _, report = parse_config(raw)
    return report


def load_config(path: str, env: dict | None = None) -> RunConfig:
    """Load and validate a YAML config file; raise ConfigError on violations.

    Environment variables RULERCAL_SEED and RULERCAL_OUTPUT override the
    master seed and output directory.
    """
    with open(path) as fh:
        raw = yaml.safe_load(fh) or {}
    env = os.environ if env is None else env
    if env.get("RULERCAL_SEED"):
        raw["master_seed"] = int(env["RULERCAL_SEED"])
    if env.get("RULERCAL_OUTPUT"):
        raw["output_dir"] = env["RULERCAL_OUTPUT"]
    config, report = parse_config(raw)
    if not report.ok:
        raise ConfigError(report.format())
    return config
