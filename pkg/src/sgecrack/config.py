"""Run configuration: a single JSON document, strictly validated.

Example::

    {
      "mode": "I",
      "material": {"E": 1e9, "nu": 0.3, "ell": 0.02},
      "geometry": {"d": 0.2, "L": 1.0, "R": 0.002, "M": 5, "grading": 1.3, "n_theta": 12},
      "quadrature": 13,
      "enrichment": true,
      "load": 1e6,
      "study": {"kind": "convergence", "sweep": "R_over_ell", "values": [1, 0.5, 0.2, 0.1]},
      "output": "results"
    }

Unknown keys are rejected at every level.  Omitted sweep lists are filled
with the default presets, so a parsed configuration always carries explicit
sweeps and serializes back to an equivalent document.
"""
from __future__ import annotations

import json
from dataclasses import asdict, dataclass, field, fields, replace
from pathlib import Path

from .bell import RULE_DEGREE
from .errors import ConfigurationError, MeshGenerationError, ParameterError
from .material import make_material
from .mesh import DomainSpec

STUDY_KINDS = ("single", "convergence", "size-effect")
CONVERGENCE_SWEEPS = ("R_over_ell", "M", "quadrature")

PRESET_R_OVER_ELL = (1.0, 0.5, 0.2, 0.1, 0.05, 0.01, 0.005)
PRESET_M = (4, 5, 6, 8)
PRESET_QUADRATURE = (13, 25, 30, 37)
PRESET_D_OVER_L = (1 / 40, 1 / 30, 1 / 20, 1 / 15, 1 / 10, 1 / 8, 1 / 6, 1 / 5, 1 / 4, 1 / 3, 2 / 5, 1 / 2)
PRESET_ELL_OVER_L = (0.005, 0.01, 0.02)


@dataclass(frozen=True)
class MaterialConfig:
    E: float = 1e9
    nu: float = 0.3
    ell: float = 0.02


@dataclass(frozen=True)
class GeometryConfig:
    d: float = 0.2
    L: float = 1.0
    R: float = 0.002
    M: int = 5
    grading: float = 1.3
    n_theta: int = 12


@dataclass(frozen=True)
class StudyConfig:
    """Sweep descriptor.

    ``kind`` selects the study.  Convergence studies sweep ``sweep`` over
    ``values``; size-effect studies sweep ``d_over_L`` for every entry of
    ``ell_over_L`` with ``R = R_over_ell * ell``.  The classical reference J
    is computed with ``ell = 0`` on a mesh with ``R = classical_R_over_d * d``.
    """

    kind: str = "single"
    sweep: str = "R_over_ell"
    values: tuple = ()
    d_over_L: tuple = ()
    ell_over_L: tuple = ()
    R_over_ell: float = 0.1
    classical_R_over_d: float = 1e-3
    d_min_over_L: float = 1 / 40


@dataclass(frozen=True)
class RunConfig:
    mode: str = "I"
    material: MaterialConfig = field(default_factory=MaterialConfig)
    geometry: GeometryConfig = field(default_factory=GeometryConfig)
    quadrature: int = 13
    enrichment: bool = True
    load: float = 1e6
    study: StudyConfig = field(default_factory=StudyConfig)
    output: str = "results"

    def domain(self) -> DomainSpec:
        g = self.geometry
        return DomainSpec(d=g.d, L=g.L, R=g.R, M=g.M, grading=g.grading, n_theta=g.n_theta)

    def material_params(self):
        m = self.material
        return make_material(m.E, m.nu, m.ell)

    def to_dict(self) -> dict:
        out = asdict(self)
        for key in ("values", "d_over_L", "ell_over_L"):
            out["study"][key] = list(out["study"][key])
        return out

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=True)


# ---------------------------------------------------------------------------
# parsing

def _number(value, where: str, integer: bool = False):
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise ConfigurationError(f"{where} must be a number, got {value!r}")
    if integer:
        if int(value) != value:
            raise ConfigurationError(f"{where} must be an integer, got {value!r}")
        return int(value)
    return float(value)


def _build(cls, data, where: str, converters: dict):
    if not isinstance(data, dict):
        raise ConfigurationError(f"{where} must be an object")
    known = {f.name for f in fields(cls)}
    unknown = sorted(set(data) - known)
    if unknown:
        raise ConfigurationError(f"unknown key(s) in {where}: {', '.join(unknown)}")
    kwargs = {}
    for name, value in data.items():
        conv = converters.get(name)
        kwargs[name] = conv(value, f"{where}.{name}") if conv else value
    return cls(**kwargs)


def _num_list(integer: bool = False):
    def conv(value, where):
        if not isinstance(value, (list, tuple)):
            raise ConfigurationError(f"{where} must be a list")
        return tuple(_number(v, f"{where}[{i}]", integer) for i, v in enumerate(value))
    return conv


def _str(value, where):
    if not isinstance(value, str):
        raise ConfigurationError(f"{where} must be a string")
    return value


def _bool(value, where):
    if not isinstance(value, bool):
        raise ConfigurationError(f"{where} must be true or false")
    return value


def _num(integer=False):
    return lambda v, w: _number(v, w, integer)


def from_dict(data: dict) -> RunConfig:
    """Validate and build a configuration; raises ConfigurationError."""
    if not isinstance(data, dict):
        raise ConfigurationError("configuration must be a JSON object")
    top = dict(data)
    material = _build(MaterialConfig, top.pop("material", {}), "material",
                      {"E": _num(), "nu": _num(), "ell": _num()})
    geometry = _build(GeometryConfig, top.pop("geometry", {}), "geometry",
                      {"d": _num(), "L": _num(), "R": _num(), "M": _num(True), "grading": _num(),
                       "n_theta": _num(True)})
    study = _build(StudyConfig, top.pop("study", {}), "study",
                   {"kind": _str, "sweep": _str, "values": _num_list(), "d_over_L": _num_list(),
                    "ell_over_L": _num_list(), "R_over_ell": _num(), "classical_R_over_d": _num(),
                    "d_min_over_L": _num()})
    cfg = _build(RunConfig, top, "configuration",
                 {"mode": _str, "quadrature": _num(True), "enrichment": _bool, "load": _num(),
                  "output": _str})
    cfg = replace(cfg, material=material, geometry=geometry, study=_fill_presets(study))
    validate(cfg)
    return cfg


def _fill_presets(s: StudyConfig) -> StudyConfig:
    if s.kind == "convergence" and not s.values:
        preset = {"R_over_ell": PRESET_R_OVER_ELL, "M": PRESET_M, "quadrature": PRESET_QUADRATURE}
        s = replace(s, values=preset.get(s.sweep, ()))
    if s.kind == "size-effect":
        if not s.d_over_L:
            s = replace(s, d_over_L=PRESET_D_OVER_L)
        if not s.ell_over_L:
            s = replace(s, ell_over_L=PRESET_ELL_OVER_L)
    if s.kind == "convergence" and s.sweep == "M":
        s = replace(s, values=tuple(int(v) for v in s.values))
    if s.kind == "convergence" and s.sweep == "quadrature":
        s = replace(s, values=tuple(int(v) for v in s.values))
    return s


def validate(cfg: RunConfig) -> None:
    if cfg.mode not in ("I", "II"):
        raise ConfigurationError(f"mode must be 'I' or 'II', got {cfg.mode!r}")
    if cfg.quadrature not in RULE_DEGREE:
        raise ConfigurationError(f"quadrature must be one of {sorted(RULE_DEGREE)}, got {cfg.quadrature}")
    if not cfg.load > 0.0:
        raise ConfigurationError(f"load must be positive, got {cfg.load}")
    try:
        cfg.material_params()
        cfg.domain().validate()
    except (ParameterError, MeshGenerationError) as exc:
        raise ConfigurationError(str(exc)) from None
    s = cfg.study
    if s.kind not in STUDY_KINDS:
        raise ConfigurationError(f"study.kind must be one of {STUDY_KINDS}, got {s.kind!r}")
    if s.kind == "convergence":
        if s.sweep not in CONVERGENCE_SWEEPS:
            raise ConfigurationError(f"study.sweep must be one of {CONVERGENCE_SWEEPS}, got {s.sweep!r}")
        if not s.values:
            raise ConfigurationError("convergence study needs a non-empty value list")
        if s.sweep == "quadrature" and any(v not in RULE_DEGREE for v in s.values):
            raise ConfigurationError(f"quadrature sweep values must be in {sorted(RULE_DEGREE)}")
        if s.sweep in ("R_over_ell", "M") and any(v <= 0 for v in s.values):
            raise ConfigurationError("sweep values must be positive")
        if s.sweep == "R_over_ell" and cfg.material.ell <= 0.0:
            raise ConfigurationError("an R/ell sweep needs a positive length scale")
    if s.kind == "size-effect":
        if not s.d_over_L or not s.ell_over_L:
            raise ConfigurationError("size-effect study needs non-empty d_over_L and ell_over_L")
        if any(not 0.0 < v < 1.0 for v in s.d_over_L):
            raise ConfigurationError("d_over_L values must lie in (0, 1)")
        if any(v <= 0.0 for v in s.ell_over_L):
            raise ConfigurationError("ell_over_L values must be positive")
    for name in ("R_over_ell", "classical_R_over_d", "d_min_over_L"):
        if not getattr(s, name) > 0.0:
            raise ConfigurationError(f"study.{name} must be positive")


def load_config(path) -> RunConfig:
    path = Path(path)
    try:
        data = json.loads(path.read_text())
    except OSError as exc:
        raise ConfigurationError(f"cannot read configuration {path}: {exc}") from None
    except json.JSONDecodeError as exc:
        raise ConfigurationError(f"{path} is not valid JSON: {exc}") from None
    return from_dict(data)


def parse_json(text: str) -> RunConfig:
    try:
        return from_dict(json.loads(text))
    except json.JSONDecodeError as exc:
        raise ConfigurationError(f"invalid JSON: {exc}") from None
