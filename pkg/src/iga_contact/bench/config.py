"""Run configuration: per-benchmark defaults, key/value files and overrides."""

from __future__ import annotations

import configparser
from dataclasses import dataclass, fields, replace

from ..contact import FORMULATIONS
from ..errors import ConfigurationError

BENCHMARKS = ("patch", "blocks", "hertz", "ironing")


@dataclass(frozen=True)
class BenchmarkConfig:
    """All knobs of a benchmark run.

    Mesh sizes are control points per direction for ``patch`` and
    ``blocks`` and Bezier elements per direction for ``hertz`` and
    ``ironing``. Unused fields are ignored by the other benchmarks.
    """

    benchmark: str = "patch"
    formulation: str = "ccs"
    degree: int = 2
    n_u: int = 30
    n_v: int = 30
    penalty: float = 100.0
    lam: float = 1.0
    mu: float = 0.5
    young: float = 1.0
    poisson: float = 0.3
    young_indenter: float = 3.0
    load_steps: int = 10
    steps_vertical: int = 30
    steps_horizontal: int = 30
    steps_horizontal_full: int = 270
    pressure: float = 0.01
    displacement: float = 0.2
    spacing: float = 0.05
    grading: float = 0.05
    radius: float = 1.0
    inner_radius: float = 0.01
    element_fraction: float = 0.8
    length_fraction: float = 0.1
    initial_penetration: float = 1e-6
    slab_width: float = 8.0
    slab_height: float = 2.0
    indenter_n_u: int = 80
    indenter_n_v: int = 20
    indenter_x: float = 2.0
    depth: float = 0.68
    travel: float = 4.0
    slave: str = ""
    newton_tol: float = 1e-9
    max_iter: int = 30
    max_bisections: int = 8
    field_samples: int = 41

    def validate(self) -> "BenchmarkConfig":
        if self.benchmark not in BENCHMARKS:
            raise ConfigurationError("unknown benchmark %r" % self.benchmark)
        if self.formulation not in FORMULATIONS:
            raise ConfigurationError("unknown formulation %r" % self.formulation)
        ints = ("degree", "n_u", "n_v", "load_steps", "steps_vertical", "indenter_n_u",
                "indenter_n_v", "max_iter", "field_samples")
        for name in ints:
            if getattr(self, name) < 1:
                raise ConfigurationError("%s must be positive" % name)
        if self.steps_horizontal < 0 or self.steps_horizontal_full < 1:
            raise ConfigurationError("horizontal step counts must be non-negative")
        for name in ("penalty", "young", "young_indenter", "radius", "slab_width", "slab_height"):
            if getattr(self, name) <= 0:
                raise ConfigurationError("%s must be positive" % name)
        if not 0 < self.inner_radius < self.radius:
            raise ConfigurationError("inner_radius must lie in (0, radius)")
        if not 0 <= self.spacing <= 1:
            raise ConfigurationError("spacing must lie in [0, 1]")
        return self


DEFAULTS = {
    "patch": dict(degree=2, n_u=30, n_v=30, penalty=100.0, lam=1.0, mu=0.5, load_steps=10,
                  pressure=0.01, slave="upper"),
    "blocks": dict(degree=2, n_u=10, n_v=15, penalty=1500.0, lam=0.5, mu=0.5, load_steps=20,
                   displacement=0.2, spacing=1.0, slave="upper"),
    "hertz": dict(degree=3, n_u=50, n_v=50, penalty=1000.0, young=1.0, poisson=0.3,
                  load_steps=1, pressure=0.001, slave="cylinder"),
    "ironing": dict(degree=3, n_u=80, n_v=20, penalty=100.0, young=1.0, poisson=0.3,
                    young_indenter=3.0, slave="indenter"),
}

_TYPES = {f.name: f.type for f in fields(BenchmarkConfig)}


def _coerce(name, value):
    if name not in _TYPES:
        raise ConfigurationError("unknown config key %r" % name)
    kind = _TYPES[name]
    try:
        if kind == "int":
            return int(value)
        if kind == "float":
            return float(value)
    except (TypeError, ValueError):
        raise ConfigurationError("bad value %r for %s" % (value, name))
    return str(value).strip().lower()


def default_config(benchmark: str, formulation: str = "ccs") -> BenchmarkConfig:
    if benchmark not in BENCHMARKS:
        raise ConfigurationError("unknown benchmark %r" % benchmark)
    return BenchmarkConfig(benchmark=benchmark, formulation=formulation,
                           **DEFAULTS[benchmark]).validate()


def read_config_file(path) -> dict:
    """Key/value pairs of an INI-style file; a leading section header is optional."""
    try:
        with open(path) as fh:
            text = fh.read()
    except OSError as exc:
        raise ConfigurationError("cannot read config %s: %s" % (path, exc))
    parser = configparser.ConfigParser(inline_comment_prefixes=("#", ";"))
    try:
        if not text.lstrip().startswith("["):
            text = "[run]\n" + text
        parser.read_string(text)
    except configparser.Error as exc:
        raise ConfigurationError("malformed config %s: %s" % (path, exc))
    out = {}
    for section in parser.sections():
        out.update(dict(parser.items(section)))
    return out


def build_config(benchmark=None, formulation=None, path=None, overrides=None) -> BenchmarkConfig:
    """Defaults of the benchmark, then the config file, then explicit overrides."""
    values = read_config_file(path) if path else {}
    values.update({k: v for k, v in (overrides or {}).items() if v is not None})
    bench = benchmark or values.pop("benchmark", None) or "patch"
    values.pop("benchmark", None)
    form = formulation or values.pop("formulation", None) or "ccs"
    values.pop("formulation", None)
    cfg = default_config(str(bench).lower(), str(form).lower())
    typed = {k: _coerce(k, v) for k, v in values.items()}
    return replace(cfg, **typed).validate()
