"""Campaign configuration: flat dotted-key text files.

Format: one `key = value` per line, `#` comments, values in JSON syntax
(numbers, strings, lists, booleans).  Keys are dotted paths (`grid.N`,
`tol.newton`); unknown keys are errors, so typos never pass silently.
"""

import json
import re
from dataclasses import dataclass, field, fields

from .errors import ConfigError
from .params import ProblemParams
from .semilinear import NonlinearitySpec

_NONLIN_RE = re.compile(r"^\s*([a-z-]+)\s*\(\s*([^)]*)\s*\)\s*$")


def parse_nonlinearity(text):
    """'power(1.0, 3.0)' | 'linear(5.0)' | 'shifted-linear(1.0, 0.5)'."""
    m = _NONLIN_RE.match(text)
    if not m:
        raise ConfigError(f"malformed nonlinearity descriptor {text!r}")
    family = m.group(1)
    try:
        args = [float(a) for a in m.group(2).split(",") if a.strip()]
    except ValueError as exc:
        raise ConfigError(f"malformed nonlinearity arguments in {text!r}") from exc
    try:
        if family == "linear":
            (lam,) = args
            return NonlinearitySpec("linear", lam)
        if family == "power":
            lam, p = args
            return NonlinearitySpec("power", lam, p)
        if family == "shifted-linear":
            lam, c0 = args
            return NonlinearitySpec("shifted-linear", lam, c0=c0)
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc
    raise ConfigError(f"unknown nonlinearity family {family!r}")


def format_nonlinearity(nl):
    if nl.family == "linear":
        return f"linear({nl.lam:g})"
    if nl.family == "power":
        return f"power({nl.lam:g}, {nl.p:g})"
    return f"shifted-linear({nl.lam:g}, {nl.c0:g})"


@dataclass
class CampaignConfig:
    """Validated sweep description; every grid point is well-formed."""

    grid_N: list = field(default_factory=lambda: [1])
    grid_s: list = field(default_factory=lambda: [0.5])
    grid_nonlinearity: list = field(default_factory=lambda: ["power(1.0, 3.0)"])
    grid_target_nodes: int = 1
    trunc_K: int = 24
    trunc_ell_max: int = 3
    trunc_n_max: int = 8
    tol_newton: float = 1e-10
    tol_oracle_budget: int | None = None
    seed: int = 0
    out_dir: str = "out"
    out_format: str = "both"
    jobs: int = 1

    def __post_init__(self):
        for N in self.grid_N:
            for s in self.grid_s:
                ProblemParams(int(N), float(s))  # raises on invalid points
        for text in self.grid_nonlinearity:
            parse_nonlinearity(text)
        if self.out_format not in ("csv", "json", "both"):
            raise ConfigError(f"out.format must be csv|json|both, got {self.out_format!r}")
        if self.trunc_K < 2:
            raise ConfigError("trunc.K must be at least 2")
        if not 0 <= self.seed < 2**64:
            raise ConfigError("seed must fit in 64 bits")
        if self.jobs < 1:
            raise ConfigError("jobs must be >= 1")

    def grid_points(self):
        """All (ProblemParams, NonlinearitySpec) combinations, in order."""
        pts = []
        for N in self.grid_N:
            for s in self.grid_s:
                for text in self.grid_nonlinearity:
                    pts.append((ProblemParams(int(N), float(s)),
                                parse_nonlinearity(text)))
        return pts

    def to_text(self):
        lines = []
        for key, attr in _KEYS.items():
            val = getattr(self, attr)
            lines.append(f"{key} = {json.dumps(val)}")
        return "\n".join(lines) + "\n"


_KEYS = {
    "grid.N": "grid_N",
    "grid.s": "grid_s",
    "grid.nonlinearity": "grid_nonlinearity",
    "grid.target-nodes": "grid_target_nodes",
    "trunc.K": "trunc_K",
    "trunc.ell-max": "trunc_ell_max",
    "trunc.n-max": "trunc_n_max",
    "tol.newton": "tol_newton",
    "tol.oracle-budget": "tol_oracle_budget",
    "seed": "seed",
    "out.dir": "out_dir",
    "out.format": "out_format",
    "jobs": "jobs",
}

_LIST_KEYS = {"grid.N", "grid.s", "grid.nonlinearity"}


def parse_config_text(text):
    """Parse config file contents into a CampaignConfig."""
    values = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"line {lineno}: expected 'key = value', got {raw!r}")
        key, _, val = line.partition("=")
        key = key.strip()
        if key not in _KEYS:
            raise ConfigError(f"line {lineno}: unknown key {key!r}")
        if key in values:
            raise ConfigError(f"line {lineno}: duplicate key {key!r}")
        try:
            parsed = json.loads(val.strip())
        except json.JSONDecodeError:
            parsed = val.strip()  # bare strings allowed
        if key in _LIST_KEYS and not isinstance(parsed, list):
            parsed = [parsed]
        values[_KEYS[key]] = parsed
    try:
        return CampaignConfig(**values)
    except (TypeError, ValueError) as exc:
        raise ConfigError(str(exc)) from exc


def load_config(path):
    with open(path, "r", encoding="utf-8") as fh:
        return parse_config_text(fh.read())


def config_roundtrip_ok(cfg):
    """Does the config survive serialize -> parse unchanged?"""
    back = parse_config_text(cfg.to_text())
    return all(getattr(back, f.name) == getattr(cfg, f.name) for f in fields(cfg))
