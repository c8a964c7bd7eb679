"""Run configuration for the command-line front end.

A run is described by a flat JSON object; see ``geometries/run_config.example.json``.
Field-level validation errors are raised as :class:`ConfigError` so the CLI can
turn them into usage messages.
"""

from __future__ import annotations

import json
from dataclasses import asdict, dataclass, field, fields
from importlib import resources
from pathlib import Path

COMMANDS = (
    "constants",
    "profile",
    "eigenpair",
    "attractive-solve",
    "repulsive-solve",
    "jacobi",
    "construct",
    "scaling",
)
DEFAULT_EPS = (1e-2, 5e-3, 2e-3, 1e-3)


class ConfigError(ValueError):
    """Invalid run configuration; the message names the offending field."""


@dataclass
class RunConfig:
    command: str
    N: int = 7
    geometry: str | None = None
    eps: list = field(default_factory=lambda: list(DEFAULT_EPS))
    M: int = 2048
    grading: float = 2.0
    eta: float = 1.0
    tol: float = 1e-12
    ortho_tol: float = 1e-2
    omega_sign: int = 1
    sign: str = "sub"
    version: str = "v1"
    alpha: object = None
    beta: object = None
    jacobi_potential: str = "geometry"
    nodes: int | None = None
    output: str = "out"

    def validate(self) -> "RunConfig":
        if self.command not in COMMANDS:
            raise ConfigError(f"command: expected one of {', '.join(COMMANDS)}, got {self.command!r}")
        if not isinstance(self.N, int) or self.N < 5:
            raise ConfigError(f"N: must be an integer >= 5, got {self.N!r}")
        if not self.eps or any(not 0 < float(e) < 1 for e in self.eps):
            raise ConfigError(f"eps: every value must lie in (0, 1), got {self.eps!r}")
        if not isinstance(self.M, int) or self.M < 16:
            raise ConfigError(f"M: must be an integer >= 16, got {self.M!r}")
        for name in ("grading", "eta", "tol", "ortho_tol"):
            if not float(getattr(self, name)) > 0:
                raise ConfigError(f"{name}: must be > 0, got {getattr(self, name)!r}")
        if self.omega_sign not in (1, -1):
            raise ConfigError(f"omega_sign: must be +1 or -1, got {self.omega_sign!r}")
        if self.sign not in ("sub", "super"):
            raise ConfigError(f"sign: must be 'sub' or 'super', got {self.sign!r}")
        if self.version not in ("v0", "v1"):
            raise ConfigError(f"version: must be 'v0' or 'v1', got {self.version!r}")
        if self.jacobi_potential not in ("geometry", "identity", "flat"):
            raise ConfigError(f"jacobi_potential: must be geometry, identity or flat, got {self.jacobi_potential!r}")
        if self.nodes is not None and (not isinstance(self.nodes, int) or self.nodes < 32):
            raise ConfigError(f"nodes: must be an integer >= 32, got {self.nodes!r}")
        needs_geometry = self.command in ("attractive-solve", "repulsive-solve", "jacobi", "construct", "scaling")
        if needs_geometry and self.geometry is None:
            raise ConfigError(f"geometry: required for the {self.command} command")
        if self.command == "scaling" and (len(self.eps) < 4 or max(self.eps) / min(self.eps) < 10):
            raise ConfigError("eps: scaling needs at least 4 values spanning a decade")
        self.eps = [float(e) for e in self.eps]
        return self

    def to_dict(self) -> dict:
        return asdict(self)


def load_config(path) -> RunConfig:
    data = json.loads(Path(path).read_text())
    return config_from_dict(data)


def config_from_dict(data: dict) -> RunConfig:
    known = {f.name for f in fields(RunConfig)}
    unknown = sorted(set(data) - known)
    if unknown:
        raise ConfigError(f"{unknown[0]}: unknown configuration field")
    if "command" not in data:
        raise ConfigError("command: missing")
    return RunConfig(**data).validate()


def bundled_geometries() -> list:
    root = resources.files("yamabe_concentration") / "geometries"
    return sorted(p.name[:-5] for p in root.iterdir() if p.name.endswith(".json") and "config" not in p.name)


def resolve_geometry(name_or_path: str) -> Path:
    """A file path, or the name of a bundled geometry (with or without .json)."""
    p = Path(name_or_path)
    if p.is_file():
        return p
    stem = p.name[:-5] if p.name.endswith(".json") else p.name
    candidate = resources.files("yamabe_concentration") / "geometries" / f"{stem}.json"
    if candidate.is_file():
        return Path(str(candidate))
    raise ConfigError(f"geometry: no file or bundled geometry named {name_or_path!r}")
