"""Run configuration from flat ``section.key = value`` text files.

Example::

    # logistic relaxation of a small sphere
    grid.mode = axisymmetric
    grid.n_theta = 256
    curvature.kind = sigma_k
    curvature.k = 1
    prescribed.p = 2
    radii.r1 = 0.8
    radii.r2 = 1.0
    initial.kind = constant
    initial.radius = 0.8

Blank lines and ``#`` comments are ignored. Unknown keys are errors.
"""

from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .export import read_field
from .flow import FlowConfig
from .grid import build_grid
from .prescribed import PrescribedSpec
from .symfunc import InvSigmaK, PowerScaled, SigmaK


class ConfigError(ValueError):
    pass


DEFAULTS = {
    "grid.mode": "axisymmetric",
    "grid.n_theta": "64",
    "grid.n_phi": "128",
    "curvature.kind": "sigma_k",
    "curvature.k": "1",
    "curvature.alpha": "1",
    "prescribed.p": "2",
    "prescribed.epsilon": "0",
    "prescribed.coeffs": "0,0,0",
    "radii.r1": "0.8",
    "radii.r2": "1.0",
    "initial.kind": "constant",
    "initial.radius": "1.0",
    "initial.amplitude": "0",
    "initial.coeffs": "0,0,1",
    "initial.file": "",
    "flow.safety": "0.5",
    "flow.integrator": "rk2",
    "flow.tol_residual": "1e-8",
    "flow.t_max": "50",
    "flow.max_steps": "10000000",
    "flow.monitor_stride": "100",
    "output.dir": "out",
    "output.snapshot_times": "",
}
INITIAL_KINDS = ("constant", "perturbed", "file")


def parse_text(text, source="<string>"):
    """Parse ``key = value`` lines into a dict of strings."""
    values = {}
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        key, sep, value = line.partition("=")
        key, value = key.strip(), value.strip()
        if not sep or not key:
            raise ConfigError(f"{source}:{lineno}: expected 'key = value'")
        if key not in DEFAULTS:
            raise ConfigError(f"{source}:{lineno}: unknown key {key!r}")
        if key in values:
            raise ConfigError(f"{source}:{lineno}: duplicate key {key!r}")
        values[key] = value
    return values


def _floats(text, count=None, key=""):
    if not text:
        items = []
    else:
        try:
            items = [float(v) for v in text.split(",")]
        except ValueError as exc:
            raise ConfigError(f"{key}: expected comma-separated numbers, got {text!r}") from exc
    if count is not None and len(items) != count:
        raise ConfigError(f"{key}: expected {count} numbers, got {len(items)}")
    return items


@dataclass
class RunConfig:
    values: dict
    base_dir: Path = field(default_factory=Path.cwd)

    def _get(self, key, kind=str):
        text = self.values.get(key, DEFAULTS[key])
        try:
            return kind(text)
        except ValueError as exc:
            raise ConfigError(f"{key}: cannot read {text!r} as {kind.__name__}") from exc

    @property
    def r1(self):
        return self._get("radii.r1", float)

    @property
    def r2(self):
        return self._get("radii.r2", float)

    @property
    def out_dir(self):
        return self.base_dir / self._get("output.dir")

    @property
    def snapshot_times(self):
        return _floats(self._get("output.snapshot_times"), key="output.snapshot_times")

    def grid(self):
        mode = self._get("grid.mode")
        n_phi = self._get("grid.n_phi", int) if mode == "full" else None
        try:
            return build_grid(mode, self._get("grid.n_theta", int), n_phi)
        except ValueError as exc:
            raise ConfigError(str(exc)) from exc

    def curvature(self):
        kind = self._get("curvature.kind")
        k = self._get("curvature.k", int)
        alpha = self._get("curvature.alpha", float)
        makers = {"sigma_k": SigmaK, "inv_sigma_k": InvSigmaK}
        if kind not in makers:
            raise ConfigError(f"curvature.kind must be one of {sorted(makers)}, got {kind!r}")
        try:
            spec = makers[kind](k)
            return spec if alpha == 1.0 else PowerScaled(spec, alpha)
        except ValueError as exc:
            raise ConfigError(str(exc)) from exc

    def prescribed(self):
        try:
            return PrescribedSpec(
                p=self._get("prescribed.p", float),
                epsilon=self._get("prescribed.epsilon", float),
                coeffs=tuple(_floats(self._get("prescribed.coeffs"), 3, "prescribed.coeffs")),
            )
        except ValueError as exc:
            raise ConfigError(str(exc)) from exc

    def flow(self):
        try:
            return FlowConfig(
                safety=self._get("flow.safety", float),
                integrator=self._get("flow.integrator").lower(),
                tol_residual=self._get("flow.tol_residual", float),
                t_max=self._get("flow.t_max", float),
                max_steps=self._get("flow.max_steps", int),
                monitor_stride=self._get("flow.monitor_stride", int),
            )
        except ValueError as exc:
            raise ConfigError(str(exc)) from exc

    def initial_field(self, grid):
        """``u0 = log rho0`` on ``grid``."""
        kind = self._get("initial.kind")
        if kind not in INITIAL_KINDS:
            raise ConfigError(f"initial.kind must be one of {INITIAL_KINDS}, got {kind!r}")
        if kind == "file":
            name = self._get("initial.file")
            if not name:
                raise ConfigError("initial.file is required when initial.kind = file")
            path = self.base_dir / name
            if not path.is_file():
                raise ConfigError(f"initial.file {path} does not exist")
            try:
                rho = read_field(path, grid)
            except ValueError as exc:
                raise ConfigError(str(exc)) from exc
        else:
            c = self._get("initial.radius", float)
            rho = np.full(grid.shape, c)
            if kind == "perturbed":
                a = self._get("initial.amplitude", float)
                coeffs = _floats(self._get("initial.coeffs"), 3, "initial.coeffs")
                y = np.asarray(grid.nodes) @ np.asarray(coeffs)
                rho = c * (1.0 + a * y)
        if not np.all(np.isfinite(rho)) or np.any(rho <= 0):
            raise ConfigError("initial radius must be finite and positive at every node")
        return np.log(rho)


def load(path):
    path = Path(path)
    if not path.is_file():
        raise ConfigError(f"config file {path} not found")
    return RunConfig(parse_text(path.read_text(), str(path)), path.parent.resolve())


def from_text(text, base_dir=None):
    return RunConfig(parse_text(text), Path(base_dir) if base_dir else Path.cwd())
