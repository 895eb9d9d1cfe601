"""Explicit time integration of the log-radial flow

    d_t r = (1/F(a) - f(e^r x)) e^{-r} sqrt(1 + |grad r|^2),    r = log rho,

whose steady states solve ``1/F(kappa) = f``. The step size comes from the
diffusion tensor of the linearized flow,

    A = gamma F' gamma / (rho^2 F^2),

with ``dt = safety * h_min^2 / (4 max spectral_radius(A))``.
"""

import time
from dataclasses import dataclass, field

import numpy as np

from . import _kernels
from . import grid as sg
from . import prescribed, symfunc
from .errors import ConeViolation, DomainError
from .monitors.series import MonitorSeries, snapshot
from .shape import log_route, sym_eig, sym_sandwich

INTEGRATORS = ("euler", "rk2", "rk4")
INITIAL_TOL = 1e-12


@dataclass(frozen=True)
class FlowConfig:
    safety: float = 0.5
    integrator: str = "rk2"
    tol_residual: float = 1e-8
    t_max: float = 50.0
    max_steps: int = 10_000_000
    monitor_stride: int = 100

    def __post_init__(self):
        if not 0 < self.safety <= 1:
            raise ValueError("safety must lie in (0, 1]")
        if self.integrator not in INTEGRATORS:
            raise ValueError(f"integrator must be one of {INTEGRATORS}")
        if not self.tol_residual > 0 or not self.t_max > 0:
            raise ValueError("tol_residual and t_max must be positive")
        if self.max_steps < 0 or self.monitor_stride < 1:
            raise ValueError("max_steps must be >= 0 and monitor_stride >= 1")


@dataclass
class FlowState:
    t: float
    u: np.ndarray
    step: int = 0

    @property
    def rho(self):
        return np.exp(self.u)


@dataclass
class FlowReport:
    termination: str  # converged | horizon | step-limit | cone-violation
    state: FlowState
    series: MonitorSeries
    wall_time: float
    violation: "ConeViolation | None" = None
    trajectory: list = field(default_factory=list)  # (t, u) at every monitor sample
    snapshots: dict = field(default_factory=dict)  # requested t -> (t, u)

    @property
    def converged(self):
        return self.termination == "converged"


@dataclass
class Evaluation:
    """Every per-node quantity of one state that the stepper and monitors need."""

    u: np.ndarray
    rho: np.ndarray
    grad_sq: np.ndarray
    w: np.ndarray
    a: tuple
    gamma: tuple
    kappa_lo: np.ndarray
    kappa_hi: np.ndarray
    margin: np.ndarray
    F: np.ndarray
    f: np.ndarray
    G: np.ndarray
    grad_r: tuple

    @property
    def dt_rho(self):
        return self.rho * self.G


class Problem:
    """Grid plus curvature and prescribed functions, with node data cached."""

    def __init__(self, grid, F_spec, f_spec):
        if F_spec.dim != 2:
            raise ValueError("surfaces in R^3 need a curvature function of two variables")
        self.grid = grid
        self.F_spec = F_spec
        self.f_spec = f_spec
        self.y = np.ascontiguousarray(prescribed.angular(f_spec, grid.nodes))
        self._code = _kernels.curvature_code(F_spec)
        self._sin = np.ascontiguousarray(grid.sin_theta[:, 0])
        self._cot = np.ascontiguousarray(grid.cot_theta[:, 0])

    def fast(self, u):
        """Kernel pass: ``(d_t r, max|d_t rho|, max diffusion radius)``; raises on cone exit."""
        u = np.ascontiguousarray(u, dtype=float)
        out = np.empty_like(u)
        kind, k, alpha = self._code
        max_dt_rho, radius, margin, arg = _kernels.step_kernel(
            u, self.grid.dtheta, self.grid.dphi, self._sin, self._cot, self.grid.axisymmetric,
            kind, k, alpha, float(self.f_spec.p), float(self.f_spec.epsilon), self.y, out,
        )
        if not margin > 0 or not np.isfinite(max_dt_rho):
            self.evaluate(u)  # raises ConeViolation with node details
            raise ConeViolation(np.unravel_index(arg, u.shape), (np.nan, np.nan), margin)
        return out, max_dt_rho, radius

    def evaluate(self, u):
        u = np.asarray(u, dtype=float)
        if not np.all(np.isfinite(u)):
            raise DomainError("log-radial field is not finite")
        grad_r = sg.gradient_components(self.grid, u)
        hess_r = sg.hessian_components(self.grid, u)
        a, gamma, w = log_route(u, grad_r, hess_r)
        lo, hi = sym_eig(a)
        kappa = np.stack([lo, hi], axis=-1)
        margin = symfunc.cone_margin(self.F_spec, kappa)
        i = int(np.argmin(margin))
        if not margin.flat[i] > 0:
            node = np.unravel_index(i, u.shape)
            raise ConeViolation(node, kappa[node], margin.flat[i])
        F = symfunc.eval_F(self.F_spec, kappa, check=False)
        rho = np.exp(u)
        f = rho**self.f_spec.p * (1.0 + self.f_spec.epsilon * self.y)
        G = (1.0 / F - f) * w / rho
        r1, r2 = grad_r
        return Evaluation(u, rho, r1 * r1 + r2 * r2, w, a, gamma, lo, hi, margin, F, f, G, grad_r)

    def velocity(self, u):
        return self.fast(u)[0]

    def diffusion_radius(self, ev):
        """Per-node spectral radius of ``A = gamma F' gamma / (rho^2 F^2)``."""
        kappa = np.stack([ev.kappa_lo, ev.kappa_hi], axis=-1)
        dF = symfunc.grad_F(self.F_spec, kappa, check=False)
        f1, f2 = dF[..., 0], dF[..., 1]
        gap = ev.kappa_hi - ev.kappa_lo
        scale = np.maximum(np.abs(ev.kappa_hi), np.abs(ev.kappa_lo))
        split = gap > 1e-12 * scale
        coef = np.where(split, (f2 - f1) / np.where(split, gap, 1.0), 0.0)
        mean = 0.5 * (ev.a[0] + ev.a[2])
        # F' shares eigenvectors with a: mean partial times I plus a multiple of a's deviator
        d_f = (0.5 * (f1 + f2) + coef * (ev.a[0] - mean), coef * ev.a[1], 0.5 * (f1 + f2) + coef * (ev.a[2] - mean))
        b = sym_sandwich(ev.gamma, d_f)
        return sym_eig(b)[1] / (ev.rho * ev.F) ** 2

    def dt_from_radius(self, radius, safety):
        return safety * self.grid.h_min**2 / (4.0 * radius)

    def stable_dt(self, ev, safety):
        return self.dt_from_radius(float(np.max(self.diffusion_radius(ev))), safety)


def velocity(grid, u, F_spec, f_spec):
    """``d_t r`` at every node; ``d_t rho = rho * d_t r``."""
    return Problem(grid, F_spec, f_spec).velocity(u)


def stable_dt(grid, u, F_spec, safety=0.5, f_spec=None):
    """Explicit step bound from the diffusion tensor; ``f`` does not enter it."""
    prob = Problem(grid, F_spec, f_spec or prescribed.PrescribedSpec(p=0.0))
    return prob.stable_dt(prob.evaluate(u), safety)


def _step(prob, u, dt, k1, integrator):
    if integrator == "euler":
        return u + dt * k1
    if integrator == "rk2":
        k2 = prob.velocity(u + dt * k1)
        return u + 0.5 * dt * (k1 + k2)
    k2 = prob.velocity(u + 0.5 * dt * k1)
    k3 = prob.velocity(u + 0.5 * dt * k2)
    k4 = prob.velocity(u + dt * k3)
    return u + dt / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4)


def evolve(grid, u0, F_spec, f_spec, config, snapshot_times=(), store_trajectory=False):
    """Integrate from ``u0 = log rho0`` until convergence, horizon, step limit or cone exit.

    Convergence means ``max |d_t rho| <= config.tol_residual``. Monitors are
    sampled every ``config.monitor_stride`` steps and at the final state. The
    step is shortened to land exactly on each of ``snapshot_times``.
    """
    prob = Problem(grid, F_spec, f_spec)
    u = np.array(u0, dtype=float)
    if u.shape != grid.shape:
        raise ValueError(f"initial field has shape {u.shape}, grid is {grid.shape}")
    pending = sorted(float(s) for s in snapshot_times if s >= 0)
    series = MonitorSeries()
    trajectory = []
    snapshots = {}
    t, step = 0.0, 0
    violation = None
    recorded_at = None
    start = time.perf_counter()

    def record():
        nonlocal recorded_at
        if recorded_at is u:
            return
        series.append(snapshot(prob.evaluate(u), t))
        recorded_at = u
        if store_trajectory:
            trajectory.append((t, u.copy()))

    while True:
        try:
            G, max_dt_rho, radius = prob.fast(u)
        except ConeViolation as exc:
            violation = exc
            termination = "cone-violation"
            break
        while pending and pending[0] <= t * (1 + 1e-14) + 1e-14:
            snapshots[pending.pop(0)] = (t, u.copy())
        if step % config.monitor_stride == 0:
            record()
        if max_dt_rho <= config.tol_residual:
            termination = "converged"
            break
        if t >= config.t_max:
            termination = "horizon"
            break
        if step >= config.max_steps:
            termination = "step-limit"
            break
        dt = min(prob.dt_from_radius(radius, config.safety), config.t_max - t)
        target = None
        if pending and t + dt >= pending[0]:
            target = pending[0]
            dt = target - t
        try:
            u_new = _step(prob, u, dt, G, config.integrator)
        except ConeViolation as exc:
            violation = exc
            termination = "cone-violation"
            break
        u = u_new
        t = target if target is not None else t + dt
        if config.t_max - t <= 1e-14 * config.t_max:
            t = config.t_max
        step += 1

    try:
        record()
    except ConeViolation:
        pass  # the final state itself left the cone; the last good sample stands
    # requested times past the end of the run keep the final state
    for s in pending:
        snapshots[s] = (t, u.copy())
    return FlowReport(
        termination=termination,
        state=FlowState(t, u, step),
        series=series,
        wall_time=time.perf_counter() - start,
        violation=violation,
        trajectory=trajectory,
        snapshots=snapshots,
    )


@dataclass
class InitialCheck:
    """Verdict on the initial data for the branch selected by the degree ``k``."""

    branch: str
    passed: bool
    admissible: bool
    lower_side: float  # quantity required to be >= 0
    upper_lhs: float  # k > 1 only: left side of the upper inequality
    upper_rhs: float  # k > 1 only: right side
    R1: float
    R2: float
    grad_norm: str = "frobenius: |grad X| = sqrt(sum_i |grad_i X|^2) = sqrt(trace g)"
    detail: str = ""

    def as_dict(self):
        return {
            "pass": bool(self.passed),
            "branch": self.branch,
            "admissible": bool(self.admissible),
            "lower_side": self.lower_side,
            "upper_lhs": self.upper_lhs,
            "upper_rhs": self.upper_rhs,
            "R1": self.R1,
            "R2": self.R2,
            "grad_norm": self.grad_norm,
            "detail": self.detail,
        }


def check_initial(grid, u0, F_spec, f_spec, r1, r2):
    """Certify the initial surface for the flow.

    For ``k <= 1`` the requirement is ``1/F - f >= 0`` everywhere (equivalently
    ``d_t rho(0) >= 0``). For ``k > 1`` it is

        0 <= -(1/F - f) |grad X0| / |X0| <= k R1 / ((k+1) R2) * min_{R1<=|Y|<=R2} f

    with ``R1 = min(r1, min rho0)``, ``R2 = max(r2, max rho0)``.
    """
    k = F_spec.degree
    u0 = np.asarray(u0, dtype=float)
    rho0 = np.exp(u0)
    R1 = min(r1, float(rho0.min()))
    R2 = max(r2, float(rho0.max()))
    branch = "k<=1" if k <= 1 else "k>1"
    prob = Problem(grid, F_spec, f_spec)
    try:
        ev = prob.evaluate(u0)
    except ConeViolation as exc:
        return InitialCheck(branch, False, False, float("nan"), float("nan"), float("nan"), R1, R2, detail=str(exc))

    speed = 1.0 / ev.F - ev.f
    if k <= 1:
        lower = float(speed.min())
        return InitialCheck(branch, lower >= -INITIAL_TOL, True, lower, float("nan"), float("nan"), R1, R2)

    # |grad X0|^2 = trace g = 2 rho^2 + |grad rho|^2 and |X0| = rho
    ratio = np.sqrt(2.0 + ev.grad_sq)
    lhs = -speed * ratio
    rhs = k * R1 / ((k + 1.0) * R2) * prescribed.min_f(f_spec, R1, R2, grid=grid)
    lower = float(lhs.min())
    upper = float(lhs.max())
    passed = lower >= -INITIAL_TOL and upper <= rhs
    return InitialCheck(branch, passed, True, lower, upper, float(rhs), R1, R2)


@dataclass
class DiffeoState:
    t: float
    phi: np.ndarray  # tracked unit vectors
    X: np.ndarray  # rho(t, phi) phi


def _tangent_fields(prob, u):
    ev = prob.evaluate(u)
    r1, r2 = ev.grad_r
    # Z = -d_t rho grad rho / (|grad rho|^2 + rho^2), in frame components
    z = -ev.G / (1.0 + ev.grad_sq)
    return ev.rho, z * r1, z * r2


def _sample(grid, fields, points):
    rho, z1, z2 = fields
    theta, phi = sg.angles(points)
    e_t, e_p = sg.frame(theta, phi)
    zt = sg.interpolate(grid, z1, theta, phi, parity=-1.0)
    zp = sg.interpolate(grid, z2, theta, phi, parity=-1.0)
    return sg.interpolate(grid, rho, theta, phi), zt[..., None] * e_t + zp[..., None] * e_p


def track_material_points(grid, trajectory, seed_points, F_spec, f_spec, substeps=4):
    """Follow ``d_t phi = Z(t, phi)`` through stored ``(t, u)`` snapshots.

    ``Z`` is interpolated bilinearly in space and linearly in time; each substep
    is a Heun step followed by projection back onto the sphere.
    """
    prob = Problem(grid, F_spec, f_spec)
    pts = np.asarray(seed_points, dtype=float)
    pts = pts / np.linalg.norm(pts, axis=-1, keepdims=True)
    fields = [_tangent_fields(prob, u) for _, u in trajectory]
    times = [t for t, _ in trajectory]

    def z_at(i, s, p):
        rho_a, za = _sample(grid, fields[i], p)
        if s == 0.0:
            return rho_a, za
        rho_b, zb = _sample(grid, fields[i + 1], p)
        return (1 - s) * rho_a + s * rho_b, (1 - s) * za + s * zb

    def normalize(p):
        return p / np.linalg.norm(p, axis=-1, keepdims=True)

    rho0, _ = _sample(grid, fields[0], pts)
    history = [DiffeoState(times[0], pts.copy(), rho0[..., None] * pts)]
    for i in range(len(times) - 1):
        span = times[i + 1] - times[i]
        h = span / substeps
        for m in range(substeps):
            s0, s1 = m / substeps, (m + 1) / substeps
            _, k1 = z_at(i, s0, pts)
            trial = normalize(pts + h * k1)
            _, k2 = z_at(i, s1, trial)
            pts = normalize(pts + 0.5 * h * (k1 + k2))
        rho, _ = _sample(grid, fields[i + 1], pts)
        history.append(DiffeoState(times[i + 1], pts.copy(), rho[..., None] * pts))
    return history
