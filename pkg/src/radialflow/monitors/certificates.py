"""Run-end certificates for the quantitative estimates of the flow.

Each certificate is a pure function of a recorded :class:`MonitorSeries` and a
handful of constants, so re-certifying a stored series is idempotent.
"""

from dataclasses import dataclass, field

import numpy as np

from .. import flow, prescribed
from ..shape import shape_state
from .series import fitted_decay_rate

BOUNDS_TOL = 1e-8
DECAY_FACTOR = 1.05
SIGN_TOL = 1e-10
GRADIENT_TOL = 1e-8
CURVATURE_REL_TOL = 1e-6


@dataclass
class Certificate:
    name: str
    passed: bool
    constants: dict
    worst_margin: float
    worst_time: float
    checks: dict = field(default_factory=dict)

    def as_dict(self):
        return {
            "pass": bool(self.passed),
            "constants": {k: _clean(v) for k, v in self.constants.items()},
            "worst_margin": _clean(self.worst_margin),
            "worst_time": _clean(self.worst_time),
            "checks": {k: _clean(v) for k, v in self.checks.items()},
        }


def _clean(v):
    if isinstance(v, (bool, np.bool_)):
        return bool(v)
    if isinstance(v, (int, np.integer)):
        return int(v)
    if isinstance(v, (float, np.floating)):
        v = float(v)
        return v if np.isfinite(v) else None
    return v


def _worst(series, margins):
    i = int(np.argmin(margins))
    return float(margins[i]), float(series["t"][i])


def radii(rho0, r1, r2):
    """``R1 = min(r1, min rho0)`` and ``R2 = max(r2, max rho0)``."""
    return min(r1, float(np.min(rho0))), max(r2, float(np.max(rho0)))


def cert_bounds(series, rho0, r1, r2, tol=BOUNDS_TOL):
    """``R1 <= rho <= R2`` at every snapshot."""
    R1, R2 = radii(rho0, r1, r2)
    margins = np.minimum(series["min_rho"] - R1, R2 - series["max_rho"])
    worst, when = _worst(series, margins)
    return Certificate("radial_bounds", worst >= -tol, {"R1": R1, "R2": R2, "tol": tol}, worst, when)


def decay_rate(delta0, R1, R2, k):
    """Rate ``lambda``: ``delta0 / R2`` for ``k <= 1``, ``delta0 / R1`` for ``k > 1``."""
    return delta0 / R2 if k <= 1 else delta0 / R1


def cert_decay(series, delta0, R1, R2, k, F0max, factor=DECAY_FACTOR, sign_tol=SIGN_TOL):
    """Sign of ``d_t rho`` and ``max|d_t rho(t)| <= factor (R2/R1) F0max e^{-lambda t}``.

    ``F0max`` is ``max |d_t rho|`` of the initial data.
    """
    lam = decay_rate(delta0, R1, R2, k)
    prefactor = R2 / R1 * F0max
    t = series["t"]
    bound = factor * prefactor * np.exp(-lam * t)
    margins = bound - series["max_dt_rho"]
    if k <= 1:
        sign_margins = series["dt_rho_min"] + sign_tol
    else:
        sign_margins = sign_tol - series["dt_rho_max"]
    worst, when = _worst(series, margins)
    sign_worst = float(sign_margins.min())
    constants = {
        "lambda": lam,
        "prefactor": prefactor,
        "factor": factor,
        "delta0": delta0,
        "R1": R1,
        "R2": R2,
        "k": k,
    }
    checks = {
        "sign": "dt_rho >= 0" if k <= 1 else "dt_rho <= 0",
        "sign_worst_margin": sign_worst,
        "fitted_rate": fitted_decay_rate(series),
    }
    passed = worst >= 0 and sign_worst >= 0
    return Certificate("velocity_decay", passed, constants, worst, when, checks)


def gradient_cap(c0_grad, R2, delta0, H0max):
    return max(H0max, c0_grad**2 * R2**2 / (2.0 * delta0**2))


def cert_gradient(series, c0_grad, R2, delta0, H0max, tol=GRADIENT_TOL):
    """``max H(t) <= max(max H(0), C0^2 R2^2 / (2 delta0^2))`` with ``H = |grad log rho|^2 / 2``."""
    cap = gradient_cap(c0_grad, R2, delta0, H0max)
    margins = cap + tol - series["max_H"]
    worst, when = _worst(series, margins)
    constants = {"cap": cap, "c0_grad": c0_grad, "R2": R2, "delta0": delta0, "H0max": H0max}
    return Certificate("gradient_bound", worst >= 0, constants, worst, when)


def curvature_caps(h0max, c2_norm, delta0, R2, n=2):
    """``(C0, upper, lower)`` with ``C0 = max(log(C/delta0), max h(0))``."""
    c0 = max(np.log(c2_norm / delta0), h0max)
    upper = R2 * np.exp(c0)
    return float(c0), float(upper), float(-(n - 1) * upper)


def initial_h(shape0):
    """``max_x log(max_i kappa_i / <X, nu>)`` of an initial :class:`ShapeState`."""
    return float(np.max(np.log(shape0.kappa[..., -1] / shape0.support)))


def cert_curvature(series, shape0, c2_norm, delta0, R2, n=2, rel_tol=CURVATURE_REL_TOL):
    """Principal curvatures stay within ``[-(n-1) R2 e^C0, R2 e^C0]``."""
    h0 = initial_h(shape0)
    c0, upper, lower = curvature_caps(h0, c2_norm, delta0, R2, n)
    up_m = upper * (1 + rel_tol) - series["max_kappa"]
    lo_m = series["min_kappa"] - lower * (1 + rel_tol)
    margins = np.minimum(up_m, lo_m)
    worst, when = _worst(series, margins)
    constants = {"C0": c0, "h0max": h0, "c2_norm": c2_norm, "delta0": delta0, "R2": R2, "upper": upper, "lower": lower}
    return Certificate("curvature_bound", worst >= 0, constants, worst, when)


def residual(grid, u, F_spec, f_spec):
    """``max |1/F(kappa) - f|`` over the nodes of the state ``u = log rho``."""
    ev = flow.Problem(grid, F_spec, f_spec).evaluate(u)
    return float(np.abs(1.0 / ev.F - ev.f).max())


def cert_residual(series):
    """``|1/F - f| = |d_t rho| <X,nu>/rho`` gives ``residual <= max|d_t rho| max rho / min <X,nu>``."""
    bound = series["max_dt_rho"] * series["max_rho"] / series["min_support"]
    margins = bound * (1 + 1e-12) + 1e-15 - series["residual"]
    worst, when = _worst(series, margins)
    return Certificate(
        "residual_relation",
        worst >= 0,
        {"final_residual": float(series["residual"][-1])},
        worst,
        when,
    )


def uniqueness_experiment(grid, F_spec, f_spec, u0_a, u0_b, config):
    """Run the flow from two initial fields; return max node-wise ``|rho_a - rho_b|`` at the end."""
    reports = [flow.evolve(grid, u0, F_spec, f_spec, config) for u0 in (u0_a, u0_b)]
    for rep in reports:
        if not rep.converged:
            raise RuntimeError(f"uniqueness run ended with {rep.termination}")
    diff = np.abs(np.exp(reports[0].state.u) - np.exp(reports[1].state.u))
    return float(diff.max()), reports


@dataclass
class CertificateReport:
    certificates: list
    constants: dict

    @property
    def passed(self):
        return all(c.passed for c in self.certificates)

    def __getitem__(self, name):
        for c in self.certificates:
            if c.name == name:
                return c
        raise KeyError(name)

    def as_dict(self):
        out = {"pass": self.passed, "constants": {k: _clean(v) for k, v in self.constants.items()}}
        for c in self.certificates:
            out[c.name] = c.as_dict()
        return out


def certify(grid, u0, report, F_spec, f_spec, r1, r2):
    """Run every certificate on a finished flow."""
    k = F_spec.degree
    rho0 = np.exp(np.asarray(u0, dtype=float))
    R1, R2 = radii(rho0, r1, r2)
    d0 = prescribed.delta0(f_spec, k, R1, R2, grid=grid)
    c0_grad, c2 = prescribed.norms(f_spec, R1, R2)
    prob = flow.Problem(grid, F_spec, f_spec)
    ev0 = prob.evaluate(u0)
    F0max = float(np.abs(ev0.dt_rho).max())
    H0max = float(0.5 * ev0.grad_sq.max())
    shape0 = shape_state(grid, rho0)
    series = report.series
    certs = [
        cert_bounds(series, rho0, r1, r2),
        cert_decay(series, d0, R1, R2, k, F0max),
        cert_gradient(series, c0_grad, R2, d0, H0max),
        cert_curvature(series, shape0, c2, d0, R2),
        cert_residual(series),
    ]
    constants = {
        "R1": R1,
        "R2": R2,
        "delta0": d0,
        "c0_grad": c0_grad,
        "c2_norm": c2,
        "F0max": F0max,
        "H0max": H0max,
        "k": k,
        "termination": report.termination,
    }
    return CertificateReport(certs, constants)
