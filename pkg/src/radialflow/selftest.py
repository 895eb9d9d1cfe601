"""Small invariant suites run by ``radialflow selftest``.

Each suite returns a list of ``(name, passed, detail)`` tuples. The whole set
runs in a few seconds on coarse grids.
"""

import contextlib
import time

import numpy as np

from . import flow, prescribed, shape, symfunc
from . import grid as sg
from .monitors import certificates

MUTATIONS = ("hessian",)


def _quadratic(grid, a, b):
    """``u = a.x + (b.x)^2`` and its exact frame Hessian ``2 b_t b_t^T - (a.x + 2 (b.x)^2) I``."""
    x = np.asarray(grid.nodes)
    ax, bx = x @ a, x @ b
    bt, bp = grid.e_theta @ b, grid.e_phi @ b
    diag = ax + 2.0 * bx**2
    return ax + bx**2, (2.0 * bt * bt - diag, 2.0 * bt * bp, 2.0 * bp * bp - diag)


def hessian_error(n_theta):
    grid = sg.build_grid("full", n_theta, 2 * n_theta)
    u, exact = _quadratic(grid, np.array([0.3, -0.2, 0.5]), np.array([0.4, 0.7, -0.1]))
    got = sg.hessian_components(grid, u)
    return max(float(np.abs(g - e).max()) for g, e in zip(got, exact))


def suite_grid():
    e1, e2 = hessian_error(16), hessian_error(32)
    ratio = e1 / e2
    return [("grid.hessian_convergence", ratio >= 3.5 and e2 < 1e-2, f"errors {e1:.3e} -> {e2:.3e}, ratio {ratio:.2f}")]


def suite_symfunc():
    out = []
    for spec in (symfunc.SigmaK(1), symfunc.SigmaK(2), symfunc.InvSigmaK(1), symfunc.PowerScaled(symfunc.SigmaK(1), 2)):
        rep = symfunc.check_structure(spec, sample_count=200)
        out.append((f"symfunc.structure[{spec}]", rep.passed, ""))
    val = float(symfunc.eval_F(symfunc.SigmaK(2), np.array([2.0, 3.0])))
    out.append(("symfunc.sigma2_value", val == 6.0, f"F(2,3) = {val}"))
    return out


def suite_shape():
    grid = sg.build_grid("full", 24, 48)
    x = np.asarray(grid.nodes)
    rho = 1.0 + 0.2 * (0.5 * x[..., 0] + 0.3 * x[..., 1] * x[..., 2] - 0.4 * x[..., 2] ** 2)
    defect = shape.shape_state(grid, rho, verify=True).route_defect
    sphere = shape.shape_state(grid, np.full(grid.shape, 0.8))
    kerr = float(np.abs(sphere.kappa - 1.25).max())
    return [
        ("shape.route_equivalence", defect <= 1e-9, f"defect {defect:.2e}"),
        ("shape.sphere_curvature", kerr <= 1e-12, f"error {kerr:.2e}"),
    ]


def suite_prescribed():
    spec = prescribed.PrescribedSpec(p=2.0)
    d0 = prescribed.delta0(spec, 1, 0.8, 1.0)
    bad = prescribed.admissibility(prescribed.PrescribedSpec(p=1.0), 1, 0.8, 1.0)
    return [
        ("prescribed.delta0", abs(d0 - 0.64) <= 1e-12, f"delta0 {d0}"),
        ("prescribed.rejects_p_equal_k", not bad.passed, ""),
    ]


def suite_flow():
    out = []
    grid = sg.build_grid("full", 16, 32)
    x = np.asarray(grid.nodes)
    u = np.log(1.0 + 0.1 * x[..., 2] + 0.05 * x[..., 0] * x[..., 1])
    f_spec = prescribed.PrescribedSpec(p=2.0, epsilon=0.1, coeffs=(0.0, 0.0, 1.0))
    prob = flow.Problem(grid, symfunc.SigmaK(1), f_spec)
    diff = float(np.abs(prob.fast(u)[0] - prob.evaluate(u).G).max())
    out.append(("flow.kernel_matches_reference", diff <= 1e-12, f"max diff {diff:.2e}"))

    axis = sg.build_grid("axisymmetric", 16)
    u0 = np.full(axis.shape, np.log(0.8))
    cfg = flow.FlowConfig(safety=1.0, integrator="rk4", t_max=1.0, monitor_stride=50)
    rep = flow.evolve(axis, u0, symfunc.SigmaK(1), prescribed.PrescribedSpec(p=2.0), cfg)
    exact = 1.0 / (1.0 + 0.25 * np.exp(-1.0))
    err = float(np.abs(rep.state.rho - exact).max())
    out.append(("flow.logistic_oracle", rep.termination == "horizon" and err <= 1e-8, f"error {err:.2e}"))
    return out


def suite_monitors():
    axis = sg.build_grid("axisymmetric", 16)
    u0 = np.full(axis.shape, np.log(0.8))
    F, f = symfunc.SigmaK(1), prescribed.PrescribedSpec(p=2.0)
    cfg = flow.FlowConfig(safety=1.0, tol_residual=1e-5, monitor_stride=20)
    rep = flow.evolve(axis, u0, F, f, cfg)
    certs = certificates.certify(axis, u0, rep, F, f, 0.8, 1.0)
    again = certificates.certify(axis, u0, rep, F, f, 0.8, 1.0)
    return [
        ("monitors.certificates_pass", rep.converged and certs.passed, rep.termination),
        ("monitors.idempotent", certs.as_dict() == again.as_dict(), ""),
    ]


SUITES = (suite_grid, suite_symfunc, suite_shape, suite_prescribed, suite_flow, suite_monitors)


def _corrupt_hessian(original):
    def corrupted(grid, u):
        h11, h12, h22 = original(grid, u)
        # flips the sign of the cot(theta) u_theta term of H_22, a classic stencil slip
        u_t = sg.gradient_components(grid, u)[0]
        return h11, h12, h22 - 2.0 * grid.cot_theta * u_t

    return corrupted


@contextlib.contextmanager
def mutation(name):
    """Temporarily install a deliberately broken operator."""
    if name is None:
        yield
        return
    if name not in MUTATIONS:
        raise ValueError(f"unknown mutation {name!r}; choose from {MUTATIONS}")
    original = sg.hessian_components
    sg.hessian_components = _corrupt_hessian(original)
    try:
        yield
    finally:
        sg.hessian_components = original


def run(mutate=None, echo=print):
    """Run every suite; return True iff all checks pass."""
    ok = True
    start = time.perf_counter()
    with mutation(mutate):
        for suite in SUITES:
            try:
                results = suite()
            except Exception as exc:  # a crashing suite is a failing suite
                results = [(suite.__name__, False, f"{type(exc).__name__}: {exc}")]
            for name, passed, detail in results:
                ok &= bool(passed)
                echo(f"{'PASS' if passed else 'FAIL'}  {name}  {detail}".rstrip())
    echo(f"selftest {'passed' if ok else 'FAILED'} in {time.perf_counter() - start:.1f} s")
    return ok
