import csv
import io

import numpy as np
import pytest

from radialflow import flow
from radialflow import grid as sg
from radialflow import monitors as mon
from radialflow.monitors import certificates as cert
from radialflow.monitors.series import COLUMNS, CSV_COLUMNS, MonitorSeries, fitted_decay_rate, snapshot
from radialflow.prescribed import PrescribedSpec
from radialflow.shape import shape_state
from radialflow.symfunc import SigmaK

AXIS = sg.build_grid("axisymmetric", 64)
SQUARE = PrescribedSpec(p=2.0)
CUBE = PrescribedSpec(p=3.0)
TILTED = PrescribedSpec(p=2.0, epsilon=0.1, coeffs=(0.0, 0.0, 1.0))


def const(r):
    return np.full(AXIS.shape, np.log(r))


def synthetic(times, **columns):
    """Series with the given columns; the rest are zeros."""
    rows = []
    for i, t in enumerate(times):
        row = {c: 0.0 for c in COLUMNS}
        row["t"] = t
        for name, values in columns.items():
            row[name] = values[i]
        rows.append(row)
    return MonitorSeries(rows)


@pytest.fixture(scope="module")
def logistic():
    u0 = const(0.8)
    cfg = flow.FlowConfig(safety=1.0, tol_residual=1e-8, monitor_stride=10)
    return u0, flow.evolve(AXIS, u0, SigmaK(1), SQUARE, cfg)


@pytest.fixture(scope="module")
def tilted():
    x = np.asarray(AXIS.nodes)
    u0 = np.log(0.8 + 0.05 * x[..., 2])
    cfg = flow.FlowConfig(safety=1.0, tol_residual=1e-7, monitor_stride=10)
    return u0, flow.evolve(AXIS, u0, SigmaK(1), TILTED, cfg)


class TestSnapshot:
    def test_sphere_row(self):
        prob = flow.Problem(AXIS, SigmaK(1), SQUARE)
        row = snapshot(prob.evaluate(const(0.8)), 0.0)
        assert row["max_dt_rho"] == pytest.approx(0.16, rel=1e-13)
        assert row["residual"] == pytest.approx(0.16, rel=1e-13)
        assert row["min_rho"] == row["max_rho"] == pytest.approx(0.8)
        assert row["min_kappa"] == row["max_kappa"] == pytest.approx(1.25)
        assert row["min_F"] == pytest.approx(1.25)
        assert row["cone_margin"] == pytest.approx(1.25)
        assert row["max_H"] == 0.0 and row["max_grad_rho"] == 0.0
        assert row["min_support"] == pytest.approx(0.8)

    def test_matches_shape_state(self):
        x = np.asarray(AXIS.nodes)
        rho = 1 + 0.1 * x[..., 2] + 0.05 * x[..., 2] ** 2
        row = snapshot(flow.Problem(AXIS, SigmaK(1), SQUARE).evaluate(np.log(rho)), 0.0)
        s = shape_state(AXIS, rho)
        grad = np.linalg.norm(s.grad_rho, axis=-1)
        assert row["max_grad_rho"] == pytest.approx(grad.max(), rel=1e-12)
        assert row["max_H"] == pytest.approx(0.5 * np.max((grad / rho) ** 2), rel=1e-12)
        assert row["min_kappa"] == pytest.approx(s.kappa.min(), rel=1e-12)
        assert row["max_kappa"] == pytest.approx(s.kappa.max(), rel=1e-12)
        assert row["min_support"] == pytest.approx(s.support.min(), rel=1e-12)


class TestSeries:
    def test_rejects_non_increasing_time(self):
        s = synthetic([0.0, 1.0])
        row = s.row(1)
        with pytest.raises(ValueError):
            s.append(row)

    def test_rejects_non_finite(self):
        with pytest.raises(ValueError):
            synthetic([0.0], residual=[np.nan])

    def test_csv_round_trip(self, logistic):
        _, rep = logistic
        text = rep.series.to_csv()
        reader = csv.reader(io.StringIO(text))
        header = next(reader)
        assert tuple(header) == CSV_COLUMNS
        assert len(header) == 11
        body = np.array([[float(v) for v in line] for line in reader])
        for j, name in enumerate(CSV_COLUMNS):
            assert np.array_equal(body[:, j], rep.series[name])

    def test_run_invariants(self, logistic):
        _, rep = logistic
        s = rep.series
        assert np.all(np.diff(s["t"]) > 0)
        assert np.all(s["min_rho"] <= s["max_rho"])
        assert np.all(s["min_kappa"] <= s["max_kappa"])
        assert np.all(s["cone_margin"] > 0)
        assert s["t"][-1] == rep.state.t

    def test_fitted_rate_matches_linearization(self, logistic):
        # rho' = rho - rho^2 linearizes to a decay rate of one about rho = 1
        _, rep = logistic
        assert fitted_decay_rate(rep.series) == pytest.approx(1.0, rel=0.02)

    def test_fitted_rate_synthetic(self):
        t = np.linspace(0, 5, 30)
        s = synthetic(t, max_dt_rho=0.3 * np.exp(-0.7 * t))
        assert fitted_decay_rate(s) == pytest.approx(0.7, rel=1e-10)
        assert np.isnan(fitted_decay_rate(synthetic([0.0])))


class TestCertificateFormulas:
    def test_rates(self):
        assert cert.decay_rate(0.64, 0.8, 1.0, 1) == pytest.approx(0.64)
        assert cert.decay_rate(0.729, 0.9, 1.05, 2) == pytest.approx(0.81)

    def test_radii(self):
        assert cert.radii(np.array([0.85, 0.95]), 0.8, 1.0) == (0.8, 1.0)
        assert cert.radii(np.array([0.7, 1.3]), 0.8, 1.0) == (0.7, 1.3)

    def test_gradient_cap(self):
        assert cert.gradient_cap(2.0, 1.0, 0.64, 0.0) == pytest.approx(4 / (2 * 0.64**2))
        assert cert.gradient_cap(0.0, 1.0, 0.5, 0.3) == 0.3

    def test_curvature_caps(self):
        c0, up, lo = cert.curvature_caps(0.1, 2.0, 0.64, 1.0)
        assert c0 == pytest.approx(np.log(2 / 0.64))
        assert up == pytest.approx(1 / 0.32)
        assert lo == pytest.approx(-up)
        c0, up, lo = cert.curvature_caps(5.0, 2.0, 0.64, 1.0, n=3)
        assert c0 == 5.0 and lo == pytest.approx(-2 * up)

    def test_initial_h_of_sphere(self):
        # kappa / <X, nu> = 1 / rho^2 on a round sphere
        assert cert.initial_h(shape_state(AXIS, np.full(AXIS.shape, 0.8))) == pytest.approx(-2 * np.log(0.8))


class TestCertificatesOnSynthetic:
    def test_bounds_violation(self):
        s = synthetic([0.0, 1.0], min_rho=[0.8, 0.79], max_rho=[0.8, 0.9])
        c = cert.cert_bounds(s, np.array([0.8]), 0.8, 1.0)
        assert not c.passed
        assert c.worst_margin == pytest.approx(-0.01) and c.worst_time == 1.0

    def test_decay_bound_and_sign(self):
        t = np.array([0.0, 1.0, 2.0])
        good = 0.2 * np.exp(-0.64 * t)
        s = synthetic(t, max_dt_rho=good, dt_rho_min=np.zeros(3))
        assert cert.cert_decay(s, 0.64, 0.8, 1.0, 1, 0.16).passed
        too_slow = synthetic(t, max_dt_rho=[0.2, 0.2, 0.2])
        assert not cert.cert_decay(too_slow, 0.64, 0.8, 1.0, 1, 0.16).passed
        wrong_sign = synthetic(t, max_dt_rho=good, dt_rho_min=[0.0, -1e-6, 0.0])
        c = cert.cert_decay(wrong_sign, 0.64, 0.8, 1.0, 1, 0.16)
        assert not c.passed and c.checks["sign_worst_margin"] < 0

    def test_injected_gradient_violation(self, tilted):
        u0, rep = tilted
        base = cert.certify(AXIS, u0, rep, SigmaK(1), TILTED, 0.7, 1.2)
        assert base["gradient_bound"].passed
        cap = base["gradient_bound"].constants["cap"]
        rows = rep.series.rows()
        rows[len(rows) // 2]["max_H"] = 1.01 * cap + 1e-6
        c = cert.cert_gradient(MonitorSeries(rows), base.constants["c0_grad"], base.constants["R2"], base.constants["delta0"], base.constants["H0max"])
        assert not c.passed
        assert c.worst_time == rows[len(rows) // 2]["t"]

    def test_residual_relation_detects_inconsistency(self):
        s = synthetic([0.0], max_dt_rho=[0.1], max_rho=[1.0], min_support=[1.0], residual=[0.2])
        assert not cert.cert_residual(s).passed
        s = synthetic([0.0], max_dt_rho=[0.1], max_rho=[1.0], min_support=[0.5], residual=[0.2])
        assert cert.cert_residual(s).passed


class TestCertify:
    def test_logistic_constants(self, logistic):
        u0, rep = logistic
        r = cert.certify(AXIS, u0, rep, SigmaK(1), SQUARE, 0.8, 1.0)
        assert r.passed
        d = r["velocity_decay"].constants
        assert d["lambda"] == pytest.approx(0.64, rel=1e-12)
        assert d["prefactor"] == pytest.approx(0.2, rel=1e-12)
        assert r.constants["F0max"] == pytest.approx(0.16, rel=1e-12)

    def test_k2_constants(self):
        u0 = const(1.05)
        rep = flow.evolve(AXIS, u0, SigmaK(2), CUBE, flow.FlowConfig(safety=1.0, tol_residual=1e-8))
        r = cert.certify(AXIS, u0, rep, SigmaK(2), CUBE, 0.9, 1.0)
        assert r.passed
        d = r["velocity_decay"].constants
        assert d["lambda"] == pytest.approx(0.81, rel=1e-12)
        assert d["prefactor"] == pytest.approx(1.05 / 0.9 * 0.055125, rel=1e-12)
        assert d["prefactor"] == pytest.approx(0.0643125, rel=1e-12)

    def test_tilted_run_passes_every_certificate(self, tilted):
        u0, rep = tilted
        r = cert.certify(AXIS, u0, rep, SigmaK(1), TILTED, 0.7, 1.2)
        assert rep.converged
        for name in ("radial_bounds", "velocity_decay", "gradient_bound", "curvature_bound", "residual_relation"):
            assert r[name].passed, name

    def test_idempotent(self, tilted):
        u0, rep = tilted
        a = cert.certify(AXIS, u0, rep, SigmaK(1), TILTED, 0.7, 1.2).as_dict()
        b = cert.certify(AXIS, u0, rep, SigmaK(1), TILTED, 0.7, 1.2).as_dict()
        assert a == b

    def test_unknown_name(self, logistic):
        u0, rep = logistic
        with pytest.raises(KeyError):
            cert.certify(AXIS, u0, rep, SigmaK(1), SQUARE, 0.8, 1.0)["nope"]

    def test_package_exports(self):
        assert mon.certify is cert.certify


class TestResidual:
    def test_examples(self):
        assert cert.residual(AXIS, const(1.0), SigmaK(1), SQUARE) == 0.0
        assert cert.residual(AXIS, const(0.8), SigmaK(1), SQUARE) == pytest.approx(0.16, rel=1e-13)


class TestUniqueness:
    CFG = flow.FlowConfig(safety=1.0, tol_residual=1e-8)

    def test_two_starts_reach_same_sphere(self):
        diff, reps = cert.uniqueness_experiment(AXIS, SigmaK(1), SQUARE, const(0.6), const(0.9), self.CFG)
        assert diff <= 1e-5
        assert all(r.converged for r in reps)

    def test_identical_starts(self):
        diff, _ = cert.uniqueness_experiment(AXIS, SigmaK(1), SQUARE, const(0.9), const(0.9), self.CFG)
        assert diff == 0.0

    def test_unconverged_run_raises(self):
        with pytest.raises(RuntimeError):
            cert.uniqueness_experiment(AXIS, SigmaK(1), SQUARE, const(0.6), const(0.9), flow.FlowConfig(t_max=0.1))
