"""Snapshot diagnostics and run-end certificates."""

from .certificates import (
    Certificate,
    CertificateReport,
    cert_bounds,
    cert_curvature,
    cert_decay,
    cert_gradient,
    cert_residual,
    certify,
    residual,
    uniqueness_experiment,
)
from .series import CSV_COLUMNS, MonitorSeries, fitted_decay_rate, snapshot

__all__ = [
    "CSV_COLUMNS",
    "Certificate",
    "CertificateReport",
    "MonitorSeries",
    "cert_bounds",
    "cert_curvature",
    "cert_decay",
    "cert_gradient",
    "cert_residual",
    "certify",
    "fitted_decay_rate",
    "residual",
    "snapshot",
    "uniqueness_experiment",
]
