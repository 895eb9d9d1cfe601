"""Per-snapshot diagnostics recorded during a flow run."""

import numpy as np

# written to CSV in this order
CSV_COLUMNS = (
    "t",
    "max_dt_rho",
    "min_rho",
    "max_rho",
    "max_grad_rho",
    "min_kappa",
    "max_kappa",
    "residual",
    "min_F",
    "cone_margin",
    "max_H",
)
EXTRA_COLUMNS = ("max_G", "min_G", "dt_rho_min", "dt_rho_max", "min_support")
COLUMNS = CSV_COLUMNS + EXTRA_COLUMNS


class MonitorSeries:
    """Column store of snapshot diagnostics; ``series["max_H"]`` returns an array."""

    def __init__(self, rows=()):
        self._data = {c: [] for c in COLUMNS}
        for row in rows:
            self.append(row)

    def append(self, row):
        t = float(row["t"])
        if self._data["t"] and not t > self._data["t"][-1]:
            raise ValueError(f"snapshot time {t} does not increase")
        for c in COLUMNS:
            value = float(row[c])
            if not np.isfinite(value):
                raise ValueError(f"non-finite monitor value {c} = {value}")
            self._data[c].append(value)

    def __getitem__(self, name):
        return np.asarray(self._data[name], dtype=float)

    def __len__(self):
        return len(self._data["t"])

    def row(self, i):
        return {c: self._data[c][i] for c in COLUMNS}

    def rows(self):
        return [self.row(i) for i in range(len(self))]

    def copy(self):
        return MonitorSeries(self.rows())

    def to_csv(self):
        lines = [",".join(CSV_COLUMNS)]
        for i in range(len(self)):
            lines.append(",".join(f"{self._data[c][i]:.17g}" for c in CSV_COLUMNS))
        return "\n".join(lines) + "\n"


def snapshot(ev, t):
    """Diagnostics row for an evaluated state (see :class:`radialflow.flow.Evaluation`)."""
    dt_rho = ev.dt_rho
    return {
        "t": t,
        "max_dt_rho": float(np.abs(dt_rho).max()),
        "min_rho": float(ev.rho.min()),
        "max_rho": float(ev.rho.max()),
        "max_grad_rho": float((ev.rho * np.sqrt(ev.grad_sq)).max()),
        "min_kappa": float(ev.kappa_lo.min()),
        "max_kappa": float(ev.kappa_hi.max()),
        "residual": float(np.abs(1.0 / ev.F - ev.f).max()),
        "min_F": float(ev.F.min()),
        "cone_margin": float(ev.margin.min()),
        "max_H": float(0.5 * ev.grad_sq.max()),
        "max_G": float(ev.G.max()),
        "min_G": float(ev.G.min()),
        "dt_rho_min": float(dt_rho.min()),
        "dt_rho_max": float(dt_rho.max()),
        "min_support": float((ev.rho / ev.w).min()),
    }


def fitted_decay_rate(series, floor=1e-13):
    """Least-squares slope of ``-log max|d_t rho|`` against ``t`` (diagnostic only)."""
    t = series["t"]
    v = series["max_dt_rho"]
    keep = v > floor
    if keep.sum() < 2:
        return float("nan")
    slope = np.polyfit(t[keep], np.log(v[keep]), 1)[0]
    return float(-slope)
