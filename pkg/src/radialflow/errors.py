"""Exception types shared across the package."""

import numpy as np


class AdmissibilityError(ValueError):
    """A curvature vector or prescribed function fails an admissibility condition."""

    def __init__(self, message, kappa=None):
        super().__init__(message)
        self.kappa = None if kappa is None else np.asarray(kappa, dtype=float)


class ConeViolation(AdmissibilityError):
    """Principal curvatures left the admissible cone at some grid node."""

    def __init__(self, node, kappa, margin):
        self.node = tuple(int(i) for i in node)
        self.margin = float(margin)
        kappa = np.asarray(kappa, dtype=float)
        super().__init__(
            f"cone violation at node {self.node}: kappa = "
            f"({kappa[0]:.6g}, {kappa[1]:.6g}), margin = {self.margin:.3g}",
            kappa,
        )


class DomainError(ValueError):
    """Radial function is not positive (surface not representable over the sphere)."""
