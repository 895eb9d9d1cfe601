"""Symmetric curvature functions of the principal curvatures.

Three families are supported, all normalized so that ``F(1, ..., 1) = 1``:

* ``sigma_k``      ``S_k(kappa) / C(n, k)`` on the Garding cone of order ``k``;
* ``inv_sigma_k``  ``C(n, k) / S_k(1/kappa_1, ..., 1/kappa_n)`` on the positive cone;
* ``power``        ``G(kappa) ** alpha`` for a base function ``G`` (degree scales by alpha).

Every function takes eigenvalue arrays with the curvature index on the last axis.
"""

from dataclasses import dataclass
from math import comb

import numpy as np

from .errors import AdmissibilityError

KINDS = ("sigma_k", "inv_sigma_k", "power")

GRADIENT_TOL = 0.0
HOMOGENEITY_TOL = 1e-10
LOG_HESSIAN_TOL = 1e-6
NORMALIZATION_TOL = 1e-12
FD_REL_STEP = 1e-5
HOMOGENEITY_FACTORS = (0.25, 0.3, 0.7, 1.9, 3.3, 4.0)


@dataclass(frozen=True)
class CurvatureSpec:
    kind: str
    k: int = 1
    n: int = 2
    alpha: float = 1.0
    base: "CurvatureSpec | None" = None

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ValueError(f"unknown curvature kind {self.kind!r}")
        if self.kind == "power":
            if self.base is None or not self.alpha > 0:
                raise ValueError("power spec needs a base spec and alpha > 0")
        elif not 1 <= self.k <= self.n:
            raise ValueError(f"need 1 <= k <= n, got k={self.k}, n={self.n}")

    @property
    def degree(self):
        if self.kind == "power":
            return self.alpha * self.base.degree
        return float(self.k)

    @property
    def dim(self):
        return self.base.dim if self.kind == "power" else self.n

    @property
    def cone(self):
        """``"garding:<k>"`` or ``"positive"``."""
        if self.kind == "power":
            return self.base.cone
        return f"garding:{self.k}" if self.kind == "sigma_k" else "positive"

    def __str__(self):
        if self.kind == "power":
            return f"({self.base})^{self.alpha:g}"
        name = "SigmaK" if self.kind == "sigma_k" else "InvSigmaK"
        return f"{name}({self.k})"


def SigmaK(k, n=2):
    return CurvatureSpec("sigma_k", k=k, n=n)


def InvSigmaK(k, n=2):
    return CurvatureSpec("inv_sigma_k", k=k, n=n)


def PowerScaled(base, alpha):
    return CurvatureSpec("power", k=base.k, n=base.dim, alpha=float(alpha), base=base)


def elementary_symmetric(lam, k):
    """``(S_0, ..., S_k)`` of the last-axis entries of ``lam``."""
    lam = np.asarray(lam)
    out = [np.ones(lam.shape[:-1], dtype=lam.dtype)] + [
        np.zeros(lam.shape[:-1], dtype=lam.dtype) for _ in range(k)
    ]
    for i in range(lam.shape[-1]):
        li = lam[..., i]
        for j in range(k, 0, -1):
            out[j] = out[j] + li * out[j - 1]
    return out


def _sk_gradient(lam, k):
    # dS_k/dlam_i = S_{k-1} of the remaining entries
    lam = np.asarray(lam)
    parts = []
    for i in range(lam.shape[-1]):
        rest = np.delete(lam, i, axis=-1)
        parts.append(elementary_symmetric(rest, k - 1)[k - 1])
    return np.stack(parts, axis=-1)


def cone_margin(spec, kappa):
    """Smallest cone slack per point; positive iff ``kappa`` is strictly inside.

    For the Garding cone this is ``min_{j <= k} S_j / C(n, j)``; for the positive
    cone it is the smallest curvature.
    """
    if spec.kind == "power":
        return cone_margin(spec.base, kappa)
    kappa = np.asarray(kappa, dtype=float)
    if spec.kind == "inv_sigma_k":
        return kappa.min(axis=-1)
    s = elementary_symmetric(kappa, spec.k)
    return np.min(np.stack([s[j] / comb(spec.n, j) for j in range(1, spec.k + 1)]), axis=0)


def in_cone(spec, kappa):
    return cone_margin(spec, kappa) > 0


def _check(spec, kappa):
    kappa = np.asarray(kappa, dtype=float)
    if kappa.shape[-1] != spec.dim:
        raise ValueError(f"expected {spec.dim} curvatures, got shape {kappa.shape}")
    ok = in_cone(spec, kappa)
    if not np.all(ok):
        bad = kappa[~ok] if kappa.ndim > 1 else kappa
        raise AdmissibilityError(f"kappa {np.asarray(bad).reshape(-1, spec.dim)[0]} outside cone {spec.cone}", bad)
    return kappa


def _values(spec, kappa):
    if spec.kind == "power":
        return _values(spec.base, kappa) ** spec.alpha
    norm = comb(spec.n, spec.k)
    if spec.kind == "sigma_k":
        return elementary_symmetric(kappa, spec.k)[spec.k] / norm
    return norm / elementary_symmetric(1.0 / kappa, spec.k)[spec.k]


def _gradients(spec, kappa):
    if spec.kind == "power":
        g = _values(spec.base, kappa)
        return (spec.alpha * g ** (spec.alpha - 1.0))[..., None] * _gradients(spec.base, kappa)
    norm = comb(spec.n, spec.k)
    if spec.kind == "sigma_k":
        return _sk_gradient(kappa, spec.k) / norm
    mu = 1.0 / kappa
    s = elementary_symmetric(mu, spec.k)[spec.k]
    return (norm / s**2)[..., None] * _sk_gradient(mu, spec.k) * mu**2


def eval_F(spec, kappa, check=True):
    """``F(kappa)``; raises :class:`AdmissibilityError` outside the cone."""
    kappa = _check(spec, kappa) if check else np.asarray(kappa, dtype=float)
    return _values(spec, kappa)


def grad_F(spec, kappa, check=True):
    """``(dF/dkappa_1, ..., dF/dkappa_n)`` with the curvature index on the last axis."""
    kappa = _check(spec, kappa) if check else np.asarray(kappa, dtype=float)
    return _gradients(spec, kappa)


@dataclass
class StructureReport:
    spec: str
    samples: int
    min_gradient: float
    homogeneity_defect: float
    max_log_hessian_eig: float
    normalization_defect: float

    @property
    def passed(self):
        return (
            self.min_gradient > GRADIENT_TOL
            and self.homogeneity_defect <= HOMOGENEITY_TOL
            and self.max_log_hessian_eig <= LOG_HESSIAN_TOL
            and self.normalization_defect <= NORMALIZATION_TOL
        )


def sample_cone(spec, count, rng, step=0.0):
    """Rejection-sample ``count`` unit-norm points of the cone from the box [-2, 2]^n.

    Points whose coordinate stencil of width ``step`` would leave the cone are
    rejected as well.
    """
    n = spec.dim
    found = []
    total = 0
    while total < count:
        box = rng.uniform(-2.0, 2.0, size=(4 * count, n))
        norms = np.linalg.norm(box, axis=1)
        box = box[norms > 1e-3] / norms[norms > 1e-3, None]
        keep = in_cone(spec, box)
        if step > 0:
            for i in range(n):
                e = np.zeros(n)
                e[i] = step
                keep &= in_cone(spec, box + e) & in_cone(spec, box - e)
        found.append(box[keep])
        total += int(keep.sum())
    return np.concatenate(found)[:count]


def log_hessian(spec, kappa, rel_step=FD_REL_STEP):
    """Hessian of ``log F`` by central differences of the analytic ``grad log F``."""
    kappa = np.atleast_2d(np.asarray(kappa, dtype=float))
    n = spec.dim
    h = rel_step * np.linalg.norm(kappa, axis=-1)
    cols = []
    for j in range(n):
        dk = np.zeros_like(kappa)
        dk[:, j] = h
        plus, minus = kappa + dk, kappa - dk
        gp = _gradients(spec, plus) / _values(spec, plus)[:, None]
        gm = _gradients(spec, minus) / _values(spec, minus)[:, None]
        cols.append((gp - gm) / (2.0 * h[:, None]))
    hess = np.stack(cols, axis=-1)
    return 0.5 * (hess + np.swapaxes(hess, -1, -2))


def check_structure(spec, sample_count=1000, seed=0):
    """Sample the cone and measure monotonicity, homogeneity, log-concavity, normalization."""
    if sample_count < 100:
        raise ValueError("sample_count must be >= 100")
    rng = np.random.default_rng(seed)
    # unit-norm samples, so the relative finite-difference step is absolute
    kappa = sample_cone(spec, sample_count, rng, step=FD_REL_STEP)
    k = spec.degree

    min_grad = float(_gradients(spec, kappa).min())
    base = _values(spec, kappa)
    defect = 0.0
    # relative defect; factors that are not powers of two so the scaling itself rounds
    for t in HOMOGENEITY_FACTORS:
        scaled = t**k * base
        defect = max(defect, float(np.max(np.abs(_values(spec, t * kappa) - scaled) / scaled)))
    eig = np.linalg.eigvalsh(log_hessian(spec, kappa))
    ones = np.ones(spec.dim)
    return StructureReport(
        spec=str(spec),
        samples=len(kappa),
        min_gradient=min_grad,
        homogeneity_defect=defect,
        max_log_hessian_eig=float(eig.max()),
        normalization_defect=float(abs(_values(spec, ones) - 1.0)),
    )
