"""Analytic scale-space kernel families on a k x k integer grid.

Families: gaussian, its first derivatives along x (columns) and y (rows),
difference of Gaussians, and the Ricker (Mexican-hat) wavelet. Kernels are
point-sampled at integer offsets x, y in {-(k-1)/2 .. (k-1)/2}:

    gaussian   exp(-(x^2+y^2) / 2 sigma^2)
    gauss_dx   -x/sigma^2 * gaussian
    gauss_dy   -y/sigma^2 * gaussian
    dog        G(sigma) - G(sigma2), sigma2 > sigma
    ricker     (1 - r^2/(2 sigma^2)) * exp(-r^2/(2 sigma^2))

Parameter fitting maximizes the absolute cosine similarity between the
centered target and the centered kernel, which coincides with minimizing
the linear-shift residual over the same grid.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DegenerateDoG, ZeroVariance
from .filterbank import Filter, FilterBank
from .linfit import fit_pair

FAMILIES = ("gaussian", "gauss_dx", "gauss_dy", "dog", "ricker")

NORM_RAW = "raw"
NORM_UNIT_L1_COMPONENTS = "unit_l1_components"
NORM_UNIT_L2 = "unit_l2"

DEFAULT_SIGMA_GRID = np.round(np.arange(0.30, 3.0 + 1e-9, 0.01), 2)
DEFAULT_DOG_RATIOS = (1.2, 1.6, 2.0)


@dataclass(frozen=True)
class AnalyticKernelSpec:
    family: str
    sigma: float
    k: int
    sigma2: float = None  # dog only
    normalization: str = NORM_RAW

    def __post_init__(self):
        if self.family not in FAMILIES:
            raise ValueError(f"unknown family {self.family!r}")
        if self.sigma <= 0:
            raise ValueError("sigma must be > 0")
        if self.k < 1 or self.k % 2 == 0:
            raise ValueError("k must be odd and positive")
        if self.family == "dog":
            if self.sigma2 is None or self.sigma2 <= self.sigma:
                raise DegenerateDoG(
                    f"dog requires sigma2 > sigma, got {self.sigma2} vs {self.sigma}"
                )
        if self.normalization not in (NORM_RAW, NORM_UNIT_L1_COMPONENTS, NORM_UNIT_L2):
            raise ValueError(f"unknown normalization {self.normalization!r}")


@dataclass(frozen=True)
class FamilyFit:
    family: str
    sigma: float
    sigma2: float  # None unless family == "dog"
    similarity: float  # absolute centered cosine similarity, in [0, 1]
    linshift_residual: float


def _grid(k: int):
    offs = np.arange(k, dtype=np.float64) - (k - 1) / 2
    return np.meshgrid(offs, offs)  # X varies along columns, Y along rows


def _gauss(k: int, sigma: float) -> np.ndarray:
    x, y = _grid(k)
    return np.exp(-(x * x + y * y) / (2.0 * sigma * sigma))


def _raw_kernel(family: str, k: int, sigma: float, sigma2, normalization: str):
    if family == "gaussian":
        val = _gauss(k, sigma)
    elif family == "gauss_dx":
        x, _ = _grid(k)
        val = -x / (sigma * sigma) * _gauss(k, sigma)
    elif family == "gauss_dy":
        _, y = _grid(k)
        val = -y / (sigma * sigma) * _gauss(k, sigma)
    elif family == "ricker":
        x, y = _grid(k)
        r2 = x * x + y * y
        s2 = 2.0 * sigma * sigma
        val = (1.0 - r2 / s2) * np.exp(-r2 / s2)
    elif family == "dog":
        g1 = _gauss(k, sigma)
        g2 = _gauss(k, sigma2)
        if normalization == NORM_UNIT_L1_COMPONENTS:
            return g1 / np.sum(np.abs(g1)) - g2 / np.sum(np.abs(g2))
        val = g1 - g2
    else:
        raise ValueError(f"unknown family {family!r}")
    if normalization == NORM_UNIT_L1_COMPONENTS and family != "dog":
        val = val / np.sum(np.abs(val))
    return val


def generate(spec: AnalyticKernelSpec) -> Filter:
    val = _raw_kernel(spec.family, spec.k, spec.sigma, spec.sigma2, spec.normalization)
    if spec.normalization == NORM_UNIT_L2:
        val = val / np.linalg.norm(val)
    return Filter(val)


def _centered_cosine(a: np.ndarray, b: np.ndarray) -> float:
    ca = a - a.mean()
    cb = b - b.mean()
    na = np.linalg.norm(ca)
    nb = np.linalg.norm(cb)
    if na <= 1e-12:
        raise ZeroVariance("constant target")
    if nb <= 1e-12:
        return -1.0  # degenerate kernel, never preferred
    return abs(float(np.dot(ca.ravel(), cb.ravel())) / (na * nb))


def fit_family(target: Filter, family: str, sigma_grid=None, dog_ratios=None) -> FamilyFit:
    """Grid search over sigma (and sigma2/sigma for dog); ties prefer the
    smallest sigma (then the smallest ratio)."""
    if sigma_grid is None:
        sigma_grid = DEFAULT_SIGMA_GRID
    sigma_grid = np.asarray(sigma_grid, dtype=np.float64)
    if sigma_grid.size == 0:
        raise ValueError("empty sigma grid")
    if family == "dog":
        ratios = DEFAULT_DOG_RATIOS if dog_ratios is None else tuple(dog_ratios)
        params = [(s, s * r) for r in ratios for s in sigma_grid]
    else:
        params = [(s, None) for s in sigma_grid]
    tvals = np.asarray(target.values, dtype=np.float64)
    best = None
    for sigma, sigma2 in params:
        kern = _raw_kernel(
            family,
            target.k,
            sigma,
            sigma2,
            NORM_UNIT_L1_COMPONENTS if family == "dog" else NORM_RAW,
        )
        sim = _centered_cosine(tvals, kern)
        if best is None or sim > best[0]:
            best = (sim, sigma, sigma2, kern)
    sim, sigma, sigma2, kern = best
    if sim < 0:
        raise ZeroVariance("all kernels on the grid are degenerate")
    residual = fit_pair(Filter(kern), target).residual
    return FamilyFit(
        family=family,
        sigma=float(sigma),
        sigma2=None if sigma2 is None else float(sigma2),
        similarity=sim,
        linshift_residual=residual,
    )


def master_report(masters: FilterBank, sigma_grid=None):
    """Best analytic family per filter.

    Returns a list of (bank position, best family, {family: FamilyFit}).
    """
    report = []
    for i, entry in enumerate(masters):
        fits = {fam: fit_family(entry.filter, fam, sigma_grid) for fam in FAMILIES}
        best = max(FAMILIES, key=lambda fam: fits[fam].similarity)
        report.append((i, best, fits))
    return report
