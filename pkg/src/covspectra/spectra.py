"""Spectral experiments on sample covariance matrices.

The objects here compare one ensemble against its Gaussian companion (or
against the closed-form limit law) through two lenses: the Kolmogorov
distance between empirical spectral CDFs, and the gap between normalized
resolvent traces on a grid in the upper half-plane.  Ladder experiments
repeat that comparison over growing matrix sizes at a fixed aspect ratio
and report per-rung means with standard errors; trend properties compare
the top rung against the bottom one, since almost-sure convergence says
nothing about per-replica monotonicity at finite sizes.

Columns are never centered before forming (1/n) Y Yᵀ.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import partial

import numpy as np

from .ensembles import EnsembleConfig, sample_matrix
from .errors import (
    DimensionMismatch,
    InvalidLadder,
    InvalidParameter,
    NotPSD,
)
from .linalg import UpperHalfPoint, require_upper_half, resolvent_stieltjes
from .mp import MPLaw, mp_support
from .parallel import ordered_map

PSD_EIG_TOL = 1e-8
MP_GRID_POINTS = 10_000


@dataclass(frozen=True, eq=False)
class SpectralSample:
    """Ascending eigenvalues of one realization of (1/n) Y Yᵀ."""

    eigs: np.ndarray
    p: int
    n: int
    seed: int | None = None
    config_hash: str | None = None

    def __post_init__(self):
        eigs = np.asarray(self.eigs, dtype=np.float64)
        if eigs.ndim != 1 or eigs.size != self.p or self.p < 1 or self.n < 1:
            raise InvalidParameter(
                f"need {self.p} eigenvalues and p, n >= 1, got shape {eigs.shape}"
            )
        if not np.all(np.isfinite(eigs)):
            raise InvalidParameter("eigenvalues must be finite")
        if np.any(np.diff(eigs) < 0.0):
            raise InvalidParameter("eigenvalues must be ascending")
        if eigs[0] < -PSD_EIG_TOL * (1.0 + np.max(np.abs(eigs))):
            raise NotPSD(f"covariance spectrum has eigenvalue {eigs[0]}")
        eigs.setflags(write=False)
        object.__setattr__(self, "eigs", eigs)


def sample_cov_spectrum(y, *, seed=None, config_hash=None) -> SpectralSample:
    """Eigenvalues of (1/n) Y Yᵀ for a p-by-n data matrix, ascending."""
    y = np.asarray(y, dtype=np.float64)
    if y.ndim != 2:
        raise InvalidParameter(f"data matrix must be 2-d, got shape {y.shape}")
    p, n = y.shape
    a = y @ y.T
    a = (a + a.T) / (2.0 * n)
    return SpectralSample(
        eigs=np.linalg.eigvalsh(a), p=p, n=n, seed=seed, config_hash=config_hash
    )


def esd_cdf(sample: SpectralSample, lam):
    """Right-continuous empirical spectral CDF at lam (scalar or array)."""
    count = np.searchsorted(sample.eigs, lam, side="right")
    out = count / sample.p
    return float(out) if np.isscalar(lam) else out


def eigenvalues_csv(sample: SpectralSample) -> str:
    """One eigenvalue per line, shortest round-trip decimal."""
    return "\n".join(repr(v) for v in sample.eigs.tolist()) + "\n"


# --------------------------------------------------------------------------
# distances


def _step_heights(eigs: np.ndarray, p: int):
    """Distinct jump locations with CDF values just after and just before."""
    vals, counts = np.unique(eigs, return_counts=True)
    after = np.cumsum(counts) / p
    before = after - counts / p
    return vals, after, before


def _ks_to_mp(law: MPLaw, sample: SpectralSample) -> float:
    vals, after, before = _step_heights(sample.eigs, sample.p)
    fmp = law.cdf_batch(vals)
    # Against the sample's left limits the law must be taken one-sided too;
    # its only jump is the possible atom at zero.
    fmp_left = fmp - np.where(vals == 0.0, law.mass0, 0.0)
    d = max(np.max(np.abs(fmp - after)), np.max(np.abs(fmp_left - before)))
    # The jump scan is already exact for the continuous part; the quantile
    # grid additionally ties the law's cdf and quantile routes together.
    qs = law.quantiles(MP_GRID_POINTS)
    fq = law.cdf_batch(qs)
    fn = np.searchsorted(sample.eigs, qs, side="right") / sample.p
    return float(max(d, np.max(np.abs(fq - fn))))


def ks_distance(a, b: SpectralSample) -> float:
    """Sup distance between two ESDs, or between an MP law and an ESD.

    Both step functions only change at their pooled jump points, so the
    supremum is attained there; evaluation is exact, ties included.
    """
    if isinstance(a, MPLaw):
        return _ks_to_mp(a, b)
    if isinstance(b, MPLaw):
        return _ks_to_mp(b, a)
    pts = np.concatenate([a.eigs, b.eigs])
    fa = np.searchsorted(a.eigs, pts, side="right") / a.p
    fb = np.searchsorted(b.eigs, pts, side="right") / b.p
    return float(np.max(np.abs(fa - fb)))


@dataclass(frozen=True, eq=False)
class StieltjesGrid:
    """Resolvent traces of two samples on a grid, with pointwise gaps."""

    points: tuple[UpperHalfPoint, ...]
    values_y: np.ndarray
    values_z: np.ndarray
    gap: np.ndarray


def _as_point(z) -> UpperHalfPoint:
    if isinstance(z, UpperHalfPoint):
        return z
    zc = require_upper_half(z)
    return UpperHalfPoint(zc.real, zc.imag)


def stieltjes_gap(sample_y, sample_z, grid) -> StieltjesGrid:
    if sample_y.p != sample_z.p:
        raise DimensionMismatch(f"p mismatch: {sample_y.p} vs {sample_z.p}")
    pts = tuple(_as_point(z) for z in grid)
    vy = np.array([resolvent_stieltjes(sample_y.eigs, pt.z) for pt in pts])
    vz = np.array([resolvent_stieltjes(sample_z.eigs, pt.z) for pt in pts])
    return StieltjesGrid(points=pts, values_y=vy, values_z=vz, gap=np.abs(vy - vz))


def default_z_grid(y: float) -> tuple[UpperHalfPoint, ...]:
    """Ten points covering the bulk and the upper edge of the y-ratio law."""
    _, b, _ = mp_support(y)
    return tuple(
        UpperHalfPoint(u, v)
        for u in (0.0, 0.5, 1.0, 2.0, b + 1.0)
        for v in (0.2, 1.0)
    )


# --------------------------------------------------------------------------
# ladder experiments


@dataclass(frozen=True)
class GapRung:
    p: int
    n: int
    replicas: int
    mean_ks: float
    se_ks: float
    mean_gap: float
    se_gap: float
    ks_values: tuple[float, ...]
    gap_values: tuple[float, ...]


@dataclass(frozen=True)
class KSRung:
    p: int
    n: int
    replicas: int
    mean_ks: float
    se_ks: float
    ks_values: tuple[float, ...]


def _mean_se(values) -> tuple[float, float]:
    arr = np.asarray(values, dtype=np.float64)
    mean = float(arr.mean())
    se = float(arr.std(ddof=1) / math.sqrt(arr.size)) if arr.size > 1 else 0.0
    return mean, se


def _checked_ladder(sizes) -> list[tuple[int, int]]:
    sizes = [(int(p), int(n)) for p, n in sizes]
    if not sizes:
        raise InvalidLadder("ladder is empty")
    if any(p < 1 or n < 1 for p, n in sizes):
        raise InvalidLadder(f"ladder sizes must be positive: {sizes}")
    p0, n0 = sizes[0]
    for (pa, _), (pb, _) in zip(sizes, sizes[1:]):
        if pb <= pa:
            raise InvalidLadder(f"p must increase along the ladder, got {pa} then {pb}")
    for p, n in sizes[1:]:
        if p * n0 != p0 * n:
            raise InvalidLadder(f"aspect ratio drifts: {p}/{n} vs {p0}/{n0}")
    return sizes


@dataclass(frozen=True)
class UniversalityReport:
    """Per-rung companion comparison along a ladder of sizes."""

    rungs: tuple[GapRung, ...]
    base: EnsembleConfig
    z_grid: tuple[UpperHalfPoint, ...]

    @property
    def gap_trend_ok(self) -> bool:
        return self.rungs[-1].mean_gap < self.rungs[0].mean_gap

    @property
    def ks_trend_ok(self) -> bool:
        return self.rungs[-1].mean_ks < self.rungs[0].mean_ks

    def to_json(self) -> dict:
        return {
            "kind": "universality",
            "config": self.base.to_json(),
            "config_hash": self.base.config_hash(),
            "seed": self.base.seed,
            "z_grid": [[pt.re, pt.im] for pt in self.z_grid],
            "rungs": [
                {
                    "p": r.p,
                    "n": r.n,
                    "replicas": r.replicas,
                    "mean_ks": r.mean_ks,
                    "se_ks": r.se_ks,
                    "mean_gap": r.mean_gap,
                    "se_gap": r.se_gap,
                    "ks_values": list(r.ks_values),
                    "gap_values": list(r.gap_values),
                }
                for r in self.rungs
            ],
            "gap_trend_ok": self.gap_trend_ok,
            "ks_trend_ok": self.ks_trend_ok,
        }


@dataclass(frozen=True)
class MPConvergenceReport:
    """Per-rung KS distance to the fixed-ratio limit law along a ladder."""

    rungs: tuple[KSRung, ...]
    base: EnsembleConfig
    y: float

    @property
    def ks_trend_ok(self) -> bool:
        return self.rungs[-1].mean_ks < self.rungs[0].mean_ks

    @property
    def ks_strictly_decreasing(self) -> bool:
        return all(b.mean_ks < a.mean_ks for a, b in zip(self.rungs, self.rungs[1:]))

    def to_json(self) -> dict:
        return {
            "kind": "mp_convergence",
            "config": self.base.to_json(),
            "config_hash": self.base.config_hash(),
            "seed": self.base.seed,
            "y": self.y,
            "rungs": [
                {
                    "p": r.p,
                    "n": r.n,
                    "replicas": r.replicas,
                    "mean_ks": r.mean_ks,
                    "se_ks": r.se_ks,
                    "ks_values": list(r.ks_values),
                }
                for r in self.rungs
            ],
            "ks_trend_ok": self.ks_trend_ok,
            "ks_strictly_decreasing": self.ks_strictly_decreasing,
        }


def _companion_stats(config, grid, replica) -> tuple[float, float]:
    sample = sample_matrix(config, replica)
    h = config.config_hash()
    sy = sample_cov_spectrum(sample.Y, seed=config.seed, config_hash=h)
    sz = sample_cov_spectrum(sample.Z, seed=config.seed, config_hash=h)
    ks = ks_distance(sy, sz)
    gap = float(np.max(stieltjes_gap(sy, sz, grid).gap))
    return ks, gap


def universality_experiment(
    config: EnsembleConfig, sizes, replicas: int = 5, z_grid=None
) -> UniversalityReport:
    """Companion comparison over a ladder of (p, n) at fixed aspect ratio."""
    sizes = _checked_ladder(sizes)
    if replicas < 3:
        raise InvalidParameter(f"need at least 3 replicas, got {replicas}")
    if z_grid is None:
        p0, n0 = sizes[0]
        z_grid = default_z_grid(p0 / n0)
    grid = tuple(_as_point(z) for z in z_grid)
    rungs = []
    for p, n in sizes:
        rcfg = config.with_size(p, n)
        stats = ordered_map(partial(_companion_stats, rcfg, grid), range(replicas))
        ks_vals = tuple(s[0] for s in stats)
        gap_vals = tuple(s[1] for s in stats)
        mean_ks, se_ks = _mean_se(ks_vals)
        mean_gap, se_gap = _mean_se(gap_vals)
        rungs.append(
            GapRung(p, n, replicas, mean_ks, se_ks, mean_gap, se_gap, ks_vals, gap_vals)
        )
    return UniversalityReport(rungs=tuple(rungs), base=config, z_grid=grid)


def _mp_ks(config, law, replica) -> float:
    sample = sample_matrix(config, replica)
    sy = sample_cov_spectrum(
        sample.Y, seed=config.seed, config_hash=config.config_hash()
    )
    return ks_distance(law, sy)


def mp_convergence_experiment(
    config: EnsembleConfig, sizes, replicas: int = 5
) -> MPConvergenceReport:
    """KS distance to the fixed-ratio limit law over a ladder of sizes.

    The reference is the identity-covariance limit for y = p/n; feeding a
    non-identity ensemble through this is a deliberate mismatch, not an
    error.
    """
    sizes = _checked_ladder(sizes)
    if replicas < 3:
        raise InvalidParameter(f"need at least 3 replicas, got {replicas}")
    y = sizes[0][0] / sizes[0][1]
    law = MPLaw.from_ratio(y)
    rungs = []
    for p, n in sizes:
        rcfg = config.with_size(p, n)
        ks_vals = tuple(ordered_map(partial(_mp_ks, rcfg, law), range(replicas)))
        mean_ks, se_ks = _mean_se(ks_vals)
        rungs.append(KSRung(p, n, replicas, mean_ks, se_ks, ks_vals))
    return MPConvergenceReport(rungs=tuple(rungs), base=config, y=y)
