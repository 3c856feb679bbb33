"""Monte Carlo verification of quadratic-form concentration bounds.

The bounds fall into two groups.  Those with explicit constants (the
Gaussian-companion tail bound and the second-moment bound for
zero-diagonal quadratic forms) are checked as strict inequalities with a
slack of three standard errors on the Monte Carlo side.  Bounds whose
constants are unspecified universal C's are checked by boundedness of the
empirical ratio across sizes instead: the top-size ratio must stay within
twice the bottom-size ratio.

The module also houses the exceedance table for the quadratic-form law of
large numbers, Lindeberg-condition values, and per-rung diagnostics for
the moment and coupling conditions the spectral limit theorems assume.
"""

import json
import math
from dataclasses import dataclass, field, replace

import numpy as np
from scipy import stats

from .ensembles import (
    CovarianceModel,
    EnsembleConfig,
    EntryLaw,
    IIDColumns,
    LinearProcessColumns,
    MDSColumns,
    NonnegativeLaw,
    mds_conditional_redraws,
    sample_matrix,
)
from .errors import (
    DimensionMismatch,
    InvalidLadder,
    InvalidParameter,
    InvalidTestMatrix,
)
from .linalg import SymMatrix, principal_sqrt, spectral_norm
from .rng import aux_stream

# aux-stream tags; each consumer of auxiliary randomness gets its own branch
_TAG_GAUSS = 2
_TAG_GAUSS_SETUP = 3
_TAG_MDS = 4
_TAG_MDS_SETUP = 5
_TAG_MOMENT = 6
_TAG_LLN = 7
_TAG_DIAG = 8

# a sequence counts as vanished when it never leaves this band
_ZERO_BAND = 1e-12


def wilson_interval(successes: int, trials: int, confidence: float = 0.95):
    """Wilson score interval for a binomial proportion."""
    if trials < 1:
        raise InvalidParameter(f"need at least one trial, got {trials}")
    if not 0 <= successes <= trials:
        raise InvalidParameter(f"successes {successes} outside [0, {trials}]")
    if not 0.0 < confidence < 1.0:
        raise InvalidParameter(f"confidence must be in (0, 1), got {confidence}")
    z = float(stats.norm.ppf((1.0 + confidence) / 2.0))
    phat = successes / trials
    denom = 1.0 + z * z / trials
    center = (phat + z * z / (2.0 * trials)) / denom
    half = z * math.sqrt(phat * (1.0 - phat) / trials + z * z / (4.0 * trials * trials)) / denom
    return max(0.0, center - half), min(1.0, center + half)


# --------------------------------------------------------------------------
# residual statistic


@dataclass(frozen=True)
class QuadFormSample:
    """One observed value of the normalized quadratic-form residual."""

    residual: float
    p: int
    matrix_id: str

    def __post_init__(self):
        if not math.isfinite(self.residual):
            raise InvalidParameter(f"residual must be finite, got {self.residual}")
        if self.p < 1:
            raise InvalidParameter(f"need p >= 1, got {self.p}")

    def to_json(self):
        return {"residual": self.residual, "p": self.p, "matrix_id": self.matrix_id}


def quad_form_residual(y, a, sigma) -> float:
    """(y'Ay - tr(Sigma A)) / p, computed by direct dense arithmetic."""
    yv = np.asarray(y, dtype=np.float64)
    av = np.asarray(a, dtype=np.float64)
    sv = np.asarray(sigma, dtype=np.float64)
    if yv.ndim != 1 or av.shape != (yv.size, yv.size):
        raise DimensionMismatch(
            f"vector of length {yv.size} needs a matching square matrix, got {av.shape}"
        )
    if sv.shape != av.shape:
        raise DimensionMismatch(f"covariance shape {sv.shape} does not match {av.shape}")
    p = yv.size
    return float((yv @ (av @ yv) - np.sum(sv * av.T)) / p)


# --------------------------------------------------------------------------
# test-matrix families


@dataclass(frozen=True)
class TestMatrixFamily:
    """Generators of symmetric PSD test matrices with a shared norm cap.

    The full matrix class the theory quantifies over is not enumerable;
    this battery is an explicit under-approximation spanning identity,
    low-rank, banded, diagonal, and rotated-diagonal shapes.
    """

    kind: str
    norm_bound: float = 1.0
    rank: int | None = None
    width: int | None = None

    # not a test case, despite the name pytest sees
    __test__ = False

    _KINDS = ("identity", "random_projection", "banded", "diagonal_bounded", "rotated_diagonal")

    def __post_init__(self):
        if self.kind not in self._KINDS:
            raise InvalidParameter(f"unknown test-matrix kind {self.kind!r}")
        if not (math.isfinite(self.norm_bound) and self.norm_bound > 0.0):
            raise InvalidParameter(f"norm bound must be positive, got {self.norm_bound}")
        if self.kind == "random_projection" and (self.rank is None or self.rank < 1):
            raise InvalidParameter(f"projection rank must be >= 1, got {self.rank}")
        if self.kind == "banded" and (self.width is None or self.width < 1):
            raise InvalidParameter(f"band width must be >= 1, got {self.width}")

    @classmethod
    def identity(cls, norm_bound: float = 1.0) -> "TestMatrixFamily":
        return cls("identity", norm_bound)

    @classmethod
    def random_projection(cls, rank: int, norm_bound: float = 1.0) -> "TestMatrixFamily":
        return cls("random_projection", norm_bound, rank=rank)

    @classmethod
    def banded(cls, width: int, norm_bound: float = 1.0) -> "TestMatrixFamily":
        return cls("banded", norm_bound, width=width)

    @classmethod
    def diagonal_bounded(cls, norm_bound: float = 1.0) -> "TestMatrixFamily":
        return cls("diagonal_bounded", norm_bound)

    @classmethod
    def rotated_diagonal(cls, norm_bound: float = 1.0) -> "TestMatrixFamily":
        return cls("rotated_diagonal", norm_bound)

    def generate(self, p: int, rng: np.random.Generator) -> np.ndarray:
        if p < 1:
            raise InvalidParameter(f"need p >= 1, got {p}")
        m = self.norm_bound
        if self.kind == "identity":
            return m * np.eye(p)
        if self.kind == "random_projection":
            if self.rank > p:
                raise InvalidParameter(f"projection rank {self.rank} exceeds dimension {p}")
            q, _ = np.linalg.qr(rng.standard_normal((p, self.rank)))
            a = m * (q @ q.T)
            return (a + a.T) / 2
        if self.kind == "banded":
            g = rng.uniform(-1.0, 1.0, size=(p, p))
            a = (g + g.T) / 2
            i, j = np.indices(a.shape)
            a[np.abs(i - j) >= self.width] = 0.0
            low = float(np.linalg.eigvalsh(a)[0])
            if low < 0.0:
                a = a - low * np.eye(p)
            s = spectral_norm(a)
            return a * (m / s) if s > 0.0 else a
        if self.kind == "diagonal_bounded":
            return np.diag(rng.uniform(0.0, m, size=p))
        q, _ = np.linalg.qr(rng.standard_normal((p, p)))
        a = (q * rng.uniform(0.0, m, size=p)) @ q.T
        return (a + a.T) / 2

    def to_json(self):
        doc = {"kind": self.kind, "norm_bound": self.norm_bound}
        if self.rank is not None:
            doc["rank"] = self.rank
        if self.width is not None:
            doc["width"] = self.width
        return doc

    @classmethod
    def from_json(cls, doc) -> "TestMatrixFamily":
        return cls(doc["kind"], doc["norm_bound"], rank=doc.get("rank"), width=doc.get("width"))


# --------------------------------------------------------------------------
# report plumbing


@dataclass(frozen=True)
class BoundCheckReport:
    theorem: str
    lhs: float
    stderr: float
    rhs: float
    replicas: int
    meta: dict = field(default_factory=dict)

    @property
    def slack(self) -> float:
        return self.rhs + 3.0 * self.stderr - self.lhs

    @property
    def passed(self) -> bool:
        return self.slack >= 0.0

    def to_json(self):
        return {
            "theorem": self.theorem,
            "lhs": self.lhs,
            "stderr": self.stderr,
            "rhs": self.rhs,
            "slack": self.slack,
            "passed": self.passed,
            "replicas": self.replicas,
            "meta": self.meta,
        }


def reports_jsonl(reports) -> str:
    """One report per line, for streaming consumption."""
    lines = [json.dumps(r.to_json(), sort_keys=True) for r in reports]
    return "\n".join(lines) + ("\n" if lines else "")


@dataclass(frozen=True)
class TruncationLevel:
    b: float

    def __post_init__(self):
        if not (math.isfinite(self.b) and self.b > 1.0):
            raise InvalidParameter(f"truncation level needs b > 1, got {self.b}")


@dataclass(frozen=True)
class MomentEstimate:
    """A moment value: closed form where the law admits one, else MC."""

    value: float
    stderr: float
    exact: bool

    def to_json(self):
        return {"value": self.value, "stderr": self.stderr, "exact": self.exact}


def _symmetric_array(a, allow_complex=False) -> np.ndarray:
    arr = np.asarray(a)
    if np.iscomplexobj(arr):
        if not allow_complex:
            raise InvalidTestMatrix("test matrix must be real here")
        arr = arr.astype(np.complex128)
    else:
        arr = arr.astype(np.float64)
    if arr.ndim != 2 or arr.shape[0] != arr.shape[1]:
        raise InvalidTestMatrix(f"test matrix must be square, got shape {arr.shape}")
    if not np.allclose(arr, arr.T, rtol=1e-12, atol=1e-12):
        raise InvalidTestMatrix("test matrix must equal its (plain) transpose")
    return arr


# --------------------------------------------------------------------------
# Gaussian-companion tail bound


def gaussian_tail_bound_check(
    model: CovarianceModel,
    a,
    eps: float,
    p: int,
    *,
    replicas: int = 10_000,
    seed: int = 0,
    index: int = 0,
) -> BoundCheckReport:
    """Check P(|z'Az - tr(Sigma A)| > eps p) against its explicit bound.

    z is a Gaussian column with the model's covariance, A may be complex
    with symmetric real and imaginary parts, and the right side is
    E min{16 M^2 tr(Sigma^2) / (eps p)^2, 1} with M the spectral norm of A.
    For a random covariance the right side is averaged over the same draws
    that produced the left side.
    """
    if eps <= 0.0:
        raise InvalidParameter(f"eps must be positive, got {eps}")
    if p < 1 or replicas < 1:
        raise InvalidParameter(f"need p >= 1 and replicas >= 1, got p={p}, replicas={replicas}")
    arr = _symmetric_array(a, allow_complex=True)
    if arr.shape[0] != p:
        raise DimensionMismatch(f"test matrix is {arr.shape[0]}x{arr.shape[0]}, expected {p}")
    m_norm = float(spectral_norm(arr))
    rng = aux_stream(seed, _TAG_GAUSS, index)
    scale_sq = (eps * p) ** 2

    if model.kind == "identity":
        w = rng.standard_normal((p, replicas))
        z = w
        tr_sig_a = np.trace(arr)
        rhs = min(16.0 * m_norm**2 * p / scale_sq, 1.0)
    elif model.kind == "fixed_spd":
        sig = SymMatrix(model.matrix)
        if sig.dim != p:
            raise DimensionMismatch(f"covariance is {sig.dim}x{sig.dim}, expected {p}")
        root = principal_sqrt(sig).a
        w = rng.standard_normal((p, replicas))
        z = root @ w
        tr_sig_a = np.sum(sig.a * arr.T)
        rhs = min(16.0 * m_norm**2 * float(np.sum(sig.a * sig.a)) / scale_sq, 1.0)
    elif model.kind == "scalar_random":
        xi = model.law.sample(rng, replicas)
        w = rng.standard_normal((p, replicas))
        z = np.sqrt(xi)[None, :] * w
        tr_sig_a = xi * np.trace(arr)
        rhs = float(np.mean(np.minimum(16.0 * m_norm**2 * p * xi**2 / scale_sq, 1.0)))
    elif model.kind == "random_diagonal":
        d = model.law.sample(rng, (replicas, p))
        w = rng.standard_normal((p, replicas))
        z = np.sqrt(d).T * w
        tr_sig_a = d @ np.diag(arr)
        rhs = float(np.mean(np.minimum(16.0 * m_norm**2 * (d * d).sum(axis=1) / scale_sq, 1.0)))
    else:
        raise InvalidParameter(f"unsupported covariance model kind {model.kind!r}")

    quad = np.einsum("pr,pr->r", z, arr @ z)
    exceed = np.abs(quad - tr_sig_a) > eps * p
    k = int(np.count_nonzero(exceed))
    lhs = k / replicas
    stderr = math.sqrt(lhs * (1.0 - lhs) / replicas)
    low, high = wilson_interval(k, replicas)
    return BoundCheckReport(
        theorem="gaussian_companion_tail",
        lhs=lhs,
        stderr=stderr,
        rhs=rhs,
        replicas=replicas,
        meta={
            "p": p,
            "eps": eps,
            "model": model.kind,
            "matrix_norm": m_norm,
            "complex_matrix": bool(np.iscomplexobj(arr)),
            "wilson_low": low,
            "wilson_high": high,
        },
    )


def gaussian_tail_battery(count: int = 50, *, seed: int = 2026, replicas: int = 10_000):
    """A fixed battery of (covariance, matrix, eps, p) instances.

    The underlying inequality is exact, so every instance is expected to
    pass at the 3-sigma slack; the battery is deterministic given the seed.
    """
    if count < 1:
        raise InvalidParameter(f"need count >= 1, got {count}")
    reports = []
    for i in range(count):
        inst = aux_stream(seed, _TAG_GAUSS_SETUP, i)
        p = int(inst.choice([25, 50, 75, 100]))
        eps = float(inst.uniform(0.4, 1.5))
        pick = i % 5
        if pick == 0:
            model = CovarianceModel.identity()
        elif pick == 1:
            model = CovarianceModel.scalar_random(NonnegativeLaw.sqrt_exponential())
        elif pick == 2:
            model = CovarianceModel.scalar_random(NonnegativeLaw.uniform(0.25, 4.0))
        elif pick == 3:
            model = CovarianceModel.random_diagonal(NonnegativeLaw.uniform(0.0, 2.0))
        else:
            model = CovarianceModel.random_diagonal(NonnegativeLaw.chi_squared(2.0))
        fam = TestMatrixFamily.rotated_diagonal(norm_bound=1.0)
        mpick = i % 3
        if mpick == 0:
            a = fam.generate(p, inst)
        elif mpick == 1:
            a = (fam.generate(p, inst) + 1j * fam.generate(p, inst)) / math.sqrt(2.0)
        else:
            a = 0.8 * np.eye(p)
        rep = gaussian_tail_bound_check(
            model, a, eps, p, replicas=replicas, seed=seed, index=i
        )
        rep.meta["instance"] = i
        reports.append(rep)
    return reports


# --------------------------------------------------------------------------
# second-moment bound for zero-diagonal quadratic forms


def mds_quadform_bound_check(
    law: EntryLaw,
    a,
    *,
    m_bound: float = 1.0,
    replicas: int = 10_000,
    seed: int = 0,
    index: int = 0,
) -> BoundCheckReport:
    """Check E|X'AX|^2 <= 2 M^2 tr(AA') for zero-diagonal symmetric A.

    The i.i.d. entry laws shipped here are martingale differences with
    conditional second moment exactly 1, so m_bound defaults to 1.  For
    unit-variance entries the bound holds with equality, which is what
    makes it worth checking at 3-sigma slack rather than by eye.
    """
    arr = _symmetric_array(a)
    if np.any(np.diag(arr) != 0.0):
        raise InvalidTestMatrix("second-moment bound needs an exactly zero diagonal")
    if replicas < 1:
        raise InvalidParameter(f"need replicas >= 1, got {replicas}")
    p = arr.shape[0]
    rng = aux_stream(seed, _TAG_MDS, index)
    x = law.sample(rng, (p, replicas))
    quad = np.einsum("pr,pr->r", x, arr @ x)
    vals = quad * quad
    lhs = float(np.mean(vals))
    stderr = float(np.std(vals, ddof=1) / math.sqrt(replicas)) if replicas > 1 else 0.0
    rhs = 2.0 * m_bound**2 * float(np.sum(arr * arr))
    return BoundCheckReport(
        theorem="mds_quadform_second_moment",
        lhs=lhs,
        stderr=stderr,
        rhs=rhs,
        replicas=replicas,
        meta={"p": p, "m_bound": m_bound, "law": law.kind},
    )


def mds_quadform_battery(count: int = 50, *, seed: int = 2026, replicas: int = 10_000):
    """Fixed Rademacher battery for the zero-diagonal second-moment bound."""
    if count < 1:
        raise InvalidParameter(f"need count >= 1, got {count}")
    law = EntryLaw.rademacher()
    reports = []
    for i in range(count):
        inst = aux_stream(seed, _TAG_MDS_SETUP, i)
        p = int(inst.choice([20, 40, 60]))
        g = inst.uniform(-1.0, 1.0, size=(p, p))
        a = (g + g.T) / 2
        np.fill_diagonal(a, 0.0)
        rep = mds_quadform_bound_check(law, a, replicas=replicas, seed=seed, index=i)
        rep.meta["instance"] = i
        reports.append(rep)
    return reports


# --------------------------------------------------------------------------
# ratio estimators for bounds with unspecified constants


def vector_quartic_ratio(law: EntryLaw, a, *, replicas: int = 100_000, seed: int = 0) -> float:
    """E|X'a|^4 / ||a||^4 by Monte Carlo."""
    av = np.asarray(a, dtype=np.float64)
    norm_sq = float(av @ av)
    if av.ndim != 1 or norm_sq == 0.0:
        raise InvalidParameter("need a nonzero vector")
    x = law.sample(aux_stream(seed, _TAG_MOMENT, 0), (av.size, replicas))
    v = av @ x
    return float(np.mean(v**4)) / norm_sq**2


def centered_quadform_ratio(law: EntryLaw, a, *, replicas: int = 10_000, seed: int = 0) -> float:
    """E|X'AX - tr(A)|^2 / tr(AA') for unit-variance i.i.d. entries."""
    arr = _symmetric_array(a)
    denom = float(np.sum(arr * arr))
    if denom == 0.0:
        raise InvalidTestMatrix("test matrix must be nonzero")
    x = law.sample(aux_stream(seed, _TAG_MOMENT, 0), (arr.shape[0], replicas))
    dev = np.sum(x * (arr @ x) - np.diag(arr)[:, None], axis=0)
    return float(np.mean(dev * dev)) / denom


def _increasing_sizes(sizes):
    sizes = [int(s) for s in sizes]
    if not sizes:
        raise InvalidLadder("need at least one size")
    if any(s < 2 for s in sizes):
        raise InvalidLadder(f"sizes must be >= 2, got {sizes}")
    if any(b <= a for a, b in zip(sizes, sizes[1:])):
        raise InvalidLadder(f"sizes must be strictly increasing, got {sizes}")
    return sizes


@dataclass(frozen=True)
class ScalingRow:
    p: int
    ratios: dict


@dataclass(frozen=True)
class MomentScalingReport:
    rows: tuple
    statistic_passed: dict
    replicas: int

    @property
    def passed(self) -> bool:
        return all(self.statistic_passed.values())

    def to_json(self):
        return {
            "kind": "moment_scaling",
            "replicas": self.replicas,
            "rows": [{"p": r.p, "ratios": r.ratios} for r in self.rows],
            "statistic_passed": self.statistic_passed,
            "passed": self.passed,
        }


def quadform_moment_scaling_check(
    law: EntryLaw, sizes, *, replicas: int = 4000, seed: int = 0
) -> MomentScalingReport:
    """Ratio-boundedness check for the fourth-moment quadratic-form bounds.

    The bounds carry unspecified universal constants, so the check is that
    each empirical ratio at the top size stays within twice its bottom-size
    value rather than under any assumed constant.
    """
    law.fourth_moment()  # rejects laws outside the finite-fourth-moment scope
    sizes = _increasing_sizes(sizes)
    if replicas < 2:
        raise InvalidParameter(f"need replicas >= 2, got {replicas}")
    rows = []
    for si, p in enumerate(sizes):
        mrng = aux_stream(seed, _TAG_MOMENT, 1, si)
        a_vec = np.ones(p) / math.sqrt(p)
        g = mrng.uniform(-1.0, 1.0, size=(p, p))
        a_off = (g + g.T) / 2
        np.fill_diagonal(a_off, 0.0)
        a_off /= spectral_norm(a_off)
        a_gen = TestMatrixFamily.rotated_diagonal(1.0).generate(p, mrng)

        x = law.sample(aux_stream(seed, _TAG_MOMENT, 2, si), (p, replicas))
        v = a_vec @ x
        r_vec = float(np.mean(v**4)) / float(a_vec @ a_vec) ** 2
        q_off = np.einsum("pr,pr->r", x, a_off @ x)
        r_off = float(np.mean(q_off * q_off)) / float(np.sum(a_off * a_off))
        dev = np.sum(x * (a_gen @ x) - np.diag(a_gen)[:, None], axis=0)
        r_cen = float(np.mean(dev * dev)) / float(np.sum(a_gen * a_gen))
        rows.append(
            ScalingRow(
                p=p,
                ratios={
                    "vector_quartic": r_vec,
                    "offdiag_quadform": r_off,
                    "centered_quadform": r_cen,
                },
            )
        )
    passed = {
        name: rows[-1].ratios[name] <= 2.0 * rows[0].ratios[name] + 1e-9
        for name in rows[0].ratios
    }
    return MomentScalingReport(rows=tuple(rows), statistic_passed=passed, replicas=replicas)


# --------------------------------------------------------------------------
# truncation bound


def truncated_tail_term(
    law: EntryLaw, b, *, replicas: int = 200_000, seed: int = 0
) -> MomentEstimate:
    """E |X^2 - 1| on the event |X^2 - 1| > b^2, per coordinate."""
    lvl = b if isinstance(b, TruncationLevel) else TruncationLevel(float(b))
    bb = lvl.b * lvl.b
    if law.kind == "rademacher":
        return MomentEstimate(value=0.0, stderr=0.0, exact=True)
    if law.kind == "standard_normal":
        # X^2 - 1 < -b^2 is impossible for b > 1, and integrating the upper
        # tail of (x^2 - 1) against the normal density collapses to 2 t phi(t)
        t = math.sqrt(1.0 + bb)
        value = 2.0 * t * math.exp(-t * t / 2.0) / math.sqrt(2.0 * math.pi)
        return MomentEstimate(value=value, stderr=0.0, exact=True)
    if law.kind == "two_point_heavy":
        heavy = 1.0 / law.q - 1.0
        value = (1.0 - law.q) if heavy > bb else 0.0
        return MomentEstimate(value=value, stderr=0.0, exact=True)
    x = law.sample(aux_stream(seed, _TAG_MOMENT, 3), replicas)
    w = np.abs(x * x - 1.0)
    vals = np.where(w > bb, w, 0.0)
    return MomentEstimate(
        value=float(np.mean(vals)),
        stderr=float(np.std(vals, ddof=1) / math.sqrt(replicas)),
        exact=False,
    )


@dataclass(frozen=True)
class TruncationRow:
    p: int
    lhs: float
    stderr: float
    rhs: float
    ratio: float


@dataclass(frozen=True)
class TruncationReport:
    rows: tuple
    fitted_constant: float
    b: float
    replicas: int

    @property
    def passed(self) -> bool:
        return self.rows[-1].ratio <= 2.0 * self.rows[0].ratio + 1e-9

    def to_json(self):
        return {
            "kind": "truncation_scaling",
            "b": self.b,
            "replicas": self.replicas,
            "fitted_constant": self.fitted_constant,
            "rows": [
                {"p": r.p, "lhs": r.lhs, "stderr": r.stderr, "rhs": r.rhs, "ratio": r.ratio}
                for r in self.rows
            ],
            "passed": self.passed,
        }


def truncation_bound_check(
    law: EntryLaw,
    b,
    sizes,
    *,
    replicas: int = 4000,
    seed: int = 0,
    matrices=None,
) -> TruncationReport:
    """Scaling check of E|X'AX - tr(A)| against b sqrt(tr(AA')) plus the
    truncated-tail correction carried by the diagonal of A.

    The bound's constant is unspecified, so the first size fits it and the
    later sizes must stay within a factor of two of that fit.
    """
    lvl = b if isinstance(b, TruncationLevel) else TruncationLevel(float(b))
    sizes = _increasing_sizes(sizes)
    if matrices is not None and len(matrices) != len(sizes):
        raise InvalidParameter("matrices must align with sizes")
    tail = truncated_tail_term(law, lvl, replicas=100_000, seed=seed)
    rows = []
    for si, p in enumerate(sizes):
        if matrices is not None:
            arr = _symmetric_array(matrices[si])
            if arr.shape[0] != p:
                raise DimensionMismatch(f"matrix {si} is {arr.shape[0]}x{arr.shape[0]}, expected {p}")
        else:
            arr = TestMatrixFamily.rotated_diagonal(1.0).generate(
                p, aux_stream(seed, _TAG_MOMENT, 4, si)
            )
        x = law.sample(aux_stream(seed, _TAG_MOMENT, 5, si), (p, replicas))
        dev = np.abs(np.sum(x * (arr @ x) - np.diag(arr)[:, None], axis=0))
        lhs = float(np.mean(dev))
        stderr = float(np.std(dev, ddof=1) / math.sqrt(replicas)) if replicas > 1 else 0.0
        rhs = lvl.b * math.sqrt(float(np.sum(arr * arr))) + float(
            np.sum(np.abs(np.diag(arr)))
        ) * tail.value
        if rhs == 0.0:
            ratio = 0.0 if lhs == 0.0 else math.inf
        else:
            ratio = lhs / rhs
        rows.append(TruncationRow(p=p, lhs=lhs, stderr=stderr, rhs=rhs, ratio=ratio))
    return TruncationReport(
        rows=tuple(rows), fitted_constant=rows[0].ratio, b=lvl.b, replicas=replicas
    )


# --------------------------------------------------------------------------
# Lindeberg condition


def lindeberg_check(
    law: EntryLaw, eps: float, p: int, *, replicas: int = 200_000, seed: int = 0
) -> MomentEstimate:
    """(1/p) sum_k E X_k^2 1(|X_k| > eps sqrt(p)) for i.i.d. coordinates.

    Identical coordinates collapse the average to a single tail moment.
    """
    if eps <= 0.0:
        raise InvalidParameter(f"eps must be positive, got {eps}")
    if p < 1:
        raise InvalidParameter(f"need p >= 1, got {p}")
    t = eps * math.sqrt(p)
    if law.kind == "rademacher":
        return MomentEstimate(value=1.0 if t < 1.0 else 0.0, stderr=0.0, exact=True)
    if law.kind == "standard_normal":
        phi = math.exp(-t * t / 2.0) / math.sqrt(2.0 * math.pi)
        tail = math.erfc(t / math.sqrt(2.0)) / 2.0
        return MomentEstimate(value=2.0 * (t * phi + tail), stderr=0.0, exact=True)
    if law.kind == "two_point_heavy":
        return MomentEstimate(
            value=1.0 if 1.0 / math.sqrt(law.q) > t else 0.0, stderr=0.0, exact=True
        )
    x = law.sample(aux_stream(seed, _TAG_MOMENT, 6), replicas)
    vals = np.where(np.abs(x) > t, x * x, 0.0)
    return MomentEstimate(
        value=float(np.mean(vals)),
        stderr=float(np.std(vals, ddof=1) / math.sqrt(replicas)),
        exact=False,
    )


# --------------------------------------------------------------------------
# exceedance table for the quadratic-form law of large numbers


@dataclass(frozen=True)
class LLNRow:
    p: int
    eps: float
    matrix_id: str
    exceedances: int
    replicas: int
    frequency: float
    wilson_low: float
    wilson_high: float
    worst: QuadFormSample

    def to_json(self):
        return {
            "p": self.p,
            "eps": self.eps,
            "matrix_id": self.matrix_id,
            "exceedances": self.exceedances,
            "replicas": self.replicas,
            "frequency": self.frequency,
            "wilson_low": self.wilson_low,
            "wilson_high": self.wilson_high,
            "worst": self.worst.to_json(),
        }


@dataclass(frozen=True)
class LLNTrend:
    eps: float
    matrix_id: str
    frequencies: tuple
    monotone: bool
    flagged: bool

    def to_json(self):
        return {
            "eps": self.eps,
            "matrix_id": self.matrix_id,
            "frequencies": list(self.frequencies),
            "monotone": self.monotone,
            "flagged": self.flagged,
        }


@dataclass(frozen=True)
class LLNReport:
    rows: tuple
    trends: tuple
    config: EnsembleConfig
    family: TestMatrixFamily
    replicas: int

    def row(self, p: int, eps: float) -> LLNRow:
        for r in self.rows:
            if r.p == p and r.eps == eps:
                return r
        raise InvalidParameter(f"no row for p={p}, eps={eps}")

    def trend(self, eps: float) -> LLNTrend:
        for t in self.trends:
            if t.eps == eps:
                return t
        raise InvalidParameter(f"no trend for eps={eps}")

    def to_json(self):
        return {
            "kind": "quadform_lln",
            "config": self.config.to_json(),
            "family": self.family.to_json(),
            "replicas": self.replicas,
            "rows": [r.to_json() for r in self.rows],
            "trends": [t.to_json() for t in self.trends],
        }


# covariance kinds whose draws make sense at every ladder size
_SCALABLE_COVS = ("identity", "scalar_random", "random_diagonal")


def quadform_lln_diagnostic(
    config: EnsembleConfig,
    family: TestMatrixFamily,
    eps_values,
    p_ladder,
    *,
    replicas: int = 1000,
    law_schedule=None,
) -> LLNReport:
    """Empirical exceedance table for P(|y'Ay - tr(Sigma A)| > eps p).

    A trend is flagged when the frequencies fail to decrease down the
    ladder, or when the top-size Wilson lower bound stays above 0.05, i.e.
    the exceedance is provably bounded away from zero at the resolution of
    the run.  law_schedule, if given, replaces the entry law at each size
    (used for stress laws whose tails grow with p).
    """
    if replicas < 100:
        raise InvalidParameter(f"need replicas >= 100, got {replicas}")
    eps_values = [float(e) for e in eps_values]
    if not eps_values or any(e <= 0.0 for e in eps_values):
        raise InvalidParameter(f"eps values must be positive, got {eps_values}")
    ladder = _increasing_sizes(p_ladder)
    cm = config.column_model
    if not isinstance(cm, IIDColumns):
        raise InvalidParameter("the exceedance table needs i.i.d. columns")
    if cm.covariance.kind not in _SCALABLE_COVS:
        raise InvalidParameter(
            f"covariance kind {cm.covariance.kind!r} does not scale across ladder sizes"
        )

    rows = []
    for ri, p in enumerate(ladder):
        law = law_schedule(p) if law_schedule is not None else cm.law
        mat = family.generate(p, aux_stream(config.seed, _TAG_LLN, ri, 0))
        rng = aux_stream(config.seed, _TAG_LLN, ri, 1)
        cov = cm.covariance
        if cov.kind == "identity":
            y = law.sample(rng, (p, replicas))
            tr_sig_a = float(np.trace(mat))
        elif cov.kind == "scalar_random":
            xi = cov.law.sample(rng, replicas)
            y = np.sqrt(xi)[None, :] * law.sample(rng, (p, replicas))
            tr_sig_a = xi * float(np.trace(mat))
        else:
            d = cov.law.sample(rng, (replicas, p))
            y = np.sqrt(d).T * law.sample(rng, (p, replicas))
            tr_sig_a = d @ np.diag(mat)
        quad = np.einsum("pr,pr->r", y, mat @ y)
        resid = (quad - tr_sig_a) / p
        worst = QuadFormSample(
            residual=float(resid[np.argmax(np.abs(resid))]), p=p, matrix_id=family.kind
        )
        for eps in eps_values:
            k = int(np.count_nonzero(np.abs(resid) > eps))
            low, high = wilson_interval(k, replicas)
            rows.append(
                LLNRow(
                    p=p,
                    eps=eps,
                    matrix_id=family.kind,
                    exceedances=k,
                    replicas=replicas,
                    frequency=k / replicas,
                    wilson_low=low,
                    wilson_high=high,
                    worst=worst,
                )
            )

    trends = []
    for eps in eps_values:
        per_eps = [r for r in rows if r.eps == eps]
        freqs = tuple(r.frequency for r in per_eps)
        monotone = all(b <= a for a, b in zip(freqs, freqs[1:]))
        vanishing = freqs[-1] < freqs[0] or freqs[0] == 0.0
        flagged = (not (monotone and vanishing)) or per_eps[-1].wilson_low > 0.05
        trends.append(
            LLNTrend(
                eps=eps,
                matrix_id=family.kind,
                frequencies=freqs,
                monotone=monotone,
                flagged=flagged,
            )
        )
    return LLNReport(
        rows=tuple(rows),
        trends=tuple(trends),
        config=config,
        family=family,
        replicas=replicas,
    )


# --------------------------------------------------------------------------
# assumption diagnostics


@dataclass(frozen=True)
class AssumptionRung:
    p: int
    n: int
    values: dict

    def to_json(self):
        return {"p": self.p, "n": self.n, "values": self.values}


@dataclass(frozen=True)
class AssumptionReport:
    rungs: tuple
    trends: dict
    flagged: list
    config: EnsembleConfig
    replicas: int
    redraws: int
    eps: float

    def to_json(self):
        return {
            "kind": "assumption_diagnostics",
            "config": self.config.to_json(),
            "replicas": self.replicas,
            "redraws": self.redraws,
            "eps": self.eps,
            "rungs": [r.to_json() for r in self.rungs],
            "trends": self.trends,
            "flagged": self.flagged,
        }


_DIAGNOSTIC_NAMES = (
    "trace_sq_ratio",
    "trace_exceedance",
    "adapted_coupling_sum",
    "marginal_coupling_sum",
    "conditional_norm_peak",
    "population_product",
)


def _column_moment_estimates(cfg, sample, l, k, redraws, rng):
    """Norms and traces of E[Sigma_l | F_k] and E[y_l y_l' | F_k]."""
    diags, cols = mds_conditional_redraws(cfg, sample, k=k, l=l, count=redraws, rng=rng)
    mean_diag = diags.mean(axis=0)
    outer = cols.T @ cols / redraws
    return (
        float(mean_diag.max()),
        spectral_norm(outer),
        float(mean_diag.sum()),
        float(np.sum(cols * cols)) / redraws,
    )


def _mds_coupling_stats(cfg, sample, redraws, rng):
    p, n = cfg.p, cfg.n
    m = cfg.column_model.m
    y = sample.Y

    # unconditional per-column estimates feed the marginal sum
    sig_norm = np.empty(n)
    yy_norm = np.empty(n)
    sig_tr = np.empty(n)
    yy_tr = np.empty(n)
    for l in range(n):
        sig_norm[l], yy_norm[l], sig_tr[l], yy_tr[l] = _column_moment_estimates(
            cfg, sample, l, l - m, redraws, rng
        )
    marginal = 0.0
    for k in range(n):
        for l in range(n):
            if m <= abs(k - l) < 2 * m:
                marginal += (sig_norm[l] + yy_norm[l]) * (yy_tr[k] + sig_tr[k])
    marginal /= n**3

    # one-step conditional estimates: the peak statistic and the adapted sum
    peak = 0.0
    for l in range(n):
        s_norm, o_norm, _, _ = _column_moment_estimates(cfg, sample, l, l - 1, redraws, rng)
        peak = max(peak, s_norm + o_norm)
    peak *= m / n

    adapted = 0.0
    for k in range(n - 1):
        weight = float(y[:, k] @ y[:, k]) + sample.sigma_draws[k].trace()
        for l in range(k + 1, min(k + m, n)):
            s_norm, o_norm, _, _ = _column_moment_estimates(cfg, sample, l, k, redraws, rng)
            adapted += (s_norm + o_norm) * weight
    adapted /= n**3

    return adapted, marginal, peak


def _population_product(cfg, redraws, rng) -> float:
    cm = cfg.column_model
    p = cfg.p
    cov = cm.covariance
    if cov.kind == "identity":
        y = cm.law.sample(rng, (p, redraws))
        sig_norm, sig_tr = 1.0, float(p)
    elif cov.kind == "scalar_random":
        xi = cov.law.sample(rng, redraws)
        y = np.sqrt(xi)[None, :] * cm.law.sample(rng, (p, redraws))
        sig_norm, sig_tr = float(np.mean(xi)), float(np.mean(xi) * p)
    elif cov.kind == "random_diagonal":
        d = cov.law.sample(rng, (redraws, p))
        y = np.sqrt(d).T * cm.law.sample(rng, (p, redraws))
        mean_d = d.mean(axis=0)
        sig_norm, sig_tr = float(mean_d.max()), float(mean_d.sum())
    else:
        sig = SymMatrix(cov.matrix)
        y = principal_sqrt(sig).a @ cm.law.sample(rng, (p, redraws))
        sig_norm, sig_tr = float(spectral_norm(sig.a)), float(np.trace(sig.a))
    outer = y @ y.T / redraws
    return (spectral_norm(outer) + sig_norm) * (float(np.trace(outer)) + sig_tr) / p**2


def _series_trend(series) -> str:
    if all(abs(v) <= _ZERO_BAND for v in series):
        return "flat_zero"
    if series[-1] < series[0]:
        return "decreasing"
    return "non_decreasing"


def assumption_diagnostics(
    config: EnsembleConfig,
    sizes,
    *,
    replicas: int = 3,
    redraws: int = 256,
    eps: float = 0.5,
    covariance_schedule=None,
) -> AssumptionReport:
    """Per-rung estimates of the moment and coupling conditions.

    trace_sq_ratio and trace_exceedance use the realized per-column
    covariance draws.  The coupling sums and the conditional-norm peak
    apply to m-dependent column models and estimate conditional
    expectations by redrawing the un-pinned innovations `redraws` times
    per conditioning point; this is an estimator, not an exact value.
    population_product applies to the i.i.d.-column models instead.  Each
    series gets a trend label, and names whose normalized statistic fails
    to decrease are flagged.
    """
    sizes = list(sizes)
    if not sizes:
        raise InvalidLadder("need at least one (p, n) size")
    ps = [int(p) for p, _ in sizes]
    if any(b <= a for a, b in zip(ps, ps[1:])):
        raise InvalidLadder(f"sizes must have strictly increasing p, got {ps}")
    if replicas < 1 or redraws < 8:
        raise InvalidParameter(
            f"need replicas >= 1 and redraws >= 8, got {replicas}, {redraws}"
        )
    if eps <= 0.0:
        raise InvalidParameter(f"eps must be positive, got {eps}")
    cm = config.column_model
    is_mds = isinstance(cm, MDSColumns)
    if covariance_schedule is not None and is_mds:
        raise InvalidParameter("covariance schedules apply to the i.i.d.-column models")

    rungs = []
    for si, (p, n) in enumerate(sizes):
        cfg = config.with_size(int(p), int(n))
        if covariance_schedule is not None:
            cfg = replace(cfg, column_model=replace(cm, covariance=covariance_schedule(int(p))))
        t2_vals = []
        exceed = 0
        total = 0
        adapted_acc, marginal_acc, peak_acc = 0.0, 0.0, 0.0
        for r in range(replicas):
            sample = sample_matrix(cfg, replica=r)
            for draw in sample.sigma_draws:
                t2 = draw.trace_sq()
                t2_vals.append(t2 / p**2)
                exceed += t2 > eps * p**2
                total += 1
            if is_mds:
                rng = aux_stream(config.seed, _TAG_DIAG, si, r)
                a, mg, pk = _mds_coupling_stats(cfg, sample, redraws, rng)
                adapted_acc += a
                marginal_acc += mg
                peak_acc += pk
        values = {
            "trace_sq_ratio": float(np.mean(t2_vals)),
            "trace_exceedance": exceed / total,
            "adapted_coupling_sum": adapted_acc / replicas if is_mds else None,
            "marginal_coupling_sum": marginal_acc / replicas if is_mds else None,
            "conditional_norm_peak": peak_acc / replicas if is_mds else None,
            "population_product": (
                None
                if is_mds
                else _population_product(cfg, redraws, aux_stream(config.seed, _TAG_DIAG, si, 0))
            ),
        }
        rungs.append(AssumptionRung(p=int(p), n=int(n), values=values))

    trends = {}
    flagged = []
    for name in _DIAGNOSTIC_NAMES:
        series = [r.values[name] for r in rungs]
        if any(v is None for v in series):
            continue
        trends[name] = _series_trend(series)
        if trends[name] == "non_decreasing":
            flagged.append(name)
    return AssumptionReport(
        rungs=tuple(rungs),
        trends=trends,
        flagged=flagged,
        config=config,
        replicas=replicas,
        redraws=redraws,
        eps=eps,
    )
