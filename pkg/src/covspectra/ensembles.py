"""Random-matrix ensembles with coupled Gaussian companions.

A sample is a pair (Y, Z) of p-by-n matrices.  Column k of Y comes from the
configured column model; column k of Z is the Gaussian companion built from
the SAME per-column covariance draw, which is the coupling every downstream
comparison leans on.  All randomness flows through the keyed streams in
:mod:`covspectra.rng`, one stream per column, so samples are reproducible
bit for bit and a column never depends on n or on evaluation order.

Column models:

* i.i.d. columns: y = root(Sigma) x with x filled by an entry law and Sigma
  drawn per column from a covariance model (deterministic models share one
  draw object across columns).
* m-dependent columns: y_k = a_k * eps_k where the diagonal modulation a_k
  is a function of the previous m-1 innovation vectors.  The shipped rule
  ("lagged_energy") takes, per coordinate, clip(sqrt(0.5 + 0.5 * mean of
  squares over the window), 0.1, 10); an empty window gives a_k = 1, so
  m = 1 reproduces the i.i.d. identity ensemble exactly.
* linear process: an i.i.d. sample pushed through a banded lower-triangular
  filter, Y -> Y L^T, applied to Y and Z alike.
"""

from __future__ import annotations

import hashlib
import json
import math
from dataclasses import dataclass, replace
from functools import lru_cache
from importlib import resources
from typing import Any, Union

import numpy as np
import jsonschema
from jsonschema.exceptions import best_match

from .errors import (
    DimensionMismatch,
    InfiniteFourthMoment,
    InvalidParameter,
    NotPSD,
    SpecValidationError,
)
from .linalg import SymMatrix, principal_sqrt, spectral_norm, sym_eigenvalues
from .rng import column_stream, warmup_stream

SCALE_FLOOR = 0.1
SCALE_CAP = 10.0


# --------------------------------------------------------------------------
# entry laws


@dataclass(frozen=True)
class EntryLaw:
    """Centered unit-variance law filling raw matrix entries."""

    kind: str
    nu: float | None = None
    q: float | None = None

    @classmethod
    def rademacher(cls) -> "EntryLaw":
        return cls("rademacher")

    @classmethod
    def standard_normal(cls) -> "EntryLaw":
        return cls("standard_normal")

    @classmethod
    def student_t(cls, nu: float) -> "EntryLaw":
        """t(nu) rescaled by sqrt(nu/(nu-2)); needs nu > 2 for a variance."""
        if not nu > 2.0:
            raise InvalidParameter(f"student_t needs nu > 2, got {nu}")
        return cls("student_t", nu=float(nu))

    @classmethod
    def two_point_heavy(cls, q: float) -> "EntryLaw":
        """+-1/sqrt(q) with probability q/2 each, else 0."""
        if not 0.0 < q <= 1.0:
            raise InvalidParameter(f"two_point_heavy needs q in (0, 1], got {q}")
        return cls("two_point_heavy", q=float(q))

    def sample(self, rng: np.random.Generator, size) -> np.ndarray:
        if self.kind == "rademacher":
            return rng.integers(0, 2, size=size).astype(np.float64) * 2.0 - 1.0
        if self.kind == "standard_normal":
            return rng.standard_normal(size)
        if self.kind == "student_t":
            scale = math.sqrt(self.nu / (self.nu - 2.0))
            return rng.standard_t(self.nu, size=size) / scale
        u = rng.random(size)
        signs = rng.integers(0, 2, size=size).astype(np.float64) * 2.0 - 1.0
        return np.where(u < self.q, signs / math.sqrt(self.q), 0.0)

    def fourth_moment(self) -> float:
        """E X^4 of the standardized law; raises when it does not exist."""
        if self.kind == "rademacher":
            return 1.0
        if self.kind == "standard_normal":
            return 3.0
        if self.kind == "student_t":
            if self.nu <= 4.0:
                raise InfiniteFourthMoment(
                    f"student_t fourth moment needs nu > 4, got nu={self.nu}"
                )
            return 3.0 * (self.nu - 2.0) / (self.nu - 4.0)
        return 1.0 / self.q

    def to_json(self) -> dict[str, Any]:
        doc: dict[str, Any] = {"kind": self.kind}
        if self.nu is not None:
            doc["nu"] = self.nu
        if self.q is not None:
            doc["q"] = self.q
        return doc

    @classmethod
    def from_json(cls, doc: dict[str, Any]) -> "EntryLaw":
        kind = doc["kind"]
        if kind == "student_t":
            return cls.student_t(doc["nu"])
        if kind == "two_point_heavy":
            return cls.two_point_heavy(doc["q"])
        return cls(kind)


@dataclass(frozen=True)
class NonnegativeLaw:
    """Law on [0, inf) used for scalar and diagonal covariance draws."""

    kind: str
    value: float | None = None
    lo: float | None = None
    hi: float | None = None
    df: float | None = None

    @classmethod
    def constant(cls, value: float) -> "NonnegativeLaw":
        if not value >= 0.0:
            raise InvalidParameter(f"constant law needs value >= 0, got {value}")
        return cls("constant", value=float(value))

    @classmethod
    def uniform(cls, lo: float, hi: float) -> "NonnegativeLaw":
        if not 0.0 <= lo <= hi:
            raise InvalidParameter(f"uniform law needs 0 <= lo <= hi, got [{lo}, {hi}]")
        return cls("uniform", lo=float(lo), hi=float(hi))

    @classmethod
    def chi_squared(cls, df: float) -> "NonnegativeLaw":
        if not df > 0.0:
            raise InvalidParameter(f"chi_squared law needs df > 0, got {df}")
        return cls("chi_squared", df=float(df))

    @classmethod
    def sqrt_exponential(cls) -> "NonnegativeLaw":
        """sqrt of a standard exponential, so the square is Exp(1)."""
        return cls("sqrt_exponential")

    def sample(self, rng: np.random.Generator, size) -> np.ndarray:
        if self.kind == "constant":
            return np.full(size, self.value)
        if self.kind == "uniform":
            return rng.uniform(self.lo, self.hi, size)
        if self.kind == "chi_squared":
            return rng.chisquare(self.df, size)
        return np.sqrt(rng.exponential(1.0, size))

    def sample_scalar(self, rng: np.random.Generator) -> float:
        if self.kind == "constant":
            return self.value
        if self.kind == "uniform":
            return float(rng.uniform(self.lo, self.hi))
        if self.kind == "chi_squared":
            return float(rng.chisquare(self.df))
        return math.sqrt(rng.exponential(1.0))

    def to_json(self) -> dict[str, Any]:
        doc: dict[str, Any] = {"kind": self.kind}
        for name in ("value", "lo", "hi", "df"):
            v = getattr(self, name)
            if v is not None:
                doc[name] = v
        return doc

    @classmethod
    def from_json(cls, doc: dict[str, Any]) -> "NonnegativeLaw":
        kind = doc["kind"]
        if kind == "constant":
            return cls.constant(doc["value"])
        if kind == "uniform":
            return cls.uniform(doc["lo"], doc["hi"])
        if kind == "chi_squared":
            return cls.chi_squared(doc["df"])
        return cls.sqrt_exponential()


# --------------------------------------------------------------------------
# covariance models and per-column draws


@dataclass(frozen=True)
class CovarianceModel:
    kind: str
    matrix: tuple | None = None
    law: NonnegativeLaw | None = None

    @classmethod
    def identity(cls) -> "CovarianceModel":
        return cls("identity")

    @classmethod
    def fixed_spd(cls, matrix) -> "CovarianceModel":
        sym = SymMatrix(np.asarray(matrix, dtype=np.float64))
        eigs = sym_eigenvalues(sym)
        if eigs[0] < -1e-10 * max(1.0, abs(eigs[-1])):
            raise NotPSD(f"fixed covariance has eigenvalue {eigs[0]}")
        rows = tuple(tuple(float(v) for v in row) for row in sym.a)
        return cls("fixed_spd", matrix=rows)

    @classmethod
    def scalar_random(cls, law: NonnegativeLaw) -> "CovarianceModel":
        return cls("scalar_random", law=law)

    @classmethod
    def random_diagonal(cls, law: NonnegativeLaw) -> "CovarianceModel":
        return cls("random_diagonal", law=law)

    @property
    def is_random(self) -> bool:
        return self.kind in ("scalar_random", "random_diagonal")

    def to_json(self) -> dict[str, Any]:
        if self.kind == "fixed_spd":
            return {"kind": self.kind, "matrix": [list(r) for r in self.matrix]}
        if self.law is not None:
            return {"kind": self.kind, "law": self.law.to_json()}
        return {"kind": self.kind}

    @classmethod
    def from_json(cls, doc: dict[str, Any]) -> "CovarianceModel":
        kind = doc["kind"]
        if kind == "identity":
            return cls.identity()
        if kind == "fixed_spd":
            return cls.fixed_spd(doc["matrix"])
        law = NonnegativeLaw.from_json(doc["law"])
        return cls(kind, law=law)


@dataclass(frozen=True, eq=False)
class CovarianceDraw:
    """One realized per-column covariance, kept in compact form.

    ``apply_root`` multiplies a vector by the principal square root without
    ever materializing the matrix for the structured kinds, and the identity
    kind returns its input unchanged so that coupling stays bit-exact.
    """

    kind: str
    dim: int
    xi: float | None = None
    diag: np.ndarray | None = None
    root_diag: np.ndarray | None = None
    sym: SymMatrix | None = None
    root: np.ndarray | None = None

    @classmethod
    def identity_draw(cls, dim: int) -> "CovarianceDraw":
        return cls("identity", dim)

    @classmethod
    def scalar_draw(cls, dim: int, xi: float) -> "CovarianceDraw":
        return cls("scalar", dim, xi=float(xi))

    @classmethod
    def diagonal_draw(cls, dim, diag, root_diag=None) -> "CovarianceDraw":
        diag = np.asarray(diag, dtype=np.float64)
        if root_diag is None:
            root_diag = np.sqrt(diag)
        return cls("diagonal", dim, diag=diag, root_diag=root_diag)

    @classmethod
    def dense_draw(cls, sym: SymMatrix) -> "CovarianceDraw":
        return cls("dense", sym.dim, sym=sym, root=principal_sqrt(sym).a)

    def apply_root(self, x: np.ndarray) -> np.ndarray:
        if self.kind == "identity":
            return x
        if self.kind == "scalar":
            return math.sqrt(self.xi) * x
        if self.kind == "diagonal":
            return self.root_diag * x
        return self.root @ x

    def matrix(self) -> np.ndarray:
        if self.kind == "identity":
            return np.eye(self.dim)
        if self.kind == "scalar":
            return self.xi * np.eye(self.dim)
        if self.kind == "diagonal":
            return np.diag(self.diag)
        return self.sym.a.copy()

    def trace(self) -> float:
        if self.kind == "identity":
            return float(self.dim)
        if self.kind == "scalar":
            return self.dim * self.xi
        if self.kind == "diagonal":
            return float(self.diag.sum())
        return float(np.trace(self.sym.a))

    def trace_sq(self) -> float:
        """Trace of the squared draw."""
        if self.kind == "identity":
            return float(self.dim)
        if self.kind == "scalar":
            return self.dim * self.xi**2
        if self.kind == "diagonal":
            return float((self.diag**2).sum())
        return float(np.sum(self.sym.a**2))

    def norm(self) -> float:
        if self.kind == "identity":
            return 1.0
        if self.kind == "scalar":
            return self.xi
        if self.kind == "diagonal":
            return float(self.diag.max())
        return spectral_norm(self.sym.a)


def _model_draw(model: CovarianceModel, p: int, rng) -> CovarianceDraw:
    if model.kind == "identity":
        return CovarianceDraw.identity_draw(p)
    if model.kind == "fixed_spd":
        if len(model.matrix) != p:
            raise DimensionMismatch(
                f"fixed covariance is {len(model.matrix)}x{len(model.matrix)}, need p={p}"
            )
        return CovarianceDraw.dense_draw(SymMatrix(np.array(model.matrix)))
    if model.kind == "scalar_random":
        return CovarianceDraw.scalar_draw(p, model.law.sample_scalar(rng))
    return CovarianceDraw.diagonal_draw(p, model.law.sample(rng, p))


def sample_covariance_realization(
    model: CovarianceModel, p: int, rng: np.random.Generator
) -> SymMatrix:
    """Draw one population covariance from the model as a dense SymMatrix."""
    if p < 1:
        raise InvalidParameter(f"p must be >= 1, got {p}")
    return SymMatrix(_model_draw(model, p, rng).matrix())


def gaussian_companion(sigma, rng: np.random.Generator) -> np.ndarray:
    """root(Sigma) w for a fresh standard normal w.

    Draws exactly p standard normals and nothing else, and returns the raw
    draw itself when Sigma is exactly the identity.
    """
    sym = sigma if isinstance(sigma, SymMatrix) else SymMatrix(np.asarray(sigma, dtype=np.float64))
    w = rng.standard_normal(sym.dim)
    if np.array_equal(sym.a, np.eye(sym.dim)):
        return w
    return principal_sqrt(sym).a @ w


# --------------------------------------------------------------------------
# banded filters


@dataclass(frozen=True, eq=False)
class BandedFilter:
    """Lower-triangular n-by-n filter with band width m.

    ``coeffs`` has shape (n, m); ``coeffs[k, d]`` is the weight on lag d,
    i.e. the matrix entry at (k, k-d).  Entries with d > k are zero.
    """

    coeffs: np.ndarray

    def __post_init__(self):
        c = self.coeffs
        if c.ndim != 2 or c.shape[0] < 1 or not 1 <= c.shape[1] <= c.shape[0]:
            raise InvalidParameter(f"filter coeffs shape {c.shape} is not (n, m<=n)")
        if not np.all(np.isfinite(c)):
            raise InvalidParameter("filter coefficients must be finite")
        for k in range(min(c.shape[1] - 1, c.shape[0])):
            if np.any(c[k, k + 1 :] != 0.0):
                raise InvalidParameter("filter refers to columns before the first")
        c.setflags(write=False)

    @property
    def n(self) -> int:
        return self.coeffs.shape[0]

    @property
    def m(self) -> int:
        return self.coeffs.shape[1]

    @property
    def bound(self) -> float:
        return float(np.max(np.abs(self.coeffs)))

    def coeff(self, k: int, j: int) -> float:
        """Matrix entry at row k, column j (zero outside the band)."""
        d = k - j
        if 0 <= d < self.m and 0 <= j <= k < self.n:
            return float(self.coeffs[k, d])
        return 0.0

    def dense(self) -> np.ndarray:
        a = np.zeros((self.n, self.n))
        for d in range(self.m):
            idx = np.arange(d, self.n)
            a[idx, idx - d] = self.coeffs[d:, d]
        return a

    @classmethod
    def identity(cls, n: int) -> "BandedFilter":
        return cls(np.ones((n, 1)))

    @classmethod
    def moving_sum(cls, n: int, m: int, weights=None) -> "BandedFilter":
        """Weight w_d on lag d for every row; default all ones."""
        if weights is None:
            weights = np.ones(m)
        weights = np.asarray(weights, dtype=np.float64)
        if weights.shape != (m,):
            raise InvalidParameter(f"need {m} weights, got shape {weights.shape}")
        coeffs = np.tile(weights, (n, 1))
        for k in range(min(m - 1, n)):
            coeffs[k, k + 1 :] = 0.0
        return cls(coeffs)

    @classmethod
    def random_uniform(cls, n: int, m: int, rng, bound: float = 1.0) -> "BandedFilter":
        coeffs = rng.uniform(-bound, bound, (n, m))
        for k in range(min(m - 1, n)):
            coeffs[k, k + 1 :] = 0.0
        return cls(coeffs)


def apply_banded_filter(y, filt: BandedFilter) -> np.ndarray:
    """Y L^T: column k of the result is sum_d coeffs[k, d] * column k-d of Y."""
    y = np.asarray(y, dtype=np.float64)
    if y.ndim != 2 or y.shape[1] != filt.n:
        raise DimensionMismatch(f"matrix has shape {y.shape}, filter needs n={filt.n}")
    out = np.zeros_like(y)
    for d in range(filt.m):
        out[:, d:] += filt.coeffs[d:, d] * y[:, : filt.n - d]
    return out


@dataclass(frozen=True)
class FilterSpec:
    """Size-free recipe for a BandedFilter, so one config serves a ladder."""

    kind: str
    m: int = 1
    weights: tuple[float, ...] | None = None
    coeffs: tuple[tuple[float, ...], ...] | None = None

    @classmethod
    def identity(cls) -> "FilterSpec":
        return cls("identity")

    @classmethod
    def moving_sum(cls, m: int, weights=None) -> "FilterSpec":
        if m < 1:
            raise InvalidParameter(f"moving_sum needs m >= 1, got {m}")
        if weights is not None:
            weights = tuple(float(w) for w in weights)
            if len(weights) != m:
                raise InvalidParameter(f"need {m} weights, got {len(weights)}")
        return cls("moving_sum", m=m, weights=weights)

    @classmethod
    def explicit(cls, coeffs) -> "FilterSpec":
        rows = tuple(tuple(float(v) for v in row) for row in coeffs)
        if not rows or any(len(r) != len(rows[0]) for r in rows):
            raise InvalidParameter("explicit filter coeffs must be rectangular")
        return cls("explicit", m=len(rows[0]), coeffs=rows)

    def build(self, n: int) -> BandedFilter:
        if self.kind == "identity":
            return BandedFilter.identity(n)
        if self.kind == "moving_sum":
            return BandedFilter.moving_sum(n, self.m, self.weights)
        if len(self.coeffs) != n:
            raise DimensionMismatch(
                f"explicit filter has {len(self.coeffs)} rows, need n={n}"
            )
        return BandedFilter(np.array(self.coeffs))

    def to_json(self) -> dict[str, Any]:
        if self.kind == "identity":
            return {"kind": "identity"}
        if self.kind == "moving_sum":
            doc: dict[str, Any] = {"kind": "moving_sum", "m": self.m}
            if self.weights is not None:
                doc["weights"] = list(self.weights)
            return doc
        return {"kind": "explicit", "coeffs": [list(r) for r in self.coeffs]}

    @classmethod
    def from_json(cls, doc: dict[str, Any]) -> "FilterSpec":
        kind = doc["kind"]
        if kind == "identity":
            return cls.identity()
        if kind == "moving_sum":
            return cls.moving_sum(doc["m"], doc.get("weights"))
        return cls.explicit(doc["coeffs"])


# --------------------------------------------------------------------------
# column models and configs


@dataclass(frozen=True)
class IIDColumns:
    law: EntryLaw
    covariance: CovarianceModel

    kind = "iid"


@dataclass(frozen=True)
class MDSColumns:
    """Martingale-difference columns, m-dependent through the scale rule."""

    law: EntryLaw
    m: int
    rule: str = "lagged_energy"

    kind = "mds"

    def __post_init__(self):
        if self.m < 1:
            raise InvalidParameter(f"mds window needs m >= 1, got {self.m}")
        if self.rule not in _SCALE_RULES:
            raise InvalidParameter(f"unknown modulation rule {self.rule!r}")


@dataclass(frozen=True)
class LinearProcessColumns:
    law: EntryLaw
    covariance: CovarianceModel
    filter_spec: FilterSpec

    kind = "linear_process"


ColumnModel = Union[IIDColumns, MDSColumns, LinearProcessColumns]


@dataclass(frozen=True)
class EnsembleConfig:
    p: int
    n: int
    seed: int
    column_model: ColumnModel

    def __post_init__(self):
        if self.p < 1 or self.n < 1:
            raise InvalidParameter(f"need p, n >= 1, got p={self.p}, n={self.n}")
        if not 0 <= self.seed < 2**63:
            raise InvalidParameter(f"seed must be in [0, 2**63), got {self.seed}")

    def with_size(self, p: int, n: int) -> "EnsembleConfig":
        return replace(self, p=p, n=n)

    def to_json(self) -> dict[str, Any]:
        cm = self.column_model
        if isinstance(cm, IIDColumns):
            model = {
                "kind": "iid",
                "law": cm.law.to_json(),
                "covariance": cm.covariance.to_json(),
            }
        elif isinstance(cm, MDSColumns):
            model = {"kind": "mds", "law": cm.law.to_json(), "m": cm.m, "rule": cm.rule}
        else:
            model = {
                "kind": "linear_process",
                "law": cm.law.to_json(),
                "covariance": cm.covariance.to_json(),
                "filter": cm.filter_spec.to_json(),
            }
        return {"p": self.p, "n": self.n, "seed": self.seed, "column_model": model}

    @classmethod
    def from_json(cls, doc: dict[str, Any]) -> "EnsembleConfig":
        validate_ensemble_config(doc)
        m = doc["column_model"]
        if m["kind"] == "iid":
            cm: ColumnModel = IIDColumns(
                law=EntryLaw.from_json(m["law"]),
                covariance=CovarianceModel.from_json(m["covariance"]),
            )
        elif m["kind"] == "mds":
            cm = MDSColumns(
                law=EntryLaw.from_json(m["law"]),
                m=m["m"],
                rule=m.get("rule", "lagged_energy"),
            )
        else:
            cm = LinearProcessColumns(
                law=EntryLaw.from_json(m["law"]),
                covariance=CovarianceModel.from_json(m["covariance"]),
                filter_spec=FilterSpec.from_json(m["filter"]),
            )
        return cls(p=doc["p"], n=doc["n"], seed=doc["seed"], column_model=cm)

    def config_hash(self) -> str:
        blob = json.dumps(self.to_json(), sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(blob.encode()).hexdigest()


@lru_cache(maxsize=None)
def _schema(name: str) -> Any:
    text = resources.files("covspectra").joinpath("schemas", name).read_text()
    schema = json.loads(text)
    jsonschema.Draft202012Validator.check_schema(schema)
    return jsonschema.Draft202012Validator(schema)


def validate_ensemble_config(doc: Any) -> None:
    """Schema-check a raw config document; unknown fields are rejected."""
    err = best_match(_schema("ensemble_config.schema.json").iter_errors(doc))
    if err is not None:
        where = "/".join(str(part) for part in err.absolute_path) or "<root>"
        raise SpecValidationError(f"ensemble config invalid at {where}: {err.message}")


# --------------------------------------------------------------------------
# generation


@dataclass(eq=False)
class MatrixSample:
    """One (Y, Z) realization plus the covariance draws that coupled them."""

    Y: np.ndarray
    Z: np.ndarray
    sigma_draws: list[CovarianceDraw]
    config: EnsembleConfig
    replica: int
    innovations: np.ndarray | None = None
    inner: "MatrixSample | None" = None


def lagged_energy_scales(window: np.ndarray) -> np.ndarray:
    """Per-coordinate modulation from a (p, m-1) window of past innovations."""
    window = np.asarray(window, dtype=np.float64)
    p, width = window.shape
    if width == 0:
        return np.ones(p)
    msq = np.mean(window * window, axis=1)
    return np.clip(np.sqrt(0.5 + 0.5 * msq), SCALE_FLOOR, SCALE_CAP)


_SCALE_RULES = {"lagged_energy": lagged_energy_scales}


def _sample_iid(config: EnsembleConfig, replica: int) -> MatrixSample:
    p, n = config.p, config.n
    model = config.column_model
    y = np.empty((p, n))
    z = np.empty((p, n))
    shared = None
    if not model.covariance.is_random:
        shared = _model_draw(model.covariance, p, rng=None)
    draws = []
    for k in range(n):
        rng = column_stream(config.seed, replica, k)
        draw = shared if shared is not None else _model_draw(model.covariance, p, rng)
        x = model.law.sample(rng, p)
        w = rng.standard_normal(p)
        y[:, k] = draw.apply_root(x)
        z[:, k] = draw.apply_root(w)
        draws.append(draw)
    return MatrixSample(y, z, draws, config, replica)


def _sample_mds(config: EnsembleConfig, replica: int) -> MatrixSample:
    p, n = config.p, config.n
    model = config.column_model
    m = model.m
    rule = _SCALE_RULES[model.rule]
    innovations = np.empty((p, m - 1 + n))
    for i in range(m - 1):
        innovations[:, i] = model.law.sample(warmup_stream(config.seed, replica, i), p)
    y = np.empty((p, n))
    z = np.empty((p, n))
    draws = []
    for k in range(n):
        rng = column_stream(config.seed, replica, k)
        eps = model.law.sample(rng, p)
        w = rng.standard_normal(p)
        innovations[:, k + m - 1] = eps
        scales = rule(innovations[:, k : k + m - 1])
        y[:, k] = scales * eps
        z[:, k] = scales * w
        draws.append(CovarianceDraw.diagonal_draw(p, scales**2, root_diag=scales))
    return MatrixSample(y, z, draws, config, replica, innovations=innovations)


def sample_matrix(config: EnsembleConfig, replica: int = 0) -> MatrixSample:
    """Generate the coupled pair (Y, Z) for one replica of the config.

    Column k consumes only the stream keyed by (seed, replica, k), so the
    leading columns of a wider matrix coincide with a narrower one and
    replicas never share randomness.
    """
    cm = config.column_model
    if isinstance(cm, IIDColumns):
        return _sample_iid(config, replica)
    if isinstance(cm, MDSColumns):
        return _sample_mds(config, replica)
    inner_config = replace(
        config, column_model=IIDColumns(law=cm.law, covariance=cm.covariance)
    )
    inner = _sample_iid(inner_config, replica)
    filt = cm.filter_spec.build(config.n)
    return MatrixSample(
        apply_banded_filter(inner.Y, filt),
        apply_banded_filter(inner.Z, filt),
        inner.sigma_draws,
        config,
        replica,
        inner=inner,
    )


def mds_conditional_redraws(
    config: EnsembleConfig,
    sample: MatrixSample,
    k: int,
    l: int,
    count: int,
    rng: np.random.Generator,
) -> tuple[np.ndarray, np.ndarray]:
    """Redraw column l of an m-dependent sample, conditioning on columns <= k.

    Innovations with index <= k are pinned to the realized sample; the rest
    of the window and the innovation at l are drawn fresh each time.  Returns
    (diags, cols): the (count, p) covariance diagonals and redrawn columns.

    Negative k reaches into the warm-up innovations: k = -1 conditions on
    the warm-up only, and k <= l - m pins nothing (an unconditional redraw).
    """
    model = config.column_model
    if not isinstance(model, MDSColumns):
        raise InvalidParameter("conditional redraws need an mds column model")
    if sample.innovations is None:
        raise InvalidParameter("sample does not carry innovations")
    if not -model.m <= k < l < config.n:
        raise InvalidParameter(f"need -m <= k < l < n, got k={k}, l={l}")
    p, m = config.p, model.m
    rule = _SCALE_RULES[model.rule]
    offset = m - 1
    window_idx = list(range(l - m + 1, l))
    fixed = {
        pos: sample.innovations[:, j + offset]
        for pos, j in enumerate(window_idx)
        if j <= k
    }
    diags = np.empty((count, p))
    cols = np.empty((count, p))
    win = np.empty((p, m - 1))
    for r in range(count):
        for pos, j in enumerate(window_idx):
            win[:, pos] = fixed[pos] if j <= k else model.law.sample(rng, p)
        scales = rule(win)
        eps = model.law.sample(rng, p)
        diags[r] = scales**2
        cols[r] = scales * eps
    return diags, cols


# --------------------------------------------------------------------------
# mixing profile


def mixing_profile(
    law: EntryLaw | None = None,
    *,
    varphi=None,
    phi=None,
    phi0: float | None = None,
) -> tuple[float, float, float]:
    """(Phi0, Phi1, Phi2): fourth-moment bound and the two mixing sums.

    For an i.i.d. entry law both sums vanish and Phi0 is the fourth moment.
    Alternatively pass explicit sequences: ``varphi[i]`` is the coefficient
    at lag i+1 entering the linearly weighted sum Phi1, ``phi`` the sequence
    whose plain sum is Phi2, and ``phi0`` the fourth-moment bound.
    """
    if law is not None:
        if varphi is not None or phi is not None or phi0 is not None:
            raise InvalidParameter("pass either a law or explicit sequences, not both")
        return (law.fourth_moment(), 0.0, 0.0)
    if phi0 is None:
        raise InvalidParameter("explicit profile needs phi0")
    if not math.isfinite(phi0) or phi0 < 0:
        raise InfiniteFourthMoment(f"phi0 must be finite and >= 0, got {phi0}")
    for name, seq in (("varphi", varphi), ("phi", phi)):
        for v in seq or []:
            if not (math.isfinite(v) and v >= 0):
                raise InvalidParameter(f"{name} entries must be finite and >= 0")
    phi1 = float(sum((i + 1) * v for i, v in enumerate(varphi or [])))
    phi2 = float(sum(phi or []))
    return (float(phi0), phi1, phi2)
