"""Steady-state algebra for quadratic geopotentials.

A steady state is a symmetric positive definite matrix A.  Everything else is
derived from it: the induced steady velocity is u(x) = Sx with
S = A^{-1} J (A - I), the sign of the discriminant mu decides whether the flow
is hyperbolic (real spectrum {0, +lam, -lam}) or elliptic (imaginary pair),
and the antisymmetry defect of A^{-1}J decides whether the non-local
multiplier term vanishes identically.

All types are immutable after construction and all operations are pure, so
they can be shared freely between threads.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass
from functools import cached_property

import numpy as np

__all__ = [
    "J",
    "NonFiniteInput",
    "NotPositiveDefinite",
    "SpectrumKind",
    "FlowClass",
    "RegimeLabel",
    "SymPosDef3",
    "FlowMatrix",
    "SteadyState",
    "validate_spd",
    "mu_sg",
    "mu_eps",
    "multiplier_degenerate",
    "classify_sg",
    "flow_matrix",
    "matrix_exp",
    "unit_eigenvector",
]


def _frozen(a: np.ndarray) -> np.ndarray:
    a = np.ascontiguousarray(a, dtype=float)
    a.flags.writeable = False
    return a


#: Skew rotation generator: Jx rotates the horizontal components, kills the third.
J = _frozen(np.array([[0.0, -1.0, 0.0], [1.0, 0.0, 0.0], [0.0, 0.0, 0.0]]))


class NonFiniteInput(ValueError):
    """A coefficient is NaN or infinite."""


class NotPositiveDefinite(ValueError):
    """A leading principal minor is not strictly positive."""

    def __init__(self, minor_index: int, minor_value: float):
        self.minor_index = minor_index
        self.minor_value = minor_value
        super().__init__(
            f"leading principal minor {minor_index} is non-positive "
            f"({minor_value:.17g}); matrix is not positive definite"
        )


class SpectrumKind(enum.Enum):
    HYPERBOLIC = "hyperbolic"  # nonzero eigenvalues real, {+lam, -lam}
    ELLIPTIC = "elliptic"      # nonzero eigenvalues imaginary, {+i lam, -i lam}
    NULL = "null"              # lam^2 below threshold; spectrum {0, 0, 0}


class FlowClass(enum.Enum):
    HYPERBOLIC_PLUS = "hyperbolic"
    ELLIPTIC_MINUS = "elliptic"
    DEGENERATE = "degenerate"


@dataclass(frozen=True)
class RegimeLabel:
    """Flow-regime classification of one steady state under one model.

    ``mu`` is the raw discriminant so callers can re-threshold;
    ``degenerate_multiplier`` is True when the non-local symbol vanishes
    identically (the pseudo-differential term is the zero operator).
    """

    label: FlowClass
    mu: float
    degenerate_multiplier: bool


@dataclass(frozen=True)
class SymPosDef3:
    """Symmetric positive definite 3x3 matrix stored as six coefficients.

    Layout: [[a, b, c], [b, d, e], [c, e, f]].  Construction validates
    finiteness and strict positivity of the three leading principal minors.
    """

    a: float
    b: float
    c: float
    d: float
    e: float
    f: float

    def __post_init__(self) -> None:
        coeffs = (self.a, self.b, self.c, self.d, self.e, self.f)
        if not all(math.isfinite(v) for v in coeffs):
            raise NonFiniteInput(f"coefficients must be finite, got {coeffs}")
        for name, v in zip("abcdef", coeffs):
            object.__setattr__(self, name, float(v))
        minors = (self.a, self.minor2, self._det_cofactor())
        for idx, m in enumerate(minors, start=1):
            if not m > 0.0:
                raise NotPositiveDefinite(idx, m)

    @property
    def coefficients(self) -> tuple[float, float, float, float, float, float]:
        return (self.a, self.b, self.c, self.d, self.e, self.f)

    @property
    def minor2(self) -> float:
        return self.a * self.d - self.b * self.b

    def _det_cofactor(self) -> float:
        a, b, c, d, e, f = self.coefficients
        return a * d * f - a * e * e - b * b * f + 2.0 * b * c * e - c * c * d

    @cached_property
    def matrix(self) -> np.ndarray:
        a, b, c, d, e, f = self.coefficients
        return _frozen(np.array([[a, b, c], [b, d, e], [c, e, f]]))

    @cached_property
    def det(self) -> float:
        return self._det_cofactor()

    @cached_property
    def inv(self) -> np.ndarray:
        """Inverse by the 3x3 adjugate formula; exact closed form at this size."""
        a, b, c, d, e, f = self.coefficients
        adj = np.array(
            [
                [d * f - e * e, c * e - b * f, b * e - c * d],
                [c * e - b * f, a * f - c * c, b * c - a * e],
                [b * e - c * d, b * c - a * e, a * d - b * b],
            ]
        )
        return _frozen(adj / self.det)

    @classmethod
    def from_matrix(cls, m: np.ndarray, sym_tol: float = 1e-12) -> "SymPosDef3":
        m = np.asarray(m, dtype=float)
        if m.shape != (3, 3):
            raise ValueError(f"expected a 3x3 matrix, got shape {m.shape}")
        scale = max(1.0, float(np.abs(m).max()))
        if np.abs(m - m.T).max() > sym_tol * scale:
            raise ValueError("matrix is not symmetric within tolerance")
        return cls(m[0, 0], m[0, 1], m[0, 2], m[1, 1], m[1, 2], m[2, 2])

    def to_mapping(self) -> dict[str, float]:
        return dict(zip("abcdef", self.coefficients))

    @classmethod
    def from_mapping(cls, obj: dict) -> "SymPosDef3":
        try:
            vals = [float(obj[k]) for k in "abcdef"]
        except KeyError as exc:
            raise ValueError(f"matrix mapping is missing key {exc}") from exc
        extra = set(obj) - set("abcdef")
        if extra:
            raise ValueError(f"matrix mapping has unknown keys {sorted(extra)}")
        return cls(*vals)

    def to_csv_row(self) -> str:
        return ",".join(f"{v:.17g}" for v in self.coefficients)

    @classmethod
    def from_csv_row(cls, row: str) -> "SymPosDef3":
        parts = [p.strip() for p in row.split(",")]
        if len(parts) != 6:
            raise ValueError(f"expected 6 comma-separated coefficients, got {len(parts)}")
        return cls(*(float(p) for p in parts))


def validate_spd(a: float, b: float, c: float, d: float, e: float, f: float) -> SymPosDef3:
    """Validate six coefficients and return the steady-state matrix."""
    return SymPosDef3(a, b, c, d, e, f)


def mu_sg(A: SymPosDef3) -> float:
    """Discriminant whose sign separates hyperbolic from elliptic steady flows."""
    a, _, c, d, e, f = A.coefficients
    return a * f - c * c + d * f - e * e - f - A.det


def mu_eps(A: SymPosDef3) -> float:
    """Default degeneracy band for the sign classification of mu_sg."""
    a, _, _, d, _, f = A.coefficients
    return 1e-12 * max(1.0, abs(a * f), abs(d * f), A.det)


def multiplier_degenerate(A: SymPosDef3) -> bool:
    """True when the multiplier symbol vanishes identically.

    Algebraic criterion: the symmetric part of A^{-1}J is zero, which is the
    finite equivalent of x . A^{-1}J x = 0 for every x.
    """
    n = A.inv @ J
    tol = 1e-12 * max(1.0, float(np.abs(n).max()))
    return bool(np.abs(n + n.T).max() <= tol)


def classify_sg(A: SymPosDef3, eps: float | None = None) -> RegimeLabel:
    """Classify a steady state by the sign of mu_sg."""
    if eps is None:
        eps = mu_eps(A)
    if eps < 0.0:
        raise ValueError("eps must be non-negative")
    mu = mu_sg(A)
    if mu > eps:
        label = FlowClass.HYPERBOLIC_PLUS
    elif mu < -eps:
        label = FlowClass.ELLIPTIC_MINUS
    else:
        label = FlowClass.DEGENERATE
    return RegimeLabel(label, mu, multiplier_degenerate(A))


@dataclass(frozen=True)
class FlowMatrix:
    """Trace-free 3x3 flow matrix with spectrum {0, +lam, -lam}.

    ``lambda_sq`` is the signed square of the nonzero eigenvalue pair:
    positive means real eigenvalues +-sqrt(lambda_sq), negative means the
    imaginary pair +-i sqrt(-lambda_sq).
    """

    matrix: np.ndarray
    lambda_sq: float
    spectrum_kind: SpectrumKind

    def __post_init__(self) -> None:
        object.__setattr__(self, "matrix", _frozen(self.matrix))

    @property
    def lambda_abs(self) -> float:
        return math.sqrt(abs(self.lambda_sq))

    @property
    def period(self) -> float:
        """Orbit period 2*pi/lam of the elliptic frequency trajectories."""
        if self.spectrum_kind is not SpectrumKind.ELLIPTIC:
            raise ValueError("period is only defined for elliptic flows")
        return 2.0 * math.pi / self.lambda_abs

    @classmethod
    def for_tracefree(cls, w: np.ndarray, eps: float | None = None) -> "FlowMatrix":
        """Build from any trace-free matrix with spectrum {0, +lam, -lam}.

        lambda^2 is minus the second invariant (sum of principal 2x2 minors),
        which is exact for this spectral structure.
        """
        w = np.asarray(w, dtype=float)
        scale = max(1.0, float(np.abs(w).max()))
        if abs(np.trace(w)) > 1e-10 * scale:
            raise ValueError("flow matrix must be trace-free")
        m2 = (
            w[0, 0] * w[1, 1] - w[0, 1] * w[1, 0]
            + w[0, 0] * w[2, 2] - w[0, 2] * w[2, 0]
            + w[1, 1] * w[2, 2] - w[1, 2] * w[2, 1]
        )
        lam_sq = -m2
        if eps is None:
            eps = 1e-12 * scale * scale
        return cls(w, lam_sq, _spectrum_kind(lam_sq, eps))


def _spectrum_kind(lam_sq: float, eps: float) -> SpectrumKind:
    if lam_sq > eps:
        return SpectrumKind.HYPERBOLIC
    if lam_sq < -eps:
        return SpectrumKind.ELLIPTIC
    return SpectrumKind.NULL


def flow_matrix(A: SymPosDef3) -> FlowMatrix:
    """Flow matrix S = A^{-1} J (A - I) of the steady velocity u(x) = Sx."""
    s = A.inv @ J @ (A.matrix - np.eye(3))
    lam_sq = mu_sg(A) / A.det
    return FlowMatrix(s, lam_sq, _spectrum_kind(lam_sq, mu_eps(A) / A.det))


def _sinhc(x: np.ndarray) -> np.ndarray:
    """sinh(x)/x, equal to 1 at x = 0."""
    x = np.asarray(x, dtype=float)
    out = np.ones_like(x)
    nz = np.abs(x) > 1e-150
    out[nz] = np.sinh(x[nz]) / x[nz]
    return out


def _sincx(x: np.ndarray) -> np.ndarray:
    """sin(x)/x, equal to 1 at x = 0."""
    x = np.asarray(x, dtype=float)
    out = np.ones_like(x)
    nz = np.abs(x) > 1e-150
    out[nz] = np.sin(x[nz]) / x[nz]
    return out


def matrix_exp(flow: FlowMatrix, t) -> np.ndarray:
    """Exponential e^{tW} of a flow matrix, closed form, t scalar or array.

    The spectrum {0, +lam, -lam} closes the power series at degree two:
    e^{tW} = I + alpha(t) W + beta(t) W^2 with trig/hyperbolic coefficients.
    beta uses 2*sinh^2(x/2) (resp. sin) instead of cosh(x)-1 to avoid
    cancellation near lam*t = 0, so no series fallback is needed.
    """
    w = flow.matrix
    s = flow.lambda_sq
    t = np.asarray(t, dtype=float)
    if s > 0.0:
        x = math.sqrt(s) * t
        alpha = t * _sinhc(x)
        half = _sinhc(x / 2.0)
        beta = 0.5 * t * t * half * half
    elif s < 0.0:
        x = math.sqrt(-s) * t
        alpha = t * _sincx(x)
        half = _sincx(x / 2.0)
        beta = 0.5 * t * t * half * half
    else:
        alpha = t
        beta = 0.5 * t * t
    eye = np.eye(3)
    w2 = w @ w
    return (
        eye
        + np.asarray(alpha)[..., None, None] * w
        + np.asarray(beta)[..., None, None] * w2
    )


def unit_eigenvector(flow: FlowMatrix, sign: int, transpose: bool = True) -> np.ndarray:
    """Unit eigenvector of W^T (or W) for the eigenvalue sign*lam, lam > 0.

    Null direction of (W^T - sign*lam I) from the largest of the three
    pairwise row cross products; if the residual is not at round-off level,
    polish with shifted inverse iteration.
    """
    if flow.spectrum_kind is not SpectrumKind.HYPERBOLIC:
        raise ValueError("real eigenvectors exist only for hyperbolic flows")
    if sign not in (-1, 1):
        raise ValueError("sign must be +1 or -1")
    w = flow.matrix.T if transpose else flow.matrix
    lam = sign * flow.lambda_abs
    b = w - lam * np.eye(3)
    crosses = [np.cross(b[i], b[j]) for i, j in ((0, 1), (0, 2), (1, 2))]
    v = max(crosses, key=np.linalg.norm)
    nrm = np.linalg.norm(v)
    if nrm == 0.0:
        raise ValueError("eigenvector computation failed: rows are degenerate")
    v = v / nrm
    scale = float(np.abs(w).max())
    for _ in range(2):
        if np.linalg.norm(w @ v - lam * v) <= 1e-13 * scale:
            break
        shifted = w - lam * (1.0 + 1e-12) * np.eye(3)
        v = np.linalg.solve(shifted, v)
        v = v / np.linalg.norm(v)
    if v[np.argmax(np.abs(v))] < 0:
        v = -v
    return v


@dataclass(frozen=True)
class SteadyState:
    """A validated steady-state matrix together with its derived flow data."""

    matrix: SymPosDef3

    @cached_property
    def flow(self) -> FlowMatrix:
        return flow_matrix(self.matrix)

    @cached_property
    def regime(self) -> RegimeLabel:
        return classify_sg(self.matrix)

    def velocity(self, points: np.ndarray) -> np.ndarray:
        """Steady velocity u(x) = Sx, broadcasting over leading axes."""
        return np.asarray(points, dtype=float) @ self.flow.matrix.T

    def evaluator(self, quadrature=None):
        """Symbol evaluator for this steady state (cached for the default)."""
        if quadrature is None:
            return self._default_evaluator
        from .symbols import SymbolEvaluator

        return SymbolEvaluator.for_steady(self, quadrature)

    @cached_property
    def _default_evaluator(self):
        from .symbols import SymbolEvaluator

        return SymbolEvaluator.for_steady(self)
