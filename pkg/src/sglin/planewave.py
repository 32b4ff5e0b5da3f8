"""Plane-wave solutions and the stability classification they induce.

A plane wave a(t) k(t) e^{2 pi i k(t).x} stays a solution when the amplitude
follows a' = m(k) a and the frequency follows k' = -W^T k; in closed form
a(t) = a0 * growth_factor(t; k0) and k(t) = e^{-tW^T} k0.  Its sup norm is
|a(t)| |k(t)|, and whether that can grow without bound depends only on the
flow regime: hyperbolic flows admit an exponentially growing wave, elliptic
flows keep every wave uniformly bounded.
"""

from __future__ import annotations

import csv
import enum
import math
from dataclasses import dataclass

import numpy as np

from .geometry import FlowMatrix, SpectrumKind, matrix_exp, unit_eigenvector
from .symbols import SymbolEvaluator

__all__ = [
    "NotElliptic",
    "DegenerateFlow",
    "PlaneWave",
    "PlaneWaveState",
    "Verdict",
    "StabilityVerdict",
    "evolve",
    "trajectory",
    "rk4_state",
    "period_integral",
    "orbit_norm_max",
    "classify_stability",
    "write_trajectory_csv",
]


class NotElliptic(ValueError):
    """Operation requires an elliptic flow (imaginary spectrum)."""


class DegenerateFlow(ValueError):
    """The flow discriminant sits inside the degeneracy band."""


@dataclass(frozen=True)
class PlaneWave:
    """Initial amplitude/frequency pair of a plane-wave perturbation."""

    a0: float
    k0: np.ndarray

    def __post_init__(self) -> None:
        if not (math.isfinite(self.a0) and self.a0 != 0.0):
            raise ValueError("amplitude a0 must be finite and nonzero")
        k0 = np.asarray(self.k0, dtype=float)
        if k0.shape != (3,) or not np.all(np.isfinite(k0)):
            raise ValueError("k0 must be a finite 3-vector")
        if np.linalg.norm(k0) == 0.0:
            raise ValueError("k0 must be nonzero")
        k0 = k0.copy()
        k0.flags.writeable = False
        object.__setattr__(self, "k0", k0)
        object.__setattr__(self, "a0", float(self.a0))


@dataclass(frozen=True)
class PlaneWaveState:
    """Snapshot of an evolved plane wave; sup_norm = |a_t| * |k_t|."""

    t: float
    a_t: float
    k_t: np.ndarray
    sup_norm: float


class Verdict(enum.Enum):
    STABLE_PLANE_WAVE = "stable"
    UNSTABLE_PLANE_WAVE = "unstable"


@dataclass(frozen=True)
class StabilityVerdict:
    """Outcome of the plane-wave stability test for one steady state.

    Unstable verdicts carry a unit witness frequency whose wave grows like
    e^{growth_rate * t}; stable verdicts carry the uniform sup-norm bound for
    a unit-amplitude, unit-frequency wave (scale by |a0| |k0| for others).
    """

    verdict: Verdict
    witness: PlaneWave | None
    growth_rate: float
    bound: float

    def __post_init__(self) -> None:
        if self.verdict is Verdict.UNSTABLE_PLANE_WAVE:
            if self.witness is None or not self.growth_rate > 0.0:
                raise ValueError("unstable verdict requires a witness and positive rate")


def _frequency_map(flow: FlowMatrix, t: float) -> np.ndarray:
    """e^{-t W^T}, the propagator of the frequency trajectory."""
    return matrix_exp(flow, -t).T


def evolve(ev: SymbolEvaluator, pw: PlaneWave, t: float) -> PlaneWaveState:
    """Closed-form plane-wave state at time t."""
    a_t = pw.a0 * float(ev.growth_factor(t, pw.k0))
    k_t = _frequency_map(ev.flow, t) @ pw.k0
    return PlaneWaveState(float(t), a_t, k_t, abs(a_t) * float(np.linalg.norm(k_t)))


def trajectory(ev: SymbolEvaluator, pw: PlaneWave, times: np.ndarray) -> list[PlaneWaveState]:
    """Plane-wave states at a non-decreasing grid of times."""
    times = np.asarray(times, dtype=float)
    factors = ev.growth_factor_curve(times, pw.k0)
    e = matrix_exp(ev.flow, -times)  # (T, 3, 3); transpose applied per state
    out = []
    for t, g, m in zip(times, factors, e):
        a_t = pw.a0 * float(g)
        k_t = m.T @ pw.k0
        out.append(PlaneWaveState(float(t), a_t, k_t, abs(a_t) * float(np.linalg.norm(k_t))))
    return out


def rk4_state(ev: SymbolEvaluator, pw: PlaneWave, t: float, h: float = 1e-3) -> PlaneWaveState:
    """Brute-force state from RK4 on the joint system a' = m(k) a, k' = -W^T k.

    Independent of the closed form: uses only the pointwise symbol and the
    flow matrix, never the growth factor or the matrix exponential.
    """
    if h <= 0.0:
        raise ValueError("step h must be positive")
    n = max(1, int(round(abs(t) / h)))
    dt = t / n
    wt = ev.flow.matrix.T

    def rhs(state: np.ndarray) -> np.ndarray:
        a, k = state[0], state[1:]
        return np.concatenate([[float(ev.symbol(k)) * a], -(wt @ k)])

    y = np.concatenate([[pw.a0], pw.k0])
    for _ in range(n):
        k1 = rhs(y)
        k2 = rhs(y + 0.5 * dt * k1)
        k3 = rhs(y + 0.5 * dt * k2)
        k4 = rhs(y + dt * k3)
        y = y + dt / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
    a_t, k_t = float(y[0]), y[1:]
    return PlaneWaveState(float(t), a_t, k_t, abs(a_t) * float(np.linalg.norm(k_t)))


def period_integral(ev: SymbolEvaluator, k0: np.ndarray) -> float:
    """Integral of the forward symbol over one orbit period of an elliptic flow.

    Vanishes identically for every starting frequency; returned (rather than
    asserted) so callers can inspect the numerical size.
    """
    if ev.flow.spectrum_kind is not SpectrumKind.ELLIPTIC:
        raise NotElliptic(
            f"period integral needs an elliptic flow, got {ev.flow.spectrum_kind.value}"
        )
    k0 = np.asarray(k0, dtype=float)
    if k0.shape != (3,) or np.linalg.norm(k0) == 0.0:
        raise ValueError("k0 must be a nonzero 3-vector")
    return float(ev.log_growth_factor(ev.flow.period, k0))


def orbit_norm_max(flow: FlowMatrix, samples: int = 720) -> float:
    """Max operator norm of e^{-tW^T} over one period of an elliptic flow."""
    if flow.spectrum_kind is not SpectrumKind.ELLIPTIC:
        raise NotElliptic("orbit norm scan needs an elliptic flow")
    ts = np.linspace(0.0, flow.period, samples, endpoint=False)
    mats = matrix_exp(flow, -ts)
    svals = np.linalg.svd(mats, compute_uv=False)
    return float(svals.max())


def classify_stability(ev: SymbolEvaluator, eps: float | None = None) -> StabilityVerdict:
    """Stable/unstable verdict for plane-wave perturbations of one steady flow.

    Hyperbolic flows are unstable: the witness is the eigenvector of W^T whose
    wave grows like e^{lam t} (the +lam eigenvector when the multiplier acts,
    the -lam one when it vanishes identically and only the frequency grows).
    Elliptic flows are stable with the uniform bound
    max_orbit |k| * e^{period * sup|m|} for a unit wave.
    """
    lam_sq = ev.flow.lambda_sq
    if eps is None:
        eps = 1e-12 * max(1.0, abs(lam_sq))
    if abs(lam_sq) <= eps or ev.flow.spectrum_kind is SpectrumKind.NULL:
        raise DegenerateFlow(
            f"flow discriminant {lam_sq:.17g} is inside the degeneracy band {eps:.3g}"
        )
    if lam_sq > 0.0:
        sign = -1 if ev.multiplier_degenerate else +1
        k0 = unit_eigenvector(ev.flow, sign)
        witness = PlaneWave(a0=1.0, k0=k0)
        return StabilityVerdict(
            Verdict.UNSTABLE_PLANE_WAVE, witness, ev.flow.lambda_abs, math.inf
        )
    bound = orbit_norm_max(ev.flow) * math.exp(ev.flow.period * ev.symbol_sup_bound)
    return StabilityVerdict(Verdict.STABLE_PLANE_WAVE, None, 0.0, bound)


def write_trajectory_csv(fp, states: list[PlaneWaveState], footer: dict | None = None) -> None:
    """CSV export with columns t, a_t, k1, k2, k3, sup_norm plus comment footer."""
    writer = csv.writer(fp, lineterminator="\n")
    writer.writerow(["t", "a_t", "k1", "k2", "k3", "sup_norm"])
    for st in states:
        writer.writerow(
            [f"{v:.17g}" for v in (st.t, st.a_t, *st.k_t, st.sup_norm)]
        )
    for key, val in (footer or {}).items():
        fp.write(f"# {key}={val}\n")
