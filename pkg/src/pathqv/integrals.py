"""Lebesgue–Stieltjes and Föllmer (Riemann-sum) integrals on step paths.

Everything is a finite sum on the step-path model.  Limits along partition
ladders are replaced by Cauchy diagnostics over the supplied levels.
"""

from __future__ import annotations

import io
from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np

from ._numerics import running_with_origin
from .exceptions import PathError
from .partitions import Partition
from .paths import SampledPath
from .quadvar import ConvergenceReport, QVMatrixProcess, cauchy_report

__all__ = [
    "IntegralProcess",
    "SimpleStrategy",
    "ResidualReport",
    "common_grid",
    "lebesgue_stieltjes",
    "follmer_integral",
    "riemann_sum",
    "simple_strategy_integral",
    "strategy_causality_violations",
    "ibp_residual_typical",
    "ibp_residual_fv",
    "co_jump_sum",
]


@dataclass(frozen=True)
class IntegralProcess:
    times: np.ndarray
    values: np.ndarray

    @property
    def terminal(self) -> float:
        return float(self.values[-1])

    def to_csv(self) -> str:
        buf = io.StringIO()
        buf.write("t,value\n")
        for t, v in zip(self.times.tolist(), self.values.tolist()):
            buf.write(f"{t!r},{v!r}\n")
        return buf.getvalue()


def _scalar(path: SampledPath, what: str) -> SampledPath:
    if path.dim != 1:
        raise PathError(f"{what} needs 1-d paths, got d={path.dim}")
    return path


def common_grid(*paths: SampledPath) -> list[SampledPath]:
    """Re-sample step paths on the union of their sample times."""
    horizon = max(p.horizon for p in paths)
    grid = np.unique(np.concatenate([p.times for p in paths]))
    return [SampledPath(grid, p.value_at(grid), horizon) for p in paths]


def lebesgue_stieltjes(g: SampledPath, a: SampledPath) -> IntegralProcess:
    """∫_(0,t] g(s-) da(s) = Σ_{jumps u <= t of a} g(u-) Δa(u), on a's grid."""
    _scalar(g, "lebesgue_stieltjes")
    _scalar(a, "lebesgue_stieltjes")
    left = g.left_value_at(a.times[1:])[:, 0]
    terms = left * np.diff(a.values[:, 0])
    return IntegralProcess(a.times, running_with_origin(terms))


def riemann_sum(g: SampledPath, x: SampledPath, partition: Partition) -> IntegralProcess:
    """Running Σ_k g(τ_{k-1}) (x(τ_k ∧ t) - x(τ_{k-1} ∧ t)) on x's grid."""
    _scalar(g, "riemann_sum")
    _scalar(x, "riemann_sum")
    tau = partition.times
    G = g.value_at(tau)[:, 0]
    X = x.value_at(tau)[:, 0]
    done = running_with_origin(G[:-1] * np.diff(X))
    k = np.searchsorted(tau, x.times, side="right") - 1
    partial = G[k] * (x.values[:, 0] - X[k])
    return IntegralProcess(x.times, done[k] + partial)


def follmer_integral(
    g: SampledPath,
    x: SampledPath,
    partitions: Sequence[Partition],
    tol: float = 1e-9,
) -> tuple[list[IntegralProcess], ConvergenceReport]:
    """Left-point Riemann sums of ∫ g(s-) dx(s) along a refining ladder."""
    if not partitions:
        raise ValueError("need at least one partition")
    procs = [riemann_sum(g, x, p) for p in partitions]
    report = cauchy_report(list(range(len(procs))), [p.values for p in procs], tol)
    return procs, report


@dataclass(frozen=True)
class SimpleStrategy:
    """Positions h_k held on (τ_k, τ_{k+1}]; weights has one row per interval."""

    times: np.ndarray
    weights: np.ndarray

    def __post_init__(self):
        t = np.asarray(self.times, dtype=float).reshape(-1)
        w = np.asarray(self.weights, dtype=float)
        if w.ndim == 1:
            w = w.reshape(-1, 1)
        if t.size < 1 or t[0] != 0.0:
            raise PathError("strategy times must start at 0")
        if np.any(np.diff(t) < 0):
            raise PathError("strategy times must be nondecreasing")
        if w.shape[0] != max(t.size - 1, 0):
            raise PathError(f"need {t.size - 1} weight rows, got {w.shape[0]}")
        if not np.all(np.isfinite(w)):
            raise PathError("strategy weights must be finite")
        object.__setattr__(self, "times", t)
        object.__setattr__(self, "weights", w)

    @classmethod
    def from_partition(cls, path: SampledPath, partition: Partition,
                       rule: Callable[[np.ndarray], np.ndarray] | None = None) -> "SimpleStrategy":
        """Hold ``rule(ω(τ_k))`` (default ω(τ_k) itself) on each partition interval."""
        vals = path.value_at(partition.times[:-1])
        w = vals if rule is None else np.asarray([rule(v) for v in vals], dtype=float)
        return cls(partition.times, w)


def simple_strategy_integral(H: SimpleStrategy, path: SampledPath) -> IntegralProcess:
    """(H·S)_t = Σ_k h_k · (S_{τ_{k+1} ∧ t} - S_{τ_k ∧ t}) on the path's grid."""
    if H.weights.shape[0] and H.weights.shape[1] != path.dim:
        raise PathError(f"weights have dimension {H.weights.shape[1]}, path has {path.dim}")
    tau = H.times
    X = path.value_at(tau)
    if tau.size < 2:
        return IntegralProcess(path.times, np.zeros(len(path)))
    terms = (H.weights * np.diff(X, axis=0)).sum(axis=1)
    done = running_with_origin(terms)
    k = np.searchsorted(tau, path.times, side="right") - 1
    open_ = k < tau.size - 1
    kk = np.minimum(k, tau.size - 2)
    partial = np.where(open_, (H.weights[kk] * (path.values - X[k])).sum(axis=1), 0.0)
    return IntegralProcess(path.times, done[k] + partial)


def strategy_causality_violations(path: SampledPath, build: Callable[[SampledPath], SimpleStrategy]) -> list[float]:
    """Times τ_k at which rebuilding from ω|[0, τ_k] changes τ_0..τ_k or h_k."""
    full = build(path)
    bad = []
    for k, tk in enumerate(full.times[:-1].tolist()):
        again = build(path.truncated(tk))
        if (again.times.size <= k or not np.array_equal(again.times[: k + 1], full.times[: k + 1])
                or again.weights.shape[0] <= k or not np.array_equal(again.weights[k], full.weights[k])):
            bad.append(tk)
    return bad


@dataclass(frozen=True)
class ResidualReport:
    residual: IntegralProcess
    sup_residual: float
    level: str

    def to_dict(self) -> dict:
        return {"sup_residual": self.sup_residual, "level": self.level}


def _finest(partitions) -> Partition:
    if isinstance(partitions, Partition):
        return partitions
    if not partitions:
        raise ValueError("need at least one partition")
    return partitions[-1]


def ibp_residual_typical(path: SampledPath, qv: QVMatrixProcess, i: int, j: int, partitions) -> ResidualReport:
    """ω^iω^j - ω^i(0)ω^j(0) - F∫ω^i(s-)dω^j - F∫ω^j(s-)dω^i - [S^i,S^j].

    Föllmer integrals use the finest partition supplied; ``qv`` must live
    on the path's sample grid.
    """
    part = _finest(partitions)
    xi, xj = path.coordinate(i), path.coordinate(j)
    if qv.times.shape != path.times.shape or not np.array_equal(qv.times, path.times):
        raise PathError("qv process must be evaluated on the path's sample grid")
    vi, vj = xi.values[:, 0], xj.values[:, 0]
    lhs = vi * vj - vi[0] * vj[0]
    rhs = riemann_sum(xi, xj, part).values + riemann_sum(xj, xi, part).values + qv.matrices[:, i, j]
    res = lhs - rhs
    return ResidualReport(IntegralProcess(path.times, res), float(np.abs(res).max()), part.kind)


def co_jump_sum(a: SampledPath, b: SampledPath, eps: float = 0.0) -> IntegralProcess:
    """Running Σ_{0<s<=t, |Δb(s)|>eps} Δa(s) Δb(s) on the union grid."""
    _scalar(a, "co_jump_sum")
    _scalar(b, "co_jump_sum")
    if eps < 0:
        raise PathError("eps must be >= 0")
    a, b = common_grid(a, b)
    da = np.diff(a.values[:, 0])
    db = np.diff(b.values[:, 0])
    if eps > 0 and np.any(np.abs(db) == eps):
        raise PathError(f"eps={eps!r} equals the size of a jump of b")
    terms = np.where(np.abs(db) > eps, da * db, 0.0)
    return IntegralProcess(a.times, running_with_origin(terms))


def ibp_residual_fv(path: SampledPath, fv: SampledPath, i: int, j: int, partitions) -> ResidualReport:
    """Residual of ω^iω̃^j - ω^i(0)ω̃^j(0) = F∫ω̃^j(s-)dω^i + ∫ω^i(s-)dω̃^j + ΣΔω^iΔω̃^j.

    The first integral is a Riemann sum along the finest partition supplied,
    the second a Lebesgue–Stieltjes sum, the third the co-jump sum; all on
    the union of both sample grids.
    """
    part = _finest(partitions)
    w, v = common_grid(path.coordinate(i), fv.coordinate(j))
    wv, vv = w.values[:, 0], v.values[:, 0]
    lhs = wv * vv - wv[0] * vv[0]
    rhs = (riemann_sum(v, w, part).values
           + lebesgue_stieltjes(w, v).values
           + co_jump_sum(w, v).values)
    res = lhs - rhs
    return ResidualReport(IntegralProcess(w.times, res), float(np.abs(res).max()), part.kind)
