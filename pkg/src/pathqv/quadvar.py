"""Discrete quadratic (co)variation along partitions and its dyadic limit."""

from __future__ import annotations

import io
import math
from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

from ._numerics import running_with_origin, sup_norm
from .partitions import Partition, lebesgue_multi, oscillation
from .paths import SampledPath

__all__ = [
    "QVMatrixProcess",
    "ConvergenceReport",
    "PolarizedQV",
    "StudyRow",
    "discrete_qv",
    "jump_qv",
    "qv_limit",
    "polarized_qv",
    "omega_qm",
    "partition_independence_study",
    "running_partition_sum",
]


@dataclass(frozen=True)
class QVMatrixProcess:
    """Running d×d covariation matrices on the path's sample grid."""

    times: np.ndarray
    matrices: np.ndarray  # (m, d, d)
    jump_part: np.ndarray  # (m, d, d)

    @property
    def cont_part(self) -> np.ndarray:
        return self.matrices - self.jump_part

    @property
    def terminal(self) -> np.ndarray:
        return self.matrices[-1]

    @property
    def frobenius_T(self) -> float:
        return float(np.sqrt((self.matrices[-1] ** 2).sum()))

    def entry(self, i: int, j: int) -> np.ndarray:
        return self.matrices[:, i, j]

    def to_csv(self) -> str:
        d = self.matrices.shape[1]
        pairs = [(i, j) for i in range(d) for j in range(i, d)]
        cols = ["t"] + [f"qv_{i + 1}{j + 1}" for i, j in pairs] + [f"jump_{i + 1}{j + 1}" for i, j in pairs]
        buf = io.StringIO()
        buf.write(",".join(cols) + "\n")
        for k, t in enumerate(self.times.tolist()):
            row = [t]
            row += [float(self.matrices[k, i, j]) for i, j in pairs]
            row += [float(self.jump_part[k, i, j]) for i, j in pairs]
            buf.write(",".join(repr(x) for x in row) + "\n")
        return buf.getvalue()


@dataclass(frozen=True)
class ConvergenceReport:
    levels: list
    sup_diffs: list
    converged: bool
    achieved_tol: float
    tol: float
    converged_at: int | None = None

    def to_dict(self) -> dict:
        return {
            "levels": list(self.levels),
            "sup_diffs": list(self.sup_diffs),
            "converged": self.converged,
            "tol": self.tol,
            "achieved_tol": self.achieved_tol,
            "converged_at": self.converged_at,
        }


def cauchy_report(levels: Sequence[int], processes: Sequence[np.ndarray], tol: float) -> ConvergenceReport:
    """Sup-norm distances between consecutive processes of a ladder.

    Converged when the last two distances (or the only one) are <= tol.
    ``converged_at`` is the first level whose distance to its predecessor,
    and every later distance, is <= tol.
    """
    diffs = [sup_norm(b, a) for a, b in zip(processes, processes[1:])]
    tail = diffs[-2:]
    converged = bool(tail) and all(x <= tol for x in tail)
    achieved = max(tail) if tail else math.inf
    converged_at = None
    if diffs:
        k = len(diffs)
        while k > 0 and diffs[k - 1] <= tol:
            k -= 1
        if k < len(diffs):
            converged_at = int(levels[k + 1])
    return ConvergenceReport(list(levels), diffs, converged, achieved, float(tol), converged_at)


def running_partition_sum(path: SampledPath, partition: Partition, fn) -> np.ndarray:
    """Σ_k fn(ω(τ_k ∧ t) - ω(τ_{k-1} ∧ t)) at every sample time t.

    ``fn`` maps a stack of increment vectors (K, d) to terms (K, ...) and
    must send a zero increment to zero.
    """
    tau = partition.times
    anchors = path.value_at(tau)
    done = running_with_origin(fn(np.diff(anchors, axis=0)))
    k = np.searchsorted(tau, path.times, side="right") - 1
    partial = path.values - anchors[k]
    return done[k] + fn(partial)


def _outer(inc: np.ndarray) -> np.ndarray:
    return inc[:, :, None] * inc[:, None, :]


def jump_qv(path: SampledPath, threshold: float = 0.0) -> np.ndarray:
    """Running Σ_{0<s<=t} Δω(s) Δω(s)ᵀ over jumps larger than ``threshold``.

    Returns an array (m, d, d) on the sample grid.
    """
    inc = path.increments()
    if threshold > 0:
        inc = inc * (np.sqrt((inc ** 2).sum(axis=1)) > threshold)[:, None]
    return running_with_origin(_outer(inc))


def discrete_qv(path: SampledPath, partition: Partition, jump_threshold: float = 0.0) -> QVMatrixProcess:
    """Q^{i,j,τ}_t for all i, j at every sample time."""
    mats = running_partition_sum(path, partition, _outer)
    mats = 0.5 * (mats + np.swapaxes(mats, 1, 2))
    return QVMatrixProcess(path.times, mats, jump_qv(path, jump_threshold))


def qv_limit(
    path: SampledPath,
    n_min: int,
    n_max: int,
    tol: float,
    jump_threshold: float = 0.0,
) -> tuple[QVMatrixProcess, ConvergenceReport]:
    """Discrete QV along Lebesgue partitions n_min..n_max with Cauchy diagnostics.

    Non-convergence is reported in the diagnostics, never raised.
    """
    if n_min > n_max:
        raise ValueError("n_min must not exceed n_max")
    if not tol > 0:
        raise ValueError("tol must be positive")
    levels = list(range(int(n_min), int(n_max) + 1))
    jp = jump_qv(path, jump_threshold)
    procs = []
    for n in levels:
        mats = running_partition_sum(path, lebesgue_multi(path, n), _outer)
        procs.append(0.5 * (mats + np.swapaxes(mats, 1, 2)))
    report = cauchy_report(levels, procs, tol)
    return QVMatrixProcess(path.times, procs[-1], jp), report


@dataclass(frozen=True)
class PolarizedQV:
    R: np.ndarray
    T: np.ndarray
    Q: np.ndarray


def polarized_qv(path: SampledPath, partition: Partition, i: int, j: int) -> PolarizedQV:
    """Running Σ(Δω^i + Δω^j)², Σ(Δω^i - Δω^j)² and Q = (R - T)/4 (0-based i, j)."""
    d = path.dim
    if not (0 <= i < d and 0 <= j < d):
        raise IndexError(f"coordinates must lie in 0..{d - 1}")

    def terms(inc):
        a, b = inc[:, i], inc[:, j]
        return np.stack([(a + b) ** 2, (a - b) ** 2], axis=1)

    out = running_partition_sum(path, partition, terms)
    R, T = out[:, 0], out[:, 1]
    return PolarizedQV(R, T, (R - T) / 4.0)


def omega_qm(path: SampledPath, qv: QVMatrixProcess, q: float, M: float) -> bool:
    """Whether |[S]_T| <= q and sup_t |ω(t)| <= M."""
    return qv.frobenius_T <= q and path.sup_norm() <= M


@dataclass(frozen=True)
class StudyRow:
    label: str
    oscillation: float
    error: float
    points: int


def partition_independence_study(
    path: SampledPath,
    partitions: Iterable[Partition] | dict,
    reference: QVMatrixProcess,
) -> list[StudyRow]:
    """(O_T, sup_t |Q^τ_t - reference_t|) for each partition."""
    items = partitions.items() if isinstance(partitions, dict) else ((p.kind, p) for p in partitions)
    rows = []
    for label, part in items:
        q = discrete_qv(path, part)
        rows.append(StudyRow(str(label), oscillation(path, part), sup_norm(q.matrices, reference.matrices), len(part)))
    return rows
