"""Truncated variation, the regularized companion path and the TV estimators.

TV^c(f, [0, t]) is the supremum over all subsequences of sample times of
Σ max(|f(t_i) - f(t_{i-1})| - c, 0).  For a step path only sample values
matter, so the supremum is a maximum over subsequences and is computed
exactly by dynamic programming:

    B[i] = max(0, max_{j<i} B[j] + max(|x_i - x_j| - c, 0))

``B`` is nondecreasing and B[k] is the running value at t_k.  The quadratic
recursion is the reference.  Splitting the gain max(|d| - c, 0) into its
three affine branches turns the inner maximum into three prefix maxima,
which gives the linear-time path used for long series; both are checked
against exhaustive enumeration in the test suite.
"""

from __future__ import annotations

import io
import math
from dataclasses import dataclass
from functools import lru_cache
from itertools import combinations
from typing import Sequence

import numpy as np

from ._numerics import sup_norm
from .exceptions import InvariantViolation, PathError
from .partitions import drawupdown
from .paths import SampledPath

__all__ = [
    "TVResult",
    "RegularizedPath",
    "SandwichReport",
    "IdentityCheck",
    "TVEstimate",
    "PropositionReport",
    "FAST_PATH_MIN_SAMPLES",
    "truncated_variation",
    "brute_force_tv",
    "total_variation",
    "regularize",
    "tv_sandwich_check",
    "tv_integral_identity",
    "qv_via_tv",
    "proposition_residual",
]

# "auto" switches to the linear recursion above this many samples
FAST_PATH_MIN_SAMPLES = 50_000
BRUTE_FORCE_MAX_SAMPLES = 18


@dataclass(frozen=True)
class TVResult:
    c: float
    times: np.ndarray
    running: np.ndarray

    @property
    def total(self) -> float:
        return float(self.running[-1])

    def to_csv(self) -> str:
        buf = io.StringIO()
        buf.write("t,tv_running\n")
        for t, v in zip(self.times.tolist(), self.running.tolist()):
            buf.write(f"{t!r},{v!r}\n")
        return buf.getvalue()


def _values_1d(path, what: str) -> list[float]:
    if isinstance(path, SampledPath):
        if path.dim != 1:
            raise PathError(f"{what} needs a 1-d path, got d={path.dim}")
        return path.values[:, 0].tolist()
    return np.asarray(path, dtype=float).reshape(-1).tolist()


def _tv_quadratic(x: list[float], c: float) -> np.ndarray:
    arr = np.asarray(x, dtype=float)
    B = np.zeros(arr.size)
    for i in range(1, arr.size):
        gains = np.maximum(np.abs(arr[i] - arr[:i]) - c, 0.0)
        B[i] = max(0.0, float((B[:i] + gains).max()))
    return B


def _tv_linear(x: list[float], c: float) -> np.ndarray:
    best = 0.0  # max_j B[j]
    rise = -x[0]  # max_j B[j] - x_j
    fall = x[0]  # max_j B[j] + x_j
    out = [0.0]
    append = out.append
    for v in x[1:]:
        b = best
        up = rise + v - c
        if up > b:
            b = up
        down = fall - v - c
        if down > b:
            b = down
        best = b
        if b - v > rise:
            rise = b - v
        if b + v > fall:
            fall = b + v
        append(b)
    return np.asarray(out)


def truncated_variation(path, c: float, method: str = "auto") -> TVResult:
    """Running TV^c on the sample grid of a 1-d path.

    method: ``"dp"`` (quadratic reference), ``"fast"`` (linear) or
    ``"auto"`` (fast above FAST_PATH_MIN_SAMPLES samples).
    """
    if not c >= 0:
        raise PathError(f"truncation parameter must be >= 0, got {c!r}")
    x = _values_1d(path, "truncated_variation")
    if method == "auto":
        method = "fast" if len(x) > FAST_PATH_MIN_SAMPLES else "dp"
    if method == "dp":
        running = _tv_quadratic(x, float(c))
    elif method == "fast":
        running = _tv_linear(x, float(c))
    else:
        raise ValueError(f"unknown method {method!r}")
    times = path.times if isinstance(path, SampledPath) else np.arange(len(x), dtype=float)
    return TVResult(float(c), times, running)


@lru_cache(maxsize=None)
def _consecutive_pairs(m: int) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Indicator of "j and i are consecutive picks" for every subset of range(m)."""
    masks = np.arange(1 << m, dtype=np.int64)
    bits = ((masks[:, None] >> np.arange(m)) & 1).astype(np.int32)
    before = np.concatenate([np.zeros((masks.size, 1), np.int32), np.cumsum(bits, axis=1)], axis=1)
    pj, pi = np.array(list(combinations(range(m), 2)), dtype=np.int64).reshape(-1, 2).T
    between = before[:, pi] - before[:, pj + 1]
    ind = (bits[:, pj] == 1) & (bits[:, pi] == 1) & (between == 0)
    return ind.astype(float), pj, pi


def brute_force_tv(path, c):
    """TV^c over [0, T] by enumerating every subsequence of samples.

    Exponential in the number of samples (at most 18).  ``c`` may be a
    scalar or a 1-d array; the result has the same shape.
    """
    x = np.asarray(_values_1d(path, "brute_force_tv"))
    m = x.size
    if m > BRUTE_FORCE_MAX_SAMPLES:
        raise PathError(f"brute force limited to {BRUTE_FORCE_MAX_SAMPLES} samples, got {m}")
    cs = np.atleast_1d(np.asarray(c, dtype=float))
    if np.any(cs < 0):
        raise PathError("truncation parameter must be >= 0")
    if m < 2:
        out = np.zeros(cs.shape)
    else:
        ind, pj, pi = _consecutive_pairs(m)
        gains = np.maximum(np.abs(x[pi] - x[pj])[:, None] - cs[None, :], 0.0)
        out = np.maximum((ind @ gains).max(axis=0), 0.0)
    return float(out[0]) if np.ndim(c) == 0 else out


def total_variation(path: SampledPath) -> np.ndarray:
    """Running total variation per coordinate, shape (m, d)."""
    inc = np.abs(path.increments())
    return np.concatenate([np.zeros((1, path.dim)), np.cumsum(inc, axis=0)])


# --------------------------------------------------------------------------- #
# Regularized companion ω^c


@dataclass(frozen=True)
class RegularizedPath:
    c: float
    path: SampledPath
    tv_of_regularized: np.ndarray  # per coordinate

    @property
    def running_tv(self) -> np.ndarray:
        return total_variation(self.path)


def _dead_zone(x: list[float], c: float) -> list[float]:
    y = x[0]
    out = [y]
    append = out.append
    for v in x[1:]:
        if v > y + c:
            y = v - c
        elif v < y - c:
            y = v + c
        append(y)
    return out


def regularize(path: SampledPath, c: float) -> RegularizedPath:
    """Finite-variation companion within distance c of ω, moving only when forced.

    Per coordinate: start at ω(0); whenever ω leaves the closed band
    [ω^c - c, ω^c + c], drag ω^c so that ω sits on the band edge.
    """
    if not c > 0:
        raise PathError(f"regularization needs c > 0, got {c!r}")
    cols = [_dead_zone(path.values[:, i].tolist(), float(c)) for i in range(path.dim)]
    reg = path.with_values(np.array(cols, dtype=float).T)
    return RegularizedPath(float(c), reg, total_variation(reg)[-1])


@dataclass(frozen=True)
class SandwichReport:
    c: float
    tv_2c: np.ndarray  # running TV^{2c}(ω)
    tv_regularized: np.ndarray  # running TV(ω^c)
    lower_gap: float  # min_t TV(ω^c) - TV^{2c}(ω)
    upper_gap: float  # min_t TV^{2c}(ω) + 2c - TV(ω^c)

    @property
    def ok(self) -> bool:
        return self.lower_gap >= -self.slack and self.upper_gap >= -self.slack

    @property
    def slack(self) -> float:
        return 1e-12 * (1.0 + float(np.abs(self.tv_regularized).max()))


def tv_sandwich_check(path: SampledPath, c: float, method: str = "auto") -> SandwichReport:
    """TV^{2c}(ω) <= TV(ω^c) <= TV^{2c}(ω) + 2c at every sample time.

    Raises InvariantViolation when either side fails beyond rounding.
    """
    if not c > 0:
        raise PathError("c must be positive")
    lower = truncated_variation(path, 2 * c, method).running
    mid = regularize(path, c).running_tv[:, 0]
    rep = SandwichReport(
        float(c), lower, mid,
        float((mid - lower).min()),
        float((lower + 2 * c - mid).min()),
    )
    if not rep.ok:
        raise InvariantViolation(
            f"truncated-variation sandwich broken at c={c!r}",
            {"c": c, "lower_gap": rep.lower_gap, "upper_gap": rep.upper_gap},
        )
    return rep


@dataclass(frozen=True)
class IdentityCheck:
    lhs: np.ndarray
    rhs: np.ndarray
    residual: float

    @property
    def relative_residual(self) -> float:
        scale = 1.0 + max(float(np.abs(self.lhs).max()), float(np.abs(self.rhs).max()))
        return self.residual / scale


def tv_integral_identity(path: SampledPath, c: float) -> IdentityCheck:
    """c·TV(ω^c)_t against ∫_(0,t] (ω - ω^c)(s) dω^c(s), integrand taken at s."""
    x = _values_1d(path, "tv_integral_identity")
    reg = regularize(path, c).path.values[:, 0]
    dreg = np.diff(reg)
    gap = np.asarray(x[1:]) - reg[1:]
    lhs = c * np.concatenate([[0.0], np.cumsum(np.abs(dreg))])
    rhs = np.concatenate([[0.0], np.cumsum(gap * dreg)])
    return IdentityCheck(lhs, rhs, float(np.abs(lhs - rhs).max()))


# --------------------------------------------------------------------------- #
# Estimating the continuous quadratic variation


@dataclass(frozen=True)
class TVEstimate:
    c: float
    statement: np.ndarray  # (m, d, d) from c·TV^c
    proof: np.ndarray  # (m, d, d) from 2c·TV^{2c}
    error: float | None = None  # sup-norm distance of ``statement`` to the reference
    proof_error: float | None = None

    @property
    def terminal(self) -> np.ndarray:
        return self.statement[-1]


def _estimate_matrix(path: SampledPath, c: float, method: str) -> np.ndarray:
    v = path.values
    m, d = v.shape
    out = np.zeros((m, d, d))
    for i in range(d):
        out[:, i, i] = c * truncated_variation(v[:, i], c, method).running
    for i, j in combinations(range(d), 2):
        plus = truncated_variation(v[:, i] + v[:, j], c, method).running
        minus = truncated_variation(v[:, i] - v[:, j], c, method).running
        out[:, i, j] = out[:, j, i] = c * (plus - minus) / 4.0
    return out


def qv_via_tv(path: SampledPath, c_list: Sequence[float], reference=None, method: str = "auto") -> list[TVEstimate]:
    """Running estimates of ⟨S^i, S^j⟩ from truncated variation for each c.

    ``reference`` (a QVMatrixProcess) supplies the continuous part to
    measure the estimates against.
    """
    cs = [float(c) for c in c_list]
    if any(c <= 0 for c in cs):
        raise PathError("c values must be positive")
    ref = None if reference is None else reference.cont_part
    out = []
    for c in cs:
        stmt = _estimate_matrix(path, c, method)
        proof = _estimate_matrix(path, 2 * c, method)
        err = None if ref is None else sup_norm(stmt, ref)
        perr = None if ref is None else sup_norm(proof, ref)
        out.append(TVEstimate(c, stmt, proof, err, perr))
    return out


@dataclass(frozen=True)
class PropositionReport:
    level: int
    residual: float
    combined_qv: float
    terms: int


def proposition_residual(path: SampledPath, n: int, trace=None) -> PropositionReport:
    """Residual of the drawup/drawdown sufficient condition and the combined QV.

    Sums, over legs k >= 1,
    2^-n |ω(ρ_{k+1}∧T) + σ_k 2^-n 1{ρ_{k+1}<=T} - ω(τ_{k,i(k,n)}∧T)|
    - (ω(ρ_{k+1}∧T) - ω(τ_{k,i(k,n)}∧T))², with σ_k = (-1)^{k+1} when the
    first threshold crossing is a drawup and (-1)^k otherwise.
    """
    if path.dim != 1:
        raise PathError("proposition_residual needs a 1-d path")
    tr = drawupdown(path, n) if trace is None else trace
    if not tr.rho_index:
        raise PathError("empty drawup/drawdown trace")
    x = path.values[:, 0].tolist()
    h = math.ldexp(1.0, -int(tr.level))
    rho = tr.rho_index
    K = len(rho) - 1
    terms = []
    for k in range(1, K + 1):
        nxt = rho[k + 1] if k + 1 <= K else None
        w_rho = x[nxt] if nxt is not None else x[-1]
        ind = 1.0 if nxt is not None else 0.0
        intra = tr.intra_index[k] if nxt is not None else ()
        w_tau = x[intra[-1]] if intra else x[rho[k]]
        sigma = (-1) ** (k + 1) if tr.first_up else (-1) ** k
        terms.append(h * abs(w_rho + sigma * h * ind - w_tau) - (w_rho - w_tau) ** 2)
    vals = path.value_at(tr.combined.times)[:, 0]
    combined = math.fsum((np.diff(vals) ** 2).tolist())
    return PropositionReport(int(tr.level), math.fsum(terms), combined, len(terms))
