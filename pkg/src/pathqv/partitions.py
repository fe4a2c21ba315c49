"""Stopping-time partitions of [0, T] and oscillation along them.

Families: dyadic Lebesgue partitions (1-d and multivariate), drawup/drawdown
times with their intra-leg refinements, and greedy ε-oscillation times.
Every generator only looks at samples up to the time it is deciding on, so
the partitions are optional; :func:`causality_violations` checks this by
regenerating from truncated paths.

Crossings are detected at sample times only.  Dyadic levels are handled as
integers ``j`` standing for ``j * 2**-n``; since scaling a float by a power
of two is exact, bracket tests against the grid carry no rounding error.
"""

from __future__ import annotations

import io
import math
from dataclasses import dataclass, field
from itertools import combinations
from typing import Callable, Sequence

import numpy as np

from .paths import PathError, SampledPath

__all__ = [
    "Partition",
    "LebesgueTrace",
    "DrawTrace",
    "lebesgue_1d",
    "lebesgue_multi",
    "drawupdown",
    "epsilon_partition",
    "full_refinement",
    "step_approximation",
    "oscillation",
    "causality_violations",
]


@dataclass(frozen=True)
class Partition:
    """0 = τ_0 < τ_1 < ... < τ_K = T.

    ``exhausted`` records that generation stopped because the path offered no
    further stopping time before T (T is then appended).
    """

    times: np.ndarray
    exhausted: bool = True
    kind: str = ""

    def __post_init__(self):
        t = np.array(self.times, dtype=float).reshape(-1)
        if t.size < 2:
            raise PathError("a partition needs at least the points 0 and T")
        if t[0] != 0.0:
            raise PathError("partition must start at 0")
        if np.any(np.diff(t) <= 0):
            raise PathError("partition times must be strictly increasing")
        t.setflags(write=False)
        object.__setattr__(self, "times", t)

    @classmethod
    def from_times(cls, times, horizon: float, exhausted: bool = True, kind: str = "") -> "Partition":
        """Sort, deduplicate, clip to [0, T], add 0 and T."""
        t = np.unique(np.asarray(list(times), dtype=float))
        t = t[(t > 0) & (t < horizon)]
        return cls(np.concatenate([[0.0], t, [float(horizon)]]), exhausted, kind)

    @property
    def horizon(self) -> float:
        return float(self.times[-1])

    def __len__(self) -> int:
        return self.times.size

    def to_csv(self) -> str:
        buf = io.StringIO()
        buf.write("k,t\n")
        for k, t in enumerate(self.times.tolist()):
            buf.write(f"{k},{t!r}\n")
        return buf.getvalue()


def full_refinement(*paths: SampledPath) -> Partition:
    """Partition containing every sample time of every path."""
    horizon = max(p.horizon for p in paths)
    return Partition.from_times(np.concatenate([p.times for p in paths]), horizon, kind="full")


def _require_1d(path: SampledPath, what: str) -> None:
    if path.dim != 1:
        raise PathError(f"{what} needs a 1-d path, got d={path.dim}")


# --------------------------------------------------------------------------- #
# Lebesgue partitions


@dataclass(frozen=True)
class LebesgueTrace:
    level: int
    partition: Partition
    indices: tuple  # dyadic indices j of D_0, D_1, ... (value j * 2**-level)

    @property
    def levels(self) -> list[float]:
        return [math.ldexp(j, -self.level) for j in self.indices]

    @property
    def crossing_times(self) -> np.ndarray:
        return self.partition.times[: len(self.indices)]

    def to_dict(self) -> dict:
        return {
            "kind": "lebesgue",
            "level": self.level,
            "times": self.partition.times.tolist(),
            "dyadic_index": list(self.indices),
            "dyadic_value": self.levels,
            "exhausted": self.partition.exhausted,
        }


def _lebesgue_indices(x: Sequence[float], n: int) -> tuple[list[int], list[int]]:
    """Sample indices of π^n_k and integer dyadic levels D^n_k for 1-d values."""
    scaled = [math.ldexp(v, n) for v in x]
    J = math.floor(scaled[0])
    anchor = scaled[0]
    points = [0]
    levels = [J]
    for k in range(1, len(scaled)):
        s = scaled[k]
        if s >= anchor:
            jlo, jhi = math.ceil(anchor), math.floor(s)
        else:
            jlo, jhi = math.ceil(s), math.floor(anchor)
        if jlo > jhi or (jlo == jhi == J):
            continue
        # s is an endpoint of the bracket, so the admissible dyadic nearest
        # to it is unique: the extreme one on s's side, skipping J.
        if s >= anchor:
            new = jhi if jhi != J else jhi - 1
        else:
            new = jlo if jlo != J else jlo + 1
        points.append(k)
        levels.append(new)
        J = new
        anchor = s
    return points, levels


def lebesgue_1d(path: SampledPath, n: int) -> LebesgueTrace:
    """n-th Lebesgue partition of a 1-d path (grid spacing 2**-n)."""
    _require_1d(path, "lebesgue_1d")
    points, levels = _lebesgue_indices(path.values[:, 0].tolist(), int(n))
    times = path.times[points]
    part = Partition.from_times(times, path.horizon, exhausted=True, kind=f"lebesgue:{n}")
    return LebesgueTrace(int(n), part, tuple(levels))


def lebesgue_multi(path: SampledPath, n: int) -> Partition:
    """Union of the Lebesgue partitions of every ω^i and every ω^i + ω^j."""
    v = path.values
    series = [v[:, i] for i in range(path.dim)]
    series += [v[:, i] + v[:, j] for i, j in combinations(range(path.dim), 2)]
    idx: set[int] = set()
    for s in series:
        idx.update(_lebesgue_indices(s.tolist(), int(n))[0])
    return Partition.from_times(path.times[sorted(idx)], path.horizon, kind=f"lebesgue:{n}")


# --------------------------------------------------------------------------- #
# Drawup / drawdown times


@dataclass(frozen=True)
class DrawTrace:
    level: int
    first_up: bool
    rho: tuple  # (time, direction) for ρ_0, ρ_1, ...; ρ_0 has direction "start"
    intra: tuple  # per k: times τ_{k,i}, i >= 1, strictly before ρ_{k+1}
    combined: Partition
    rho_index: tuple = field(repr=False, default=())
    intra_index: tuple = field(repr=False, default=())

    @property
    def rho_times(self) -> list[float]:
        return [t for t, _ in self.rho]

    @property
    def indicator(self) -> list[bool]:
        """For each k: whether ρ_{k+1} <= T."""
        return [k + 1 < len(self.rho) for k in range(len(self.rho))]

    def i_kn(self, k: int) -> int:
        """Greatest i with τ_{k,i} < ρ_{k+1}; 0 when ρ_{k+1} = +inf."""
        if k >= len(self.rho) or k + 1 >= len(self.rho):
            return 0
        return len(self.intra[k])

    def to_dict(self) -> dict:
        return {
            "kind": "drawupdown",
            "level": self.level,
            "first_up": self.first_up,
            "rho": [{"t": t, "direction": d} for t, d in self.rho],
            "intra": [list(ts) for ts in self.intra],
            "indicator": self.indicator,
            "combined": self.combined.times.tolist(),
        }


def _first_drawup(x: list[float], start: int, h: float) -> int | None:
    # the step path equals x[start] on (ρ, next sample), so it seeds the minimum
    lo = x[start]
    for k in range(start + 1, len(x)):
        v = x[k]
        if v < lo:
            lo = v
        elif v - lo >= h:
            return k
    return None


def _first_drawdown(x: list[float], start: int, h: float) -> int | None:
    hi = x[start]
    for k in range(start + 1, len(x)):
        v = x[k]
        if v > hi:
            hi = v
        elif hi - v >= h:
            return k
    return None


def drawupdown(path: SampledPath, n: int) -> DrawTrace:
    """Alternating drawup/drawdown times of size 2**-n plus intra-leg times.

    Thresholds are first-passage (``>= 2**-n``) because sampled paths
    overshoot.  Intra times τ_{k,i} are the first samples after τ_{k,i-1}
    and up to ρ_{k+1} ∧ T that moved at least 2**-n away from the previous
    one; a τ_{k,i} landing exactly on ρ_{k+1} is the same partition point
    and is kept only as ρ_{k+1}.
    """
    _require_1d(path, "drawupdown")
    x = path.values[:, 0].tolist()
    h = math.ldexp(1.0, -int(n))
    up = _first_drawup(x, 0, h)
    down = _first_drawdown(x, 0, h)
    first_up = up is not None and (down is None or up < down)
    rho_idx = [0]
    dirs = ["start"]
    cur, going_up = (up, True) if first_up else (down, False)
    while cur is not None:
        rho_idx.append(cur)
        dirs.append("up" if going_up else "down")
        going_up = not going_up
        cur = _first_drawup(x, cur, h) if going_up else _first_drawdown(x, cur, h)

    last = len(x) - 1
    intra_idx = []
    for k, start in enumerate(rho_idx):
        nxt = rho_idx[k + 1] if k + 1 < len(rho_idx) else None
        end = last if nxt is None else nxt
        prev = start
        found = []
        for j in range(start + 1, end + 1):
            if abs(x[j] - x[prev]) >= h:
                if nxt is not None and j == nxt:
                    break
                found.append(j)
                prev = j
        intra_idx.append(tuple(found))

    t = path.times.tolist()
    all_idx = set(rho_idx)
    for found in intra_idx:
        all_idx.update(found)
    combined = Partition.from_times(path.times[sorted(all_idx)], path.horizon, kind=f"drawupdown:{n}")
    return DrawTrace(
        level=int(n),
        first_up=first_up,
        rho=tuple((t[i], d) for i, d in zip(rho_idx, dirs)),
        intra=tuple(tuple(t[j] for j in found) for found in intra_idx),
        combined=combined,
        rho_index=tuple(rho_idx),
        intra_index=tuple(intra_idx),
    )


# --------------------------------------------------------------------------- #
# ε-oscillation times


def epsilon_partition(path: SampledPath, eps: float) -> Partition:
    """Greedy times t_i = first t > t_{i-1} with |ω(t) - ω(t_{i-1})| > eps.

    Uses the l2 norm when d > 1.
    """
    if not eps > 0:
        raise PathError("eps must be positive")
    v = path.values
    if path.dim == 1:
        x = v[:, 0].tolist()
        anchor = x[0]
        idx = [0]
        for k in range(1, len(x)):
            if abs(x[k] - anchor) > eps:
                idx.append(k)
                anchor = x[k]
    else:
        anchor = v[0]
        idx = [0]
        for k in range(1, len(v)):
            if math.sqrt(float(((v[k] - anchor) ** 2).sum())) > eps:
                idx.append(k)
                anchor = v[k]
    return Partition.from_times(path.times[idx], path.horizon, kind=f"epsilon:{eps!r}")


def step_approximation(path: SampledPath, partition: Partition) -> SampledPath:
    """ω^τ(t) = ω(τ_{i-1}) on [τ_{i-1}, τ_i), and ω(T) at T, on ω's grid."""
    tau = partition.times
    k = np.searchsorted(tau, path.times, side="right") - 1
    return path.with_values(path.value_at(tau[k]))


# --------------------------------------------------------------------------- #
# Oscillation


def _diameter(points: np.ndarray) -> float:
    if points.shape[0] < 2:
        return 0.0
    if points.shape[1] == 1:
        return float(points.max() - points.min())
    if points.shape[0] > 512 and points.shape[1] in (2, 3):
        from scipy.spatial import ConvexHull, QhullError

        try:
            points = points[ConvexHull(points).vertices]
        except (QhullError, ValueError):
            pass
    best = 0.0
    for start in range(0, points.shape[0], 256):
        block = points[start:start + 256]
        d2 = ((block[:, None, :] - points[None, :, :]) ** 2).sum(axis=2)
        best = max(best, float(d2.max()))
    return math.sqrt(best)


def oscillation(path: SampledPath, partition: Partition) -> float:
    """O_T: largest |ω(t) - ω(s)| with s, t in one interval [τ_{i-1}, τ_i).

    The step path on [τ_{i-1}, τ_i) takes the value ω(τ_{i-1}) and the
    values of the samples strictly inside; the final point T forms its own
    singleton interval.
    """
    tau = partition.times
    times = path.times
    start_vals = path.value_at(tau[:-1])
    a = np.searchsorted(times, tau[:-1], side="right")
    b = np.searchsorted(times, tau[1:], side="left")
    worst = 0.0
    values = path.values
    for i in np.nonzero(b > a)[0].tolist():
        pts = np.vstack([start_vals[i:i + 1], values[a[i]:b[i]]])
        worst = max(worst, _diameter(pts))
    return worst


# --------------------------------------------------------------------------- #
# Causality


def causality_violations(
    path: SampledPath,
    generate: Callable[[SampledPath], Partition],
    points: Sequence[float] | None = None,
) -> list[float]:
    """Internal times τ_k whose prefix changes when regenerated from ω|[0, τ_k].

    An optional partition must give back τ_0..τ_k from the truncated path
    (frozen after τ_k).  Returns the offending τ_k, empty when causal.
    """
    full = generate(path).times
    internal = full[1:-1] if points is None else np.asarray(points, dtype=float)
    bad = []
    for tk in internal.tolist():
        k = int(np.searchsorted(full, tk))
        again = generate(path.truncated(tk)).times
        if again.size <= k or not np.array_equal(again[: k + 1], full[: k + 1]):
            bad.append(tk)
    return bad
