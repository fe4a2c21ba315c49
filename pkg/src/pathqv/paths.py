"""Sampled càdlàg paths: data model, CSV ingestion, validation, generators.

A :class:`SampledPath` is the right-continuous step function that takes the
value of the latest sample at or before ``t`` and stays constant on
``[t_m, T]``.  Every other module works on this representation, so all sums
below are finite and exact.
"""

from __future__ import annotations

import csv
import io
import math
import os
from dataclasses import dataclass, field
from typing import IO, Iterable, Sequence, Union

import numpy as np

from .exceptions import PathError

__all__ = [
    "PathError",
    "SampledPath",
    "JumpList",
    "PsiSpec",
    "MembershipReport",
    "load_csv",
    "write_csv",
    "check_membership",
    "walk_signs",
    "synth_walk",
    "synth_oscillator",
    "jumps",
]


def _frozen(a: np.ndarray) -> np.ndarray:
    a.setflags(write=False)
    return a


@dataclass(frozen=True)
class SampledPath:
    times: np.ndarray
    values: np.ndarray
    horizon: float

    def __init__(self, times, values, horizon: float | None = None):
        t = np.array(times, dtype=float).reshape(-1)
        v = np.array(values, dtype=float)
        if v.ndim == 1:
            v = v.reshape(-1, 1)
        if v.ndim != 2:
            raise PathError("values must be a (m, d) array")
        if t.size == 0:
            raise PathError("path needs at least one sample")
        if v.shape[0] != t.size:
            raise PathError(f"{t.size} times but {v.shape[0]} value rows")
        if v.shape[1] < 1:
            raise PathError("path dimension must be positive")
        if t[0] != 0.0:
            raise PathError(f"first time must be 0, got {t[0]!r}")
        if not np.all(np.isfinite(t)):
            raise PathError("times must be finite")
        steps = np.diff(t)
        if np.any(steps <= 0):
            k = int(np.argmax(steps <= 0)) + 1
            raise PathError(f"times not strictly increasing at sample {k}")
        if not np.all(np.isfinite(v)):
            k = int(np.argmax(~np.all(np.isfinite(v), axis=1)))
            raise PathError(f"non-finite value at sample {k}")
        T = float(t[-1]) if horizon is None else float(horizon)
        if not T > 0 or not math.isfinite(T):
            raise PathError(f"horizon must be positive and finite, got {T!r}")
        if t[-1] > T:
            raise PathError(f"last time {t[-1]!r} exceeds horizon {T!r}")
        object.__setattr__(self, "times", _frozen(t))
        object.__setattr__(self, "values", _frozen(v))
        object.__setattr__(self, "horizon", T)

    @property
    def dim(self) -> int:
        return self.values.shape[1]

    def __len__(self) -> int:
        return self.times.size

    def value_at(self, t):
        """Step-path value(s) at time(s) ``t``; shape ``(..., d)``."""
        idx = np.searchsorted(self.times, np.asarray(t, dtype=float), side="right") - 1
        if np.any(idx < 0):
            raise PathError("path evaluated before time 0")
        return self.values[idx]

    def left_value_at(self, t):
        """Left limit ω(t-), with ω(0-) := ω(0)."""
        idx = np.searchsorted(self.times, np.asarray(t, dtype=float), side="left") - 1
        return self.values[np.maximum(idx, 0)]

    def coordinate(self, i: int) -> "SampledPath":
        """1-d path of coordinate ``i`` (0-based)."""
        return SampledPath(self.times, self.values[:, i], self.horizon)

    def truncated(self, t: float) -> "SampledPath":
        """The path frozen after ``t``: samples up to ``t``, same horizon."""
        keep = self.times <= t
        return SampledPath(self.times[keep], self.values[keep], self.horizon)

    def with_values(self, values) -> "SampledPath":
        return SampledPath(self.times, values, self.horizon)

    def increments(self) -> np.ndarray:
        return np.diff(self.values, axis=0)

    def sup_norm(self) -> float:
        return float(np.sqrt((self.values ** 2).sum(axis=1)).max())


@dataclass(frozen=True)
class JumpList:
    times: np.ndarray
    deltas: np.ndarray

    def __len__(self) -> int:
        return self.times.size

    def __iter__(self):
        return iter(zip(self.times.tolist(), [d for d in self.deltas]))


def jumps(path: SampledPath, threshold: float = 0.0) -> JumpList:
    """Nonzero sample-to-sample changes whose l2 norm exceeds ``threshold``.

    With the default threshold every change of the step path is a jump.
    """
    inc = path.increments()
    norms = np.sqrt((inc ** 2).sum(axis=1))
    keep = norms > threshold
    return JumpList(_frozen(path.times[1:][keep].copy()), _frozen(inc[keep].copy()))


# --------------------------------------------------------------------------- #
# CSV

Source = Union[str, os.PathLike, bytes, IO]


def _read_text(source: Source) -> str:
    if isinstance(source, bytes):
        return source.decode("utf-8")
    if isinstance(source, (str, os.PathLike)):
        with open(source, "rb") as fh:
            return fh.read().decode("utf-8")
    data = source.read()
    return data.decode("utf-8") if isinstance(data, bytes) else data


def load_csv(source: Source, horizon: float | None = None) -> SampledPath:
    """Parse ``t,x1,...,xd`` CSV into a validated path.

    ``source`` may be a filename, raw bytes or a (binary or text) stream.
    Row numbers in error messages count the header as row 1.
    """
    text = _read_text(source)
    rows = [r for r in csv.reader(io.StringIO(text))]
    if not rows or not any(cell.strip() for cell in rows[0]):
        raise PathError("empty file")
    header = [c.strip() for c in rows[0]]
    d = len(header) - 1
    expected = ["t"] + [f"x{i}" for i in range(1, d + 1)]
    if d < 1 or header != expected:
        raise PathError(f"row 1: header must be {','.join(expected) if d >= 1 else 't,x1,...'}; got {','.join(header)}")
    times: list[float] = []
    values: list[list[float]] = []
    for rownum, row in enumerate(rows[1:], start=2):
        if not row or all(not c.strip() for c in row):
            continue
        if len(row) != d + 1:
            raise PathError(f"row {rownum}: expected {d + 1} columns, got {len(row)}")
        try:
            nums = [float(c) for c in row]
        except ValueError:
            bad = next(c for c in row if not _is_float(c))
            raise PathError(f"row {rownum}: non-numeric cell {bad!r}") from None
        if not all(math.isfinite(x) for x in nums):
            raise PathError(f"row {rownum}: non-finite cell")
        if times:
            if nums[0] == times[-1]:
                raise PathError(f"row {rownum}: duplicate time {nums[0]!r}")
            if nums[0] < times[-1]:
                raise PathError(f"row {rownum}: time {nums[0]!r} decreases")
        elif nums[0] != 0.0:
            raise PathError(f"row {rownum}: first time must be 0")
        times.append(nums[0])
        values.append(nums[1:])
    if not times:
        raise PathError("no data rows")
    return SampledPath(times, np.array(values, dtype=float).reshape(len(times), d), horizon)


def _is_float(cell: str) -> bool:
    try:
        float(cell)
    except ValueError:
        return False
    return True


def write_csv(path: SampledPath, dest=None) -> str:
    """Serialize with shortest round-trip float formatting.

    Returns the CSV text; also writes it to ``dest`` (filename or text
    stream) when given.
    """
    lines = ["t," + ",".join(f"x{i}" for i in range(1, path.dim + 1))]
    for t, row in zip(path.times.tolist(), path.values.tolist()):
        lines.append(",".join(repr(x) for x in [t, *row]))
    text = "\n".join(lines) + "\n"
    if dest is not None:
        if isinstance(dest, (str, os.PathLike)):
            with open(dest, "w", encoding="utf-8", newline="\n") as fh:
                fh.write(text)
        else:
            dest.write(text)
    return text


# --------------------------------------------------------------------------- #
# Sample-space membership


@dataclass(frozen=True)
class PsiSpec:
    """Nondecreasing, nonnegative bound ψ on down-jumps.

    kind is ``"identity"``, ``"constant"`` (uses ``kappa``) or ``"table"``
    (piecewise-linear through ``points``, flat beyond the last knot).
    """

    kind: str = "identity"
    kappa: float = 0.0
    points: tuple = ()

    def __post_init__(self):
        if self.kind == "constant":
            if not self.kappa >= 0:
                raise PathError("constant psi needs kappa >= 0")
        elif self.kind == "table":
            pts = [(float(x), float(y)) for x, y in self.points]
            if len(pts) < 1:
                raise PathError("psi table needs at least one knot")
            xs = [p[0] for p in pts]
            ys = [p[1] for p in pts]
            if xs[0] != 0.0 or any(b <= a for a, b in zip(xs, xs[1:])):
                raise PathError("psi table knots must start at 0 and increase")
            if ys[0] < 0 or any(b < a for a, b in zip(ys, ys[1:])):
                raise PathError("psi table must be nonnegative and nondecreasing")
            object.__setattr__(self, "points", tuple(pts))
        elif self.kind != "identity":
            raise PathError(f"unknown psi kind {self.kind!r}")

    @classmethod
    def identity(cls) -> "PsiSpec":
        return cls("identity")

    @classmethod
    def constant(cls, kappa: float) -> "PsiSpec":
        return cls("constant", kappa=kappa)

    @classmethod
    def table(cls, points: Iterable[Sequence[float]]) -> "PsiSpec":
        return cls("table", points=tuple(points))

    def __call__(self, x):
        x = np.asarray(x, dtype=float)
        if self.kind == "identity":
            return x
        if self.kind == "constant":
            return np.full_like(x, self.kappa)
        xs, ys = zip(*self.points)
        return np.interp(x, xs, ys)


@dataclass(frozen=True)
class MembershipReport:
    ok: bool
    time: float | None = None
    coordinate: int | None = None
    delta: float | None = None
    bound: float | None = None

    def __bool__(self) -> bool:
        return self.ok


def check_membership(path: SampledPath, psi: PsiSpec) -> MembershipReport:
    """Check Δω^i(t) >= -ψ(sup_{s<t} |ω(s)|) at every jump and coordinate.

    Reports the first violation in time order (lowest coordinate first).
    """
    if len(path) < 2:
        return MembershipReport(True)
    norms = np.sqrt((path.values ** 2).sum(axis=1))
    past_sup = np.maximum.accumulate(norms)[:-1]
    bound = np.asarray(psi(past_sup), dtype=float)
    inc = path.increments()
    bad = inc < -bound[:, None]
    if not bad.any():
        return MembershipReport(True)
    k, i = np.argwhere(bad)[0]
    return MembershipReport(
        False,
        time=float(path.times[k + 1]),
        coordinate=int(i),
        delta=float(inc[k, i]),
        bound=float(bound[k]),
    )


# --------------------------------------------------------------------------- #
# Generators


def walk_signs(steps: int, seed: int) -> np.ndarray:
    """±1 signs from raw PCG64 output, least significant bit first.

    Bit 1 maps to +1.  Only raw 64-bit words of numpy's PCG64 bit generator
    are used, which numpy keeps stable across releases.
    """
    if steps < 1:
        raise PathError("steps must be >= 1")
    words = np.random.PCG64(seed).random_raw((steps + 63) // 64)
    bits = np.unpackbits(words.astype("<u8").view(np.uint8), bitorder="little")[:steps]
    return bits.astype(np.int8) * 2 - 1


def synth_walk(steps: int, horizon: float = 1.0, step_size: float = 1.0, seed: int = 0) -> SampledPath:
    """Simple random walk with ±step_size moves at times k*T/N."""
    if steps < 1:
        raise PathError("steps must be >= 1")
    if not step_size > 0:
        raise PathError("step_size must be positive")
    signs = walk_signs(steps, seed)
    values = np.concatenate([[0.0], np.cumsum(signs * float(step_size))])
    times = np.arange(steps + 1) * (float(horizon) / steps)
    times[-1] = float(horizon)
    return SampledPath(times, values, horizon)


def synth_oscillator(n_max: int) -> SampledPath:
    """Path on [0, 1] with n² oscillations of size 1/√n on [1/(n+1), 1/n].

    Each oscillation goes up to 1/√n and back to 0; only the extremes are
    sampled, so the total variation is exactly Σ 2n²/√n.
    """
    if n_max < 1:
        raise PathError("n_max must be >= 1")
    times = [0.0]
    values = [0.0]
    for n in range(n_max, 0, -1):
        a, b = 1.0 / (n + 1), 1.0 / n
        moves = 2 * n * n
        amp = 1.0 / math.sqrt(n)
        grid = a + (b - a) * np.arange(1, moves + 1) / moves
        grid[-1] = b
        times.extend(grid.tolist())
        values.extend([amp, 0.0] * (n * n))
    return SampledPath(times, values, 1.0)
