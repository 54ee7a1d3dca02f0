"""Finite laws, return series, CSV ingestion and second-order dominance."""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

__all__ = [
    "SampleError",
    "EmpiricalDistribution",
    "ReturnSeries",
    "from_samples",
    "point_mass",
    "scale",
    "shift",
    "benchmarked_growth",
    "moments",
    "ssd_dominates",
    "integrated_cdf",
    "read_csv",
    "write_csv",
]

PROB_TOL = 1e-12


class SampleError(ValueError):
    pass


def _readonly(a):
    a = np.array(a, dtype=float)
    a.setflags(write=False)
    return a


@dataclass(frozen=True, eq=False)
class EmpiricalDistribution:
    """A finite discrete law, stored sorted with duplicate outcomes merged.

    Zero-probability outcomes are kept; use :meth:`support` to drop them.
    """

    outcomes: np.ndarray
    probabilities: np.ndarray

    def __post_init__(self):
        x = np.asarray(self.outcomes, dtype=float).ravel()
        p = np.asarray(self.probabilities, dtype=float).ravel()
        if x.size == 0 or x.size != p.size:
            raise SampleError(f"need matching non-empty outcomes/probabilities, got {x.size} and {p.size}")
        if not np.all(np.isfinite(x)):
            raise SampleError("outcomes must be finite")
        if np.any(np.isnan(p)) or np.any(p < 0):
            raise SampleError("probabilities must be non-negative")
        total = math.fsum(p.tolist())
        if abs(total - 1.0) > PROB_TOL:
            raise SampleError(f"probabilities sum to {total!r}, not 1")
        order = np.argsort(x, kind="stable")
        x, p = x[order], p[order]
        if x.size > 1 and np.any(x[1:] == x[:-1]):
            ux, inv = np.unique(x, return_inverse=True)
            up = np.zeros(ux.size)
            np.add.at(up, inv, p)
            x, p = ux, up
        object.__setattr__(self, "outcomes", _readonly(x))
        object.__setattr__(self, "probabilities", _readonly(p))

    def __len__(self):
        return self.outcomes.size

    def __eq__(self, other):
        if not isinstance(other, EmpiricalDistribution):
            return NotImplemented
        return (np.array_equal(self.outcomes, other.outcomes)
                and np.array_equal(self.probabilities, other.probabilities))

    def __repr__(self):
        return f"EmpiricalDistribution(n={len(self)}, min={self.outcomes[0]:g}, max={self.outcomes[-1]:g})"

    def support(self) -> "EmpiricalDistribution":
        keep = self.probabilities > 0
        if keep.all():
            return self
        return EmpiricalDistribution(self.outcomes[keep], self.probabilities[keep])

    @property
    def mean(self) -> float:
        return math.fsum((self.outcomes * self.probabilities).tolist())

    @property
    def ess_inf(self) -> float:
        return float(self.outcomes[self.probabilities > 0][0])


def from_samples(values: Sequence[float]) -> EmpiricalDistribution:
    """Uniform law over the multiset ``values``."""
    v = np.asarray(values, dtype=float).ravel()
    if v.size == 0:
        raise SampleError("from_samples needs at least one value")
    if not np.all(np.isfinite(v)):
        raise SampleError("sample values must be finite")
    ux, counts = np.unique(v, return_counts=True)
    return EmpiricalDistribution(ux, counts / v.size)


def point_mass(c: float) -> EmpiricalDistribution:
    return EmpiricalDistribution([float(c)], [1.0])


def scale(dist: EmpiricalDistribution, lam: float) -> EmpiricalDistribution:
    lam = float(lam)
    if not (lam > 0 and math.isfinite(lam)):
        raise SampleError(f"scale factor must be > 0, got {lam}")
    return EmpiricalDistribution(dist.outcomes * lam, dist.probabilities)


def shift(dist: EmpiricalDistribution, a: float) -> EmpiricalDistribution:
    return EmpiricalDistribution(dist.outcomes + float(a), dist.probabilities)


def moments(dist: EmpiricalDistribution):
    """Weighted mean, population variance and essential infimum."""
    mean = dist.mean
    var = math.fsum((dist.probabilities * (dist.outcomes - mean) ** 2).tolist())
    return mean, var, dist.ess_inf


def integrated_cdf(dist: EmpiricalDistribution, t) -> np.ndarray:
    """E[(t - X)^+] evaluated at each point of ``t``."""
    t = np.atleast_1d(np.asarray(t, dtype=float))
    gap = np.maximum(t[:, None] - dist.outcomes[None, :], 0.0)
    return gap @ dist.probabilities


def ssd_dominates(a: EmpiricalDistribution, b: EmpiricalDistribution, grid=None) -> bool:
    """True when ``a`` dominates ``b`` in second order.

    The integrated CDFs are compared at every grid point and additionally
    at every support point inside the grid, where the piecewise-linear
    integrated CDFs can change slope; this makes the check exact.
    """
    lo = min(a.outcomes[0], b.outcomes[0])
    hi = max(a.outcomes[-1], b.outcomes[-1])
    if grid is None:
        pts = np.union1d(a.outcomes, b.outcomes)
    else:
        g = np.asarray(grid, dtype=float)
        if g.size == 0 or g.min() > lo or g.max() < hi:
            raise SampleError(f"grid [{g.min() if g.size else None}, {g.max() if g.size else None}] "
                              f"does not cover the supports [{lo}, {hi}]")
        pts = np.union1d(g, np.union1d(a.outcomes, b.outcomes))
    diff = integrated_cdf(a, pts) - integrated_cdf(b, pts)
    return bool(np.all(diff <= PROB_TOL))


@dataclass(frozen=True, eq=False)
class ReturnSeries:
    """Ordered one-step log-returns."""

    values: np.ndarray
    step: str = "1"
    origin: Optional[str] = None

    def __post_init__(self):
        v = np.asarray(self.values, dtype=float).ravel()
        if v.size == 0:
            raise SampleError("a return series needs at least one value")
        if not np.all(np.isfinite(v)):
            raise SampleError("returns must be finite")
        object.__setattr__(self, "values", _readonly(v))

    def __len__(self):
        return self.values.size


def benchmarked_growth(series, lambda_rate: float) -> np.ndarray:
    """Cumulative sums S_t = sum_{s<=t} (r_s - lambda)."""
    r = series.values if isinstance(series, ReturnSeries) else np.asarray(series, dtype=float)
    return np.cumsum(r - float(lambda_rate))


def _parse_float(tok, lineno):
    tok = tok.strip()
    if "," in tok and "." not in tok:
        raise SampleError(f"line {lineno}: decimal comma is not supported: {tok!r}")
    try:
        val = float(tok)
    except ValueError:
        raise SampleError(f"line {lineno}: cannot parse {tok!r} as a number") from None
    if not math.isfinite(val):
        raise SampleError(f"line {lineno}: non-finite value {tok!r}")
    return val


def parse_csv_text(text: str) -> ReturnSeries:
    """Parse one value per line, or ``timestamp,return`` rows.

    A first row whose value column is a non-numeric word is taken as a
    header.  Lines starting with ``#`` and blank lines are skipped.
    """
    values = []
    origin = None
    ncols = None
    seen_data = False
    for lineno, row in enumerate(csv.reader(io.StringIO(text)), start=1):
        if not row or not "".join(row).strip() or row[0].lstrip().startswith("#"):
            continue
        if len(row) > 2:
            raise SampleError(f"line {lineno}: expected 1 or 2 columns, got {len(row)}")
        if ncols is None:
            ncols = len(row)
        elif len(row) != ncols:
            raise SampleError(f"line {lineno}: expected {ncols} columns, got {len(row)}")
        tok = row[-1]
        if not seen_data and not values:
            try:
                float(tok)
            except ValueError:
                if any(ch.isalpha() for ch in tok):
                    seen_data = True  # header row
                    continue
        seen_data = True
        values.append(_parse_float(tok, lineno))
        if ncols == 2 and origin is None:
            origin = row[0].strip()
    if not values:
        raise SampleError("no data rows found")
    return ReturnSeries(values, origin=origin)


def read_csv(path) -> ReturnSeries:
    with open(path, newline="") as fh:
        return parse_csv_text(fh.read())


def write_csv(series, path, header=("step", "return")) -> None:
    """Write ``step,return`` rows with 17 significant digits."""
    values = series.values if isinstance(series, ReturnSeries) else np.asarray(series, dtype=float)
    with open(path, "w", newline="") as fh:
        fh.write(f"{header[0]},{header[1]}\n")
        for i, v in enumerate(values.tolist(), start=1):
            fh.write(f"{i},{v:.17g}\n")
