"""Grid-discretized essential support of functions on subsets of R^n.

A grid function carries cell values on a box together with a domain mask
E; masked-out cells model null sets.  The support of f collects the
cells of E whose ball of radius two cells meets a cell of E where
|f| > tau; the plus-set of E collects every cell whose ball meets E.
With these definitions the product, sum, indicator, and almost-everywhere
laws of the continuum support calculus hold verbatim on grids.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from typing import Optional

import numpy as np

from . import _gridtable
from .errors import ConfigFormatError

BALL_RADIUS_CELLS = 2  # the single discretization scale r = 2h


@dataclass
class GridFunction:
    """Sampled function on a box with a domain mask and zero tolerance."""

    bbox: tuple
    values: np.ndarray
    mask: Optional[np.ndarray] = None
    tau: float = 0.0

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=float)
        if self.mask is None:
            self.mask = np.ones(self.values.shape, dtype=bool)
        else:
            self.mask = np.asarray(self.mask, dtype=bool)
        if self.mask.shape != self.values.shape:
            raise ConfigFormatError("mask and values must share a shape")
        if self.tau < 0:
            raise ConfigFormatError("zero tolerance must be non-negative")
        if len(self.bbox) != self.values.ndim:
            raise ConfigFormatError("bbox rank must match value rank")
        spacings = [(hi - lo) / m for (lo, hi), m in zip(self.bbox, self.values.shape)]
        if max(spacings) > min(spacings) * (1 + 1e-9):
            raise ConfigFormatError("grid spacing must be uniform across axes")

    @property
    def ndim(self) -> int:
        return self.values.ndim

    @classmethod
    def load(cls, path) -> "GridFunction":
        bbox, values, mask, tau = _gridtable.load_grid(path)
        return cls(bbox, values, mask, tau)

    def save(self, path) -> None:
        _gridtable.save_grid(path, self.bbox, self.values, self.mask, self.tau)


def _ball_stencil(ndim: int):
    """Integer offsets within Euclidean distance BALL_RADIUS_CELLS."""
    r = BALL_RADIUS_CELLS
    offsets = []
    for off in itertools.product(range(-r, r + 1), repeat=ndim):
        if sum(o * o for o in off) <= r * r:
            offsets.append(off)
    return offsets


def _shift(mask: np.ndarray, offset) -> np.ndarray:
    """Zero-filled shift of a boolean array by an integer offset."""
    out = mask
    for axis, o in enumerate(offset):
        if o == 0:
            continue
        shifted = np.zeros_like(out)
        src = [slice(None)] * out.ndim
        dst = [slice(None)] * out.ndim
        if o > 0:
            src[axis] = slice(0, out.shape[axis] - o)
            dst[axis] = slice(o, None)
        else:
            src[axis] = slice(-o, None)
            dst[axis] = slice(0, out.shape[axis] + o)
        shifted[tuple(dst)] = out[tuple(src)]
        out = shifted
    return out


def dilate(mask: np.ndarray) -> np.ndarray:
    """Cells whose ball of radius two cells meets the mask."""
    out = np.zeros_like(mask)
    for off in _ball_stencil(mask.ndim):
        out |= _shift(mask, off)
    return out


def erode(mask: np.ndarray) -> np.ndarray:
    """Cells whose ball of radius two cells lies inside the mask."""
    return ~dilate(~mask)


def essential_support(f: GridFunction) -> np.ndarray:
    """Cells of E near which f is not tau-zero on E."""
    nonzero = (np.abs(f.values) > f.tau) & f.mask
    return f.mask & dilate(nonzero)


def plus_set(mask: np.ndarray) -> np.ndarray:
    """Cells every ball around which meets the mask (discrete E+)."""
    return dilate(np.asarray(mask, dtype=bool))


def interior_set(mask: np.ndarray) -> np.ndarray:
    """Discrete interior; satisfies interior <= E+ <= closure."""
    return erode(np.asarray(mask, dtype=bool))


def _violations(bad: np.ndarray, limit: int = 5):
    idx = np.argwhere(bad)
    return [tuple(int(i) for i in row) for row in idx[:limit]]


@dataclass(frozen=True)
class LawReport:
    results: dict  # law name -> (passed, counterexample cells)

    @property
    def all_passed(self) -> bool:
        return all(ok for ok, _ in self.results.values())

    def to_json(self) -> dict:
        return {
            law: {"passed": ok, "counterexamples": [list(c) for c in cells]}
            for law, (ok, cells) in self.results.items()
        }


def check_support_laws(f: GridFunction, g: GridFunction) -> LawReport:
    """Evaluate the support-calculus laws for a pair on a common grid."""
    if f.values.shape != g.values.shape or not np.array_equal(f.mask, g.mask):
        raise ConfigFormatError("support laws need a shared grid and mask")
    E = f.mask
    tau = f.tau
    supp_f = essential_support(f)
    supp_g = essential_support(g)

    results = {}

    fg = GridFunction(f.bbox, f.values * g.values, E, tau)
    bad = essential_support(fg) & ~(supp_f & supp_g)
    results["product"] = (not bad.any(), _violations(bad))

    fpg = GridFunction(f.bbox, f.values + g.values, E, tau)
    bad = essential_support(fpg) & ~(supp_f | supp_g)
    results["sum"] = (not bad.any(), _violations(bad))

    # indicator: supp(chi_F) = F+ intersect E, with F the positive part of f
    F = (f.values > 0) & E
    chi = GridFunction(f.bbox, F.astype(float), E, tau)
    lhs = essential_support(chi)
    rhs = plus_set(F) & E
    bad = lhs ^ rhs
    results["indicator"] = (not bad.any(), _violations(bad))

    # vanishing off the support: |f| <= tau on E minus supp(f)
    bad = (np.abs(f.values) > tau) & E & ~supp_f
    results["vanishing"] = (not bad.any(), _violations(bad))

    # a.e. equality: perturbing f outside the mask leaves the support fixed
    perturbed = f.values.copy()
    perturbed[~E] = perturbed[~E] + 1.0
    f2 = GridFunction(f.bbox, perturbed, E, tau)
    bad = essential_support(f2) ^ supp_f
    results["ae_equality"] = (not bad.any(), _violations(bad))

    return LawReport(results)
