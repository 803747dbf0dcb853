"""The spaces H(Gamma, v) of weighted discrete Hilbert transforms.

A space is fixed by nodes ``gamma_1, ..., gamma_N`` (strictly increasing in
modulus) and positive weights ``v_n``.  Its elements are

    f(z) = sum_n a_n v_n / (z - gamma_n),     ||f||^2 = sum_n |a_n|^2 v_n,

so functions are represented by their coefficient vectors ``a``.  The
upper half-plane is cut into cells ``Omega_n`` by the radii
``m_n = (|gamma_n| + |gamma_{n+1}|) / 2``; the last cell is unbounded.

Cell numbers (``partition_index``, ``basis_fn``) are 1-based to match the
usual labelling of ``Omega_n``; arrays returned by functions are 0-based.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import PoleHit, SpaceError, TooFewPoints
from .numerics import HalfAnnulus
from .symb import Const, Expr, Z

__all__ = [
    "SpacePair",
    "AdmissibilityReport",
    "SplitResult",
    "StarProfile",
    "admissibility_sum",
    "sparseness_ratio",
    "partition_index",
    "cell_region",
    "evaluate",
    "norm_sq",
    "inner",
    "kernel_coeffs",
    "basis_coeffs",
    "basis_fn",
    "kernel_sum_split",
    "star_membership_profile",
    "space_from_dict",
    "space_to_dict",
    "load_space",
]


@dataclass(frozen=True)
class SpacePair:
    """Truncated (Gamma, v) data with declared tail behaviour.

    ``v_bounded`` and ``v_over_gamma_sq_summable`` describe the untruncated
    sequences and only switch on the tail bounds reported by
    :func:`admissibility_sum` and :func:`star_membership_profile`.
    """

    gammas: tuple
    weights: tuple
    v_bounded: bool = False
    v_over_gamma_sq_summable: bool = False

    def __post_init__(self):
        g = tuple(complex(x) for x in self.gammas)
        v = tuple(float(x) for x in self.weights)
        object.__setattr__(self, "gammas", g)
        object.__setattr__(self, "weights", v)
        if not g:
            raise SpaceError("a space needs at least one node")
        if len(g) != len(v):
            raise SpaceError(f"{len(g)} nodes but {len(v)} weights")
        if not all(math.isfinite(x.real) and math.isfinite(x.imag) for x in g):
            raise SpaceError("nodes must be finite")
        if not all(w > 0 and math.isfinite(w) for w in v):
            raise SpaceError("weights must be positive and finite")
        if len(set(g)) != len(g):
            raise SpaceError("nodes must be pairwise distinct")
        mods = [abs(x) for x in g]
        for n in range(len(g) - 1):
            if not mods[n] < mods[n + 1]:
                raise SpaceError(
                    f"|gamma_{n + 1}| = {mods[n]} and |gamma_{n + 2}| = {mods[n + 1]}: "
                    "moduli must be strictly increasing"
                )

    def __len__(self):
        return len(self.gammas)

    @property
    def gamma_array(self) -> np.ndarray:
        return np.array(self.gammas, dtype=complex)

    @property
    def weight_array(self) -> np.ndarray:
        return np.array(self.weights, dtype=float)

    @property
    def partition_radii(self) -> np.ndarray:
        m = np.abs(self.gamma_array)
        return 0.5 * (m[:-1] + m[1:])

    @property
    def cell_edges(self) -> np.ndarray:
        """``[0, m_1, ..., m_{N-1}, inf]``; cell n is ``[edges[n-1], edges[n])``."""
        return np.concatenate([[0.0], self.partition_radii, [math.inf]])

    @property
    def sparseness_q(self) -> float:
        return sparseness_ratio(self) if len(self) > 1 else math.inf

    def scaled_weights(self, factor) -> "SpacePair":
        return SpacePair(self.gammas, tuple(w * factor for w in self.weights),
                         self.v_bounded, self.v_over_gamma_sq_summable)


@dataclass
class AdmissibilityReport:
    value: float
    terms: np.ndarray
    tail_bound: float | None
    admissible: bool | None

    def __float__(self):
        return self.value


@dataclass
class SplitResult:
    exact: float
    split: float
    m: int

    @property
    def ratio(self) -> float:
        return self.exact / self.split

    def __iter__(self):
        yield self.exact
        yield self.split
        yield self.m


@dataclass
class StarProfile:
    partial_sum: float
    tail_bound: float | None

    @property
    def member(self) -> bool | None:
        """True when the modelled tail is finite; None when no tail model applies."""
        return None if self.tail_bound is None else math.isfinite(self.tail_bound)


def admissibility_sum(space: SpacePair) -> AdmissibilityReport:
    """Partial sum of ``v_n / (1 + |gamma_n|^2)`` with a tail diagnostic.

    With ``space.v_bounded`` and sparseness ``q > 1`` the remainder is bounded
    by ``max(v) / (|gamma_N|^2 (q^2 - 1))``.  Otherwise admissibility is
    judged from the decay of the last terms (``None`` for a single term).
    """
    g, v = space.gamma_array, space.weight_array
    terms = v / (1.0 + np.abs(g) ** 2)
    value = float(terms.sum())
    tail = None
    q = space.sparseness_q
    if space.v_bounded and len(space) > 1 and q > 1:
        tail = float(v.max() / (abs(g[-1]) ** 2 * (q * q - 1)))
    if tail is not None:
        admissible = True
    elif len(terms) < 2:
        admissible = None
    else:
        admissible = bool(terms[-1] < terms[-2] and terms[-1] < 0.5 * terms.max())
    return AdmissibilityReport(value, terms, tail, admissible)


def sparseness_ratio(space: SpacePair) -> float:
    """``min_n |gamma_{n+1}| / |gamma_n|``; the sparse theory wants this > 1."""
    if len(space) < 2:
        raise TooFewPoints("sparseness needs at least two nodes")
    m = np.abs(space.gamma_array)
    with np.errstate(divide="ignore"):
        ratios = np.where(m[:-1] > 0, m[1:] / np.where(m[:-1] > 0, m[:-1], 1.0), np.inf)
    return float(ratios.min())


def partition_index(space: SpacePair, z):
    """1-based cell number n with ``z`` in ``Omega_n``; boundaries go outward.

    Vectorized: an array ``z`` gives an integer array.
    """
    idx = np.searchsorted(space.partition_radii, np.abs(np.asarray(z)), side="right") + 1
    return int(idx) if np.ndim(idx) == 0 else idx


def cell_region(space: SpacePair, n: int) -> HalfAnnulus:
    """Half-annulus for cell ``n`` (1-based)."""
    if not 1 <= n <= len(space):
        raise IndexError(f"cell {n} outside 1..{len(space)}")
    edges = space.cell_edges
    return HalfAnnulus(float(edges[n - 1]), float(edges[n]))


def _coeffs(space, a):
    a = np.asarray(a, dtype=complex)
    if a.shape != (len(space),):
        raise ValueError(f"coefficient vector of length {a.size} for a space of size {len(space)}")
    return a


def _check_pole(space, z):
    if np.ndim(z) == 0:
        for n, g in enumerate(space.gammas, 1):
            if complex(z) == g:
                raise PoleHit(f"z coincides with gamma_{n} = {g!r}")


def evaluate(space: SpacePair, a, z):
    """``sum_n a_n v_n / (z - gamma_n)``; vectorized in ``z``."""
    a = _coeffs(space, a)
    _check_pole(space, z)
    z = np.asarray(z, dtype=complex)
    with np.errstate(divide="ignore", invalid="ignore"):
        terms = (a * space.weight_array)[:, None] / (z.reshape(1, -1) - space.gamma_array[:, None])
    out = terms.sum(axis=0).reshape(z.shape)
    return complex(out) if out.ndim == 0 else out


def norm_sq(space: SpacePair, a) -> float:
    a = _coeffs(space, a)
    return float(np.sum(np.abs(a) ** 2 * space.weight_array))


def inner(space: SpacePair, a, b) -> complex:
    """``<f_a, f_b> = sum_n a_n conj(b_n) v_n``."""
    a, b = _coeffs(space, a), _coeffs(space, b)
    return complex(np.sum(a * np.conj(b) * space.weight_array))


def kernel_coeffs(space: SpacePair, lam) -> np.ndarray:
    """Coefficients ``b_n = 1 / (conj(lam) - conj(gamma_n))`` of the kernel at ``lam``."""
    lam = complex(lam)
    _check_pole(space, lam)
    return 1.0 / (np.conj(lam) - np.conj(space.gamma_array))


def basis_coeffs(space: SpacePair, n: int) -> np.ndarray:
    a = np.zeros(len(space), dtype=complex)
    a[n - 1] = 1.0 / math.sqrt(space.weights[n - 1])
    return a


def basis_fn(space: SpacePair, n: int) -> Expr:
    """Orthonormal basis element ``sqrt(v_n) / (z - gamma_n)`` (1-based ``n``)."""
    if not 1 <= n <= len(space):
        raise IndexError(f"basis index {n} outside 1..{len(space)}")
    return Const(math.sqrt(space.weights[n - 1])) / (Z - Const(space.gammas[n - 1]))


def kernel_sum_split(space: SpacePair, z) -> SplitResult:
    """Exact kernel diagonal ``sum v_n/|z-gamma_n|^2`` against its cell-wise splitting.

    For ``z`` in ``Omega_m`` the split is
    ``sum_{n<m} v_n/|z|^2 + v_m/|z-gamma_m|^2 + sum_{n>m} v_n/|gamma_n|^2``.
    """
    z = complex(z)
    _check_pole(space, z)
    g, v = space.gamma_array, space.weight_array
    exact = float(np.sum(v / np.abs(z - g) ** 2))
    m = partition_index(space, z)
    k = m - 1
    split = v[:k].sum() / abs(z) ** 2 + v[k] / abs(z - g[k]) ** 2
    if k + 1 < len(space):
        split += float(np.sum(v[k + 1:] / np.abs(g[k + 1:]) ** 2))
    return SplitResult(exact, float(split), m)


def star_membership_profile(space: SpacePair, z) -> StarProfile:
    """Partial sum of ``v_n / |z - gamma_n|^2`` plus a modelled tail bound.

    The tail model applies when sparseness ``q > 1`` and the space declares
    ``v_n / |gamma_n|^2`` summable: the last two terms of that sequence set a
    geometric rate, and ``|z - gamma_n| >= |gamma_n| / 2`` once
    ``|gamma_n| >= 2|z|``.  An infinite bound means the model does not decay.
    """
    z = complex(z)
    _check_pole(space, z)
    g, v = space.gamma_array, space.weight_array
    partial = float(np.sum(v / np.abs(z - g) ** 2))
    tail = None
    if space.v_over_gamma_sq_summable and len(space) > 1 and space.sparseness_q > 1:
        t = v / np.abs(g) ** 2
        rho = t[-1] / t[-2]
        if rho >= 1:
            tail = math.inf
        else:
            # first modelled node beyond the truncation
            gnext = abs(g[-1]) * space.sparseness_q
            if gnext >= 2 * abs(z):
                tail = float(4 * t[-1] * rho / (1 - rho))
            else:
                tail = math.inf
    return StarProfile(partial, tail)


# ---- config files -----------------------------------------------------------


def space_from_dict(data: dict) -> SpacePair:
    try:
        gammas = [complex(re_, im) for re_, im in data["gammas"]]
        weights = list(data["weights"])
    except (KeyError, TypeError, ValueError) as exc:
        raise SpaceError(f"malformed space config: {exc}") from None
    tail = data.get("tail", {}) or {}
    return SpacePair(tuple(gammas), tuple(weights), bool(tail.get("v_bounded", False)),
                     bool(tail.get("v_over_gamma_sq_summable", False)))


def space_to_dict(space: SpacePair) -> dict:
    return {
        "gammas": [[g.real, g.imag] for g in space.gammas],
        "weights": list(space.weights),
        "tail": {"v_bounded": space.v_bounded,
                 "v_over_gamma_sq_summable": space.v_over_gamma_sq_summable},
    }


def load_space(path) -> SpacePair:
    with open(Path(path)) as fh:
        return space_from_dict(json.load(fh))
