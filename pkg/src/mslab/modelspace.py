"""Model spaces K_I^2 on the upper half-plane and Volterra criteria on them.

Inner functions are finite Blaschke products times a singular atom at
infinity and a unimodular constant:

    I(z) = e^{i theta} e^{i a z} prod_k (z - w_k) / (z - conj(w_k)).

The reproducing kernel of K_I^2 is

    K_w(z) = (i / 2 pi) (1 - conj(I(w)) I(z)) / (z - conj(w)),
    ||K_w||^2 = K_w(w) = (1 - |I(w)|^2) / (4 pi Im w).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy import ndimage

from .errors import ConfigError, Divergent, NonConvergence
from .numerics import (
    DEFAULT_SPEC,
    IntegralResult,
    QuadratureSpec,
    UpperHalfPlane,
    integrate_area,
    integrate_line,
)
from .symb import Expr, differentiate, is_zero, parse_expr

__all__ = [
    "InnerFunction",
    "ModelKernel",
    "CriterionTable",
    "CompactProfile",
    "GridSpec",
    "parse_inner",
    "inner_eval",
    "model_kernel_eval",
    "kernel_norm_sq",
    "kernel_boundary_norm_sq",
    "thm1_bounded_criterion",
    "thm1_compact_profile",
    "thm1_hs_criterion",
    "one_component_diagnostic",
]


@dataclass(frozen=True)
class InnerFunction:
    zeros: tuple = ()
    singular_mass: float = 0.0
    phase: float = 0.0

    def __post_init__(self):
        zs = tuple(complex(w) for w in self.zeros)
        if any(w.imag <= 0 for w in zs):
            raise ValueError("Blaschke zeros must lie in the open upper half-plane")
        if self.singular_mass < 0:
            raise ValueError("singular mass must be >= 0")
        object.__setattr__(self, "zeros", zs)
        object.__setattr__(self, "singular_mass", float(self.singular_mass))
        object.__setattr__(self, "phase", float(self.phase))

    def __call__(self, z):
        z = np.asarray(z, dtype=complex)
        out = np.exp(1j * self.phase) * np.exp(1j * self.singular_mass * z)
        for w in self.zeros:
            out = out * (z - w) / (z - np.conj(w))
        return complex(out) if out.ndim == 0 else out

    def to_config(self) -> str:
        parts = [f"blaschke:{w.real!r},{w.imag!r}" for w in self.zeros]
        parts.append(f"atom:{self.singular_mass!r}")
        parts.append(f"phase:{self.phase!r}")
        return ";".join(parts)


def parse_inner(text: str) -> InnerFunction:
    """Read ``blaschke:<re,im>;...;atom:<a>;phase:<theta>``.

    A bare ``re,im`` segment continues the Blaschke list; ``atom`` and
    ``phase`` default to 0.
    """
    zeros, atom, phase = [], 0.0, 0.0
    for raw in text.split(";"):
        seg = raw.strip()
        if not seg:
            continue
        key, sep, val = seg.partition(":")
        if not sep:
            key, val = "blaschke", seg
        key = key.strip().lower()
        try:
            if key == "blaschke":
                re_, im = (float(s) for s in val.split(","))
                zeros.append(complex(re_, im))
            elif key == "atom":
                atom = float(val)
            elif key == "phase":
                phase = float(val)
            else:
                raise ConfigError(f"unknown inner-function field {key!r}")
        except ValueError as exc:
            if isinstance(exc, ConfigError):
                raise
            raise ConfigError(f"bad inner-function segment {seg!r}") from None
    try:
        return InnerFunction(tuple(zeros), atom, phase)
    except ValueError as exc:
        raise ConfigError(str(exc)) from None


def inner_eval(inner: InnerFunction, z):
    return inner(z)


def kernel_norm_sq(inner: InnerFunction, w) -> float:
    """Closed form of ``K_w(w)``."""
    w = complex(w)
    if w.imag <= 0:
        raise ValueError("kernel point must lie in the upper half-plane")
    return (1.0 - abs(inner(w)) ** 2) / (4 * math.pi * w.imag)


def model_kernel_eval(inner: InnerFunction, w, z, normalized: bool = False):
    """``K_w(z)``, or ``k_w(z) = K_w(z) / sqrt(K_w(w))`` when ``normalized``."""
    w = complex(w)
    z = np.asarray(z, dtype=complex)
    out = (1j / (2 * math.pi)) * (1 - np.conj(inner(w)) * inner(z)) / (z - np.conj(w))
    if normalized:
        out = out / math.sqrt(kernel_norm_sq(inner, w))
    return complex(out) if out.ndim == 0 else out


def kernel_boundary_norm_sq(inner: InnerFunction, w, spec: QuadratureSpec | None = None,
                            normalized: bool = False) -> IntegralResult:
    """Quadrature of ``int_R |K_w(x)|^2 dx`` (or of ``|k_w|^2``).

    On the real line ``|I(x)| = 1``, so
    ``|1 - conj(I(w)) I(x)|^2 = 1 + |I(w)|^2 - 2 Re(conj(I(w)) I(x))``.
    The smooth and the oscillating parts are integrated separately: the
    smooth part has a plain 1/x^2 tail, and the oscillating part's tail
    cancels to O(1/R^2), which keeps exp(iaz) factors cheap.
    """
    spec = spec or DEFAULT_SPEC
    w = complex(w)
    if w.imag <= 0:
        raise ValueError("kernel point must lie in the upper half-plane")
    c = np.conj(inner(w))
    scale = 1.0 / (4 * math.pi**2)
    if normalized:
        scale /= kernel_norm_sq(inner, w)
    wbar = w.conjugate()
    smooth = integrate_line(lambda z: scale * (1 + abs(c) ** 2) / np.abs(z - wbar) ** 2, 0.0,
                            None, spec)
    if c == 0:
        return smooth
    wave = integrate_line(lambda z: -2 * scale * np.real(c * inner(z)) / np.abs(z - wbar) ** 2,
                          0.0, None, spec)
    return IntegralResult(float(smooth.value) + float(wave.value),
                          float(smooth.error_estimate) + float(wave.error_estimate),
                          smooth.converged and wave.converged,
                          smooth.evaluations + wave.evaluations)


@dataclass(frozen=True)
class ModelKernel:
    inner: InnerFunction
    w: complex

    def __call__(self, z):
        return model_kernel_eval(self.inner, self.w, z)

    @property
    def norm_sq(self) -> float:
        return kernel_norm_sq(self.inner, self.w)

    def normalized(self, z):
        return model_kernel_eval(self.inner, self.w, z, normalized=True)


@dataclass
class CriterionTable:
    """Per-point criterion values; ``converged[i]`` False marks a truncated estimate."""

    points: list
    values: list
    errors: list
    converged: list
    messages: list = field(default_factory=list)

    @property
    def sup(self) -> float:
        if not self.values:
            return 0.0
        if not all(self.converged):
            return math.inf
        return max(self.values)

    def __iter__(self):
        yield self.sup
        yield self


@dataclass
class CompactProfile:
    table: CriterionTable
    consistent: bool
    reason: str


def _resolve(g) -> Expr:
    return parse_expr(g) if isinstance(g, str) else g


def _q_value(inner, gprime, w, spec):
    knorm = kernel_norm_sq(inner, w)
    wbar = np.conj(w)
    iw = np.conj(inner(w))

    def h(z):
        k = (1 - iw * inner(z)) / (z - wbar)
        return np.abs(k) ** 2 / (4 * math.pi**2 * knorm) * np.abs(gprime(z)) ** 2 * z.imag

    local = spec.replace(tail_radius=max(spec.tail_radius, 2 * abs(w)))
    return integrate_area(h, UpperHalfPlane(), local, raise_on_failure=False)


def thm1_bounded_criterion(inner: InnerFunction, g, w_grid, spec: QuadratureSpec | None = None
                           ) -> CriterionTable:
    """``Q(w) = int |k_w|^2 |g'|^2 Im z dA`` on each grid point; ``sup`` over the grid.

    Non-converged points (typically divergent integrals) are kept in the
    table with their truncated estimate and make ``sup`` infinite.
    """
    spec = spec or DEFAULT_SPEC
    gprime = differentiate(_resolve(g))
    points = [complex(w) for w in w_grid]
    if any(w.imag <= 0 for w in points):
        raise ValueError("grid points must satisfy Im w > 0")
    table = CriterionTable(points, [], [], [])
    for w in points:
        if is_zero(gprime):
            table.values.append(0.0)
            table.errors.append(0.0)
            table.converged.append(True)
            continue
        res = _q_value(inner, gprime, w, spec)
        table.values.append(float(res.value))
        table.errors.append(float(res.error_estimate))
        table.converged.append(bool(res.converged))
        if not res.converged:
            table.messages.append(f"Q({w!r}) did not converge; truncated estimate kept")
    return table


def thm1_compact_profile(inner: InnerFunction, g, w_ray, spec: QuadratureSpec | None = None,
                         threshold: float = 1e-2) -> CompactProfile:
    """``Q(w)`` along ``w_ray`` (ordered by increasing ``|w|``) with a tail verdict.

    Consistent with compactness when every value converged, the last third
    of the profile is non-increasing and the final value is below
    ``threshold`` times the largest.  The verdict speaks only for this ray.
    """
    table = thm1_bounded_criterion(inner, g, w_ray, spec)
    vals = np.array(table.values)
    if vals.size == 0 or np.all(vals == 0):
        return CompactProfile(table, True, "identically zero profile")
    if not all(table.converged):
        return CompactProfile(table, False, "criterion integral diverges on the ray")
    tail = vals[-max(2, len(vals) // 3):]
    monotone = bool(np.all(np.diff(tail) <= 1e-12 * vals.max()))
    small = bool(vals[-1] <= threshold * vals.max())
    if monotone and small:
        return CompactProfile(table, True, "tail decreasing below threshold")
    return CompactProfile(table, False, "tail not decreasing" if not monotone
                          else "tail above threshold")


def thm1_hs_criterion(inner: InnerFunction, g, spec: QuadratureSpec | None = None) -> float:
    """``int |g'(z)|^2 (1 - |I(z)|^2) dA`` over the upper half-plane.

    Raises
    ------
    Divergent
        The improper tail never settles.
    """
    spec = spec or DEFAULT_SPEC
    gprime = differentiate(_resolve(g))
    if is_zero(gprime):
        return 0.0

    def h(z):
        return np.abs(gprime(z)) ** 2 * (1 - np.abs(inner(z)) ** 2)

    try:
        return float(integrate_area(h, UpperHalfPlane(), spec).value)
    except Divergent:
        raise
    except NonConvergence as exc:
        raise Divergent(f"Hilbert-Schmidt integral did not converge: {exc}", exc.result) from exc


@dataclass(frozen=True)
class GridSpec:
    x0: float = -10.0
    x1: float = 10.0
    y0: float = 1e-3
    y1: float = 10.0
    nx: int = 400
    ny: int = 200


def one_component_diagnostic(inner: InnerFunction, delta: float,
                             grid: GridSpec | None = None) -> int:
    """Number of 8-connected components of ``{|I| < delta}`` on a sample grid.

    A sampling diagnostic: thin necks or components smaller than the grid
    spacing are not resolved.
    """
    if not 0 < delta < 1:
        raise ValueError("delta must lie in (0, 1)")
    grid = grid or GridSpec()
    xs = np.linspace(grid.x0, grid.x1, grid.nx)
    ys = np.linspace(grid.y0, grid.y1, grid.ny)
    zz = xs[None, :] + 1j * ys[:, None]
    mask = np.abs(inner(zz)) < delta
    _, count = ndimage.label(mask, structure=np.ones((3, 3), dtype=int))
    return int(count)
