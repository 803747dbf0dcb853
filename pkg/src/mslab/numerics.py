"""Adaptive quadrature on half-plane regions, lines and segments.

Every area, line and path integral in the package goes through this module.
The workhorse is a batched, vectorized G7/K15 Gauss-Kronrod rule (tensor
product in 2-D).  Integrands are vectorized callables ``h(z)`` receiving a
1-D complex array and returning either an array of the same length or an
array of shape ``(k, len(z))`` for a vector of ``k`` integrals that share
one adaptive mesh.

Improper domains are truncated and extended by doubling: pieces
``[R, 2R], [2R, 4R], ...`` are added until two consecutive pieces are both
negligible and non-increasing.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from .errors import Divergent, NonConvergence, SingularityOnGrid, SingularityOnPath

__all__ = [
    "QuadratureSpec",
    "IntegralResult",
    "SupResult",
    "Rectangle",
    "HalfAnnulus",
    "UpperHalfPlane",
    "as_complex",
    "integrate_area",
    "integrate_line",
    "sup_over_y",
    "integrate_path",
]

# 15-point Kronrod abscissae on [-1, 1]; the odd positions are the 7-point Gauss nodes.
_XK_POS = np.array([
    0.991455371120812639206854697526329,
    0.949107912342758524526189684047851,
    0.864864423359769072789712788640926,
    0.741531185599394439863864773280788,
    0.586087235467691130294144845693013,
    0.405845151377397166906606412076961,
    0.207784955007898467600689403773245,
    0.0,
])
_WK_POS = np.array([
    0.022935322010529224963732008058970,
    0.063092092629978553290700663189204,
    0.104790010322250183839876322541518,
    0.140653259715525918745189590510238,
    0.169004726639267902826583426598550,
    0.190350578064785409913256402421014,
    0.204432940075298892414161999234649,
    0.209482141084727828012999174891714,
])
_WG_POS = np.array([
    0.129484966168869693270611432679082,
    0.279705391489276667901467771423780,
    0.381830050505118944950369775488975,
    0.417959183673469387755102040816327,
])
XK = np.concatenate([-_XK_POS[:-1], _XK_POS[::-1]])
WK = np.concatenate([_WK_POS[:-1], _WK_POS[::-1]])
WG = np.concatenate([_WG_POS[:-1], _WG_POS[::-1]])
_NK = XK.size

# cap on scalars held per evaluation chunk
_CHUNK_SCALARS = 2_000_000


@dataclass(frozen=True)
class QuadratureSpec:
    """Tolerances and budgets for the adaptive engine."""

    rel_tol: float = 1e-6
    abs_tol: float = 1e-9
    max_depth: int = 24
    tail_radius: float = 1.0
    tail_doubling_rounds: int = 48
    max_cells: int = 400_000
    exclusion_radius: float = 1e-6

    def __post_init__(self):
        if not (self.rel_tol > 0 and self.abs_tol > 0):
            raise ValueError("rel_tol and abs_tol must be positive")
        if self.max_depth < 1:
            raise ValueError("max_depth must be >= 1")
        if not self.tail_radius > 0:
            raise ValueError("tail_radius must be positive")
        if self.tail_doubling_rounds < 1:
            raise ValueError("tail_doubling_rounds must be >= 1")

    def replace(self, **changes) -> "QuadratureSpec":
        from dataclasses import replace

        return replace(self, **changes)


DEFAULT_SPEC = QuadratureSpec()


@dataclass
class IntegralResult:
    value: float | complex | np.ndarray
    error_estimate: float | np.ndarray
    converged: bool
    evaluations: int
    cells: int = 0
    # per-component convergence for vector integrands over improper domains
    component_converged: np.ndarray | None = None

    def __float__(self):
        return float(np.real(self.value))


@dataclass
class SupResult:
    """Outcome of :func:`sup_over_y`.

    ``tail_undecided`` is set when F is still increasing at the largest
    probed y (the supremum may lie beyond the scanned range).
    """

    value: float
    arg: float
    tail_undecided: bool = False
    probes: list = field(default_factory=list)

    def __iter__(self):
        # allows ``value, arg = sup_over_y(...)``
        yield self.value
        yield self.arg


@dataclass(frozen=True)
class Rectangle:
    x0: float
    x1: float
    y0: float
    y1: float

    def __post_init__(self):
        if not (self.x0 < self.x1 and 0 <= self.y0 < self.y1):
            raise ValueError(f"invalid rectangle {self}")


@dataclass(frozen=True)
class HalfAnnulus:
    """``{z : r_lo <= |z| < r_hi, Im z >= 0}``; ``r_hi`` may be ``inf``."""

    r_lo: float
    r_hi: float

    def __post_init__(self):
        if not (0 <= self.r_lo < self.r_hi):
            raise ValueError(f"invalid half-annulus {self}")

    @property
    def improper(self) -> bool:
        return math.isinf(self.r_hi)


@dataclass(frozen=True)
class UpperHalfPlane:
    improper = True


def as_complex(value, name="value") -> complex:
    """Coerce to a finite Python complex."""
    z = complex(value)
    if not (math.isfinite(z.real) and math.isfinite(z.imag)):
        raise ValueError(f"{name} must be finite, got {z!r}")
    return z


# --------------------------------------------------------------------------
# core adaptive engine
# --------------------------------------------------------------------------


def _as_components(f, n):
    f = np.asarray(f)
    if f.ndim == 0:
        f = np.broadcast_to(f, (n,))
    if f.ndim == 1:
        return f[None, :], True
    return f.reshape(f.shape[0], n), False


class _Integrator:
    """Batched adaptive G7/K15 over axis-aligned parameter boxes.

    ``cells`` rows are ``(a0, a1)`` in 1-D and ``(a0, a1, b0, b1)`` in 2-D.
    ``mapping(u, v)`` returns ``(z, jacobian)`` for parameter arrays.
    """

    def __init__(self, h, ndim, mapping, exclusions, spec):
        self.h = h
        self.ndim = ndim
        self.mapping = mapping
        self.exclusions = exclusions
        self.spec = spec
        self.scalar = None
        self.evaluations = 0

    def _eval_chunk(self, cells):
        c = cells.shape[0]
        mu = 0.5 * (cells[:, 0] + cells[:, 1])
        hu = 0.5 * (cells[:, 1] - cells[:, 0])
        u = mu[:, None] + hu[:, None] * XK[None, :]
        if self.ndim == 1:
            z, jac = self.mapping(u, None)
            scale = jac * hu[:, None]
        else:
            mv = 0.5 * (cells[:, 2] + cells[:, 3])
            hv = 0.5 * (cells[:, 3] - cells[:, 2])
            v = mv[:, None] + hv[:, None] * XK[None, :]
            z, jac = self.mapping(u[:, :, None], v[:, None, :])
            scale = np.broadcast_to(jac * (hu * hv)[:, None, None], z.shape)
        zf = np.ascontiguousarray(z).reshape(-1)
        with np.errstate(all="ignore"):
            raw = self.h(zf)
        f, scalar = _as_components(raw, zf.size)
        if self.scalar is None:
            self.scalar = scalar
        mask = None
        for centre, radius in self.exclusions:
            hit = np.abs(zf - centre) < radius
            mask = hit if mask is None else (mask | hit)
        if mask is not None and mask.any():
            f = np.where(mask[None, :], 0, f)
        if not np.all(np.isfinite(f)):
            bad = zf[~np.all(np.isfinite(f), axis=0)][0]
            raise SingularityOnGrid(f"integrand is not finite at z = {complex(bad)!r}")
        self.evaluations += zf.size
        k = f.shape[0]
        if self.ndim == 1:
            f = f.reshape(k, c, _NK) * scale[None]
            kron = f @ WK
            gauss = f[:, :, 1::2] @ WG
        else:
            f = f.reshape(k, c, _NK, _NK) * scale[None]
            kron = np.einsum("kcij,i,j->kc", f, WK, WK)
            gauss = np.einsum("kcij,i,j->kc", f[:, :, 1::2, 1::2], WG, WG)
        return kron, np.abs(kron - gauss)

    def evaluate(self, cells):
        out_v, out_e = [], []
        per_cell = _NK**self.ndim
        step = 64
        start = 0
        while start < cells.shape[0]:
            v, e = self._eval_chunk(cells[start:start + step])
            out_v.append(v)
            out_e.append(e)
            start += step
            step = max(16, _CHUNK_SCALARS // (per_cell * v.shape[0]))
        return np.concatenate(out_v, axis=1), np.concatenate(out_e, axis=1)

    def split(self, cells):
        if self.ndim == 1:
            mid = 0.5 * (cells[:, 0] + cells[:, 1])
            left = np.stack([cells[:, 0], mid], axis=1)
            right = np.stack([mid, cells[:, 1]], axis=1)
            return np.concatenate([left, right]), 2
        mu = 0.5 * (cells[:, 0] + cells[:, 1])
        mv = 0.5 * (cells[:, 2] + cells[:, 3])
        a0, a1, b0, b1 = cells.T
        kids = [
            np.stack([a0, mu, b0, mv], axis=1),
            np.stack([mu, a1, b0, mv], axis=1),
            np.stack([a0, mu, mv, b1], axis=1),
            np.stack([mu, a1, mv, b1], axis=1),
        ]
        return np.concatenate(kids), 4

    def run(self, boxes, abs_floor, rel_tol):
        """Refine until sum of normalized cell errors <= 1.

        Returns ``(value[k], error[k], converged, ncells)``.
        """
        spec = self.spec
        cells = np.asarray(boxes, dtype=float)
        depth = np.zeros(cells.shape[0], dtype=int)
        val, err = self.evaluate(cells)
        converged = False
        while True:
            total = val.sum(axis=1)
            tol = np.maximum(abs_floor, rel_tol * np.abs(total))
            e = (err / tol[:, None]).max(axis=0)
            if e.sum() <= 1.0:
                converged = True
                break
            splittable = depth < spec.max_depth
            if not splittable.any() or e[~splittable].sum() > 1.0:
                break
            score = np.where(splittable, e, -1.0)
            order = np.argsort(-score, kind="stable")
            remaining = e.sum() - np.cumsum(score[order])
            count = int(np.searchsorted(-remaining, -0.5)) + 1
            count = min(count, int(splittable.sum()))
            pick = order[:count]
            if cells.shape[0] + 3 * count > spec.max_cells:
                break
            kids, nk = self.split(cells[pick])
            kv, ke = self.evaluate(kids)
            keep = np.ones(cells.shape[0], dtype=bool)
            keep[pick] = False
            cells = np.concatenate([cells[keep], kids])
            depth = np.concatenate([depth[keep], np.tile(depth[pick] + 1, nk)])
            val = np.concatenate([val[:, keep], kv], axis=1)
            err = np.concatenate([err[:, keep], ke], axis=1)
        order = np.lexsort(cells.T[::-1])
        total = val[:, order].sum(axis=1)
        return total, err.sum(axis=1), converged, cells.shape[0]


def _finish(values, errors, scalar, real):
    if real:
        values = values.real
    if scalar:
        return values[0], float(errors[0])
    return values, errors


def _is_real(result):
    return not np.iscomplexobj(result)


def _normalize_exclusions(exclusions, spec):
    out = []
    for item in exclusions or ():
        if isinstance(item, (tuple, list)):
            centre, radius = item
        else:
            centre, radius = item, spec.exclusion_radius
        out.append((complex(centre), float(radius)))
    return out


def _cartesian(u, v):
    return u + 1j * v, np.ones_like(u + v)


def _polar(u, v):
    return u * np.exp(1j * v), u + 0 * v


def _annulus_boxes(r_lo, r_hi):
    if r_lo == 0:
        radii = [0.0, r_hi]
    else:
        n = max(1, math.ceil(math.log2(r_hi / r_lo)))
        radii = list(np.geomspace(r_lo, r_hi, n + 1))
    thetas = np.linspace(0.0, math.pi, 3)
    return [(a, b, c, d) for a, b in zip(radii, radii[1:]) for c, d in zip(thetas, thetas[1:])]


def _rect_boxes(rect):
    w, hgt = rect.x1 - rect.x0, rect.y1 - rect.y0
    nx = int(min(16, max(1, round(w / hgt))))
    ny = int(min(16, max(1, round(hgt / w))))
    xs = np.linspace(rect.x0, rect.x1, nx + 1)
    ys = np.linspace(rect.y0, rect.y1, ny + 1)
    return [(a, b, c, d) for a, b in zip(xs, xs[1:]) for c, d in zip(ys, ys[1:])]


class _Tail:
    """Accumulates doubling pieces and decides when the tail is negligible."""

    def __init__(self, spec, name):
        self.spec = spec
        self.name = name
        self.total = None
        self.error = None
        self.history = []
        self.converged = True
        self.evaluations = 0
        self.cells = 0

    def add(self, value, error, converged, evaluations, cells):
        value = np.atleast_1d(np.asarray(value))
        error = np.atleast_1d(np.asarray(error, dtype=float))
        if self.total is None:
            self.total = np.zeros_like(value)
            self.error = np.zeros_like(error)
        self.total = self.total + value
        self.error = self.error + error
        self.history.append(np.abs(value))
        self.converged &= converged
        self.evaluations += evaluations
        self.cells += cells

    def component_settled(self):
        if len(self.history) < 3:
            return np.zeros(self.total.shape, dtype=bool)
        tol = np.maximum(self.spec.abs_tol, self.spec.rel_tol * np.abs(self.total))
        last, prev, before = self.history[-1], self.history[-2], self.history[-3]
        small = (last <= 0.25 * tol) & (prev <= 0.25 * tol)
        decaying = (last <= prev * (1 + 1e-12) + 1e-300) & (prev <= before * (1 + 1e-12) + 1e-300)
        return small & decaying

    def settled(self):
        return bool(np.all(self.component_settled()))

    def tail_estimate(self):
        last, prev = self.history[-1], self.history[-2]
        with np.errstate(all="ignore"):
            ratio = np.where(prev > 0, last / prev, 0.0)
        ratio = np.clip(ratio, 0.0, 0.9)
        return last * ratio / (1 - ratio)


def _tail_result(tail, scalar, real, raise_on_failure, settled):
    spec = tail.spec
    error = tail.error + tail.tail_estimate()
    tol = np.maximum(spec.abs_tol, spec.rel_tol * np.abs(tail.total))
    per = tail.component_settled() & (error <= tol) & tail.converged
    ok = settled and bool(np.all(per))
    value, err = _finish(tail.total, error, scalar, real)
    res = IntegralResult(value, err, ok, tail.evaluations, tail.cells, per)
    if not settled and raise_on_failure:
        raise Divergent(f"{tail.name}: tail did not stabilize after "
                        f"{spec.tail_doubling_rounds} doublings", res)
    if not ok and raise_on_failure:
        raise NonConvergence(f"{tail.name}: error budget exhausted", res)
    return res


# --------------------------------------------------------------------------
# public operations
# --------------------------------------------------------------------------


def integrate_area(
    h: Callable,
    region,
    spec: QuadratureSpec | None = None,
    exclusions: Sequence = (),
    raise_on_failure: bool = True,
) -> IntegralResult:
    """Integrate ``h`` against plane Lebesgue measure over ``region``.

    Parameters
    ----------
    h : callable
        Vectorized integrand of a complex array.  May return shape
        ``(k, n)`` to integrate ``k`` functions on one adaptive mesh.
    region : Rectangle | HalfAnnulus | UpperHalfPlane
    spec : QuadratureSpec, optional
    exclusions : sequence
        Points (radius ``spec.exclusion_radius``) or ``(centre, radius)``
        pairs; integrand values inside these discs are dropped.
    raise_on_failure : bool
        When False a non-converged result is returned with
        ``converged=False`` instead of raising.

    Raises
    ------
    NonConvergence
        Cell or depth budget exhausted (``Divergent`` if an improper tail
        never settles).
    SingularityOnGrid
        ``h`` produced a non-finite value outside every exclusion disc.
    """
    spec = spec or DEFAULT_SPEC
    excl = _normalize_exclusions(exclusions, spec)

    if isinstance(region, Rectangle):
        return _proper(h, _rect_boxes(region), _cartesian, spec, excl, raise_on_failure)
    if isinstance(region, HalfAnnulus) and not region.improper:
        return _proper(h, _annulus_boxes(region.r_lo, region.r_hi), _polar, spec, excl,
                       raise_on_failure)
    if isinstance(region, (HalfAnnulus, UpperHalfPlane)):
        r_lo = region.r_lo if isinstance(region, HalfAnnulus) else 0.0
        return _improper_area(h, r_lo, spec, excl, raise_on_failure)
    raise TypeError(f"unsupported region {region!r}")


def _proper(h, boxes, mapping, spec, excl, raise_on_failure, abs_floor=None):
    eng = _Integrator(h, 2, mapping, excl, spec)
    value, err, ok, ncells = eng.run(boxes, spec.abs_tol if abs_floor is None else abs_floor,
                                     spec.rel_tol)
    out_value, out_err = _finish(value, err, eng.scalar, _is_real(value))
    res = IntegralResult(out_value, out_err, ok, eng.evaluations, ncells)
    if not ok and raise_on_failure:
        raise NonConvergence("area quadrature budget exhausted", res)
    return res


def _improper_area(h, r_lo, spec, excl, raise_on_failure):
    tail = _Tail(spec, "area integral")
    floor = spec.abs_tol / (2 * spec.tail_doubling_rounds)
    if r_lo == 0:
        edges = [0.0, spec.tail_radius]
    else:
        edges = [r_lo, 2 * r_lo]
    scalar, real = True, True
    settled = False
    for _ in range(spec.tail_doubling_rounds):
        a, b = edges[-2], edges[-1]
        eng = _Integrator(h, 2, _polar, excl, spec)
        value, err, ok, ncells = eng.run(_annulus_boxes(a, b), floor, 0.5 * spec.rel_tol)
        scalar, real = eng.scalar, real and _is_real(value)
        tail.add(value, err, ok, eng.evaluations, ncells)
        if tail.settled():
            settled = True
            break
        edges.append(2 * b)
    return _tail_result(tail, scalar, real, raise_on_failure, settled)


def _line_pieces(lo, hi, spec):
    """Finite core interval plus generators of outward doubling pieces."""
    t = spec.tail_radius
    if math.isinf(lo) and math.isinf(hi):
        core = (-t, t)
    elif math.isinf(hi):
        core = (lo, lo + max(t, abs(lo)))
    elif math.isinf(lo):
        core = (hi - max(t, abs(hi)), hi)
    else:
        core = (lo, hi)
    return core, math.isinf(lo), math.isinf(hi)


def _line_boxes(a, b, n=4):
    xs = np.linspace(a, b, n + 1)
    return list(zip(xs[:-1], xs[1:]))


def integrate_line(
    h: Callable,
    y: float = 0.0,
    domain: tuple[float, float] | None = None,
    spec: QuadratureSpec | None = None,
    raise_on_failure: bool = True,
) -> IntegralResult:
    """Integrate ``x -> h(x + i y)`` over ``domain`` (default the real line).

    Either end of ``domain`` may be infinite; infinite ends are handled by
    doubling pieces outward from a core interval of half-width
    ``spec.tail_radius``.
    """
    spec = spec or DEFAULT_SPEC
    y = float(y)
    lo, hi = (-math.inf, math.inf) if domain is None else (float(domain[0]), float(domain[1]))
    if not lo < hi:
        if lo == hi:
            return IntegralResult(0.0, 0.0, True, 0, 0)
        raise ValueError("domain must satisfy lo <= hi")

    def mapping(u, _):
        return u + 1j * y, np.ones_like(u)

    core, left, right = _line_pieces(lo, hi, spec)
    eng = _Integrator(h, 1, mapping, (), spec)
    if not (left or right):
        value, err, ok, ncells = eng.run(_line_boxes(*core), spec.abs_tol, spec.rel_tol)
        out_value, out_err = _finish(value, err, eng.scalar, _is_real(value))
        res = IntegralResult(out_value, out_err, ok, eng.evaluations, ncells)
        if not ok and raise_on_failure:
            raise NonConvergence("line quadrature budget exhausted", res)
        return res

    tail = _Tail(spec, "line integral")
    floor = spec.abs_tol / (4 * spec.tail_doubling_rounds)
    value, err, ok, ncells = eng.run(_line_boxes(*core), floor, 0.5 * spec.rel_tol)
    real = _is_real(value)
    tail.add(value, err, ok, eng.evaluations, ncells)
    width = core[1] - core[0]
    a_left, b_right = core
    settled = False
    for k in range(spec.tail_doubling_rounds):
        step = width * 2.0**k
        piece = 0.0
        boxes = []
        if right:
            boxes.append((b_right, b_right + step))
        if left:
            boxes.append((a_left - step, a_left))
        eng = _Integrator(h, 1, mapping, (), spec)
        boxes = [bb for (a, b) in boxes for bb in _line_boxes(a, b, 2)]
        value, err, ok, ncells = eng.run(boxes, floor, 0.5 * spec.rel_tol)
        real = real and _is_real(value)
        piece = value
        tail.add(piece, err, ok, eng.evaluations, ncells)
        b_right += step
        a_left -= step
        if tail.settled():
            settled = True
            break
    return _tail_result(tail, eng.scalar, real, raise_on_failure, settled)


def _golden_max(F, a, b, fa_fb, xtol, record):
    """Golden-section search for a maximum of F on [a, b]."""
    invphi = (math.sqrt(5) - 1) / 2
    c = b - invphi * (b - a)
    d = a + invphi * (b - a)
    fc, fd = record(c), record(d)
    while abs(b - a) > xtol * (1 + abs(a) + abs(b)):
        if fc >= fd:
            b, d, fd = d, c, fc
            c = b - invphi * (b - a)
            fc = record(c)
        else:
            a, c, fc = c, d, fd
            d = a + invphi * (b - a)
            fd = record(d)


def sup_over_y(
    F: Callable[[float], float],
    y_max_hint: float = 1.0,
    spec: QuadratureSpec | None = None,
    *,
    ceiling: float | None = None,
    levels_below: int = 16,
    levels_above: int = 2,
    refine: int = 3,
    xtol: float = 1e-10,
) -> SupResult:
    """Estimate ``sup_{y >= 0} F(y)``.

    F is probed on ``{0} U {y_max_hint * 2**(k/2)}`` for
    ``-2*levels_below <= k <= 2*levels_above``; the ``refine`` best local
    maxima of that grid are polished by golden-section search inside their
    neighbouring grid points.

    Raises
    ------
    Divergent
        Some probe exceeded ``ceiling``, or F itself failed to converge at a
        probe while a ceiling was set (a blow-up is then presumed).
    """
    if not y_max_hint > 0:
        raise ValueError("y_max_hint must be positive")
    probes: list[tuple[float, float]] = []

    def record(y):
        try:
            val = float(F(y))
        except (NonConvergence, SingularityOnGrid) as exc:
            if ceiling is None:
                raise
            raise Divergent(f"F failed to converge at y = {y:.12g}; treated as divergent",
                            arg=y, value=math.inf) from exc
        probes.append((y, val))
        if ceiling is not None and not val <= ceiling:
            raise Divergent(f"F({y:.12g}) = {val:.6g} exceeds ceiling {ceiling:.6g}",
                            arg=y, value=val)
        return val

    ks = range(-2 * levels_below, 2 * levels_above + 1)
    ys = [0.0] + [y_max_hint * 2.0 ** (k / 2) for k in ks]
    vals = [record(y) for y in ys]

    n = len(ys)
    peaks = [i for i in range(n)
             if (i == 0 or vals[i] >= vals[i - 1]) and (i == n - 1 or vals[i] >= vals[i + 1])]
    peaks.sort(key=lambda i: -vals[i])
    for i in peaks[:refine]:
        a = ys[max(i - 1, 0)]
        b = ys[min(i + 1, n - 1)]
        if b > a:
            _golden_max(F, a, b, None, xtol, record)

    best_y, best_v = max(probes, key=lambda p: p[1])
    return SupResult(best_v, best_y, tail_undecided=vals[-1] > vals[-2], probes=probes)


def _segment_hits_pole(a, b, pole):
    d = b - a
    t = ((pole - a) * d.conjugate()).real / abs(d) ** 2
    t = min(1.0, max(0.0, t))
    return abs(a + t * d - pole) <= 1e-12 * (1 + abs(pole))


def _numeric_pole_on_segment(den, a, b):
    ts = np.linspace(0.0, 1.0, 4097)
    with np.errstate(all="ignore"):
        vals = np.abs(np.asarray(den(a + ts * (b - a))) + 0 * ts)
    if not np.all(np.isfinite(vals)):
        return True
    scale = vals.max() or 1.0
    i = int(np.argmin(vals))
    if vals[i] > 1e-3 * scale:
        return False
    from scipy.optimize import minimize_scalar

    lo, hi = ts[max(i - 1, 0)], ts[min(i + 1, ts.size - 1)]
    best = minimize_scalar(lambda t: abs(complex(den(a + t * (b - a)))), bounds=(lo, hi),
                           method="bounded", options={"xatol": 1e-14})
    # bounded Brent stops near sqrt(eps) in t, so an exact sample hit counts too
    return min(best.fun, vals[i]) <= 1e-7 * scale


def integrate_path(f, gprime, z_end, base=0j, spec: QuadratureSpec | None = None,
                   via: Sequence = ()) -> complex:
    """Integral of ``f(w) g'(w) dw`` along the polyline base -> via... -> z_end.

    Raises
    ------
    SingularityOnPath
        A registered or numerically located pole of ``f`` or ``gprime``
        lies on the path.
    """
    from .symb import denominators, poles

    spec = spec or DEFAULT_SPEC
    points = [as_complex(base, "base")] + [as_complex(p, "via") for p in via]
    points.append(as_complex(z_end, "z_end"))
    known = list(poles(f)) + list(poles(gprime))
    dens = list(denominators(f)) + list(denominators(gprime))
    total = 0j
    for a, b in zip(points, points[1:]):
        if a == b:
            continue
        for p in known:
            if _segment_hits_pole(a, b, p):
                raise SingularityOnPath(f"pole {p!r} lies on segment {a!r} -> {b!r}")
        for den in dens:
            if _numeric_pole_on_segment(den, a, b):
                raise SingularityOnPath(f"denominator {den} vanishes on segment {a!r} -> {b!r}")
        d = b - a

        def integrand(t, a=a, d=d):
            w = a + t.real * d
            return np.asarray(f(w)) * np.asarray(gprime(w)) * d + 0j * t

        try:
            res = integrate_line(integrand, 0.0, (0.0, 1.0), spec)
        except SingularityOnGrid as exc:
            raise SingularityOnPath(str(exc)) from exc
        total += complex(res.value)
    return total
