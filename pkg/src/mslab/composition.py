"""Composition operators C_psi f = f o psi from H(Gamma, v) into H^2.

Everything here is a line integral over the pullback of a partition cell,

    int_{x : psi(x+iy) in Omega_j} w(psi(x+iy)) dx,

maximized over the height ``y >= 0`` with :func:`mslab.numerics.sup_over_y`.
Pullback sets are unions of intervals.  They are found by sampling
``|psi(x+iy)|`` on a sinh-spaced grid and locating crossings of the cell
radii with Brent's method, so two crossings closer together than the
sample spacing can be missed.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np
from scipy.optimize import brentq

from .errors import Divergent, NonConvergence, RangeViolation, SingularityOnGrid
from .hgamma import SpacePair
from .numerics import DEFAULT_SPEC, HalfAnnulus, QuadratureSpec, integrate_line, sup_over_y
from .symb import Expr, parse_expr

__all__ = [
    "CompositionAnalysis",
    "CompConfig",
    "pullback_intervals",
    "pullback_integral",
    "thm3_local_terms",
    "thm3_global_terms",
    "thm3_compact_profile",
    "thm3_hs",
    "c_psi_norm_sq",
    "analyze_composition",
    "GLOBAL_NOTE",
]

GLOBAL_NOTE = (
    "H_global uses sum_k v_k sup_y int_{|psi|>=m_k} dx/|psi|^2 + "
    "sum_k (v_k/|gamma_k|^2) sup_y m{|psi| < m_{k-1}}, the index-consistent form from the "
    "line-wise kernel splitting (index-corrected global Hilbert-Schmidt condition, sup_y "
    "taken per block)"
)

_SAMPLES = 8193
_SPAN = 1e6


@dataclass(frozen=True)
class CompConfig:
    """Scan settings.  ``y_hint`` None means ``2 max |gamma_n|``."""

    ceiling: float = 1e6
    y_hint: float | None = None
    levels_below: int = 16
    levels_above: int = 2


def _resolve(psi) -> Expr:
    return parse_expr(psi) if isinstance(psi, str) else psi


def _psi_values(psi, z):
    with np.errstate(all="ignore"):
        w = np.asarray(psi(z), dtype=complex)
    return np.broadcast_to(w, np.shape(z))


@lru_cache(maxsize=4096)
def _partition(psi: Expr, y: float, radii: tuple):
    """Label the real line by cell: ``[(a, b, j), ...]`` covering (-inf, inf).

    ``j`` is the number of radii ``<= |psi|`` on the interval, so with
    radii ``m_1 < ... < m_{N-1}`` label ``j`` is cell ``j + 1``.
    """
    r = np.asarray(radii, dtype=float)
    xmax = _SPAN * (1.0 + (r.max() if r.size else 0.0) + y)
    scale = 0.05 * (1.0 + y)
    t = np.linspace(-math.asinh(xmax / scale), math.asinh(xmax / scale), _SAMPLES)
    xs = scale * np.sinh(t)
    w = _psi_values(psi, xs + 1j * y)
    if not np.all(np.isfinite(w)):
        bad = xs[~np.isfinite(w)][0]
        raise SingularityOnGrid(f"psi is not finite at x = {bad:.6g}, y = {y:.6g}")
    neg = w.imag < -1e-14 * (1.0 + np.abs(w))
    if neg.any():
        i = int(np.argmax(neg))
        raise RangeViolation(f"Im psi({xs[i]:.6g} + {y:.6g}i) = {w.imag[i]:.3e} < 0")
    labels = np.searchsorted(r, np.abs(w), side="right")

    def crossing(a, b, radius):
        f = lambda x: abs(complex(_psi_values(psi, np.array([x + 1j * y]))[0])) - radius
        fa, fb = f(a), f(b)
        if fa == 0:
            return a
        if fb == 0 or fa * fb > 0:
            return b
        return brentq(f, a, b, xtol=1e-14, rtol=4 * np.finfo(float).eps, maxiter=200)

    pieces = []
    start = -math.inf
    for i in np.flatnonzero(labels[1:] != labels[:-1]):
        a, b = float(xs[i]), float(xs[i + 1])
        lo, hi = int(labels[i]), int(labels[i + 1])
        step = 1 if hi > lo else -1
        cur = lo
        for j in range(lo, hi, step):
            radius = r[j] if step > 0 else r[j - 1]
            x = crossing(a, b, radius)
            pieces.append((start, x, cur))
            start, cur = x, j + step
            a = x
    pieces.append((start, math.inf, int(labels[-1])))
    return tuple((a, b, j) for a, b, j in pieces if b > a)


def _radii(space: SpacePair):
    return tuple(float(m) for m in space.partition_radii)


def pullback_intervals(psi, y: float, cell: HalfAnnulus):
    """Intervals of ``{x : r_lo <= |psi(x+iy)| < r_hi}``; ends may be infinite.

    Raises
    ------
    RangeViolation
        ``Im psi < 0`` at a sample of the line.
    """
    psi = _resolve(psi)
    radii = tuple(r for r in (cell.r_lo, cell.r_hi) if 0 < r < math.inf)
    target = 1 if cell.r_lo > 0 else 0
    return [(a, b) for a, b, j in _partition(psi, float(y), radii) if j == target]


def _cell_line_integral(h, y, intervals, spec):
    total = 0.0
    for a, b in intervals:
        total += float(integrate_line(h, y, (a, b), spec).value)
    return total


def pullback_integral(psi, y: float, cell: HalfAnnulus, weight=None,
                      spec: QuadratureSpec | None = None) -> float:
    """``int_{x : psi(x+iy) in cell} weight(psi(x+iy)) dx``.

    ``weight`` None means ``1``; the result is then the exact total length of
    the pullback intervals (``inf`` for an unbounded set).  A number is a
    constant weight.
    """
    spec = spec or DEFAULT_SPEC
    psi = _resolve(psi)
    intervals = pullback_intervals(psi, y, cell)
    if weight is None or (not callable(weight) and float(weight) == 1.0):
        return float(sum(b - a for a, b in intervals))
    if not callable(weight):
        c = float(weight)
        return 0.0 if c == 0 else c * float(sum(b - a for a, b in intervals))
    return _cell_line_integral(lambda z: weight(_psi_values(psi, z)), y, intervals, spec)


# ---- per-line quantities ------------------------------------------------------


class _Lines:
    """Line functionals of one (space, psi) pair, all as functions of ``y``."""

    def __init__(self, space, psi, spec):
        self.space = space
        self.psi = psi
        self.spec = spec
        self.radii = _radii(space)
        self.gam = space.gamma_array
        self.v = space.weight_array

    def pieces(self, y, label):
        return [(a, b) for a, b, j in _partition(self.psi, float(y), self.radii) if j == label]

    def local(self, n, y):
        """``int_{psi in Omega_n} v_n / |psi - gamma_n|^2 dx`` (0-based n)."""
        g, v = self.gam[n], self.v[n]
        h = lambda z: v / np.abs(_psi_values(self.psi, z) - g) ** 2
        return _cell_line_integral(h, y, self.pieces(y, n), self.spec)

    def outer_inverse_sq(self, n, y):
        """``int_{|psi| >= m_n} dx/|psi|^2``, the union of cells after n (0-based)."""
        h = lambda z: 1.0 / np.abs(_psi_values(self.psi, z)) ** 2
        iv = [(a, b) for a, b, j in _partition(self.psi, float(y), self.radii) if j > n]
        return _cell_line_integral(h, y, iv, self.spec)

    def cell_inverse_sq(self, k, y):
        h = lambda z: 1.0 / np.abs(_psi_values(self.psi, z)) ** 2
        return _cell_line_integral(h, y, self.pieces(y, k), self.spec)

    def inner_length(self, n, y):
        """``m{x : |psi| < m_n}``, the union of cells up to n (0-based)."""
        return float(sum(b - a for a, b, j in _partition(self.psi, float(y), self.radii)
                         if j <= n))

    def full(self, n, y):
        g, v = self.gam[n], self.v[n]
        return float(integrate_line(lambda z: v / np.abs(_psi_values(self.psi, z) - g) ** 2,
                                    y, None, self.spec).value)


def _hint(space, cfg):
    if cfg.y_hint is not None:
        return float(cfg.y_hint)
    return 2.0 * max(1.0, float(np.abs(space.gamma_array).max()))


class _Log(list):
    """Message list that also keeps the first divergence ``(y, value)``."""

    first_divergence = None


def _sup(F, space, cfg, spec, messages=None, label=""):
    """``sup_y F`` or ``inf`` on divergence (message recorded)."""
    try:
        res = sup_over_y(F, _hint(space, cfg), spec, ceiling=cfg.ceiling,
                         levels_below=cfg.levels_below, levels_above=cfg.levels_above)
    except Divergent as exc:
        if messages is not None:
            messages.append(f"{label}: {exc}")
            if isinstance(messages, _Log) and messages.first_divergence is None:
                messages.first_divergence = (exc.arg, exc.value)
        return math.inf
    if messages is not None and res.tail_undecided:
        messages.append(f"{label}: profile still increasing at the top of the y scan")
    return res.value


@dataclass
class CompositionTerms:
    values: np.ndarray
    messages: list

    @property
    def sup(self) -> float:
        return float(np.max(self.values)) if len(self.values) else 0.0

    def __iter__(self):
        return iter(self.values)

    def __len__(self):
        return len(self.values)

    def __getitem__(self, i):
        return self.values[i]


def thm3_local_terms(space: SpacePair, psi, cfg: CompConfig | None = None,
                     spec: QuadratureSpec | None = None) -> CompositionTerms:
    """``T_n = sup_y int_{psi(x+iy) in Omega_n} v_n / |psi - gamma_n|^2 dx``.

    A divergent scan gives ``inf`` with an entry in ``messages``.
    """
    cfg = cfg or CompConfig()
    spec = spec or DEFAULT_SPEC
    lines = _Lines(space, _resolve(psi), spec)
    msgs: list = []
    vals = [_sup(lambda y, n=n: lines.local(n, y), space, cfg, spec, msgs, f"T_{n + 1}")
            for n in range(len(space))]
    return CompositionTerms(np.array(vals), msgs)


def thm3_global_terms(space: SpacePair, psi, cfg: CompConfig | None = None,
                      spec: QuadratureSpec | None = None) -> CompositionTerms:
    """``B~_n = (sum_{l<=n} v_l) sum_{k>n} sup_y A_k + (sum_{l>n} v_l/|gamma_l|^2) sup_y M_n``

    with ``A_k(y) = int_{psi in Omega_k} dx/|psi|^2`` and
    ``M_n(y) = sum_{k<=n} m{x : psi in Omega_k}``.
    """
    cfg = cfg or CompConfig()
    spec = spec or DEFAULT_SPEC
    lines = _Lines(space, _resolve(psi), spec)
    n_cells = len(space)
    v = space.weight_array
    decay = v / np.abs(space.gamma_array) ** 2
    msgs: list = []
    a_sup = [_sup(lambda y, k=k: lines.cell_inverse_sq(k, y), space, cfg, spec, msgs,
                  f"A_{k + 1}") if k > 0 else 0.0 for k in range(n_cells)]
    out = np.zeros(n_cells)
    for n in range(n_cells):
        first = v[: n + 1].sum() * float(np.sum(a_sup[n + 1:])) if n + 1 < n_cells else 0.0
        coeff = float(decay[n + 1:].sum())
        second = 0.0
        if coeff:
            second = coeff * _sup(lambda y, n=n: lines.inner_length(n, y), space, cfg, spec,
                                  msgs, f"M_{n + 1}")
        out[n] = first + second
    return CompositionTerms(out, msgs)


@dataclass
class CompositionProfile:
    local: np.ndarray
    global_: np.ndarray
    consistent: bool
    reasons: dict
    messages: list


def _verdict(values, threshold):
    vals = np.asarray(values, dtype=float)
    if vals.size < 2 or np.all(vals == 0):
        return True, "vacuous" if vals.size < 2 else "identically zero"
    if not np.all(np.isfinite(vals)):
        return False, "infinite terms"
    peak = vals.max()
    tail = vals[-max(2, vals.size // 3):]
    monotone = bool(np.all(np.diff(tail) <= 1e-9 * peak))
    small = bool(vals[-1] <= threshold * peak)
    if monotone and small:
        return True, "decreasing below threshold"
    return False, "not decreasing" if not monotone else "above threshold"


def thm3_compact_profile(space: SpacePair, psi, cfg: CompConfig | None = None,
                         spec: QuadratureSpec | None = None,
                         threshold: float = 0.05) -> CompositionProfile:
    """``T_n`` and ``B~_n`` with a tail verdict at the truncation (``B~_N`` excluded)."""
    t = thm3_local_terms(space, psi, cfg, spec)
    b = thm3_global_terms(space, psi, cfg, spec)
    ok_t, why_t = _verdict(t.values, threshold)
    ok_b, why_b = _verdict(b.values[:-1], threshold)
    return CompositionProfile(t.values, b.values, ok_t and ok_b,
                              {"local": why_t, "global": why_b}, t.messages + b.messages)


def _hs_parts(space, lines, cfg, spec, msgs):
    n_cells = len(space)
    v = space.weight_array
    decay = v / np.abs(space.gamma_array) ** 2
    local = [_sup(lambda y, n=n: lines.local(n, y), space, cfg, spec, msgs, f"T_{n + 1}")
             for n in range(n_cells)]
    glob = 0.0
    for k in range(n_cells):
        if k + 1 < n_cells:
            glob += v[k] * _sup(lambda y, k=k: lines.outer_inverse_sq(k, y), space, cfg, spec,
                                msgs, f"outer_{k + 1}")
        if k > 0:
            glob += decay[k] * _sup(lambda y, k=k: lines.inner_length(k - 1, y), space, cfg,
                                    spec, msgs, f"inner_{k + 1}")
    direct = [_sup(lambda y, n=n: lines.full(n, y), space, cfg, spec, msgs, f"direct_{n + 1}")
              for n in range(n_cells)]
    return float(np.sum(local)), float(glob), float(np.sum(direct)), local, direct


def thm3_hs(space: SpacePair, psi, cfg: CompConfig | None = None,
            spec: QuadratureSpec | None = None) -> tuple[float, float, float]:
    """``(H_local, H_global, H_direct)``; see :data:`GLOBAL_NOTE`.

    Raises
    ------
    Divergent
        A sup over ``y`` exceeded the ceiling; ``arg`` is the first offending ``y``.
    RangeViolation
        ``Im psi < 0`` on a probed line.
    """
    cfg = cfg or CompConfig()
    spec = spec or DEFAULT_SPEC
    lines = _Lines(space, _resolve(psi), spec)
    msgs = _Log()
    h_local, h_global, h_direct, _, _ = _hs_parts(space, lines, cfg, spec, msgs)
    if not all(math.isfinite(x) for x in (h_local, h_global, h_direct)):
        y, val = msgs.first_divergence or (None, math.inf)
        raise Divergent("Hilbert-Schmidt sums diverge: " + "; ".join(msgs), arg=y, value=val)
    return h_local, h_global, h_direct


def c_psi_norm_sq(f, psi, spec: QuadratureSpec | None = None, cfg: CompConfig | None = None,
                  y_hint: float = 1.0) -> float:
    """``sup_y int |f(psi(x+iy))|^2 dx``.

    Raises
    ------
    Divergent, RangeViolation
    """
    spec = spec or DEFAULT_SPEC
    cfg = cfg or CompConfig()
    f, psi = _resolve(f), _resolve(psi)

    def line(y):
        _partition(psi, float(y), ())  # range check on the sample grid
        return float(integrate_line(lambda z: np.abs(f(_psi_values(psi, z))) ** 2 + 0 * z.real,
                                    y, None, spec).value)

    return sup_over_y(line, y_hint, spec, ceiling=cfg.ceiling,
                      levels_below=cfg.levels_below, levels_above=cfg.levels_above).value


@dataclass
class CompositionAnalysis:
    local_terms: np.ndarray
    global_terms: np.ndarray
    hs_local: float
    hs_global: float
    hs_direct: float
    direct_terms: np.ndarray
    verdicts: dict
    warnings: list
    error: str | None = None

    @property
    def hs_ratio(self) -> float:
        total = self.hs_local + self.hs_global
        if not (math.isfinite(total) and math.isfinite(self.hs_direct)) or total == 0:
            return math.nan
        return self.hs_direct / total


def analyze_composition(space: SpacePair, psi, cfg: CompConfig | None = None,
                        spec: QuadratureSpec | None = None,
                        threshold: float = 0.05) -> CompositionAnalysis:
    """Every composition criterion; a range violation is returned, not raised."""
    cfg = cfg or CompConfig()
    spec = spec or DEFAULT_SPEC
    psi = _resolve(psi)
    n = len(space)
    warnings = [GLOBAL_NOTE]
    try:
        lines = _Lines(space, psi, spec)
        msgs: list = []
        h_local, h_global, h_direct, local, direct = _hs_parts(space, lines, cfg, spec, msgs)
        glob = thm3_global_terms(space, psi, cfg, spec)
        msgs.extend(m for m in glob.messages if m not in msgs)
    except RangeViolation as exc:
        nan = np.full(n, math.nan)
        return CompositionAnalysis(nan, nan, math.nan, math.nan, math.nan, nan,
                                   {"range_ok": False}, warnings, f"RangeViolation: {exc}")
    except NonConvergence as exc:
        nan = np.full(n, math.nan)
        return CompositionAnalysis(nan, nan, math.nan, math.nan, math.nan, nan,
                                   {"range_ok": True}, warnings, f"NonConvergence: {exc}")
    warnings.extend(msgs)
    local = np.array(local)
    ok_t, why_t = _verdict(local, threshold)
    ok_b, why_b = _verdict(glob.values[:-1], threshold)
    verdicts = {
        "range_ok": True,
        "bounded_at_truncation": bool(np.all(np.isfinite(local))
                                      and np.all(np.isfinite(glob.values))),
        "compact_consistent": ok_t and ok_b,
        "compact_reason": {"local": why_t, "global": why_b},
        "hilbert_schmidt_finite": bool(math.isfinite(h_local) and math.isfinite(h_global)),
        "hs_direct_finite": bool(math.isfinite(h_direct)),
    }
    return CompositionAnalysis(local, glob.values, h_local, h_global, h_direct,
                               np.array(direct), verdicts, warnings)
