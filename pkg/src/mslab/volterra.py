"""Volterra operators V_g f(z) = int_0^z f(w) g'(w) dw into H^2 of the half-plane.

Norms go through the Littlewood-Paley identity

    ||F||_{H^2}^2 = c_lp * int_{C+} |F'(z)|^2 Im z dA(z),   (V_g f)' = f g',

so every criterion is an integral of ``|g'|^2 Im z`` against a kernel.  With
plane Lebesgue measure the constant is 4, and that is the default
(see :func:`lp_norm_sq`, which measures it).

All cell integrals for a (space, symbol) pair come out of one adaptive pass
per cell ``Omega_m``.  That pass returns

    P_m  = int_{Omega_m} |g'|^2 y dA
    Q_m  = int_{Omega_m} |g'|^2 y / |z|^2 dA
    D_mk = int_{Omega_m} v_k |g'|^2 y / |z - gamma_k|^2 dA
    G_m  = int_{Omega_m} e_j conj(e_k) |g'|^2 y dA      (Gram blocks)

and the local terms, global terms, Hilbert-Schmidt sums and Gram matrices
are assembled from them.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np

from .errors import Divergent, NonConvergence, NonHermitian
from .hgamma import SpacePair, cell_region
from .numerics import (
    DEFAULT_SPEC,
    QuadratureSpec,
    UpperHalfPlane,
    integrate_area,
    integrate_line,
    integrate_path,
)
from .symb import Expr, differentiate, is_zero, parse_expr

__all__ = [
    "LPConfig",
    "LPNorm",
    "Terms",
    "VolterraAnalysis",
    "lp_norm_sq",
    "measure_lp_constant",
    "vg_pointwise",
    "cell_moments",
    "local_condition_terms",
    "global_condition_terms",
    "compactness_profile",
    "hs_criterion",
    "hs_direct",
    "gram_matrix",
    "truncated_operator_norm",
    "analyze_volterra",
    "HS_GLOBAL_NOTE",
    "LP_NOTE",
]

HS_GLOBAL_NOTE = (
    "S_global uses the index-consistent form sum_m (sum_{n<m} v_n) Q_m + "
    "sum_m (sum_{n>m} v_n/|gamma_n|^2) P_m obtained from the cell-wise kernel splitting "
    "(index-corrected global Hilbert-Schmidt condition)"
)
LP_NOTE = (
    "Littlewood-Paley constant differs from 4, the ratio measured by the closed-form "
    "checks with plane Lebesgue measure"
)


@dataclass(frozen=True)
class LPConfig:
    c_lp: float = 4.0

    def __post_init__(self):
        if not self.c_lp > 0:
            raise ValueError("c_lp must be positive")


@dataclass
class LPNorm:
    area_based: float
    boundary_based: float

    @property
    def ratio(self) -> float:
        """Boundary norm over the bare area integral (the measured constant)."""
        return self.boundary_based / self.area_integral

    area_integral: float = 0.0

    def __iter__(self):
        yield self.area_based
        yield self.boundary_based


@dataclass
class Terms:
    """A criterion sequence indexed by cell (0-based array, cell n at ``values[n-1]``)."""

    values: np.ndarray

    @property
    def sup(self) -> float:
        return float(np.max(self.values)) if len(self.values) else 0.0

    def __len__(self):
        return len(self.values)

    def __getitem__(self, i):
        return self.values[i]

    def __iter__(self):
        return iter(self.values)


@dataclass
class _Moments:
    P: np.ndarray            # (N,), P[N-1] may be inf
    Q: np.ndarray            # (N,)
    D: np.ndarray            # (N, N): D[m, k]
    G: np.ndarray            # (N, N, N) complex: G[m, j, k]
    evaluations: int
    warnings: list = field(default_factory=list)


def _resolve(g) -> Expr:
    return parse_expr(g) if isinstance(g, str) else g


def lp_norm_sq(f, cfg: LPConfig | None = None, spec: QuadratureSpec | None = None) -> LPNorm:
    """Area-based ``c_lp int |f'|^2 Im z dA`` and boundary ``int |f(x)|^2 dx``.

    Raises
    ------
    Divergent
        Either integral fails to settle (``f`` not in H^2).
    """
    cfg = cfg or LPConfig()
    spec = spec or DEFAULT_SPEC
    f = _resolve(f)
    fp = differentiate(f)
    if is_zero(fp) and isinstance(f, Expr) and is_zero(f):
        return LPNorm(0.0, 0.0, 0.0)
    try:
        area = float(integrate_area(lambda z: np.abs(fp(z)) ** 2 * z.imag, UpperHalfPlane(),
                                    spec).value) if not is_zero(fp) else 0.0
        boundary = float(integrate_line(lambda z: np.abs(f(z)) ** 2, 0.0, None, spec).value)
    except Divergent:
        raise
    except NonConvergence as exc:
        raise Divergent(f"{f} does not look like an H^2 function: {exc}", exc.result) from exc
    return LPNorm(cfg.c_lp * area, boundary, area)


def measure_lp_constant(functions=("1/(z+i)", "1/(z+2i)", "1/(z+i)^2"),
                        spec: QuadratureSpec | None = None) -> list:
    """Measured ``boundary / area`` ratio for each test function."""
    return [lp_norm_sq(f, LPConfig(), spec).ratio for f in functions]


def vg_pointwise(f, g, z, spec: QuadratureSpec | None = None, base=0j) -> complex:
    """``V_g f(z)``: integral of ``f g'`` along the segment ``base -> z``."""
    return integrate_path(_resolve(f), differentiate(_resolve(g)), z, base, spec)


# ---- shared cell integrals --------------------------------------------------


INTERIOR_NOTE = (
    "nodes inside the open half-plane: 1/|z-gamma|^2 is not area-integrable at an "
    "interior point, so the diagonal terms of those nodes are reported as inf"
)


def _interior_hits(space: SpacePair):
    """Per cell, the interior nodes lying in its closure."""
    edges = space.cell_edges
    hits = [[] for _ in range(len(space))]
    for k, gam in enumerate(space.gammas):
        if gam.imag <= 0:
            continue
        r = abs(gam)
        for m in range(len(space)):
            if edges[m] <= r <= edges[m + 1]:
                hits[m].append(k)
    return hits


@lru_cache(maxsize=64)
def _cell_moments_cached(space: SpacePair, gprime: Expr, spec: QuadratureSpec):
    n = len(space)
    gam = space.gamma_array
    v = space.weight_array
    sq = np.sqrt(v)
    hits = _interior_hits(space)
    interior = [k for k, gk in enumerate(space.gammas) if gk.imag > 0]
    warnings = [INTERIOR_NOTE] if interior else []
    # pin-prick discs only guard against sampling a node exactly; off-diagonal
    # Gram entries have an integrable 1/rho singularity there
    excl = [(gam[k], 1e-12 * (1.0 + abs(gam[k]))) for k in interior]

    def make_integrand(drop):
        keep = np.ones(2 + n + n * n)
        for k in drop:
            keep[2 + k] = 0.0
            keep[2 + n + k * n + k] = 0.0

        def integrand(z):
            mu = np.abs(gprime(z)) ** 2 * z.imag
            inv = 1.0 / (z[None, :] - gam[:, None])
            e = sq[:, None] * inv
            gram = (e[:, None, :] * np.conj(e)[None, :, :]) * mu[None, None, :]
            out = np.concatenate([
                mu[None, :], (mu / np.abs(z) ** 2)[None, :],
                np.abs(e) ** 2 * mu[None, :], gram.reshape(n * n, -1),
            ])
            return out * keep[:, None]
        return integrand

    P = np.zeros(n)
    Q = np.zeros(n)
    D = np.zeros((n, n))
    G = np.zeros((n, n, n), dtype=complex)
    evals = 0
    for m in range(n):
        region = cell_region(space, m + 1)
        # diagonal terms diverge at a node unless g' vanishes there
        drop = [k for k in hits[m] if abs(gprime(np.array([gam[k]]))[0]) > 0]
        integrand = make_integrand(drop)
        if region.improper:
            res = integrate_area(integrand, region, spec,
                                 exclusions=excl, raise_on_failure=False)
            ok = res.component_converged
            vals = np.where(ok, res.value, np.inf)
            if not ok[0] and m < n - 1:
                raise NonConvergence(f"P integral on cell {m + 1} did not converge", res)
        else:
            try:
                res = integrate_area(integrand, region, spec, exclusions=excl)
            except NonConvergence as exc:
                raise NonConvergence(f"cell {m + 1}: {exc}", exc.result) from exc
            vals = res.value
        evals += res.evaluations
        vals = np.asarray(vals)
        P[m] = vals[0].real
        Q[m] = vals[1].real
        D[m] = vals[2:2 + n].real
        G[m] = vals[2 + n:].reshape(n, n)
        for k in drop:
            D[m, k] = np.inf
            G[m, k, k] = np.inf
    return _Moments(P, Q, D, G, evals, warnings)


def cell_moments(space: SpacePair, g, spec: QuadratureSpec | None = None) -> _Moments:
    """Cell integrals P, Q, D and Gram blocks for the symbol ``g`` (cached).

    ``P`` of the unbounded last cell is ``inf`` when it diverges; it never
    enters a criterion (its coefficient is an empty sum at the truncation).
    """
    spec = spec or DEFAULT_SPEC
    gprime = differentiate(_resolve(g))
    n = len(space)
    if is_zero(gprime):
        return _Moments(np.zeros(n), np.zeros(n), np.zeros((n, n)),
                        np.zeros((n, n, n), dtype=complex), 0)
    return _cell_moments_cached(space, gprime, spec)


def _sum_or_inf(coeffs, values):
    """``sum coeffs * values`` skipping zero coefficients (so 0 * inf = 0)."""
    mask = coeffs != 0
    return float(np.sum(coeffs[mask] * values[mask])) if mask.any() else 0.0


def local_condition_terms(space: SpacePair, g, cfg: LPConfig | None = None,
                          spec: QuadratureSpec | None = None) -> Terms:
    """``L_n = int_{Omega_n} v_n |g'|^2 Im z / |z - gamma_n|^2 dA``."""
    mom = cell_moments(space, g, spec)
    return Terms(np.diag(mom.D).copy())


def global_condition_terms(space: SpacePair, g, cfg: LPConfig | None = None,
                           spec: QuadratureSpec | None = None) -> Terms:
    """``B_n = (sum_{l<=n} v_l) sum_{m>n} Q_m + (sum_{l>n} v_l/|gamma_l|^2) sum_{m<=n} P_m``."""
    mom = cell_moments(space, g, spec)
    return Terms(_global_terms(space, mom))


def _global_terms(space, mom):
    n = len(space)
    v = space.weight_array
    decay = v / np.abs(space.gamma_array) ** 2
    out = np.zeros(n)
    for j in range(n):
        first = v[: j + 1].sum() * float(np.sum(mom.Q[j + 1:]))
        second_coeff = float(decay[j + 1:].sum())
        second = second_coeff * float(np.sum(mom.P[: j + 1])) if second_coeff else 0.0
        out[j] = first + second
    return out


def _tail_verdict(values, threshold):
    vals = np.asarray(values, dtype=float)
    if vals.size == 0 or np.all(vals == 0):
        return True, "identically zero"
    if not np.all(np.isfinite(vals)):
        return False, "infinite terms"
    peak = vals.max()
    tail = vals[-max(2, vals.size // 3):]
    monotone = bool(np.all(np.diff(tail) <= 1e-12 * peak))
    small = bool(vals[-1] <= threshold * peak)
    if monotone and small:
        return True, "decreasing below threshold"
    return False, "not decreasing" if not monotone else "above threshold"


@dataclass
class DecayReport:
    local: np.ndarray
    global_: np.ndarray
    consistent: bool
    reasons: dict


def compactness_profile(space: SpacePair, g, cfg: LPConfig | None = None,
                        spec: QuadratureSpec | None = None, threshold: float = 0.05) -> DecayReport:
    """Little-oh diagnostic on L_n and B_n at the truncation.

    ``B_N`` vanishes identically at the truncation, so the global verdict is
    read from ``B_1 .. B_{N-1}``.
    """
    mom = cell_moments(space, g, spec)
    L = np.diag(mom.D).copy()
    B = _global_terms(space, mom)
    ok_l, why_l = _tail_verdict(L, threshold)
    ok_b, why_b = _tail_verdict(B[:-1] if len(B) > 1 else B, threshold)
    return DecayReport(L, B, ok_l and ok_b, {"local": why_l, "global": why_b})


def _hs_parts(space, mom):
    v = space.weight_array
    decay = v / np.abs(space.gamma_array) ** 2
    n = len(space)
    s_local = float(np.trace(mom.D))
    before = np.array([v[:m].sum() for m in range(n)])
    after = np.array([decay[m + 1:].sum() for m in range(n)])
    s_global = _sum_or_inf(before, mom.Q) + _sum_or_inf(after, mom.P)
    return s_local, s_global


def hs_criterion(space: SpacePair, g, cfg: LPConfig | None = None,
                 spec: QuadratureSpec | None = None) -> tuple[float, float]:
    """``(S_local, S_global)``; see :data:`HS_GLOBAL_NOTE` for the global form.

    Raises
    ------
    Divergent
        A needed cell integral is infinite.
    """
    mom = cell_moments(space, g, spec)
    s_local, s_global = _hs_parts(space, mom)
    if not (math.isfinite(s_local) and math.isfinite(s_global)):
        raise Divergent(f"Hilbert-Schmidt criterion diverges (S_local={s_local}, S_global={s_global})")
    return s_local, s_global


def hs_direct(space: SpacePair, g, cfg: LPConfig | None = None,
              spec: QuadratureSpec | None = None) -> float:
    """``sum_n ||V_g e_n||^2 = c_lp sum_n int |e_n|^2 |g'|^2 Im z dA``."""
    cfg = cfg or LPConfig()
    mom = cell_moments(space, g, spec)
    total = cfg.c_lp * float(mom.D.sum())
    if not math.isfinite(total):
        raise Divergent("direct Hilbert-Schmidt sum diverges")
    return total


def gram_matrix(space: SpacePair, g, cfg: LPConfig | None = None,
                spec: QuadratureSpec | None = None, hermitian_tol: float = 1e-6) -> np.ndarray:
    """``G_jk = c_lp int e_j conj(e_k) |g'|^2 Im z dA`` over the half-plane.

    Raises
    ------
    NonHermitian
        ``max |G - G^H| > hermitian_tol * max |G|``.
    Divergent
        Some entry is infinite.
    """
    cfg = cfg or LPConfig()
    mom = cell_moments(space, g, spec)
    G = cfg.c_lp * mom.G.sum(axis=0)
    if not np.all(np.isfinite(G)):
        raise Divergent("Gram matrix has infinite entries")
    scale = np.abs(G).max()
    if scale and np.abs(G - G.conj().T).max() > hermitian_tol * scale:
        raise NonHermitian(f"Gram matrix asymmetry {np.abs(G - G.conj().T).max():.3e}")
    return 0.5 * (G + G.conj().T)


def truncated_operator_norm(space: SpacePair, g, cfg: LPConfig | None = None,
                            spec: QuadratureSpec | None = None, n_sub: int | None = None) -> float:
    """``sqrt(lambda_max)`` of the leading ``n_sub x n_sub`` Gram block.

    This is ``||V_g||`` restricted to span(e_1..e_{n_sub}), a lower bound
    for the full operator norm; it is nondecreasing in ``n_sub``.
    """
    n_sub = len(space) if n_sub is None else int(n_sub)
    if not 1 <= n_sub <= len(space):
        raise ValueError(f"n_sub must lie in 1..{len(space)}")
    G = gram_matrix(space, g, cfg, spec)[:n_sub, :n_sub]
    lam = np.linalg.eigvalsh(G)
    return float(math.sqrt(max(lam[-1], 0.0)))


@dataclass
class VolterraAnalysis:
    local_terms: np.ndarray
    global_terms: np.ndarray
    P: np.ndarray
    Q: np.ndarray
    hs_local: float
    hs_global: float
    hs_direct: float
    truncated_norms: dict
    gram_min_eig: float | None
    gram_trace: float | None
    verdicts: dict
    warnings: list
    evaluations: int

    @property
    def hs_ratio(self) -> float:
        total = self.hs_local + self.hs_global
        return self.hs_direct / total if total else math.nan


def analyze_volterra(space: SpacePair, g, cfg: LPConfig | None = None,
                     spec: QuadratureSpec | None = None, n_subs=None,
                     threshold: float = 0.05) -> VolterraAnalysis:
    """Every Volterra criterion for one (space, symbol) pair."""
    cfg = cfg or LPConfig()
    spec = spec or DEFAULT_SPEC
    g = _resolve(g)
    n = len(space)
    n_subs = list(range(1, n + 1)) if n_subs is None else [int(k) for k in n_subs]
    mom = cell_moments(space, g, spec)
    warnings = [HS_GLOBAL_NOTE]
    if cfg.c_lp != 4.0:
        warnings.append(LP_NOTE)
    warnings.extend(mom.warnings)

    L = np.diag(mom.D).copy()
    B = _global_terms(space, mom)
    s_local, s_global = _hs_parts(space, mom)
    direct = cfg.c_lp * float(mom.D.sum())

    norms: dict = {}
    min_eig = trace = None
    if np.all(np.isfinite(mom.G)):
        G = cfg.c_lp * mom.G.sum(axis=0)
        asym = float(np.abs(G - G.conj().T).max())
        scale = float(np.abs(G).max())
        if scale and asym > 1e-6 * scale:
            warnings.append(f"Gram matrix asymmetry {asym:.3e} exceeds tolerance")
        G = 0.5 * (G + G.conj().T)
        eig = np.linalg.eigvalsh(G)
        min_eig, trace = float(eig[0]), float(np.trace(G).real)
        for k in n_subs:
            lam = np.linalg.eigvalsh(G[:k, :k])
            norms[k] = float(math.sqrt(max(lam[-1], 0.0)))
    else:
        warnings.append("Gram matrix has divergent entries; truncated norms unavailable")
        for k in n_subs:
            norms[k] = math.inf

    ok_l, why_l = _tail_verdict(L, threshold)
    ok_b, why_b = _tail_verdict(B[:-1] if n > 1 else B, threshold)
    verdicts = {
        "bounded_at_truncation": bool(np.all(np.isfinite(L)) and np.all(np.isfinite(B))),
        "compact_consistent": ok_l and ok_b,
        "compact_reason": {"local": why_l, "global": why_b},
        "hilbert_schmidt_finite": bool(math.isfinite(s_local) and math.isfinite(s_global)),
        "hs_direct_finite": bool(math.isfinite(direct)),
    }
    return VolterraAnalysis(L, B, mom.P.copy(), mom.Q.copy(), s_local, s_global, direct, norms,
                            min_eig, trace, verdicts, warnings, mom.evaluations)
