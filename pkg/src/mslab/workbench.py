"""Run configuration, self-verification, JSON reports and CSV export."""

from __future__ import annotations

import csv
import dataclasses
import hashlib
import json
import math
import os
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import composition, hgamma, modelspace, volterra
from .errors import ConfigError, ExprSyntaxError, MslabError, NonConvergence, SpaceError
from .numerics import HalfAnnulus, QuadratureSpec, integrate_area
from .symb import differentiate, parse_expr, to_text

__all__ = [
    "RunConfig",
    "CheckResult",
    "load_run_config",
    "run_config_from_dict",
    "cmd_verify",
    "cmd_analyze",
    "cmd_export_plotdata",
    "dump_report",
    "verify_token_path",
    "EXIT_OK",
    "EXIT_VERIFY",
    "EXIT_CONFIG",
    "EXIT_NUMERIC",
]

EXIT_OK, EXIT_VERIFY, EXIT_CONFIG, EXIT_NUMERIC = 0, 1, 2, 3

OPERATORS = ("volterra", "composition", "model")

# reference space for the built-in checks: gamma_n = 4^n, v_n = 1
REFERENCE_SPACE = hgamma.SpacePair(tuple(4.0**n for n in range(1, 7)), (1.0,) * 6)
REFERENCE_SYMBOL = "log(z+i)"


@dataclass
class RunConfig:
    operator: str
    space: str | None = None
    symbol: str | None = None
    map: str | None = None
    inner: str | None = None
    grid: list = field(default_factory=list)
    ray: list = field(default_factory=list)
    delta: float = 0.5
    quadrature: dict = field(default_factory=dict)
    ceiling: float = 1e6
    output: str | None = None
    c_lp: float = 4.0
    n_sub: list | None = None
    base_dir: str = "."

    def echo(self) -> dict:
        out = dataclasses.asdict(self)
        out.pop("base_dir")
        return out

    def quadrature_spec(self) -> QuadratureSpec:
        try:
            return QuadratureSpec(**self.quadrature)
        except (TypeError, ValueError) as exc:
            raise ConfigError(f"bad quadrature parameters: {exc}") from None

    def resolve(self, path: str) -> Path:
        p = Path(path)
        return p if p.is_absolute() else Path(self.base_dir) / p


def run_config_from_dict(data: dict, base_dir: str = ".") -> RunConfig:
    if not isinstance(data, dict):
        raise ConfigError("run config must be a JSON object")
    known = {f.name for f in dataclasses.fields(RunConfig)} - {"base_dir"}
    extra = set(data) - known
    if extra:
        raise ConfigError(f"unknown config fields: {sorted(extra)}")
    if data.get("operator") not in OPERATORS:
        raise ConfigError(f"operator must be one of {OPERATORS}, got {data.get('operator')!r}")
    cfg = RunConfig(**data, base_dir=base_dir)
    need = {"volterra": ("space", "symbol"), "composition": ("space", "map"),
            "model": ("inner", "symbol")}[cfg.operator]
    for name in need:
        if not getattr(cfg, name):
            raise ConfigError(f"operator {cfg.operator!r} needs field {name!r}")
    try:
        for name in ("symbol", "map"):
            if getattr(cfg, name):
                parse_expr(getattr(cfg, name))
        if cfg.inner:
            modelspace.parse_inner(cfg.inner)
    except ExprSyntaxError as exc:
        raise ConfigError(f"expression does not parse: {exc}") from None
    if not cfg.c_lp > 0:
        raise ConfigError("c_lp must be positive")
    if cfg.space and not cfg.resolve(cfg.space).is_file():
        raise ConfigError(f"space file {cfg.space!r} not found")
    cfg.quadrature_spec()
    return cfg


def load_run_config(path) -> RunConfig:
    path = Path(path)
    try:
        data = json.loads(path.read_text())
    except FileNotFoundError:
        raise ConfigError(f"config file {str(path)!r} not found") from None
    except json.JSONDecodeError as exc:
        raise ConfigError(f"config file is not valid JSON: {exc}") from None
    return run_config_from_dict(data, str(path.parent))


# ---- verification -----------------------------------------------------------


@dataclass
class CheckResult:
    name: str
    passed: bool
    detail: str

    def line(self) -> str:
        return f"[{'PASS' if self.passed else 'FAIL'}] {self.name}: {self.detail}"


def _check_lp(c_lp):
    ratios = volterra.measure_lp_constant()
    worst = max(abs(r - c_lp) / c_lp for r in ratios)
    text = ", ".join(f"{r:.6f}" for r in ratios)
    return CheckResult("lp-constant", worst <= 0.01,
                       f"measured boundary/area ratios {text} against c_lp = {c_lp:g}")


def _check_reproducing(rng):
    worst = 0.0
    for _ in range(20):
        n = int(rng.integers(1, 9))
        mods = np.cumsum(rng.uniform(0.5, 3.0, n))
        angles = rng.uniform(0, np.pi, n)
        space = hgamma.SpacePair(tuple(mods * np.exp(1j * angles)), tuple(rng.uniform(0.1, 5, n)))
        a = rng.normal(size=n) + 1j * rng.normal(size=n)
        lam = complex(rng.normal() * 5, rng.uniform(0.1, 5))
        lhs = hgamma.inner(space, a, hgamma.kernel_coeffs(space, lam))
        rhs = hgamma.evaluate(space, a, lam)
        worst = max(worst, abs(lhs - rhs) / (1 + abs(rhs)))
    return CheckResult("reproducing", worst <= 1e-10, f"max scaled defect {worst:.2e}")


def _check_splitting(rng):
    lo, hi = math.inf, 0.0
    for q in (4.0, 6.0, 10.0):
        space = hgamma.SpacePair(tuple(q**k for k in range(1, 7)), tuple(rng.uniform(0.5, 2, 6)))
        rmax = 2 * abs(space.gammas[-1])
        for _ in range(100):
            r = rmax * rng.uniform() ** 2
            z = r * np.exp(1j * rng.uniform(1e-3, np.pi - 1e-3))
            ratio = hgamma.kernel_sum_split(space, z).ratio
            lo, hi = min(lo, ratio), max(hi, ratio)
    return CheckResult("splitting", 1 / 8 <= lo and hi <= 8,
                       f"exact/split ratios in [{lo:.4f}, {hi:.4f}]")


def _check_exhaustion(spec):
    space = REFERENCE_SPACE
    gp = differentiate(parse_expr(REFERENCE_SYMBOL))
    h = lambda z: np.abs(gp(z)) ** 2 * z.imag
    parts = [integrate_area(h, hgamma.cell_region(space, n), spec) for n in range(1, len(space))]
    whole = integrate_area(h, HalfAnnulus(0.0, float(space.partition_radii[-1])), spec)
    total = sum(float(p.value) for p in parts)
    budget = sum(p.error_estimate for p in parts) + whole.error_estimate
    gap = abs(total - float(whole.value))
    return CheckResult("exhaustion", gap <= max(budget, 1e-12),
                       f"|sum of cells - half-disc| = {gap:.2e}, error budget {budget:.2e}")


def _build_id() -> str:
    h = hashlib.sha256()
    for src in sorted(Path(__file__).parent.glob("*.py")):
        h.update(src.name.encode())
        h.update(src.read_bytes())
    return h.hexdigest()[:16]


def verify_token_path(c_lp: float, cache_dir=None) -> Path:
    root = Path(cache_dir or os.environ.get("MSLAB_CACHE_DIR")
                or Path.home() / ".cache" / "mslab")
    return root / f"verified-{_build_id()}-{c_lp!r}.token"


def cmd_verify(c_lp: float = 4.0, cache_dir=None, spec: QuadratureSpec | None = None,
               write_token: bool = True) -> tuple[int, list]:
    """Run the identity checks; returns ``(exit status, [CheckResult])``."""
    spec = spec or QuadratureSpec()
    rng = np.random.default_rng(20240611)
    results = []
    checks = [("lp-constant", lambda: _check_lp(c_lp)),
              ("reproducing", lambda: _check_reproducing(rng)),
              ("splitting", lambda: _check_splitting(rng)),
              ("exhaustion", lambda: _check_exhaustion(spec))]
    for name, check in checks:
        try:
            results.append(check())
        except MslabError as exc:
            results.append(CheckResult(name, False, f"{type(exc).__name__}: {exc}"))
    ok = all(r.passed for r in results)
    if ok and write_token:
        token = verify_token_path(c_lp, cache_dir)
        try:
            token.parent.mkdir(parents=True, exist_ok=True)
            token.write_text("ok\n")
        except OSError:
            pass
    return (EXIT_OK if ok else EXIT_VERIFY), results


# ---- reports ------------------------------------------------------------------


def _clean(obj):
    """JSON-safe copy: non-finite floats become strings, arrays become lists."""
    if isinstance(obj, dict):
        return {str(k): _clean(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_clean(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return [_clean(v) for v in obj.tolist()]
    if isinstance(obj, (np.bool_, bool)):
        return bool(obj)
    if isinstance(obj, (np.integer, int)):
        return int(obj)
    if isinstance(obj, (np.floating, float)):
        x = float(obj)
        if math.isnan(x):
            return "nan"
        if math.isinf(x):
            return "inf" if x > 0 else "-inf"
        return x
    if isinstance(obj, complex):
        return [_clean(obj.real), _clean(obj.imag)]
    return obj


def dump_report(report: dict) -> str:
    return json.dumps(_clean(report), indent=2, sort_keys=True) + "\n"


def _space_hash(space) -> str:
    text = json.dumps(hgamma.space_to_dict(space), sort_keys=True)
    return hashlib.sha256(text.encode()).hexdigest()


def _volterra_report(cfg, space, spec):
    lp = volterra.LPConfig(cfg.c_lp)
    res = volterra.analyze_volterra(space, cfg.symbol, lp, spec, n_subs=cfg.n_sub)
    total = res.hs_local + res.hs_global
    return {
        "L": res.local_terms, "B": res.global_terms, "P": res.P, "Q": res.Q,
        "S_local": res.hs_local, "S_global": res.hs_global, "hs_direct": res.hs_direct,
        "truncated_norm": {str(k): v for k, v in sorted(res.truncated_norms.items())},
        "gram_min_eig": res.gram_min_eig, "gram_trace": res.gram_trace,
        "cross_checks": {"hs_direct_over_criteria": res.hs_direct / total if total else "nan"},
        "sup": {"L": float(np.max(res.local_terms)), "B": float(np.max(res.global_terms))},
        "verdicts": dict(res.verdicts, derived_from={
            "bounded_at_truncation": ["L", "B"], "compact_consistent": ["L", "B"],
            "hilbert_schmidt_finite": ["S_local", "S_global"], "hs_direct_finite": ["hs_direct"]}),
        "warnings": res.warnings,
        "quadrature": {"evaluations": res.evaluations},
    }, None


def _composition_report(cfg, space, spec):
    ccfg = composition.CompConfig(ceiling=cfg.ceiling)
    res = composition.analyze_composition(space, cfg.map, ccfg, spec)
    report = {
        "T": res.local_terms, "B_tilde": res.global_terms, "direct_terms": res.direct_terms,
        "H_local": res.hs_local, "H_global": res.hs_global, "H_direct": res.hs_direct,
        "cross_checks": {"H_direct_over_criteria": res.hs_ratio},
        "verdicts": dict(res.verdicts, derived_from={
            "bounded_at_truncation": ["T", "B_tilde"], "compact_consistent": ["T", "B_tilde"],
            "hilbert_schmidt_finite": ["H_local", "H_global"], "hs_direct_finite": ["H_direct"]}),
        "warnings": res.warnings,
    }
    return report, res.error


def _model_report(cfg, spec):
    inner = modelspace.parse_inner(cfg.inner)
    grid = [complex(*p) for p in cfg.grid]
    table = modelspace.thm1_bounded_criterion(inner, cfg.symbol, grid, spec)
    report = {
        "w": grid, "Q": table.values, "Q_error": table.errors, "Q_converged": table.converged,
        "sup_Q": table.sup, "warnings": list(table.messages),
        "components": modelspace.one_component_diagnostic(inner, cfg.delta),
    }
    verdicts = {"bounded_on_grid": math.isfinite(table.sup)}
    derived = {"bounded_on_grid": ["Q"]}
    if cfg.ray:
        prof = modelspace.thm1_compact_profile(inner, cfg.symbol, [complex(*p) for p in cfg.ray],
                                               spec)
        report["ray"] = prof.table.points
        report["Q_ray"] = prof.table.values
        verdicts["compact_consistent_on_ray"] = prof.consistent
        verdicts["compact_reason"] = prof.reason
        derived["compact_consistent_on_ray"] = ["Q_ray"]
    error = None
    try:
        report["hs"] = modelspace.thm1_hs_criterion(inner, cfg.symbol, spec)
    except NonConvergence as exc:
        report["hs"] = math.inf
        report["warnings"].append(f"Hilbert-Schmidt integral: {exc}")
    verdicts["hilbert_schmidt_finite"] = math.isfinite(report["hs"])
    derived["hilbert_schmidt_finite"] = ["hs"]
    verdicts["derived_from"] = derived
    report["verdicts"] = verdicts
    return report, error


def cmd_analyze(cfg: RunConfig, cache_dir=None) -> tuple[int, dict]:
    """Run one analysis; returns ``(exit status, report)`` and writes ``cfg.output``.

    Refuses with status 1 when the verification suite fails for ``cfg.c_lp``.
    """
    if not verify_token_path(cfg.c_lp, cache_dir).exists():
        status, checks = cmd_verify(cfg.c_lp, cache_dir)
        if status != EXIT_OK:
            report = {"operator": cfg.operator, "config": cfg.echo(),
                      "error": "verification failed",
                      "checks": [dataclasses.asdict(c) for c in checks]}
            return EXIT_VERIFY, report
    spec = cfg.quadrature_spec()
    header = {"operator": cfg.operator, "config": cfg.echo(), "c_lp": cfg.c_lp}
    try:
        if cfg.operator == "model":
            body, error = _model_report(cfg, spec)
        else:
            space = hgamma.load_space(cfg.resolve(cfg.space))
            header["space_hash"] = _space_hash(space)
            header["space"] = hgamma.space_to_dict(space)
            if cfg.operator == "volterra":
                header["symbol"] = to_text(parse_expr(cfg.symbol))
                body, error = _volterra_report(cfg, space, spec)
            else:
                header["map"] = to_text(parse_expr(cfg.map))
                body, error = _composition_report(cfg, space, spec)
    except (SpaceError, ConfigError, json.JSONDecodeError, OSError) as exc:
        raise ConfigError(str(exc)) from None
    except MslabError as exc:
        body, error = {"verdicts": {"ok": False}}, f"{type(exc).__name__}: {exc}"
    report = dict(header, **body, error=error)
    if cfg.output:
        out = cfg.resolve(cfg.output)
        out.parent.mkdir(parents=True, exist_ok=True)
        out.write_text(dump_report(report))
    return (EXIT_NUMERIC if error else EXIT_OK), report


# ---- CSV export ----------------------------------------------------------------


_LAYOUT = {
    "volterra": ("volterra_terms.csv", ["n", "L_n", "B_n"], ("L", "B")),
    "composition": ("composition_terms.csv", ["n", "T_n", "B_tilde_n"], ("T", "B_tilde")),
}


def cmd_export_plotdata(report: dict, out_dir) -> list:
    """Per-criterion CSV files; returns the written paths.

    An empty report (no operator) yields a header-only volterra table.
    """
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    op = report.get("operator", "volterra")
    written = []
    if op == "model":
        path = out_dir / "model_Q.csv"
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["w_index", "w_re", "w_im", "Q_w"])
            for i, (pt, q) in enumerate(zip(report.get("w", []), report.get("Q", [])), 1):
                w.writerow([i, pt[0], pt[1], q])
        written.append(path)
        if report.get("ray"):
            path = out_dir / "model_ray.csv"
            with open(path, "w", newline="") as fh:
                w = csv.writer(fh, lineterminator="\n")
                w.writerow(["w_index", "w_re", "w_im", "Q_w"])
                for i, (pt, q) in enumerate(zip(report["ray"], report["Q_ray"]), 1):
                    w.writerow([i, pt[0], pt[1], q])
            written.append(path)
        return written
    if op not in _LAYOUT:
        raise ConfigError(f"unknown operator {op!r} in report")
    name, header, keys = _LAYOUT[op]
    a, b = (report.get(k) or [] for k in keys)
    path = out_dir / name
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for i, (x, y) in enumerate(zip(a, b), 1):
            w.writerow([i, x, y])
    written.append(path)
    return written
