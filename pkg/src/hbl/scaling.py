"""Finite-n recurrence coefficients against their large-n laws.

Three study harnesses: the double-scaling regime at critical separation
(temperature T_n = 1 + L n^{-2/3}, Painleve II predictions), the fixed
small-separation regime (algebraic limits), and the fixed
large-separation regime (exponential decay of the cross coefficients).
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np
from mpmath import mp, mpf

from . import numerics as nu
from .errors import DegenerateData, WrongRegime
from .model import BrownianConfig, Regime, classify_separation, scaling_constants
from .mop import MultiIndexPair, WeightSystem
from .painleve import HmlSolution, evaluate_q, solve_hastings_mcleod
from .rh import assemble_rh_expansion

DEFAULT_N_LIST = (8, 12, 16, 24, 32, 48, 64)


def split_count(p1, n: int) -> tuple[int, int]:
    """n1 = round(p1 n), n2 = n - n1; realizes p_j = p_j* + O(1/n)."""
    n1 = int(mp.floor(nu.to_ext(p1) * n + mpf(1) / 2))
    n1 = min(max(n1, 1), n - 1)
    return n1, n - n1


@dataclass(frozen=True)
class ScalingRow:
    """One finite-n sample of the recurrence data with its predictions."""

    n: int
    n1: int
    n2: int
    T_n: mpf
    N: mpf
    c12c21: mpf
    c14c41: mpf
    c13c31: mpf
    c23c32: mpf
    c24c42: mpf
    c34c43: mpf
    diag_ratios: tuple          # (c12c23/c13, c12c24/c14, c21c13/c23, c21c14/c24)
    predictions: dict
    relation_residuals: tuple   # residuals of the four derived relations

    def as_dict(self) -> dict:
        digits = 30
        out = {
            "n": self.n,
            "n1": self.n1,
            "n2": self.n2,
            "T_n": mp.nstr(self.T_n, digits),
            "N": mp.nstr(self.N, digits),
        }
        for name in ("c12c21", "c14c41", "c13c31", "c23c32", "c24c42", "c34c43"):
            out[name] = mp.nstr(getattr(self, name), digits)
        for i, name in enumerate(
            ("c12c23_c13", "c12c24_c14", "c21c13_c23", "c21c14_c24")
        ):
            out[name] = mp.nstr(self.diag_ratios[i], digits)
        for key, val in self.predictions.items():
            out["pred_" + key] = mp.nstr(val, digits)
        for i, val in enumerate(self.relation_residuals):
            out[f"relation_residual_{i + 1}"] = mp.nstr(val, digits)
        return out


def _row_products(exp) -> dict:
    return {
        "c12c21": exp.product(1, 2),
        "c13c31": exp.product(1, 3),
        "c14c41": exp.product(1, 4),
        "c23c32": exp.product(2, 3),
        "c24c42": exp.product(2, 4),
        "c34c43": exp.product(3, 4),
    }


def _diag_ratios(exp) -> tuple:
    def real(v):
        return v.real if hasattr(v, "real") and not isinstance(v, mpf) else v

    r1 = real(exp.c(1, 2) * exp.c(2, 3) / exp.c(1, 3))
    r2 = real(exp.c(1, 2) * exp.c(2, 4) / exp.c(1, 4))
    r3 = real(exp.c(2, 1) * exp.c(1, 3) / exp.c(2, 3))
    r4 = real(exp.c(2, 1) * exp.c(1, 4) / exp.c(2, 4))
    return (r1, r2, r3, r4)


def _relation_residuals(exp, idx, ws) -> tuple:
    prods = _row_products(exp)
    base = ws.t * (1 - ws.t) / ws.N
    da = ws.a[0] - ws.a[1]
    db = ws.b[0] - ws.b[1]

    def rel(diff, *parts):
        scale = max((abs(v) for v in parts), default=mpf(0))
        return abs(diff) / scale if scale > 0 else abs(diff)

    r1 = rel(prods["c23c32"] - prods["c14c41"], prods["c23c32"], prods["c14c41"], base)
    r2 = rel(
        prods["c13c31"] - (base * idx.n[0] - prods["c14c41"]),
        prods["c13c31"], base * idx.n[0], prods["c14c41"],
    )
    r3 = rel(
        prods["c24c42"] - (base * idx.n[1] - prods["c14c41"]),
        prods["c24c42"], base * idx.n[1], prods["c14c41"],
    )
    lhs = ws.t**2 * db**2 * prods["c34c43"]
    rhs = (1 - ws.t) ** 2 * da**2 * prods["c12c21"]
    r4 = rel(lhs - rhs, lhs, rhs, base**2)
    return (r1, r2, r3, r4)


def _study_row(cfg, t, n: int, T_n, predictions) -> ScalingRow:
    n1, n2 = split_count(cfg.p1, n)
    N = mpf(n) / T_n
    ws = WeightSystem(a=(cfg.a1, cfg.a2), b=(cfg.b1, cfg.b2), t=t, N=N)
    idx = MultiIndexPair((n1, n2), (n1, n2))
    exp = assemble_rh_expansion(ws, idx)
    prods = _row_products(exp)
    return ScalingRow(
        n=n, n1=n1, n2=n2, T_n=T_n, N=N,
        c12c21=prods["c12c21"],
        c14c41=prods["c14c41"],
        c13c31=prods["c13c31"],
        c23c32=prods["c23c32"],
        c24c42=prods["c24c42"],
        c34c43=prods["c34c43"],
        diag_ratios=_diag_ratios(exp),
        predictions=predictions(n) if callable(predictions) else dict(predictions),
        relation_residuals=_relation_residuals(exp, idx, ws),
    )


@dataclass(frozen=True)
class DoubleScalingStudy:
    rows: tuple
    K: mpf
    s: mpf
    q_of_s: mpf
    t: mpf
    L: mpf


def double_scaling_study(
    cfg: BrownianConfig,
    L,
    t,
    n_list: Sequence[int] = DEFAULT_N_LIST,
    hml: Optional[HmlSolution] = None,
    precision: Optional[int] = None,
) -> DoubleScalingStudy:
    """Sample the recurrence coefficients along T_n = 1 + L n^{-2/3} at a
    critical-separation configuration and tabulate the Painleve II
    predictions next to them.
    """
    rep = classify_separation(
        BrownianConfig(cfg.a1, cfg.a2, cfg.b1, cfg.b2, cfg.p1, cfg.p2, T=1)
    )
    if rep.regime is not Regime.CRITICAL:
        raise WrongRegime(
            "double scaling requires (a1-a2)(b1-b2) = (sqrt p1 + sqrt p2)^2"
        )
    t = nu.to_ext(t)
    L = nu.to_ext(L)
    if abs(t - rep.t_crit) < mpf("1e-9"):
        raise WrongRegime("the multi-critical time t = t_crit is out of scope")
    consts = scaling_constants(
        BrownianConfig(cfg.a1, cfg.a2, cfg.b1, cfg.b2, cfg.p1, cfg.p2, T=1), L, t
    )
    if hml is None:
        hml = solve_hastings_mcleod()
    qs = evaluate_q(hml, consts.s)[0]
    da, db = cfg.a1 - cfg.a2, cfg.b1 - cfg.b2
    K2q2 = consts.K**2 * qs**2

    def predictions(n: int) -> dict:
        fac = mpf(n) ** (mpf(-2) / 3)
        return {
            "c12c21": -K2q2 * t**2 * db**2 * fac,
            "c14c41": K2q2 * t * (1 - t) * da * db * fac,
            "c12c23_c13": -K2q2 * t * db * mp.sqrt(da * db / cfg.p1) * fac,
            "c12c24_c14": -t * mp.sqrt(cfg.p2 * db / da),
            "c21c13_c23": t * mp.sqrt(cfg.p1 * db / da),
            "c21c14_c24": K2q2 * t * db * mp.sqrt(da * db / cfg.p2) * fac,
        }

    rows = []
    with mp.workprec(precision or mp.prec):
        for n in sorted(n_list):
            T_n = 1 + L * mpf(n) ** (mpf(-2) / 3)
            rows.append(_study_row(cfg, t, n, T_n, predictions))
    return DoubleScalingStudy(
        rows=tuple(rows), K=consts.K, s=consts.s, q_of_s=qs, t=t, L=L
    )


@dataclass(frozen=True)
class SmallSeparationStudy:
    rows: tuple
    limit_c12c21: mpf
    limit_c14c41: mpf
    order_c12c21: float
    order_c14c41: float


def small_separation_study(
    cfg: BrownianConfig,
    t,
    n_list: Sequence[int] = (8, 16, 32, 64),
    precision: Optional[int] = None,
) -> SmallSeparationStudy:
    """Deviations from the small-separation limits (p1 = p2 = 1/2 only):

    c12c21 -> -(t^2/(16 da^2)) (4 - da^2 db^2),
    c14c41 -> (t(1-t)/8) (2 - da db).
    """
    rep = classify_separation(cfg)
    if rep.regime is not Regime.SMALL:
        raise WrongRegime("small-separation study requires the small regime")
    if abs(cfg.p1 - mpf(1) / 2) > mpf("1e-30"):
        raise WrongRegime("small-separation expansions assume p1 = p2 = 1/2")
    t = nu.to_ext(t)
    da, db = cfg.a1 - cfg.a2, cfg.b1 - cfg.b2
    lim12 = -(t**2 / (16 * da**2)) * (4 - da**2 * db**2)
    lim14 = t * (1 - t) / 8 * (2 - da * db)
    T = cfg.temperature()
    preds = {"c12c21": lim12, "c14c41": lim14}
    rows = []
    with mp.workprec(precision or mp.prec):
        for n in sorted(n_list):
            rows.append(_study_row(cfg, t, n, T, preds))
    fit12 = convergence_rate_fit([r.c12c21 for r in rows], [r.n for r in rows], lim12)
    fit14 = convergence_rate_fit([r.c14c41 for r in rows], [r.n for r in rows], lim14)
    return SmallSeparationStudy(
        rows=tuple(rows),
        limit_c12c21=lim12,
        limit_c14c41=lim14,
        order_c12c21=fit12.order,
        order_c14c41=fit14.order,
    )


@dataclass(frozen=True)
class DecayFit:
    slope: float
    intercept: float
    r_squared: float
    values: tuple


@dataclass(frozen=True)
class LargeSeparationStudy:
    rows: tuple
    fit_c12c21: DecayFit
    fit_c14c41: DecayFit


def large_separation_decay(
    cfg: BrownianConfig,
    t,
    n_list: Sequence[int] = (8, 16, 24, 32, 40),
    precision: int = 512,
) -> LargeSeparationStudy:
    """Fit log |c12 c21| and log |c14 c41| against n in the large regime.

    The coefficients decay exponentially, so the default precision is
    raised: the values themselves are fine at 256 bits, but a healthy
    guard keeps the regression clean down to ~1e-120.
    """
    rep = classify_separation(cfg)
    if rep.regime is not Regime.LARGE:
        raise WrongRegime("decay study requires the large regime")
    t = nu.to_ext(t)
    T = cfg.temperature()
    rows = []
    with mp.workprec(precision):
        for n in sorted(n_list):
            rows.append(_study_row(cfg, t, n, T, {}))

    def fit(values):
        ns = np.array([float(r.n) for r in rows])
        logs = np.array([float(mp.log(abs(v))) for v in values])
        slope, intercept = np.polyfit(ns, logs, 1)
        pred = slope * ns + intercept
        ss_res = float(np.sum((logs - pred) ** 2))
        ss_tot = float(np.sum((logs - logs.mean()) ** 2))
        r2 = 1.0 - ss_res / ss_tot if ss_tot > 0 else 1.0
        return DecayFit(
            slope=float(slope),
            intercept=float(intercept),
            r_squared=r2,
            values=tuple(values),
        )

    return LargeSeparationStudy(
        rows=tuple(rows),
        fit_c12c21=fit([r.c12c21 for r in rows]),
        fit_c14c41=fit([r.c14c41 for r in rows]),
    )


@dataclass(frozen=True)
class RateFit:
    order: float
    stderr: float


def convergence_rate_fit(values, n_list, predicted_limit) -> RateFit:
    """Least-squares slope of log |value - limit| against log n.

    Returns the estimated convergence order (minus the slope) with the
    regression standard error of the slope.
    """
    if len(values) != len(n_list) or len(values) < 4:
        raise ValueError("need at least 4 samples")
    limit = nu.to_ext(predicted_limit)
    scale = max(abs(limit), mpf(1))
    devs = [abs(nu.to_ext(v) - limit) for v in values]
    if any(d < mpf("1e-30") * scale for d in devs):
        raise DegenerateData("deviation below resolution; cannot fit a rate")
    xs = np.array([float(mp.log(n)) for n in n_list])
    ys = np.array([float(mp.log(d)) for d in devs])
    coef, cov = np.polyfit(xs, ys, 1, cov=True)
    return RateFit(order=float(-coef[0]), stderr=float(np.sqrt(cov[0, 0])))
