"""Full RH matrix Y(z), closed-form Cauchy transforms, correlation kernel
and particle-density profiles.

Every Cauchy column entry is a finite combination of Faddeeva values: for
a polynomial-times-Gaussian integrand the substitution u = sqrt(gamma)(x-mu)
turns (1/2 pi i) int P(x) e^{-gamma(x-mu)^2+c}/(x-z) dx into moments
I_j(zeta) driven by I_0(zeta) = i pi w(zeta).
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache
from typing import Optional, Sequence

from mpmath import mp, mpf, mpc, matrix

from . import numerics as nu
from .errors import WrongRegime
from .model import (
    BrownianConfig,
    Regime,
    classify_separation,
    ellipse_endpoints,
    semicircle_density,
)
from .mop import MultiIndexPair, WeightSystem, shifted_solutions

TWO_PI_I = 2j * mp.pi


@dataclass(frozen=True)
class PolyGaussian:
    """P(x) exp(-gamma (x - mu)^2 + c) with real coefficients."""

    coeffs: tuple
    gamma: mpf
    mu: mpf
    log_scale: mpf = mpf(0)

    def __post_init__(self):
        object.__setattr__(self, "coeffs", tuple(nu.to_ext(v) for v in self.coeffs))
        object.__setattr__(self, "gamma", nu.to_ext(self.gamma))
        object.__setattr__(self, "mu", nu.to_ext(self.mu))
        object.__setattr__(self, "log_scale", nu.to_ext(self.log_scale))
        if self.gamma <= 0:
            raise ValueError("gamma must be positive")

    def __call__(self, x):
        acc = mp.mpf(0)
        for c in reversed(self.coeffs):
            acc = acc * x + c
        return acc * mp.exp(-self.gamma * (x - self.mu) ** 2 + self.log_scale)

    def mass(self) -> mpf:
        """int pg(x) dx via central Gaussian moments of the shifted polynomial."""
        m0 = mp.sqrt(mp.pi / self.gamma) * mp.exp(self.log_scale)
        shifted = _shift_poly(self.coeffs, self.mu, mpf(1))
        inv2g = 1 / (2 * self.gamma)
        central = [m0]
        for j in range(1, len(shifted)):
            central.append((j - 1) * inv2g * central[j - 2] if j >= 2 else mpf(0))
        return sum(c * central[j] for j, c in enumerate(shifted))


def _shift_poly(coeffs: Sequence, mu, scale) -> list:
    """Coefficients of P(mu + scale * u) in powers of u."""
    out = [mp.mpf(0)] * max(len(coeffs), 1)
    for c in reversed(coeffs):
        # out(u) <- out(u) * (mu + scale u) + c
        carry = mp.mpf(0)
        new = [mp.mpf(0)] * len(out)
        for j in range(len(out) - 1, -1, -1):
            new[j] = out[j] * mu + (out[j - 1] * scale if j >= 1 else 0)
        new[0] += c
        out = new
    return out


_GAUSS_HALF_MOMENTS_CACHE: dict = {}


def _gauss_moments(jmax: int) -> list:
    """G_j = int u^j e^{-u^2} du: sqrt(pi) * (j-1)!! / 2^{j/2} for even j."""
    key = (jmax, mp.prec)
    cached = _GAUSS_HALF_MOMENTS_CACHE.get(key)
    if cached is not None:
        return cached
    out = [mp.sqrt(mp.pi)]
    for j in range(1, jmax + 1):
        if j % 2 == 1:
            out.append(mpf(0))
        else:
            out.append(out[j - 2] * (j - 1) / 2)
    _GAUSS_HALF_MOMENTS_CACHE[key] = out
    return out


def cauchy_transform(pg: PolyGaussian, z, derivative: bool = False, w_value=None):
    """(1/(2 pi i)) int pg(x)/(x - z) dx, continuous up to the real axis
    from above; lower half-plane values via C(z) = -conj(C(conj z)).

    With ``derivative=True`` returns (value, d/dz value).  ``w_value`` may
    pass a precomputed Faddeeva value w(zeta) for reuse across entries.
    """
    z = mpc(z)
    if z.imag < 0:
        res = cauchy_transform(pg, mp.conj(z), derivative=derivative)
        if derivative:
            return -mp.conj(res[0]), -mp.conj(res[1])
        return -mp.conj(res)
    sqrt_g = mp.sqrt(pg.gamma)
    zeta = sqrt_g * (z - pg.mu)
    shifted = _shift_poly(pg.coeffs, pg.mu, 1 / sqrt_g)
    deg = len(shifted) - 1
    gm = _gauss_moments(max(deg, 1))
    w = nu.faddeeva(zeta) if w_value is None else w_value
    i_vals = [1j * mp.pi * w]
    for j in range(1, deg + 1):
        i_vals.append(zeta * i_vals[j - 1] + gm[j - 1])
    scale = mp.exp(pg.log_scale) / TWO_PI_I
    value = scale * sum(c * i_vals[j] for j, c in enumerate(shifted))
    if not derivative:
        return value
    ip = [1j * mp.pi * (-2 * zeta * w + 2j / mp.sqrt(mp.pi))]
    for j in range(1, deg + 1):
        ip.append(i_vals[j - 1] + zeta * ip[j - 1])
    dvalue = scale * sqrt_g * sum(c * ip[j] for j, c in enumerate(shifted))
    return value, dvalue


# ---------------------------------------------------------------------------
# The RH matrix Y(z)
# ---------------------------------------------------------------------------

class YEvaluator:
    """Evaluates Y(z) (and dY/dz) for an index pair with |n| = |m|.

    The p + q multiple-orthogonal solves happen once at construction; each
    evaluation costs one Faddeeva value per product weight.
    """

    def __init__(self, ws: WeightSystem, idx: MultiIndexPair):
        if idx.size_n != idx.size_m:
            raise ValueError("Y(z) needs |n| = |m|")
        self.ws = ws
        self.idx = idx
        self.rows = shifted_solutions(ws, idx)
        self.size = ws.p + ws.q
        gamma = ws.gamma
        # Per (row, l): the list of PolyGaussians whose transforms sum to
        # the (row, p+l) entry before the D factor.
        self._pgs: dict = {}
        for i, sol in enumerate(self.rows):
            if sol is None:
                continue
            for l in range(ws.q):
                parts = []
                for k in range(ws.p):
                    if not sol.coeffs[k]:
                        continue
                    parts.append(
                        PolyGaussian(
                            coeffs=sol.coeffs[k],
                            gamma=gamma,
                            mu=ws.mu(k, l),
                            log_scale=ws.log_scale(k, l),
                        )
                    )
                self._pgs[(i, l)] = parts

    def _d_factor(self, i: int):
        return mpf(1) if i < self.ws.p else -TWO_PI_I

    def value(self, z, boundary: str = "above", derivative: bool = False):
        """Y(z); for real z the boundary value from 'above' or 'below'."""
        z = mpc(z)
        if z.imag == 0 and boundary == "below":
            res = self.value(z, boundary="above", derivative=derivative)
            if derivative:
                val, dval = res
                return _reflect_matrix(self, val), _reflect_matrix(self, dval)
            return _reflect_matrix(self, res)
        p, q = self.ws.p, self.ws.q
        sqrt_g = mp.sqrt(self.ws.gamma)
        wmap = {}
        use_conj = z.imag < 0
        zz = mp.conj(z) if use_conj else z
        for k in range(p):
            for l in range(q):
                zeta = sqrt_g * (zz - self.ws.mu(k, l))
                wmap[(k, l)] = nu.faddeeva(zeta)
        Y = matrix(self.size, self.size)
        dY = matrix(self.size, self.size) if derivative else None
        for i, sol in enumerate(self.rows):
            d = self._d_factor(i)
            if sol is None:
                Y[i, i] = mpf(1)
                continue
            for j in range(p):
                Y[i, j] = d * sol.eval_A(j, z)
                if derivative:
                    dY[i, j] = d * sol.eval_A_prime(j, z)
            for l in range(q):
                acc = mpc(0)
                dacc = mpc(0)
                for pg, k in zip(self._pgs[(i, l)], _nonempty_ks(sol)):
                    if use_conj:
                        res = cauchy_transform(
                            pg, zz, derivative=derivative, w_value=wmap[(k, l)]
                        )
                        if derivative:
                            acc += -mp.conj(res[0])
                            dacc += -mp.conj(res[1])
                        else:
                            acc += -mp.conj(res)
                    else:
                        res = cauchy_transform(
                            pg, z, derivative=derivative, w_value=wmap[(k, l)]
                        )
                        if derivative:
                            acc += res[0]
                            dacc += res[1]
                        else:
                            acc += res
                Y[i, p + l] = d * acc
                if derivative:
                    dY[i, p + l] = d * dacc
        if derivative:
            return Y, dY
        return Y


def _nonempty_ks(sol) -> list:
    return [k for k in range(len(sol.coeffs)) if sol.coeffs[k]]


def _reflect_matrix(ev: YEvaluator, mat: matrix):
    """Boundary value from below: polynomial columns unchanged, Cauchy
    columns replaced by -conj (Schwarz reflection of real-coefficient data).

    Rows carrying a -2 pi i factor conjugate back to the same factor, so
    the reflection acts column-wise on the pre-factor transform values.
    """
    p, q = ev.ws.p, ev.ws.q
    out = matrix(ev.size, ev.size)
    for i in range(ev.size):
        d = ev._d_factor(i)
        for j in range(p):
            out[i, j] = mat[i, j]
        for l in range(q):
            if ev.rows[i] is None:
                out[i, p + l] = mat[i, p + l]  # constant unit row
                continue
            pre = mat[i, p + l] / d
            out[i, p + l] = d * (-mp.conj(pre))
    return out


@lru_cache(maxsize=64)
def _evaluator(ws: WeightSystem, idx: MultiIndexPair, prec: int) -> YEvaluator:
    return YEvaluator(ws, idx)


def y_evaluator(ws: WeightSystem, idx: MultiIndexPair) -> YEvaluator:
    return _evaluator(ws, idx, mp.prec)


def assemble_Y(ws: WeightSystem, idx: MultiIndexPair, z, boundary: str = "above"):
    """The (p+q) x (p+q) RH matrix Y(z)."""
    return y_evaluator(ws, idx).value(z, boundary=boundary)


def jump_matrix(ws: WeightSystem, x) -> matrix:
    """[[I, W(x)], [0, I]] with the rank-one block W = w1 w2^T."""
    p, q = ws.p, ws.q
    out = nu.identity(p + q)
    for k in range(p):
        w1 = ws.w1(k, x)
        for l in range(q):
            out[k, p + l] = w1 * ws.w2(l, x)
    return out


# ---------------------------------------------------------------------------
# Correlation kernel and density
# ---------------------------------------------------------------------------

def correlation_kernel(ws: WeightSystem, idx: MultiIndexPair, x, y=None):
    """K(x, y) of the determinantal process; K(x, x) by confluence.

    Boundary values are taken from above.  Y^{-1} uses the adjugate (the
    determinant is 1 up to roundoff and is divided out).
    """
    ev = y_evaluator(ws, idx)
    p, q = ws.p, ws.q
    x = nu.to_ext(x)
    confluent = y is None or y == x
    y = x if y is None else nu.to_ext(y)
    v1 = [ws.w1(k, x) for k in range(p)]
    v2 = [ws.w2(l, y) for l in range(q)]
    if confluent:
        Y, dY = ev.value(x, derivative=True)
        core = nu.inverse_unimodular(Y) * dY
    else:
        Yx = ev.value(x)
        Yy = ev.value(y)
        core = nu.inverse_unimodular(Yy) * Yx
    acc = mpc(0)
    for l in range(q):
        for k in range(p):
            acc += v2[l] * core[p + l, k] * v1[k]
    if not confluent:
        acc /= x - y
    val = acc / TWO_PI_I
    return val.real if abs(val.imag) <= mpf("1e-6") * max(abs(val.real), mpf(1)) else val


@dataclass
class KernelGrid:
    """Sampled one-point density (1/n) K_n(x, x) with support bookkeeping."""

    t: mpf
    xs: list
    values: list
    interval_flags: list  # 0 outside, 1 or 2 inside that group's support
    semicircle_1: list
    semicircle_2: list
    sup_distance_1: mpf
    sup_distance_2: mpf

    def rows(self):
        for i, x in enumerate(self.xs):
            yield (
                x,
                self.values[i],
                self.semicircle_1[i],
                self.semicircle_2[i],
                self.interval_flags[i],
            )


def default_grid(cfg: BrownianConfig, t, points: int = 400) -> list:
    al2, _ = ellipse_endpoints(cfg, t, 2)
    _, be1 = ellipse_endpoints(cfg, t, 1)
    lo = al2 - mpf(1) / 2
    hi = be1 + mpf(1) / 2
    h = (hi - lo) / (points - 1)
    return [lo + i * h for i in range(points)]


def density_profile(
    ws: WeightSystem,
    idx: MultiIndexPair,
    cfg: BrownianConfig,
    t,
    grid: Optional[Sequence] = None,
    interior_fraction=mpf("0.8"),
) -> KernelGrid:
    """(1/n) K_n(x, x) on a grid plus sup-distance to the two semicircle
    laws over the interior of each support interval (edges carry Airy-size
    transients and are excluded)."""
    rep = classify_separation(cfg)
    t = nu.to_ext(t)
    if rep.regime is Regime.SMALL:
        raise WrongRegime("density comparison needs large or critical separation")
    if rep.regime is Regime.CRITICAL and abs(t - rep.t_crit) < mpf("1e-12"):
        raise WrongRegime("critical separation at the critical time is out of scope")
    n = idx.size_n
    if grid is None:
        grid = default_grid(cfg, t)
    sup1, sup2 = ellipse_endpoints(cfg, t, 1), ellipse_endpoints(cfg, t, 2)
    margin = (1 - interior_fraction) / 2
    values, flags, semi1, semi2 = [], [], [], []
    d1 = d2 = mpf(0)
    for x in grid:
        val = correlation_kernel(ws, idx, x) / n
        values.append(val)
        flag = 0
        s1 = s2 = mpf(0)
        if sup1[0] <= x <= sup1[1]:
            flag = 1
            s1 = semicircle_density(cfg, t, 1, x)
            lo = sup1[0] + margin * (sup1[1] - sup1[0])
            hi = sup1[1] - margin * (sup1[1] - sup1[0])
            if lo <= x <= hi:
                d1 = max(d1, abs(val - s1))
        elif sup2[0] <= x <= sup2[1]:
            flag = 2
            s2 = semicircle_density(cfg, t, 2, x)
            lo = sup2[0] + margin * (sup2[1] - sup2[0])
            hi = sup2[1] - margin * (sup2[1] - sup2[0])
            if lo <= x <= hi:
                d2 = max(d2, abs(val - s2))
        flags.append(flag)
        semi1.append(s1)
        semi2.append(s2)
    return KernelGrid(
        t=t,
        xs=list(grid),
        values=values,
        interval_flags=flags,
        semicircle_1=semi1,
        semicircle_2=semi2,
        sup_distance_1=d1,
        sup_distance_2=d2,
    )
