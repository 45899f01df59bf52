"""Riemann-Hilbert expansion data Y1/Y2, recurrence and transfer matrices,
the Lax matrix, and verification of the algebraic identities they satisfy.

Conventions: the expansion Y(z) = (I + Y1/z + Y2/z^2 + ...) diag(z^{n_k},
z^{-m_l}) fixes Y1, Y2.  Entries c_{i,j} of Y1 carry the D = diag(I_p,
-2 pi i I_q) factors, so polynomial-side entries of rows p+1..p+q and
moment-side entries of rows 1..p are purely imaginary while every product
c_{i,j} c_{j,i} appearing in a recurrence is real.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache
from typing import Optional, Sequence

import numpy as np
from mpmath import mp, mpf, mpc, matrix

from . import numerics as nu
from .errors import (
    BranchCollision,
    NoConvergence,
    OnContour,
    ZeroDenominator,
)
from .kernel import y_evaluator
from .mop import (
    MopSolution,
    MultiIndexPair,
    WeightSystem,
    q_moment,
    shifted_solutions,
    solve_mop,
)

TWO_PI_I = 2j * mp.pi


@dataclass(frozen=True)
class RhExpansion:
    """Y1 and Y2 of the large-z expansion, with block views."""

    ws: WeightSystem
    idx: MultiIndexPair
    Y1: matrix
    Y2: matrix

    @property
    def p(self) -> int:
        return self.ws.p

    @property
    def q(self) -> int:
        return self.ws.q

    def _block(self, mat, rows, cols):
        out = matrix(len(rows), len(cols))
        for i, r in enumerate(rows):
            for j, c in enumerate(cols):
                out[i, j] = mat[r, c]
        return out

    def C11(self):
        return self._block(self.Y1, range(self.p), range(self.p))

    def C12(self):
        return self._block(self.Y1, range(self.p), range(self.p, self.p + self.q))

    def C21(self):
        return self._block(self.Y1, range(self.p, self.p + self.q), range(self.p))

    def C22(self):
        return self._block(
            self.Y1, range(self.p, self.p + self.q), range(self.p, self.p + self.q)
        )

    def c(self, i: int, j: int):
        """Entry c_{i,j} with 1-based indices, as in the recurrence relations."""
        return self.Y1[i - 1, j - 1]

    def product(self, i: int, j: int) -> mpf:
        """Real recurrence coefficient c_{i,j} c_{j,i} (1-based)."""
        v = self.Y1[i - 1, j - 1] * self.Y1[j - 1, i - 1]
        return v.real if isinstance(v, mpc) else v


def _expansion_uncached(ws: WeightSystem, idx: MultiIndexPair) -> RhExpansion:
    size = ws.p + ws.q
    y1 = matrix(size, size)
    y2 = matrix(size, size)
    rows = shifted_solutions(ws, idx)
    for i, sol in enumerate(rows):
        if sol is None:
            continue  # degenerate unit row: zero contribution to Y1, Y2
        d = mpf(1) if i < ws.p else -TWO_PI_I
        for j in range(ws.p):
            y1[i, j] = d * sol.coefficient(j, idx.n[j] - 1)
            y2[i, j] = d * sol.coefficient(j, idx.n[j] - 2)
        moment_factor = -d / TWO_PI_I
        for l in range(ws.q):
            ml = idx.m[l]
            y1[i, ws.p + l] = moment_factor * q_moment(sol, ws, l, ml)
            y2[i, ws.p + l] = moment_factor * q_moment(sol, ws, l, ml + 1)
    return RhExpansion(ws=ws, idx=idx, Y1=y1, Y2=y2)


@lru_cache(maxsize=256)
def _expansion_cached(ws: WeightSystem, idx: MultiIndexPair, prec: int) -> RhExpansion:
    return _expansion_uncached(ws, idx)


def assemble_rh_expansion(ws: WeightSystem, idx: MultiIndexPair) -> RhExpansion:
    """Y1 and Y2 from the p+q shifted MOP solves (cached per precision)."""
    return _expansion_cached(ws, idx, mp.prec)


def recurrence_matrix_H(exp: RhExpansion) -> matrix:
    """Strictly upper-triangular table of the products c_{i,j} c_{j,i}."""
    size = exp.p + exp.q
    out = matrix(size, size)
    for i in range(size):
        for j in range(i + 1, size):
            out[i, j] = exp.product(i + 1, j + 1)
    return out


# ---------------------------------------------------------------------------
# Transfer matrices
# ---------------------------------------------------------------------------

def forward_transfer(
    exp_nm: RhExpansion, exp_shifted: RhExpansion, k: int, l: int, z
) -> matrix:
    """U with Y_{n+e_k, m+e_l}(z) = U(z) Y_{n,m}(z); 0-based k, l."""
    p, q = exp_nm.p, exp_nm.q
    size = p + q
    z = mpc(z)
    out = matrix(size, size)
    for j in range(size):
        if j not in (k, p + l):
            out[j, j] = mpf(1)
    out[k, k] += z
    for i in range(size):
        out[i, k] += exp_shifted.Y1[i, k]
    for j in range(size):
        out[k, j] -= exp_nm.Y1[k, j]
    return out


def backward_transfer(
    exp_nm: RhExpansion, exp_shifted: RhExpansion, k: int, l: int, z
) -> matrix:
    """U~ with Y_{n,m}(z) = U~(z) Y_{n+e_k, m+e_l}(z); inverse of U."""
    p, q = exp_nm.p, exp_nm.q
    size = p + q
    z = mpc(z)
    out = matrix(size, size)
    for j in range(size):
        if j not in (k, p + l):
            out[j, j] = mpf(1)
    out[p + l, p + l] += z
    for i in range(size):
        out[i, p + l] += exp_nm.Y1[i, p + l]
    for j in range(size):
        out[p + l, j] -= exp_shifted.Y1[p + l, j]
    return out


# ---------------------------------------------------------------------------
# Diagonal recurrence coefficients
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class DiagonalCoefficient:
    """c_{k,k} - c~_{k,k} via the Lax compatibility formula and via Y2."""

    via_lax: mpf
    via_y2: mpf

    @property
    def disagreement(self) -> mpf:
        return abs(self.via_lax - self.via_y2)


def diagonal_recurrence(
    exp: RhExpansion, k: int, l: int, cross_check_tol=None
) -> DiagonalCoefficient:
    """Diagonal recurrence coefficient from Y1 alone (Gaussian-weights
    formula) and from Y1 plus Y2; both routes must agree.

    0-based k < p, l < q.
    """
    ws, p, q = exp.ws, exp.p, exp.q
    y1, y2 = exp.Y1, exp.Y2
    denom = y1[k, p + l]
    scale = max(nu.max_abs(y1), mpf(1))
    if abs(denom) < scale * mpf(2) ** (-(mp.prec - 16)):
        raise ZeroDenominator(f"c_{{{k + 1},{p + l + 1}}} vanished numerically")
    acc = mpc(0)
    for kk in range(p):
        if kk != k:
            acc += y1[k, kk] * y1[kk, p + l]
    via_lax = (1 - ws.t) * ws.a[k] + ws.t * ws.b[l] - acc / denom
    acc2 = mpc(0)
    for ll in range(q):
        acc2 += y1[k, p + ll] * y1[p + ll, p + l]
    via_y2 = (y2[k, p + l] - acc - acc2) / denom
    via_lax = via_lax.real if isinstance(via_lax, mpc) else via_lax
    via_y2 = via_y2.real if isinstance(via_y2, mpc) else via_y2
    result = DiagonalCoefficient(via_lax=via_lax, via_y2=via_y2)
    if cross_check_tol is None:
        cross_check_tol = mpf(2) ** (-(mp.prec // 4))
    if result.disagreement > cross_check_tol * max(mpf(1), abs(via_lax)):
        raise NoConvergence(
            f"diagonal coefficient routes disagree by {result.disagreement}"
        )
    return result


# ---------------------------------------------------------------------------
# Five-term (p+q+1 term) recurrences
# ---------------------------------------------------------------------------

def _vector_values(sol: MopSolution, z) -> list:
    return [sol.eval_A(k, z) for k in range(len(sol.coeffs))]


def verify_five_term_recurrence(
    ws: WeightSystem, idx: MultiIndexPair, k: int, l: int, zs: Sequence
) -> mpf:
    """Residual of the forward p+q+1 term recurrence at the points zs.

    All participating vectors use the type (II,k) normalization.  Raises
    InvalidIndex when a shift would push a component negative.
    """
    p, q = ws.p, ws.q
    exp = assemble_rh_expansion(ws, idx)
    n_lhs = tuple(v + 2 * (i == k) for i, v in enumerate(idx.n))
    m_lhs = tuple(v + (i == l) for i, v in enumerate(idx.m))
    lhs_sol = solve_mop(ws, MultiIndexPair(n_lhs, m_lhs), ("II", k))
    main_sol = solve_mop(ws, idx.shift_n(k), ("II", k))
    off_n = {
        kk: solve_mop(ws, idx.shift_n(kk), ("II", k)) for kk in range(p) if kk != k
    }
    off_m = {ll: solve_mop(ws, idx.shift_m(ll, -1), ("II", k)) for ll in range(q)}
    diag = diagonal_recurrence(exp, k, l).via_lax
    worst = mpf(0)
    for z in zs:
        z = mpc(z)
        lhs = _vector_values(lhs_sol, z)
        main = _vector_values(main_sol, z)
        terms = [[(z - diag) * v for v in main]]
        for kk, sol in off_n.items():
            coef = exp.product(k + 1, kk + 1)
            terms.append([-coef * v for v in _vector_values(sol, z)])
        for ll, sol in off_m.items():
            coef = exp.product(k + 1, p + ll + 1)
            terms.append([-coef * v for v in _vector_values(sol, z)])
        for comp in range(p):
            rhs = sum(term[comp] for term in terms)
            scale = max(
                [abs(lhs[comp])] + [abs(term[comp]) for term in terms]
            )
            if scale == 0:
                continue
            worst = max(worst, abs(lhs[comp] - rhs) / scale)
    return worst


def verify_backward_recurrence(
    ws: WeightSystem, idx: MultiIndexPair, k: int, l: int, zs: Sequence
) -> mpf:
    """Residual of the backward recurrence (type (I,l) normalization)."""
    p, q = ws.p, ws.q
    exp = assemble_rh_expansion(ws, idx)
    shifted = idx.shift_n(k).shift_m(l)
    exp_sh = assemble_rh_expansion(ws, shifted)
    lhs_sol = solve_mop(ws, idx.shift_m(l, -1), ("I", l))
    main_sol = solve_mop(ws, idx.shift_n(k), ("I", l))
    off_n = {
        kk: solve_mop(ws, shifted.shift_n(kk), ("I", l)) for kk in range(p)
    }
    off_m = {
        ll: solve_mop(ws, shifted.shift_m(ll, -1), ("I", l))
        for ll in range(q)
        if ll != l
    }
    diag = exp.Y1[p + l, p + l] - exp_sh.Y1[p + l, p + l]
    worst = mpf(0)
    for z in zs:
        z = mpc(z)
        lhs = _vector_values(lhs_sol, z)
        main = _vector_values(main_sol, z)
        terms = [[(z + diag) * v for v in main]]
        for kk, sol in off_n.items():
            coef = exp_sh.Y1[p + l, kk] * exp_sh.Y1[kk, p + l]
            terms.append([-coef * v for v in _vector_values(sol, z)])
        for ll, sol in off_m.items():
            coef = exp_sh.Y1[p + l, p + ll] * exp_sh.Y1[p + ll, p + l]
            terms.append([-coef * v for v in _vector_values(sol, z)])
        for comp in range(p):
            rhs = sum(term[comp] for term in terms)
            scale = max(
                [abs(lhs[comp])] + [abs(term[comp]) for term in terms]
            )
            if scale == 0:
                continue
            worst = max(worst, abs(lhs[comp] - rhs) / scale)
    return worst


# ---------------------------------------------------------------------------
# Lax matrix and differential equation
# ---------------------------------------------------------------------------

def lax_matrix(exp: RhExpansion, z) -> matrix:
    """V(z) = -(N/(t(1-t))) [[z I - D_a, -C12], [C21, D_b]]."""
    ws, p, q = exp.ws, exp.p, exp.q
    z = mpc(z)
    pref = -ws.N / (ws.t * (1 - ws.t))
    out = matrix(p + q, p + q)
    for i in range(p):
        out[i, i] = pref * (z - (1 - ws.t) * ws.a[i])
    for l in range(q):
        out[p + l, p + l] = pref * ws.t * ws.b[l]
    for i in range(p):
        for l in range(q):
            out[i, p + l] = -pref * exp.Y1[i, p + l]
    for l in range(q):
        for i in range(p):
            out[p + l, i] = pref * exp.Y1[p + l, i]
    return out


def _psi_exponent_factors(ws: WeightSystem, z):
    """f_j(z) and f_j'(z)/f_j(z) for the constant-jump conjugation."""
    p, q = ws.p, ws.q
    t, N = ws.t, ws.N
    fs, logderivs = [], []
    for k in range(p):
        fs.append(mp.exp(-(N / (2 * t * (1 - t))) * (z * z - 2 * (1 - t) * ws.a[k] * z)))
        logderivs.append(-(N / (t * (1 - t))) * (z - (1 - t) * ws.a[k]))
    for l in range(q):
        fs.append(mp.exp(-(N / (1 - t)) * ws.b[l] * z))
        logderivs.append(-(N / (1 - t)) * ws.b[l])
    return fs, logderivs


_FD8_OFFSETS = (1, 2, 3, 4)
_FD8_WEIGHTS = (mpf(4) / 5, mpf(-1) / 5, mpf(4) / 105, mpf(-1) / 280)


def verify_lax_ode(ws: WeightSystem, idx: MultiIndexPair, z, fd_step=None):
    """Relative residual of Psi' = V Psi at a non-real z.

    Returns (relative_residual, polynomial_column_residual).  Polynomial
    columns of Psi' are exact (polynomial derivative plus the log-derivative
    of the exponent factor); Cauchy columns are differentiated by 8th-order
    central finite differences of the closed-form transforms.
    """
    z = mpc(z)
    if z.imag == 0:
        raise OnContour("the Lax ODE check requires Im z != 0")
    p, q = ws.p, ws.q
    size = p + q
    ev = y_evaluator(ws, idx)
    exp = assemble_rh_expansion(ws, idx)
    Y, dY_analytic = ev.value(z, derivative=True)
    if fd_step is None:
        fd_step = mpf(10) ** (-(mp.prec // 24))
    h = mpf(fd_step)
    dY = matrix(size, size)
    for i in range(size):
        for j in range(p):
            dY[i, j] = dY_analytic[i, j]
    samples = {}
    for off in _FD8_OFFSETS:
        samples[off] = ev.value(z + off * h)
        samples[-off] = ev.value(z - off * h)
    for i in range(size):
        for j in range(p, size):
            acc = mpc(0)
            for off, wgt in zip(_FD8_OFFSETS, _FD8_WEIGHTS):
                acc += wgt * (samples[off][i, j] - samples[-off][i, j])
            dY[i, j] = acc / h
    fs, logderivs = _psi_exponent_factors(ws, z)
    psi = matrix(size, size)
    dpsi = matrix(size, size)
    dpsi_poly = matrix(size, size)
    for i in range(size):
        for j in range(size):
            psi[i, j] = Y[i, j] * fs[j]
            dpsi[i, j] = (dY[i, j] + Y[i, j] * logderivs[j]) * fs[j]
            dpsi_poly[i, j] = (dY_analytic[i, j] + Y[i, j] * logderivs[j]) * fs[j]
    V = lax_matrix(exp, z)
    rhs = V * psi
    scale = nu.max_abs(rhs)
    res = nu.max_abs(dpsi - rhs) / scale
    res_poly = max(
        abs(dpsi_poly[i, j] - rhs[i, j]) for i in range(size) for j in range(p)
    ) / scale
    return res, res_poly


# ---------------------------------------------------------------------------
# Scalar-product relations
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class ScalarProductReport:
    """Relative residuals of the Lax-compatibility scalar products."""

    row_sums: tuple      # (C12 C21)_{kk} = t(1-t) n_k / N
    column_sums: tuple   # (C21 C12)_{ll} = t(1-t) m_l / N
    skew_top: tuple      # off-diagonal (C12 C21) vs C11
    skew_bottom: tuple   # off-diagonal (C21 C12) vs C22
    fourth_relation: Optional[mpf]
    determinant_top: Optional[mpf]
    determinant_bottom: Optional[mpf]

    @property
    def max_residual(self) -> mpf:
        vals = list(self.row_sums) + list(self.column_sums)
        vals += list(self.skew_top) + list(self.skew_bottom)
        for v in (self.fourth_relation, self.determinant_top, self.determinant_bottom):
            if v is not None:
                vals.append(v)
        return max(vals) if vals else mpf(0)


def _rel(diff, *participants) -> mpf:
    scale = max((abs(x) for x in participants), default=mpf(0))
    if scale == 0:
        return abs(diff)
    return abs(diff) / scale


def scalar_product_report(exp: RhExpansion) -> ScalarProductReport:
    ws, p, q = exp.ws, exp.p, exp.q
    idx = exp.idx
    t, N = ws.t, ws.N
    c12, c21 = exp.C12(), exp.C21()
    c11, c22 = exp.C11(), exp.C22()
    top = c12 * c21
    bottom = c21 * c12
    base = t * (1 - t) / N
    row_sums = tuple(
        _rel(top[k, k] - base * idx.n[k], top[k, k], base * idx.n[k])
        for k in range(p)
    )
    column_sums = tuple(
        _rel(bottom[l, l] - base * idx.m[l], bottom[l, l], base * idx.m[l])
        for l in range(q)
    )
    skew_top, skew_bottom = [], []
    for k in range(p):
        for kk in range(p):
            if k == kk:
                continue
            target = -(1 - t) * (ws.a[k] - ws.a[kk]) * c11[k, kk]
            skew_top.append(_rel(top[k, kk] - target, top[k, kk], target))
    for l in range(q):
        for ll in range(q):
            if l == ll:
                continue
            target = -t * (ws.b[l] - ws.b[ll]) * c22[l, ll]
            skew_bottom.append(_rel(bottom[l, ll] - target, bottom[l, ll], target))
    fourth = det_top = det_bottom = None
    if p == 2 and q == 2:
        if idx.n[0] == idx.m[0] and idx.n[1] == idx.m[1]:
            lhs = t**2 * (ws.b[0] - ws.b[1]) ** 2 * exp.product(3, 4)
            rhs = (1 - t) ** 2 * (ws.a[0] - ws.a[1]) ** 2 * exp.product(1, 2)
            fourth = _rel(lhs - rhs, lhs, rhs, base**2)
        det_t = nu.lu_det(top)
        tgt_t = base**2 * idx.n[0] * idx.n[1] + (1 - t) ** 2 * (
            ws.a[0] - ws.a[1]
        ) ** 2 * exp.product(1, 2)
        det_top = _rel(det_t - tgt_t, det_t, tgt_t, base**2)
        det_b = nu.lu_det(bottom)
        tgt_b = base**2 * idx.m[0] * idx.m[1] + t**2 * (
            ws.b[0] - ws.b[1]
        ) ** 2 * exp.product(3, 4)
        det_bottom = _rel(det_b - tgt_b, det_b, tgt_b, base**2)
    return ScalarProductReport(
        row_sums=row_sums,
        column_sums=column_sums,
        skew_top=tuple(skew_top),
        skew_bottom=tuple(skew_bottom),
        fourth_relation=fourth,
        determinant_top=det_top,
        determinant_bottom=det_bottom,
    )


# ---------------------------------------------------------------------------
# Involution symmetry
# ---------------------------------------------------------------------------

def swapped_system(ws: WeightSystem, idx: MultiIndexPair):
    """Exchange starting and ending data: t <-> 1-t, (a, n) <-> (b, m)."""
    return (
        WeightSystem(a=ws.b, b=ws.a, t=1 - ws.t, N=ws.N),
        MultiIndexPair(idx.m, idx.n),
    )


def involution_matrix(p: int, q: int) -> matrix:
    """J = [[0, I_q], [-I_p, 0]], mapping the original index space onto the
    swapped one (rows: q then p; columns: p then q)."""
    out = matrix(p + q, p + q)
    for l in range(q):
        out[l, p + l] = mpf(1)
    for k in range(p):
        out[q + k, k] = mpf(-1)
    return out


def involution_matrix_inverse(p: int, q: int) -> matrix:
    """J^{-1} = [[0, -I_p], [I_q, 0]]; equals -J only when p = q."""
    out = matrix(p + q, p + q)
    for k in range(p):
        out[k, q + k] = mpf(-1)
    for l in range(q):
        out[p + l, l] = mpf(1)
    return out


def involution_check(exp: RhExpansion, exp_swapped: RhExpansion) -> mpf:
    """Residual of Y1_swapped = -J Y1^T J^{-1} (relative, max-entry scale)."""
    p, q = exp.p, exp.q
    J = involution_matrix(p, q)
    Jinv = involution_matrix_inverse(p, q)
    y1t = matrix(p + q, p + q)
    for i in range(p + q):
        for j in range(p + q):
            y1t[i, j] = exp.Y1[j, i]
    target = -(J * y1t * Jinv)
    scale = max(nu.max_abs(exp_swapped.Y1), mpf(1))
    return nu.max_abs(exp_swapped.Y1 - target) / scale


# ---------------------------------------------------------------------------
# Spectral curve
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class BranchFit:
    slope: mpf
    constant: mpf
    inverse_z: mpf
    fit_error: mpf


@dataclass(frozen=True)
class SpectralCurveReport:
    #: {(i, j): coefficient of xi^i z^j} of det(xi I + V(z)/n)
    polynomial: dict
    branches: tuple  # BranchFit per sheet, slope sheets first


def _poly_mul(a: dict, b: dict) -> dict:
    out: dict = {}
    for (i1, j1), c1 in a.items():
        for (i2, j2), c2 in b.items():
            key = (i1 + i2, j1 + j2)
            out[key] = out.get(key, mpc(0)) + c1 * c2
    return out


def _poly_det(entries: list) -> dict:
    n = len(entries)
    if n == 1:
        return entries[0][0]
    out: dict = {}
    for col in range(n):
        sub = [
            [entries[r][c] for c in range(n) if c != col] for r in range(1, n)
        ]
        term = _poly_mul(entries[0][col], _poly_det(sub))
        sign = 1 if col % 2 == 0 else -1
        for key, val in term.items():
            out[key] = out.get(key, mpc(0)) + sign * val
    return {k: v for k, v in out.items() if v != 0}


def characteristic_polynomial(exp: RhExpansion) -> dict:
    """det(xi I + V(z)/n) as {(xi_power, z_power): coefficient}."""
    n = exp.idx.size_n
    size = exp.p + exp.q
    pref = -exp.ws.N / (exp.ws.t * (1 - exp.ws.t)) / n
    entries = []
    v_const = lax_matrix(exp, mpc(0))
    for i in range(size):
        row = []
        for j in range(size):
            e: dict = {}
            const = v_const[i, j] / n
            if const != 0:
                e[(0, 0)] = mpc(const)
            if i == j:
                e[(1, 0)] = e.get((1, 0), mpc(0)) + 1
                if i < exp.p:
                    e[(0, 1)] = e.get((0, 1), mpc(0)) + pref
            row.append(e)
        entries.append(row)
    return _poly_det(entries)


def _eigenvalues_at(exp: RhExpansion, charpoly: dict, z) -> list:
    """Roots in xi of the characteristic polynomial at numeric z, refined
    from double-precision seeds by extended-precision Newton."""
    size = exp.p + exp.q
    z = mpc(z)
    coeffs = [mpc(0)] * (size + 1)
    for (i, j), c in charpoly.items():
        coeffs[i] += c * z**j
    # numpy seeds from the companion eigenvalues of -V(z)/n
    n = exp.idx.size_n
    V = lax_matrix(exp, z)
    arr = np.array(
        [[complex(-V[i, j] / n) for j in range(size)] for i in range(size)]
    )
    seeds = np.linalg.eigvals(arr)
    dcoeffs = [coeffs[i] * i for i in range(1, size + 1)]

    def pval(x, cs):
        acc = mpc(0)
        for c in reversed(cs):
            acc = acc * x + c
        return acc

    roots = []
    for seed in seeds:
        x = mpc(seed)
        for _ in range(mp.prec):
            f = pval(x, coeffs)
            fp = pval(x, dcoeffs)
            if fp == 0:
                break
            step = f / fp
            x -= step
            if abs(step) <= abs(x) * mpf(2) ** (-(mp.prec - 8)):
                break
        roots.append(x)
    check_branch_separation(roots, z)
    return roots


def check_branch_separation(roots, z) -> None:
    """Raise BranchCollision when two branch values are numerically
    indistinguishable (gap below 1e-15 of the branch scale) at a probe."""
    scale = max(abs(r) for r in roots)
    for i in range(len(roots)):
        for j in range(i + 1, len(roots)):
            if abs(roots[i] - roots[j]) < mpf("1e-15") * scale:
                raise BranchCollision(f"branches {i} and {j} coincide at z = {z}")


_PROBE_RADII = (mpf(10) ** 3, mpf(10) ** 4, mpf(10) ** 5, mpf(10) ** 6, mpf(10) ** 7)
_ERROR_RADIUS = 3 * mpf(10) ** 5


def spectral_curve(exp: RhExpansion) -> SpectralCurveReport:
    """Characteristic polynomial plus per-branch large-z expansion fits.

    Branches are sampled at five real radii and fitted against
    c1 z + c0 + c-1/z + c-2/z^2 + c-3/z^3; the reported triple is
    (c1, c0, c-1) and the fit error is the prediction error at an
    off-grid radius.  Slope branches (k = 1..p) are ordered by ascending
    constant term, constant branches (p+l) by descending value.
    """
    p, q = exp.p, exp.q
    charpoly = characteristic_polynomial(exp)
    samples = {}
    for r in _PROBE_RADII + (_ERROR_RADIUS,):
        roots = _eigenvalues_at(exp, charpoly, r)
        ordered = sorted(roots, key=lambda v: -abs(v))
        slope_part = sorted(ordered[:p], key=lambda v: v.real)
        const_part = sorted(ordered[p:], key=lambda v: -v.real)
        samples[r] = slope_part + const_part
    branches = []
    for b in range(p + q):
        rows, rhs = [], []
        for r in _PROBE_RADII:
            rows.append([r, mpf(1), 1 / r, 1 / r**2, 1 / r**3])
            rhs.append(samples[r][b])
        sol = nu.solve_linear(matrix(rows), rhs)
        pred = sum(
            c * v
            for c, v in zip(
                sol,
                [
                    _ERROR_RADIUS,
                    mpf(1),
                    1 / _ERROR_RADIUS,
                    1 / _ERROR_RADIUS**2,
                    1 / _ERROR_RADIUS**3,
                ],
            )
        )
        err = abs(pred - samples[_ERROR_RADIUS][b])
        branches.append(
            BranchFit(
                slope=sol[0].real if isinstance(sol[0], mpc) else sol[0],
                constant=sol[1].real if isinstance(sol[1], mpc) else sol[1],
                inverse_z=sol[2].real if isinstance(sol[2], mpc) else sol[2],
                fit_error=err,
            )
        )
    return SpectralCurveReport(polynomial=charpoly, branches=tuple(branches))
