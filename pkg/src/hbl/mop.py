"""Multiple Hermite polynomials: moment systems, solves and normalizations.

The two weight families are Gaussians

    w_{1,k}(x) = exp(-(N/2t)      (x^2 - 2 a_k x)),   k = 1..p,
    w_{2,l}(x) = exp(-(N/2(1-t))  (x^2 - 2 b_l x)),   l = 1..q,

whose products are again Gaussians with common width gamma = N/(2t(1-t))
and centers mu_kl = (1-t) a_k + t b_l.  All moments come from the closed
two-term recursion; quadrature only ever appears as a test oracle.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache
from typing import Optional

from mpmath import mp, mpf, matrix

from . import numerics as nu
from .errors import InvalidIndex, NormalizationImpossible, SingularMatrix

MAX_ESCALATED_PRECISION = 1024


@dataclass(frozen=True)
class WeightSystem:
    """Gaussian weight data for p starting and q ending positions."""

    a: tuple
    b: tuple
    t: mpf
    N: mpf

    def __post_init__(self):
        object.__setattr__(self, "a", tuple(nu.to_ext(v) for v in self.a))
        object.__setattr__(self, "b", tuple(nu.to_ext(v) for v in self.b))
        object.__setattr__(self, "t", nu.to_ext(self.t))
        object.__setattr__(self, "N", nu.to_ext(self.N))
        if not 0 < self.t < 1:
            raise ValueError("time t must lie in (0, 1)")
        if self.N <= 0:
            raise ValueError("scale N must be positive")

    @property
    def p(self) -> int:
        return len(self.a)

    @property
    def q(self) -> int:
        return len(self.b)

    @property
    def gamma(self) -> mpf:
        return self.N / (2 * self.t * (1 - self.t))

    def mu(self, k: int, l: int) -> mpf:
        """Center of the product weight w_{1,k} w_{2,l} (0-based indices)."""
        return (1 - self.t) * self.a[k] + self.t * self.b[l]

    def log_scale(self, k: int, l: int) -> mpf:
        """Exponent c_kl in w_{1,k} w_{2,l} = exp(-gamma (x-mu)^2 + c_kl)."""
        return self.gamma * self.mu(k, l) ** 2

    def w1(self, k: int, x):
        return mp.exp(-(self.N / (2 * self.t)) * (x * x - 2 * self.a[k] * x))

    def w2(self, l: int, x):
        return mp.exp(-(self.N / (2 * (1 - self.t))) * (x * x - 2 * self.b[l] * x))

    @classmethod
    def from_config(cls, cfg, t, n: int) -> "WeightSystem":
        """Weight system at time t with N = n / T_n from the config's rule."""
        return cls(a=(cfg.a1, cfg.a2), b=(cfg.b1, cfg.b2), t=t, N=cfg.scale_N(n))


@lru_cache(maxsize=512)
def _moment_table(ws: WeightSystem, k: int, l: int, jmax: int, prec: int) -> tuple:
    """Moments M_j = int x^j w_{1,k} w_{2,l} dx for j = 0..jmax.

    M_0 = sqrt(pi/gamma) e^{c_kl};  M_j = mu M_{j-1} + (j-1)/(2 gamma) M_{j-2}.
    The e^{c_kl} factor rides on the mpf exponent, which is unbounded, so
    no separate log-scale bookkeeping is needed.
    """
    with mp.workprec(prec):
        gamma = ws.gamma
        mu = ws.mu(k, l)
        m0 = mp.sqrt(mp.pi / gamma) * mp.exp(ws.log_scale(k, l))
        if jmax == 0:
            return (m0,)
        out = [m0, mu * m0]
        inv2g = 1 / (2 * gamma)
        for j in range(2, jmax + 1):
            out.append(mu * out[j - 1] + (j - 1) * inv2g * out[j - 2])
        return tuple(out)


def gaussian_moment(ws: WeightSystem, k: int, l: int, j: int) -> mpf:
    """int x^j w_{1,k}(x) w_{2,l}(x) dx via the closed recursion (0-based k, l)."""
    if j < 0:
        raise ValueError("moment order must be non-negative")
    return _moment_table(ws, k, l, j, mp.prec)[j]


# ---------------------------------------------------------------------------
# Multi-indices
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class MultiIndexPair:
    """Index pair (n, m); |n| = |m| for RH matrices, |n| = |m| + 1 for MOP."""

    n: tuple
    m: tuple

    def __post_init__(self):
        object.__setattr__(self, "n", tuple(int(v) for v in self.n))
        object.__setattr__(self, "m", tuple(int(v) for v in self.m))
        if any(v < 0 for v in self.n + self.m):
            raise InvalidIndex(f"negative multi-index component in {self}")
        if self.size_n not in (self.size_m, self.size_m + 1):
            raise InvalidIndex(
                f"|n|={self.size_n} must equal |m|={self.size_m} or |m|+1"
            )

    @property
    def size_n(self) -> int:
        return sum(self.n)

    @property
    def size_m(self) -> int:
        return sum(self.m)

    def shift_n(self, k: int, by: int = 1) -> "MultiIndexPair":
        n = list(self.n)
        n[k] += by
        return MultiIndexPair(tuple(n), self.m)

    def shift_m(self, l: int, by: int = 1) -> "MultiIndexPair":
        m = list(self.m)
        m[l] += by
        return MultiIndexPair(self.n, tuple(m))


NormTag = tuple  # ("II", k) or ("I", l) with 0-based position index


@dataclass(frozen=True)
class MopSolution:
    """Coefficient arrays of A_1..A_p (ascending powers) plus its tag."""

    idx: MultiIndexPair
    norm: NormTag
    coeffs: tuple  # tuple over k of tuple of mpf, length n_k

    def poly(self, k: int) -> tuple:
        return self.coeffs[k]

    def eval_A(self, k: int, x):
        acc = mp.mpf(0)
        for c in reversed(self.coeffs[k]):
            acc = acc * x + c
        return acc

    def eval_A_prime(self, k: int, x):
        acc = mp.mpf(0)
        cs = self.coeffs[k]
        for j in range(len(cs) - 1, 0, -1):
            acc = acc * x + j * cs[j]
        return acc

    def coefficient(self, k: int, power: int):
        """Coefficient of x^power in A_k; zero outside the stored range."""
        cs = self.coeffs[k]
        if 0 <= power < len(cs):
            return cs[power]
        return mpf(0)


def _flat_offsets(idx: MultiIndexPair) -> list:
    offsets, acc = [], 0
    for nk in idx.n:
        offsets.append(acc)
        acc += nk
    return offsets


def _build_system(ws: WeightSystem, idx: MultiIndexPair, norm: NormTag):
    """Square linear system (orthogonality rows + one normalization row)."""
    p, q = ws.p, ws.q
    unknowns = idx.size_n
    offsets = _flat_offsets(idx)
    rows, rhs = [], []
    jmax = max(idx.n) + max(idx.m, default=0) + 2
    tables = {
        (k, l): _moment_table(ws, k, l, jmax, mp.prec)
        for k in range(p)
        for l in range(q)
    }
    for l in range(q):
        for j in range(idx.m[l]):
            row = [mpf(0)] * unknowns
            for k in range(p):
                tab = tables[(k, l)]
                for i in range(idx.n[k]):
                    row[offsets[k] + i] = tab[i + j]
            scale = max((abs(v) for v in row), default=mpf(0))
            if scale == 0:
                raise NormalizationImpossible("empty orthogonality row")
            rows.append([v / scale for v in row])
            rhs.append(mpf(0))
    kind, pos = norm
    if kind == "II":
        if idx.n[pos] == 0:
            raise NormalizationImpossible(
                f"type (II,{pos + 1}) needs a free leading coefficient"
            )
        row = [mpf(0)] * unknowns
        row[offsets[pos] + idx.n[pos] - 1] = mpf(1)
        rows.append(row)
        rhs.append(mpf(1))
    elif kind == "I":
        row = [mpf(0)] * unknowns
        ml = idx.m[pos]
        for k in range(p):
            tab = tables[(k, pos)]
            for i in range(idx.n[k]):
                row[offsets[k] + i] = tab[i + ml]
        scale = max((abs(v) for v in row), default=mpf(0))
        if scale == 0:
            raise NormalizationImpossible("type (I) moment row vanishes")
        rows.append([v / scale for v in row])
        rhs.append(1 / scale)
    else:
        raise ValueError(f"unknown normalization kind {kind!r}")
    A = matrix(rows)
    return A, rhs, offsets


def solve_mop(
    ws: WeightSystem,
    idx: MultiIndexPair,
    norm: NormTag,
    max_precision: int = MAX_ESCALATED_PRECISION,
) -> MopSolution:
    """Solve for the MOP vector at |n| = |m| + 1 under the given tag.

    Gaussian weights make every index pair normal, so a singular or badly
    conditioned system signals precision exhaustion: the solve retries at
    doubled precision up to ``max_precision`` before giving up.
    """
    if idx.size_n != idx.size_m + 1:
        raise InvalidIndex("solve_mop requires |n| = |m| + 1")
    kind, pos = norm
    if kind not in ("I", "II"):
        raise ValueError(f"unknown normalization kind {kind!r}")
    if kind == "II" and not 0 <= pos < ws.p:
        raise InvalidIndex("type II position out of range")
    if kind == "I" and not 0 <= pos < ws.q:
        raise InvalidIndex("type I position out of range")

    prec = mp.prec
    last_error: Optional[Exception] = None
    while prec <= max_precision:
        with mp.workprec(prec):
            try:
                A, rhs, offsets = _build_system(ws, idx, norm)
                x = nu.solve_linear(A, rhs)
                coeffs = tuple(
                    tuple(x[offsets[k] + i] for i in range(idx.n[k]))
                    for k in range(ws.p)
                )
                sol = MopSolution(idx=idx, norm=norm, coeffs=coeffs)
                resid = check_orthogonality(sol, ws, idx)
                if resid <= mpf(2) ** (-(prec // 4)):
                    return sol
                last_error = NormalizationImpossible(
                    f"orthogonality residual {resid} at {prec} bits"
                )
            except SingularMatrix as exc:
                last_error = exc
        prec *= 2
    raise NormalizationImpossible(str(last_error))


def q_moment(sol: MopSolution, ws: WeightSystem, l: int, j: int) -> mpf:
    """int Q(x) x^j w_{2,l}(x) dx through the moment recursion."""
    idx = sol.idx
    jmax = max(idx.n) + j + 1
    total = mpf(0)
    for k in range(ws.p):
        tab = _moment_table(ws, k, l, jmax, mp.prec)
        for i, c in enumerate(sol.coeffs[k]):
            total += c * tab[i + j]
    return total


def _q_moment_scale(sol: MopSolution, ws: WeightSystem, l: int, j: int) -> mpf:
    idx = sol.idx
    jmax = max(idx.n) + j + 1
    peak = mpf(0)
    for k in range(ws.p):
        tab = _moment_table(ws, k, l, jmax, mp.prec)
        for i, c in enumerate(sol.coeffs[k]):
            peak = max(peak, abs(c * tab[i + j]))
    return peak


def evaluate_Q(sol: MopSolution, ws: WeightSystem, x):
    """Q(x) = sum_k A_k(x) w_{1,k}(x)."""
    x = mp.mpmathify(x)
    return sum(sol.eval_A(k, x) * ws.w1(k, x) for k in range(ws.p))


def check_orthogonality(sol: MopSolution, ws: WeightSystem, idx: MultiIndexPair):
    """Max relative residual of the vanishing-moment conditions (0 if none)."""
    worst = mpf(0)
    for l in range(ws.q):
        for j in range(idx.m[l]):
            val = abs(q_moment(sol, ws, l, j))
            scale = _q_moment_scale(sol, ws, l, j)
            if scale > 0:
                worst = max(worst, val / scale)
    return worst


def transition_number(
    ws: WeightSystem, idx: MultiIndexPair, frm: NormTag, to: NormTag
):
    """Constant tau with A^{frm} = tau * A^{to}, verified at 3 points."""
    if frm == to:
        return mpf(1)
    sol_f = solve_mop(ws, idx, frm)
    sol_t = solve_mop(ws, idx, to)
    ref_k, ref_i, ref_mag = 0, 0, mpf(-1)
    for k in range(ws.p):
        for i, c in enumerate(sol_t.coeffs[k]):
            if abs(c) > ref_mag:
                ref_k, ref_i, ref_mag = k, i, abs(c)
    if ref_mag <= 0:
        raise NormalizationImpossible("target normalization is the zero vector")
    tau = sol_f.coeffs[ref_k][ref_i] / sol_t.coeffs[ref_k][ref_i]
    tol = mpf(2) ** (-(mp.prec // 4))
    for x in (mpf(0), mpf(3) / 10, mpf(-7) / 10):
        for k in range(ws.p):
            lhs = sol_f.eval_A(k, x)
            rhs = tau * sol_t.eval_A(k, x)
            scale = max(abs(lhs), abs(rhs), mpf(1) * ref_mag)
            if abs(lhs - rhs) > tol * scale:
                raise NormalizationImpossible(
                    "normalized vectors are not proportional (non-normal pair?)"
                )
    return tau


def shifted_solutions(ws: WeightSystem, idx: MultiIndexPair) -> list:
    """The p + q solution rows of the RH matrix at |n| = |m|.

    Row k (k < p):  type (II,k) at (n + e_k, m).
    Row p + l:      type (I,l)  at (n, m - e_l), or None when m_l = 0
                    (that row of Y degenerates to the unit row e_{p+l}).
    """
    if idx.size_n != idx.size_m:
        raise InvalidIndex("RH rows need |n| = |m|")
    rows = []
    for k in range(ws.p):
        rows.append(solve_mop(ws, idx.shift_n(k), ("II", k)))
    for l in range(ws.q):
        if idx.m[l] == 0:
            rows.append(None)
        else:
            rows.append(solve_mop(ws, idx.shift_m(l, -1), ("I", l)))
    return rows
