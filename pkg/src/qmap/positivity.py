"""Locating a linear map relative to the CP, CcP and positive cones."""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import List, Optional, Tuple

import numpy as np
from scipy.optimize import minimize, minimize_scalar

from .channel import (
    Channel,
    KrausSet,
    NotHermiticityPreserving,
    canonical_eigh,
    hermitian_basis,
    channel_from_choi,
    is_hermiticity_preserving,
    psd_threshold,
)
from .builders import depolarizing_general
from .tensor_ops import DimensionError, fix_phase, partial_transpose


def _hermitian_choi(ch: Channel) -> np.ndarray:
    if not is_hermiticity_preserving(ch):
        raise NotHermiticityPreserving("Choi matrix is not Hermitian; spectrum is complex")
    D = ch.choi
    return (D + D.conj().T) / 2


def _min_eig(H: np.ndarray) -> float:
    return float(np.linalg.eigvalsh(H)[0])


def cp_value(ch: Channel) -> float:
    """Smallest eigenvalue of the Choi matrix; the map is CP iff it is >= 0."""
    return _min_eig(_hermitian_choi(ch))


def ccp_value(ch: Channel) -> float:
    """Smallest eigenvalue of the partially transposed Choi matrix."""
    return _min_eig(partial_transpose(_hermitian_choi(ch), ch.dim, "A"))


def neg_rank(ch: Channel) -> int:
    D = _hermitian_choi(ch)
    return int(np.sum(np.linalg.eigvalsh(D) < -psd_threshold(D)))


def difference_form(ch: Channel) -> Tuple[KrausSet, KrausSet]:
    """Split ``D`` by eigenvalue sign so that ``Phi = Phi_plus - Phi_minus``, both CP."""
    D = _hermitian_choi(ch)
    tol = psd_threshold(D)
    w, V = canonical_eigh(D, candidates=hermitian_basis(ch.dim))
    n = ch.dim
    plus = [(d, np.sqrt(d) * V[:, i].reshape(n, n)) for i, d in enumerate(w) if d > tol]
    minus = [(-d, np.sqrt(-d) * V[:, i].reshape(n, n)) for i, d in enumerate(w) if d < -tol]
    return (KrausSet([A for _, A in plus], np.array([d for d, _ in plus])),
            KrausSet([A for _, A in minus], np.array([d for d, _ in minus])))


# -- numerical positivity -------------------------------------------------------

@dataclass(frozen=True)
class PositivityValue:
    """Best-found minimum of ``<x (x) y| D |x (x) y>`` over unit vectors.

    This is an upper bound on the true minimum; no global certificate.
    """

    value: float
    x: np.ndarray
    y: np.ndarray
    restarts: int
    converged: bool
    sweeps: int
    polished: bool = False


def _alternate(D4: np.ndarray, y: np.ndarray, max_iters: int, tol: float):
    """Alternating exact eigen-steps; the objective is non-increasing."""
    prev = np.inf
    x = None
    for it in range(1, max_iters + 1):
        My = np.einsum("m a n b,a,b->mn", D4, y.conj(), y)
        w, V = np.linalg.eigh((My + My.conj().T) / 2)
        x = V[:, 0]
        Mx = np.einsum("m a n b,m,n->ab", D4, x.conj(), x)
        w, V = np.linalg.eigh((Mx + Mx.conj().T) / 2)
        y = V[:, 0]
        val = float(w[0])
        if prev - val < tol:
            return val, x, y, it, True
        prev = val
    return val, x, y, max_iters, False


def _polish(D: np.ndarray, x: np.ndarray, y: np.ndarray):
    """BFGS on the Rayleigh quotient of ``x (x) y``; speeds up degenerate minima."""
    n = x.size

    def f(z):
        xx = z[:n] + 1j * z[n:2 * n]
        yy = z[2 * n:3 * n] + 1j * z[3 * n:]
        v = np.kron(xx, yy)
        nv = np.vdot(v, v).real
        Dv = D @ v
        val = np.vdot(v, Dv).real / nv
        g = (Dv - val * v).reshape(n, n) * (2 / nv)
        gx, gy = g @ yy.conj(), g.T @ xx.conj()
        return val, np.concatenate([gx.real, gx.imag, gy.real, gy.imag])

    z0 = np.concatenate([x.real, x.imag, y.real, y.imag])
    res = minimize(f, z0, jac=True, method="BFGS", options={"gtol": 1e-14, "maxiter": 500})
    z = res.x
    xx = z[:n] + 1j * z[n:2 * n]
    yy = z[2 * n:3 * n] + 1j * z[3 * n:]
    return float(res.fun), xx / np.linalg.norm(xx), yy / np.linalg.norm(yy)


def positivity_value(ch: Channel, restarts: int = 64, max_iters: int = 200,
                     seed: int = 0, tol: float = 1e-12, polish: bool = True) -> PositivityValue:
    """Multi-start alternating minimization of the Choi form on product vectors.

    Each restart alternates exact eigen-steps in x and y. The best restart is
    then refined by BFGS, which helps where the minimum is degenerate and the
    alternation only creeps towards it.
    """
    n = ch.dim
    if n < 2:
        raise DimensionError("positivity needs N >= 2")
    D = _hermitian_choi(ch)
    D4 = D.reshape(n, n, n, n)
    children = np.random.SeedSequence(seed).spawn(restarts)
    best = None
    all_converged = True
    total = 0
    for child in children:
        rng = np.random.default_rng(child)
        y = rng.normal(size=n) + 1j * rng.normal(size=n)
        y /= np.linalg.norm(y)
        val, x, y, sweeps, conv = _alternate(D4, y, max_iters, tol)
        total += sweeps
        all_converged &= conv
        if best is None or val < best[0]:
            best = (val, x, y)
    val, x, y = best
    polished = False
    if polish:
        pval, px, py = _polish(D, x, y)
        if pval < val:
            val, x, y, polished = pval, px, py, True
    return PositivityValue(value=val, x=fix_phase(x)[0], y=fix_phase(y)[0], restarts=restarts,
                           converged=bool(all_converged), sweeps=total, polished=polished)


def product_expectation(ch: Channel, x, y) -> float:
    v = np.kron(np.asarray(x), np.asarray(y))
    return float(np.vdot(v, ch.choi @ v).real)


# -- decomposability ------------------------------------------------------------

@dataclass(frozen=True)
class DecompositionResult:
    """Outcome of the line test along ``beta D + (1 - beta) D^{T_A}``.

    On success ``a * cp_part + (1 - a) * ccp_part`` reconstructs the map.
    """

    verdict: str  # "decomposable" | "inconclusive"
    method: str = "line"  # "line" | "projection"
    a: Optional[float] = None
    beta_star: Optional[float] = None
    cp_part: Optional[Channel] = None
    ccp_part: Optional[Channel] = None
    interval: Optional[Tuple[float, float]] = None
    degenerate_line: bool = False
    beta_bound: float = 50.0
    scan: List[Tuple[float, float]] = field(default_factory=list)

    @property
    def decomposable(self) -> bool:
        return self.verdict == "decomposable"


def _bisect(f, feasible: float, infeasible: float, thr: float, tol: float) -> float:
    """Boundary between a feasible and an infeasible point; returns the feasible side."""
    while abs(infeasible - feasible) > tol:
        mid = 0.5 * (feasible + infeasible)
        if f(mid) >= -thr:
            feasible = mid
        else:
            infeasible = mid
    return feasible


def decomposability_line_test(ch: Channel, beta_bound: float = 50.0, tol: float = 1e-10,
                              scan_points: int = 21) -> DecompositionResult:
    """Look for a CP point on the line through ``Phi`` and ``T Phi``.

    ``min eig D(beta)`` is concave, so its non-negative set is an interval
    found by bounded maximization plus bisection. A PSD point ``beta* <= 0`` or
    ``>= 1`` yields ``Phi = a Psi_CP + (1 - a) Psi_CcP`` with
    ``a = -beta*/(1 - 2 beta*)``. Failure never proves indecomposability.
    """
    D = _hermitian_choi(ch)
    DT = partial_transpose(D, ch.dim, "A")
    thr = psd_threshold(D)

    def Dline(beta):
        return beta * D + (1 - beta) * DT

    def f(beta):
        return _min_eig(Dline(beta))

    grid = np.linspace(-beta_bound, beta_bound, scan_points)
    scan = [(float(b), f(b)) for b in grid]

    def witness(beta, interval=None):
        a = -beta / (1 - 2 * beta) + 0.0
        return DecompositionResult(
            verdict="decomposable", a=float(a), beta_star=float(beta),
            cp_part=channel_from_choi(Dline(beta)), ccp_part=channel_from_choi(Dline(1 - beta)),
            interval=interval, beta_bound=beta_bound, scan=scan)

    if np.max(np.abs(D - DT)) <= thr:
        if f(1.0) >= -thr:
            return DecompositionResult(
                verdict="decomposable", a=1.0, beta_star=1.0, cp_part=ch, ccp_part=ch,
                degenerate_line=True, beta_bound=beta_bound, scan=scan)
        return DecompositionResult(verdict="inconclusive", degenerate_line=True,
                                   beta_bound=beta_bound, scan=scan)

    res = minimize_scalar(lambda b: -f(b), bounds=(-beta_bound, beta_bound), method="bounded",
                          options={"xatol": tol})
    candidates = [(f(b), b) for b in [res.x] + [b for b, _ in scan] + [0.0, 1.0]]
    fmax, bmax = max(candidates)
    if fmax < -thr:
        return DecompositionResult(verdict="inconclusive", beta_bound=beta_bound, scan=scan)

    edge = 64 * np.finfo(float).eps * max(np.abs(D).max(), 1.0)
    lo = -beta_bound if f(-beta_bound) >= -edge else _bisect(f, bmax, -beta_bound, edge, tol)
    hi = beta_bound if f(beta_bound) >= -edge else _bisect(f, bmax, beta_bound, edge, tol)
    interval = (float(lo), float(hi))
    snap = 1e-8
    if lo < -snap:
        return witness(lo, interval)
    if hi > 1 + snap:
        return witness(hi, interval)
    if f(1.0) >= -thr:
        return witness(1.0, interval)
    if f(0.0) >= -thr:
        return witness(0.0, interval)
    return DecompositionResult(verdict="inconclusive", interval=interval,
                               beta_bound=beta_bound, scan=scan)


def _psd_part(H: np.ndarray, floor: float = 0.0) -> np.ndarray:
    w, V = np.linalg.eigh((H + H.conj().T) / 2)
    return (V * np.maximum(w, floor)) @ V.conj().T


def cone_decomposition(ch: Channel, max_iters: int = 3000,
                       margin: float = 1e-9) -> DecompositionResult:
    """Search for ``D = P + Q^{T_A}`` with ``P, Q >= 0`` by alternating projections.

    Projects in turn onto ``{P >= margin}`` and ``{(D - P)^{T_A} >= margin}``
    (both are one eigendecomposition each). Finds decompositions that lie
    off the line ``beta D + (1 - beta) D^{T_A}``. Only a verified witness is
    reported; running out of iterations gives ``inconclusive``.
    """
    n = ch.dim
    D = _hermitian_choi(ch)
    thr = psd_threshold(D)
    tr = float(np.trace(D).real)
    if tr <= thr:
        return DecompositionResult(verdict="inconclusive", method="projection")
    eps = margin * max(tr / D.shape[0], 1.0)
    P = _psd_part(D)
    for _ in range(max_iters):
        Q = partial_transpose(D - P, n, "A")
        if _min_eig(Q) >= 0 and _min_eig(P) >= 0:
            break
        P = D - partial_transpose(_psd_part(Q, eps), n, "A")
        P = _psd_part(P, eps)
    Qt = D - P
    if _min_eig(P) < 0 or _min_eig(partial_transpose(Qt, n, "A")) < 0:
        return DecompositionResult(verdict="inconclusive", method="projection")
    a = float(np.trace(P).real) / tr
    if not 0.0 < a < 1.0:
        return DecompositionResult(verdict="inconclusive", method="projection")
    return DecompositionResult(verdict="decomposable", method="projection", a=a,
                               cp_part=channel_from_choi(P / a),
                               ccp_part=channel_from_choi(Qt / (1 - a)))


def decompose(ch: Channel, beta_bound: float = 50.0, tol: float = 1e-10) -> DecompositionResult:
    """Line test first, then the projection search when the line is inconclusive."""
    res = decomposability_line_test(ch, beta_bound=beta_bound, tol=tol)
    if res.decomposable or res.degenerate_line:
        return res
    alt = cone_decomposition(ch)
    if not alt.decomposable:
        return res
    return DecompositionResult(verdict=alt.verdict, method=alt.method, a=alt.a,
                               cp_part=alt.cp_part, ccp_part=alt.ccp_part,
                               interval=res.interval, beta_bound=beta_bound, scan=res.scan)


def choi_map_positive(a: float, b: float, c: float) -> bool:
    if min(a, b, c) < 0:
        raise ValueError("Choi map parameters must be non-negative")
    if a < 1 or a + b + c < 3:
        return False
    if 1 <= a <= 2 and b * c < (2 - a) ** 2:
        return False
    return True


def choi_map_decomposable(a: float, b: float, c: float) -> bool:
    if min(a, b, c) < 0:
        raise ValueError("Choi map parameters must be non-negative")
    if a < 1:
        return False
    if 1 <= a <= 3 and b * c < (3 - a) ** 2 / 4:
        return False
    return True


# -- structural physical approximation --------------------------------------------

@dataclass(frozen=True)
class SPAResult:
    channel: Channel
    weight: float
    noop: bool


def spa(ch: Channel) -> SPAResult:
    """Mix with the completely depolarizing channel up to the CP boundary.

    Uses weight ``a = 1 / (N x + 1)`` where ``-x`` is the smallest Choi
    eigenvalue. Not the closest CP map in general.
    """
    x = -cp_value(ch)
    if x <= psd_threshold(ch.choi):
        return SPAResult(channel=ch, weight=1.0, noop=True)
    a = 1.0 / (ch.dim * x + 1)
    mixed = Channel(a * ch.superop + (1 - a) * depolarizing_general(ch.dim).superop,
                    provenance="spa")
    return SPAResult(channel=mixed, weight=a, noop=False)


def hs_distance(phi: Channel, psi: Channel) -> float:
    if phi.dim != psi.dim:
        raise DimensionError("maps act on different dimensions")
    return float(np.linalg.norm(phi.superop - psi.superop))


@dataclass(frozen=True)
class PositivityReport:
    cp: float
    ccp: float
    neg_rank: int
    is_cp: bool
    is_ccp: bool
    p: Optional[PositivityValue] = None

    @property
    def is_block_positive_numeric(self) -> Optional[bool]:
        if self.p is None:
            return None
        return self.p.value >= -1e-9


def positivity_report(ch: Channel, deep: bool = False, restarts: int = 64,
                      seed: int = 0) -> PositivityReport:
    thr = psd_threshold(_hermitian_choi(ch))
    cp, ccp = cp_value(ch), ccp_value(ch)
    p = positivity_value(ch, restarts=restarts, seed=seed) if deep else None
    return PositivityReport(cp=cp, ccp=ccp, neg_rank=neg_rank(ch), is_cp=cp >= -thr,
                            is_ccp=ccp >= -thr, p=p)
