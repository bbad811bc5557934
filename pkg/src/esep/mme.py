"""Minimal mediary entropy of X -> Y: bounds and a numerical estimate.

The estimate searches distributions Markov to X -> W -> Y with a latent
U -> {W, Y} (and observed covariates C feeding W and Y) whose (C, X, Y)
margin matches the data, minimizing H(W). It is a local search, so the
result is an upper bound on the true minimum.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from . import dist
from .dist import JointTable
from .graph import varset

LN2 = math.log(2.0)


@dataclass(frozen=True)
class MmeEstimate:
    lower_bits: float
    averaged_lower_bits: float
    trivial_upper_bits: float
    numeric_bits: float | None
    w_cardinality: int | None
    restarts: int
    trace: tuple[tuple[int, float | None], ...] = ()
    converged: bool = False
    mismatch: float | None = None
    tol: float = 1e-4
    seed: int = 0
    notes: tuple[str, ...] = field(default=())


def _check_xy(x, y, c):
    x, y, c = varset(x), varset(y), varset(c)
    if not x or not y:
        raise ValueError("x and y must be nonempty")
    for p, q in ((x, y), (x, c), (y, c)):
        if set(p) & set(q):
            raise ValueError("x, y and c must be disjoint")
    return x, y, c


def mme_lower(t: JointTable, x, y, c=()) -> tuple[float, float]:
    """(max over c values of I(x:y|c=value), averaged I(x:y|c)).

    Valid only when x and y are unconfounded given c; that is the caller's
    modelling assumption and is not checked.
    """
    x, y, c = _check_xy(x, y, c)
    best = max(dist.pointwise_cmi(t, x, y, a) for a in dist.support(t, c))
    avg = dist.cond_mutual_info(t, x, y, c)
    return max(best, 0.0), max(avg, 0.0)


def mme_upper_trivial(t: JointTable, x, y) -> float:
    """min(H(x), H(y)): W may simply copy either end."""
    x, y, _ = _check_xy(x, y, ())
    return min(dist.entropy(t, x), dist.entropy(t, y))


def ace(t: JointTable, x: str, y: str, treated, control) -> float:
    """E[Y | X=treated] - E[Y | X=control]; equals the ACE for a randomized X."""
    def mean(v):
        sub = dist.condition(dist.marginal(t, (x, y)), {x: v})
        return math.fsum(val * p for (val,), p in sub.items())

    return mean(treated) - mean(control)


# ---------------------------------------------------------------- optimizer


def project_simplex(v: np.ndarray) -> np.ndarray:
    """Euclidean projection of every last-axis row onto the probability simplex."""
    shape = v.shape
    rows = v.reshape(-1, shape[-1])
    n = rows.shape[1]
    u = -np.sort(-rows, axis=1)
    css = np.cumsum(u, axis=1) - 1.0
    idx = np.arange(1, n + 1)
    cond = u - css / idx > 0
    rho = n - 1 - np.argmax(cond[:, ::-1], axis=1)
    theta = css[np.arange(rows.shape[0]), rho] / (rho + 1)
    return np.maximum(rows - theta[:, None], 0.0).reshape(shape)


def _entropy_bits(p: np.ndarray) -> float:
    q = p[p > 0]
    return float(-(q * np.log2(q)).sum())


class _Problem:
    """Parameters: pu[u], pw[c,x,u,w], py[c,w,u,y]."""

    def __init__(self, target: np.ndarray, k: int, nu: int):
        self.T = target
        self.pxc = target.sum(axis=2)
        self.nc, self.nx, self.ny = target.shape
        self.k, self.nu = k, nu
        self.shapes = [(nu,), (self.nc, self.nx, nu, k), (self.nc, k, nu, self.ny)]
        self.sizes = [math.prod(s) for s in self.shapes]

    def unpack(self, theta):
        out, i = [], 0
        for s, n in zip(self.shapes, self.sizes):
            out.append(theta[i:i + n].reshape(s))
            i += n
        return out

    def pack(self, pu, pw, py):
        return np.concatenate([pu.ravel(), pw.ravel(), py.ravel()])

    def project(self, theta):
        return self.pack(*(project_simplex(p) for p in self.unpack(theta)))

    def model(self, pu, pw, py):
        inner = np.einsum("u,cxuw,cwuy->cxy", pu, pw, py)
        return self.pxc[:, :, None] * inner

    def p_w(self, pu, pw):
        return np.einsum("cx,u,cxuw->w", self.pxc, pu, pw)

    def value(self, theta, lam):
        pu, pw, py = self.unpack(theta)
        r = self.model(pu, pw, py) - self.T
        return _entropy_bits(self.p_w(pu, pw)) + lam * float((r * r).sum())

    def value_and_grad(self, theta, lam):
        pu, pw, py = self.unpack(theta)
        M = self.model(pu, pw, py)
        r = M - self.T
        pW = self.p_w(pu, pw)
        val = _entropy_bits(pW) + lam * float((r * r).sum())
        g = -(np.log2(np.maximum(pW, 1e-300)) + 1.0 / LN2)
        R = 2.0 * lam * r * self.pxc[:, :, None]
        g_pu = np.einsum("cx,cxuw,w->u", self.pxc, pw, g) + np.einsum("cxy,cxuw,cwuy->u", R, pw, py)
        g_pw = np.einsum("cx,u,w->cxuw", self.pxc, pu, g) + np.einsum("cxy,u,cwuy->cxuw", R, pu, py)
        g_py = np.einsum("cxy,u,cxuw->cwuy", R, pu, pw)
        return val, self.pack(g_pu, g_pw, g_py)

    def mismatch(self, theta) -> float:
        pu, pw, py = self.unpack(theta)
        return 0.5 * float(np.abs(self.model(pu, pw, py) - self.T).sum())

    def h_w(self, theta) -> float:
        pu, pw, _ = self.unpack(theta)
        return _entropy_bits(self.p_w(pu, pw))


def _descend(prob: _Problem, theta, lam, max_iter=400, step=1.0):
    val, grad = prob.value_and_grad(theta, lam)
    for _ in range(max_iter):
        while True:
            cand = prob.project(theta - step * grad)
            d = cand - theta
            cval = prob.value(cand, lam)
            # Armijo condition along the projection arc
            if cval <= val + 1e-4 * float(grad @ d) or step < 1e-16:
                break
            step *= 0.5
        moved = float(np.abs(d).max())
        theta = cand
        if moved < 1e-12 or val - cval < 1e-13 * max(1.0, abs(val)):
            val = cval
            break
        val, grad = prob.value_and_grad(theta, lam)
        step *= 2.0
    return theta, step


def _copy_x_start(prob: _Problem, rng):
    """W copies X; Y is drawn from P(Y | X=w, C)."""
    nc, nx, ny, k, nu = prob.nc, prob.nx, prob.ny, prob.k, prob.nu
    pu = np.full(nu, 1.0 / nu)
    pw = np.zeros((nc, nx, nu, k))
    for x in range(nx):
        pw[:, x, :, x] = 1.0
    py = np.full((nc, k, nu, ny), 1.0 / ny)
    for c in range(nc):
        for x in range(nx):
            tot = prob.T[c, x].sum()
            if tot > 0:
                py[c, x, :, :] = prob.T[c, x] / tot
    return prob.pack(pu, pw, py)


def _copy_y_start(prob: _Problem, rng):
    """W is drawn from P(Y | X, C) and Y copies W."""
    nc, nx, ny, k, nu = prob.nc, prob.nx, prob.ny, prob.k, prob.nu
    pu = np.full(nu, 1.0 / nu)
    pw = np.zeros((nc, nx, nu, k))
    for c in range(nc):
        for x in range(nx):
            tot = prob.T[c, x].sum()
            row = prob.T[c, x] / tot if tot > 0 else np.full(ny, 1.0 / ny)
            pw[c, x, :, :ny] = row
    py = np.full((nc, k, nu, ny), 1.0 / ny)
    for w in range(ny):
        py[:, w, :, :] = np.eye(ny)[w]
    return prob.pack(pu, pw, py)


def _random_start(prob: _Problem, rng):
    pu = rng.dirichlet(np.ones(prob.nu))
    pw = rng.dirichlet(np.full(prob.k, 0.5), size=prob.shapes[1][:-1])
    py = rng.dirichlet(np.full(prob.ny, 0.5), size=prob.shapes[2][:-1])
    return prob.pack(pu, pw, py)


PENALTIES = (1e2, 1e3, 1e4, 1e5, 1e6)


def _search(prob: _Problem, theta, iters):
    step = 1e-2
    for lam in PENALTIES:
        theta, step = _descend(prob, theta, lam, max_iter=iters, step=step)
    return theta


def mme_estimate(
    t: JointTable,
    x,
    y,
    c=(),
    w_card_max: int | None = None,
    restarts: int = 6,
    seed: int = 0,
    tol: float = 1e-4,
    u_card: int | None = None,
    iters: int = 300,
) -> MmeEstimate:
    """Bounds plus the best feasible H(W) found by multi-start penalized search.

    ``tol`` bounds the total-variation distance between the model's (C,X,Y)
    margin and the data for a candidate to count as feasible.
    """
    x, y, c = _check_xy(x, y, c)
    if len(x) != 1 or len(y) != 1:
        raise ValueError("the numerical estimate needs singleton x and y")
    lower, averaged = mme_lower(t, x, y, c)
    upper = mme_upper_trivial(t, x, y)
    m = dist.marginal(t, c + x + y)
    nx, ny = len(t.domain(x[0])), len(t.domain(y[0]))
    target = m.prob.reshape(-1, nx, ny)
    if w_card_max is None:
        w_card_max = min(nx, ny)
    rng = np.random.default_rng(seed)
    best: tuple[float, int, float] | None = None
    trace = []
    notes = []
    for k in range(1, w_card_max + 1):
        nu = u_card or min(ny**k, 16)
        prob = _Problem(target, k, nu)
        starts = []
        if k >= nx:
            starts.append(_copy_x_start(prob, rng))
        if k >= ny:
            starts.append(_copy_y_start(prob, rng))
        starts += [_random_start(prob, rng) for _ in range(restarts)]
        best_k = None
        for i, theta in enumerate(starts):
            candidates = [theta] if i < len(starts) - restarts else []
            candidates.append(_search(prob, theta, iters))
            for th in candidates:
                mis = prob.mismatch(th)
                if mis > tol:
                    continue
                h = prob.h_w(th)
                if h < lower - 1e-3:
                    notes.append(f"k={k}: rejected H(W)={h:.6f} below the lower bound")
                    continue
                if best_k is None or h < best_k[0]:
                    best_k = (h, mis)
        trace.append((k, None if best_k is None else best_k[0]))
        if best_k is not None and (best is None or best_k[0] < best[0] - 1e-12):
            best = (best_k[0], k, best_k[1])
        if best is not None and best[0] <= lower + 1e-9:
            # the lower bound is met; larger W cannot improve
            break
    if best is None:
        return MmeEstimate(lower, averaged, upper, None, None, restarts, tuple(trace), False, None, tol, seed,
                           tuple(notes + ["no candidate met the marginal-mismatch tolerance"]))
    return MmeEstimate(lower, averaged, upper, best[0], best[1], restarts, tuple(trace), True, best[2], tol,
                       seed, tuple(notes))
