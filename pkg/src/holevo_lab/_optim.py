"""Solver internals: simplex projections, weight ascent, pure-state
maximization, and decomposition search for the convex closure of the
output entropy.

Everything here works on raw ndarrays and is deterministic for a fixed
numpy Generator.
"""

from __future__ import annotations

import math

import numpy as np
from scipy import optimize as sciopt

from . import _kernels
from .channels import Channel, bloch_map, bloch_of_state
from .opalg import entropy_batch, entropy_raw, logm_psd

LOG_FLOOR = 1e-300


# ---------------------------------------------------------------------------
# projections

def project_simplex(v: np.ndarray) -> np.ndarray:
    """Euclidean projection onto the probability simplex."""
    n = v.size
    u = np.sort(v)[::-1]
    css = np.cumsum(u) - 1.0
    idx = np.arange(1, n + 1)
    cond = u - css / idx > 0
    k = idx[cond][-1]
    tau = css[cond][-1] / k
    return np.maximum(v - tau, 0.0)


def project_simplex_halfspace(v: np.ndarray, a: np.ndarray, h: float,
                              tol: float = 1e-12) -> np.ndarray:
    """Projection onto {w in simplex : a.w <= h} by bisection on the
    halfspace multiplier."""
    w = project_simplex(v)
    if a @ w <= h + tol:
        return w
    lo, hi = 0.0, 1.0
    while a @ project_simplex(v - hi * a) > h:
        hi *= 2.0
        if hi > 1e12:
            break
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        if a @ project_simplex(v - mid * a) > h:
            lo = mid
        else:
            hi = mid
        if hi - lo < tol * max(1.0, hi):
            break
    return project_simplex(v - hi * a)


def project_affine_factory(a: np.ndarray, b: np.ndarray):
    """Projector onto {w : A w = b} (least squares via pseudo-inverse)."""
    pinv = np.linalg.pinv(a)
    def proj(v):
        return v + pinv @ (b - a @ v)
    return proj


def dykstra(v: np.ndarray, projectors, iters: int = 500, tol: float = 1e-9) -> np.ndarray:
    """Dykstra's alternating projections onto an intersection of convex sets."""
    x = v.copy()
    corrections = [np.zeros_like(v) for _ in projectors]
    for _ in range(iters):
        x_prev = x.copy()
        for i, proj in enumerate(projectors):
            y = proj(x + corrections[i])
            corrections[i] = x + corrections[i] - y
            x = y
        if np.max(np.abs(x - x_prev)) < tol:
            break
    return x


# ---------------------------------------------------------------------------
# chi over ensemble weights (concave maximization on a convex weight set)

def maximize_chi_weights(outs: np.ndarray, w0: np.ndarray, projector=None,
                         max_iter: int = 2000, stat_tol: float = 1e-11):
    """Maximize H(sum_i w_i Y_i) - sum_i w_i H(Y_i) over feasible weights.

    outs: stack (m, d, d) of member outputs.  The gradient is the vector
    of member divergences to the average output.  On the bare simplex
    (projector None) the ascent uses exponentiated-gradient steps (the
    Blahut-Arimoto multiplicative update with a backtracked step size)
    and an SLSQP finisher; a custom feasible-set projector switches to
    Euclidean projected ascent.
    """
    hs = entropy_batch(outs)
    simplex_only = projector is None

    def objective(w):
        avg = np.einsum("i,ijk->jk", w, outs)
        return entropy_raw(avg) - float(w @ hs), avg

    def move(w, grad, t):
        if simplex_only:
            scaled = w * np.exp(min(t, 60.0) * (grad - np.max(grad)))
            total = scaled.sum()
            return scaled / total if total > 0.0 else w
        return projector(w + t * grad)

    w = project_simplex(np.asarray(w0, dtype=float)) if simplex_only \
        else projector(np.asarray(w0, dtype=float))
    obj, avg = objective(w)
    t = 1.0
    for _ in range(max_iter):
        # floored log so that states whose output leaves the support of
        # the average feel a strong pull (true gradient is +inf there)
        lam, u = np.linalg.eigh(avg)
        log_avg = (u * np.log(np.maximum(lam, 1e-40))) @ u.conj().T
        cross = np.real(np.einsum("ijk,kj->i", outs, log_avg))
        grad = -hs - cross
        if float(np.max(grad) - grad @ w) <= stat_tol:
            break
        improved = False
        for _ in range(60):
            w_new = move(w, grad, t)
            obj_new, avg_new = objective(w_new)
            if obj_new > obj + 1e-15:
                w, obj, avg = w_new, obj_new, avg_new
                t *= 1.5
                improved = True
                break
            t *= 0.5
            if t < 1e-13:
                break
        if not improved:
            break

    if simplex_only and len(w) <= 40:
        w, obj = _slsqp_weight_polish(outs, hs, w, obj, objective)
    return w, obj


def _slsqp_weight_polish(outs, hs, w, obj, objective):
    """High-precision finisher for the simplex weight problem."""
    def neg_chi(x):
        val, _ = objective(x)
        return -val

    def neg_grad(x):
        avg = np.einsum("i,ijk->jk", x, outs)
        lam, u = np.linalg.eigh(avg)
        log_avg = (u * np.log(np.maximum(lam, 1e-40))) @ u.conj().T
        return hs + np.real(np.einsum("ijk,kj->i", outs, log_avg))

    res = sciopt.minimize(
        neg_chi, w, jac=neg_grad, method="SLSQP",
        bounds=[(0.0, 1.0)] * len(w),
        constraints=[{"type": "eq", "fun": lambda x: np.sum(x) - 1.0,
                      "jac": lambda x: np.ones_like(x)}],
        options={"maxiter": 300, "ftol": 1e-15})
    if res.success or res.status in (0, 8):
        x = np.maximum(res.x, 0.0)
        total = x.sum()
        if total > 0:
            x = x / total
            val, _ = objective(x)
            if val > obj:
                return x, val
    return w, obj


def maximize_chi_weights_bloch(blochs: np.ndarray, w0: np.ndarray,
                               max_iter: int = 1500, stat_tol: float = 1e-11):
    """Same objective for qubit outputs given as Bloch vectors (m, 3)."""
    hs = _kernels.entropy_from_radius(np.linalg.norm(blochs, axis=1))

    def objective(w):
        avg = w @ blochs
        return float(_kernels.entropy_from_radius(
            np.array([np.linalg.norm(avg)]))[0] - w @ hs), avg

    w = project_simplex(np.asarray(w0, dtype=float))
    obj, avg = objective(w)
    t = 1.0
    for _ in range(max_iter):
        grad = _kernels.relent_pairwise(blochs, avg[None, :])[:, 0]
        grad = np.where(np.isfinite(grad), grad, 1e3)
        if float(np.max(grad) - grad @ w) <= stat_tol:
            break
        improved = False
        for _ in range(60):
            scaled = w * np.exp(min(t, 60.0) * (grad - np.max(grad)))
            total = scaled.sum()
            w_new = scaled / total if total > 0.0 else w
            obj_new, avg_new = objective(w_new)
            if obj_new > obj + 1e-15:
                w, obj, avg = w_new, obj_new, avg_new
                t *= 1.5
                improved = True
                break
            t *= 0.5
            if t < 1e-13:
                break
        if not improved:
            break
    return w, obj


# ---------------------------------------------------------------------------
# pure input states

def seed_pure_states(d: int, count: int, rng: np.random.Generator) -> np.ndarray:
    """Deterministic seed vectors: basis, Fourier rows, then Haar samples."""
    seeds = [np.eye(d, dtype=complex)[k] for k in range(d)]
    omega = np.exp(2j * np.pi / d)
    for r in range(1, d):
        v = np.array([omega ** (r * k) for k in range(d)], dtype=complex) / math.sqrt(d)
        seeds.append(v)
    while len(seeds) < count:
        v = rng.standard_normal(d) + 1j * rng.standard_normal(d)
        seeds.append(v / np.linalg.norm(v))
    return np.stack(seeds[:max(count, len(seeds))])


def pure_ascent(channel: Channel, log_ref: np.ndarray, psi0: np.ndarray,
                linear: np.ndarray | None = None, iters: int = 150,
                f_tol: float = 1e-13):
    """Monotone fixed-point ascent of f(psi) = H(Phi(psi)||ref) - <psi|L|psi>.

    Maximizing a convex function of the input state by repeatedly moving
    to the top eigenvector of the gradient; each step cannot decrease f.
    """
    def f_of(psi):
        y = channel.apply_pure_raw(psi)
        lam = np.maximum(np.linalg.eigvalsh(y), 0.0)
        nz = lam[lam > 0.0]
        val = float(np.sum(nz * np.log(nz))) - float(np.real(np.trace(y @ log_ref)))
        if linear is not None:
            val -= float(np.real(psi.conj() @ (linear @ psi)))
        return val, y

    psi = psi0 / np.linalg.norm(psi0)
    val, y = f_of(psi)
    for _ in range(iters):
        lam, u = np.linalg.eigh(y)
        log_y = (u * np.log(np.maximum(lam, LOG_FLOOR))) @ u.conj().T
        grad = channel.adjoint_raw(log_y - log_ref)
        if linear is not None:
            grad = grad - linear
        w, vecs = np.linalg.eigh(grad)
        cand = vecs[:, -1]
        new_val, new_y = f_of(cand)
        if new_val <= val + f_tol:
            break
        psi, val, y = cand, new_val, new_y
    return val, psi


def qubit_pure_states(blochs: np.ndarray) -> np.ndarray:
    """Unit vectors (G, 2) for Bloch directions on the sphere."""
    theta = np.arccos(np.clip(blochs[:, 2], -1.0, 1.0))
    phi = np.arctan2(blochs[:, 1], blochs[:, 0])
    return np.column_stack((np.cos(theta / 2.0),
                            np.exp(1j * phi) * np.sin(theta / 2.0)))


def batch_outputs_pure(channel: Channel, psis: np.ndarray) -> np.ndarray:
    """Outputs Phi(|psi><psi|) for a stack of pure inputs, shape (G, d, d)."""
    out = np.zeros((psis.shape[0], channel.d_out, channel.d_out), dtype=complex)
    for k in channel.kraus:
        amp = psis @ k.T  # (G, d_out)
        out += amp[:, :, None] * amp.conj()[:, None, :]
    return out


def relent_to_ref_batch(outs: np.ndarray, ref: np.ndarray) -> np.ndarray:
    """H(Y_g || ref) with the pseudo-log of ref (caller rules out escapes)."""
    log_ref = logm_psd(ref)
    lam = np.maximum(np.linalg.eigvalsh(outs), 0.0)
    with np.errstate(divide="ignore", invalid="ignore"):
        terms = np.where(lam > 0.0, lam * np.log(np.maximum(lam, LOG_FLOOR)), 0.0)
    tr_y_logy = np.sum(terms, axis=-1)
    cross = np.real(np.einsum("gij,ji->g", outs, log_ref))
    return tr_y_logy - cross


def escape_mass(channel: Channel, ref: np.ndarray, rank_tol: float = 1e-10) -> float:
    """Largest feasible output mass outside the support of ref."""
    return escape_witness(channel, ref, rank_tol)[0]


def escape_witness(channel: Channel, ref: np.ndarray, rank_tol: float = 1e-10):
    """(mass, pure input) with the largest output weight outside supp ref."""
    lam, u = np.linalg.eigh(ref)
    kill = lam <= rank_tol
    if not np.any(kill):
        return 0.0, None
    uk = u[:, kill]
    proj = uk @ uk.conj().T
    w, vecs = np.linalg.eigh(channel.adjoint_raw(proj))
    return float(w[-1]), vecs[:, -1]


def _basis_states(d: int) -> np.ndarray:
    return np.eye(d, dtype=complex)


def radius_sup(channel: Channel, ref: np.ndarray, rng: np.random.Generator,
               multistart: int = 32, grid: int = 4096,
               linear: np.ndarray | None = None,
               classical: bool = False, polish: bool = True):
    """sup over pure inputs of H(Phi(psi)||ref) - <psi|L|psi>.

    Returns (value, argmax_vectors, certified).  certified is True when
    the sup is exact up to grid refinement: classical channels (vertex
    property of the dephased simplex) and qubit inputs (dense Bloch grid
    plus local polish).  polish=False skips the fixed-point ascent, for
    callers that only need a cheap ranking.
    """
    d = channel.d_in
    if linear is None:
        mass, esc = escape_witness(channel, ref)
        if mass > 1e-8:
            # some feasible pure state leaves the support of ref
            return math.inf, [esc], True

    log_ref = logm_psd(ref)

    def value_of(psis):
        outs = batch_outputs_pure(channel, psis)
        vals = relent_to_ref_batch(outs, ref)
        if linear is not None:
            vals = vals - np.real(np.einsum("gi,ij,gj->g", psis.conj(), linear, psis))
        return vals

    if classical:
        psis = _basis_states(d)
        vals = value_of(psis)
        order = np.argsort(vals)[::-1]
        return float(vals[order[0]]), [psis[i] for i in order[:2]], True

    if d == 2:
        blochs = _kernels.fibonacci_sphere(grid)
        psis = qubit_pure_states(blochs)
        certify = True
    else:
        psis = seed_pure_states(d, multistart, rng)
        certify = False
    vals = value_of(psis)
    order = np.argsort(vals)[::-1]
    best_val, best_psi = float(vals[order[0]]), psis[order[0]]
    if not polish:
        return best_val, [psis[i] for i in order[:2]], certify
    args = []
    n_polish = 8 if d == 2 else max(8, multistart // 2)
    for idx in order[:n_polish]:
        v, p = pure_ascent(channel, log_ref, psis[idx], linear=linear)
        args.append((v, p))
        if v > best_val:
            best_val, best_psi = v, p
    args.sort(key=lambda t: -t[0])
    states = [best_psi] + [p for _, p in args[:2]]
    return best_val, states, certify


# ---------------------------------------------------------------------------
# convex closure of the output entropy: decomposition searches

def _spectral_factors(rho: np.ndarray, cutoff: float = 1e-12):
    lam, u = np.linalg.eigh(rho)
    keep = lam > cutoff
    return u[:, keep], np.sqrt(lam[keep])


def _decomposition_from_isometry(e, sq, v):
    """Member vectors (columns) for isometry v on the spectral factors."""
    return e @ (sq[:, None] * v.conj().T)


def _hhat_objective(channel: Channel, wv: np.ndarray):
    """sum_i [pi_i H(Y_i/pi_i)] for unnormalized member vectors (columns)."""
    ys = batch_outputs_pure(channel, wv.T)
    pis = np.maximum(np.real(np.einsum("ji,ji->i", wv.conj(), wv)), LOG_FLOOR)
    lam = np.maximum(np.linalg.eigvalsh(ys), 0.0)
    with np.errstate(divide="ignore", invalid="ignore"):
        terms = np.where(lam > 0.0, lam * np.log(np.maximum(lam, LOG_FLOOR)), 0.0)
    total = float(-np.sum(terms) + pis @ np.log(pis))
    return total, ys


def _hhat_gradient(channel: Channel, wv: np.ndarray, ys, e, sq):
    """Euclidean Wirtinger gradient of the objective w.r.t. the isometry."""
    lam, us = np.linalg.eigh(ys)
    log_lam = np.log(np.maximum(lam, LOG_FLOOR))
    log_y = np.einsum("ipq,iq,irq->ipr", us, log_lam, us.conj())
    acc = np.zeros_like(wv)
    for k in channel.kraus:
        kw = k @ wv  # (d_out, m)
        tmp = np.einsum("ipq,qi->pi", log_y, kw)
        acc += k.conj().T @ tmp
    pis = np.maximum(np.real(np.einsum("ji,ji->i", wv.conj(), wv)), LOG_FLOOR)
    gw = -acc + wv * np.log(pis)[None, :]
    # objective here is MINIMIZED; wv = E diag(sq) V^dag, so dF/dVbar:
    return (gw.conj().T @ (e * sq[None, :]))  # (m, r)


def _stiefel_retract(v: np.ndarray) -> np.ndarray:
    q, r = np.linalg.qr(v)
    return q * np.sign(np.real(np.diagonal(r)) + 1e-300)[None, :]


def isometry_from_members(rho: np.ndarray, member_vectors: np.ndarray, m: int):
    """Initial isometry reproducing given member vectors (columns) of a
    decomposition of rho; exact when the members sum to rho."""
    e, sq = _spectral_factors(rho)
    r = e.shape[1]
    mats = np.zeros((m, r), dtype=complex)
    k = member_vectors.shape[1]
    pinv = (e * (1.0 / sq)[None, :]).conj().T  # D^{-1} E^dag
    mats[:k, :] = (pinv @ member_vectors).conj().T
    return _stiefel_retract(mats)


def hhat_isometry_search(channel: Channel, rho: np.ndarray,
                         rng: np.random.Generator, starts: int = 8,
                         m: int | None = None, iters: int = 250,
                         warm_starts: tuple = ()):
    """Minimize sum pi_i H(Phi(rho_i)) over rank-m pure decompositions of
    rho via projected gradient on the Stiefel manifold of isometries.

    Returns (value, weights, member matrices).
    """
    e, sq = _spectral_factors(rho)
    r = e.shape[1]
    if r == 1:
        y = channel.apply_raw(rho)
        return entropy_raw(y), np.array([1.0]), [rho]
    d = rho.shape[0]
    if m is None:
        m = min(d * d, max(2 * r, r + 2))
    inits = list(warm_starts) + [np.eye(m, r, dtype=complex)]
    while len(inits) < starts + len(warm_starts):
        z = rng.standard_normal((m, r)) + 1j * rng.standard_normal((m, r))
        inits.append(_stiefel_retract(z))
    best = (math.inf, None)
    for v in inits:
        if v.shape != (m, r):
            continue
        wv = _decomposition_from_isometry(e, sq, v)
        val, ys = _hhat_objective(channel, wv)
        step = 0.5
        for _ in range(iters):
            g = _hhat_gradient(channel, wv, ys, e, sq)
            sym = v.conj().T @ g
            rg = g - v @ (0.5 * (sym + sym.conj().T))
            gnorm = float(np.linalg.norm(rg))
            if gnorm < 1e-12:
                break
            moved = False
            for _ in range(30):
                v_new = _stiefel_retract(v - step * rg)
                wv_new = _decomposition_from_isometry(e, sq, v_new)
                val_new, ys_new = _hhat_objective(channel, wv_new)
                if val_new < val - 1e-14:
                    v, wv, val, ys = v_new, wv_new, val_new, ys_new
                    step *= 1.4
                    moved = True
                    break
                step *= 0.5
                if step < 1e-12:
                    break
            if not moved:
                break
        if val < best[0]:
            best = (val, wv)
    val, wv = best
    weights = np.real(np.einsum("ij,ij->j", wv.conj(), wv))
    keep = weights > 1e-12
    mats = [np.outer(wv[:, i], wv[:, i].conj()) / weights[i]
            for i in range(wv.shape[1]) if keep[i]]
    return float(val), weights[keep], mats


# -- qubit fast path: convex hull of the output-entropy surface on the sphere

def make_qubit_surface(channel: Channel):
    """Output-entropy function over Bloch directions, built once."""
    if channel.d_out == 2:
        tm, tv = bloch_map(channel)

        def surface(blochs):
            vout = blochs @ tm.T + tv[None, :]
            return _kernels.entropy_from_radius(np.linalg.norm(vout, axis=1))
    else:
        def surface(blochs):
            outs = batch_outputs_pure(channel, qubit_pure_states(blochs))
            return entropy_batch(outs)
    return surface


def hhat_qubit(channel: Channel, rho: np.ndarray, grid: int = 512):
    """Convex closure at a qubit input: LP over a Bloch-sphere grid.
    Exact up to the grid modulus; refined by the isometry search."""
    b = bloch_of_state(rho)
    rb = np.linalg.norm(b)
    if rb >= 1.0 - 1e-12:
        y = channel.apply_raw(rho)
        return entropy_raw(y), np.array([1.0]), [rho]
    surface = make_qubit_surface(channel)
    bhat = b / rb if rb > 1e-14 else np.array([0.0, 0.0, 1.0])
    pts = np.vstack([_kernels.fibonacci_sphere(grid), bhat[None, :], -bhat[None, :]])
    vals = surface(pts)

    res = sciopt.linprog(vals,
                         A_eq=np.vstack([pts.T, np.ones(len(pts))]),
                         b_eq=np.append(b, 1.0),
                         bounds=(0, None), method="highs")
    if not res.success:
        raise RuntimeError(f"decomposition LP failed: {res.message}")
    w = res.x
    active = np.argsort(w)[::-1][:4]
    active = active[w[active] > 1e-12]
    best_w = w[active] / np.sum(w[active])
    from .channels import state_of_bloch
    mats = [state_of_bloch(p) for p in pts[active]]
    return float(res.fun), best_w, mats


def hhat_search(channel: Channel, rho: np.ndarray, rng: np.random.Generator,
                starts: int = 8, grid: int = 512, m: int | None = None):
    """Dispatch: for qubit inputs a grid LP locates the hull structure
    and warm-starts the isometry descent; isometry search otherwise."""
    if channel.d_in == 2:
        val, w, mats = hhat_qubit(channel, rho, grid=grid)
        members = np.column_stack([
            math.sqrt(wi) * _pure_vector_of(mat) for wi, mat in zip(w, mats)
        ]) if len(mats) else np.zeros((2, 0), dtype=complex)
        warm = ()
        if members.shape[1] and np.linalg.matrix_rank(rho) > 1:
            warm = (isometry_from_members(rho, members, m=4),)
        val2, w2, mats2 = hhat_isometry_search(
            channel, rho, rng, starts=max(1, min(2, starts)), m=4,
            iters=160, warm_starts=warm)
        if val2 < val - 1e-12:
            return val2, w2, mats2
        return val, w, mats
    return hhat_isometry_search(channel, rho, rng, starts=starts, m=m)


def _pure_vector_of(mat: np.ndarray) -> np.ndarray:
    lam, u = np.linalg.eigh(mat)
    return u[:, -1]
