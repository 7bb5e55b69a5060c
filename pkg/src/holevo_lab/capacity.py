"""Constrained chi-capacity with certified two-sided bounds.

The solver alternates between (a) enlarging a support of pure input
states by the maximizers of the divergence to the current average output
and re-optimizing ensemble weights, and (b) updating the candidate
output state to the image of the ensemble average.  The upper bound is
the divergence radius at the (slightly smoothed) candidate output, which
bounds the capacity for any reference state; the lower bound is the
chi-quantity of the feasible witness ensemble.
"""

from __future__ import annotations

import math
import time
from dataclasses import dataclass, field, replace

import numpy as np

from . import _kernels, _optim
from .channels import Channel, bloch_map, bloch_of_state, state_of_bloch
from .ensembles import Ensemble, average_state, chi_quantity
from .opalg import (
    DensityOperator,
    DimensionMismatch,
    ExtendedReal,
    HermitianOperator,
    InvalidOperand,
    entropy_batch,
    entropy_raw,
    logm_psd,
    relative_entropy_raw,
)

OMEGA_SMOOTHING = 1e-9


def _smoothing_for(mix_out: np.ndarray) -> float:
    """Smoothing weight that lifts the reachable span of the certificate
    state clear of the support threshold (1e-10) while inflating the
    radius by at most ~1e-6."""
    lam = np.linalg.eigvalsh(mix_out)
    pos = lam[lam > 1e-10]
    floor = float(pos.min()) if pos.size else 1.0
    return float(min(1e-6, max(OMEGA_SMOOTHING, 2e-9 / floor)))


class InfeasibleConstraint(ValueError):
    """The constraint set contains no state."""


# ---------------------------------------------------------------------------
# constraint sets

@dataclass(frozen=True)
class Unconstrained:
    pass


@dataclass(frozen=True)
class Singleton:
    rho: DensityOperator


@dataclass(frozen=True)
class ExpectationBound:
    """Feasible barycenters: Tr(rho H) <= h."""

    H: HermitianOperator
    h: float

    def __post_init__(self):
        if float(self.H.eigenvalues().min()) > self.h + 1e-12:
            raise InfeasibleConstraint(
                f"min eigenvalue {self.H.eigenvalues().min():.6g} exceeds bound {self.h}")


ConstraintSet = Unconstrained | Singleton | ExpectationBound

UNCONSTRAINED = Unconstrained()


def constraint_satisfied(constraint: ConstraintSet, rho: np.ndarray,
                         tol: float = 1e-8) -> bool:
    if isinstance(constraint, Unconstrained):
        return True
    if isinstance(constraint, Singleton):
        return bool(np.max(np.abs(rho - constraint.rho.mat)) <= tol)
    val = float(np.real(np.trace(rho @ constraint.H.mat)))
    return val <= constraint.h + tol


# ---------------------------------------------------------------------------
# options and results

@dataclass(frozen=True)
class SolverOptions:
    tol: float = 1e-6
    max_iter: int = 10_000
    seed: int = 42
    multistart: int = 32
    grid: int = 4096
    hhat_grid: int = 512
    hhat_starts: int = 8
    support_cap: int | None = None
    max_outer: int = 200
    seed_vectors: tuple = ()

    def __post_init__(self):
        if self.tol <= 0:
            raise InvalidOperand("tol must be positive")


def _merge_opts(opts, **kw) -> SolverOptions:
    if opts is None:
        base = SolverOptions()
    elif isinstance(opts, SolverOptions):
        base = opts
    elif isinstance(opts, dict):
        base = SolverOptions(**opts)
    else:
        raise TypeError(f"opts must be SolverOptions or dict, got {type(opts)}")
    return replace(base, **kw) if kw else base


@dataclass(frozen=True)
class CapacityResult:
    """Capacity value with certified bounds and the optimizing data."""

    value: float
    lower_bound: float
    upper_bound: float
    witness: Ensemble
    omega: DensityOperator
    iterations: int
    heuristic_upper: bool = False
    wall_time_s: float | None = None
    info: dict = field(default_factory=dict)

    @property
    def gap(self) -> float:
        return self.upper_bound - self.lower_bound


def output_optimal_average(result: CapacityResult) -> DensityOperator:
    """The channel image of the witness average; two runs with gaps
    g1, g2 satisfy ||omega_1 - omega_2||_1 <= sqrt(8 (g1 + g2))."""
    return result.omega


# ---------------------------------------------------------------------------
# divergence radius (the minimax upper bound)

def _is_classical(channel: Channel, linear: np.ndarray | None = None) -> bool:
    if "classical" not in channel.tags:
        return False
    if linear is None:
        return True
    off = linear - np.diag(np.diagonal(linear))
    return bool(np.max(np.abs(off)) < 1e-12)


def _radius_unconstrained(channel: Channel, ref: np.ndarray,
                          rng: np.random.Generator, opts: SolverOptions,
                          linear: np.ndarray | None = None):
    return _optim.radius_sup(channel, ref, rng, multistart=opts.multistart,
                             grid=opts.grid, linear=linear,
                             classical=_is_classical(channel, linear))


def _ground_subchannel(channel: Channel, hmat: np.ndarray, tol: float = 1e-10):
    lam, u = np.linalg.eigh(hmat)
    keep = lam <= lam.min() + tol
    eg = u[:, keep]
    ks = tuple(k @ eg for k in channel.kraus)
    return Channel(ks, tags=channel.tags), eg


def _radius_expectation(channel: Channel, bound: ExpectationBound,
                        ref: np.ndarray, rng: np.random.Generator,
                        opts: SolverOptions):
    hmat = bound.H.mat
    lam = np.linalg.eigvalsh(hmat)
    span = float(lam.max() - lam.min())
    if span < 1e-12:
        return _radius_unconstrained(channel, ref, rng, opts)
    slack = bound.h - float(lam.min())
    if slack <= 1e-10:
        sub, eg = _ground_subchannel(channel, hmat)
        val, states, cert = _radius_unconstrained(sub, ref, rng, opts)
        return val, [eg @ s for s in states], cert
    mass, esc = _optim.escape_witness(channel, ref)
    if mass > 1e-8:
        return math.inf, [esc], True

    def g(lmb: float, polish: bool):
        val, states, cert = _optim.radius_sup(
            channel, ref, rng, multistart=opts.multistart, grid=opts.grid,
            linear=lmb * hmat, classical=_is_classical(channel, lmb * hmat),
            polish=polish)
        return lmb * bound.h + val, states, cert

    # locate the envelope minimum on cheap unpolished sups, then certify
    # the few final candidates with the polished evaluation
    lo, hi = 0.0, 10.0 * span
    phi_ratio = (math.sqrt(5.0) - 1.0) / 2.0
    x1 = hi - phi_ratio * (hi - lo)
    x2 = lo + phi_ratio * (hi - lo)
    f1, f2 = g(x1, False)[0], g(x2, False)[0]
    for _ in range(30):
        if f1 <= f2:
            hi, x2, f2 = x2, x1, f1
            x1 = hi - phi_ratio * (hi - lo)
            f1 = g(x1, False)[0]
        else:
            lo, x1, f1 = x1, x2, f2
            x2 = lo + phi_ratio * (hi - lo)
            f2 = g(x2, False)[0]
        if hi - lo < 1e-9 * span:
            break
    candidates = [g(0.0, True), g(x1, True), g(x2, True)]
    best = min(candidates, key=lambda t: t[0])
    states = [s for _, sts, _ in candidates for s in sts]
    return best[0], states, all(c[2] for c in candidates)


def divergence_radius_at(channel: Channel, constraint: ConstraintSet,
                         rho_prime: DensityOperator,
                         opts: SolverOptions | None = None) -> ExtendedReal:
    """sup over feasible ensembles of the average output divergence to
    rho_prime.  For every rho_prime this bounds the capacity from above."""
    if rho_prime.dim != channel.d_out:
        raise DimensionMismatch("reference state must live on the output space")
    opts = _merge_opts(opts)
    rng = np.random.default_rng(opts.seed)
    ref = rho_prime.mat
    if isinstance(constraint, Singleton):
        rho = constraint.rho.mat
        out = channel.apply_raw(rho)
        # mass of Phi(rho) outside supp rho_prime decides finiteness
        lam, u = np.linalg.eigh(ref)
        kill = u[:, lam <= 1e-10]
        if kill.shape[1] and float(np.real(np.trace(kill.conj().T @ out @ kill))) > 1e-8:
            return ExtendedReal.infinite()
        hval, _, _ = _optim.hhat_search(channel, rho, rng,
                                        starts=opts.hhat_starts, grid=opts.hhat_grid)
        cross = float(np.real(np.trace(out @ logm_psd(ref))))
        return ExtendedReal.finite(-hval - cross)
    if isinstance(constraint, ExpectationBound):
        val, _, _ = _radius_expectation(channel, constraint, ref, rng, opts)
        return ExtendedReal.from_float(val)
    val, _, _ = _radius_unconstrained(channel, ref, rng, opts)
    return ExtendedReal.from_float(val)


# ---------------------------------------------------------------------------
# the capacity solver

def _dedupe_append(support: list[np.ndarray], cands, overlap: float = 1.0 - 1e-10) -> int:
    added = 0
    for c in cands:
        c = c / np.linalg.norm(c)
        if all(abs(np.vdot(s, c)) ** 2 < overlap for s in support):
            support.append(c)
            added += 1
    return added


def _weight_projector(constraint: ConstraintSet, support: list[np.ndarray]):
    if isinstance(constraint, Unconstrained):
        return None  # bare simplex: multiplicative update allowed
    if isinstance(constraint, ExpectationBound):
        hmat = constraint.H.mat
        a = np.array([float(np.real(v.conj() @ (hmat @ v))) for v in support])
        return lambda w: _optim.project_simplex_halfspace(w, a, constraint.h)
    raise InvalidOperand("singleton constraints use the decomposition path")


def _solve_support_problem(channel: Channel, constraint: ConstraintSet,
                           opts: SolverOptions, projector_factory=None,
                           radius_fn=None, extra_seeds=()) -> CapacityResult:
    t0 = time.monotonic()
    rng = np.random.default_rng(opts.seed)
    d = channel.d_in
    cap = opts.support_cap or max(2 * d * d, 16)

    support: list[np.ndarray] = []
    _dedupe_append(support, list(np.eye(d, dtype=complex)))
    if isinstance(constraint, ExpectationBound):
        _, u = np.linalg.eigh(constraint.H.mat)
        _dedupe_append(support, list(u.T))
    _dedupe_append(support, [np.asarray(v, dtype=complex) for v in opts.seed_vectors])
    _dedupe_append(support, [np.asarray(v, dtype=complex) for v in extra_seeds])

    def _grid_seed_states():
        # coarse grid ascent locates the optimal support structure cheaply
        blochs = _kernels.fibonacci_sphere(256)
        psis = _optim.qubit_pure_states(blochs)
        outs0 = _optim.batch_outputs_pure(channel, psis)
        w0, _ = _optim.maximize_chi_weights(
            outs0, np.full(len(psis), 1.0 / len(psis)), max_iter=400)
        tops = np.argsort(w0)[::-1][:8]
        return [psis[i] for i in tops if w0[i] > 1e-8]

    grid_seeded = not (d == 2 and not _is_classical(channel))

    if projector_factory is None:
        projector_factory = lambda sup: _weight_projector(constraint, sup)
    if radius_fn is None:
        if isinstance(constraint, ExpectationBound):
            radius_fn = lambda ref, o: _radius_expectation(channel, constraint, ref, rng, o)
        else:
            radius_fn = lambda ref, o: _radius_unconstrained(channel, ref, rng, o)
    coarse_opts = opts if opts.grid <= 1024 else replace(opts, grid=1024)

    mix_out = channel.apply_raw(np.eye(d, dtype=complex) / d)
    delta = _smoothing_for(mix_out)
    w = None
    chi_val = -math.inf
    upper = math.inf
    certified = True
    outer = 0
    best_gap = math.inf
    stagnant = 0
    for outer in range(1, opts.max_outer + 1):
        outs = _optim.batch_outputs_pure(channel, np.stack(support))
        projector = projector_factory(support)
        if w is None or len(w) != len(support):
            n_new = len(support) - (0 if w is None else len(w))
            if w is None:
                w0 = np.full(len(support), 1.0 / len(support))
            else:
                w0 = np.concatenate([w * (1.0 - 1e-2),
                                     np.full(n_new, 1e-2 / n_new)])
        else:
            w0 = w
        w, chi_val = _optim.maximize_chi_weights(
            outs, w0, projector, max_iter=min(5000, opts.max_iter))
        omega = np.einsum("i,ijk->jk", w, outs)
        omega_cert = (1.0 - delta) * omega + delta * mix_out

        # explore with a coarse grid; certify at full quality before stopping
        upper, new_states, certified = radius_fn(omega_cert, coarse_opts)
        if not math.isinf(upper) and upper - chi_val <= opts.tol:
            if coarse_opts is not opts:
                upper, new_states, certified = radius_fn(omega_cert, opts)
            if upper - chi_val <= opts.tol:
                break
        gap_now = upper - chi_val if not math.isinf(upper) else math.inf
        if gap_now >= best_gap - max(0.01 * opts.tol, 1e-13):
            stagnant += 1
            if stagnant >= 5:
                break  # honest stall; the gap reports the non-convergence
        else:
            best_gap, stagnant = gap_now, 0
        if not grid_seeded:
            grid_seeded = True
            _dedupe_append(support, _grid_seed_states())
        # move live support states to their local divergence maxima at
        # the current output (in addition to the global argmax states)
        polish = []
        if not math.isinf(upper):
            log_oc = _optim.logm_psd(omega_cert, rank_tol=1e-300)
            for idx in np.argsort(w)[::-1][:8]:
                if w[idx] > 1e-10:
                    _, p = _optim.pure_ascent(channel, log_oc, support[idx], iters=60)
                    polish.append(p)
        added = _dedupe_append(support, [s for s in new_states if s is not None])
        added += _dedupe_append(support, polish)
        if added == 0:
            if not math.isinf(upper):
                break
            # escape state already in support but weighted zero; the
            # multiplicative update cannot revive it, a restart can
            w = None
        if w is not None and len(support) > cap:
            live = w > 1e-12
            keep_idx = [i for i in range(len(w)) if live[i]]
            support = [support[i] for i in keep_idx] + support[len(w):]
            w = None

    if w is None or len(w) != len(support):
        outs = _optim.batch_outputs_pure(channel, np.stack(support))
        w, chi_val = _optim.maximize_chi_weights(
            outs, np.full(len(support), 1.0 / len(support)), projector_factory(support))
    keep = w > 1e-12
    w_final = w[keep] / np.sum(w[keep])
    states = [DensityOperator.pure(s) for s, k in zip(support, keep) if k]
    witness = Ensemble(tuple(zip(w_final, states)))
    avg = average_state(witness)
    if isinstance(constraint, (Singleton, ExpectationBound)) \
            and not constraint_satisfied(constraint, avg.mat, 1e-8):
        raise RuntimeError("solver produced an infeasible witness")
    omega = channel.apply(avg)
    lower = float(chi_quantity(channel, witness))
    upper = max(upper, lower)
    return CapacityResult(
        value=lower, lower_bound=lower, upper_bound=upper,
        witness=witness, omega=omega, iterations=outer,
        heuristic_upper=not certified,
        wall_time_s=time.monotonic() - t0,
        info={"support_size": len(states)},
    )


def _solve_singleton_problem(channel: Channel, constraint: Singleton,
                             opts: SolverOptions) -> CapacityResult:
    t0 = time.monotonic()
    rng = np.random.default_rng(opts.seed)
    rho = constraint.rho.mat
    hval, weights, mats = _optim.hhat_search(
        channel, rho, rng, starts=opts.hhat_starts, grid=opts.hhat_grid)
    out = channel.apply_raw(rho)
    value = max(0.0, entropy_raw(out) - hval)
    witness = Ensemble(tuple(
        (wi, DensityOperator(m)) for wi, m in zip(weights, mats)))
    omega = channel.apply(average_state(witness))
    mix_out = channel.apply_raw(np.eye(channel.d_in, dtype=complex) / channel.d_in)
    delta = _smoothing_for(mix_out)
    omega_cert = (1.0 - delta) * out + delta * mix_out
    upper = -hval - float(np.real(np.trace(out @ logm_psd(omega_cert))))
    upper = max(upper, value)
    return CapacityResult(
        value=value, lower_bound=value, upper_bound=upper,
        witness=witness, omega=omega, iterations=1,
        heuristic_upper=True,
        wall_time_s=time.monotonic() - t0,
        info={"hhat": hval},
    )


def chi_capacity(channel: Channel, constraint: ConstraintSet = UNCONSTRAINED,
                 opts: SolverOptions | None = None, **kw) -> CapacityResult:
    """Capacity of the constrained channel with a certified bracket.

    The result is deterministic for a fixed seed.  `heuristic_upper`
    marks upper bounds obtained from non-exhaustive inner maximization
    (inputs of dimension >= 3, and singleton constraints)."""
    opts = _merge_opts(opts, **kw)
    if isinstance(constraint, Singleton):
        if constraint.rho.dim != channel.d_in:
            raise DimensionMismatch("constraint state dim != channel input dim")
        return _solve_singleton_problem(channel, constraint, opts)
    return _solve_support_problem(channel, constraint, opts)


# ---------------------------------------------------------------------------
# chi-function and the convex closure of the output entropy

def convex_closure_output_entropy(channel: Channel, rho: DensityOperator,
                                  opts: SolverOptions | None = None, **kw) -> float:
    """min over pure decompositions of rho of the average output entropy
    (an upper bound on the true infimum, from multi-start search)."""
    opts = _merge_opts(opts, **kw)
    rng = np.random.default_rng(opts.seed)
    val, _, _ = _optim.hhat_search(channel, rho.mat, rng,
                                   starts=opts.hhat_starts, grid=opts.hhat_grid)
    return float(val)


def chi_function(channel: Channel, rho: DensityOperator,
                 opts: SolverOptions | None = None, **kw) -> float:
    """chi at a fixed input state: H(Phi(rho)) minus the convex closure
    of the output entropy at rho."""
    out = channel.apply_raw(rho.mat)
    hhat = convex_closure_output_entropy(channel, rho, opts, **kw)
    return max(0.0, entropy_raw(out) - hhat)


def feasible_point_bound_check(channel: Channel, constraint: ConstraintSet,
                     rho: DensityOperator, result: CapacityResult,
                     opts: SolverOptions | None = None) -> float:
    """upper_bound - [chi(rho) + H(Phi(rho)||omega)]; nonnegative (up to
    tolerances) whenever rho is feasible for a convex constraint."""
    chi_rho = chi_function(channel, rho, opts)
    rel = relative_entropy_raw(channel.apply_raw(rho.mat), result.omega.mat)
    if math.isinf(rel):
        return -math.inf
    return result.upper_bound - (chi_rho + rel)


# ---------------------------------------------------------------------------
# brute-force oracle for qubit inputs

def _qubit_grid_outputs(channel: Channel, blochs: np.ndarray):
    """(bloch vectors | None, output stack | None) of grid pure states."""
    if channel.d_out == 2:
        tm, tv = bloch_map(channel)
        return blochs @ tm.T + tv[None, :], None
    outs = _optim.batch_outputs_pure(channel, _optim.qubit_pure_states(blochs))
    return None, outs


def _grid_sup_to_ref(channel: Channel, blochs: np.ndarray, out_blochs, outs,
                     ref_mat: np.ndarray, polish: bool = True) -> float:
    """sup over the input grid of H(output || ref), locally refined."""
    if out_blochs is not None:
        ref_b = bloch_of_state(ref_mat)
        if np.linalg.norm(ref_b) >= 1.0 - 1e-12 and _optim.escape_mass(channel, ref_mat) > 1e-8:
            return math.inf
        vals = _kernels.relent_pairwise(out_blochs, ref_b[None, :])[:, 0]
    else:
        if _optim.escape_mass(channel, ref_mat) > 1e-8:
            return math.inf
        vals = _optim.relent_to_ref_batch(outs, ref_mat)
    best = float(np.max(vals))
    if math.isinf(best) or not polish:
        return best
    idx = int(np.argmax(vals))
    from scipy import optimize as sciopt
    log_ref = logm_psd(ref_mat)

    def neg_f(ang):
        th, ph = ang
        psi = np.array([math.cos(th / 2.0),
                        complex(math.cos(ph), math.sin(ph)) * math.sin(th / 2.0)])
        y = channel.apply_pure_raw(psi)
        lam = np.maximum(np.linalg.eigvalsh(y), 0.0)
        nz = lam[lam > 0.0]
        return -(float(np.sum(nz * np.log(nz)))
                 - float(np.real(np.trace(y @ log_ref))))

    u = blochs[idx]
    th0 = math.acos(max(-1.0, min(1.0, u[2])))
    ph0 = math.atan2(u[1], u[0])
    res = sciopt.minimize(neg_f, np.array([th0, ph0]), method="Nelder-Mead",
                          options={"maxiter": 200, "xatol": 1e-10, "fatol": 1e-13})
    return max(best, float(-res.fun))


def brute_force_capacity(channel: Channel, constraint: ConstraintSet = UNCONSTRAINED,
                         resolution: int = 4096) -> tuple[float, float]:
    """Independent grid bracket of the capacity for qubit inputs.

    lower: best chi over ensembles supported on a Bloch-sphere grid of
    `resolution` points (feasible weights only).  upper: min over a grid
    of output reference states of the exhaustive-grid divergence sup.
    The bracket is guaranteed up to the grid modulus.
    """
    if channel.d_in != 2:
        raise DimensionMismatch("brute force oracle supports d_in = 2 only")
    blochs = _kernels.fibonacci_sphere(resolution)
    out_blochs, outs = _qubit_grid_outputs(channel, blochs)

    # --- lower bound: ensemble weights on the grid
    w0 = np.full(resolution, 1.0 / resolution)
    if isinstance(constraint, Unconstrained):
        if out_blochs is not None:
            w, lower = _optim.maximize_chi_weights_bloch(out_blochs, w0)
        else:
            sub = np.linspace(0, resolution - 1, min(resolution, 512)).astype(int)
            w, lower = _optim.maximize_chi_weights(
                outs[sub], np.full(len(sub), 1.0 / len(sub)), _optim.project_simplex)
    elif isinstance(constraint, ExpectationBound):
        hmat = constraint.H.mat
        psis = _optim.qubit_pure_states(blochs)
        a = np.real(np.einsum("gi,ij,gj->g", psis.conj(), hmat, psis))
        proj = lambda v: _optim.project_simplex_halfspace(v, a, constraint.h)
        if out_blochs is not None:
            hs = _kernels.entropy_from_radius(np.linalg.norm(out_blochs, axis=1))
            w = proj(w0)
            lower = -math.inf
            for _ in range(400):
                avg = w @ out_blochs
                grad = _kernels.relent_pairwise(out_blochs, avg[None, :])[:, 0]
                grad = np.where(np.isfinite(grad), grad, 1e3)
                w_new = proj(w + 0.5 * grad)
                val = float(_kernels.entropy_from_radius(
                    np.array([np.linalg.norm(w_new @ out_blochs)]))[0] - w_new @ hs)
                if val < lower + 1e-14:
                    break
                w, lower = w_new, val
        else:
            sub = np.linspace(0, resolution - 1, min(resolution, 512)).astype(int)
            proj_sub = lambda v: _optim.project_simplex_halfspace(v, a[sub], constraint.h)
            w, lower = _optim.maximize_chi_weights(
                outs[sub], np.full(len(sub), 1.0 / len(sub)), proj_sub)
    else:  # Singleton: LP over the grid for the convex closure
        b = bloch_of_state(constraint.rho.mat)
        from scipy import optimize as sciopt
        if out_blochs is not None:
            es = _kernels.entropy_from_radius(np.linalg.norm(out_blochs, axis=1))
        else:
            es = entropy_batch(outs)
        res = sciopt.linprog(es, A_eq=np.vstack([blochs.T, np.ones(resolution)]),
                             b_eq=np.append(b, 1.0), bounds=(0, None), method="highs")
        if not res.success:
            raise InfeasibleConstraint("grid LP infeasible for the singleton barycenter")
        out_rho = channel.apply_raw(constraint.rho.mat)
        lower = entropy_raw(out_rho) - float(res.fun)
        w = res.x

    # --- upper bound: min over candidate references of the grid sup
    cands = []
    if isinstance(constraint, Unconstrained) and out_blochs is not None:
        cands.append(state_of_bloch(w @ out_blochs))
    dirs = _kernels.fibonacci_sphere(32)
    for r in (0.0, 1.0 / 3.0, 2.0 / 3.0, 0.95):
        for u in dirs if r > 0 else dirs[:1]:
            cands.append(channel.apply_raw(state_of_bloch(r * u)))
    cands.append(channel.apply_raw(np.eye(2, dtype=complex) / 2.0))
    if isinstance(constraint, ExpectationBound):
        # references along the constraint axis, where the optimum lies
        lam_h, u_h = np.linalg.eigh(constraint.H.mat)
        axis = bloch_of_state(np.outer(u_h[:, 0], u_h[:, 0].conj()))
        norm = np.linalg.norm(axis)
        if norm > 1e-12:
            axis = axis / norm
            for r in np.linspace(-0.95, 0.95, 39):
                cands.append(channel.apply_raw(state_of_bloch(r * axis)))

    if isinstance(constraint, Singleton):
        out_rho = channel.apply_raw(constraint.rho.mat)
        log_terms = []
        for ref in cands:
            if _optim.escape_mass(channel, ref) > 1e-8:
                continue
            log_terms.append(float(np.real(np.trace(out_rho @ logm_psd(ref)))))
        hhat_grid = entropy_raw(channel.apply_raw(constraint.rho.mat)) - lower
        upper = min(-hhat_grid - c for c in log_terms)
    else:
        sups = []
        for ref in cands:
            sups.append(_grid_sup_to_ref(channel, blochs, out_blochs, outs,
                                         ref, polish=False))
        order = np.argsort(sups)
        upper = math.inf
        for idx in order[:4]:
            upper = min(upper, _grid_sup_to_ref(channel, blochs, out_blochs, outs,
                                                cands[int(idx)], polish=True))
        if isinstance(constraint, ExpectationBound):
            # Lagrangian refinement over a lambda grid and all candidate
            # references (each (ref, lambda) pair is a valid upper bound)
            hmat = constraint.H.mat
            psis = _optim.qubit_pure_states(blochs)
            a = np.real(np.einsum("gi,ij,gj->g", psis.conj(), hmat, psis))
            lam_span = float(np.ptp(np.linalg.eigvalsh(hmat)))
            if out_blochs is not None:
                ref_blochs = np.array([bloch_of_state(c) for c in cands])
                rmat = _kernels.relent_pairwise(out_blochs, ref_blochs)
            else:
                rmat = np.column_stack([_optim.relent_to_ref_batch(outs, c)
                                        for c in cands])
            rmat = np.where(np.isfinite(rmat), rmat, np.inf)
            for lmb in np.linspace(0.0, 10.0 * max(lam_span, 1e-9), 81):
                vals_c = np.max(rmat - (lmb * a)[:, None], axis=0)
                best = float(np.min(vals_c))
                if math.isfinite(best):
                    upper = min(upper, lmb * constraint.h + best)
    return float(lower), float(max(upper, lower))
