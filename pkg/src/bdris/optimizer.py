"""
Sum-rate maximization over power split and surface phases.

Block coordinate descent alternates a closed-form power split with a
projected-gradient phase update:

- Power subproblem: with the SIC ordering fixed by the current phases, the
  two-user sum rate is non-increasing in alpha_far on [0.5, 1], so the
  optimum sits at the smallest feasible split alpha_far = max(0.5,
  alpha_far*), alpha_near = 1 - alpha_far, using full power.
- Phase subproblem: projected gradient ascent on the weighted effective-gain
  surrogate f(Phi) = sum_u w_u |h_d,u + g_u^H Phi h|^2, with weights equal to
  the rate sensitivities dR_u/d|h_eff,u|^2 at the current operating point.
  The gradient is the rank-one matrix q h^H (single satellite feed), so the
  unitary projection of a step is computed exactly in O(K^2) through a
  two-dimensional polar update instead of a full SVD. Each step is followed
  by an exact line search over the global phase (all feasible sets are
  closed under scalar phase rotation). The step ladder tries one huge step
  first - for a convex surrogate the limiting projected point maximizes the
  linear minorant, so it can only improve f - then backtracks by halving.

The conventional-surface baseline (CD_RIS) is the same solver restricted to
the single-connected diagonal set. Warm-starting the beyond-diagonal run
from the converged baseline phases makes its final sum rate dominate the
baseline on every realization, since diagonal unit-modulus matrices are
feasible for every architecture and neither subproblem ever returns a worse
point than its warm start.
"""

from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np

from .channel import ChannelRealization, db_to_linear, effective_channel
from .noma import (LN2, NomaAllocation, RateResult, achievable_rates,
                   min_power_split_for_far_rate, order_users)
from .surfaces import PhaseResponse, RisSpec, project_feasible, random_feasible

SCHEMES = ("BD_RIS", "CD_RIS")

# Backtracking ladder: one huge step (the minorant maximizer), then halving.
_TAU_HUGE = 1e8
_TAU_HALVINGS = 14
_IMPROVE_MARGIN = 1e-12

_ORACLE_MAX_CANDIDATES = 2_000_000
_ORACLE_ALPHA_STEP = 1e-3


class InfeasibleAllocationError(RuntimeError):
    """No power split satisfies the minimum-rate constraints (an outage)."""


@dataclass(frozen=True)
class ProblemSpec:
    ris_spec: RisSpec
    power_dbm: float = 20.0
    min_rate_near: float = 0.0    # bps/Hz
    min_rate_far: float = 0.0     # bps/Hz
    scheme: str = "BD_RIS"

    def __post_init__(self):
        if self.scheme not in SCHEMES:
            raise ValueError(f"unknown scheme {self.scheme!r}")
        if self.min_rate_near < 0 or self.min_rate_far < 0:
            raise ValueError("minimum rates must be >= 0")
        if not np.isfinite(self.power_dbm):
            raise ValueError("power_dbm must be finite")
        if self.ris_spec.mode != "reflective":
            raise ValueError("the sum-rate solver supports reflective surfaces only")

    @property
    def power_mw(self) -> float:
        return db_to_linear(self.power_dbm)

    @property
    def effective_spec(self) -> RisSpec:
        """Feasible set actually optimized: the configured architecture for
        BD_RIS, the single-connected diagonal set for CD_RIS."""
        if self.scheme == "CD_RIS":
            return RisSpec(self.ris_spec.num_elements, "single", "reflective")
        return self.ris_spec


@dataclass(frozen=True)
class BcdSettings:
    """Solver knobs.

    warm_start: 'identity', 'cd' (solve the single-connected problem first
    and start from its phases), or 'random' (a feasible draw from
    warm_start_seed). restarts=True adds deterministic auxiliary starts to
    the phase subproblem (per-user aligned projections, plus a coarse phase
    grid for diagonal sets with K <= 3) and selects by achieved sum rate;
    the returned point never has a lower sum rate than the warm start.
    With restarts=False the subproblem is a single ascent from the warm
    start, so the surrogate value also never decreases.
    """

    max_outer_iters: int = 50
    rate_tolerance: float = 1e-4     # bps/Hz
    phase_step_size: float = 1.0
    phase_inner_iters: int = 100
    warm_start: str = "identity"
    warm_start_seed: int = 0
    restarts: bool = True

    def __post_init__(self):
        if self.max_outer_iters < 1 or self.phase_inner_iters < 1:
            raise ValueError("iteration counts must be >= 1")
        if self.rate_tolerance <= 0 or self.phase_step_size <= 0:
            raise ValueError("rate_tolerance and phase_step_size must be positive")
        if self.warm_start not in ("identity", "cd", "random"):
            raise ValueError(f"unknown warm_start {self.warm_start!r}")


@dataclass(frozen=True)
class Solution:
    allocation: NomaAllocation
    phase: PhaseResponse
    rates: RateResult
    trace: tuple          # per-outer-iteration sum rate, non-decreasing
    converged: bool


# ---------------------------------------------------------------------------
# internal phase-ascent machinery (raw arrays, no PhaseResponse wrapping)
# ---------------------------------------------------------------------------


def _polar_rank1_update(phi: np.ndarray, q: np.ndarray, h: np.ndarray, tau: float) -> np.ndarray:
    """Exact polar factor (nearest unitary) of phi + tau * q h^H.

    With phi unitary the perturbed matrix differs from phi by a rank-one
    term, so its polar factor equals phi times the polar factor of
    I + a b^H with a = tau phi^H q, b = h, which lives in the <=2-dim
    subspace span{a, b}. Cost O(K^2).
    """
    a = tau * (phi.conj().T @ q)
    b = h
    na = np.linalg.norm(a)
    nb = np.linalg.norm(b)
    if na == 0.0 or nb == 0.0:
        return phi
    u1 = a / na
    b_par = u1.conj() @ b
    b_perp = b - b_par * u1
    nbp = np.linalg.norm(b_perp)
    if nbp > 1e-14 * nb:
        basis = np.stack([u1, b_perp / nbp], axis=1)
        a_c = np.array([na, 0.0])
        b_c = np.array([b_par, nbp])
    else:
        basis = u1[:, None]
        a_c = np.array([na])
        b_c = np.array([b_par])
    r = len(a_c)
    t = np.eye(r, dtype=complex) + np.outer(a_c, b_c.conj())
    ut, _, vht = np.linalg.svd(t)
    p = ut @ vht
    w = phi @ basis
    return phi + w @ ((p - np.eye(r)) @ basis.conj().T)


class _PhaseState:
    """Feasible iterate: a unit-modulus vector for diagonal sets, otherwise a
    dense block-unitary matrix stepped block-by-block."""

    def __init__(self, value: np.ndarray, diag: bool, block_size: int):
        self.value = value
        self.diag = diag
        self.block_size = block_size

    def apply(self, h: np.ndarray) -> np.ndarray:
        return self.value * h if self.diag else self.value @ h

    def stepped(self, q: np.ndarray, h: np.ndarray, tau: float) -> "_PhaseState":
        if self.diag:
            d = self.value + tau * (q * np.conj(h))
            mags = np.abs(d)
            d = np.where(mags > 0.0, d, 1.0)
            return _PhaseState(d / np.abs(d), True, 1)
        bs = self.block_size
        if bs == self.value.shape[0]:
            new = _polar_rank1_update(self.value, q, h, tau)
        else:
            new = self.value.copy()
            for b in range(self.value.shape[0] // bs):
                sl = slice(b * bs, (b + 1) * bs)
                new[sl, sl] = _polar_rank1_update(self.value[sl, sl], q[sl], h[sl], tau)
        return _PhaseState(new, False, bs)

    def rotated(self, phase: complex) -> "_PhaseState":
        return _PhaseState(self.value * phase, self.diag, self.block_size)

    def to_matrix(self) -> np.ndarray:
        return np.diag(self.value) if self.diag else self.value


def _identity_state(spec: RisSpec) -> _PhaseState:
    k = spec.num_elements
    if spec.block_size == 1:
        return _PhaseState(np.ones(k, dtype=complex), True, 1)
    return _PhaseState(np.eye(k, dtype=complex), False, spec.block_size)


def _state_from_matrix(mat: np.ndarray, spec: RisSpec) -> _PhaseState:
    if spec.block_size == 1:
        return _PhaseState(np.diagonal(mat).copy(), True, 1)
    return _PhaseState(np.array(mat, dtype=complex), False, spec.block_size)


class _Objective:
    """Effective gains, sum rate at a fixed allocation, and surrogate."""

    def __init__(self, ch: ChannelRealization, alloc: NomaAllocation):
        self.hd = ch.h_direct
        self.h = ch.h_sat_ris
        self.g = ch.g_ris_user
        self.gc = ch.g_ris_user.conj()
        self.noise = ch.noise_mw
        self.p = alloc.total_power_mw
        self.an = alloc.alpha_near
        self.af = alloc.alpha_far

    def eff(self, state: _PhaseState) -> np.ndarray:
        return self.hd + self.gc @ state.apply(self.h)

    def sum_rate_of_gains(self, gains: np.ndarray):
        if gains.shape[-1] == 1:
            p_full = self.p * (self.an + self.af)
            return np.log1p(p_full * gains[..., 0] / self.noise) / LN2
        g_s = np.max(gains, axis=-1)
        g_w = np.min(gains, axis=-1)
        r_n = np.log1p(self.p * self.an * g_s / self.noise) / LN2
        r_f = np.log1p(self.p * self.af * g_w / (self.p * self.an * g_w + self.noise)) / LN2
        return r_n + r_f

    def sum_rate(self, e: np.ndarray) -> float:
        return float(self.sum_rate_of_gains(np.abs(e) ** 2))


def _rate_weights(gains: np.ndarray, alloc: NomaAllocation, noise: float) -> np.ndarray:
    """dR_u/dgamma_u for each user at the current gains and allocation."""
    p = alloc.total_power_mw
    if gains.shape == (1,):
        p_full = p * (alloc.alpha_near + alloc.alpha_far)
        return np.array([p_full / (p_full * gains[0] + noise) / LN2])
    strong, weak = order_users(np.sqrt(gains))
    g_s, g_w = gains[strong], gains[weak]
    w = np.empty(2)
    w[strong] = p * alloc.alpha_near / (p * alloc.alpha_near * g_s + noise) / LN2
    w[weak] = (p / (p * g_w + noise)
               - p * alloc.alpha_near / (p * alloc.alpha_near * g_w + noise)) / LN2
    return w


def _align_global_phase(state: _PhaseState, e: np.ndarray, obj: _Objective,
                        weights: np.ndarray):
    """Exact maximizer of the surrogate over state -> e^{j delta} state."""
    z = np.sum(weights * np.conj(obj.hd) * (e - obj.hd))
    if abs(z) == 0.0:
        return state, e
    phase = np.conj(z) / abs(z)
    return state.rotated(phase), obj.hd + (e - obj.hd) * phase


def _ascend(state: _PhaseState, obj: _Objective, weights: np.ndarray,
            settings: BcdSettings):
    """Projected gradient ascent from one start; returns the iterate with the
    best sum rate along the path (surrogate is non-decreasing along it)."""
    state, e = _align_global_phase(state, obj.eff(state), obj, weights)
    f = float(np.sum(weights * np.abs(e) ** 2))
    best_rate = obj.sum_rate(e)
    best_state = state
    h = obj.h
    sqrt_k = np.sqrt(len(h))
    taus = [_TAU_HUGE] + [settings.phase_step_size * 0.5 ** i for i in range(_TAU_HALVINGS)]
    for _ in range(settings.phase_inner_iters):
        q = (weights * e) @ obj.g      # gradient of the surrogate is q h^H
        grad_norm = np.linalg.norm(q) * np.linalg.norm(h)
        if grad_norm == 0.0:
            break
        scale = sqrt_k / grad_norm
        accepted = None
        for tau in taus:
            cand = state.stepped(q, h, tau * scale)
            cand, e_cand = _align_global_phase(cand, obj.eff(cand), obj, weights)
            f_cand = float(np.sum(weights * np.abs(e_cand) ** 2))
            if f_cand > f * (1.0 + _IMPROVE_MARGIN):
                accepted = (cand, e_cand, f_cand)
                break
        if accepted is None:
            break
        state, e, f = accepted
        rate = obj.sum_rate(e)
        if rate > best_rate:
            best_rate = rate
            best_state = state
    return best_state, best_rate


def _aligned_start(g_u: np.ndarray, h: np.ndarray, spec: RisSpec) -> _PhaseState:
    """Projection of g_u h^H onto the feasible set: steers the surface to one
    user alone (up to the global phase fixed later by the line search)."""
    pr = project_feasible(np.outer(g_u, np.conj(h)), spec)
    return _state_from_matrix(pr.phi, spec)


def _coarse_grid_start(obj: _Objective, k: int, points: int = 8) -> _PhaseState:
    """Best of a coarse per-element phase grid by sum rate (diagonal, small K)."""
    phases = np.exp(2j * np.pi * np.arange(points) / points)
    grids = np.meshgrid(*([phases] * k), indexing="ij")
    flat = np.stack([g.ravel() for g in grids], axis=1)      # (points^k, k)
    e = obj.hd[None, :] + flat @ (obj.gc * obj.h[None, :]).T
    rates = obj.sum_rate_of_gains(np.abs(e) ** 2)
    return _PhaseState(flat[int(np.argmax(rates))].copy(), True, 1)


def solve_phase_subproblem(ch: ChannelRealization, alloc: NomaAllocation,
                           problem: ProblemSpec, settings: BcdSettings,
                           warm_start_pr: PhaseResponse | None = None) -> PhaseResponse:
    """Improve the surface phases at a fixed power allocation.

    Runs projected gradient ascent on the weighted effective-gain surrogate
    (weights evaluated at the warm-start gains), projecting every step back
    onto the feasible set of the scheme's architecture. With restarts
    enabled, ascents also run from per-user aligned starts and (for diagonal
    sets with K <= 3) a coarse-grid seed, and the best iterate by achieved
    sum rate is returned - never worse than the warm start.
    """
    spec = problem.effective_spec
    obj = _Objective(ch, alloc)
    if warm_start_pr is not None:
        if warm_start_pr.mode != "reflective":
            raise ValueError("warm start must be a reflective phase response")
        warm = _state_from_matrix(warm_start_pr.phi, spec)
    else:
        warm = _identity_state(spec)

    e_warm = obj.eff(warm)
    weights = _rate_weights(np.abs(e_warm) ** 2, alloc, obj.noise)

    candidates = [warm]
    if settings.restarts:
        for u in range(ch.num_users):
            candidates.append(_aligned_start(ch.g_ris_user[u], ch.h_sat_ris, spec))
        if spec.block_size == 1 and spec.num_elements <= 3:
            candidates.append(_coarse_grid_start(obj, spec.num_elements))

    best_state, best_rate = warm, obj.sum_rate(e_warm)
    for cand in candidates:
        raw_rate = obj.sum_rate(obj.eff(cand))
        if raw_rate > best_rate:
            best_state, best_rate = cand, raw_rate
        state, rate = _ascend(cand, obj, weights, settings)
        if rate > best_rate:
            best_state, best_rate = state, rate
    return PhaseResponse.reflective(best_state.to_matrix())


def solve_power_subproblem(ch: ChannelRealization, pr: PhaseResponse,
                           problem: ProblemSpec) -> NomaAllocation:
    """Optimal full-power split for fixed phases.

    alpha_far = max(0.5, alpha_far*), alpha_near = 1 - alpha_far: the sum
    rate is non-increasing in alpha_far once the far user's minimum rate
    holds, so the smallest ordered split is optimal (gains tie -> the sum
    rate is split-invariant and the same boundary is returned).

    Raises InfeasibleAllocationError when no split meets both minimum rates.
    """
    if ch.num_users != 2:
        raise ValueError("the power subproblem is defined for exactly 2 users")
    h_effs = [effective_channel(ch, pr, u) for u in range(2)]
    strong, weak = order_users(h_effs)
    gamma_w = abs(h_effs[weak]) ** 2
    p = problem.power_mw
    a_star = min_power_split_for_far_rate(problem.min_rate_far, p, gamma_w, ch.noise_mw)
    alpha_far = max(0.5, a_star)
    if alpha_far > 1.0 + 1e-12:
        raise InfeasibleAllocationError(
            f"far user needs alpha_far = {a_star:.6g} > 1 for rate {problem.min_rate_far}"
        )
    alpha_far = min(alpha_far, 1.0)
    alloc = NomaAllocation(p, 1.0 - alpha_far, alpha_far)
    rates = achievable_rates(alloc, h_effs[strong], h_effs[weak], ch.noise_mw, (strong, weak))
    if rates.rate_near < problem.min_rate_near - 1e-12:
        raise InfeasibleAllocationError(
            f"near user rate {rates.rate_near:.6g} < minimum {problem.min_rate_near}"
        )
    return alloc


def _evaluate(ch: ChannelRealization, pr: PhaseResponse, alloc: NomaAllocation) -> RateResult:
    h_effs = [effective_channel(ch, pr, u) for u in range(2)]
    strong, weak = order_users(h_effs)
    return achievable_rates(alloc, h_effs[strong], h_effs[weak], ch.noise_mw, (strong, weak))


def _resolve_warm_start(ch: ChannelRealization, problem: ProblemSpec,
                        settings: BcdSettings) -> PhaseResponse:
    spec = problem.effective_spec
    if settings.warm_start == "random":
        return random_feasible(spec, np.random.default_rng(settings.warm_start_seed))
    if settings.warm_start == "cd" and problem.scheme != "CD_RIS":
        cd_problem = replace(problem, scheme="CD_RIS")
        cd_solution = bcd_solve(ch, cd_problem, replace(settings, warm_start="identity"))
        return cd_solution.phase
    return PhaseResponse.reflective(np.eye(spec.num_elements, dtype=complex))


def bcd_solve(ch: ChannelRealization, problem: ProblemSpec, settings: BcdSettings,
              warm_start_pr: PhaseResponse | None = None) -> Solution:
    """Alternate the power and phase subproblems until the sum-rate gain per
    outer iteration falls below rate_tolerance or max_outer_iters is hit.

    The initial power solve on the warm-start phases counts as iteration 1,
    so max_outer_iters=1 returns that allocation untouched. The trace is
    non-decreasing: the power step is an exact argmax at fixed phases and
    the phase step never returns a point with a lower sum rate than its warm
    start. Propagates InfeasibleAllocationError from the power subproblem.
    """
    if ch.num_users != 2:
        raise ValueError("bcd_solve expects exactly 2 users")
    pr = warm_start_pr if warm_start_pr is not None else _resolve_warm_start(ch, problem, settings)
    alloc = solve_power_subproblem(ch, pr, problem)
    rates = _evaluate(ch, pr, alloc)
    trace = [rates.sum_rate]
    converged = False
    for _ in range(settings.max_outer_iters - 1):
        pr = solve_phase_subproblem(ch, alloc, problem, settings, warm_start_pr=pr)
        alloc = solve_power_subproblem(ch, pr, problem)
        rates = _evaluate(ch, pr, alloc)
        trace.append(rates.sum_rate)
        if trace[-1] - trace[-2] < settings.rate_tolerance:
            converged = True
            break
    return Solution(alloc, pr, rates, tuple(trace), converged)


# ---------------------------------------------------------------------------
# brute-force oracle for tiny instances
# ---------------------------------------------------------------------------


def _diag_candidates(k: int, resolution: int) -> np.ndarray:
    phases = np.exp(2j * np.pi * np.arange(resolution) / resolution)
    grids = np.meshgrid(*([phases] * k), indexing="ij")
    return np.stack([g.ravel() for g in grids], axis=1)          # (res^k, k)


def _unitary2_candidates(resolution: int) -> np.ndarray:
    """U(2) sampled through the 4-angle form
    e^{ja} [[cos t e^{jp}, sin t e^{jc}], [-sin t e^{-jc}, cos t e^{-jp}]];
    all angle grids nest under doubling, so refinement never loses points."""
    circle = 2.0 * np.pi * np.arange(resolution) / resolution
    quarter = (np.pi / 2.0) * np.arange(resolution) / resolution
    a, t, p, c = np.meshgrid(circle, quarter, circle, circle, indexing="ij")
    a, t, p, c = (x.ravel() for x in (a, t, p, c))
    mats = np.empty((a.size, 2, 2), dtype=complex)
    mats[:, 0, 0] = np.cos(t) * np.exp(1j * p)
    mats[:, 0, 1] = np.sin(t) * np.exp(1j * c)
    mats[:, 1, 0] = -np.sin(t) * np.exp(-1j * c)
    mats[:, 1, 1] = np.cos(t) * np.exp(-1j * p)
    return mats * np.exp(1j * a)[:, None, None]


def brute_force_oracle(ch: ChannelRealization, problem: ProblemSpec,
                       grid: int = 64) -> Solution:
    """Exhaustive reference optimum for tiny instances.

    Diagonal feasible sets grid each phase at `grid` points (K <= 3);
    fully-connected K = 2 samples U(2) through its 4-angle parameterization
    at `grid` points per angle. alpha_far is gridded at 1e-3 over [0.5, 1]
    (full power and alpha_far >= alpha_near are optimal, see the power
    subproblem). Raises InfeasibleAllocationError when no combination meets
    the minimum rates, and ValueError for sizes past the caps.
    """
    if ch.num_users != 2:
        raise ValueError("brute_force_oracle expects exactly 2 users")
    spec = problem.effective_spec
    k = spec.num_elements
    diag = spec.block_size == 1
    if diag:
        if k > 3:
            raise ValueError("diagonal grids are capped at K <= 3")
        if grid ** k > _ORACLE_MAX_CANDIDATES:
            raise ValueError("grid resolution too large for the candidate cap")
        flat = _diag_candidates(k, grid)
        e = ch.h_direct[None, :] + flat @ (ch.g_ris_user.conj() * ch.h_sat_ris[None, :]).T
    elif spec.block_size == spec.matrix_dim:
        if k != 2:
            raise ValueError("unitary sampling is defined for K = 2 only")
        if grid ** 4 > _ORACLE_MAX_CANDIDATES:
            raise ValueError("grid resolution too large for the candidate cap")
        mats = _unitary2_candidates(grid)
        v = mats @ ch.h_sat_ris
        e = ch.h_direct[None, :] + v @ ch.g_ris_user.conj().T
    else:
        raise ValueError("oracle supports diagonal and fully-connected sets only")

    gains = np.abs(e) ** 2
    g_s = np.max(gains, axis=1)
    g_w = np.min(gains, axis=1)
    p = problem.power_mw
    noise = ch.noise_mw
    steps = int(round(0.5 / _ORACLE_ALPHA_STEP))
    alpha_grid = (steps + np.arange(steps + 1)) / (2 * steps)    # exactly {0.500 .. 1.000}

    best = (-np.inf, -1, 0.5)
    for alpha_far in alpha_grid:
        alpha_near = 1.0 - alpha_far
        r_n = np.log1p(p * alpha_near * g_s / noise) / LN2
        r_f = np.log1p(p * alpha_far * g_w / (p * alpha_near * g_w + noise)) / LN2
        total = r_n + r_f
        feasible = (r_n >= problem.min_rate_near - 1e-12) & (r_f >= problem.min_rate_far - 1e-12)
        if not np.any(feasible):
            continue
        total = np.where(feasible, total, -np.inf)
        idx = int(np.argmax(total))
        if total[idx] > best[0]:
            best = (float(total[idx]), idx, float(alpha_far))
    if best[1] < 0:
        raise InfeasibleAllocationError("no phase/split combination meets the minimum rates")

    _, idx, alpha_far = best
    phi = np.diag(flat[idx]) if diag else mats[idx]
    pr = PhaseResponse.reflective(phi)
    alloc = NomaAllocation(p, 1.0 - alpha_far, alpha_far)
    rates = _evaluate(ch, pr, alloc)
    return Solution(alloc, pr, rates, (rates.sum_rate,), True)
