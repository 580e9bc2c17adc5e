"""
Three-Level Solver

DC outer loop -> augmented Lagrangian middle loop -> coordinate descent
inner loop.

    - fit: linearizes the concave part of the truncated-L1 penalty around the
      previous iterate (active sets) and solves each convex surrogate
    - alm_solve: slack reformulation of the surrogate, multipliers a, c and
      quadratic weights b, d; stops on primal and dual residuals and
      rescales b, d by rho to keep the two within balance_ratio
    - cd_solve: cyclic coordinate descent in the fixed order diagonal,
      off-diagonal, diagonal slacks, off-diagonal slacks

Diagonal updates solve the cubic (2B) t^3 + (2C) t^2 - t - Q/n = 0 by
bracketing and Brent's method; the derivative of the augmented Lagrangian in
theta_jj is strictly increasing on t > 0, so the positive root is unique.
Off-diagonal and slack updates are closed-form soft-thresholding steps.
"""

import logging
from dataclasses import dataclass, field
from typing import List, Optional, Tuple

import numpy as np
from scipy.optimize import brentq

from ..config import settings
from ..errors import InputError, NonConvergenceError
from ..models import Hyperparams
from .likelihood import (
    active_sets,
    augmented_value,
    beta_coefficients,
    constraint_residual,
    diag_coefficients,
    objective,
)
from .models import (
    ActiveSets,
    AugmentedState,
    DataMatrix,
    FitReport,
    GramCache,
    PrecisionParams,
    gram,
    pair_arrays,
)

logger = logging.getLogger(__name__)


def soft_threshold(z, gamma):
    """ST(z, gamma) = sign(z) (|z| - gamma)_+ ; works on scalars and arrays."""
    return np.sign(z) * np.maximum(np.abs(z) - gamma, 0.0)


class CoordinateState:
    """
    Mutable working copy of one augmented Lagrangian subproblem.

    Holds the full precision matrix, the off-diagonal vector and both slack
    vectors; the multipliers are read from the (immutable) AugmentedState.
    """

    def __init__(self, params: PrecisionParams, state: AugmentedState, g: GramCache, hyper: Hyperparams):
        if params.p != g.p or state.sets.p != g.p:
            raise InputError("parameters, active sets and Gram matrix disagree on p")
        self.theta = params.to_matrix()
        self.beta = params.beta.copy()
        self.k = state.k.copy()
        self.s = state.s.copy()
        self.state = state
        self.sets = state.sets
        self.S = g.S
        self.n = g.n
        self.hyper = hyper
        self.rows, self.cols = pair_arrays(g.p)
        self.zero_mask = np.zeros(self.beta.size, dtype=bool)
        self.zero_mask[self.sets.zero_betas] = True

    @property
    def p(self) -> int:
        return self.theta.shape[0]

    def params(self) -> PrecisionParams:
        return PrecisionParams(diag=np.diag(self.theta).copy(), beta=self.beta.copy())

    def augmented(self) -> AugmentedState:
        st = self.state
        return AugmentedState(sets=st.sets, k=self.k, a=st.a, b=st.b, s=self.s, c=st.c, d=st.d, rho=st.rho)

    def set_diagonal(self, j: int, value: float):
        self.theta[j, j] = value

    def set_beta(self, j: int, value: float):
        self.beta[j] = value
        q, l = self.rows[j], self.cols[j]
        self.theta[q, l] = value
        self.theta[l, q] = value


def solve_diagonal_cubic(B: float, C: float, Q: float, n: int) -> float:
    """
    Positive root of (2B) t^3 + (2C) t^2 - t - Q/n.

    Brackets from settings.root_lower and doubles the upper end from 1 until
    the sign changes, then runs Brent's method.

    Raises:
        NonConvergenceError: If no sign change is found below the cap
    """
    def cubic(t: float) -> float:
        return ((2.0 * B * t + 2.0 * C) * t - 1.0) * t - Q / n

    lower = settings.root_lower
    f_lower = cubic(lower)
    if f_lower == 0.0:
        return lower
    if f_lower > 0.0:
        raise NonConvergenceError(f"diagonal cubic is positive at {lower}; no positive root bracketed")
    upper = 1.0
    while cubic(upper) <= 0.0:
        upper *= 2.0
        if upper > settings.root_upper_cap:
            raise NonConvergenceError("no positive root of the diagonal cubic (degenerate column?)")
    return float(brentq(cubic, lower, upper, xtol=settings.root_xtol, rtol=4 * np.finfo(float).eps, maxiter=500))


def _diagonal_step(j: int, ws: CoordinateState) -> Tuple[float, float]:
    """New theta_jj and the second derivative of its 1-D problem there."""
    B, C, Q = diag_coefficients(j, ws.theta, ws.S, ws.n, ws.state)
    t = solve_diagonal_cubic(B, C, Q, ws.n)
    return t, B + 0.5 / t ** 2 + Q / (ws.n * t ** 3)


def _beta_step(j: int, ws: CoordinateState) -> Tuple[float, float]:
    z, r = beta_coefficients(j, ws.theta, ws.beta, ws.S, ws.n, ws.state)
    if r <= 0:
        raise NonConvergenceError(f"nonpositive curvature {r} for off-diagonal slot {j}")
    if ws.zero_mask[j]:
        return float(soft_threshold(z / r, ws.hyper.lambda2 / (ws.hyper.tau * r))), r
    return z / r, r


def update_diagonal(j: int, ws: CoordinateState) -> float:
    """Coordinate minimizer of the augmented Lagrangian in theta_jj."""
    return _diagonal_step(j, ws)[0]


def update_beta(j: int, ws: CoordinateState) -> float:
    """
    Coordinate minimizer in beta_j: ST(z/r, lambda2/(tau r)) on the zero set,
    z/r elsewhere.

    Raises:
        NonConvergenceError: If r <= 0 (degenerate Gram matrix)
    """
    return _beta_step(j, ws)[0]


def _diag_slacks(ws: CoordinateState) -> np.ndarray:
    st, dp, hyper = ws.state, ws.sets.diag_pairs, ws.hyper
    diff = ws.theta[dp[:, 0], dp[:, 0]] - ws.theta[dp[:, 1], dp[:, 1]]
    return soft_threshold((st.a + st.b * diff) / st.b, hyper.lambda1 / (hyper.tau * st.b))


def _beta_slacks(ws: CoordinateState) -> np.ndarray:
    st, bp, hyper = ws.state, ws.sets.beta_pairs, ws.hyper
    diff = ws.beta[bp[:, 0]] - ws.beta[bp[:, 1]]
    return soft_threshold((st.c + st.d * diff) / st.d, hyper.lambda3 / (hyper.tau * st.d))


def update_slack_k(e: int, ws: CoordinateState) -> float:
    """ST((a + b (theta_jj - theta_j'j')) / b, lambda1 / (tau b)) for active vertex pair e."""
    return float(_diag_slacks(ws)[e])


def update_slack_beta(e: int, ws: CoordinateState) -> float:
    """ST((c + d (beta_j - beta_j')) / d, lambda3 / (tau d)) for active slot pair e."""
    return float(_beta_slacks(ws)[e])


def update_multipliers(state: AugmentedState, params: PrecisionParams, scale: Optional[float] = None) -> AugmentedState:
    """
    a += b * residual, c += d * residual, then b and d are multiplied by
    scale (rho by default). Slacks are kept.
    """
    scale = state.rho if scale is None else scale
    dp, bp = state.sets.diag_pairs, state.sets.beta_pairs
    r_diag = params.diag[dp[:, 0]] - params.diag[dp[:, 1]] - state.k
    r_beta = params.beta[bp[:, 0]] - params.beta[bp[:, 1]] - state.s
    return AugmentedState(
        sets=state.sets,
        k=state.k,
        a=state.a + state.b * r_diag,
        b=state.b * scale,
        s=state.s,
        c=state.c + state.d * r_beta,
        d=state.d * scale,
        rho=state.rho,
    )


def dual_residual(before: AugmentedState, after: AugmentedState) -> float:
    """Largest b |k_t - k_t-1| or d |s_t - s_t-1| between two multiplier iterations."""
    change = np.concatenate([after.b * np.abs(after.k - before.k), after.d * np.abs(after.s - before.s)])
    return float(change.max()) if change.size else 0.0


def penalty_scale(primal: float, dual: float, rho: float, ratio: float) -> float:
    """rho when the primal residual dominates, 1/rho when the dual one does, else 1."""
    if primal > ratio * dual:
        return rho
    if dual > ratio * primal:
        return 1.0 / rho
    return 1.0


@dataclass
class CoordinateResult:
    """Outcome of one coordinate descent solve."""
    params: PrecisionParams
    state: AugmentedState
    sweeps: int
    converged: bool
    values: List[float] = field(default_factory=list)


def cd_solve(
    sets: ActiveSets,
    state: AugmentedState,
    init: PrecisionParams,
    g: GramCache,
    hyper: Hyperparams,
    track_values: bool = False,
) -> CoordinateResult:
    """
    Cyclic coordinate descent on the augmented Lagrangian.

    Sweeps diagonal entries, off-diagonal entries, then both slack blocks
    (slacks do not interact, so a block update equals sequential updates).
    Each step is measured as |change| times the curvature of its 1-D problem,
    the size of the partial derivative the step removed.
    Stops when the largest measured step is below eps_cd or after max_cd
    sweeps. With track_values the augmented value after each sweep is kept.
    """
    if not state.sets.same_as(sets):
        raise InputError("augmented state was built for different active sets")
    ws = CoordinateState(init, state, g, hyper)
    values = [augmented_value(init, state, g, hyper)] if track_values else []
    converged = False
    sweeps = 0
    for sweeps in range(1, hyper.max_cd + 1):
        step = 0.0
        for j in range(ws.p):
            value, curvature = _diagonal_step(j, ws)
            step = max(step, curvature * abs(value - ws.theta[j, j]))
            ws.set_diagonal(j, value)
        for j in range(ws.beta.size):
            value, curvature = _beta_step(j, ws)
            step = max(step, curvature * abs(value - ws.beta[j]))
            ws.set_beta(j, value)
        if ws.k.size:
            k = _diag_slacks(ws)
            step = max(step, float(np.max(state.b * np.abs(k - ws.k))))
            ws.k = k
        if ws.s.size:
            s = _beta_slacks(ws)
            step = max(step, float(np.max(state.d * np.abs(s - ws.s))))
            ws.s = s
        if track_values:
            values.append(augmented_value(ws.params(), ws.augmented(), g, hyper))
        if step < hyper.eps_cd:
            converged = True
            break
    if not converged:
        logger.debug(f"Coordinate descent stopped at the {hyper.max_cd}-sweep cap")
    return CoordinateResult(params=ws.params(), state=ws.augmented(), sweeps=sweeps, converged=converged, values=values)


@dataclass
class AlmResult:
    """
    Outcome of one augmented Lagrangian solve.

    residuals holds the primal (constraint) residual and dual_residuals the
    weighted slack movement after each multiplier iteration.
    """
    params: PrecisionParams
    state: AugmentedState
    residuals: List[float]
    iterations: int
    cd_sweeps: int
    converged: bool
    message: Optional[str] = None
    dual_residuals: List[float] = field(default_factory=list)


def alm_solve(sets: ActiveSets, init: PrecisionParams, g: GramCache, hyper: Hyperparams) -> AlmResult:
    """
    Minimize the slack-form surrogate by the augmented Lagrangian method.

    Slacks start at the current differences, a = c = 0, b = d = penalty_init.
    Alternates cd_solve and update_multipliers until the coordinate descent
    converged and both the largest constraint residual and the dual residual
    (b |k_t - k_t-1|, d |s_t - s_t-1|) are below eps_alm.

    b and d grow by rho while the primal residual exceeds balance_ratio times
    the dual one and shrink by rho in the opposite case. Flags a stall after
    stall_limit consecutive non-decreasing residuals, or the max_alm cap.
    """
    state = AugmentedState.start(sets, init, hyper.penalty_init, hyper.rho)
    if not sets.has_constraints:
        cd = cd_solve(sets, state, init, g, hyper)
        message = None if cd.converged else f"coordinate descent reached {hyper.max_cd} sweeps"
        return AlmResult(params=cd.params, state=cd.state, residuals=[0.0], iterations=1,
                         cd_sweeps=cd.sweeps, converged=cd.converged, message=message, dual_residuals=[0.0])

    current = init
    residuals: List[float] = []
    duals: List[float] = []
    sweeps = 0
    stalled = 0
    for t in range(1, hyper.max_alm + 1):
        cd = cd_solve(sets, state, current, g, hyper)
        primal = constraint_residual(cd.params, cd.state)
        dual = dual_residual(state, cd.state)
        current, state = cd.params, cd.state
        sweeps += cd.sweeps
        logger.debug(f"ALM iteration {t}: primal {primal:.3e}, dual {dual:.3e} after {cd.sweeps} sweeps")
        if residuals and max(primal, dual) >= max(residuals[-1], duals[-1]):
            stalled += 1
        else:
            stalled = 0
        residuals.append(primal)
        duals.append(dual)
        if cd.converged and primal < hyper.eps_alm and dual < hyper.eps_alm:
            return AlmResult(params=current, state=state, residuals=residuals, iterations=t,
                             cd_sweeps=sweeps, converged=True, dual_residuals=duals)
        if stalled >= hyper.stall_limit:
            return AlmResult(params=current, state=state, residuals=residuals, iterations=t,
                             cd_sweeps=sweeps, converged=False, dual_residuals=duals,
                             message=f"residuals stalled at primal {primal:.3e}, dual {dual:.3e}")
        scale = penalty_scale(primal, dual, state.rho, hyper.balance_ratio)
        state = update_multipliers(state, current, scale)
    return AlmResult(params=current, state=state, residuals=residuals, iterations=hyper.max_alm,
                     cd_sweeps=sweeps, converged=False, dual_residuals=duals,
                     message=f"ALM reached {hyper.max_alm} iterations with residuals "
                             f"{residuals[-1]:.3e} / {duals[-1]:.3e}")


def fit(data: DataMatrix, hyper: Hyperparams, init: Optional[PrecisionParams] = None) -> FitReport:
    """
    Minimize the truncated-L1 penalized composite likelihood by DC programming.

    Starts from theta_jj = n / S_jj, beta = 0 unless init is given. Each DC
    iteration rebuilds the active sets from the previous iterate and runs
    alm_solve; stops when the parameter change is below eps_dc, the active
    sets repeat, or max_dc is reached.

    Raises:
        InputError: If the data is not centered or a column has zero variance
    """
    g = gram(data)
    start = PrecisionParams.initial(g)
    current = start if init is None else init
    if current.p != g.p:
        raise InputError(f"initial parameters have p={current.p}, data has p={g.p}")

    report = FitReport(params=current, objective_trace=[objective(current, g, hyper)])
    best, best_value = current, report.objective_trace[0]
    previous_sets: Optional[ActiveSets] = None
    converged_dc = False

    for m in range(1, hyper.max_dc + 1):
        sets = active_sets(current, hyper.tau).weighted(hyper.lambda1, hyper.lambda2, hyper.lambda3)
        if sets.same_as(previous_sets):
            converged_dc = True
            break
        try:
            alm = alm_solve(sets, current, g, hyper)
        except NonConvergenceError as e:
            logger.warning(f"DC iteration {m} failed: {e}")
            report.mark_flagged(str(e))
            break
        change = max(
            float(np.abs(alm.params.diag - current.diag).max()),
            float(np.abs(alm.params.beta - current.beta).max()) if current.beta.size else 0.0,
        )
        current = alm.params
        value = objective(current, g, hyper)
        report.objective_trace.append(value)
        report.alm_residuals.append(alm.residuals)
        report.dc_iterations = m
        report.alm_iterations += alm.iterations
        report.cd_sweeps += alm.cd_sweeps
        if not alm.converged:
            report.mark_flagged(f"DC iteration {m}: {alm.message}")
        if value < best_value:
            best, best_value = current, value
        logger.debug(f"DC iteration {m}: objective {value:.10g}, change {change:.3e}, "
                     f"|E_d|={len(sets.diag_pairs)}, |V_o|={len(sets.zero_betas)}, |E_o|={len(sets.beta_pairs)}")
        if change < hyper.eps_dc:
            converged_dc = True
            break
        previous_sets = sets

    if not converged_dc and report.converged:
        report.mark_flagged(f"DC loop reached {hyper.max_dc} iterations")
    report.params = current if report.converged else best
    logger.info(f"Fit finished: {report.dc_iterations} DC, {report.alm_iterations} ALM, "
                f"{report.cd_sweeps} CD sweeps, converged={report.converged}")
    return report
