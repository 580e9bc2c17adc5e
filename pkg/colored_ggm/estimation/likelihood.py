"""
Composite Likelihood and Penalized Objectives

Evaluates, from Gram sufficient statistics only:
    - the conditional composite log-likelihood l_c
    - the truncated-L1 penalized objective
    - the convex DC surrogate built from active sets
    - the augmented Lagrangian of the slack reformulation
    - analytic first derivatives of the augmented Lagrangian

The additive -1/2 log(2 pi) constants of l_c are dropped everywhere.
All functions are pure; inputs are never modified.
"""

from typing import Optional, Tuple

import numpy as np
from scipy.spatial.distance import pdist

from ..errors import InputError
from ..models import Hyperparams
from .models import ActiveSets, AugmentedState, GramCache, PrecisionParams, pair_arrays, pair_from_index


def _sample_count(g: GramCache, n: Optional[int]) -> int:
    return g.n if n is None else int(n)


def composite_loglik(params: PrecisionParams, g: GramCache, n: Optional[int] = None) -> float:
    """
    l_c(theta) = 1/2 sum_j { n log theta_jj - theta_jj ||X_(j) - X B_j||^2 }.

    The squared norm is expanded in Gram products:
    theta_jj S_jj + 2 sum_{i != j} theta_ij S_ij + theta_jj^-1 Q_j,
    Q_j = sum_{k,l != j} theta_kj theta_lj S_kl.
    """
    if params.p != g.p:
        raise InputError(f"parameters have p={params.p}, Gram matrix has p={g.p}")
    n = _sample_count(g, n)
    theta = params.to_matrix()
    t = params.diag
    W = theta - np.diag(t)
    linear = (g.S * W).sum(axis=0)
    quadratic = (W * (g.S @ W)).sum(axis=0)
    return 0.5 * float(np.sum(n * np.log(t) - t * np.diag(g.S) - 2.0 * linear - quadratic / t))


def truncated_l1(x: float, tau: float) -> float:
    """J_tau(x) = min(x / tau, 1) for x >= 0."""
    if x < 0:
        raise InputError(f"truncated L1 needs a nonnegative argument, got {x}")
    if tau <= 0:
        raise InputError("tau must be positive")
    return min(x / tau, 1.0)


def _jtau_sum(values: np.ndarray, tau: float) -> float:
    return float(np.minimum(np.abs(values) / tau, 1.0).sum())


def _pair_differences(values: np.ndarray) -> np.ndarray:
    """|v_j - v_j'| for all j < j' in lexicographic order."""
    if values.size < 2:
        return np.zeros(0)
    return pdist(values.reshape(-1, 1), metric="cityblock")


def penalty(params: PrecisionParams, hyper: Hyperparams) -> float:
    """Truncated-L1 penalty part of the objective."""
    total = 0.0
    if hyper.lambda1:
        total += hyper.lambda1 * _jtau_sum(_pair_differences(params.diag), hyper.tau)
    if hyper.lambda2:
        total += hyper.lambda2 * _jtau_sum(params.beta, hyper.tau)
    if hyper.lambda3:
        total += hyper.lambda3 * _jtau_sum(_pair_differences(params.beta), hyper.tau)
    return total


def objective(params: PrecisionParams, g: GramCache, hyper: Hyperparams, n: Optional[int] = None) -> float:
    """
    f(theta) = -l_c/n + lambda1 sum J(|theta_jj - theta_j'j'|) + lambda2 sum J(|beta_j|)
               + lambda3 sum J(|beta_j - beta_j'|), the last sum over all slot pairs.
    """
    n = _sample_count(g, n)
    return -composite_loglik(params, g, n) / n + penalty(params, hyper)


def active_sets(prev: PrecisionParams, tau: float) -> ActiveSets:
    """Pairs and slots whose penalty argument at prev is strictly below tau."""
    if tau <= 0:
        raise InputError("tau must be positive")
    p = prev.p
    diag_rows, diag_cols = pair_arrays(p)
    diag_mask = _pair_differences(prev.diag) < tau
    m = prev.beta.size
    slot_rows, slot_cols = np.triu_indices(m, 1)
    slot_mask = _pair_differences(prev.beta) < tau
    return ActiveSets(
        diag_pairs=np.column_stack([diag_rows[diag_mask], diag_cols[diag_mask]]),
        zero_betas=np.flatnonzero(np.abs(prev.beta) < tau),
        beta_pairs=np.column_stack([slot_rows[slot_mask], slot_cols[slot_mask]]),
        p=p,
        tau=float(tau),
    )


def surrogate(
    params: PrecisionParams,
    g: GramCache,
    hyper: Hyperparams,
    sets: ActiveSets,
    n: Optional[int] = None,
) -> float:
    """Convex majorizer: -l_c/n plus (lambda/tau)-weighted absolute terms on active sets only."""
    n = _sample_count(g, n)
    dp, bp = sets.diag_pairs, sets.beta_pairs
    value = -composite_loglik(params, g, n) / n
    value += hyper.lambda1 / hyper.tau * np.abs(params.diag[dp[:, 0]] - params.diag[dp[:, 1]]).sum()
    value += hyper.lambda2 / hyper.tau * np.abs(params.beta[sets.zero_betas]).sum()
    value += hyper.lambda3 / hyper.tau * np.abs(params.beta[bp[:, 0]] - params.beta[bp[:, 1]]).sum()
    return float(value)


def surrogate_constant(sets: ActiveSets, hyper: Hyperparams) -> float:
    """
    Constant C with objective <= surrogate + C everywhere, equality at the
    iterate the sets were built from: each saturated term contributes its lambda.
    """
    n_vertex_pairs = sets.p * (sets.p - 1) // 2
    n_slot_pairs = sets.n_slots * (sets.n_slots - 1) // 2
    return (
        hyper.lambda1 * (n_vertex_pairs - len(sets.diag_pairs))
        + hyper.lambda2 * (sets.n_slots - len(sets.zero_betas))
        + hyper.lambda3 * (n_slot_pairs - len(sets.beta_pairs))
    )


def _check_state(state: AugmentedState, sets: Optional[ActiveSets]) -> ActiveSets:
    if sets is None:
        return state.sets
    if len(sets.diag_pairs) != state.k.size or len(sets.beta_pairs) != state.s.size:
        raise InputError("augmented state does not match the active sets")
    return sets


def diag_residuals(params: PrecisionParams, state: AugmentedState) -> np.ndarray:
    """theta_jj - theta_j'j' - k_jj' for every active vertex pair."""
    dp = state.sets.diag_pairs
    return params.diag[dp[:, 0]] - params.diag[dp[:, 1]] - state.k


def beta_residuals(params: PrecisionParams, state: AugmentedState) -> np.ndarray:
    """beta_j - beta_j' - beta_jj' for every active slot pair."""
    bp = state.sets.beta_pairs
    return params.beta[bp[:, 0]] - params.beta[bp[:, 1]] - state.s


def constraint_residual(params: PrecisionParams, state: AugmentedState) -> float:
    """Largest absolute constraint violation of the slack reformulation."""
    residuals = np.concatenate([diag_residuals(params, state), beta_residuals(params, state)])
    return float(np.abs(residuals).max()) if residuals.size else 0.0


def augmented_value(
    params: PrecisionParams,
    state: AugmentedState,
    g: GramCache,
    hyper: Hyperparams,
    sets: Optional[ActiveSets] = None,
    n: Optional[int] = None,
) -> float:
    """
    Slack-form surrogate (absolute penalties on the slacks) plus the linear
    and quadratic multiplier terms of the augmented Lagrangian.
    """
    sets = _check_state(state, sets)
    n = _sample_count(g, n)
    r_diag = diag_residuals(params, state)
    r_beta = beta_residuals(params, state)
    value = -composite_loglik(params, g, n) / n
    value += hyper.lambda1 / hyper.tau * np.abs(state.k).sum()
    value += hyper.lambda2 / hyper.tau * np.abs(params.beta[sets.zero_betas]).sum()
    value += hyper.lambda3 / hyper.tau * np.abs(state.s).sum()
    value += np.dot(state.a, r_diag) + 0.5 * np.dot(state.b, r_diag ** 2)
    value += np.dot(state.c, r_beta) + 0.5 * np.dot(state.d, r_beta ** 2)
    return float(value)


def diag_coefficients(
    j: int,
    theta: np.ndarray,
    S: np.ndarray,
    n: int,
    state: AugmentedState,
) -> Tuple[float, float, float]:
    """
    Coefficients (B, C, Q) of the theta_jj derivative
    B theta + C - 1/(2 theta) - Q / (2 n theta^2).

    theta is the current full matrix; B sums the b multipliers of pairs
    touching j, C collects every theta_jj-free linear term.
    """
    w = theta[:, j].copy()
    w[j] = 0.0
    Q = float(w @ S @ w)
    edges, others, signs = state.sets.vertex_incidence.at(j)
    b = state.b[edges]
    B = float(b.sum())
    C = S[j, j] / (2.0 * n) + float(np.sum(signs * state.a[edges] - b * (np.diag(theta)[others] + signs * state.k[edges])))
    return B, C, Q


def beta_coefficients(
    j: int,
    theta: np.ndarray,
    beta: np.ndarray,
    S: np.ndarray,
    n: int,
    state: AugmentedState,
) -> Tuple[float, float]:
    """
    Coefficients (z, r) of the smooth beta_j derivative r beta_j - z.

    theta is the current full matrix and beta its lexicographic vector.
    """
    q, l = pair_from_index(j, theta.shape[0])
    g_q = S[l] @ theta[:, q] - S[l, l] * theta[l, q] - S[l, q] * theta[q, q]
    g_l = S[q] @ theta[:, l] - S[q, q] * theta[q, l] - S[q, l] * theta[l, l]
    edges, others, signs = state.sets.slot_incidence.at(j)
    d = state.d[edges]
    r = (S[l, l] / theta[q, q] + S[q, q] / theta[l, l]) / n + float(d.sum())
    z = -(2.0 * S[q, l] + g_q / theta[q, q] + g_l / theta[l, l]) / n
    z += float(np.sum(-signs * state.c[edges] + d * (beta[others] + signs * state.s[edges])))
    return float(z), float(r)


def grad_diag(
    j: int,
    params: PrecisionParams,
    state: AugmentedState,
    g: GramCache,
    hyper: Hyperparams,
    sets: Optional[ActiveSets] = None,
    n: Optional[int] = None,
) -> float:
    """Derivative of augmented_value with respect to theta_jj."""
    _check_state(state, sets)
    n = _sample_count(g, n)
    t = params.diag[j]
    if t <= 0:
        raise InputError("theta_jj must be positive")
    B, C, Q = diag_coefficients(j, params.to_matrix(), g.S, n, state)
    return B * t + C - 0.5 / t - Q / (2.0 * n * t * t)


def _grad_beta_smooth(j: int, params: PrecisionParams, state: AugmentedState, g: GramCache, n: int) -> float:
    z, r = beta_coefficients(j, params.to_matrix(), params.beta, g.S, n, state)
    return r * params.beta[j] - z


def grad_beta_penalized(
    j: int,
    params: PrecisionParams,
    state: AugmentedState,
    g: GramCache,
    hyper: Hyperparams,
    sets: Optional[ActiveSets] = None,
    n: Optional[int] = None,
) -> float:
    """Derivative with respect to beta_j for a slot in the zero set (beta_j != 0)."""
    sets = _check_state(state, sets)
    if j not in sets.zero_beta_set():
        raise InputError(f"slot {j} is not in the zero set")
    smooth = _grad_beta_smooth(j, params, state, g, _sample_count(g, n))
    return smooth + hyper.lambda2 / hyper.tau * np.sign(params.beta[j])


def grad_beta_free(
    j: int,
    params: PrecisionParams,
    state: AugmentedState,
    g: GramCache,
    hyper: Hyperparams,
    sets: Optional[ActiveSets] = None,
    n: Optional[int] = None,
) -> float:
    """
    Derivative with respect to beta_j for a slot outside the zero set.

    Takes hyper like grad_beta_penalized so callers can pick either by set
    membership; no weight enters this derivative.
    """
    sets = _check_state(state, sets)
    if j in sets.zero_beta_set():
        raise InputError(f"slot {j} is in the zero set")
    return _grad_beta_smooth(j, params, state, g, _sample_count(g, n))


def grad_slack_k(
    e: int,
    params: PrecisionParams,
    state: AugmentedState,
    hyper: Hyperparams,
    sets: Optional[ActiveSets] = None,
) -> float:
    """
    Derivative with respect to the diagonal slack k of active pair e (k != 0).

    Slack derivatives do not involve the data, so no Gram matrix is taken.
    """
    _check_state(state, sets)
    residual = diag_residuals(params, state)[e]
    return hyper.lambda1 / hyper.tau * np.sign(state.k[e]) - state.a[e] - state.b[e] * residual


def grad_slack_beta(
    e: int,
    params: PrecisionParams,
    state: AugmentedState,
    hyper: Hyperparams,
    sets: Optional[ActiveSets] = None,
) -> float:
    """Derivative with respect to the off-diagonal slack of active slot pair e (slack != 0)."""
    _check_state(state, sets)
    residual = beta_residuals(params, state)[e]
    return hyper.lambda3 / hyper.tau * np.sign(state.s[e]) - state.c[e] - state.d[e] * residual
