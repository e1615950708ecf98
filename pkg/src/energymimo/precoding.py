"""Downlink precoder solvers.

``zf_precoder`` is the conventional per-subcarrier zero-forcing solution
minimizing transmit power. ``min_pa_precoder`` minimizes the square-root PA
consumption under the same QoS constraints by iterating the fixed-point
power equations; the closed-form narrowband, single-user and LOS special
cases have dedicated entry points.

All Gram solves use a Hermitian (Cholesky) factorization followed by
forward/backward substitution on the K x K user-side matrix; the optimal
precoder is then assembled from the weighted channel adjoint.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .channel import ChannelRealization, QosTargets
from .errors import DimensionError, DomainError, InfeasibleError, SingularChannelError
from .model import DEFAULT_ACTIVE_POWER_THRESHOLD, per_antenna_powers

# Condition-number estimate beyond which the Gram solve is refused.
GRAM_CONDITION_LIMIT = 1e12

# Tolerance on max |[H_q W_q]_{k',k} - delta * (gamma_k/Q)^(1/2) sigma| that
# every returned solution is expected to satisfy.
ZF_TOLERANCE = 1e-9


@dataclass(frozen=True)
class FixedPointConfig:
    """Knobs of the fixed-point power iteration.

    ``tolerance`` is the absolute stopping threshold on the largest
    per-antenna power change between iterations, in Watts. Antennas whose
    power falls below ``dead_antenna_floor`` are clamped to zero and removed
    from subsequent Gram solves. ``regularization`` adds a relative ridge
    (times trace/K) to the Gram matrix; zero by default and documented as a
    deviation knob for near-singular instances.
    """

    tolerance: float = 1e-4
    max_iterations: int = 2000
    initial_power: float = 1.0
    dead_antenna_floor: float = 1e-12
    regularization: float = 0.0
    record_history: bool = False

    def __post_init__(self):
        if self.tolerance <= 0.0:
            raise DomainError("tolerance must be positive")
        if self.max_iterations < 1:
            raise DomainError("max_iterations must be >= 1")
        if self.initial_power <= 0.0:
            raise DomainError("initial_power must be positive")
        if self.dead_antenna_floor < 0.0 or self.regularization < 0.0:
            raise DomainError("floors and ridge must be >= 0")


@dataclass
class PrecoderSolution:
    """Per-subcarrier precoding matrices plus convergence diagnostics.

    ``powers`` always equals the per-antenna powers recomputed from
    ``matrices``; ``residual`` is the last max absolute inter-iteration power
    change (zero for closed-form solutions). ``history`` holds the power
    iterates when requested via :class:`FixedPointConfig`.
    """

    matrices: np.ndarray
    powers: np.ndarray
    iterations: int
    converged: bool
    residual: float
    active_set: np.ndarray
    history: list[np.ndarray] | None = None


def _finish_solution(matrices, iterations, converged, residual, history=None) -> PrecoderSolution:
    powers = per_antenna_powers(matrices)
    active = np.flatnonzero(powers > DEFAULT_ACTIVE_POWER_THRESHOLD)
    return PrecoderSolution(
        matrices=matrices,
        powers=powers,
        iterations=iterations,
        converged=converged,
        residual=float(residual),
        active_set=active,
        history=history,
    )


def _check_instance(channel: ChannelRealization, qos: QosTargets):
    if qos.k_users != channel.k_users:
        raise DimensionError(
            f"QoS targets cover {qos.k_users} users, channel has {channel.k_users}"
        )
    if qos.subcarriers != channel.subcarriers:
        raise DimensionError(
            f"QoS normalization assumes Q={qos.subcarriers}, channel has Q={channel.subcarriers}"
        )
    if channel.m_antennas < channel.k_users:
        raise SingularChannelError(
            f"zero forcing needs M >= K, got M={channel.m_antennas}, K={channel.k_users}"
        )


def _weighted_zf_matrices(h, rhs_diag, sqrt_powers=None, ridge=0.0):
    """Solve W_q = D_p^(1/2) H_q^H (H_q D_p^(1/2) H_q^H)^(-1) diag(rhs).

    ``h`` is the (Q, K, M) channel stack; ``sqrt_powers`` the length-M vector
    of p_m^(1/2) (identity weighting when None, which yields plain ZF).
    """
    q, k, _ = h.shape
    if sqrt_powers is None:
        b = h
        quarter = None
    else:
        quarter = np.sqrt(sqrt_powers)
        b = h * quarter[None, None, :]
    gram = b @ b.conj().transpose(0, 2, 1)
    if ridge > 0.0:
        trace = np.einsum("qkk->q", gram).real
        gram = gram + (ridge * trace / k)[:, None, None] * np.eye(k)
    try:
        chol = np.linalg.cholesky(gram)
    except np.linalg.LinAlgError as exc:
        raise SingularChannelError("user-side Gram matrix is not positive definite") from exc
    diag = np.abs(np.diagonal(chol, axis1=1, axis2=2))
    cond_est = (diag.max() / diag.min()) ** 2 if diag.min() > 0.0 else np.inf
    if cond_est > GRAM_CONDITION_LIMIT:
        raise SingularChannelError(
            f"Gram condition estimate {cond_est:.3e} exceeds {GRAM_CONDITION_LIMIT:.1e}"
        )
    rhs = np.zeros((q, k, k), dtype=complex)
    rhs[:, np.arange(k), np.arange(k)] = rhs_diag
    y = np.linalg.solve(chol, rhs)
    x = np.linalg.solve(chol.conj().transpose(0, 2, 1), y)
    w = b.conj().transpose(0, 2, 1) @ x
    if quarter is not None:
        w = w * quarter[None, :, None]
    return w


def zf_precoder(channel: ChannelRealization, qos: QosTargets) -> PrecoderSolution:
    """Per-subcarrier zero-forcing precoder minimizing total transmit power."""
    _check_instance(channel, qos)
    rhs = np.sqrt(qos.per_subcarrier_gamma) * qos.noise_std
    w = _weighted_zf_matrices(channel.per_subcarrier, rhs)
    return _finish_solution(w, iterations=0, converged=True, residual=0.0)


def min_pa_precoder(
    channel: ChannelRealization,
    qos: QosTargets,
    cfg: FixedPointConfig | None = None,
) -> PrecoderSolution:
    """Precoder minimizing the square-root PA consumption under ZF QoS.

    Runs the fixed-point power iteration from a uniform initial allocation:
    each sweep recomputes the weighted ZF solution for the current power
    diagonal and reads back the per-antenna powers, until the largest power
    change drops below the tolerance or the iteration budget is exhausted
    (in which case the solution is returned with ``converged=False`` rather
    than damped). Antennas driven below the dead floor are clamped to zero
    and their columns leave the active Gram solve.
    """
    cfg = cfg or FixedPointConfig()
    _check_instance(channel, qos)
    h = channel.per_subcarrier
    m = channel.m_antennas
    k = channel.k_users
    rhs = np.sqrt(qos.per_subcarrier_gamma) * qos.noise_std

    p = np.full(m, cfg.initial_power)
    active = np.ones(m, dtype=bool)
    history = [p.copy()] if cfg.record_history else None
    converged = False
    residual = np.inf
    iterations = 0

    for iterations in range(1, cfg.max_iterations + 1):
        dying = active & (p < cfg.dead_antenna_floor)
        if np.any(dying):
            p[dying] = 0.0
            active[dying] = False
        if np.count_nonzero(active) < k:
            raise SingularChannelError(
                "fewer active antennas than users; cannot hold the ZF constraint"
            )
        w_act = _weighted_zf_matrices(
            h[:, :, active], rhs, sqrt_powers=np.sqrt(p[active]), ridge=cfg.regularization
        )
        p_new = np.zeros(m)
        p_new[active] = np.sum(np.abs(w_act) ** 2, axis=(0, 2))
        residual = float(np.max(np.abs(p_new - p)))
        p = p_new
        if history is not None:
            history.append(p.copy())
        if residual <= cfg.tolerance:
            converged = True
            break

    # Substitute the final power diagonal back to obtain the precoders.
    w = np.zeros((channel.subcarriers, m, k), dtype=complex)
    w[:, active, :] = _weighted_zf_matrices(
        h[:, :, active], rhs, sqrt_powers=np.sqrt(p[active]), ridge=cfg.regularization
    )
    return _finish_solution(w, iterations, converged, residual, history)


def min_pa_precoder_narrowband(
    h_matrix,
    qos: QosTargets,
    cfg: FixedPointConfig | None = None,
) -> PrecoderSolution:
    """Narrowband (Q=1) consumption-minimizing precoder for a K x M channel."""
    h = np.atleast_2d(np.asarray(h_matrix, dtype=complex))
    if h.ndim != 2:
        raise DimensionError(f"expected a K x M matrix, got shape {h.shape}")
    if qos.subcarriers != 1:
        raise DomainError("narrowband solver requires QoS targets with subcarriers=1")
    kind = "los" if np.allclose(np.abs(h), 1.0, atol=1e-12) else "rayleigh"
    channel = ChannelRealization(
        per_subcarrier=h[None, :, :], large_scale=np.ones(h.shape[0]), kind=kind
    )
    return min_pa_precoder(channel, qos, cfg)


def _check_scalar_targets(gamma: float, noise_std: float):
    if gamma <= 0.0:
        raise DomainError(f"SINR target must be positive, got {gamma}")
    if noise_std <= 0.0:
        raise DomainError(f"noise standard deviation must be positive, got {noise_std}")


def single_user_narrowband_precoder(h, gamma: float, noise_std: float) -> PrecoderSolution:
    """Closed-form single-user narrowband optimum: strongest antenna only.

    Puts all power on m_hat = argmax |h_m| (lowest index on ties), with the
    conjugate phase and the exact gain meeting the SINR target.
    """
    h = np.atleast_1d(np.asarray(h, dtype=complex))
    if h.ndim != 1:
        raise DimensionError(f"expected a length-M vector, got shape {h.shape}")
    _check_scalar_targets(gamma, noise_std)
    gains = np.abs(h)
    if not np.any(gains > 0.0):
        raise InfeasibleError("all-zero channel cannot meet any SINR target")
    m_hat = int(np.argmax(gains))
    w = np.zeros(h.shape[0], dtype=complex)
    w[m_hat] = noise_std * np.sqrt(gamma) * np.conj(h[m_hat]) / gains[m_hat] ** 2
    return _finish_solution(w[None, :, None], iterations=0, converged=True, residual=0.0)


def single_user_saturating_precoder(
    h, gamma: float, noise_std: float, p_max: float
) -> PrecoderSolution:
    """Single-user narrowband solution under binding per-antenna caps.

    Saturates antennas in order of decreasing channel gain until the QoS sum
    sum_m |h_m| p_m^(1/2) reaches noise_std * gamma^(1/2); the last recruited
    antenna gets the partial power closing the gap exactly.
    """
    h = np.atleast_1d(np.asarray(h, dtype=complex))
    if p_max <= 0.0:
        raise DomainError(f"p_max must be positive, got {p_max}")
    _check_scalar_targets(gamma, noise_std)
    gains = np.abs(h)
    target = noise_std * np.sqrt(gamma)
    order = np.argsort(-gains, kind="stable")
    order = order[gains[order] > 0.0]
    contrib = gains[order] * np.sqrt(p_max)
    cumulative = np.cumsum(contrib)
    total = cumulative[-1] if cumulative.size else 0.0
    if total < target:
        raise InfeasibleError(
            f"QoS unreachable even with all antennas saturated: "
            f"sum |h_m| p_max^(1/2) = {total:.6g} < target {target:.6g} "
            f"(deficit {target - total:.6g})",
            deficit=float(target - total),
        )
    last = int(np.searchsorted(cumulative, target))
    powers = np.zeros(h.shape[0])
    powers[order[:last]] = p_max
    already = cumulative[last - 1] if last > 0 else 0.0
    powers[order[last]] = ((target - already) / gains[order[last]]) ** 2
    w = np.zeros(h.shape[0], dtype=complex)
    hot = powers > 0.0
    w[hot] = np.sqrt(powers[hot]) * np.conj(h[hot]) / gains[hot]
    return _finish_solution(w[None, :, None], iterations=0, converged=True, residual=0.0)


def los_allocation_precoder(
    channel: ChannelRealization,
    gamma: float,
    noise_std: float,
    weights,
) -> PrecoderSolution:
    """Single-user LOS precoder realizing a chosen power split.

    Any nonnegative ``weights`` summing to one give an optimal solution:
    p_m^(1/2) = weights_m * noise_std * gamma^(1/2), so the PA consumption is
    invariant to the split. Phases are conjugate-matched per subcarrier.
    """
    if channel.k_users != 1:
        raise DimensionError("LOS allocation precoder is single-user only")
    _check_scalar_targets(gamma, noise_std)
    h = channel.per_subcarrier[:, 0, :]
    if not np.allclose(np.abs(h), 1.0, atol=1e-9):
        raise DomainError("channel entries are not unit modulus; not a LOS channel")
    weights = np.atleast_1d(np.asarray(weights, dtype=float))
    if weights.shape[0] != channel.m_antennas:
        raise DimensionError("weights length must match the antenna count")
    if np.any(weights < 0.0):
        raise DomainError("weights must be non-negative")
    if abs(weights.sum() - 1.0) > 1e-9:
        raise DomainError(f"weights must sum to 1, got {weights.sum()!r}")
    q = channel.subcarriers
    sqrt_p = weights * noise_std * np.sqrt(gamma)
    # Per-subcarrier normalization keeps the QoS product exact even under
    # floating-point weight rounding.
    denom = np.abs(h) ** 2 @ sqrt_p
    scale = noise_std * np.sqrt(gamma / q)
    w = scale * sqrt_p[None, :] * np.conj(h) / denom[:, None]
    return _finish_solution(w[:, :, None], iterations=0, converged=True, residual=0.0)
