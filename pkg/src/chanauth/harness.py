"""Experiment protocol: grids of transmitter pairs, miss-rate sweeps, and
end-to-end empirical error rates.

For each candidate spoofer/legitimate position pair the ray tracer supplies
the fixed responses, the link budget sets the noise floor, and the detector
produces a miss rate (closed form where the regime admits one, Monte Carlo
otherwise).  Room-level sweeps average the per-pair miss rates over a
seeded subsample of position pairs.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace
from enum import Enum

import numpy as np

from . import channel as chan
from . import detect, raytrace, stats
from .channel import ChannelParams, SpatialMode
from .detect import Regime, TestConfig
from .numerics import HermitianMatrix, RngStream, cholesky
from .raytrace import GridSpec, RoomScene

BOLTZMANN_NOISE_DENSITY = 10.0 ** (-17.4)  # thermal noise density kT in mW/Hz


@dataclass(frozen=True)
class LinkBudget:
    """Transmit power and receiver noise description (milliwatts, Hz)."""

    P_T: float
    kT: float = BOLTZMANN_NOISE_DENSITY
    N_F: float = 10.0
    b: float = 0.25e6

    def __post_init__(self):
        for name in ("P_T", "kT", "N_F", "b"):
            if getattr(self, name) <= 0:
                raise ValueError(f"{name} must be positive")


@dataclass(frozen=True)
class SweepResult:
    """Room-averaged miss rates along one swept parameter axis."""

    swept_param: str
    values: tuple
    beta_bar: tuple[float, ...]
    std_err: tuple[float, ...]
    pair_count: int


@dataclass(frozen=True)
class ErrorRates:
    """Empirical false-alarm and miss rates with binomial standard errors."""

    alpha_hat: float
    beta_hat: float
    alpha_se: float
    beta_se: float
    trials: int


def noise_variance(budget: LinkBudget, M: int) -> float:
    """Per-tone noise-to-signal variance M * kT * N_F * b / P_T.

    The per-tone transmit power is P_T / M, so the dimensionless noise
    variance grows linearly with the tone count.
    """
    return M * budget.kT * budget.N_F * budget.b / budget.P_T


def sigma_T_from_bT(b_T: float, room_gain: float) -> float:
    """Absolute variation scale from the relative index: sigma_T = b_T * gain."""
    if b_T < 0 or room_gain < 0:
        raise ValueError("b_T and room_gain must be nonnegative")
    return b_T * room_gain


def _covariance_for_regime(params: ChannelParams, regime: Regime) -> HermitianMatrix:
    """The R matrix the detector whitens with, per regime."""
    if regime in (Regime.GENERAL_KNOWN_PARAMS, Regime.FULL_SPATIAL_CORRELATION):
        return stats.covariance_R(params)
    if regime is Regime.LOW_BC_CLOSED_FORM:
        r0 = 2.0 * (1.0 - params.a) * params.sigma_T**2 + 2.0 * params.sigma_N2
        return cholesky(r0 * np.eye(params.M, dtype=complex))
    if regime is Regime.HIGH_BC_NUMERICAL:
        return stats.asymptotic_R_high_bc(params).factored()
    if regime is Regime.TIME_INVARIANT_BENCHMARK:
        return cholesky(2.0 * params.sigma_N2 * np.eye(params.M, dtype=complex))
    raise ValueError(f"no whitening covariance for regime {regime}")


def pair_miss_rate(
    scene: RoomScene,
    alice,
    eve,
    bob,
    params: ChannelParams,
    cfg: TestConfig,
    trials: int = 10_000,
    rng: RngStream | None = None,
) -> float:
    """Miss rate for one spoofer/legitimate position pair.

    Fixed responses come from the image-source model; the regime selects a
    closed-form evaluator where one exists and Monte Carlo otherwise.
    """
    hbar_a = raytrace.fixed_response(scene, alice, bob, params)
    hbar_e = raytrace.fixed_response(scene, eve, bob, params)
    return miss_rate_for_pair(hbar_a, hbar_e, params, cfg, trials, rng)


def miss_rate_for_pair(
    hbar_a: np.ndarray,
    hbar_e: np.ndarray,
    params: ChannelParams,
    cfg: TestConfig,
    trials: int = 10_000,
    rng: RngStream | None = None,
) -> float:
    """Miss rate from precomputed fixed responses (see pair_miss_rate)."""
    regime = cfg.regime
    if regime is Regime.LOW_BC_CLOSED_FORM or (
        regime is Regime.GENERAL_KNOWN_PARAMS and params.Bc == 0
    ):
        return detect.miss_rate_low_bc(cfg.alpha, params, hbar_a, hbar_e)
    if regime is Regime.TIME_INVARIANT_BENCHMARK:
        return detect.miss_rate_time_invariant(cfg.alpha, params.sigma_N2, hbar_a, hbar_e, params.M)
    if regime is Regime.FULL_SPATIAL_CORRELATION:
        return detect.miss_rate_full_spatial(cfg.alpha, params, hbar_a, hbar_e, stats.covariance_R(params))
    if rng is None:
        raise ValueError(f"regime {regime} is Monte Carlo and needs an RngStream")
    if regime is Regime.HIGH_BC_NUMERICAL:
        r = stats.asymptotic_R_high_bc(params)
        g = stats.asymptotic_G_high_bc(params)
    elif regime is Regime.GENERAL_KNOWN_PARAMS:
        r = stats.covariance_R(params)
        g = stats.covariance_G(params)
    elif regime is Regime.UNKNOWN_PARAMS:
        if cfg.threshold_override is None:
            raise ValueError("unknown-parameters regime needs threshold_override")
        g = stats.covariance_G(params).factored()
        gen = rng.generator
        delta = np.asarray(hbar_e) - np.asarray(hbar_a)
        w = (gen.standard_normal((trials, params.M)) + 1j * gen.standard_normal((trials, params.M))) / math.sqrt(2.0)
        z = np.sum(np.abs(delta + g.sample_offset(w)) ** 2, axis=-1) / params.sigma_N2
        return float(np.mean(z < cfg.threshold_override))
    else:
        raise ValueError(f"unhandled regime {regime}")
    beta, _ = detect.miss_rate_general_numerical(
        cfg.alpha, params, hbar_a, hbar_e, r, g, trials, rng
    )
    return beta


def empirical_error_rates(
    scene: RoomScene,
    alice,
    eve,
    bob,
    params: ChannelParams,
    cfg: TestConfig,
    trials: int,
    rng: RngStream,
) -> ErrorRates:
    """Full time-series simulation of both error rates for one pair."""
    hbar_a = raytrace.fixed_response(scene, alice, bob, params)
    hbar_e = raytrace.fixed_response(scene, eve, bob, params)
    return simulate_error_rates(hbar_a, hbar_e, params, cfg, trials, rng)


def simulate_error_rates(
    hbar_a: np.ndarray,
    hbar_e: np.ndarray,
    params: ChannelParams,
    cfg: TestConfig,
    trials: int,
    rng: RngStream,
    batch: int = 4000,
    include_h0: bool = True,
    include_h1: bool = True,
    dtype=np.float32,
) -> ErrorRates:
    """End-to-end empirical error rates from precomputed fixed responses.

    Every trial probes the channel at k-1 (the stored reference), steps the
    taps once, and scores both the legitimate probe and the spoofed probe
    at k with the configured statistic.  Trials run in batches to bound
    memory with long delay lines; tap draws default to single precision,
    whose quantization sits far below the binomial resolution.  A skipped
    hypothesis (include_h0/include_h1) reports nan for its rate.
    """
    if trials < 1:
        raise ValueError("trials must be >= 1")
    if not (include_h0 or include_h1):
        raise ValueError("at least one hypothesis must be simulated")
    hbar_a = np.asarray(hbar_a, dtype=complex)
    hbar_e = np.asarray(hbar_e, dtype=complex)
    mode = (
        SpatialMode.FULLY_CORRELATED
        if cfg.regime is Regime.FULL_SPATIAL_CORRELATION
        else SpatialMode.INDEPENDENT
    )
    unknown = cfg.regime is Regime.UNKNOWN_PARAMS
    r = None if unknown else _covariance_for_regime(params, cfg.regime)
    threshold = detect.threshold_for(cfg, params.M)
    profile = chan.build_delay_profile(params)
    # Stepping the legitimate taps only matters when its k-probe is scored
    # or when the spoofer shares the variation.
    need_step = include_h0 or mode is SpatialMode.FULLY_CORRELATED

    def scores(diffs: np.ndarray) -> np.ndarray:
        diffs = diffs.astype(complex, copy=False)
        if unknown:
            return np.sum(np.abs(diffs) ** 2, axis=-1) / params.sigma_N2
        return detect.statistic_batch(diffs, r)

    false_alarms = 0
    misses = 0
    done = 0
    while done < trials:
        n = min(batch, trials - done)
        state = chan.init_taps(profile, rng, batch=n, dtype=dtype)
        ref = chan.sample_response(hbar_a, state, params, rng)
        if need_step:
            state = chan.step_taps(state, params.a, rng)
        if include_h0:
            probe_alice = chan.sample_response(hbar_a, state, params, rng)
            z0 = scores(probe_alice.samples - ref.samples)
            false_alarms += int(np.count_nonzero(z0 > threshold))
        if include_h1:
            eve_state = chan.eve_variation(state, mode, rng, params)
            probe_eve = chan.sample_response(hbar_e, eve_state, params, rng)
            z1 = scores(probe_eve.samples - ref.samples)
            misses += int(np.count_nonzero(z1 <= threshold))
        done += n

    a_hat = false_alarms / trials if include_h0 else math.nan
    b_hat = misses / trials if include_h1 else math.nan
    return ErrorRates(
        alpha_hat=a_hat,
        beta_hat=b_hat,
        alpha_se=math.sqrt(max(a_hat * (1 - a_hat), 1.0 / trials) / trials),
        beta_se=math.sqrt(max(b_hat * (1 - b_hat), 1.0 / trials) / trials),
        trials=trials,
    )


class SweepAxis(Enum):
    B_T = "b_T"
    W = "W"
    M = "M"
    P_T = "P_T"
    B_C = "B_c"
    SPATIAL_MODE = "spatial_mode"


def _select_pairs(n_points: int, pair_budget: int, rng: RngStream) -> tuple[np.ndarray, np.ndarray]:
    """Seeded uniform subsample of position pairs, or all of them."""
    ii, jj = np.triu_indices(n_points, k=1)
    total = len(ii)
    if pair_budget < 1:
        raise ValueError("pair_budget must be >= 1")
    if pair_budget >= total:
        return ii, jj
    pick = rng.generator.choice(total, size=pair_budget, replace=False)
    pick.sort()
    return ii[pick], jj[pick]


def _apply_sweep_value(
    params: ChannelParams, budget: LinkBudget, cfg: TestConfig, axis: SweepAxis, value
) -> tuple[ChannelParams, LinkBudget, TestConfig]:
    if axis is SweepAxis.W:
        params = replace(params, W=float(value))
    elif axis is SweepAxis.M:
        params = replace(params, M=int(value))
    elif axis is SweepAxis.B_C:
        params = replace(params, Bc=float(value))
    elif axis is SweepAxis.P_T:
        budget = replace(budget, P_T=float(value))
    elif axis is SweepAxis.SPATIAL_MODE:
        mode = SpatialMode(value) if not isinstance(value, SpatialMode) else value
        regime = (
            Regime.FULL_SPATIAL_CORRELATION
            if mode is SpatialMode.FULLY_CORRELATED
            else Regime.GENERAL_KNOWN_PARAMS
        )
        cfg = replace(cfg, regime=regime)
    # B_T is applied later, after the room gain is known.
    return params, budget, cfg


def room_sweep(
    scene: RoomScene,
    grid: GridSpec,
    bob,
    budget: LinkBudget,
    base_params: ChannelParams,
    cfg: TestConfig,
    sweep_param: SweepAxis | str,
    sweep_values,
    b_T: float,
    pair_budget: int = 2000,
    trials: int = 10_000,
    rng: RngStream | None = None,
) -> SweepResult:
    """Room-averaged miss rate along one parameter axis.

    ``base_params.sigma_T`` and ``sigma_N2`` are derived per sweep value
    from b_T, the room gain, and the link budget (all three can depend on
    the swept parameter).  The pair subsample is drawn once, so every
    sweep value sees the same pairs.  Deterministic for a fixed rng seed.
    """
    axis = SweepAxis(sweep_param) if not isinstance(sweep_param, SweepAxis) else sweep_param
    sweep_values = list(sweep_values)
    if not sweep_values:
        raise ValueError("sweep_values must be nonempty")
    if rng is None:
        rng = RngStream(0)

    positions = raytrace.grid_positions(grid)
    ii, jj = _select_pairs(len(positions), pair_budget, rng.substream(1))

    beta_bar, std_err = [], []
    for idx, value in enumerate(sweep_values):
        params, val_budget, val_cfg = _apply_sweep_value(base_params, budget, cfg, axis, value)
        bt = float(value) if axis is SweepAxis.B_T else b_T
        room_gain = raytrace.room_average_gain(scene, grid, bob, params)
        params = replace(
            params,
            sigma_T=sigma_T_from_bT(bt, room_gain),
            sigma_N2=noise_variance(val_budget, params.M),
        )
        responses = raytrace.response_matrix(scene, positions, bob, params)
        pair_rng = rng.substream(100 + idx)
        betas = np.array(
            [
                miss_rate_for_pair(responses[i], responses[j], params, val_cfg, trials, pair_rng)
                for i, j in zip(ii, jj)
            ]
        )
        beta_bar.append(float(betas.mean()))
        std_err.append(float(betas.std(ddof=1) / math.sqrt(len(betas))) if len(betas) > 1 else 0.0)

    return SweepResult(
        swept_param=axis.value,
        values=tuple(sweep_values),
        beta_bar=tuple(beta_bar),
        std_err=tuple(std_err),
        pair_count=len(ii),
    )
