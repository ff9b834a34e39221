"""Aggregate observables, sinusoid fitting and the period-versus-coupling law."""

from dataclasses import dataclass, replace
from typing import Callable, Optional

import numpy as np
from scipy.optimize import minimize_scalar

from .discord import SearchConfig, discord
from .dynamics import DensityMatrix, SimConfig, evolve, initial_state
from .errors import InsufficientData, NoDominantFrequency, WindowTooLarge
from .operators import ModelParams, build_hamiltonian, build_jump_channels
from .statespace import BasisState, GatingPolicy, StateSpace, table_space

PREDICATES = {
    "bond_formed": lambda s: s.L == 0,
    "bond_broken": lambda s: s.L == 1,
    "photons_zero": lambda s: s.p1 + s.p2 == 0,
    "photons_present": lambda s: s.p1 + s.p2 >= 1,
}


def population(rho: DensityMatrix, predicate) -> float:
    """Diagonal weight on the states satisfying the predicate."""
    if isinstance(predicate, str):
        predicate = PREDICATES[predicate]
    diag = rho.mat.diagonal().real
    return float(sum(w for s, w in zip(rho.space, diag) if predicate(s)))


def state_population(rho: DensityMatrix, state: BasisState) -> float:
    idx = rho.space.get_index(state)
    if idx is None:
        return 0.0
    return float(rho.mat[idx, idx].real)


@dataclass
class FitResult:
    amplitude: float
    angular_frequency: float
    phase: float
    offset: float
    period: float
    rms_residual: float


def _linear_fit(times, values, b):
    design = np.column_stack([np.sin(b * times), np.cos(b * times),
                              np.ones_like(times)])
    coef, *_ = np.linalg.lstsq(design, values, rcond=None)
    residual = values - design @ coef
    return coef, float(np.sqrt(np.mean(residual**2)))


def fit_sinusoid(times, values) -> FitResult:
    """Least-squares fit of a*sin(b*t + c) + d.

    The angular frequency starts from the dominant discrete-spectrum
    peak of the mean-removed series and is refined by a bounded scalar
    search around that bin, with the linear parameters re-solved at
    every trial frequency.
    """
    times = np.asarray(times, dtype=float)
    values = np.asarray(values, dtype=float)
    if times.size < 8:
        raise InsufficientData(f"need >= 8 samples, got {times.size}")
    centered = values - values.mean()
    if np.abs(centered).max() <= 1e-15 * max(1.0, np.abs(values).max()):
        raise NoDominantFrequency("series is constant")
    spectrum = np.abs(np.fft.rfft(centered))
    dt = float(np.median(np.diff(times)))
    freqs = np.fft.rfftfreq(times.size, d=dt)
    peak = 1 + int(np.argmax(spectrum[1:]))
    if spectrum[peak] <= 1e-12 * times.size:
        raise NoDominantFrequency("no oscillating component")
    b0 = 2 * np.pi * freqs[peak]
    # true frequency sits within one spectral bin of the peak
    bin_width = 2 * np.pi / (times[-1] - times[0])
    lo = max(0.25 * bin_width, b0 - 1.5 * bin_width)
    hi = b0 + 1.5 * bin_width

    def rss(b):
        return _linear_fit(times, values, b)[1]

    res = minimize_scalar(rss, bounds=(lo, hi), method="bounded",
                          options={"xatol": 1e-9 * max(b0, bin_width)})
    b = float(res.x)
    (a_sin, a_cos, offset), rms = _linear_fit(times, values, b)
    amplitude = float(np.hypot(a_sin, a_cos))
    phase = float(np.arctan2(a_cos, a_sin))
    return FitResult(amplitude=amplitude, angular_frequency=b, phase=phase,
                     offset=float(offset), period=2 * np.pi / b,
                     rms_residual=rms)


def envelope(times, values, window: int):
    """Centered sliding-window maxima; output length n - window + 1."""
    times = np.asarray(times, dtype=float)
    values = np.asarray(values, dtype=float)
    if window < 1 or window % 2 == 0:
        raise ValueError("window must be a positive odd sample count")
    if window > values.size:
        raise WindowTooLarge(f"window {window} > series length {values.size}")
    if window == 1:
        return times.copy(), values.copy()
    peaks = np.lib.stride_tricks.sliding_window_view(values, window).max(-1)
    half = (window - 1) // 2
    return times[half:times.size - half], peaks


def default_dt(params: ModelParams) -> float:
    """Step keeping the first-order dissipator error at the 1e-3 scale.

    Damped runs get a smaller step: the Euler dissipator lets tiny
    eigenvalues dip below zero in proportion to the step, and the dip
    must stay well inside the positivity guard of the evolver.
    """
    dt = 1e-3 / params.max_scale()
    max_rate = max(params.gamma_up, params.gamma_down, params.gamma_phn,
                   params.influx_up, params.influx_down, params.influx_phn)
    if max_rate > 0:
        dt = min(dt, 2e-5 / max_rate)
    return dt


def run_discord_series(params: ModelParams, sim: SimConfig,
                       space: Optional[StateSpace] = None,
                       gating: Optional[GatingPolicy] = None,
                       search: Optional[SearchConfig] = None,
                       discord_stride: int = 1):
    """Evolve the standard initial state and compute discord on snapshots.

    Returns (trajectory, discord points).  The final snapshot is always
    included even when discord_stride skips over it.
    """
    if space is None:
        space = table_space()
    h = build_hamiltonian(params, space, gating)
    channels = build_jump_channels(params, space)
    rho0 = initial_state(space)
    traj = evolve(rho0, h, channels, sim, hbar=params.hbar)
    traj.params = params
    picks = list(range(0, len(traj), discord_stride))
    if picks[-1] != len(traj) - 1:
        picks.append(len(traj) - 1)
    points = [discord(traj.density(i), search, t=float(traj.times[i]))
              for i in picks]
    return traj, points


@dataclass
class PeriodLawResult:
    samples: list           # (g_omega / g, fitted period) pairs
    constant_c: float       # seconds, in the model T = c / (g_omega / g)
    fit_residual: float
    fits: list
    used_envelope: bool


# Search preset for the closed-system sweeps.  A closed run keeps the
# joint state pure, where every rank-1 product measurement leaves B
# pure and the conditional entropy is exactly zero; the grid therefore
# only needs to exist, not to resolve anything.
SWEEP_SEARCH = SearchConfig(theta_points=9, zero_phases=True, refine=False)


def period_law(g_omega_values, zeta: float, base_params: ModelParams,
               sim_cfg: Optional[SimConfig] = None,
               search: Optional[SearchConfig] = None,
               gating: Optional[GatingPolicy] = None,
               on_point: Optional[Callable] = None,
               periods_factor: float = 1.45) -> PeriodLawResult:
    """Fit T = c / (g_omega / g) over a closed-system coupling sweep.

    Each sweep point evolves the closed model, computes the discord
    series, and fits the slow oscillation period: directly for zeta=0,
    through the fast-carrier envelope otherwise.  With sim_cfg=None the
    horizon scales with the expected period of each point.
    """
    values = sorted(float(x) for x in g_omega_values)
    if not values or min(values) <= 0 or max(values) > 1:
        raise ValueError("coupling values must lie in (0, 1] in units of g")
    g_ref = base_params.g_up
    if search is None:
        search = SWEEP_SEARCH
    use_envelope = zeta > 0

    samples = []
    fits = []
    for x in values:
        params = replace(base_params, zeta=zeta, g_bond=x * g_ref,
                         gamma_up=0.0, gamma_down=0.0, gamma_phn=0.0,
                         influx_up=0.0, influx_down=0.0, influx_phn=0.0)
        if sim_cfg is None:
            dt = default_dt(params)
            t_end = periods_factor * 2 * np.pi / (x * g_ref)
            # resolve the fast carrier (scale ~2 max coupling) in the
            # recorded series so the envelope can track it
            spacing = np.pi / (8 * params.max_scale())
            stride = max(1, int(round(spacing / dt)))
            sim = SimConfig(dt=dt, t_end=t_end, record_stride=stride)
        else:
            sim = sim_cfg
        traj, points = run_discord_series(params, sim, gating=gating,
                                          search=search)
        times = np.array([p.t for p in points])
        series = np.array([p.discord for p in points])
        if use_envelope:
            carrier = 2 * np.pi / g_ref
            spacing = float(np.median(np.diff(times)))
            window = max(1, int(round(carrier / spacing)))
            if window % 2 == 0:
                window += 1
            times_fit, series_fit = envelope(times, series, window)
        else:
            times_fit, series_fit = times, series
        fit = fit_sinusoid(times_fit, series_fit)
        if on_point is not None:
            on_point(x=x, params=params, trajectory=traj, points=points,
                     fit=fit)
        samples.append((x, fit.period))
        fits.append(fit)

    xs = np.array([x for x, _ in samples])
    periods = np.array([p for _, p in samples])
    constant = float((periods / xs).sum() / (1.0 / xs**2).sum())
    residual = float(np.sqrt(np.mean((periods - constant / xs) ** 2)))
    return PeriodLawResult(samples=samples, constant_c=constant,
                           fit_residual=residual, fits=fits,
                           used_envelope=use_envelope)
