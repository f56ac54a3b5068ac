"""Synthetic telemetry generation and concept-drift transforms.

Two drift shapes are supported on top of any base series: a gradual drift
that adds a linear-in-time term ``alpha_i * t`` per variable, and an abrupt
drift that gates the same term through a piecewise-constant switching
process ``lambda(t)``, plus an invariant Gaussian noise term in both cases.
``t`` is the record index (0-based), not the raw timestamp tick.
"""

from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np

from .series import DEFAULT_VARIABLES, Series

DEFAULT_TICK_MS = 143  # ~7 records/second


@dataclass(frozen=True)
class BaseSignalConfig:
    """Stationary multivariate base signal: a sum of sinusoids plus white noise.

    Each variable shares the component periods but gets its own seeded phase
    and offset, mimicking a bank of correlated temperature sensors.
    """

    length: int
    n_variables: int = 5
    amplitudes: tuple[float, ...] = (1.0, 0.35)
    periods: tuple[float, ...] = (47.0, 13.0)
    noise_sigma: float = 0.1
    offset: float = 10.0
    tick_ms: int = DEFAULT_TICK_MS
    seed: int = 0

    def __post_init__(self) -> None:
        if self.length <= 0:
            raise ValueError("length must be positive")
        if len(self.amplitudes) != len(self.periods):
            raise ValueError("amplitudes and periods must pair up")
        if self.noise_sigma < 0:
            raise ValueError("noise_sigma must be >= 0")


@dataclass(frozen=True)
class DriftConfig:
    """Parameters of the drift transforms.

    ``alphas``: per-variable drift slope (broadcast if a single float).
    ``epsilon_sigma``: std-dev of the invariant i.i.d. Gaussian noise added
    to every variable.
    ``change_points``: number K of switching points of the abrupt process.
    ``lambda_values``: finite set the per-segment switch level is drawn from;
    each new segment draws a value different from the previous one (when the
    set has at least two elements), so K change points yield exactly K
    discontinuities of the drift term.
    """

    alphas: tuple[float, ...] | float = 0.0
    epsilon_sigma: float = 0.0
    change_points: int = 0
    lambda_values: tuple[float, ...] = (0.0, 1.0)
    seed: int = 0

    def __post_init__(self) -> None:
        if self.epsilon_sigma < 0:
            raise ValueError("epsilon_sigma must be >= 0")
        if self.change_points < 0:
            raise ValueError("change_points must be >= 0")
        if not self.lambda_values:
            raise ValueError("lambda_values must be non-empty")

    def alpha_vector(self, n_variables: int) -> np.ndarray:
        if isinstance(self.alphas, (int, float)):
            return np.full(n_variables, float(self.alphas))
        alphas = np.asarray(self.alphas, dtype=np.float64)
        if alphas.shape != (n_variables,):
            raise ValueError(f"expected {n_variables} alphas, got {alphas.shape}")
        return alphas

    @staticmethod
    def target_only(alpha: float, n_variables: int = 5, target_index: int = -1, **kwargs) -> "DriftConfig":
        """Preset that drifts only the target variable."""
        alphas = [0.0] * n_variables
        alphas[target_index] = alpha
        return DriftConfig(alphas=tuple(alphas), **kwargs)


def synth_base(cfg: BaseSignalConfig) -> Series:
    """Generate the stationary base series, deterministic per seed."""
    rng = np.random.default_rng(cfg.seed)
    t = np.arange(cfg.length, dtype=np.float64)
    values = np.empty((cfg.length, cfg.n_variables))
    for i in range(cfg.n_variables):
        var_offset = cfg.offset + rng.uniform(-0.25, 0.25)
        signal = np.full(cfg.length, var_offset)
        for amp, period in zip(cfg.amplitudes, cfg.periods):
            phase = rng.uniform(0.0, 2.0 * np.pi)
            signal = signal + amp * np.sin(2.0 * np.pi * t / period + phase)
        if cfg.noise_sigma > 0:
            signal = signal + rng.normal(0.0, cfg.noise_sigma, size=cfg.length)
        values[:, i] = signal
    timestamps = np.arange(cfg.length, dtype=np.int64) * cfg.tick_ms
    variables = (
        DEFAULT_VARIABLES
        if cfg.n_variables == len(DEFAULT_VARIABLES)
        else tuple(f"var{i}" for i in range(cfg.n_variables))
    )
    return Series(
        timestamps=timestamps, values=values, variables=variables, source="synthetic", seed=cfg.seed
    )


def gradual_drift(base: Series, cfg: DriftConfig) -> Series:
    """Add ``alpha_i * t`` plus invariant noise to every variable."""
    return _apply_drift(base, cfg, lam=np.ones(len(base)))


def abrupt_drift(base: Series, cfg: DriftConfig) -> Series:
    """Add ``alpha_i * t * lambda(t)`` plus invariant noise, with lambda a
    seeded piecewise-constant switching process."""
    return _apply_drift(base, cfg, lam=lambda_path(len(base), cfg))


def lambda_path(length: int, cfg: DriftConfig) -> np.ndarray:
    """The switching process: piecewise constant over ``change_points``
    uniformly placed interior points, deterministic per seed."""
    _, lam_rng = _split_rng(cfg.seed)
    lam = np.empty(length)
    if length == 0:
        return lam
    k = min(cfg.change_points, max(length - 1, 0))
    positions = np.sort(lam_rng.choice(np.arange(1, length), size=k, replace=False)) if k else np.array([], dtype=int)
    values = list(cfg.lambda_values)
    current = float(lam_rng.choice(values))
    start = 0
    for pos in positions:
        lam[start:pos] = current
        if len(values) > 1:
            others = [v for v in values if v != current]
            current = float(lam_rng.choice(others))
        start = int(pos)
    lam[start:] = current
    return lam


def _apply_drift(base: Series, cfg: DriftConfig, lam: np.ndarray) -> Series:
    alphas = cfg.alpha_vector(base.n_variables)
    t = np.arange(len(base), dtype=np.float64)
    drift_term = (t * lam)[:, None] * alphas[None, :]
    eps_rng, _ = _split_rng(cfg.seed)
    if cfg.epsilon_sigma > 0:
        noise = eps_rng.normal(0.0, cfg.epsilon_sigma, size=base.values.shape)
    else:
        noise = 0.0
    return replace(base, values=base.values + drift_term + noise)


def _split_rng(seed: int) -> tuple[np.random.Generator, np.random.Generator]:
    # Independent child streams so the noise draw is identical for the
    # gradual and abrupt transforms under a shared seed.
    root = np.random.SeedSequence(seed)
    eps_seq, lam_seq = root.spawn(2)
    return np.random.default_rng(eps_seq), np.random.default_rng(lam_seq)
