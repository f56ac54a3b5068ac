"""Stream pipeline actors: window injection, the three inference layers,
per-window speed training and the causal weight-refresh engine.

The actors are placement-agnostic; :mod:`hybridstream.fabric.runtime` wires
them onto simulated nodes. Everything here is deterministic for a fixed
seed and safe to drive from a single-threaded event loop.
"""

from __future__ import annotations

from dataclasses import dataclass, replace
from threading import Lock
from typing import Iterable, Iterator

import numpy as np

from . import lstm, weighting
from .artifact import ModelArtifact
from .lstm import ModelParams, NetworkConfig, TrainConfig
from .series import Record, Series, TimeWindow, make_supervised


class StreamOrderError(ValueError):
    """A record arrived with a timestamp not after its predecessor."""


class BackpressureError(RuntimeError):
    """The injection buffer is full; the producer must wait."""


@dataclass(frozen=True)
class InjectionConfig:
    """Window close rule: by duration (seconds) or by record count, with a
    throttle minimum either way."""

    close_rule: str = "duration"  # "duration" | "count"
    duration_s: float = 30.0
    min_records: int = 200
    buffer_capacity: int = 2000

    def __post_init__(self) -> None:
        if self.close_rule not in ("duration", "count"):
            raise ValueError(f"unknown close_rule {self.close_rule!r}")
        if self.close_rule == "duration" and self.duration_s <= 0:
            raise ValueError("duration_s must be positive")
        if self.min_records < 1:
            raise ValueError("min_records must be >= 1")
        if self.buffer_capacity < self.min_records:
            raise ValueError("buffer_capacity must be >= min_records")


def inject(
    stream: Series | Iterable[Record],
    cfg: InjectionConfig,
    variables: tuple[str, ...] | None = None,
    target_index: int | None = None,
) -> Iterator[TimeWindow]:
    """Throttle a timestamp-ordered record stream into indexed TimeWindows.

    Records buffered past the stream end (an unclosed window) are dropped;
    windows are only emitted once their close rule is satisfied.
    """
    if isinstance(stream, Series):
        variables = stream.variables
        target_index = stream.target_index
        records = stream.iter_records()
    else:
        records = iter(stream)
        if variables is None:
            from .series import DEFAULT_VARIABLES

            variables = DEFAULT_VARIABLES
        if target_index is None:
            target_index = -1

    duration_ms = int(round(cfg.duration_s * 1000))
    buffer: list[Record] = []
    index = 0
    open_tick: int | None = None
    last_ts: int | None = None

    def close_window(close_tick: int) -> TimeWindow:
        nonlocal buffer, index, open_tick
        window_series = Series(
            timestamps=np.array([r.timestamp for r in buffer], dtype=np.int64),
            values=np.array([r.features for r in buffer], dtype=np.float64),
            variables=variables,
            target_index=target_index,
            source="stream",
        )
        window = TimeWindow(index=index, records=window_series, open_tick=open_tick, close_tick=close_tick)
        buffer = []
        index += 1
        open_tick = None
        return window

    for record in records:
        if last_ts is not None and record.timestamp <= last_ts:
            raise StreamOrderError(
                f"record at tick {record.timestamp} arrived after tick {last_ts}"
            )
        last_ts = record.timestamp
        if open_tick is None:
            open_tick = record.timestamp
        if cfg.close_rule == "duration" and record.timestamp >= open_tick + duration_ms and len(buffer) >= cfg.min_records:
            yield close_window(close_tick=record.timestamp)
            open_tick = record.timestamp
        buffer.append(record)
        if len(buffer) > cfg.buffer_capacity:
            raise BackpressureError(
                f"injection buffer exceeded capacity {cfg.buffer_capacity}"
            )
        if cfg.close_rule == "count" and len(buffer) == cfg.min_records:
            yield close_window(close_tick=record.timestamp)


class SpeedModelSlot:
    """Atomic holder of the newest speed-model artifact on the inference side.

    Readers see either the old or the new artifact, never a mix; the version
    never decreases.
    """

    def __init__(self) -> None:
        self._lock = Lock()
        self._artifact: ModelArtifact | None = None

    @property
    def current(self) -> ModelArtifact | None:
        with self._lock:
            return self._artifact

    @property
    def version(self) -> int:
        with self._lock:
            return self._artifact.version if self._artifact is not None else 0

    def swap(self, artifact: ModelArtifact) -> None:
        with self._lock:
            if self._artifact is not None and artifact.version < self._artifact.version:
                raise ValueError(
                    f"slot version must not decrease ({self._artifact.version} -> {artifact.version})"
                )
            self._artifact = artifact


@dataclass
class WindowFlags:
    first_window_fallback: bool = False
    speed_model_missing: bool = False
    solver_converged: bool = True
    training_failed: bool = False


@dataclass(frozen=True)
class WindowResult:
    """Everything one window produced: truth, three prediction vectors,
    the weights used and provenance flags."""

    window_index: int
    truth: np.ndarray
    batch_preds: np.ndarray
    speed_preds: np.ndarray | None
    hybrid_preds: np.ndarray
    weights: weighting.WeightVector
    speed_version_used: int  # 0 when no model was available
    speed_staleness: int  # windows behind the freshest possible model; -1 when none
    flags: WindowFlags
    fit_rmse: dict[str, float] | None = None  # fitting-window RMSEs (dynamic refits only)

    def __post_init__(self) -> None:
        n = self.truth.shape[0]
        if self.batch_preds.shape[0] != n or self.hybrid_preds.shape[0] != n:
            raise ValueError("prediction vectors must match truth length")
        if self.speed_preds is not None and self.speed_preds.shape[0] != n:
            raise ValueError("speed predictions must match truth length")


@dataclass(frozen=True)
class WeightPolicy:
    mode: str = "dynamic"  # "static" | "dynamic"
    static: tuple[float, float] = (0.5, 0.5)  # (speed, batch)

    def __post_init__(self) -> None:
        if self.mode not in ("static", "dynamic"):
            raise ValueError(f"unknown weighting mode {self.mode!r}")
        if self.mode == "static":
            weighting.static_weights(*self.static)  # validates the simplex

    def label(self) -> str:
        if self.mode == "dynamic":
            return "dynamic"
        return f"static:{self.static[0]:g}:{self.static[1]:g}"

    @classmethod
    def parse(cls, text: str) -> "WeightPolicy":
        if text == "dynamic":
            return cls(mode="dynamic")
        parts = text.split(":")
        if len(parts) == 3 and parts[0] == "static":
            try:
                return cls(mode="static", static=(float(parts[1]), float(parts[2])))
            except ValueError as exc:
                raise ValueError(f"bad static weights in {text!r}: {exc}") from None
        raise ValueError(f"weighting must be 'dynamic' or 'static:<ws>:<wb>', got {text!r}")


@dataclass(frozen=True)
class SessionConfig:
    lag: int = 5
    network: NetworkConfig = NetworkConfig()
    batch_train: TrainConfig = TrainConfig(epochs=10, batch_size=512, learning_rate=0.01)
    speed_train: TrainConfig = TrainConfig(epochs=20, batch_size=64, learning_rate=0.01)
    injection: InjectionConfig = InjectionConfig()
    policy: WeightPolicy = WeightPolicy()
    seed: int = 0
    max_windows: int | None = None  # cap on closed windows per session


FALLBACK_WEIGHTS = (0.0, 1.0)  # pure batch


def window_inference_inputs(window: TimeWindow, lag: int, prev_tail: Series | None) -> tuple[np.ndarray, np.ndarray]:
    """Inference inputs and truth for a window.

    Windows after the first prepend the last ``lag`` records of the prior
    window so every record is predictable; the session's first window loses
    its first ``lag`` records.
    """
    source = window.records if prev_tail is None else prev_tail.concat(window.records)
    sup = make_supervised(source, lag)
    return sup.inputs, sup.targets


def batch_infer(inputs: np.ndarray, batch_model: ModelParams) -> np.ndarray:
    """Pure: the pre-trained model is never mutated."""
    return lstm.predict_batch(batch_model, inputs)


def speed_infer(inputs: np.ndarray, slot: SpeedModelSlot) -> tuple[np.ndarray | None, int]:
    """Predict with the newest artifact available right now; ``(None, 0)``
    when the slot has never been filled."""
    artifact = slot.current
    if artifact is None:
        return None, 0
    return lstm.predict_batch(artifact.params, inputs), artifact.version


def speed_train(window: TimeWindow, lag: int, network: NetworkConfig, cfg: TrainConfig) -> ModelParams:
    """Train a fresh model on the window's own records (no carry-over)."""
    sup = make_supervised(window.records, lag=lag)
    params = lstm.init_params(network)
    return lstm.train(params, sup, cfg)


def hybrid_infer(
    batch_preds: np.ndarray,
    speed_preds: np.ndarray | None,
    weights: weighting.WeightVector,
) -> tuple[np.ndarray, bool]:
    """Convex combination; falls back to the batch predictions (flagged)
    when there is no speed model output."""
    if speed_preds is None:
        return batch_preds, True
    if speed_preds.shape != batch_preds.shape:
        raise ValueError("batch and speed predictions must have equal length")
    return weighting.combine(np.stack([speed_preds, batch_preds]), weights), False


class WeightingEngine:
    """Strictly causal weight refresh.

    Weights for window t come from window t-1's stored batch/speed
    predictions against its truth; no look-ahead is possible because
    observations are keyed by window index and only index t-1 is read.
    """

    def __init__(self, policy: WeightPolicy):
        self.policy = policy
        self._observed: dict[int, tuple[np.ndarray, np.ndarray, np.ndarray | None]] = {}

    def observe(self, window_index: int, truth: np.ndarray, batch_preds: np.ndarray, speed_preds: np.ndarray | None) -> None:
        self._observed[window_index] = (truth, batch_preds, speed_preds)

    def weights_for(self, window_index: int) -> tuple[weighting.WeightVector, WindowFlags, dict | None]:
        flags = WindowFlags()
        if self.policy.mode == "static":
            return weighting.static_weights(*self.policy.static), flags, None

        prev = self._observed.get(window_index - 1)
        if window_index == 0 or prev is None:
            if window_index > 0 and prev is None:
                raise RuntimeError(
                    f"window {window_index - 1} was not observed before refreshing weights "
                    f"for window {window_index}"
                )
            flags.first_window_fallback = True
            return (
                weighting.WeightVector(np.array(FALLBACK_WEIGHTS), origin="static", window_index=window_index),
                flags,
                None,
            )
        truth, batch_preds, speed_preds = prev
        if speed_preds is None:
            flags.first_window_fallback = True
            return (
                weighting.WeightVector(np.array(FALLBACK_WEIGHTS), origin="static", window_index=window_index),
                flags,
                None,
            )
        solution = weighting.fit_dynamic_weights(
            weighting.DwaInput(predictions=np.stack([speed_preds, batch_preds]), truth=truth),
            window_index=window_index,
        )
        flags.solver_converged = solution.converged
        fit_rmse = {
            "hybrid": solution.rmse,
            "speed": weighting.rmse(truth, speed_preds),
            "batch": weighting.rmse(truth, batch_preds),
        }
        return solution.weights, flags, fit_rmse


def refresh_weights(
    previous: WindowResult | None,
    policy: WeightPolicy,
    window_index: int,
) -> tuple[weighting.WeightVector, WindowFlags, dict | None]:
    """One-shot form of :class:`WeightingEngine` for a single refresh."""
    engine = WeightingEngine(policy)
    if previous is not None:
        engine.observe(previous.window_index, previous.truth, previous.batch_preds, previous.speed_preds)
    return engine.weights_for(window_index)


def replay_weighting(
    base_results: list[WindowResult],
    policy: WeightPolicy,
) -> list[WindowResult]:
    """Re-derive hybrid predictions for a different weighting policy from a
    session's stored batch/speed predictions, strictly causally.

    Valid because batch and speed predictions do not depend on the policy.
    """
    engine = WeightingEngine(policy)
    out: list[WindowResult] = []
    for result in sorted(base_results, key=lambda r: r.window_index):
        weights, flags, fit_rmse = engine.weights_for(result.window_index)
        engine.observe(result.window_index, result.truth, result.batch_preds, result.speed_preds)
        hybrid, fell_back = hybrid_infer(result.batch_preds, result.speed_preds, weights)
        flags.speed_model_missing = fell_back
        flags.training_failed = result.flags.training_failed
        out.append(
            replace(
                result,
                hybrid_preds=hybrid,
                weights=weights,
                flags=flags,
                fit_rmse=fit_rmse,
            )
        )
    return out


def run_session(cfg: SessionConfig, historical: Series, stream: Series, **kwargs):
    """Run the full pipeline over the simulated fabric (see
    :class:`hybridstream.fabric.runtime.DeployedSession`). With no topology
    argument the session runs on a single zero-cost local node, which is the
    fastest fully deterministic mode."""
    from .fabric.runtime import DeployedSession

    return DeployedSession(cfg, **kwargs).run(historical, stream)
