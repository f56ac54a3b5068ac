"""Deployed pipeline session over the simulated fabric.

One :class:`DeployedSession` runs the whole stream: one-time batch training,
then per window the training phase (speed training, artifact archiving,
token reply, model sync) and the inference phase (batch, speed, hybrid)
proceed concurrently under the discrete-event clock. Inference never blocks
on training; the speed actor reads whatever artifact has arrived in the
model slot, however stale.

The same machinery serves accuracy runs (single zero-cost local node) and
latency runs (edge/cloud topologies with calibrated costs).
"""

from __future__ import annotations

import logging
from dataclasses import dataclass

import numpy as np

from .. import lstm, pipeline
from ..artifact import deserialize
from ..series import Series, TimeWindow, fit_scaler, make_supervised, transform
from . import codecs
from .bus import Message, TopicBus
from .clock import LatencyLedger, Simulator
from .handlers import DataArchivingHandler, PredictionArchivingHandler, SpeedTrainingHandler
from .store import ObjectStore, StoreError
from .topology import CostModel, DeploymentPlan, Topology, load_topology_config, local_plan, place

logger = logging.getLogger(__name__)

WINDOW_TOPIC = "stream/window"
MODEL_TOPIC = "model/speed"
RESULTS_TOPIC = "results/inference"
ARCHIVE_TOPIC = "archive/data"


@dataclass
class SessionReport:
    config: pipeline.SessionConfig
    results: list[pipeline.WindowResult]
    ledger: LatencyLedger
    scaler: object
    windows: list[TimeWindow]
    plan: DeploymentPlan
    store: ObjectStore
    bus: TopicBus | None = None

    @property
    def n_windows(self) -> int:
        return len(self.results)


@dataclass
class _WindowState:
    truth: np.ndarray
    inputs: np.ndarray
    batch_done: bool = False
    speed_done: bool = False
    window_arrived: bool = False
    hybrid_started: bool = False
    batch_preds: np.ndarray | None = None
    speed_preds: np.ndarray | None = None
    speed_version: int = 0
    speed_staleness: int = -1


class DeployedSession:
    def __init__(
        self,
        cfg: pipeline.SessionConfig,
        topology: str | Topology = "local",
        cost_model: CostModel | None = None,
        preset: str | None = None,
        plan: DeploymentPlan | None = None,
        pace: float | None = None,
        store_dir=None,
    ):
        self.cfg = cfg
        if isinstance(topology, (str, dict)):
            self.topology, loaded_costs = load_topology_config(topology)
            self.cost_model = cost_model or loaded_costs
        else:
            self.topology = topology
            if cost_model is None:
                raise ValueError("cost_model is required with an explicit Topology")
            self.cost_model = cost_model

        if plan is not None:
            self.plan = plan
        elif preset is not None:
            self.plan = place(preset, self.topology, self.cost_model)
        elif len(self.topology.nodes) == 1:
            self.plan = local_plan(next(iter(self.topology.nodes)))
        else:
            self.plan = place("edge_cloud", self.topology, self.cost_model)

        inference_nodes = {self.plan.node_of(m) for m in ("batch_inference", "speed_inference", "hybrid_inference")}
        if len(inference_nodes) != 1:
            raise ValueError("batch, speed and hybrid inference must be co-located")
        self.pace = pace
        self.store_dir = store_dir

    def run(self, historical: Series, stream: Series) -> SessionReport:
        cfg = self.cfg
        scaler = fit_scaler(historical)
        hist_s = transform(scaler, historical)
        stream_s = transform(scaler, stream)

        batch_params = lstm.train(
            lstm.init_params(cfg.network), make_supervised(hist_s, cfg.lag), cfg.batch_train
        )

        windows = list(pipeline.inject(stream_s, cfg.injection))
        if cfg.max_windows is not None:
            windows = windows[: cfg.max_windows]
        sim = Simulator(pace=self.pace)
        ledger = LatencyLedger()
        bus = TopicBus(sim, self.topology, ledger)
        store_node = self.topology.store_node or self.plan.node_of("data_archiving")
        store = ObjectStore(node_id=store_node, clock=lambda: sim.now, backing_dir=self.store_dir)

        if not windows:
            logger.warning("stream shorter than one window; session produced no results")
            return SessionReport(cfg, [], ledger, scaler, [], self.plan, store, bus)

        plan = self.plan
        nodes = self.topology.nodes
        slot = pipeline.SpeedModelSlot()
        engine = pipeline.WeightingEngine(cfg.policy)
        results: list[pipeline.WindowResult] = []

        # Per-window inference inputs with lag carry-over from the prior window.
        states: dict[int, _WindowState] = {}
        prev_tail: Series | None = None
        for w in windows:
            inputs, truth = pipeline.window_inference_inputs(w, cfg.lag, prev_tail)
            states[w.index] = _WindowState(truth=truth, inputs=inputs)
            prev_tail = w.records.slice(len(w.records) - cfg.lag, len(w.records))
        training_failures: set[int] = set()

        def charge(window: int, phase: str, op: str, node_id: str) -> float:
            seconds = self.cost_model.cost(op, nodes[node_id])
            if seconds > 0:
                ledger.add_computation(window, phase, seconds)
            return seconds

        # --- inference actors -------------------------------------------------
        batch_node = plan.node_of("batch_inference")
        speed_node = plan.node_of("speed_inference")
        hybrid_node = plan.node_of("hybrid_inference")

        def on_window_batch(message: Message) -> None:
            idx = message.meta["window"]
            state = states[idx]
            comp = charge(idx, "batch_inference", "batch_infer", batch_node)

            def finish() -> None:
                state.batch_preds = pipeline.batch_infer(state.inputs, batch_params)
                state.batch_done = True
                bus.publish(
                    batch_node,
                    Message(
                        topic=RESULTS_TOPIC,
                        payload=codecs.result_to_bytes(idx, "batch_inference", state.batch_preds),
                        published_at=sim.now,
                        meta={"window": idx, "phase": "batch_inference"},
                    ),
                )
                try_join(idx)

            sim.schedule(comp, finish)

        def on_window_speed(message: Message) -> None:
            idx = message.meta["window"]
            state = states[idx]
            artifact = slot.current  # latest artifact at invocation instant
            if artifact is None:
                state.speed_done = True
                try_join(idx)
                return
            preds = lstm.predict_batch(artifact.params, state.inputs)
            version = artifact.version
            state.speed_version = version
            state.speed_staleness = max(idx - 1 - artifact.trained_on_window, 0)
            comp = charge(idx, "speed_inference", "speed_infer", speed_node)

            def finish() -> None:
                state.speed_preds = preds
                state.speed_done = True
                bus.publish(
                    speed_node,
                    Message(
                        topic=RESULTS_TOPIC,
                        payload=codecs.result_to_bytes(idx, "speed_inference", preds, model_version=version),
                        published_at=sim.now,
                        meta={"window": idx, "phase": "speed_inference"},
                    ),
                )
                try_join(idx)

            sim.schedule(comp, finish)

        def on_window_hybrid(message: Message) -> None:
            # The serving layer consumes the window payload too: it holds the
            # ground truth used to refit the combination weights.
            idx = message.meta["window"]
            states[idx].window_arrived = True
            try_join(idx)

        def try_join(idx: int) -> None:
            state = states[idx]
            if state.hybrid_started or not (state.batch_done and state.speed_done and state.window_arrived):
                return
            state.hybrid_started = True
            weights, flags, fit_rmse = engine.weights_for(idx)
            engine.observe(idx, state.truth, state.batch_preds, state.speed_preds)
            comp = charge(idx, "hybrid_inference", "hybrid_combine", hybrid_node)
            if cfg.policy.mode == "dynamic" and weights.origin == "dynamic":
                comp += charge(idx, "hybrid_inference", "dwa_fit", hybrid_node)
            else:
                comp += charge(idx, "hybrid_inference", "static_fit", hybrid_node)

            def finish() -> None:
                hybrid, fell_back = pipeline.hybrid_infer(state.batch_preds, state.speed_preds, weights)
                flags.speed_model_missing = fell_back
                flags.training_failed = idx in training_failures
                results.append(
                    pipeline.WindowResult(
                        window_index=idx,
                        truth=state.truth,
                        batch_preds=state.batch_preds,
                        speed_preds=state.speed_preds,
                        hybrid_preds=hybrid,
                        weights=weights,
                        speed_version_used=state.speed_version,
                        speed_staleness=state.speed_staleness,
                        flags=flags,
                        fit_rmse=fit_rmse,
                    )
                )
                bus.publish(
                    hybrid_node,
                    Message(
                        topic=RESULTS_TOPIC,
                        payload=codecs.result_to_bytes(
                            idx,
                            "hybrid_inference",
                            hybrid,
                            model_version=state.speed_version,
                            weights={"speed": weights.speed, "batch": weights.batch, "origin": weights.origin},
                        ),
                        published_at=sim.now,
                        meta={"window": idx, "phase": "hybrid_inference"},
                    ),
                )

            sim.schedule(comp, finish)

        # --- data sync, training, archiving, model sync ----------------------
        data_sync_node = plan.node_of("data_sync")

        def on_window_data_sync(message: Message) -> None:
            bus.publish(
                data_sync_node,
                Message(
                    topic=ARCHIVE_TOPIC,
                    payload=message.payload,
                    published_at=sim.now,
                    meta=dict(message.meta),
                ),
            )

        def train_fn(window: TimeWindow) -> lstm.ModelParams:
            try:
                return pipeline.speed_train(window, cfg.lag, cfg.network, cfg.speed_train)
            except Exception:
                training_failures.add(window.index)
                raise

        trainer = SpeedTrainingHandler(
            sim=sim,
            bus=bus,
            store=store,
            topology=self.topology,
            ledger=ledger,
            cost_model=self.cost_model,
            node_id=plan.node_of("speed_training"),
            train_fn=train_fn,
        )
        data_archiver = DataArchivingHandler(store)
        prediction_archiver = PredictionArchivingHandler(store)

        sync_node = plan.node_of("model_sync")
        last_window = windows[-1].index

        def on_model_token(message: Message) -> None:
            token, doc = codecs.token_from_bytes(message.payload)
            try:
                data = store.fetch_with_token(token)
            except StoreError as exc:
                logger.warning("model sync failed for version %s: %s", doc["version"], exc)
                return
            fetch = self.topology.transfer_time(store.node_id, sync_node, len(data), bulk=True)
            trained_on = doc.get("trained_on_window")
            usable_from = (trained_on + 1) if trained_on is not None else message.meta.get("window", 0)
            # retrieval is part of the speed-inference process of the first
            # window that can use the model; clamp for the session's tail
            if fetch > 0:
                ledger.add_communication(min(usable_from, last_window), "speed_inference", fetch)
            sim.schedule(fetch, lambda d=data: slot.swap(deserialize(d)))

        bus.subscribe(batch_node, WINDOW_TOPIC, on_window_batch, phase="batch_inference")
        bus.subscribe(speed_node, WINDOW_TOPIC, on_window_speed, phase="speed_inference")
        bus.subscribe(hybrid_node, WINDOW_TOPIC, on_window_hybrid, phase="hybrid_inference")
        bus.subscribe(data_sync_node, WINDOW_TOPIC, on_window_data_sync, phase="data_sync")
        bus.subscribe(plan.node_of("speed_training"), ARCHIVE_TOPIC, trainer.on_window, phase="speed_training")
        bus.subscribe(plan.node_of("data_archiving"), ARCHIVE_TOPIC, data_archiver.on_window, phase="data_sync")
        bus.subscribe(plan.node_of("prediction_archiving"), RESULTS_TOPIC, prediction_archiver.on_result)
        bus.subscribe(sync_node, MODEL_TOPIC, on_model_token)

        injection_node = plan.node_of("data_injection")
        base_tick = windows[0].close_tick

        def publish_window(window: TimeWindow) -> None:
            bus.publish(
                injection_node,
                Message(
                    topic=WINDOW_TOPIC,
                    payload=codecs.window_to_bytes(window),
                    published_at=sim.now,
                    meta={
                        "kind": "window",
                        "window": window.index,
                        "open_tick": window.open_tick,
                        "close_tick": window.close_tick,
                        "target_index": window.records.target_index,
                    },
                ),
            )

        for window in windows:
            at = (window.close_tick - base_tick) / 1000.0
            sim.schedule_at(at, lambda w=window: publish_window(w))

        sim.run()
        results.sort(key=lambda r: r.window_index)
        return SessionReport(cfg, results, ledger, scaler, windows, plan, store, bus)
