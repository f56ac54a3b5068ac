"""Payload encodings for bus messages and archive objects.

Windows travel as headed CSV text (timestamp plus one column per variable,
full float precision); results and model tokens travel as key-sorted JSON.
Model artifacts use the binary container from :mod:`hybridstream.artifact`.
"""

from __future__ import annotations

import csv
import io
import json

import numpy as np

from ..series import Series, TimeWindow
from .store import SignedToken

RESULT_SCHEMA = 1


def window_to_bytes(window: TimeWindow) -> bytes:
    buf = io.StringIO()
    writer = csv.writer(buf)
    writer.writerow(["timestamp", *window.records.variables])
    for i in range(len(window.records)):
        writer.writerow(
            [int(window.records.timestamps[i]), *(repr(float(v)) for v in window.records.values[i])]
        )
    return buf.getvalue().encode("utf-8")


def window_from_bytes(data: bytes, meta: dict) -> TimeWindow:
    text = data.decode("utf-8")
    reader = csv.reader(io.StringIO(text))
    header = next(reader)
    variables = tuple(header[1:])
    timestamps, rows = [], []
    for row in reader:
        if not row:
            continue
        timestamps.append(int(row[0]))
        rows.append([float(v) for v in row[1:]])
    records = Series(
        timestamps=np.array(timestamps, dtype=np.int64),
        values=np.array(rows, dtype=np.float64),
        variables=variables,
        target_index=meta.get("target_index", -1),
        source="stream",
    )
    return TimeWindow(
        index=meta["window"],
        records=records,
        open_tick=meta["open_tick"],
        close_tick=meta["close_tick"],
    )


def result_to_bytes(
    window_index: int,
    phase: str,
    predictions: np.ndarray,
    model_version: int | None = None,
    weights: dict | None = None,
) -> bytes:
    doc = {
        "schema": RESULT_SCHEMA,
        "kind": "inference_result",
        "window": window_index,
        "phase": phase,
        "predictions": [float(p) for p in predictions],
        "model_version": model_version,
        "weights": weights,
    }
    return json.dumps(doc, sort_keys=True).encode("utf-8")


def result_from_bytes(data: bytes) -> dict:
    doc = json.loads(data.decode("utf-8"))
    if doc.get("kind") != "inference_result":
        raise ValueError("not an inference result payload")
    doc["predictions"] = np.asarray(doc["predictions"], dtype=np.float64)
    return doc


def token_to_bytes(token: SignedToken, version: int, trained_on_window: int | None) -> bytes:
    doc = {
        "kind": "model_token",
        "key": token.key,
        "nonce": token.nonce,
        "expires_at": token.expires_at,
        "single_use": token.single_use,
        "version": version,
        "trained_on_window": trained_on_window,
    }
    return json.dumps(doc, sort_keys=True).encode("utf-8")


def token_from_bytes(data: bytes) -> tuple[SignedToken, dict]:
    doc = json.loads(data.decode("utf-8"))
    if doc.get("kind") != "model_token":
        raise ValueError("not a model token payload")
    token = SignedToken(
        key=doc["key"],
        expires_at=float(doc["expires_at"]),
        nonce=doc["nonce"],
        single_use=bool(doc["single_use"]),
    )
    return token, doc
