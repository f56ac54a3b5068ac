"""Simulated object store with one-time signed download tokens.

The store is a flat key/bytes mapping (optionally mirrored to a directory
tree keyed by object key). Signed tokens grant exactly one fetch before
their expiry; consumption is atomic, so no schedule of retries or
interleavings can redeem a token twice.
"""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path
from threading import Lock
from typing import Callable


class StoreError(RuntimeError):
    pass


class MissingObjectError(StoreError):
    pass


class TokenConsumedError(StoreError):
    pass


class TokenExpiredError(StoreError):
    pass


@dataclass(frozen=True)
class SignedToken:
    key: str
    expires_at: float
    nonce: str
    single_use: bool = True


class ObjectStore:
    def __init__(
        self,
        node_id: str = "cloud-0",
        clock: Callable[[], float] | None = None,
        backing_dir: str | Path | None = None,
    ):
        self.node_id = node_id
        self._clock = clock or (lambda: 0.0)
        self._objects: dict[str, bytes] = {}
        self._tokens: dict[str, dict] = {}
        self._nonce_counter = 0
        self._lock = Lock()
        self._backing = Path(backing_dir) if backing_dir is not None else None

    def put(self, key: str, data: bytes) -> None:
        """Idempotent per key: re-putting overwrites."""
        if not key:
            raise ValueError("object key must be non-empty")
        self._objects[key] = bytes(data)
        if self._backing is not None:
            path = self._backing / key
            path.parent.mkdir(parents=True, exist_ok=True)
            path.write_bytes(data)

    def get(self, key: str) -> bytes:
        if key not in self._objects:
            if self._backing is not None and (self._backing / key).exists():
                return (self._backing / key).read_bytes()
            raise MissingObjectError(f"no object under key {key!r}")
        return self._objects[key]

    def exists(self, key: str) -> bool:
        return key in self._objects

    def keys(self, prefix: str = "") -> list[str]:
        return sorted(k for k in self._objects if k.startswith(prefix))

    def presign(self, key: str, ttl_s: float) -> SignedToken:
        """Issue a one-time token valid for ``ttl_s`` simulated seconds."""
        if ttl_s <= 0:
            raise ValueError("ttl must be positive")
        with self._lock:
            self._nonce_counter += 1
            nonce = f"tok-{self._nonce_counter:012d}"
            token = SignedToken(key=key, expires_at=self._clock() + ttl_s, nonce=nonce)
            self._tokens[nonce] = {"token": token, "consumed": False}
        return token

    def fetch_with_token(self, token: SignedToken) -> bytes:
        """Redeem a token: succeeds at most once, never after expiry."""
        with self._lock:
            state = self._tokens.get(token.nonce)
            if state is None:
                raise StoreError(f"unknown token {token.nonce!r}")
            if self._clock() > state["token"].expires_at:
                raise TokenExpiredError(f"token {token.nonce} expired")
            if state["consumed"]:
                raise TokenConsumedError(f"token {token.nonce} already used")
            data = self.get(state["token"].key)  # raises MissingObjectError first
            state["consumed"] = True
        return data
