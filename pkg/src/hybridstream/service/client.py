"""Thin HTTP client for the service.

With no server URL the client routes requests through the FastAPI app
in-process (a synchronous ASGI test transport), so the CLI works standalone
while still exercising the exact HTTP surface a remote deployment exposes.
"""

from __future__ import annotations

import httpx


class ServiceError(RuntimeError):
    def __init__(self, status_code: int, error_kind: str, message: str):
        super().__init__(f"[{error_kind}] {message}")
        self.status_code = status_code
        self.error_kind = error_kind


class ServiceClient:
    def __init__(self, server: str | None = None, timeout: float = 7200.0):
        if server is None:
            import warnings

            with warnings.catch_warnings():
                # starlette's httpx2 migration notice; in-process transport is
                # fine on either client library
                warnings.simplefilter("ignore")
                from starlette.testclient import TestClient

            from .app import create_app

            self._client = TestClient(create_app(), raise_server_exceptions=False)
        else:
            self._client = httpx.Client(base_url=server, timeout=timeout)

    def close(self) -> None:
        self._client.close()

    def __enter__(self) -> "ServiceClient":
        return self

    def __exit__(self, *exc) -> None:
        self.close()

    def _check(self, response: httpx.Response) -> dict:
        if response.is_success:
            return response.json()
        try:
            detail = response.json().get("detail")
        except ValueError:
            detail = None
        if isinstance(detail, dict) and "error_kind" in detail:
            raise ServiceError(response.status_code, detail["error_kind"], detail.get("message", ""))
        if response.status_code == 422:
            raise ServiceError(422, "config", response.text)
        raise ServiceError(response.status_code, "runtime", response.text)

    def health(self) -> dict:
        return self._check(self._client.get("/health"))

    def fit_weights(self, speed, batch, truth) -> dict:
        return self._check(
            self._client.post("/weights/fit", json={"speed": list(speed), "batch": list(batch), "truth": list(truth)})
        )

    def boxplot(self, values) -> dict:
        return self._check(self._client.post("/stats/boxplot", json={"values": list(values)}))

    def submit_run(self, request: dict) -> dict:
        return self._check(self._client.post("/runs", json=request))

    def get_run(self, run_id: str) -> dict:
        return self._check(self._client.get(f"/runs/{run_id}"))

    def get_report(self, run_id: str) -> dict:
        return self._check(self._client.get(f"/runs/{run_id}/report"))
