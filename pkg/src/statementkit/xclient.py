"""Client for external scorer workers.

Wire protocol v1: one JSON object per UTF-8 line, one response per request.

    request:  {"id": 3, "op": "score", "model_id": "m1", "texts": ["..."]}
    response: {"id": 3, "result": {"scores": [0.93]}}
          or  {"id": 3, "error": {"class": "BackendFailure", "message": "..."}}

Ops: hello, train, continue_train, score, save, load, shutdown. The client
keeps a single request in flight. Endpoints are either a command line to
spawn (stdio transport) or tcp://host:port.

Hyperparameters ride in the train payload; the worker fills in its own
defaults for anything omitted, so the native ScorerConfig never leaks into
the wire format beyond the seed.
"""

from __future__ import annotations

import json
import shlex
import socket
import subprocess
from typing import Sequence

from .errors import BackendFailure, ProtocolError, UnsupportedVersion

PROTOCOL_VERSION = 1


class WorkerClient:
    """Owns one worker connection and the request id counter."""

    def __init__(self, endpoint: str):
        self.endpoint = endpoint
        self._next_id = 0
        self._proc = None
        self._sock = None
        if endpoint.startswith("tcp://"):
            host, _, port = endpoint[len("tcp://"):].partition(":")
            if not port.isdigit():
                raise ProtocolError(f"bad tcp endpoint {endpoint!r}")
            self._sock = socket.create_connection((host, int(port)))
            stream = self._sock.makefile("rw", encoding="utf-8", newline="\n")
            self._writer = self._reader = stream
        else:
            self._proc = subprocess.Popen(
                shlex.split(endpoint), stdin=subprocess.PIPE, stdout=subprocess.PIPE,
                text=True, encoding="utf-8")
            self._writer = self._proc.stdin
            self._reader = self._proc.stdout
        self.backend_name = self._handshake()

    def _handshake(self) -> str:
        result = self.request("hello", version=PROTOCOL_VERSION)
        version = result.get("version")
        if version != PROTOCOL_VERSION:
            self.close()
            raise UnsupportedVersion(
                f"worker speaks protocol {version!r}, client needs {PROTOCOL_VERSION}")
        return str(result.get("backend", "external"))

    def request(self, op: str, **payload) -> dict:
        rid = self._next_id
        self._next_id += 1
        line = json.dumps({"id": rid, "op": op} | payload, ensure_ascii=False)
        try:
            self._writer.write(line + "\n")
            self._writer.flush()
            raw = self._reader.readline()
        except (BrokenPipeError, OSError) as exc:
            raise ProtocolError(f"worker connection broke during {op}: {exc}") from exc
        if not raw:
            raise ProtocolError(f"worker closed the stream during {op}")
        try:
            message = json.loads(raw)
        except json.JSONDecodeError as exc:
            raise ProtocolError(f"worker sent a non-JSON line: {raw[:120]!r}") from exc
        if message.get("id") != rid:
            raise ProtocolError(f"response id {message.get('id')!r} does not match request {rid}")
        has_result = "result" in message
        has_error = "error" in message
        if has_result == has_error:
            raise ProtocolError("response must carry exactly one of result/error")
        if has_error:
            err = message["error"] or {}
            raise BackendFailure(err.get("class", "BackendFailure"), err.get("message", ""))
        return message["result"]

    def close(self) -> None:
        try:
            if self._proc and self._proc.poll() is None:
                try:
                    self.request("shutdown")
                except (ProtocolError, BackendFailure):
                    pass
                self._proc.stdin.close()
                self._proc.wait(timeout=5)
            if self._sock:
                self._sock.close()
        except (OSError, subprocess.TimeoutExpired):
            if self._proc:
                self._proc.kill()
        finally:
            self._proc = None
            self._sock = None

    def __enter__(self):
        return self

    def __exit__(self, *exc):
        self.close()


class ModelRef:
    """Handle to a model living inside a worker."""

    def __init__(self, client: WorkerClient, model_id: str, epoch_losses=()):
        self.client = client
        self.model_id = model_id
        self.epoch_losses = tuple(epoch_losses)

    def score_texts(self, texts: Sequence[str]) -> list[float]:
        result = self.client.request("score", model_id=self.model_id, texts=list(texts))
        scores = result.get("scores")
        if not isinstance(scores, list) or len(scores) != len(texts):
            raise ProtocolError(
                f"score returned {len(scores) if isinstance(scores, list) else 'no'} "
                f"values for {len(texts)} texts")
        return [float(s) for s in scores]


def _statement_records(data) -> list[dict]:
    return [{"text": s.text, "truth": bool(s.truth)} for s in data]


class ExternalBackend:
    """Backend adapter: same surface as NativeBackend, work done by a worker."""

    name = "external"

    def __init__(self, endpoint: str, hyperparameters: dict | None = None):
        if not endpoint:
            raise ProtocolError("external backend needs an endpoint")
        self.client = WorkerClient(endpoint)
        self.hyperparameters = dict(hyperparameters or {})
        self.name = f"external:{self.client.backend_name}"

    def train(self, scorer_config, data) -> ModelRef:
        result = self.client.request(
            "train", statements=_statement_records(data),
            hyperparameters=self.hyperparameters, seed=scorer_config.seed)
        return ModelRef(self.client, result["model_id"], result.get("epoch_losses", ()))

    def continue_train(self, model: ModelRef, data, epochs: int, seed: int) -> ModelRef:
        result = self.client.request(
            "continue_train", model_id=model.model_id,
            statements=_statement_records(data), epochs=epochs, seed=seed)
        return ModelRef(self.client, result["model_id"], result.get("epoch_losses", ()))

    def model_bytes(self, model: ModelRef) -> bytes:
        import tempfile, os
        fd, tmp = tempfile.mkstemp(prefix="stmk-xmodel-")
        os.close(fd)
        try:
            self.client.request("save", model_id=model.model_id, path=tmp)
            with open(tmp, "rb") as fh:
                return fh.read()
        finally:
            os.unlink(tmp)

    def load_model(self, path) -> ModelRef:
        result = self.client.request("load", path=str(path))
        return ModelRef(self.client, result["model_id"])

    def close(self) -> None:
        self.client.close()
