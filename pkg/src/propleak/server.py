"""Serve a trained model over TCP and query it from the attacker's side.

Wire format: UTF-8 lines terminated by ``\\n``, each one flat JSON object.

    request   {"id":1,"features":[0.0,1.0,0.5]}
              {"id":2,"node_ids":[17]}
    response  {"id":1,"posterior":[0.2,0.8]}
    error     {"id":1,"error":"width mismatch"}

Numbers go out with 17 significant digits, so a posterior read back
from the wire equals the server-side float exactly.  A ``node_ids``
request naming several nodes gets their posteriors concatenated in
request order.
"""

from __future__ import annotations

import json
import logging
import socket
import socketserver
import threading
import time
from dataclasses import dataclass, replace
from typing import Sequence

import numpy as np

from . import models as M

log = logging.getLogger(__name__)

DEFAULT_TIMEOUT = 10.0
WINDOW = 64  # requests in flight per round trip


class ProtocolError(RuntimeError):
    pass


def parse_endpoint(endpoint) -> tuple[str, int]:
    if isinstance(endpoint, tuple):
        host, port = endpoint
        return str(host), int(port)
    host, sep, port = str(endpoint).rpartition(":")
    if not sep or not host or not port.isdigit():
        raise ValueError(f"endpoint must look like host:port, got {endpoint!r}")
    return host, int(port)


def _num(x: float) -> str:
    return format(float(x), ".17g")


def _error(req_id, message: str) -> str:
    return json.dumps({"id": req_id, "error": message}, separators=(",", ":"))


def _posterior(req_id: int, values: np.ndarray) -> str:
    return '{"id":%d,"posterior":[%s]}' % (req_id, ",".join(_num(v) for v in values))


def answer(model: M.TrainedModel, line: str, seen: set | None = None) -> str:
    """Response line (without newline) for one request line."""
    try:
        req = json.loads(line)
    except ValueError:
        return _error(None, "malformed request: not JSON")
    if not isinstance(req, dict):
        return _error(None, "malformed request: not an object")
    req_id = req.get("id")
    if isinstance(req_id, bool) or not isinstance(req_id, int):
        return _error(None, "malformed request: id must be an integer")
    if seen is not None:
        if req_id in seen:
            return _error(req_id, f"duplicate id {req_id}")
        seen.add(req_id)
    has_features, has_nodes = "features" in req, "node_ids" in req
    if has_features == has_nodes:
        return _error(req_id, "request needs exactly one of features or node_ids")
    extra = set(req) - {"id", "features", "node_ids"}
    if extra:
        return _error(req_id, f"unknown fields {sorted(extra)}")
    try:
        if has_features:
            if model.kind != "tabular":
                return _error(req_id, "this model takes node_ids")
            row = req["features"]
            if not isinstance(row, list) or not all(isinstance(v, (int, float)) and not isinstance(v, bool) for v in row):
                return _error(req_id, "features must be a list of numbers")
            if len(row) != model.input_width:
                return _error(req_id, "width mismatch")
            x = np.asarray(row, dtype=np.float64)
            if not np.all(np.isfinite(x)):
                return _error(req_id, "features must be finite")
            post = M.predict_proba(model, x[None, :])[0]
        else:
            if model.kind != "graph":
                return _error(req_id, "this model takes features")
            ids = req["node_ids"]
            if not isinstance(ids, list) or not ids or not all(isinstance(v, int) and not isinstance(v, bool) for v in ids):
                return _error(req_id, "node_ids must be a nonempty list of integers")
            if min(ids) < 0 or max(ids) >= model.graph.n_nodes:
                return _error(req_id, "node id out of range")
            post = M.predict_proba(model, np.asarray(ids, dtype=np.int64)).ravel()
    except Exception as exc:  # the connection must survive any single bad request
        log.exception("request %s failed", req_id)
        return _error(req_id, f"internal error: {exc}")
    return _posterior(req_id, post)


class _Handler(socketserver.StreamRequestHandler):
    def handle(self):
        if self.server.idle_timeout is not None:
            self.connection.settimeout(self.server.idle_timeout)
        seen: set = set()
        while True:
            try:
                raw = self.rfile.readline()
            except (socket.timeout, ConnectionError):
                return
            if not raw:
                return
            try:
                line = raw.decode("utf-8").strip()
            except UnicodeDecodeError:
                reply = _error(None, "malformed request: not UTF-8")
            else:
                if not line:
                    continue
                reply = answer(self.server.model, line, seen)
            try:
                self.wfile.write(reply.encode("utf-8") + b"\n")
                self.wfile.flush()
            except (socket.timeout, ConnectionError):
                return


class _Server(socketserver.ThreadingTCPServer):
    daemon_threads = True
    allow_reuse_address = True

    def __init__(self, address, model: M.TrainedModel, idle_timeout: float | None):
        self.model = model
        self.idle_timeout = idle_timeout
        super().__init__(address, _Handler)


@dataclass
class ServerHandle:
    """A running server; ``endpoint`` carries the actually bound port."""

    endpoint: tuple[str, int]
    _server: _Server
    _thread: threading.Thread

    @property
    def address(self) -> str:
        return f"{self.endpoint[0]}:{self.endpoint[1]}"

    def close(self) -> None:
        self._server.shutdown()
        self._server.server_close()
        self._thread.join()

    def wait(self) -> None:
        self._thread.join()

    def __enter__(self):
        return self

    def __exit__(self, *exc):
        self.close()


def serve(model: M.TrainedModel, endpoint="127.0.0.1:0", idle_timeout: float | None = None) -> ServerHandle:
    """Start answering queries for ``model`` on a background thread.

    Port 0 binds an ephemeral port; read it back from ``handle.endpoint``.
    ``idle_timeout`` (seconds) closes connections that stay silent.
    """
    host, port = parse_endpoint(endpoint)
    frozen = {}
    for name, arr in model.params.items():
        frozen[name] = arr.copy()
        frozen[name].setflags(write=False)
    model = replace(model, params=frozen)
    server = _Server((host, port), model, idle_timeout)
    thread = threading.Thread(target=server.serve_forever, name=f"propleak-serve-{port}", daemon=True)
    thread.start()
    bound = server.server_address
    log.info("serving %s model on %s:%s", model.arch, bound[0], bound[1])
    return ServerHandle((bound[0], bound[1]), server, thread)


def _request_line(req_id: int, payload) -> bytes:
    arr = np.asarray(payload)
    if arr.ndim == 0 and np.issubdtype(arr.dtype, np.integer):
        return b'{"id":%d,"node_ids":[%d]}\n' % (req_id, int(arr))
    if arr.ndim == 1 and np.issubdtype(arr.dtype, np.floating):
        if not np.all(np.isfinite(arr)):
            raise ValueError("features must be finite")
        return ('{"id":%d,"features":[%s]}\n' % (req_id, ",".join(_num(v) for v in arr))).encode("utf-8")
    if arr.ndim == 1 and np.issubdtype(arr.dtype, np.integer):
        return ('{"id":%d,"node_ids":[%s]}\n' % (req_id, ",".join(str(int(v)) for v in arr))).encode("utf-8")
    raise ValueError(f"cannot send payload of shape {arr.shape} and dtype {arr.dtype}")


def remote_query(endpoint, batch, timeout: float = DEFAULT_TIMEOUT) -> np.ndarray:
    """Posterior matrix for ``batch`` from a remote server.

    ``batch`` is a float matrix of encoded rows or an integer vector of
    node ids, the same inputs ``predict_proba`` takes locally.  Either the
    whole matrix comes back or an exception is raised; ``timeout`` bounds
    the batch as a whole.
    """
    arr = np.asarray(batch)
    if arr.size == 0:
        return np.empty((0, 0))
    if np.issubdtype(arr.dtype, np.integer) and arr.ndim == 1:
        payloads: Sequence = list(arr)
    elif arr.ndim == 2:
        payloads = list(arr.astype(np.float64))
    else:
        raise ValueError(f"batch must be a 2-D feature matrix or a vector of node ids, got shape {arr.shape}")

    deadline = time.monotonic() + timeout
    host, port = parse_endpoint(endpoint)
    rows: list[list[float]] = []
    with socket.create_connection((host, port), timeout=timeout) as sock:
        reader = sock.makefile("rb")
        for start in range(0, len(payloads), WINDOW):
            chunk = range(start, min(start + WINDOW, len(payloads)))
            sock.settimeout(max(deadline - time.monotonic(), 1e-3))
            sock.sendall(b"".join(_request_line(i, payloads[i]) for i in chunk))
            for i in chunk:
                remaining = deadline - time.monotonic()
                if remaining <= 0:
                    raise TimeoutError(f"remote query exceeded {timeout} s")
                sock.settimeout(remaining)
                try:
                    raw = reader.readline()
                except socket.timeout as exc:
                    raise TimeoutError(f"remote query exceeded {timeout} s") from exc
                if not raw:
                    raise ConnectionError("server closed the connection mid-batch")
                resp = json.loads(raw)
                if resp.get("id") != i:
                    raise ProtocolError(f"expected response id {i}, got {resp.get('id')!r}")
                if "error" in resp:
                    raise ProtocolError(f"request {i} rejected: {resp['error']}")
                rows.append(resp["posterior"])
    widths = {len(r) for r in rows}
    if len(widths) != 1:
        raise ProtocolError(f"posteriors of differing lengths {sorted(widths)}")
    out = np.asarray(rows, dtype=np.float64)
    if not np.all(np.abs(out.sum(axis=1) - 1.0) <= 1e-6):
        raise ProtocolError("posterior does not sum to one")
    return out


def remote_query_fn(endpoint, timeout: float = DEFAULT_TIMEOUT):
    """Query callable for ``build_attack_vector`` backed by a server."""
    return lambda inputs: remote_query(endpoint, inputs, timeout)
