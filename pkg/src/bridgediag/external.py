"""Plug-in models over a newline-delimited JSON subprocess protocol.

Request line:  ``{"id":<u64>,"thetas":[[<f64>,...],...]}\\n``
Response line: ``{"id":<u64>,"log_densities":[<f64 or "-inf">,...]}\\n``

The child must echo the request id and answer requests in order. One handle
is strictly single-threaded; parallel callers need one subprocess each.
"""

from __future__ import annotations

import json
import os
import select
import subprocess
import time

import numpy as np

from .errors import EvaluatorError
from .targets import TargetModel

DEFAULT_BATCH_TIMEOUT = 60.0


class ExternalEvaluator:
    """Owns one evaluator subprocess and speaks the wire protocol to it."""

    def __init__(self, command, *, timeout: float = DEFAULT_BATCH_TIMEOUT):
        self._proc = subprocess.Popen(
            command,
            stdin=subprocess.PIPE,
            stdout=subprocess.PIPE,
            bufsize=0,
        )
        self._timeout = timeout
        self._buffer = b""
        self._next_id = 0

    def close(self) -> None:
        if self._proc.poll() is None:
            try:
                self._proc.stdin.close()
            except OSError:
                pass
            try:
                self._proc.wait(timeout=5.0)
            except subprocess.TimeoutExpired:
                self._proc.kill()
                self._proc.wait()

    def __enter__(self) -> "ExternalEvaluator":
        return self

    def __exit__(self, *exc) -> None:
        self.close()

    def _read_line(self, deadline: float) -> bytes:
        fd = self._proc.stdout.fileno()
        while b"\n" not in self._buffer:
            remaining = deadline - time.monotonic()
            if remaining <= 0:
                raise EvaluatorError("evaluator timed out", self._buffer)
            ready, _, _ = select.select([fd], [], [], remaining)
            if not ready:
                continue
            chunk = os.read(fd, 65536)
            if not chunk:
                code = self._proc.poll()
                raise EvaluatorError(
                    f"evaluator process exited (returncode={code})", self._buffer
                )
            self._buffer += chunk
        line, self._buffer = self._buffer.split(b"\n", 1)
        return line

    def eval_batch(self, thetas) -> np.ndarray:
        """One log density per point, order preserving; "-inf" accepted."""
        pts = np.asarray(thetas, dtype=float)
        if pts.ndim != 2:
            raise EvaluatorError(f"thetas must be 2-d, got shape {pts.shape}")
        req_id = self._next_id
        self._next_id += 1
        request = json.dumps(
            {"id": req_id, "thetas": pts.tolist()}, allow_nan=False
        ).encode() + b"\n"
        if self._proc.poll() is not None:
            raise EvaluatorError(
                f"evaluator process exited (returncode={self._proc.returncode})", request
            )
        try:
            self._proc.stdin.write(request)
            self._proc.stdin.flush()
        except (BrokenPipeError, OSError):
            raise EvaluatorError("evaluator pipe closed", request) from None

        line = self._read_line(time.monotonic() + self._timeout)
        try:
            payload = json.loads(line)
        except json.JSONDecodeError:
            raise EvaluatorError("malformed response (not JSON)", line) from None
        if not isinstance(payload, dict) or "id" not in payload or "log_densities" not in payload:
            raise EvaluatorError("malformed response (missing id/log_densities)", line)
        if payload["id"] != req_id:
            raise EvaluatorError(
                f"response id {payload['id']} does not echo request id {req_id}", line
            )
        values = payload["log_densities"]
        if not isinstance(values, list) or len(values) != pts.shape[0]:
            raise EvaluatorError(
                f"expected {pts.shape[0]} log densities, got {values!r}", line
            )
        out = np.empty(pts.shape[0])
        for i, v in enumerate(values):
            if v == "-inf":
                out[i] = -np.inf
            elif isinstance(v, (int, float)) and not isinstance(v, bool):
                f = float(v)
                if np.isnan(f) or f == np.inf:
                    raise EvaluatorError(f"log density {i} is not finite-or--inf: {v!r}", line)
                out[i] = f
            else:
                raise EvaluatorError(f"log density {i} is not a number: {v!r}", line)
        return out


class ExternalModel(TargetModel):
    """A target whose density lives in an evaluator subprocess."""

    def __init__(self, dim: int, evaluator: ExternalEvaluator):
        self.dim = dim
        self._evaluator = evaluator

    def log_unnorm_batch(self, thetas) -> np.ndarray:
        return self._evaluator.eval_batch(self._check_batch(thetas))
