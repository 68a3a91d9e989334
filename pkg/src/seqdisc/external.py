"""Adapter exposing a subprocess as a ParametricModel.

Protocol (one JSON object per line over stdin/stdout):
  handshake  <- {"ready": true, "output_dim": E}
  request    -> {"x": [...], "theta": [...]}
  reply      <- {"f": [...]} or {"error": "msg"}
"""

from __future__ import annotations

import json
import selectors
import shlex
import subprocess

import numpy as np

from .exceptions import EvaluationFailure, ProtocolError
from .models import DesignSpace, ParameterSpace, ParametricModel


class ExternalModelProcess:
    """Owns one subprocess speaking the line-delimited protocol."""

    def __init__(self, command: str | list[str], timeout: float = 30.0):
        self.command = command
        self.timeout = timeout
        argv = shlex.split(command) if isinstance(command, str) else list(command)
        self.proc = subprocess.Popen(
            argv,
            stdin=subprocess.PIPE,
            stdout=subprocess.PIPE,
            text=True,
            bufsize=1,
        )
        self._sel = selectors.DefaultSelector()
        self._sel.register(self.proc.stdout, selectors.EVENT_READ)
        hello = self._read_line()
        if hello.get("ready") is not True or "output_dim" not in hello:
            raise ProtocolError(f"bad handshake: {hello}")
        self.output_dim = int(hello["output_dim"])

    def _read_line(self) -> dict:
        if not self._sel.select(timeout=self.timeout):
            self.close()
            raise TimeoutError(
                f"external model silent for {self.timeout}s: {self.command}"
            )
        line = self.proc.stdout.readline()
        if not line:
            raise ProtocolError("external model closed its stdout")
        try:
            return json.loads(line)
        except json.JSONDecodeError as exc:
            raise ProtocolError(f"malformed reply line: {line!r}") from exc

    def evaluate(self, x: np.ndarray, theta: np.ndarray) -> np.ndarray:
        req = {"x": np.asarray(x, float).tolist(),
               "theta": np.asarray(theta, float).tolist()}
        try:
            self.proc.stdin.write(json.dumps(req) + "\n")
            self.proc.stdin.flush()
        except (BrokenPipeError, ValueError) as exc:
            raise ProtocolError("external model stdin closed") from exc
        reply = self._read_line()
        if "error" in reply:
            raise EvaluationFailure(f"external model error: {reply['error']}")
        if "f" not in reply:
            raise ProtocolError(f"reply missing 'f': {reply}")
        out = np.asarray(reply["f"], dtype=float)
        if out.shape != (self.output_dim,) or not np.all(np.isfinite(out)):
            raise EvaluationFailure(f"invalid external output: {reply['f']}")
        return out

    def close(self) -> None:
        if self.proc.poll() is None:
            self.proc.terminate()
            try:
                self.proc.wait(timeout=5)
            except subprocess.TimeoutExpired:
                self.proc.kill()

    def __del__(self):
        try:
            self.close()
        except Exception:
            pass


def external_model(
    command: str | list[str],
    design_space: DesignSpace,
    parameter_space: ParameterSpace,
    output_dim: int,
    timeout: float = 30.0,
    name: str | None = None,
) -> ParametricModel:
    """Wrap a subprocess command as a deterministic ParametricModel."""
    proc = ExternalModelProcess(command, timeout=timeout)
    if proc.output_dim != output_dim:
        proc.close()
        raise ProtocolError(
            f"process reports output_dim={proc.output_dim}, expected {output_dim}"
        )
    return ParametricModel(
        name=name or f"external[{command}]",
        design_space=design_space,
        parameter_space=parameter_space,
        output_dim=output_dim,
        evaluator=proc.evaluate,
    )
