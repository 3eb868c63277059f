"""Objective functions mapping a shape vector to annual energy use in kWh.

Every objective counts its own evaluations in ``eval_count``; that counter is
the number of simulations the benchmark metrics are charged with.
"""
from __future__ import annotations

import hashlib
import json
import math
import queue
import subprocess
import threading
from dataclasses import dataclass, field

import numpy as np

from .errors import (
    BudgetExceeded,
    ConfigError,
    ContractViolation,
    EvaluationTimeout,
    ProcessError,
    ProtocolError,
)

JOULES_PER_KWH = 3.6e6


@dataclass(frozen=True)
class ZoneLoads:
    """Annual zone loads in joules: heating, cooling, lighting plus fans."""

    q_heat: float
    q_cool: float
    e_light_fans: float


def loads_to_kwh(loads: ZoneLoads) -> float:
    parts = (loads.q_heat, loads.q_cool, loads.e_light_fans)
    if not all(math.isfinite(p) and p >= 0 for p in parts):
        raise ContractViolation(f"zone loads must be finite and non-negative, got {parts}")
    return (loads.q_heat + loads.q_cool + loads.e_light_fans) / JOULES_PER_KWH


class Objective:
    """Base class. Subclasses implement ``_evaluate``."""

    def __init__(self):
        self.eval_count = 0

    def evaluate(self, x) -> float:
        value = self._evaluate(np.asarray(x, dtype=np.float64))
        self.eval_count += 1
        return value

    def _evaluate(self, x: np.ndarray) -> float:
        raise NotImplementedError

    def close(self):
        pass

    def __enter__(self):
        return self

    def __exit__(self, *exc):
        self.close()


@dataclass(frozen=True)
class SyntheticParams:
    baseline: float = 760.0
    weight: float = 0.35
    ruggedness: float = 6.0
    frequency: float = 2.0
    target: tuple[float, ...] = (3.2, -1.6, -4.8, 3.2)
    noise_sigma: float = 0.0
    noise_seed: int = 0

    def __post_init__(self):
        object.__setattr__(self, "target", tuple(float(t) for t in self.target))
        if not self.weight > 0:
            raise ConfigError("weight must be > 0", key="weight")
        if not self.ruggedness >= 0:
            raise ConfigError("ruggedness must be >= 0", key="ruggedness")
        if not self.frequency > 0:
            raise ConfigError("frequency must be > 0", key="frequency")
        if not self.noise_sigma >= 0:
            raise ConfigError("noise_sigma must be >= 0", key="noise_sigma")


def synthetic_evaluate(params: SyntheticParams, x) -> float:
    """Shifted quadratic bowl plus cosine ripples, minimised exactly at the target.

    Each coordinate contributes ``w*d**2 + r*(1 - cos(omega*d))`` with
    ``d = x_i - t_i``, so with no noise the value is ``baseline`` at the target
    and strictly larger everywhere else.
    """
    x = np.asarray(x, dtype=np.float64)
    t = np.asarray(params.target)
    if x.shape != t.shape:
        raise ContractViolation(f"expected a vector of length {t.size}, got shape {x.shape}")
    d = x - t
    terms = params.weight * d * d + params.ruggedness * (1.0 - np.cos(params.frequency * d))
    value = params.baseline + float(terms.sum())
    if params.noise_sigma > 0:
        value = max(0.0, value + _point_noise(params, x))
    return value


def _point_noise(params: SyntheticParams, x: np.ndarray) -> float:
    # keyed by (seed, exact bytes of x) so re-evaluating a point repeats its noise
    h = hashlib.blake2b(x.tobytes(), digest_size=8, key=str(params.noise_seed).encode())
    rng = np.random.default_rng(int.from_bytes(h.digest(), "little"))
    return float(rng.normal(0.0, params.noise_sigma))


class SyntheticObjective(Objective):
    def __init__(self, params: SyntheticParams | None = None):
        super().__init__()
        self.params = params or SyntheticParams()

    def _evaluate(self, x):
        return synthetic_evaluate(self.params, x)

    def known_minimum(self) -> tuple[np.ndarray, float]:
        """Global minimiser and minimum over the feasible region (noise-free only)."""
        if self.params.noise_sigma > 0:
            raise ContractViolation("the minimum of a noisy landscape is not known analytically")
        return np.array(self.params.target), self.params.baseline


class CountingObjective(Objective):
    """Forward to ``inner`` and optionally refuse calls beyond ``cap``."""

    def __init__(self, inner: Objective, cap: int | None = None):
        super().__init__()
        self.inner = inner
        self.cap = cap

    def evaluate(self, x):
        if self.cap is not None and self.eval_count >= self.cap:
            raise BudgetExceeded(f"evaluation budget of {self.cap} exhausted")
        return super().evaluate(x)

    def _evaluate(self, x):
        return self.inner.evaluate(x)

    def close(self):
        self.inner.close()


def with_counting(inner: Objective, cap: int | None = None) -> CountingObjective:
    return CountingObjective(inner, cap)


class MemoizingObjective(Objective):
    """Cache values by the exact bytes of the vector.

    ``eval_count`` counts every call; ``inner.eval_count`` counts only the
    simulations actually run.
    """

    def __init__(self, inner: Objective):
        super().__init__()
        self.inner = inner
        self._cache: dict[bytes, float] = {}

    def _evaluate(self, x):
        key = x.tobytes()
        if key not in self._cache:
            self._cache[key] = self.inner.evaluate(x)
        return self._cache[key]

    def close(self):
        self.inner.close()


@dataclass(frozen=True)
class ExternalObjectiveConfig:
    command: tuple[str, ...]
    timeout_s: float = 600.0
    restart_on_crash: bool = True
    env: dict | None = field(default=None, compare=False)

    def __post_init__(self):
        object.__setattr__(self, "command", tuple(str(c) for c in self.command))
        if not self.command:
            raise ConfigError("external objective command must be non-empty", key="command")
        if not self.timeout_s > 0:
            raise ConfigError("timeout_s must be > 0", key="timeout_s")


_EOF = object()


class ExternalObjective(Objective):
    """Evaluate through a resident child process speaking line-delimited JSON.

    Request ``{"x": [...]}`` on the child's stdin, response ``{"kwh": v}`` or
    ``{"error": "..."}`` on its stdout, one line each. Closing stdin asks the
    child to exit.
    """

    def __init__(self, cfg: ExternalObjectiveConfig):
        super().__init__()
        self.cfg = cfg
        self._proc = None
        self._lines: queue.Queue | None = None
        self._restarts = 0

    def _start(self):
        try:
            self._proc = subprocess.Popen(
                list(self.cfg.command),
                stdin=subprocess.PIPE,
                stdout=subprocess.PIPE,
                text=True,
                bufsize=1,
                env=self.cfg.env,
            )
        except OSError as e:
            raise ProcessError(f"cannot launch {self.cfg.command[0]!r}: {e}") from e
        self._lines = queue.Queue()
        threading.Thread(
            target=_pump_lines, args=(self._proc.stdout, self._lines), daemon=True
        ).start()

    def _evaluate(self, x):
        try:
            return self._roundtrip(x)
        except ProcessError:
            if not self.cfg.restart_on_crash or self._restarts >= 1:
                raise
            self._restarts += 1
            self._kill()
            return self._roundtrip(x)

    def _roundtrip(self, x):
        if self._proc is None:
            self._start()
        request = json.dumps({"x": [float(c) for c in x]})
        try:
            self._proc.stdin.write(request + "\n")
            self._proc.stdin.flush()
        except (BrokenPipeError, OSError) as e:
            raise ProcessError(f"child process is gone: {e}") from e
        try:
            line = self._lines.get(timeout=self.cfg.timeout_s)
        except queue.Empty:
            self._kill()
            raise EvaluationTimeout(f"no response within {self.cfg.timeout_s} s") from None
        if line is _EOF:
            code = self._proc.wait()
            self._proc = None
            raise ProcessError(f"child exited with status {code} before responding")
        return parse_response(line)

    def _kill(self):
        if self._proc is not None:
            self._proc.kill()
            self._proc.wait()
            self._proc = None

    def close(self):
        if self._proc is None:
            return
        try:
            self._proc.stdin.close()
            self._proc.wait(timeout=5)
        except (OSError, subprocess.TimeoutExpired):
            self._proc.kill()
            self._proc.wait()
        self._proc = None


def _pump_lines(stream, out: queue.Queue):
    for line in stream:
        out.put(line)
    out.put(_EOF)


def parse_response(line: str) -> float:
    try:
        msg = json.loads(line)
    except json.JSONDecodeError:
        raise ProtocolError(f"response is not JSON: {line.strip()[:200]!r}") from None
    if not isinstance(msg, dict):
        raise ProtocolError(f"response is not a JSON object: {line.strip()[:200]!r}")
    if "error" in msg:
        raise ProtocolError(f"child reported an error: {msg['error']}")
    kwh = msg.get("kwh")
    if isinstance(kwh, bool) or not isinstance(kwh, (int, float)):
        raise ProtocolError(f"response has no numeric 'kwh': {line.strip()[:200]!r}")
    kwh = float(kwh)
    if not math.isfinite(kwh) or kwh < 0:
        raise ProtocolError(f"kwh must be finite and non-negative, got {kwh}")
    return kwh


def external_evaluate(cfg: ExternalObjectiveConfig, x) -> float:
    """One-shot evaluation; starts and stops a child for a single request."""
    with ExternalObjective(cfg) as obj:
        return obj.evaluate(x)
