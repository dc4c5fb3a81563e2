"""Datagram loop between a simulated plant and the admittance controller.

Wire format, 21 bytes little-endian::

    uint32 seq | float64 t | uint8 kind | float64 value

The plant is the clock master. A controller joins by sending any
``FORCE_MEAS`` datagram to the plant (a subscription; its fields are
ignored). Every tick the plant sends ``FORCE_MEAS`` with the tick number
as ``seq`` and the controller answers with ``ROBOT_VEL_CMD`` and
``CRANE_VEL_CMD`` carrying the same ``seq``.

Two timing modes:

* lock-step: the plant blocks on each tick until both commands arrive,
  retransmitting the measurement every ``tick_timeout`` seconds. The run
  then reproduces :func:`robocrane.sim.simulate` exactly.
* free-running: ticks are paced in wall-clock time at ``dt``; missing
  commands are replaced by the previous ones (zero-order hold).

Commands older than the current tick are discarded in both modes.
"""
from __future__ import annotations

import enum
import logging
import math
import socket
import struct
import time
from dataclasses import dataclass
from typing import Iterable

from .errors import ProtocolError, StallTimeoutError, TransportError
from .sim import Controller, Plant, ScenarioConfig, SimTrace, check_row, profile_velocity

log = logging.getLogger(__name__)

WIRE = struct.Struct("<IdBd")
DATAGRAM_SIZE = WIRE.size
SEQ_MAX = 0xFFFFFFFF
MAX_MISSED = 100

assert DATAGRAM_SIZE == 21


class Kind(enum.IntEnum):
    FORCE_MEAS = 1
    ROBOT_VEL_CMD = 2
    CRANE_VEL_CMD = 3


@dataclass(frozen=True)
class ControlDatagram:
    seq: int
    t: float
    kind: Kind
    value: float


def encode(d: ControlDatagram) -> bytes:
    if not 0 <= d.seq <= SEQ_MAX:
        raise ProtocolError(f"seq {d.seq} outside uint32 range")
    if not (math.isfinite(d.t) and math.isfinite(d.value)):
        raise ProtocolError(f"non-finite field in {d}")
    try:
        kind = Kind(d.kind)
    except ValueError as exc:
        raise ProtocolError(f"unknown kind {d.kind!r}") from exc
    return WIRE.pack(d.seq, d.t, kind, d.value)


def decode(data: bytes) -> ControlDatagram:
    if len(data) != DATAGRAM_SIZE:
        raise ProtocolError(f"datagram is {len(data)} bytes, expected {DATAGRAM_SIZE}")
    seq, t, kind, value = WIRE.unpack(data)
    try:
        kind = Kind(kind)
    except ValueError as exc:
        raise ProtocolError(f"unknown kind byte {kind}") from exc
    if not (math.isfinite(t) and math.isfinite(value)):
        raise ProtocolError("non-finite field in datagram")
    return ControlDatagram(seq, t, kind, value)


def parse_endpoint(text: str) -> tuple[str, int]:
    host, sep, port = text.rpartition(":")
    if not sep or not port.isdigit():
        raise ValueError(f"endpoint must look like HOST:PORT, got {text!r}")
    return host or "127.0.0.1", int(port)


class PlantServer:
    """Plant half of the loop: owns the clock, lags, integrators and contact."""

    def __init__(
        self,
        cfg: ScenarioConfig,
        endpoint: tuple[str, int] = ("127.0.0.1", 0),
        lockstep: bool = False,
        tick_timeout: float = 0.05,
        max_missed: int = MAX_MISSED,
        startup_timeout: float = 0.0,
    ):
        self.cfg = cfg
        self.lockstep = lockstep
        self.tick_timeout = tick_timeout
        self.max_missed = max_missed
        self.startup_timeout = startup_timeout
        self.peer: tuple[str, int] | None = None
        self.malformed = 0
        self.stale = 0
        self.held_ticks = 0
        try:
            self.sock = socket.socket(socket.AF_INET, socket.SOCK_DGRAM)
            self.sock.bind(endpoint)
        except OSError as exc:
            raise TransportError(f"cannot bind plant endpoint {endpoint}: {exc}") from exc
        self._pending: dict[Kind, float] = {}
        self._tick = 0

    @property
    def address(self) -> tuple[str, int]:
        return self.sock.getsockname()

    def close(self) -> None:
        self.sock.close()

    def accept(self, data: bytes, addr: tuple[str, int]) -> None:
        """Feed one received datagram into the current tick's state."""
        try:
            d = decode(data)
        except ProtocolError as exc:
            self.malformed += 1
            log.debug("plant: dropped malformed datagram from %s: %s", addr, exc)
            return
        if d.kind is Kind.FORCE_MEAS:
            if self.peer != addr:
                log.info("plant: controller subscribed from %s", addr)
            self.peer = addr
            return
        if d.seq == self._tick:
            self._pending[d.kind] = d.value
        else:
            self.stale += 1

    def _complete(self) -> bool:
        return Kind.ROBOT_VEL_CMD in self._pending and Kind.CRANE_VEL_CMD in self._pending

    def _recv_until(self, deadline: float) -> bool:
        """Receive until both commands for the tick arrived or ``deadline`` passed."""
        while not self._complete():
            remaining = deadline - time.monotonic()
            if remaining <= 0:
                return False
            self.sock.settimeout(remaining)
            try:
                data, addr = self.sock.recvfrom(64)
            except socket.timeout:
                return False
            except ConnectionRefusedError:
                continue
            except OSError as exc:
                raise TransportError(f"plant receive failed: {exc}") from exc
            self.accept(data, addr)
        return True

    def _send(self, d: ControlDatagram) -> None:
        if self.peer is None:
            return
        try:
            self.sock.sendto(encode(d), self.peer)
        except ConnectionRefusedError:
            pass
        except OSError as exc:
            raise TransportError(f"plant send failed: {exc}") from exc

    def _wait_subscriber(self, timeout: float) -> None:
        deadline = time.monotonic() + timeout
        while self.peer is None:
            remaining = deadline - time.monotonic()
            if remaining <= 0:
                return
            self.sock.settimeout(remaining)
            try:
                data, addr = self.sock.recvfrom(64)
            except socket.timeout:
                return
            except OSError as exc:
                raise TransportError(f"plant receive failed: {exc}") from exc
            self.accept(data, addr)

    def run(self) -> SimTrace:
        cfg = self.cfg
        plant = Plant(cfg)
        robot_cmd = crane_cmd = 0.0
        missed = 0
        rows = []
        if self.lockstep:
            self._wait_subscriber(max(self.startup_timeout, self.tick_timeout * self.max_missed))
            if self.peer is None:
                raise StallTimeoutError("no controller subscribed to the lock-step plant")
        elif self.startup_timeout > 0:
            self._wait_subscriber(self.startup_timeout)
        t0 = time.monotonic()
        try:
            for k in range(cfg.n_steps):
                self._tick = k
                self._pending = {}
                t = k * cfg.dt
                if not self.lockstep:
                    lag = t0 + t - time.monotonic()
                    if lag > 0:
                        time.sleep(lag)
                F = plant.measure()
                meas = ControlDatagram(k, t, Kind.FORCE_MEAS, F)
                self._send(meas)
                if self.lockstep:
                    while not self._recv_until(time.monotonic() + self.tick_timeout):
                        missed += 1
                        if missed > self.max_missed:
                            raise StallTimeoutError(f"no commands for tick {k} after {missed} retries")
                        self._send(meas)
                    missed = 0
                else:
                    got = self._recv_until(t0 + (k + 1) * cfg.dt)
                    if not got:
                        self.held_ticks += 1
                        if self.peer is not None and not self._pending:
                            missed += 1
                            if missed > self.max_missed:
                                raise StallTimeoutError(f"controller silent for {missed} ticks at tick {k}")
                        else:
                            missed = 0
                    else:
                        missed = 0
                robot_cmd = self._pending.get(Kind.ROBOT_VEL_CMD, robot_cmd)
                crane_cmd = self._pending.get(Kind.CRANE_VEL_CMD, crane_cmd)
                v_xd = profile_velocity(cfg.profile, t)
                v_ar = 0.0 if cfg.mode == "velocity-only" else v_xd - robot_cmd
                row = (t, v_xd, v_ar, plant.v_r, plant.x_r, F, crane_cmd, plant.v_c, plant.x_c)
                check_row(k, row)
                rows.append(row)
                plant.advance(robot_cmd, crane_cmd)
        finally:
            self.sock.settimeout(None)
        return SimTrace.from_rows(rows)


class ControllerNode:
    """Reactive controller half: admittances driven by received forces.

    Returns a trace whose plant-side columns (``v_xr``, ``x_r``, ``v_c``,
    ``x_c``) are NaN.
    """

    def __init__(
        self,
        cfg: ScenarioConfig,
        plant_endpoint: tuple[str, int],
        bind: tuple[str, int] = ("0.0.0.0", 0),
        startup_timeout: float = 10.0,
        idle_timeout: float = 5.0,
        linger: float = 0.3,
        resubscribe: float = 0.1,
    ):
        self.cfg = cfg
        self.plant_endpoint = plant_endpoint
        self.startup_timeout = startup_timeout
        self.idle_timeout = idle_timeout
        self.linger = linger
        self.resubscribe = resubscribe
        self.ctrl = Controller(cfg)
        self.last_seq: int | None = None
        self.malformed = 0
        self.stale = 0
        self.rows: list[tuple[float, ...]] = []
        self._last_reply: list[ControlDatagram] = []
        try:
            self.sock = socket.socket(socket.AF_INET, socket.SOCK_DGRAM)
            self.sock.bind(bind)
        except OSError as exc:
            raise TransportError(f"cannot bind controller socket {bind}: {exc}") from exc

    @property
    def address(self) -> tuple[str, int]:
        return self.sock.getsockname()

    @property
    def finished(self) -> bool:
        return self.last_seq is not None and self.last_seq >= self.cfg.n_steps - 1

    def close(self) -> None:
        self.sock.close()

    def handle(self, data: bytes) -> list[ControlDatagram]:
        """Process one datagram and return the replies to send."""
        try:
            d = decode(data)
        except ProtocolError as exc:
            self.malformed += 1
            log.debug("controller: dropped malformed datagram: %s", exc)
            return []
        if d.kind is not Kind.FORCE_MEAS:
            self.malformed += 1
            return []
        if self.last_seq is not None:
            if d.seq < self.last_seq:
                self.stale += 1
                return []
            if d.seq == self.last_seq:
                return list(self._last_reply)
        start = 0 if self.last_seq is None else self.last_seq + 1
        for j in range(start, d.seq + 1):
            t = j * self.cfg.dt
            cmd = self.ctrl.step(t, d.value)
            self.rows.append((t, cmd.v_xd, cmd.v_ar, math.nan, math.nan, d.value, cmd.crane, math.nan, math.nan))
        self.last_seq = d.seq
        self._last_reply = [
            ControlDatagram(d.seq, d.t, Kind.ROBOT_VEL_CMD, cmd.robot),
            ControlDatagram(d.seq, d.t, Kind.CRANE_VEL_CMD, cmd.crane),
        ]
        return list(self._last_reply)

    def _send_all(self, msgs: Iterable[ControlDatagram], addr) -> None:
        for m in msgs:
            try:
                self.sock.sendto(encode(m), addr)
            except ConnectionRefusedError:
                pass
            except OSError as exc:
                raise TransportError(f"controller send failed: {exc}") from exc

    def run(self) -> SimTrace:
        hello = ControlDatagram(0, 0.0, Kind.FORCE_MEAS, 0.0)
        start = time.monotonic()
        last_rx = None
        done_at = None
        next_hello = start
        try:
            while True:
                now = time.monotonic()
                if self.last_seq is None:
                    if now - start > self.startup_timeout:
                        raise StallTimeoutError(f"plant at {self.plant_endpoint} never answered")
                    if now >= next_hello:
                        self._send_all([hello], self.plant_endpoint)
                        next_hello = now + self.resubscribe
                    timeout = max(0.0, min(next_hello, start + self.startup_timeout) - now)
                elif done_at is not None:
                    timeout = done_at + self.linger - now
                    if timeout <= 0:
                        break
                else:
                    timeout = last_rx + self.idle_timeout - now
                    if timeout <= 0:
                        raise StallTimeoutError(f"no measurement for {self.idle_timeout} s after seq {self.last_seq}")
                self.sock.settimeout(max(timeout, 1e-4))
                try:
                    data, addr = self.sock.recvfrom(64)
                except socket.timeout:
                    continue
                except ConnectionRefusedError:
                    continue
                except OSError as exc:
                    raise TransportError(f"controller receive failed: {exc}") from exc
                replies = self.handle(data)
                if replies:
                    last_rx = time.monotonic()
                    self._send_all(replies, addr)
                    if self.finished and done_at is None:
                        done_at = last_rx
                    elif done_at is not None:
                        done_at = last_rx
        finally:
            self.sock.settimeout(None)
        return SimTrace.from_rows(self.rows) if self.rows else SimTrace.from_rows([])


def run_plant_server(cfg: ScenarioConfig, endpoint: tuple[str, int], **kwargs) -> SimTrace:
    server = PlantServer(cfg, endpoint, **kwargs)
    try:
        return server.run()
    finally:
        server.close()


def run_controller(cfg: ScenarioConfig, endpoint: tuple[str, int], **kwargs) -> SimTrace:
    node = ControllerNode(cfg, endpoint, **kwargs)
    try:
        return node.run()
    finally:
        node.close()


def loopback(cfg: ScenarioConfig, lockstep: bool = True, **plant_kwargs) -> tuple[SimTrace, SimTrace]:
    """Run plant and controller on 127.0.0.1 in one process.

    Returns:
        ``(plant_trace, controller_trace)``.
    """
    import threading

    server = PlantServer(cfg, ("127.0.0.1", 0), lockstep=lockstep, **plant_kwargs)
    node = ControllerNode(cfg, server.address, bind=("127.0.0.1", 0))
    result: dict[str, object] = {}

    def _ctrl():
        try:
            result["trace"] = node.run()
        except BaseException as exc:  # surfaced in the caller thread
            result["error"] = exc

    th = threading.Thread(target=_ctrl, name="robocrane-controller", daemon=True)
    th.start()
    try:
        plant_trace = server.run()
    finally:
        server.close()
    th.join()
    node.close()
    if "error" in result:
        raise result["error"]  # type: ignore[misc]
    return plant_trace, result["trace"]  # type: ignore[return-value]
