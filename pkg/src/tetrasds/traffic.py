"""Arrival processes, message construction and per-station output queues.

All arrival instants for one replication are pre-generated from named
substreams before the run starts, so the two simulation engines consume the
same scenario.  Message sizes follow the evaluation setup: 100-byte reports
and background short-data messages, 1-byte feedback notifications, plus
voice-call signalling transactions that only touch the control channel at
setup and teardown.
"""

from __future__ import annotations

import math
from collections import deque
from dataclasses import dataclass, field

import numpy as np

from . import rng

REPORT_PAYLOAD_BITS = 800
BACKGROUND_PAYLOAD_BITS = 800
FEEDBACK_PAYLOAD_BITS = 8
SDS_TYPE4_MAX_BITS = 2047

# Message kinds shared with the engines.
KIND_REPORT = 0
KIND_BACKGROUND_SDS = 1
KIND_FEEDBACK = 2
KIND_VOICE_SETUP = 3


@dataclass
class SdsMessage:
    id: int
    source: int
    destination: int
    payload_bits: int
    generated_at: float
    holding_deadline: float | None = None
    sds_retry_count: int = 0
    kind: int = KIND_REPORT


@dataclass
class VoiceCall:
    setup_at: float
    duration_s: float


@dataclass(frozen=True)
class TrafficConfig:
    n_responders: int = 10
    n_background: int = 100
    lambda_report_per_s: float = 0.1
    lambda_sds_per_hour: float = 10.0
    lambda_voice_per_hour: float = 3.0
    # None derives the feedback rate as n_responders / 60 s.
    lambda_feedback_per_s: float | None = None
    call_duration_min_s: float = 20.0
    call_duration_max_s: float = 40.0
    holding_timer_s: float | None = None
    background_forwarded: bool = False

    @property
    def n_total(self) -> int:
        return self.n_background + self.n_responders + 1

    @property
    def feedback_rate_per_s(self) -> float:
        if self.lambda_feedback_per_s is not None:
            return self.lambda_feedback_per_s
        return self.n_responders / 60.0


@dataclass
class OutputQueue:
    """FIFO of pending messages for one station."""

    owner: int
    pending: deque = field(default_factory=deque)

    def push(self, message: SdsMessage) -> None:
        self.pending.append(message)

    def push_front(self, message: SdsMessage) -> None:
        self.pending.appendleft(message)

    def __len__(self) -> int:
        return len(self.pending)


def purge_expired(queue: OutputQueue, now: float) -> list[SdsMessage]:
    """Drop every queued message whose holding deadline has passed.

    A deadline exactly equal to ``now`` keeps the message (strict
    inequality); survivors keep their relative order.
    """
    dropped = [m for m in queue.pending if m.holding_deadline is not None and m.holding_deadline < now]
    if dropped:
        queue.pending = deque(
            m for m in queue.pending if m.holding_deadline is None or m.holding_deadline >= now
        )
    return dropped


def sample_interarrival(rate_per_s: float, gen: np.random.Generator, n: int | None = None):
    """Exponential gap(s) with mean 1/rate."""
    if rate_per_s <= 0.0:
        raise ValueError(f"arrival rate must be positive, got {rate_per_s}")
    if n is None:
        return float(gen.exponential(1.0 / rate_per_s))
    return gen.exponential(1.0 / rate_per_s, n)


def generate_report(
    responder: int,
    t: float,
    cfg: TrafficConfig,
    msg_id: int = 0,
    destination: int = -1,
) -> SdsMessage:
    """One 100-byte report addressed to the remote agent."""
    deadline = None if cfg.holding_timer_s is None else t + cfg.holding_timer_s
    return SdsMessage(
        id=msg_id,
        source=responder,
        destination=destination,
        payload_bits=REPORT_PAYLOAD_BITS,
        generated_at=t,
        holding_deadline=deadline,
        kind=KIND_REPORT,
    )


def generate_voice_call(ms: int, t: float, gen: np.random.Generator) -> VoiceCall:
    """Call setup at the arrival instant with a uniform holding duration."""
    return VoiceCall(setup_at=t, duration_s=float(gen.uniform(20.0, 40.0)))


def poisson_times(rate_per_s: float, horizon_s: float, gen: np.random.Generator) -> np.ndarray:
    """All arrival instants of a Poisson process restricted to [0, horizon)."""
    if rate_per_s <= 0.0:
        return np.empty(0, dtype=np.float64)
    times = _poisson_matrix(rate_per_s, horizon_s, 1, gen)[0]
    return times[times < horizon_s]


def _draw_bound(rate_per_s: float, horizon_s: float) -> int:
    mean = rate_per_s * horizon_s
    return int(mean + 12.0 * math.sqrt(mean) + 30.0)


def _poisson_matrix(rate_per_s: float, horizon_s: float, n_rows: int, gen: np.random.Generator) -> np.ndarray:
    """Row-per-station arrival instants; entries beyond the horizon remain
    as sentinels past ``horizon_s`` and are masked off by the caller."""
    bound = _draw_bound(rate_per_s, horizon_s)
    gaps = gen.exponential(1.0 / rate_per_s, (n_rows, bound))
    times = np.cumsum(gaps, axis=1)
    if n_rows and bound and not np.all(times[:, -1] >= horizon_s):
        raise RuntimeError("arrival pre-generation bound too small")
    return times


@dataclass
class ArrivalTables:
    """Pre-generated scenario randomness for one replication."""

    report_times: list[np.ndarray]
    bg_sds_times: list[np.ndarray]
    bg_voice_times: list[np.ndarray]
    bg_voice_durations: list[np.ndarray]
    feedback_times: np.ndarray
    feedback_dests: np.ndarray  # responder-local indices
    bg_sds_dests: np.ndarray | None


def build_arrivals(
    cfg: TrafficConfig,
    horizon_s: float,
    master_seed: int,
    replication: int,
) -> ArrivalTables:
    """Draw every arrival process from its named substream.

    Per-station rows are prefixes of a single stream per purpose, so a
    station keeps its arrivals when the other population sizes change.
    """
    n_f, n_c = cfg.n_responders, cfg.n_background

    def rows(stream_id: int, rate: float, n_rows: int) -> list[np.ndarray]:
        if n_rows == 0 or rate <= 0.0:
            return [np.empty(0, dtype=np.float64) for _ in range(n_rows)]
        gen = rng.substream(master_seed, replication, stream_id)
        mat = _poisson_matrix(rate, horizon_s, n_rows, gen)
        return [row[row < horizon_s] for row in mat]

    report_times = rows(rng.STREAM_REPORT_ARRIVALS, cfg.lambda_report_per_s, n_f)
    bg_sds_times = rows(rng.STREAM_BG_SDS_ARRIVALS, cfg.lambda_sds_per_hour / 3600.0, n_c)
    bg_voice_times = rows(rng.STREAM_BG_VOICE_ARRIVALS, cfg.lambda_voice_per_hour / 3600.0, n_c)

    durations: list[np.ndarray] = []
    if n_c and cfg.lambda_voice_per_hour > 0.0:
        gen = rng.substream(master_seed, replication, rng.STREAM_VOICE_DURATIONS)
        bound = _draw_bound(cfg.lambda_voice_per_hour / 3600.0, horizon_s)
        mat = gen.uniform(cfg.call_duration_min_s, cfg.call_duration_max_s, (n_c, bound))
        durations = [mat[i, : len(bg_voice_times[i])].copy() for i in range(n_c)]
    else:
        durations = [np.empty(0, dtype=np.float64) for _ in range(n_c)]

    fb_rate = cfg.feedback_rate_per_s
    if n_f and fb_rate > 0.0:
        gen = rng.substream(master_seed, replication, rng.STREAM_FEEDBACK_ARRIVALS)
        feedback_times = _poisson_matrix(fb_rate, horizon_s, 1, gen)[0]
        feedback_times = feedback_times[feedback_times < horizon_s]
        gen = rng.substream(master_seed, replication, rng.STREAM_FEEDBACK_DESTS)
        feedback_dests = gen.integers(0, n_f, len(feedback_times), dtype=np.int64)
    else:
        feedback_times = np.empty(0, dtype=np.float64)
        feedback_dests = np.empty(0, dtype=np.int64)

    bg_sds_dests = None
    if cfg.background_forwarded and n_c:
        gen = rng.substream(master_seed, replication, rng.STREAM_BG_SDS_DESTS)
        total = sum(len(t) for t in bg_sds_times)
        bg_sds_dests = gen.integers(0, n_c, total, dtype=np.int64)

    return ArrivalTables(
        report_times=report_times,
        bg_sds_times=bg_sds_times,
        bg_voice_times=bg_voice_times,
        bg_voice_durations=durations,
        feedback_times=feedback_times,
        feedback_dests=feedback_dests,
        bg_sds_dests=bg_sds_dests,
    )
