"""Outcome recording and the three study metrics.

Delay is generation to acknowledgement receipt.  Failure probability is
dropped over generated.  Peak age of a flow, sampled at each successful
reception, is the time span from the generation of the previously received
message of that flow to the instant of the new reception; receptions are
taken at the acknowledgement by default, with the completion of the
downlink forwarding recorded alongside as the alternative closure.

Incremental per-flow recording (used by the reference engine) and the
batch summarizer (used for every reported number) are independent routes
to the same samples; the tests hold them against each other and against a
plain replay of the stored timelines.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy import stats

from .traffic import KIND_REPORT

CAUSE_HOLDING = "holding"
CAUSE_NU = "nu"
CAUSE_SDS_RETRY = "sds_retry"
DROP_CAUSES = (CAUSE_HOLDING, CAUSE_NU, CAUSE_SDS_RETRY)

# Numeric cause codes shared with the engines.
CAUSE_CODE = {CAUSE_HOLDING: 0, CAUSE_NU: 1, CAUSE_SDS_RETRY: 2}

PAOI_AT_ACK = "ack"
PAOI_AT_FORWARD = "forward"


@dataclass
class FlowRecord:
    """Per-flow delivery/drop history with incremental peak-age tracking."""

    flow: tuple[int, int]
    deliveries: list[tuple[float, float]] = field(default_factory=list)
    drops: list[tuple[float, str]] = field(default_factory=list)
    last_delivered_generation: float | None = None
    _last_closed: float = -math.inf


def record_delivery(rec: FlowRecord, generated_at: float, closed_at: float) -> tuple[float, float | None]:
    """Append one delivery; returns (delay sample, peak-age sample or None)."""
    if closed_at < generated_at:
        raise ValueError("delivery closed before it was generated")
    if closed_at < rec._last_closed:
        raise ValueError("deliveries must close in order within a flow")
    delay = closed_at - generated_at
    paoi = None
    if rec.last_delivered_generation is not None:
        paoi = closed_at - rec.last_delivered_generation
    rec.deliveries.append((generated_at, closed_at))
    rec.last_delivered_generation = generated_at
    rec._last_closed = closed_at
    return delay, paoi


def record_drop(rec: FlowRecord, generated_at: float, cause: str) -> None:
    """A drop neither produces a peak-age sample nor moves the chain."""
    if cause not in DROP_CAUSES:
        raise ValueError(f"unknown drop cause {cause!r}")
    rec.drops.append((generated_at, cause))


def paoi_from_timeline(generated: np.ndarray, closed: np.ndarray) -> np.ndarray:
    """Replay a stored (generation, closure) timeline into peak-age samples."""
    generated = np.asarray(generated, dtype=np.float64)
    closed = np.asarray(closed, dtype=np.float64)
    if len(generated) < 2:
        return np.empty(0, dtype=np.float64)
    return closed[1:] - generated[:-1]


@dataclass(frozen=True)
class RunSummary:
    average_delay_s: float
    failure_probability: float
    average_paoi_s: float
    average_paoi_ack_s: float
    average_paoi_forward_s: float
    n_generated: int
    n_delivered: int
    n_dropped_holding: int
    n_dropped_nu: int
    n_dropped_sds_retry: int
    n_pending: int
    n_delay_samples: int
    n_paoi_samples: int

    @property
    def n_dropped(self) -> int:
        return self.n_dropped_holding + self.n_dropped_nu + self.n_dropped_sds_retry


def _mean(samples: np.ndarray) -> float:
    return float(np.mean(samples)) if len(samples) else 0.0


def summarize_run(
    msg_kind: np.ndarray,
    msg_source: np.ndarray,
    msg_gen: np.ndarray,
    delivered_ids: np.ndarray,
    delivered_close: np.ndarray,
    dropped_ids: np.ndarray,
    dropped_cause: np.ndarray,
    forward_complete: np.ndarray,
    warmup_end_s: float,
    paoi_closure: str = PAOI_AT_ACK,
) -> RunSummary:
    """Reduce a run's raw event arrays to the study metrics.

    Only report flows enter the headline numbers.  Messages generated
    during the warm-up window are excluded from every sample and count,
    but their deliveries still seed the peak-age chains.
    """
    report = msg_kind == KIND_REPORT
    in_window = report & (msg_gen >= warmup_end_s)

    del_report = delivered_ids[report[delivered_ids]]
    del_in_window = delivered_ids[in_window[delivered_ids]]
    close_of = np.full(len(msg_kind), np.nan)
    close_of[delivered_ids] = delivered_close

    delays = close_of[del_in_window] - msg_gen[del_in_window]

    drop_report = dropped_cause[in_window[dropped_ids]]
    n_generated = int(np.count_nonzero(in_window))
    n_delivered = len(del_in_window)
    n_holding = int(np.count_nonzero(drop_report == CAUSE_CODE[CAUSE_HOLDING]))
    n_nu = int(np.count_nonzero(drop_report == CAUSE_CODE[CAUSE_NU]))
    n_sds = int(np.count_nonzero(drop_report == CAUSE_CODE[CAUSE_SDS_RETRY]))
    n_pending = n_generated - n_delivered - n_holding - n_nu - n_sds
    if n_pending < 0:
        raise AssertionError("message conservation violated")
    n_dropped = n_holding + n_nu + n_sds
    failure = n_dropped / n_generated if n_generated else 0.0

    paoi_ack = paoi_pooled(msg_source, msg_gen, del_report, close_of[del_report], warmup_end_s)
    fwd_ids = del_report[np.isfinite(forward_complete[del_report])]
    paoi_fwd = paoi_pooled(msg_source, msg_gen, fwd_ids, forward_complete[fwd_ids], warmup_end_s)

    paoi_samples = paoi_ack if paoi_closure == PAOI_AT_ACK else paoi_fwd
    return RunSummary(
        average_delay_s=_mean(delays),
        failure_probability=failure,
        average_paoi_s=_mean(paoi_samples),
        average_paoi_ack_s=_mean(paoi_ack),
        average_paoi_forward_s=_mean(paoi_fwd),
        n_generated=n_generated,
        n_delivered=n_delivered,
        n_dropped_holding=n_holding,
        n_dropped_nu=n_nu,
        n_dropped_sds_retry=n_sds,
        n_pending=n_pending,
        n_delay_samples=len(delays),
        n_paoi_samples=len(paoi_samples),
    )


def paoi_pooled(
    msg_source: np.ndarray,
    msg_gen: np.ndarray,
    ids: np.ndarray,
    close_times: np.ndarray,
    warmup_end_s: float,
) -> np.ndarray:
    """Pool per-flow peak-age samples, flows in station order."""
    if len(ids) == 0:
        return np.empty(0, dtype=np.float64)
    samples: list[np.ndarray] = []
    order = np.argsort(msg_source[ids], kind="stable")
    ids = ids[order]
    close_times = close_times[order]
    sources = msg_source[ids]
    for s in np.unique(sources):
        mask = sources == s
        flow_ids = ids[mask]
        closes = close_times[mask]
        t_order = np.argsort(closes, kind="stable")
        flow_ids = flow_ids[t_order]
        closes = closes[t_order]
        gens = msg_gen[flow_ids]
        if len(flow_ids) < 2:
            continue
        flow_samples = closes[1:] - gens[:-1]
        keep = gens[1:] >= warmup_end_s
        samples.append(flow_samples[keep])
    if not samples:
        return np.empty(0, dtype=np.float64)
    return np.concatenate(samples)


@dataclass(frozen=True)
class Aggregate:
    n_runs: int
    delay_mean_s: float
    delay_ci_s: float
    failure_mean: float
    failure_ci: float
    paoi_mean_s: float
    paoi_ci_s: float
    generated: int
    delivered: int
    dropped_holding: int
    dropped_nu: int
    dropped_sds_retry: int


def t_half_width(samples: np.ndarray, confidence: float) -> float:
    n = len(samples)
    if n < 2:
        raise ValueError("confidence interval needs at least two runs")
    s = float(np.std(samples, ddof=1))
    q = float(stats.t.ppf(0.5 + confidence / 2.0, n - 1))
    return q * s / math.sqrt(n)


def aggregate(runs: list[RunSummary], confidence: float = 0.95) -> Aggregate:
    """Cross-replication mean and Student-t half-width per metric."""
    if len(runs) < 2:
        raise ValueError("aggregation needs at least two replications")
    if not 0.0 < confidence < 1.0:
        raise ValueError(f"confidence must be in (0,1), got {confidence}")
    delays = np.array([r.average_delay_s for r in runs])
    failures = np.array([r.failure_probability for r in runs])
    paois = np.array([r.average_paoi_s for r in runs])
    return Aggregate(
        n_runs=len(runs),
        delay_mean_s=float(np.mean(delays)),
        delay_ci_s=t_half_width(delays, confidence),
        failure_mean=float(np.mean(failures)),
        failure_ci=t_half_width(failures, confidence),
        paoi_mean_s=float(np.mean(paois)),
        paoi_ci_s=t_half_width(paois, confidence),
        generated=sum(r.n_generated for r in runs),
        delivered=sum(r.n_delivered for r in runs),
        dropped_holding=sum(r.n_dropped_holding for r in runs),
        dropped_nu=sum(r.n_dropped_nu for r in runs),
        dropped_sds_retry=sum(r.n_dropped_sds_retry for r in runs),
    )
