"""Reference event loop.

This engine walks the subslot timeline driving the station and base-station
operations object by object.  It is the readable statement of the protocol
semantics and the oracle the array kernel is held against; the two must
produce identical event streams for identical scenarios.

Ordering contract (shared with the kernel):

* Events pop in (time, class, station, sequence) order, with subslot
  boundaries ahead of timer expiries at the same instant.  A timer armed
  "k frames after subslot g" therefore fires after the uplink and downlink
  activity of subslot g + 2k, so a response landing in that very subslot
  still counts.
* Within one subslot: uplink first (booked fragment or access contention,
  stations in ascending order, queue purges before contention), then one
  downlink burst, then due timers.
* Received bursts take effect at the end of their subslot; a station acts
  on them no earlier than the following subslot.
"""

from __future__ import annotations

import heapq
from dataclasses import dataclass, field
from typing import Any

import numpy as np

from . import bs_mac, metrics, ms_mac, rng
from .bs_mac import BsSchedule, DownlinkJob, JobKind, PendingUplink
from .ms_mac import AccessParams, MsContext, MsState
from .scenario import NO_DESTINATION, RawRunResult, Scenario
from .tdma import (
    CONTROL_FRAME,
    SUBSLOTS_PER_FRAME,
    SUBSLOT_DURATION_S,
    frame_of_index,
    index_at_or_after,
    time_of_index,
)
from .traffic import KIND_VOICE_SETUP, OutputQueue, SdsMessage, purge_expired

EVENT_SUBSLOT = 0
EVENT_TIMER = 1

TIMER_WT = 0
TIMER_ACK = 1


@dataclass(order=True)
class _Event:
    time: float
    event_class: int
    station: int
    seq: int
    payload: Any = field(compare=False, default=None)


class EventQueue:
    """Deterministically ordered pending events.

    Pops in (time, event-class, station, sequence) order; pushing into the
    past is a programming error and raises.
    """

    def __init__(self) -> None:
        self._heap: list[_Event] = []
        self._seq = 0
        self._last_popped = -1.0

    def push(self, time: float, event_class: int, station: int, payload=None) -> None:
        if time < self._last_popped:
            raise ValueError("event scheduled in the past")
        self._seq += 1
        heapq.heappush(self._heap, _Event(time, event_class, station, self._seq, payload))

    def pop(self) -> _Event:
        ev = heapq.heappop(self._heap)
        self._last_popped = ev.time
        return ev

    def peek_time(self) -> float | None:
        return self._heap[0].time if self._heap else None

    def __len__(self) -> int:
        return len(self._heap)


class ReferenceEngine:
    def __init__(self, sc: Scenario):
        self.sc = sc
        cfg = sc.cfg
        self.capacity = cfg.subslot_capacity_bits
        self.ack_wait = cfg.ack_wait_frames
        self.retry_limit = cfg.sds_retry_limit
        self.pattern = cfg.code_pattern
        self.frame18_access = cfg.frame18_access

        self.messages = [
            SdsMessage(
                id=i,
                source=int(sc.m_station[i]),
                destination=int(sc.m_dest[i]),
                payload_bits=int(sc.m_payload_bits[i]),
                generated_at=float(sc.m_gen[i]),
                holding_deadline=None if np.isinf(sc.m_deadline[i]) else float(sc.m_deadline[i]),
                kind=int(sc.m_kind[i]),
            )
            for i in range(sc.n_messages)
        ]
        self.frags = sc.m_frags

        self.contexts: list[MsContext] = []
        self.params: list[AccessParams] = []
        self.retry_streams: list[rng.KeyedStream] = []
        self.ul_streams: list[rng.KeyedStream] = []
        self.dl_streams: list[rng.KeyedStream] = []
        for s in range(sc.n_stations):
            queue = OutputQueue(owner=s)
            for i in range(int(sc.s_msg_lo[s]), int(sc.s_msg_hi[s])):
                queue.push(self.messages[i])
            self.contexts.append(MsContext(station=s, queue=queue))
            self.params.append(
                AccessParams(
                    wt_frames=cfg.wt_frames,
                    nu_max=cfg.nu_max,
                    access_code=chr(ord("A") + int(sc.codes[s])),
                    retry_spread_frames=cfg.retry_spread_frames,
                    alignment_frames=cfg.alignment_frames,
                )
            )
            key = int(sc.entity_keys[s])
            self.retry_streams.append(rng.KeyedStream(sc.chan_seed, rng.TAG_ACCESS_RETRY, key))
            self.ul_streams.append(rng.KeyedStream(sc.chan_seed, rng.TAG_CHANNEL_UPLINK, key))
            self.dl_streams.append(rng.KeyedStream(sc.chan_seed, rng.TAG_CHANNEL_DOWNLINK, key))

        self.schedule = BsSchedule()
        self.pending: dict[int, PendingUplink] = {}
        self.bs_delivered = np.zeros(sc.n_messages, dtype=bool)
        self.timers = EventQueue()

        self.delivered_ids: list[int] = []
        self.delivered_close: list[float] = []
        self.dropped_ids: list[int] = []
        self.dropped_cause: list[int] = []
        self.dropped_time: list[float] = []
        self.forward_complete = np.full(sc.n_messages, np.nan)
        self.counters = {
            "access_attempts": 0,
            "access_collision_slots": 0,
            "access_successes": 0,
            "fragments_sent": 0,
            "grants_sent": 0,
            "acks_sent": 0,
            "forwards_sent": 0,
            "forward_failed": 0,
            "voice_completed": 0,
            "voice_blocked": 0,
            "teardowns": 0,
        }

    # -- channel draws ----------------------------------------------------

    def _uplink_delivered(self, station: int) -> bool:
        return self.ul_streams[station].next_u01() >= self.sc.p_err[station]

    def _downlink_delivered(self, station: int) -> bool:
        return self.dl_streams[station].next_u01() >= self.sc.p_err[station]

    # -- recording ---------------------------------------------------------

    def _record_drop(self, msg: SdsMessage, cause: str, now: float) -> None:
        self.dropped_ids.append(msg.id)
        self.dropped_cause.append(metrics.CAUSE_CODE[cause])
        self.dropped_time.append(now)

    def _record_delivery(self, msg: SdsMessage, close_time: float) -> None:
        self.delivered_ids.append(msg.id)
        self.delivered_close.append(close_time)

    # -- per-phase handlers --------------------------------------------------

    def _uplink(self, g: int, frame: int, now: float) -> None:
        booking = self.schedule.reserved.get(g)
        if booking is not None:
            self._reserved_uplink(g, booking)
            return
        if frame == CONTROL_FRAME and not self.frame18_access:
            return
        code = bs_mac.opportunity_code(g, self.pattern)
        contenders: list[ms_mac.MacAccessBurst] = []
        for s, ctx in enumerate(self.contexts):
            for dropped in purge_expired(ctx.queue, now):
                self._record_drop(dropped, metrics.CAUSE_HOLDING, now)
            burst = ms_mac.on_access_opportunity(
                ctx, g, code, self.params[s], self.capacity, now, align_stream=self.retry_streams[s]
            )
            if burst is not None:
                assert burst.extra_fragments == int(self.frags[burst.message.id]) - 1
                contenders.append(burst)
                self.timers.push(time_of_index(ctx.wt_expiry), EVENT_TIMER, s, (TIMER_WT, ctx.wt_expiry))
        if not contenders:
            return
        self.counters["access_attempts"] += len(contenders)
        decisions = [self._uplink_delivered(b.station) for b in contenders]
        outcome = bs_mac.resolve_access(contenders, decisions)
        if outcome.kind == bs_mac.OUTCOME_COLLISION:
            self.counters["access_collision_slots"] += 1
            return
        if outcome.kind != bs_mac.OUTCOME_SUCCESS:
            return
        self.counters["access_successes"] += 1
        burst = outcome.burst
        if burst.extra_fragments == 0:
            self._complete_uplink(burst.station, burst.message, g)
        else:
            self.pending[burst.station] = PendingUplink(
                station=burst.station,
                epoch=burst.epoch,
                message=burst.message,
                extra_remaining=burst.extra_fragments,
            )
            eligible = ((g // SUBSLOTS_PER_FRAME) + 1) * SUBSLOTS_PER_FRAME
            self.schedule.enqueue(
                DownlinkJob(
                    kind=JobKind.GRANT,
                    station=burst.station,
                    message=burst.message,
                    eligible_from=eligible,
                    seq=self.schedule.next_seq(),
                    epoch=burst.epoch,
                    extra_fragments=burst.extra_fragments,
                )
            )

    def _reserved_uplink(self, g: int, booking: tuple[int, int]) -> None:
        station, epoch = booking
        ctx = self.contexts[station]
        transmitting = ctx.state == MsState.SENDING_RESERVED and ctx.epoch == epoch
        delivered = False
        if transmitting:
            ms_mac.on_reserved_subslot(ctx, g, self.ack_wait)
            if ctx.state == MsState.AWAITING_ACK:
                self.timers.push(time_of_index(ctx.ack_expiry), EVENT_TIMER, station, (TIMER_ACK, ctx.ack_expiry))
            delivered = self._uplink_delivered(station)
            self.counters["fragments_sent"] += 1
        pending = self.pending.get(station)
        if pending is None or pending.epoch != epoch:
            return
        assert not transmitting or pending.epoch == ctx.epoch
        pending.extra_remaining -= 1
        if not (transmitting and delivered):
            pending.corrupted = True
        if pending.extra_remaining == 0:
            del self.pending[station]
            if bs_mac.reassemble_and_ack(self.schedule, pending, g) == "ack":
                self._enqueue_forward(pending.message, g)

    def _complete_uplink(self, station: int, msg: SdsMessage, g: int) -> None:
        """Single-fragment completion straight from the access burst."""
        if msg.kind == KIND_VOICE_SETUP:
            self.schedule.enqueue(
                DownlinkJob(
                    kind=JobKind.VOICE_ASSIGN,
                    station=station,
                    message=msg,
                    eligible_from=g + 1,
                    seq=self.schedule.next_seq(),
                )
            )
            return
        self.schedule.enqueue(
            DownlinkJob(
                kind=JobKind.ACK,
                station=station,
                message=msg,
                eligible_from=g + 1,
                seq=self.schedule.next_seq(),
            )
        )
        self._enqueue_forward(msg, g)

    def _enqueue_forward(self, msg: SdsMessage, g: int) -> None:
        if self.bs_delivered[msg.id]:
            return
        self.bs_delivered[msg.id] = True
        if msg.destination == NO_DESTINATION:
            return
        self.schedule.enqueue(
            DownlinkJob(
                kind=JobKind.FORWARD,
                station=msg.destination,
                message=msg,
                eligible_from=g + 1,
                seq=self.schedule.next_seq(),
                n_fragments=int(self.frags[msg.id]),
            )
        )

    def _downlink(self, g: int, now: float) -> None:
        job = bs_mac.schedule_downlink(self.schedule, g)
        if job is None:
            return
        if job.kind == JobKind.TEARDOWN:
            self.counters["teardowns"] += 1
            return
        if job.kind == JobKind.FORWARD:
            self.counters["forwards_sent"] += 1
            if self._downlink_delivered(job.station):
                job.fragments_sent += 1
                if job.fragments_sent == job.n_fragments:
                    self.schedule.queues[JobKind.FORWARD].popleft()
                    self.forward_complete[job.message.id] = now + SUBSLOT_DURATION_S
            else:
                job.retries += 1
                job.fragments_sent = 0
                if job.retries > self.retry_limit:
                    self.schedule.queues[JobKind.FORWARD].popleft()
                    self.counters["forward_failed"] += 1
            return
        ctx = self.contexts[job.station]
        if job.kind == JobKind.GRANT:
            granted = bs_mac.issue_grant(self.schedule, job.station, job.epoch, job.extra_fragments, g)
            self.counters["grants_sent"] += 1
            if (
                self._downlink_delivered(job.station)
                and ctx.state == MsState.AWAITING_GRANT
                and ctx.epoch == job.epoch
            ):
                ms_mac.on_grant(ctx, granted, self.ack_wait, g)
            return
        if job.kind == JobKind.VOICE_ASSIGN:
            delivered = self._downlink_delivered(job.station)
            if (
                delivered
                and ctx.current_message is job.message
                and ctx.state == MsState.AWAITING_GRANT
            ):
                ms_mac.on_ack_or_timeout(ctx, ms_mac.ACK_RECEIVED, self.retry_limit)
                self.counters["voice_completed"] += 1
                end_t = now + SUBSLOT_DURATION_S + self.sc.m_voice_dur[job.message.id]
                self.schedule.enqueue(
                    DownlinkJob(
                        kind=JobKind.TEARDOWN,
                        station=job.station,
                        message=job.message,
                        eligible_from=index_at_or_after(end_t),
                        seq=self.schedule.next_seq(),
                    )
                )
            return
        if job.kind == JobKind.ACK:
            self.counters["acks_sent"] += 1
            delivered = self._downlink_delivered(job.station)
            if (
                delivered
                and ctx.current_message is job.message
                and ctx.state in (MsState.AWAITING_ACK, MsState.AWAITING_GRANT)
            ):
                ms_mac.on_ack_or_timeout(ctx, ms_mac.ACK_RECEIVED, self.retry_limit)
                self._record_delivery(job.message, now + SUBSLOT_DURATION_S)
            return

    def _fire_timer(self, station: int, payload: tuple[int, int], now: float) -> None:
        kind, at_index = payload
        ctx = self.contexts[station]
        if kind == TIMER_WT:
            if ctx.state != MsState.AWAITING_GRANT or ctx.wt_expiry != at_index:
                return
            msg = ctx.current_message
            if ms_mac.on_wt_expiry(ctx, self.params[station], self.retry_streams[station], at_index) == ms_mac.MESSAGE_FAILED:
                if msg.kind == KIND_VOICE_SETUP:
                    self.counters["voice_blocked"] += 1
                self._record_drop(msg, metrics.CAUSE_NU, now)
        else:
            if ctx.state != MsState.AWAITING_ACK or ctx.ack_expiry != at_index:
                return
            msg = ctx.current_message
            if ms_mac.on_ack_or_timeout(ctx, ms_mac.ACK_TIMEOUT, self.retry_limit) == ms_mac.MESSAGE_FAILED:
                self._record_drop(msg, metrics.CAUSE_SDS_RETRY, now)

    # -- main loop ---------------------------------------------------------

    def run(self) -> RawRunResult:
        sc = self.sc
        for g in range(sc.n_subslots):
            now = time_of_index(g)
            frame = frame_of_index(g)
            self._uplink(g, frame, now)
            if frame != CONTROL_FRAME:
                self._downlink(g, now)
            while len(self.timers) and self.timers.peek_time() <= now:
                ev = self.timers.pop()
                self._fire_timer(ev.station, ev.payload, now)
        return RawRunResult(
            delivered_ids=np.array(self.delivered_ids, dtype=np.int64),
            delivered_close=np.array(self.delivered_close, dtype=np.float64),
            dropped_ids=np.array(self.dropped_ids, dtype=np.int64),
            dropped_cause=np.array(self.dropped_cause, dtype=np.uint8),
            dropped_time=np.array(self.dropped_time, dtype=np.float64),
            forward_complete=self.forward_complete,
            counters=dict(self.counters),
        )


def run_reference(sc: Scenario) -> RawRunResult:
    return ReferenceEngine(sc).run()
