"""Base-station side: opportunity marking, contention resolution, grants,
reassembly and the downlink queue.

The downlink serves one burst per payload subslot, strictly by class:
voice teardowns that have come due, then voice assignments, then reserved-
subslot grants, then acknowledgements, then forwarded short-data (including
the 1-byte feedback notifications).  Within a class service is FIFO.  A
forwarded message occupies consecutive service turns of its class, one
fragment per turn; any corrupted fragment restarts the whole message, up to
the same retry limit the uplink uses.
"""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass, field
from enum import IntEnum

from .tdma import CONTROL_FRAME, SUBSLOTS_PER_FRAME, frame_of_index
from .ms_mac import MacAccessBurst
from .traffic import SdsMessage

OUTCOME_IDLE = "idle"
OUTCOME_SUCCESS = "success"
OUTCOME_COLLISION = "collision"


class JobKind(IntEnum):
    TEARDOWN = 0
    VOICE_ASSIGN = 1
    GRANT = 2
    ACK = 3
    FORWARD = 4


@dataclass
class DownlinkJob:
    kind: JobKind
    station: int  # recipient
    message: SdsMessage | None
    eligible_from: int
    seq: int
    epoch: int = 0
    extra_fragments: int = 0
    # forward-job progress
    n_fragments: int = 0
    fragments_sent: int = 0
    retries: int = 0


@dataclass
class AccessOutcome:
    kind: str
    station: int | None = None
    burst: MacAccessBurst | None = None


@dataclass
class PendingUplink:
    """Reassembly state for the one in-progress grant of a station."""

    station: int
    epoch: int
    message: SdsMessage
    extra_remaining: int
    corrupted: bool = False


class BsSchedule:
    """Subslot bookings plus the downlink job queues."""

    def __init__(self) -> None:
        self.reserved: dict[int, tuple[int, int]] = {}
        self.alloc_hint = 0
        self._seq = 0
        self.queues: dict[JobKind, deque] = {
            JobKind.VOICE_ASSIGN: deque(),
            JobKind.GRANT: deque(),
            JobKind.ACK: deque(),
            JobKind.FORWARD: deque(),
        }
        self.teardowns: list[DownlinkJob] = []

    def next_seq(self) -> int:
        self._seq += 1
        return self._seq

    def enqueue(self, job: DownlinkJob) -> None:
        if job.kind == JobKind.TEARDOWN:
            self.teardowns.append(job)
        else:
            self.queues[job.kind].append(job)


def opportunity_code(index: int, pattern: str) -> str:
    """Access code of an opportunity, rotating with the absolute subslot
    position so the marking never depends on booking history."""
    return pattern[index % len(pattern)]


def station_code(station_index: int, pattern: str) -> str:
    """Stations cycle through the distinct codes of the rotation."""
    distinct = list(dict.fromkeys(pattern))
    return distinct[station_index % len(distinct)]


def mark_opportunities(
    pattern: str,
    horizon_subslots: int,
    schedule: BsSchedule | None = None,
    frame18_access: bool = False,
) -> dict[int, str]:
    """Code marking for every open opportunity inside the horizon."""
    if not pattern:
        raise ValueError("code rotation pattern must be nonempty")
    reserved = schedule.reserved if schedule is not None else {}
    marks: dict[int, str] = {}
    for g in range(horizon_subslots):
        if not frame18_access and frame_of_index(g) == CONTROL_FRAME:
            continue
        if g in reserved:
            continue
        marks[g] = opportunity_code(g, pattern)
    return marks


def resolve_access(bursts: list[MacAccessBurst], decisions: list[bool]) -> AccessOutcome:
    """Contention outcome of one opportunity: two requesters always destroy
    each other (no capture), a lone requester still faces the channel."""
    if len(bursts) != len(decisions):
        raise ValueError("one channel decision per burst is required")
    if not bursts:
        return AccessOutcome(OUTCOME_IDLE)
    if len(bursts) >= 2:
        return AccessOutcome(OUTCOME_COLLISION)
    if decisions[0]:
        return AccessOutcome(OUTCOME_SUCCESS, bursts[0].station, bursts[0])
    return AccessOutcome(OUTCOME_IDLE)


def issue_grant(
    schedule: BsSchedule,
    station: int,
    epoch: int,
    n_reserved: int,
    now_index: int,
) -> list[int]:
    """Book the earliest free uplink subslots from the frame after ``now``.

    Starts are non-decreasing across calls, so no free subslot is ever
    skipped; frame 18 and existing bookings are jumped over.
    """
    granted: list[int] = []
    if n_reserved == 0:
        return granted
    start = ((now_index // SUBSLOTS_PER_FRAME) + 1) * SUBSLOTS_PER_FRAME
    g = max(start, schedule.alloc_hint)
    while len(granted) < n_reserved:
        if frame_of_index(g) != CONTROL_FRAME and g not in schedule.reserved:
            schedule.reserved[g] = (station, epoch)
            granted.append(g)
        g += 1
    schedule.alloc_hint = granted[-1] + 1
    return granted


def reassemble_and_ack(
    schedule: BsSchedule,
    pending: PendingUplink,
    now_index: int,
) -> str:
    """Completion check once a grant's last subslot has passed.

    Every fragment (the one in the access burst included) must have come
    through; otherwise the partial message is discarded without a word and
    the station's ack timeout drives the retry.  Re-completions of an
    already-forwarded message are re-acknowledged but not re-forwarded;
    the forward bookkeeping lives with the engine.
    """
    if pending.extra_remaining != 0:
        raise ValueError("reassembly checked before the grant completed")
    if pending.corrupted:
        return "discard"
    schedule.enqueue(
        DownlinkJob(
            kind=JobKind.ACK,
            station=pending.station,
            message=pending.message,
            eligible_from=now_index + 1,
            seq=schedule.next_seq(),
        )
    )
    return "ack"


def schedule_downlink(schedule: BsSchedule, index: int) -> DownlinkJob | None:
    """Pick the burst for one downlink subslot, or None when idle.

    Non-forward jobs are popped; a forward job stays at its queue head
    until the caller reports the whole message sent or abandoned.
    """
    if frame_of_index(index) == CONTROL_FRAME:
        return None
    due = [j for j in schedule.teardowns if j.eligible_from <= index]
    if due:
        job = min(due, key=lambda j: j.seq)
        schedule.teardowns.remove(job)
        return job
    for kind in (JobKind.VOICE_ASSIGN, JobKind.GRANT, JobKind.ACK):
        q = schedule.queues[kind]
        if q and q[0].eligible_from <= index:
            return q.popleft()
    q = schedule.queues[JobKind.FORWARD]
    if q and q[0].eligible_from <= index:
        return q[0]
    return None
