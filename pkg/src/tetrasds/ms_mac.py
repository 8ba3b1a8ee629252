"""Station-side random access state machine.

A station cycles through four states per message: Idle (nothing in
flight), AwaitingGrant (access request sent, response timer running),
SendingReserved (granted subslots being filled with fragments) and
AwaitingAck.  The request burst carries the first fragment, so a message
that fits a single subslot skips the reserved phase and is acknowledged
straight from AwaitingGrant.

Timer conventions, shared with both engines: a timer armed at subslot g
with a span of k frames fires in the timer phase of subslot g + 2k, i.e.
after that subslot's uplink and downlink activity.  A response landing in
the downlink phase of the firing subslot still wins.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from enum import IntEnum

from .tdma import SUBSLOTS_PER_FRAME
from .traffic import OutputQueue, SdsMessage


class MsState(IntEnum):
    IDLE = 0
    AWAITING_GRANT = 1
    SENDING_RESERVED = 2
    AWAITING_ACK = 3


# Operation outcomes.
RETRY = "retry"
MESSAGE_FAILED = "message_failed"
DELIVERED = "delivered"
FULL_RETRY = "full_retry"

ACK_RECEIVED = "ack_received"
ACK_TIMEOUT = "ack_timeout"

ACCESS_CODES = "ABCD"

# After the k-th response timeout the retry lands uniformly inside
# spread * 2^(k-1) frames, ceilinged at RETRY_WINDOW_CAP_FRAMES.  Colliding
# stations must desynchronize or they would collide again forever; the
# escalating window keeps first retries cheap while persistent losers back
# off hard, which is what stabilizes the slotted contention under
# overload.  The spread is deliberately independent of the waiting time; a
# longer waiting time already thins the attempt rate of backlogged
# stations on its own.
DEFAULT_RETRY_SPREAD_FRAMES = 10
RETRY_WINDOW_CAP_FRAMES = 64


def retry_window_frames(spread_frames: int, attempts_used: int) -> int:
    """Backoff window after the attempts_used-th failed request."""
    window = spread_frames << min(attempts_used - 1, 60)
    return min(window, max(spread_frames, RETRY_WINDOW_CAP_FRAMES))


@dataclass(frozen=True)
class AccessParams:
    wt_frames: int = 5
    nu_max: int = 5
    access_code: str = "A"
    retry_spread_frames: int | None = None
    # A fresh access cycle aligns onto a uniformly drawn opportunity within
    # this many frames instead of the very next one.  Without it, every
    # station whose message arrived during a reserved stretch fires at the
    # first open subslot after it, and those pile-ups dominate the
    # collision rate.  Zero sends at the next matching opportunity.
    alignment_frames: int = 0

    def __post_init__(self) -> None:
        if not 1 <= self.wt_frames <= 15:
            raise ValueError(f"wt_frames must be in 1..15, got {self.wt_frames}")
        if not 1 <= self.nu_max <= 15:
            raise ValueError(f"nu_max must be in 1..15, got {self.nu_max}")
        if self.access_code not in ACCESS_CODES:
            raise ValueError(f"access code must be one of A-D, got {self.access_code!r}")
        if self.alignment_frames < 0:
            raise ValueError(f"alignment_frames must be >= 0, got {self.alignment_frames}")

    @property
    def spread_frames(self) -> int:
        if self.retry_spread_frames is None:
            return DEFAULT_RETRY_SPREAD_FRAMES
        return self.retry_spread_frames


@dataclass
class MacAccessBurst:
    station: int
    epoch: int
    message: SdsMessage
    extra_fragments: int


@dataclass
class FragmentBurst:
    station: int
    epoch: int
    message: SdsMessage


@dataclass
class MsContext:
    station: int
    queue: OutputQueue
    state: MsState = MsState.IDLE
    current_message: SdsMessage | None = None
    attempts_used: int = 0
    epoch: int = 0
    pending_extra_fragments: int = 0
    wt_expiry: int | None = None
    retry_from: int | None = None
    ack_expiry: int | None = None
    align_from: int | None = None
    reserved_schedule: list[int] = field(default_factory=list)
    fragments_remaining: int = 0

    def _reset_idle(self) -> None:
        self.state = MsState.IDLE
        self.current_message = None
        self.attempts_used = 0
        self.pending_extra_fragments = 0
        self.wt_expiry = None
        self.retry_from = None
        self.ack_expiry = None
        self.reserved_schedule = []
        self.fragments_remaining = 0


def fragments_needed(payload_bits: int, subslot_capacity_bits: int) -> int:
    """Subslot-sized fragments for a payload; the first one rides in the
    access request itself."""
    if subslot_capacity_bits < 1:
        raise ValueError(f"subslot capacity must be >= 1 bit, got {subslot_capacity_bits}")
    if payload_bits < 1:
        raise ValueError(f"payload must be >= 1 bit, got {payload_bits}")
    return -(-payload_bits // subslot_capacity_bits)


def on_access_opportunity(
    ctx: MsContext,
    index: int,
    opportunity_code: str,
    params: AccessParams,
    subslot_capacity_bits: int,
    now_s: float,
    align_stream=None,
) -> MacAccessBurst | None:
    """Transmit an access request at an open opportunity, if due.

    Fires for an idle station with a sendable queue head, or for a station
    whose response timer has lapsed and whose randomized retry instant has
    been reached.  Anything else (code mismatch, timer still running,
    alignment pending, reserved/ack phases) is a silent no-op.
    """
    if opportunity_code != params.access_code:
        return None

    if ctx.state == MsState.IDLE:
        if not ctx.queue.pending or ctx.queue.pending[0].generated_at > now_s:
            ctx.align_from = None  # nothing sendable: the contention episode ends
            return None
        if params.alignment_frames > 0:
            if ctx.align_from is None:
                window = params.alignment_frames * SUBSLOTS_PER_FRAME
                ctx.align_from = index + int(math.floor(align_stream.next_u01() * window))
            if index < ctx.align_from:
                return None
        ctx.align_from = None
        ctx.current_message = ctx.queue.pending.popleft()
        ctx.attempts_used = 0
    elif ctx.state == MsState.AWAITING_GRANT:
        if ctx.retry_from is None or index < ctx.retry_from:
            return None
    else:
        return None

    msg = ctx.current_message
    assert msg is not None
    ctx.attempts_used += 1
    assert ctx.attempts_used <= params.nu_max
    ctx.epoch += 1
    ctx.pending_extra_fragments = fragments_needed(msg.payload_bits, subslot_capacity_bits) - 1
    ctx.state = MsState.AWAITING_GRANT
    ctx.wt_expiry = index + params.wt_frames * SUBSLOTS_PER_FRAME
    ctx.retry_from = None
    return MacAccessBurst(ctx.station, ctx.epoch, msg, ctx.pending_extra_fragments)


def on_wt_expiry(ctx: MsContext, params: AccessParams, retry_stream, now_index: int) -> str:
    """Response timer ran out: plan another attempt or give the message up.

    The retry window scales with the number of attempts already used, so
    repeat losers spread out further and further.
    """
    if ctx.state != MsState.AWAITING_GRANT:
        raise ValueError("wt expiry outside of the grant-waiting state")
    ctx.wt_expiry = None
    if ctx.attempts_used < params.nu_max:
        window = max(1, retry_window_frames(params.spread_frames, ctx.attempts_used) * SUBSLOTS_PER_FRAME)
        ctx.retry_from = now_index + 1 + int(math.floor(retry_stream.next_u01() * window))
        return RETRY
    ctx._reset_idle()
    return MESSAGE_FAILED


def on_grant(ctx: MsContext, granted: list[int], ack_wait_frames: int, now_index: int) -> None:
    """Reserved-subslot assignment received while waiting for it."""
    if ctx.state != MsState.AWAITING_GRANT:
        raise ValueError("grant outside of the grant-waiting state")
    if len(granted) != ctx.pending_extra_fragments:
        raise ValueError(
            f"grant length {len(granted)} does not match the requested "
            f"{ctx.pending_extra_fragments} subslots"
        )
    ctx.wt_expiry = None
    ctx.retry_from = None
    if granted:
        ctx.state = MsState.SENDING_RESERVED
        ctx.reserved_schedule = list(granted)
        ctx.fragments_remaining = len(granted)
    else:
        ctx.state = MsState.AWAITING_ACK
        ctx.ack_expiry = now_index + ack_wait_frames * SUBSLOTS_PER_FRAME


def on_reserved_subslot(ctx: MsContext, index: int, ack_wait_frames: int) -> FragmentBurst | None:
    """Send one fragment in an owned subslot; arm the ack timer after the
    last one."""
    if ctx.state != MsState.SENDING_RESERVED:
        return None
    msg = ctx.current_message
    assert msg is not None
    ctx.fragments_remaining -= 1
    if ctx.fragments_remaining == 0:
        ctx.state = MsState.AWAITING_ACK
        ctx.ack_expiry = index + ack_wait_frames * SUBSLOTS_PER_FRAME
        ctx.reserved_schedule = []
    return FragmentBurst(ctx.station, ctx.epoch, msg)


def on_ack_or_timeout(ctx: MsContext, outcome: str, sds_retry_limit: int) -> str:
    """Close the message on an acknowledgement, or restart/drop on timeout.

    An acknowledgement is also accepted while still AwaitingGrant: a
    single-fragment message is complete at the base station right after the
    access burst, so its acknowledgement doubles as the grant response.
    """
    if outcome == ACK_RECEIVED:
        if ctx.state not in (MsState.AWAITING_ACK, MsState.AWAITING_GRANT):
            raise ValueError("ack outside of a waiting state")
        ctx._reset_idle()
        return DELIVERED
    if outcome != ACK_TIMEOUT:
        raise ValueError(f"unknown outcome {outcome!r}")
    if ctx.state != MsState.AWAITING_ACK:
        raise ValueError("ack timeout outside of the ack-waiting state")
    msg = ctx.current_message
    assert msg is not None
    msg.sds_retry_count += 1
    if msg.sds_retry_count <= sds_retry_limit:
        ctx.queue.push_front(msg)
        ctx._reset_idle()
        return FULL_RETRY
    ctx._reset_idle()
    return MESSAGE_FAILED
