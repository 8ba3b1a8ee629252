import pytest

from tetrasds import ms_mac
from tetrasds.ms_mac import (
    ACK_RECEIVED,
    ACK_TIMEOUT,
    DELIVERED,
    FULL_RETRY,
    MESSAGE_FAILED,
    RETRY,
    AccessParams,
    MsContext,
    MsState,
    fragments_needed,
    on_access_opportunity,
    on_ack_or_timeout,
    on_grant,
    on_reserved_subslot,
    on_wt_expiry,
)
from tetrasds.rng import KeyedStream, TAG_ACCESS_RETRY, channel_seed
from tetrasds.traffic import OutputQueue, SdsMessage


def make_ctx(n_messages=1, payload=800, gen=0.0):
    q = OutputQueue(owner=0)
    for i in range(n_messages):
        q.push(SdsMessage(i, 0, -1, payload, gen + i))
    return MsContext(station=0, queue=q)


def retry_stream():
    return KeyedStream(channel_seed(1, 0), TAG_ACCESS_RETRY, 0)


PARAMS = AccessParams(wt_frames=5, nu_max=5)


def test_fragments_needed_examples():
    assert fragments_needed(800, 92) == 9
    assert fragments_needed(8, 92) == 1
    assert fragments_needed(92, 92) == 1
    with pytest.raises(ValueError):
        fragments_needed(800, 0)
    with pytest.raises(ValueError):
        fragments_needed(0, 92)


def test_access_from_idle_emits_burst():
    ctx = make_ctx()
    burst = on_access_opportunity(ctx, 10, "A", PARAMS, 92, now_s=1.0)
    assert burst is not None
    assert burst.extra_fragments == 8
    assert ctx.state == MsState.AWAITING_GRANT
    assert ctx.attempts_used == 1
    assert ctx.wt_expiry == 10 + 5 * 2
    assert ctx.current_message.id == 0


def test_access_code_mismatch_is_silent():
    ctx = make_ctx()
    assert on_access_opportunity(ctx, 10, "B", PARAMS, 92, now_s=1.0) is None
    assert ctx.state == MsState.IDLE
    assert ctx.attempts_used == 0


def test_access_waits_for_retry_instant():
    ctx = make_ctx()
    on_access_opportunity(ctx, 10, "A", PARAMS, 92, now_s=1.0)
    # timer still running: no burst
    assert on_access_opportunity(ctx, 12, "A", PARAMS, 92, now_s=1.1) is None
    assert ctx.attempts_used == 1
    assert on_wt_expiry(ctx, PARAMS, retry_stream(), 20) == RETRY
    assert ctx.retry_from is not None and ctx.retry_from > 20
    # before the drawn instant: still no burst
    assert on_access_opportunity(ctx, ctx.retry_from - 1, "A", PARAMS, 92, now_s=2.0) is None
    burst = on_access_opportunity(ctx, ctx.retry_from, "A", PARAMS, 92, now_s=2.0)
    assert burst is not None and ctx.attempts_used == 2


def test_access_empty_or_future_queue():
    ctx = make_ctx(0)
    assert on_access_opportunity(ctx, 0, "A", PARAMS, 92, now_s=0.0) is None
    ctx2 = make_ctx(1, gen=50.0)
    assert on_access_opportunity(ctx2, 0, "A", PARAMS, 92, now_s=0.0) is None


def test_access_alignment_window():
    params = AccessParams(alignment_frames=4)
    ctx = make_ctx()
    stream = retry_stream()
    first = on_access_opportunity(ctx, 0, "A", params, 92, now_s=0.5, align_stream=stream)
    if first is None:
        assert ctx.align_from is not None and 0 <= ctx.align_from < 8
        assert (
            on_access_opportunity(ctx, ctx.align_from, "A", params, 92, now_s=0.5, align_stream=stream)
            is not None
        )
    else:
        assert ctx.align_from is None


def test_wt_expiry_retry_and_drop():
    ctx = make_ctx()
    on_access_opportunity(ctx, 0, "A", PARAMS, 92, now_s=0.0)
    ctx.attempts_used = 3
    assert on_wt_expiry(ctx, PARAMS, retry_stream(), 10) == RETRY
    ctx.attempts_used = 5
    ctx.wt_expiry = 20
    assert on_wt_expiry(ctx, PARAMS, retry_stream(), 20) == MESSAGE_FAILED
    assert ctx.state == MsState.IDLE and ctx.current_message is None


def test_wt_expiry_single_attempt_limit():
    params = AccessParams(wt_frames=5, nu_max=1)
    ctx = make_ctx()
    on_access_opportunity(ctx, 0, "A", params, 92, now_s=0.0)
    assert on_wt_expiry(ctx, params, retry_stream(), 10) == MESSAGE_FAILED


def test_retry_window_escalates():
    assert ms_mac.retry_window_frames(10, 1) == 10
    assert ms_mac.retry_window_frames(10, 2) == 20
    assert ms_mac.retry_window_frames(10, 3) == 40
    # ceilinged at 64 frames from there on
    assert ms_mac.retry_window_frames(10, 4) == 64
    assert ms_mac.retry_window_frames(10, 9) == 64
    # a spread above the ceiling keeps its base window
    assert ms_mac.retry_window_frames(100, 3) == 100


def test_grant_moves_to_reserved_sending():
    ctx = make_ctx()
    on_access_opportunity(ctx, 0, "A", PARAMS, 92, now_s=0.0)
    granted = list(range(4, 12))
    on_grant(ctx, granted, ack_wait_frames=4, now_index=2)
    assert ctx.state == MsState.SENDING_RESERVED
    assert ctx.fragments_remaining == 8
    assert ctx.wt_expiry is None


def test_grant_length_mismatch_is_structural_error():
    ctx = make_ctx()
    on_access_opportunity(ctx, 0, "A", PARAMS, 92, now_s=0.0)
    with pytest.raises(ValueError):
        on_grant(ctx, [4, 5], ack_wait_frames=4, now_index=2)


def test_empty_grant_goes_straight_to_ack_wait():
    ctx = make_ctx(payload=8)
    on_access_opportunity(ctx, 0, "A", PARAMS, 92, now_s=0.0)
    on_grant(ctx, [], ack_wait_frames=4, now_index=2)
    assert ctx.state == MsState.AWAITING_ACK
    assert ctx.ack_expiry == 2 + 4 * 2


def test_reserved_subslots_count_down_to_ack_wait():
    ctx = make_ctx()
    on_access_opportunity(ctx, 0, "A", PARAMS, 92, now_s=0.0)
    granted = list(range(4, 12))
    on_grant(ctx, granted, ack_wait_frames=4, now_index=2)
    for g in granted[:-1]:
        assert on_reserved_subslot(ctx, g, 4) is not None
        assert ctx.state == MsState.SENDING_RESERVED
    assert on_reserved_subslot(ctx, granted[-1], 4) is not None
    assert ctx.state == MsState.AWAITING_ACK
    assert ctx.ack_expiry == granted[-1] + 8


def test_ack_delivers():
    ctx = make_ctx()
    on_access_opportunity(ctx, 0, "A", PARAMS, 92, now_s=0.0)
    on_grant(ctx, list(range(4, 12)), 4, 2)
    for g in range(4, 12):
        on_reserved_subslot(ctx, g, 4)
    assert on_ack_or_timeout(ctx, ACK_RECEIVED, 3) == DELIVERED
    assert ctx.state == MsState.IDLE and ctx.current_message is None


def test_ack_timeout_full_retry_then_drop():
    ctx = make_ctx()
    msg = ctx.queue.pending[0]
    on_access_opportunity(ctx, 0, "A", PARAMS, 92, now_s=0.0)
    on_grant(ctx, list(range(4, 12)), 4, 2)
    for g in range(4, 12):
        on_reserved_subslot(ctx, g, 4)
    assert on_ack_or_timeout(ctx, ACK_TIMEOUT, 3) == FULL_RETRY
    assert msg.sds_retry_count == 1
    assert ctx.queue.pending[0] is msg  # back at the head
    assert ctx.state == MsState.IDLE

    msg.sds_retry_count = 3
    ctx.queue.pending.popleft()
    ctx.state = MsState.AWAITING_ACK
    ctx.current_message = msg
    assert on_ack_or_timeout(ctx, ACK_TIMEOUT, 3) == MESSAGE_FAILED


def test_single_fragment_ack_accepted_while_awaiting_grant():
    ctx = make_ctx(payload=8)
    on_access_opportunity(ctx, 0, "A", PARAMS, 92, now_s=0.0)
    assert ctx.state == MsState.AWAITING_GRANT
    assert on_ack_or_timeout(ctx, ACK_RECEIVED, 3) == DELIVERED


def test_params_validation():
    with pytest.raises(ValueError):
        AccessParams(wt_frames=0)
    with pytest.raises(ValueError):
        AccessParams(nu_max=16)
    with pytest.raises(ValueError):
        AccessParams(access_code="E")
    with pytest.raises(ValueError):
        AccessParams(alignment_frames=-1)
