import pytest

from tetrasds.bs_mac import (
    BsSchedule,
    DownlinkJob,
    JobKind,
    OUTCOME_COLLISION,
    OUTCOME_IDLE,
    OUTCOME_SUCCESS,
    PendingUplink,
    issue_grant,
    mark_opportunities,
    opportunity_code,
    reassemble_and_ack,
    resolve_access,
    schedule_downlink,
    station_code,
)
from tetrasds.ms_mac import MacAccessBurst
from tetrasds.tdma import SUBSLOTS_PER_FRAME, frame_of_index
from tetrasds.traffic import SdsMessage


def msg(i=0):
    return SdsMessage(i, 0, -1, 800, 0.0)


def burst(station, epoch=1, extra=8):
    return MacAccessBurst(station, epoch, msg(), extra)


def test_single_code_marks_everything():
    marks = mark_opportunities("A", 72)
    assert set(marks.values()) == {"A"}
    # frame 18 positions carry no mark
    assert all(frame_of_index(g) != 18 for g in marks)
    assert len(marks) == 68  # 36 per multiframe minus the two control-frame subslots


def test_rotation_alternates():
    marks = mark_opportunities("AB", 16)
    codes = [marks[g] for g in sorted(marks)]
    assert codes == ["A", "B"] * 8


def test_reserved_subslots_not_marked():
    sched = BsSchedule()
    sched.reserved[4] = (0, 1)
    marks = mark_opportunities("A", 8, sched)
    assert 4 not in marks and 5 in marks


def test_empty_pattern_rejected():
    with pytest.raises(ValueError):
        mark_opportunities("", 8)


def test_station_codes_cycle_over_pattern():
    assert station_code(0, "AB") == "A"
    assert station_code(1, "AB") == "B"
    assert station_code(2, "AB") == "A"
    assert station_code(5, "A") == "A"
    assert opportunity_code(3, "ABCD") == "D"


def test_resolve_access_outcomes():
    assert resolve_access([], []).kind == OUTCOME_IDLE
    assert resolve_access([burst(1), burst(2)], [True, True]).kind == OUTCOME_COLLISION
    ok = resolve_access([burst(3)], [True])
    assert ok.kind == OUTCOME_SUCCESS and ok.station == 3
    assert resolve_access([burst(3)], [False]).kind == OUTCOME_IDLE
    with pytest.raises(ValueError):
        resolve_access([burst(1)], [])


def test_issue_grant_starts_next_frame():
    sched = BsSchedule()
    granted = issue_grant(sched, station=7, epoch=1, n_reserved=8, now_index=1)
    # frame after subslot 1 starts at subslot 2; eight consecutive subslots
    assert granted == [2, 3, 4, 5, 6, 7, 8, 9]
    assert all(sched.reserved[g] == (7, 1) for g in granted)


def test_issue_grant_empty():
    sched = BsSchedule()
    assert issue_grant(sched, 1, 1, 0, 5) == []


def test_issue_grant_skips_existing_bookings():
    sched = BsSchedule()
    issue_grant(sched, station=1, epoch=1, n_reserved=2, now_index=0)  # books 2,3
    granted = issue_grant(sched, station=2, epoch=1, n_reserved=3, now_index=0)
    assert granted == [4, 5, 6]


def test_issue_grant_jumps_control_frame():
    sched = BsSchedule()
    # subslot 31 sits in frame 16; ask for enough to spill past frame 17
    granted = issue_grant(sched, 1, 1, 4, now_index=31)
    assert granted == [32, 33, 36, 37]
    assert all(frame_of_index(g) != 18 for g in granted)


def test_reassembly_acks_only_complete_messages():
    sched = BsSchedule()
    clean = PendingUplink(1, 1, msg(), extra_remaining=0)
    assert reassemble_and_ack(sched, clean, 10) == "ack"
    assert len(sched.queues[JobKind.ACK]) == 1
    dirty = PendingUplink(1, 2, msg(1), extra_remaining=0, corrupted=True)
    assert reassemble_and_ack(sched, dirty, 12) == "discard"
    assert len(sched.queues[JobKind.ACK]) == 1
    with pytest.raises(ValueError):
        reassemble_and_ack(sched, PendingUplink(1, 3, msg(2), extra_remaining=2), 14)


def _job(sched, kind, eligible, **kw):
    job = DownlinkJob(kind=kind, station=0, message=msg(), eligible_from=eligible, seq=sched.next_seq(), **kw)
    sched.enqueue(job)
    return job


def test_downlink_priority_ack_before_forward():
    sched = BsSchedule()
    fw = _job(sched, JobKind.FORWARD, 0, n_fragments=9)
    ack = _job(sched, JobKind.ACK, 0)
    assert schedule_downlink(sched, 5) is ack
    assert schedule_downlink(sched, 6) is fw


def test_downlink_empty_and_control_frame():
    sched = BsSchedule()
    assert schedule_downlink(sched, 5) is None
    _job(sched, JobKind.ACK, 0)
    control = 17 * SUBSLOTS_PER_FRAME  # first subslot of frame 18
    assert frame_of_index(control) == 18
    assert schedule_downlink(sched, control) is None


def test_downlink_fifo_within_class():
    sched = BsSchedule()
    first = _job(sched, JobKind.ACK, 0)
    second = _job(sched, JobKind.ACK, 0)
    assert schedule_downlink(sched, 3) is first
    assert schedule_downlink(sched, 3) is second


def test_downlink_eligibility_holds_job_back():
    sched = BsSchedule()
    _job(sched, JobKind.GRANT, eligible=10, extra_fragments=8)
    assert schedule_downlink(sched, 9) is None
    assert schedule_downlink(sched, 10) is not None


def test_downlink_teardown_served_first_when_due():
    sched = BsSchedule()
    _job(sched, JobKind.VOICE_ASSIGN, 0)
    td = _job(sched, JobKind.TEARDOWN, 4)
    assert schedule_downlink(sched, 3).kind == JobKind.VOICE_ASSIGN
    _job(sched, JobKind.VOICE_ASSIGN, 0)
    assert schedule_downlink(sched, 4) is td


def test_forward_stays_at_head_until_done():
    sched = BsSchedule()
    fw = _job(sched, JobKind.FORWARD, 0, n_fragments=9)
    for _ in range(3):
        assert schedule_downlink(sched, 2) is fw
    assert len(sched.queues[JobKind.FORWARD]) == 1
