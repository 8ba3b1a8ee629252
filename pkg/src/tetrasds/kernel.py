"""Array engine: the hot subslot loop over flat per-station state.

Semantically a clone of the reference engine (see engine.py for the
ordering contract); everything lives in numpy arrays so the loop compiles
under numba.  Setting ``TETRASDS_DISABLE_NUMBA=1`` (or a missing numba)
runs the very same function interpreted, which is orders of magnitude
slower but bit-identical; the equivalence suite and the benchmark lean on
that.

Layout notes.  Stations carry parallel state arrays indexed by global
station id.  Per-station output queues are a cursor into the pre-sorted
message table plus a single front slot for the one message an ack timeout
can push back.  The downlink is four ring buffers (voice assignments,
grants, acks, forwards) plus a teardown pool; draws for channel decisions
and retry spreading are counter-keyed per station, so consumption order
cannot drift between engines.
"""

from __future__ import annotations

import os

import numpy as np

from . import rng
from .scenario import RawRunResult, Scenario
from .tdma import (
    CONTROL_FRAME,
    FRAME_DURATION_S,
    FRAMES_PER_MULTIFRAME,
    SUBSLOT_DURATION_S,
    SUBSLOTS_PER_FRAME,
)
from .traffic import KIND_VOICE_SETUP

# state codes, matching ms_mac.MsState
_IDLE = 0
_AWAIT_GRANT = 1
_SEND_RESERVED = 2
_AWAIT_ACK = 3

# drop cause codes, matching metrics.CAUSE_CODE
_CAUSE_HOLDING = 0
_CAUSE_NU = 1
_CAUSE_SDS = 2

# counter slots
CTR_ATTEMPTS = 0
CTR_COLLISION_SLOTS = 1
CTR_SUCCESSES = 2
CTR_FRAGMENTS = 3
CTR_GRANTS = 4
CTR_ACKS = 5
CTR_FORWARDS = 6
CTR_FORWARD_FAILED = 7
CTR_VOICE_COMPLETED = 8
CTR_VOICE_BLOCKED = 9
CTR_TEARDOWNS = 10
N_COUNTERS = 11

COUNTER_NAMES = {
    "access_attempts": CTR_ATTEMPTS,
    "access_collision_slots": CTR_COLLISION_SLOTS,
    "access_successes": CTR_SUCCESSES,
    "fragments_sent": CTR_FRAGMENTS,
    "grants_sent": CTR_GRANTS,
    "acks_sent": CTR_ACKS,
    "forwards_sent": CTR_FORWARDS,
    "forward_failed": CTR_FORWARD_FAILED,
    "voice_completed": CTR_VOICE_COMPLETED,
    "voice_blocked": CTR_VOICE_BLOCKED,
    "teardowns": CTR_TEARDOWNS,
}

_KIND_VOICE = KIND_VOICE_SETUP
_TAG_UL = rng.TAG_CHANNEL_UPLINK
_TAG_DL = rng.TAG_CHANNEL_DOWNLINK
_TAG_RETRY = rng.TAG_ACCESS_RETRY


def _numba_enabled() -> bool:
    if os.environ.get("TETRASDS_DISABLE_NUMBA", "") == "1":
        return False
    try:
        import numba  # noqa: F401
    except ImportError:
        return False
    return True


USING_NUMBA = _numba_enabled()


def _time_of(g):
    return (g >> 1) * FRAME_DURATION_S + (g & 1) * SUBSLOT_DURATION_S


def _frame_of(g):
    return (g >> 1) % FRAMES_PER_MULTIFRAME + 1


def _index_at_or_after(t):
    if t <= 0.0:
        return 0
    guess = 2 * int(t / FRAME_DURATION_S)
    while _time_of(guess) < t:
        guess += 1
    while guess > 0 and _time_of(guess - 1) >= t:
        guess -= 1
    return guess


def _run_loop(
    # timeline / protocol scalars
    n_subslots,
    n_stations,
    wt_subslots,
    retry_window_subslots,
    retry_window_cap_subslots,
    align_window_subslots,
    nu_max,
    ack_wait_subslots,
    sds_retry_limit,
    frame18_access,
    chan_seed,
    pattern,  # uint8 codes
    # stations
    s_code,
    s_key,
    s_perr,
    s_msg_lo,
    s_msg_hi,
    # messages
    m_kind,
    m_dest,
    m_gen,
    m_frags,
    m_deadline,
    m_voice_dur,
    m_retry,
    # mutable station state
    st_state,
    st_cur,
    st_attempts,
    st_epoch,
    st_wt_fire,
    st_retry_from,
    st_ack_fire,
    st_align,
    st_frag_rem,
    st_front,
    st_arr_head,
    cnt_ul,
    cnt_dl,
    cnt_retry,
    # base station state
    ul_owner,
    ul_epoch,
    bs_pend_epoch,
    bs_pend_msg,
    bs_pend_rem,
    bs_pend_bad,
    bs_delivered,
    # downlink rings: assign, grant, ack share the field layout
    q_station,
    q_msg,
    q_epoch,
    q_extra,
    q_elig,
    q_head,
    q_tail,
    f_msg,
    f_dest,
    f_nfrags,
    f_sent,
    f_retries,
    f_elig,
    f_head_tail,
    td_elig,
    td_station,
    td_order,
    td_active,
    # outputs
    out_del_msg,
    out_del_t,
    out_drop_msg,
    out_drop_cause,
    out_drop_t,
    fwd_complete,
    counters,
):
    """One full run.  Returns (n_delivered, n_dropped, error_code)."""
    q_cap = q_station.shape[1]
    f_cap = f_msg.shape[0]
    td_cap = td_elig.shape[0]
    plen = len(pattern)
    alloc_hint = 0
    owner_cap = ul_owner.shape[0]
    n_del = 0
    n_drop = 0
    td_count = 0
    td_min_elig = np.int64(2**62)
    td_next_order = 0
    error = 0

    for g in range(n_subslots):
        now = _time_of(g)
        frame = _frame_of(g)
        close_t = now + SUBSLOT_DURATION_S

        # ---------------- uplink ----------------
        owner = ul_owner[g]
        if owner >= 0:
            e = ul_epoch[g]
            s = owner
            transmitting = st_state[s] == _SEND_RESERVED and st_epoch[s] == e
            delivered = False
            if transmitting:
                st_frag_rem[s] -= 1
                if st_frag_rem[s] == 0:
                    st_state[s] = _AWAIT_ACK
                    st_ack_fire[s] = g + ack_wait_subslots
                u = _keyed_u01(chan_seed, _TAG_UL, s_key[s], cnt_ul[s])
                cnt_ul[s] += 1
                delivered = u >= s_perr[s]
                counters[CTR_FRAGMENTS] += 1
            if bs_pend_epoch[s] == e:
                bs_pend_rem[s] -= 1
                if not (transmitting and delivered):
                    bs_pend_bad[s] = 1
                if bs_pend_rem[s] == 0:
                    bs_pend_epoch[s] = -1
                    if bs_pend_bad[s] == 0:
                        msg = bs_pend_msg[s]
                        # ack first, then the forwarding job
                        if q_tail[2] - q_head[2] >= q_cap:
                            error = 1
                            break
                        slot = q_tail[2] % q_cap
                        q_station[2, slot] = s
                        q_msg[2, slot] = msg
                        q_elig[2, slot] = g + 1
                        q_tail[2] += 1
                        if bs_delivered[msg] == 0:
                            bs_delivered[msg] = 1
                            if m_dest[msg] >= 0:
                                if f_head_tail[1] - f_head_tail[0] >= f_cap:
                                    error = 1
                                    break
                                fslot = f_head_tail[1] % f_cap
                                f_msg[fslot] = msg
                                f_dest[fslot] = m_dest[msg]
                                f_nfrags[fslot] = m_frags[msg]
                                f_sent[fslot] = 0
                                f_retries[fslot] = 0
                                f_elig[fslot] = g + 1
                                f_head_tail[1] += 1
        elif frame != CONTROL_FRAME or frame18_access:
            code = pattern[g % plen]
            n_cont = 0
            first = -1
            first_delivered = False
            for s in range(n_stations):
                # purge expired queued messages (queues are deadline-sorted)
                if st_front[s] >= 0 and m_deadline[st_front[s]] < now:
                    out_drop_msg[n_drop] = st_front[s]
                    out_drop_cause[n_drop] = _CAUSE_HOLDING
                    out_drop_t[n_drop] = now
                    n_drop += 1
                    st_front[s] = -1
                while st_arr_head[s] < s_msg_hi[s] and m_deadline[st_arr_head[s]] < now:
                    out_drop_msg[n_drop] = st_arr_head[s]
                    out_drop_cause[n_drop] = _CAUSE_HOLDING
                    out_drop_t[n_drop] = now
                    n_drop += 1
                    st_arr_head[s] += 1
                if s_code[s] != code:
                    continue
                state = st_state[s]
                if state == _IDLE:
                    # promote the queue head if one has been generated
                    if st_front[s] >= 0:
                        msg = st_front[s]
                        promoted_from_front = True
                    elif st_arr_head[s] < s_msg_hi[s]:
                        msg = st_arr_head[s]
                        promoted_from_front = False
                    else:
                        st_align[s] = -1
                        continue
                    if m_gen[msg] > now:
                        st_align[s] = -1
                        continue
                    if align_window_subslots > 0:
                        if st_align[s] < 0:
                            u = _keyed_u01(chan_seed, _TAG_RETRY, s_key[s], cnt_retry[s])
                            cnt_retry[s] += 1
                            st_align[s] = g + int(u * align_window_subslots)
                        if g < st_align[s]:
                            continue
                    st_align[s] = -1
                    if promoted_from_front:
                        st_front[s] = -1
                    else:
                        st_arr_head[s] += 1
                    st_cur[s] = msg
                    st_attempts[s] = 0
                elif state == _AWAIT_GRANT:
                    if st_retry_from[s] < 0 or g < st_retry_from[s]:
                        continue
                else:
                    continue
                st_attempts[s] += 1
                st_epoch[s] += 1
                st_state[s] = _AWAIT_GRANT
                st_wt_fire[s] = g + wt_subslots
                st_retry_from[s] = -1
                u = _keyed_u01(chan_seed, _TAG_UL, s_key[s], cnt_ul[s])
                cnt_ul[s] += 1
                if n_cont == 0:
                    first = s
                    first_delivered = u >= s_perr[s]
                n_cont += 1
            if n_cont > 0:
                counters[CTR_ATTEMPTS] += n_cont
                if n_cont >= 2:
                    counters[CTR_COLLISION_SLOTS] += 1
                elif first_delivered:
                    counters[CTR_SUCCESSES] += 1
                    s = first
                    msg = st_cur[s]
                    extra = m_frags[msg] - 1
                    if extra == 0:
                        kind_q = 0 if m_kind[msg] == _KIND_VOICE else 2
                        if q_tail[kind_q] - q_head[kind_q] >= q_cap:
                            error = 1
                            break
                        slot = q_tail[kind_q] % q_cap
                        q_station[kind_q, slot] = s
                        q_msg[kind_q, slot] = msg
                        q_elig[kind_q, slot] = g + 1
                        q_tail[kind_q] += 1
                        if m_kind[msg] != _KIND_VOICE:
                            if bs_delivered[msg] == 0:
                                bs_delivered[msg] = 1
                                if m_dest[msg] >= 0:
                                    if f_head_tail[1] - f_head_tail[0] >= f_cap:
                                        error = 1
                                        break
                                    fslot = f_head_tail[1] % f_cap
                                    f_msg[fslot] = msg
                                    f_dest[fslot] = m_dest[msg]
                                    f_nfrags[fslot] = m_frags[msg]
                                    f_sent[fslot] = 0
                                    f_retries[fslot] = 0
                                    f_elig[fslot] = g + 1
                                    f_head_tail[1] += 1
                    else:
                        bs_pend_epoch[s] = st_epoch[s]
                        bs_pend_msg[s] = msg
                        bs_pend_rem[s] = extra
                        bs_pend_bad[s] = 0
                        if q_tail[1] - q_head[1] >= q_cap:
                            error = 1
                            break
                        slot = q_tail[1] % q_cap
                        q_station[1, slot] = s
                        q_msg[1, slot] = msg
                        q_epoch[1, slot] = st_epoch[s]
                        q_extra[1, slot] = extra
                        q_elig[1, slot] = ((g // SUBSLOTS_PER_FRAME) + 1) * SUBSLOTS_PER_FRAME
                        q_tail[1] += 1

        # ---------------- downlink ----------------
        if frame != CONTROL_FRAME:
            served = False
            if td_count > 0 and g >= td_min_elig:
                best = -1
                best_order = np.int64(2**62)
                for i in range(td_cap):
                    if td_active[i] == 1 and td_elig[i] <= g and td_order[i] < best_order:
                        best = i
                        best_order = td_order[i]
                if best >= 0:
                    td_active[best] = 0
                    td_count -= 1
                    counters[CTR_TEARDOWNS] += 1
                    served = True
                    td_min_elig = np.int64(2**62)
                    for i in range(td_cap):
                        if td_active[i] == 1 and td_elig[i] < td_min_elig:
                            td_min_elig = td_elig[i]
            if not served:
                for kind_q in range(3):  # assign, grant, ack
                    if q_head[kind_q] < q_tail[kind_q]:
                        slot = q_head[kind_q] % q_cap
                        if q_elig[kind_q, slot] > g:
                            continue
                        q_head[kind_q] += 1
                        s = q_station[kind_q, slot]
                        msg = q_msg[kind_q, slot]
                        u = _keyed_u01(chan_seed, _TAG_DL, s_key[s], cnt_dl[s])
                        cnt_dl[s] += 1
                        delivered = u >= s_perr[s]
                        if kind_q == 0:
                            if delivered and st_cur[s] == msg and st_state[s] == _AWAIT_GRANT:
                                st_state[s] = _IDLE
                                st_cur[s] = -1
                                st_attempts[s] = 0
                                st_wt_fire[s] = -1
                                st_retry_from[s] = -1
                                st_ack_fire[s] = -1
                                st_frag_rem[s] = 0
                                counters[CTR_VOICE_COMPLETED] += 1
                                if td_count >= td_cap:
                                    error = 1
                                    break
                                free = -1
                                for i in range(td_cap):
                                    if td_active[i] == 0:
                                        free = i
                                        break
                                end_t = close_t + m_voice_dur[msg]
                                td_elig[free] = _index_at_or_after(end_t)
                                td_station[free] = s
                                td_order[free] = td_next_order
                                td_active[free] = 1
                                td_next_order += 1
                                td_count += 1
                                if td_elig[free] < td_min_elig:
                                    td_min_elig = td_elig[free]
                        elif kind_q == 1:
                            counters[CTR_GRANTS] += 1
                            n_res = q_extra[1, slot]
                            epoch = q_epoch[1, slot]
                            start = ((g // SUBSLOTS_PER_FRAME) + 1) * SUBSLOTS_PER_FRAME
                            p = start if start > alloc_hint else alloc_hint
                            granted_first = -1
                            granted_last = -1
                            n_got = 0
                            while n_got < n_res:
                                if p >= owner_cap:
                                    error = 2
                                    break
                                if _frame_of(p) != CONTROL_FRAME and ul_owner[p] < 0:
                                    ul_owner[p] = s
                                    ul_epoch[p] = epoch
                                    if n_got == 0:
                                        granted_first = p
                                    granted_last = p
                                    n_got += 1
                                p += 1
                            if error != 0:
                                break
                            alloc_hint = granted_last + 1
                            if delivered and st_state[s] == _AWAIT_GRANT and st_epoch[s] == epoch:
                                st_state[s] = _SEND_RESERVED
                                st_frag_rem[s] = n_res
                                st_wt_fire[s] = -1
                                st_retry_from[s] = -1
                        else:
                            counters[CTR_ACKS] += 1
                            if (
                                delivered
                                and st_cur[s] == msg
                                and (st_state[s] == _AWAIT_ACK or st_state[s] == _AWAIT_GRANT)
                            ):
                                st_state[s] = _IDLE
                                st_cur[s] = -1
                                st_attempts[s] = 0
                                st_wt_fire[s] = -1
                                st_retry_from[s] = -1
                                st_ack_fire[s] = -1
                                st_frag_rem[s] = 0
                                out_del_msg[n_del] = msg
                                out_del_t[n_del] = close_t
                                n_del += 1
                        served = True
                        break
                if error != 0:
                    break
            if not served:
                if f_head_tail[0] < f_head_tail[1]:
                    fslot = f_head_tail[0] % f_cap
                    if f_elig[fslot] <= g:
                        dest = f_dest[fslot]
                        counters[CTR_FORWARDS] += 1
                        u = _keyed_u01(chan_seed, _TAG_DL, s_key[dest], cnt_dl[dest])
                        cnt_dl[dest] += 1
                        if u >= s_perr[dest]:
                            f_sent[fslot] += 1
                            if f_sent[fslot] == f_nfrags[fslot]:
                                f_head_tail[0] += 1
                                fwd_complete[f_msg[fslot]] = close_t
                        else:
                            f_retries[fslot] += 1
                            f_sent[fslot] = 0
                            if f_retries[fslot] > sds_retry_limit:
                                f_head_tail[0] += 1
                                counters[CTR_FORWARD_FAILED] += 1

        # ---------------- timers ----------------
        for s in range(n_stations):
            if st_wt_fire[s] == g and st_state[s] == _AWAIT_GRANT:
                st_wt_fire[s] = -1
                if st_attempts[s] < nu_max:
                    u = _keyed_u01(chan_seed, _TAG_RETRY, s_key[s], cnt_retry[s])
                    cnt_retry[s] += 1
                    doublings = st_attempts[s] - 1
                    if doublings > 60:
                        doublings = 60
                    window = retry_window_subslots << doublings
                    if window > retry_window_cap_subslots and retry_window_cap_subslots >= retry_window_subslots:
                        window = retry_window_cap_subslots
                    if window < 1:
                        window = 1
                    st_retry_from[s] = g + 1 + int(u * window)
                else:
                    msg = st_cur[s]
                    if m_kind[msg] == _KIND_VOICE:
                        counters[CTR_VOICE_BLOCKED] += 1
                    out_drop_msg[n_drop] = msg
                    out_drop_cause[n_drop] = _CAUSE_NU
                    out_drop_t[n_drop] = now
                    n_drop += 1
                    st_state[s] = _IDLE
                    st_cur[s] = -1
                    st_attempts[s] = 0
                    st_retry_from[s] = -1
                    st_frag_rem[s] = 0
            elif st_ack_fire[s] == g and st_state[s] == _AWAIT_ACK:
                st_ack_fire[s] = -1
                msg = st_cur[s]
                m_retry[msg] += 1
                st_state[s] = _IDLE
                st_cur[s] = -1
                st_attempts[s] = 0
                st_retry_from[s] = -1
                st_frag_rem[s] = 0
                if m_retry[msg] <= sds_retry_limit:
                    st_front[s] = msg
                else:
                    out_drop_msg[n_drop] = msg
                    out_drop_cause[n_drop] = _CAUSE_SDS
                    out_drop_t[n_drop] = now
                    n_drop += 1
        if error != 0:
            break

    return n_del, n_drop, error


_run_loop_interpreted = _run_loop

if USING_NUMBA:
    from numba import njit

    _opts = dict(cache=True, nogil=True)
    _time_of = njit(**_opts)(_time_of)
    _frame_of = njit(**_opts)(_frame_of)
    _index_at_or_after = njit(**_opts)(_index_at_or_after)
    _keyed_u01 = njit(**_opts)(rng.keyed_u01)
    _run_loop = njit(**_opts)(_run_loop)
else:
    _keyed_u01 = rng.keyed_u01


def run_kernel(sc: Scenario, force_interpreted: bool = False) -> RawRunResult:
    cfg = sc.cfg
    n_stations = sc.n_stations
    n_msgs = sc.n_messages
    n_voice = int(np.count_nonzero(sc.m_kind == KIND_VOICE_SETUP))

    q_cap = 8 * n_stations + 1024
    f_cap = n_msgs + 64
    td_cap = n_voice + 8
    owner_cap = sc.n_subslots + 25 * (n_stations + 8) + 64

    from .ms_mac import DEFAULT_RETRY_SPREAD_FRAMES, RETRY_WINDOW_CAP_FRAMES

    spread = cfg.retry_spread_frames
    if spread is None:
        spread = DEFAULT_RETRY_SPREAD_FRAMES
    retry_window = spread * SUBSLOTS_PER_FRAME

    args = dict(
        n_subslots=sc.n_subslots,
        n_stations=n_stations,
        wt_subslots=cfg.wt_frames * SUBSLOTS_PER_FRAME,
        retry_window_subslots=retry_window,
        retry_window_cap_subslots=RETRY_WINDOW_CAP_FRAMES * SUBSLOTS_PER_FRAME,
        align_window_subslots=cfg.alignment_frames * SUBSLOTS_PER_FRAME,
        nu_max=cfg.nu_max,
        ack_wait_subslots=cfg.ack_wait_frames * SUBSLOTS_PER_FRAME,
        sds_retry_limit=cfg.sds_retry_limit,
        frame18_access=cfg.frame18_access,
        chan_seed=sc.chan_seed,
        pattern=np.array([ord(c) - ord("A") for c in cfg.code_pattern], dtype=np.uint8),
        s_code=sc.codes,
        s_key=sc.entity_keys,
        s_perr=sc.p_err,
        s_msg_lo=sc.s_msg_lo,
        s_msg_hi=sc.s_msg_hi,
        m_kind=sc.m_kind,
        m_dest=sc.m_dest,
        m_gen=sc.m_gen,
        m_frags=sc.m_frags,
        m_deadline=sc.m_deadline,
        m_voice_dur=sc.m_voice_dur,
        m_retry=np.zeros(n_msgs, dtype=np.int64),
        st_state=np.zeros(n_stations, dtype=np.int64),
        st_cur=np.full(n_stations, -1, dtype=np.int64),
        st_attempts=np.zeros(n_stations, dtype=np.int64),
        st_epoch=np.zeros(n_stations, dtype=np.int64),
        st_wt_fire=np.full(n_stations, -1, dtype=np.int64),
        st_retry_from=np.full(n_stations, -1, dtype=np.int64),
        st_ack_fire=np.full(n_stations, -1, dtype=np.int64),
        st_align=np.full(n_stations, -1, dtype=np.int64),
        st_frag_rem=np.zeros(n_stations, dtype=np.int64),
        st_front=np.full(n_stations, -1, dtype=np.int64),
        st_arr_head=sc.s_msg_lo.copy(),
        cnt_ul=np.zeros(n_stations, dtype=np.int64),
        cnt_dl=np.zeros(n_stations, dtype=np.int64),
        cnt_retry=np.zeros(n_stations, dtype=np.int64),
        ul_owner=np.full(owner_cap, -1, dtype=np.int64),
        ul_epoch=np.zeros(owner_cap, dtype=np.int64),
        bs_pend_epoch=np.full(n_stations, -1, dtype=np.int64),
        bs_pend_msg=np.zeros(n_stations, dtype=np.int64),
        bs_pend_rem=np.zeros(n_stations, dtype=np.int64),
        bs_pend_bad=np.zeros(n_stations, dtype=np.uint8),
        bs_delivered=np.zeros(n_msgs, dtype=np.uint8),
        q_station=np.zeros((3, q_cap), dtype=np.int64),
        q_msg=np.zeros((3, q_cap), dtype=np.int64),
        q_epoch=np.zeros((3, q_cap), dtype=np.int64),
        q_extra=np.zeros((3, q_cap), dtype=np.int64),
        q_elig=np.zeros((3, q_cap), dtype=np.int64),
        q_head=np.zeros(3, dtype=np.int64),
        q_tail=np.zeros(3, dtype=np.int64),
        f_msg=np.zeros(f_cap, dtype=np.int64),
        f_dest=np.zeros(f_cap, dtype=np.int64),
        f_nfrags=np.zeros(f_cap, dtype=np.int64),
        f_sent=np.zeros(f_cap, dtype=np.int64),
        f_retries=np.zeros(f_cap, dtype=np.int64),
        f_elig=np.zeros(f_cap, dtype=np.int64),
        f_head_tail=np.zeros(2, dtype=np.int64),
        td_elig=np.zeros(td_cap, dtype=np.int64),
        td_station=np.zeros(td_cap, dtype=np.int64),
        td_order=np.zeros(td_cap, dtype=np.int64),
        td_active=np.zeros(td_cap, dtype=np.uint8),
        out_del_msg=np.zeros(n_msgs, dtype=np.int64),
        out_del_t=np.zeros(n_msgs, dtype=np.float64),
        out_drop_msg=np.zeros(n_msgs, dtype=np.int64),
        out_drop_cause=np.zeros(n_msgs, dtype=np.uint8),
        out_drop_t=np.zeros(n_msgs, dtype=np.float64),
        fwd_complete=np.full(n_msgs, np.nan),
        counters=np.zeros(N_COUNTERS, dtype=np.int64),
    )

    if USING_NUMBA and not force_interpreted:
        n_del, n_drop, error = _run_loop(**args)
    else:
        loop = _run_loop_interpreted
        with np.errstate(over="ignore"):
            n_del, n_drop, error = loop(**args)
    if error == 1:
        raise RuntimeError("downlink queue capacity exceeded; raise the ring sizes")
    if error == 2:
        raise RuntimeError("reserved-subslot horizon margin exceeded")

    counters = args["counters"]
    return RawRunResult(
        delivered_ids=args["out_del_msg"][:n_del].copy(),
        delivered_close=args["out_del_t"][:n_del].copy(),
        dropped_ids=args["out_drop_msg"][:n_drop].copy(),
        dropped_cause=args["out_drop_cause"][:n_drop].copy(),
        dropped_time=args["out_drop_t"][:n_drop].copy(),
        forward_complete=args["fwd_complete"],
        counters={name: int(counters[idx]) for name, idx in COUNTER_NAMES.items()},
    )
