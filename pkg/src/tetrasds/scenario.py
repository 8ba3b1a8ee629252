"""Per-replication inputs, identical for both engines.

One ``Scenario`` freezes everything a run consumes: station placement and
per-station burst-error probabilities, the full pre-generated message
table (reports, background short-data, voice setups, feedback) sorted per
station, and the seed feeding the keyed in-run draws.  Engines differ only
in how they walk the subslot timeline.

Station indexing: responders first (0 .. N_F-1), then the background
population, then the remote agent as the last station.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import channel, rng, tdma, traffic
from .bs_mac import station_code
from .config import ScenarioConfig
from .ms_mac import fragments_needed
from .traffic import (
    BACKGROUND_PAYLOAD_BITS,
    FEEDBACK_PAYLOAD_BITS,
    KIND_BACKGROUND_SDS,
    KIND_FEEDBACK,
    KIND_REPORT,
    KIND_VOICE_SETUP,
    REPORT_PAYLOAD_BITS,
)

NO_DESTINATION = -1


@dataclass
class Scenario:
    cfg: ScenarioConfig
    replication: int
    # timeline
    n_subslots: int
    horizon_s: float
    warmup_end_s: float
    # stations
    n_stations: int
    agent_station: int
    roles: np.ndarray
    entity_keys: np.ndarray
    codes: np.ndarray  # ordinal 0..3
    distances_m: np.ndarray
    shadowing_db: np.ndarray
    snr_db: np.ndarray
    p_err: np.ndarray
    # messages, sorted by (station, time)
    m_station: np.ndarray
    m_kind: np.ndarray
    m_dest: np.ndarray
    m_gen: np.ndarray
    m_payload_bits: np.ndarray
    m_frags: np.ndarray
    m_deadline: np.ndarray
    m_voice_dur: np.ndarray
    s_msg_lo: np.ndarray
    s_msg_hi: np.ndarray
    # keyed-draw seed
    chan_seed: np.uint64

    @property
    def n_messages(self) -> int:
        return len(self.m_gen)


def build_scenario(cfg: ScenarioConfig, replication: int) -> Scenario:
    tcfg = cfg.traffic_config()
    n_f, n_c = cfg.n_responders, cfg.n_background
    n_stations = tcfg.n_total
    agent = n_f + n_c

    n_subslots = cfg.length_multiframes * tdma.SUBSLOTS_PER_MULTIFRAME
    horizon_s = tdma.time_of_index(n_subslots)
    warmup_end_s = tdma.time_of_index(cfg.warmup_multiframes * tdma.SUBSLOTS_PER_MULTIFRAME)

    tables = traffic.build_arrivals(tcfg, horizon_s, cfg.master_seed, replication)

    roles = np.empty(n_stations, dtype=np.uint8)
    roles[:n_f] = rng.ROLE_RESPONDER
    roles[n_f:agent] = rng.ROLE_BACKGROUND
    roles[agent] = rng.ROLE_AGENT
    entity_keys = np.empty(n_stations, dtype=np.int64)
    for s in range(n_stations):
        local = s if s < n_f else (s - n_f if s < agent else 0)
        entity_keys[s] = rng.entity_key(int(roles[s]), local)
    codes = np.array(
        [ord(station_code(s, cfg.code_pattern)) - ord("A") for s in range(n_stations)],
        dtype=np.uint8,
    )

    model = cfg.propagation_model()
    budget = cfg.link_budget()
    distances = np.empty(n_stations, dtype=np.float64)
    shadow = np.empty(n_stations, dtype=np.float64)
    for role, lo, hi in (
        (rng.ROLE_RESPONDER, 0, n_f),
        (rng.ROLE_BACKGROUND, n_f, agent),
        (rng.ROLE_AGENT, agent, agent + 1),
    ):
        n_role = hi - lo
        place_gen = rng.substream(cfg.master_seed, replication, rng.STREAM_PLACEMENT, role)
        shade_gen = rng.substream(cfg.master_seed, replication, rng.STREAM_SHADOWING, role)
        distances[lo:hi] = channel.place_uniform_disk(n_role, cfg.cell_radius_m, place_gen)
        shadow[lo:hi] = shade_gen.normal(0.0, model.shadowing_sigma_db, n_role)
    snr, p_err = channel.make_links(distances, shadow, model, budget)
    if cfg.perfect_channel:
        p_err = np.zeros_like(p_err)

    report_frags = fragments_needed(REPORT_PAYLOAD_BITS, cfg.subslot_capacity_bits)
    bg_frags = fragments_needed(BACKGROUND_PAYLOAD_BITS, cfg.subslot_capacity_bits)
    fb_frags = fragments_needed(FEEDBACK_PAYLOAD_BITS, cfg.subslot_capacity_bits)
    timer = tcfg.holding_timer_s

    station_col: list[np.ndarray] = []
    kind_col: list[np.ndarray] = []
    dest_col: list[np.ndarray] = []
    gen_col: list[np.ndarray] = []
    payload_col: list[np.ndarray] = []
    frags_col: list[np.ndarray] = []
    deadline_col: list[np.ndarray] = []
    dur_col: list[np.ndarray] = []
    s_lo = np.zeros(n_stations, dtype=np.int64)
    s_hi = np.zeros(n_stations, dtype=np.int64)
    total = 0

    def push(station, kinds, dests, gens, payloads, frags, deadlines, durs):
        nonlocal total
        n = len(gens)
        s_lo[station] = total
        s_hi[station] = total + n
        total += n
        station_col.append(np.full(n, station, dtype=np.int64))
        kind_col.append(kinds)
        dest_col.append(dests)
        gen_col.append(gens)
        payload_col.append(payloads)
        frags_col.append(frags)
        deadline_col.append(deadlines)
        dur_col.append(durs)

    for local in range(n_f):
        gens = tables.report_times[local]
        n = len(gens)
        deadlines = np.full(n, np.inf) if timer is None else gens + timer
        push(
            local,
            np.full(n, KIND_REPORT, dtype=np.uint8),
            np.full(n, agent, dtype=np.int64),
            gens,
            np.full(n, REPORT_PAYLOAD_BITS, dtype=np.int64),
            np.full(n, report_frags, dtype=np.int64),
            deadlines,
            np.zeros(n),
        )

    bg_dest_cursor = 0
    for local in range(n_c):
        sds = tables.bg_sds_times[local]
        voice = tables.bg_voice_times[local]
        durs = tables.bg_voice_durations[local]
        if tables.bg_sds_dests is not None:
            # forwarded background short-data goes to a random peer
            dests_local = tables.bg_sds_dests[bg_dest_cursor : bg_dest_cursor + len(sds)]
            bg_dest_cursor += len(sds)
            sds_dests = n_f + dests_local
        else:
            sds_dests = np.full(len(sds), NO_DESTINATION, dtype=np.int64)
        gens = np.concatenate([sds, voice])
        kinds = np.concatenate(
            [
                np.full(len(sds), KIND_BACKGROUND_SDS, dtype=np.uint8),
                np.full(len(voice), KIND_VOICE_SETUP, dtype=np.uint8),
            ]
        )
        dests = np.concatenate([sds_dests, np.full(len(voice), NO_DESTINATION, dtype=np.int64)])
        # a voice setup request rides entirely inside the access burst
        payloads = np.concatenate(
            [np.full(len(sds), BACKGROUND_PAYLOAD_BITS, dtype=np.int64), np.ones(len(voice), dtype=np.int64)]
        )
        frags = np.concatenate(
            [np.full(len(sds), bg_frags, dtype=np.int64), np.ones(len(voice), dtype=np.int64)]
        )
        durations = np.concatenate([np.zeros(len(sds)), durs])
        order = np.argsort(gens, kind="stable")
        push(
            n_f + local,
            kinds[order],
            dests[order],
            gens[order],
            payloads[order],
            frags[order],
            np.full(len(gens), np.inf),
            durations[order],
        )

    fb = tables.feedback_times
    push(
        agent,
        np.full(len(fb), KIND_FEEDBACK, dtype=np.uint8),
        tables.feedback_dests.astype(np.int64),
        fb,
        np.full(len(fb), FEEDBACK_PAYLOAD_BITS, dtype=np.int64),
        np.full(len(fb), fb_frags, dtype=np.int64),
        np.full(len(fb), np.inf),
        np.zeros(len(fb)),
    )

    def cat(cols, dtype):
        if not cols:
            return np.empty(0, dtype=dtype)
        return np.concatenate(cols).astype(dtype)

    return Scenario(
        cfg=cfg,
        replication=replication,
        n_subslots=n_subslots,
        horizon_s=horizon_s,
        warmup_end_s=warmup_end_s,
        n_stations=n_stations,
        agent_station=agent,
        roles=roles,
        entity_keys=entity_keys,
        codes=codes,
        distances_m=distances,
        shadowing_db=shadow,
        snr_db=snr,
        p_err=p_err,
        m_station=cat(station_col, np.int64),
        m_kind=cat(kind_col, np.uint8),
        m_dest=cat(dest_col, np.int64),
        m_gen=cat(gen_col, np.float64),
        m_payload_bits=cat(payload_col, np.int64),
        m_frags=cat(frags_col, np.int64),
        m_deadline=cat(deadline_col, np.float64),
        m_voice_dur=cat(dur_col, np.float64),
        s_msg_lo=s_lo,
        s_msg_hi=s_hi,
        chan_seed=rng.channel_seed(cfg.master_seed, replication),
    )


@dataclass
class RawRunResult:
    """Chronological event record of one run, engine-independent."""

    delivered_ids: np.ndarray
    delivered_close: np.ndarray
    dropped_ids: np.ndarray
    dropped_cause: np.ndarray
    dropped_time: np.ndarray
    forward_complete: np.ndarray
    counters: dict[str, int]
