"""Reproducible random streams.

Two mechanisms cover every random decision in a run:

* scenario randomness (user placement, shadowing, arrival processes, call
  durations, feedback destinations) is pre-generated from numpy PCG64
  generators derived by name from ``(master_seed, replication, stream,
  role)`` so each draw has a fixed identity, and

* in-run randomness (per-burst channel outcomes, access-retry spreading)
  comes from a counter-keyed 64-bit mix so the value of a draw depends only
  on *which* decision it is, never on how many other decisions preceded it.

Both engines therefore see identical randomness, and the jitted and
interpreted fast paths agree bit for bit.
"""

from __future__ import annotations

import numpy as np

# Named scenario streams.
STREAM_PLACEMENT = 1
STREAM_SHADOWING = 2
STREAM_REPORT_ARRIVALS = 3
STREAM_BG_SDS_ARRIVALS = 4
STREAM_BG_VOICE_ARRIVALS = 5
STREAM_VOICE_DURATIONS = 6
STREAM_FEEDBACK_ARRIVALS = 7
STREAM_FEEDBACK_DESTS = 8
STREAM_BG_SDS_DESTS = 9
STREAM_CHANNEL = 10

# Tags for keyed in-run draws.
TAG_CHANNEL_UPLINK = 1
TAG_CHANNEL_DOWNLINK = 2
TAG_ACCESS_RETRY = 3

# Role bases keep per-entity keys stable when the population changes.
ROLE_RESPONDER = 0
ROLE_BACKGROUND = 1
ROLE_AGENT = 2
_ROLE_KEY_BASE = (0, 1 << 20, 1 << 21)

_MIX_MUL1 = np.uint64(0xBF58476D1CE4E5B9)
_MIX_MUL2 = np.uint64(0x94D049BB133111EB)
_MIX_INC = np.uint64(0x9E3779B97F4A7C15)
_SHIFT_30 = np.uint64(30)
_SHIFT_27 = np.uint64(27)
_SHIFT_31 = np.uint64(31)
_SHIFT_11 = np.uint64(11)
_U53 = 1.0 / float(1 << 53)


def substream(master_seed: int, replication: int, stream: int, role: int = 0) -> np.random.Generator:
    """PCG64 generator for one named stream of one replication."""
    seq = np.random.SeedSequence([int(master_seed) & (2**64 - 1), replication, stream, role])
    return np.random.Generator(np.random.PCG64(seq))


def channel_seed(master_seed: int, replication: int) -> np.uint64:
    """64-bit seed feeding every keyed in-run draw of one replication."""
    seq = np.random.SeedSequence([int(master_seed) & (2**64 - 1), replication, STREAM_CHANNEL])
    return np.uint64(seq.generate_state(1, np.uint64)[0])


def entity_key(role: int, local_index: int) -> int:
    """Stable per-station key: responders keep their keys when the
    background population changes and vice versa."""
    return _ROLE_KEY_BASE[role] + local_index


def mix64(x):
    """SplitMix64 finalizer over ``np.uint64`` (jit-compatible)."""
    x = x + _MIX_INC
    x = (x ^ (x >> _SHIFT_30)) * _MIX_MUL1
    x = (x ^ (x >> _SHIFT_27)) * _MIX_MUL2
    return x ^ (x >> _SHIFT_31)


def keyed_u01(seed, tag, entity, counter):
    """Uniform in [0, 1) identified by (seed, tag, entity, counter).

    Three chained SplitMix64 rounds, written self-contained against
    ``np.uint64`` scalars so the identical source compiles under numba and
    runs interpreted; the interpreted path wants
    ``np.errstate(over="ignore")`` because numpy warns on the intentional
    wraparound.
    """
    x = seed ^ np.uint64(tag)
    x = x + _MIX_INC
    x = (x ^ (x >> _SHIFT_30)) * _MIX_MUL1
    x = (x ^ (x >> _SHIFT_27)) * _MIX_MUL2
    x = (x ^ (x >> _SHIFT_31)) ^ np.uint64(entity)
    x = x + _MIX_INC
    x = (x ^ (x >> _SHIFT_30)) * _MIX_MUL1
    x = (x ^ (x >> _SHIFT_27)) * _MIX_MUL2
    x = (x ^ (x >> _SHIFT_31)) ^ np.uint64(counter)
    x = x + _MIX_INC
    x = (x ^ (x >> _SHIFT_30)) * _MIX_MUL1
    x = (x ^ (x >> _SHIFT_27)) * _MIX_MUL2
    x = x ^ (x >> _SHIFT_31)
    return float(x >> _SHIFT_11) * _U53


class KeyedStream:
    """Replayable view of one (seed, tag, entity) draw sequence.

    Each call consumes exactly one counter position, so replaying a stream
    from counter zero reproduces the identical values.
    """

    def __init__(self, seed: np.uint64, tag: int, entity: int, counter: int = 0):
        self.seed = np.uint64(seed)
        self.tag = tag
        self.entity = entity
        self.counter = counter

    def next_u01(self) -> float:
        with np.errstate(over="ignore"):
            u = keyed_u01(self.seed, self.tag, self.entity, self.counter)
        self.counter += 1
        return u
