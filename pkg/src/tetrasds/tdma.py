"""Multiframe/frame/subslot arithmetic for the shared control channel.

Time is carried internally as a global subslot index (an integer); seconds
are a derived view.  The control channel occupies one timeslot per TDMA
frame and that timeslot splits into two subslots, so a frame contributes
exactly two positions to the timeline.  Frame 18 of every multiframe is the
control-signalling frame: reserved runs jump over it, and by default no
random-access opportunities are placed there either.
"""

from __future__ import annotations

from dataclasses import dataclass

SLOT_DURATION_S = 0.014167
SUBSLOT_DURATION_S = SLOT_DURATION_S / 2.0
FRAME_DURATION_S = 4.0 * SLOT_DURATION_S
FRAMES_PER_MULTIFRAME = 18
SUBSLOTS_PER_FRAME = 2
SUBSLOTS_PER_MULTIFRAME = FRAMES_PER_MULTIFRAME * SUBSLOTS_PER_FRAME
CONTROL_FRAME = 18


@dataclass(frozen=True)
class TimingConstants:
    """Bundle of the fixed timeline quantities, mostly for introspection."""

    slot_duration_s: float = SLOT_DURATION_S
    subslot_duration_s: float = SUBSLOT_DURATION_S
    frame_duration_s: float = FRAME_DURATION_S
    multiframe_frames: int = FRAMES_PER_MULTIFRAME

    def __post_init__(self) -> None:
        if self.frame_duration_s != 4.0 * self.slot_duration_s:
            raise ValueError("frame duration must be exactly four slots")
        if self.subslot_duration_s != self.slot_duration_s / 2.0:
            raise ValueError("subslot duration must be exactly half a slot")
        if self.multiframe_frames < 1:
            raise ValueError("multiframe must contain at least one frame")


@dataclass(frozen=True, order=True)
class SubslotAddress:
    """Position on the control-channel timeline.

    Field order matters: tuple comparison of (multiframe, frame, subslot)
    is the timeline ordering.
    """

    multiframe: int
    frame: int
    subslot: int

    def __post_init__(self) -> None:
        if self.multiframe < 0:
            raise ValueError(f"multiframe must be >= 0, got {self.multiframe}")
        if not 1 <= self.frame <= FRAMES_PER_MULTIFRAME:
            raise ValueError(f"frame must be in 1..18, got {self.frame}")
        if self.subslot not in (0, 1):
            raise ValueError(f"subslot must be 0 or 1, got {self.subslot}")


def subslot_index(addr: SubslotAddress) -> int:
    """Flatten an address to its global subslot index."""
    return (
        addr.multiframe * SUBSLOTS_PER_MULTIFRAME
        + (addr.frame - 1) * SUBSLOTS_PER_FRAME
        + addr.subslot
    )


def address_of(index: int) -> SubslotAddress:
    """Inverse of :func:`subslot_index`."""
    if index < 0:
        raise ValueError(f"subslot index must be >= 0, got {index}")
    mf, rest = divmod(index, SUBSLOTS_PER_MULTIFRAME)
    frame, subslot = divmod(rest, SUBSLOTS_PER_FRAME)
    return SubslotAddress(mf, frame + 1, subslot)


def time_of_index(index: int) -> float:
    # One rounding per term keeps this bit-stable and strictly monotone.
    return (index >> 1) * FRAME_DURATION_S + (index & 1) * SUBSLOT_DURATION_S


def time_of(addr: SubslotAddress) -> float:
    """Start time of a subslot in seconds from the timeline origin."""
    return time_of_index(subslot_index(addr))


def index_at_or_after(t: float) -> int:
    """Smallest global subslot index whose start time is >= t."""
    if t <= 0.0:
        return 0
    guess = 2 * int(t / FRAME_DURATION_S)
    while time_of_index(guess) < t:
        guess += 1
    while guess > 0 and time_of_index(guess - 1) >= t:
        guess -= 1
    return guess


def frame_of_index(index: int) -> int:
    """Frame number (1..18) of a global subslot index."""
    return (index >> 1) % FRAMES_PER_MULTIFRAME + 1


def is_control_frame(index: int) -> bool:
    return frame_of_index(index) == CONTROL_FRAME


def next_mcch_subslot(addr: SubslotAddress, skip_frame_18: bool = True) -> SubslotAddress:
    """The control subslot immediately following ``addr``.

    With ``skip_frame_18`` set, positions in the control-signalling frame are
    jumped over, which is the rule both for reserved runs and (by default)
    for random-access opportunities.
    """
    index = subslot_index(addr) + 1
    if skip_frame_18:
        while frame_of_index(index) == CONTROL_FRAME:
            index += 1
    return address_of(index)


def reserved_run(start: SubslotAddress, n: int) -> list[SubslotAddress]:
    """``n`` consecutive payload subslots beginning at ``start``.

    Frame 18 is always skipped; ``start`` itself is advanced past frame 18
    if necessary.
    """
    if n < 1:
        raise ValueError(f"reserved run needs n >= 1, got {n}")
    index = subslot_index(start)
    run: list[SubslotAddress] = []
    while len(run) < n:
        if frame_of_index(index) != CONTROL_FRAME:
            run.append(address_of(index))
        index += 1
    return run
