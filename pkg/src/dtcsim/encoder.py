"""Frame compositing encoder.

Turns a queue of timing parameters into W-bit parallel words for the
serializer. Each timing signal is a run of ``high_bits`` ones followed by
``total_bits - high_bits`` zeros; a frame that crosses a signal boundary is
spliced from the tail of the current signal (upper bits) and the head of
the next one (lower bits).
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

MAX_FRAME_WIDTH = 64


class EncoderError(ValueError):
    pass


class ParameterExhausted(EncoderError):
    """The queue ran dry before the current frame was full.

    ``partial`` holds the bits composited so far (left-aligned, zero below)
    and ``filled`` how many of the W bits are valid.
    """

    def __init__(self, partial: int, filled: int):
        super().__init__(f"parameter queue exhausted after {filled} bits of frame")
        self.partial = partial
        self.filled = filled


@dataclass(frozen=True)
class TimingParameter:
    high_bits: int
    total_bits: int

    def __post_init__(self):
        if int(self.total_bits) != self.total_bits or int(self.high_bits) != self.high_bits:
            raise EncoderError(f"non-integer bit counts: {self}")
        if self.total_bits < 1:
            raise EncoderError(f"total_bits must be >= 1, got {self.total_bits}")
        if not 0 <= self.high_bits <= self.total_bits:
            raise EncoderError(
                f"high_bits must lie in [0, {self.total_bits}], got {self.high_bits}")

    @property
    def low_bits(self) -> int:
        return self.total_bits - self.high_bits


@dataclass
class EncoderState:
    frame_width: int
    l_temp: int = 0
    t_temp: int = 0
    queue_position: int = 0

    @property
    def at_boundary(self) -> bool:
        return self.l_temp == 0


def frame_dtype(frame_width: int) -> np.dtype:
    """Narrowest unsigned integer dtype holding one frame."""
    for bits in (8, 16, 32, 64):
        if frame_width <= bits:
            return np.dtype(f"uint{bits}")
    raise EncoderError(f"frame width {frame_width} exceeds {MAX_FRAME_WIDTH}")


def encoder_new(frame_width: int = 32) -> EncoderState:
    if not 2 <= frame_width <= MAX_FRAME_WIDTH:
        raise EncoderError(f"frame width must be in [2, {MAX_FRAME_WIDTH}], got {frame_width}")
    return EncoderState(frame_width=frame_width)


def _ones(count: int, shift: int) -> int:
    return ((1 << count) - 1) << shift


def encode_frame(state: EncoderState, params: Sequence[TimingParameter]) -> tuple[int, EncoderState]:
    """Composite one frame, advancing ``state`` through ``params``.

    ``params`` is the whole queue; ``state.queue_position`` says where the
    next unloaded parameter sits. The returned state is a new object.

    Raises :class:`ParameterExhausted` if the queue ends mid-frame; the
    input state is left untouched in that case.
    """
    w = state.frame_width
    l_temp, t_temp, pos = state.l_temp, state.t_temp, state.queue_position

    if l_temp == 0:
        if pos >= len(params):
            raise ParameterExhausted(0, 0)
        p = params[pos]
        l_temp, t_temp, pos = p.total_bits, p.high_bits, pos + 1

    if l_temp >= w:
        # current signal covers the whole frame: Part1 only, Part2 = 0
        n1 = min(t_temp, w)
        frame = _ones(n1, w - n1)
        return frame, EncoderState(w, l_temp - w, t_temp - n1, pos)

    # l_temp < W: splice. Part1 holds the tail of the current signal in the
    # top l_temp bits; the remaining low bits come from following signals.
    frame = _ones(t_temp, w - t_temp)
    free = w - l_temp
    while free > 0:
        if pos >= len(params):
            raise ParameterExhausted(frame, w - free)
        p = params[pos]
        pos += 1
        l_temp, t_temp = p.total_bits, p.high_bits
        n1 = min(t_temp, free)
        frame |= _ones(n1, free - n1)
        used = min(l_temp, free)
        l_temp -= used
        t_temp -= n1
        free -= used
    return frame, EncoderState(w, l_temp, t_temp, pos)


def encode_stream(params: Iterable[TimingParameter], frame_width: int = 32) -> np.ndarray:
    """Encode a whole parameter list, zero-padding the final frame.

    Returns ``ceil(sum(total_bits) / W)`` frames as an unsigned array of
    :func:`frame_dtype`.
    Runs of frames that lie wholly inside one signal's high or low region
    are written in bulk; every other frame goes through :func:`encode_frame`.
    """
    params = params if isinstance(params, Sequence) else list(params)
    state = encoder_new(frame_width)
    w = frame_width
    total = sum(p.total_bits for p in params)
    out = np.zeros(-(-total // w), dtype=frame_dtype(w))
    full = _ones(w, 0)
    k = 0
    n = len(params)
    while True:
        if state.l_temp == 0 and state.queue_position >= n:
            break
        # bulk skip: the current signal still spans whole frames
        if state.l_temp >= w and (state.t_temp >= w or state.t_temp == 0):
            if state.t_temp:
                m = min(state.t_temp, state.l_temp) // w
                out[k:k + m] = full
            else:
                m = state.l_temp // w
            k += m
            state = EncoderState(w, state.l_temp - m * w,
                                 state.t_temp - (m * w if state.t_temp else 0),
                                 state.queue_position)
            continue
        try:
            frame, state = encode_frame(state, params)
        except ParameterExhausted as exc:
            out[k] = exc.partial
            k += 1
            break
        out[k] = frame
        k += 1
    assert k == len(out)
    return out


class FrameEncoder:
    """Incremental encoder for parameters that arrive in chunks.

    Only complete frames leave :meth:`push`; a frame still waiting on the
    next parameter is held back until more input arrives or :meth:`finish`
    pads it out with zeros.
    """

    def __init__(self, frame_width: int = 32):
        self.state = encoder_new(frame_width)
        self._queue: list[TimingParameter] = []

    def push(self, params: Iterable[TimingParameter]) -> list[int]:
        self._queue.extend(params)
        st = self.state
        local = EncoderState(st.frame_width, st.l_temp, st.t_temp, 0)
        frames = []
        while True:
            try:
                frame, local = encode_frame(local, self._queue)
            except ParameterExhausted:
                break
            frames.append(frame)
        del self._queue[:local.queue_position]
        self.state = EncoderState(st.frame_width, local.l_temp, local.t_temp,
                                  st.queue_position + local.queue_position)
        return frames

    def finish(self) -> list[int]:
        """Emit the held-back partial frame, zero padded, and reset."""
        st = self.state
        local = EncoderState(st.frame_width, st.l_temp, st.t_temp, 0)
        frames = []
        if local.l_temp or self._queue:
            try:
                frame, local = encode_frame(local, self._queue)
            except ParameterExhausted as exc:
                frame = exc.partial
                local = EncoderState(st.frame_width, 0, 0, len(self._queue))
            frames.append(frame)
        self.state = EncoderState(st.frame_width, 0, 0,
                                  st.queue_position + local.queue_position)
        self._queue.clear()
        return frames
