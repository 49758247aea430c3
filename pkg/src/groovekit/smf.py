"""Standard MIDI File reader for drum note extraction.

Reads format 0 and format 1 SMF bytes and merges every track into one
absolute-tick stream of note-on events, plus the time-signature meta
events encountered along the way. Only metrical (ticks-per-quarter)
division is supported; SMPTE timecode division is rejected.

The reader is strict about container structure (chunk framing, event
boundaries) and deliberately shallow about content it does not consume:
unknown meta events, sysex payloads, and non-note channel messages are
decoded just far enough to skip them. Running status is handled. Note-on
events with velocity 0 are kept in the stream; they carry note-off
semantics and are dropped by the quantizer downstream.

Every function here is pure over immutable bytes and safe to call
concurrently. Arbitrary byte input either parses or raises ``SmfError``;
the parser never dies with an unrelated exception.
"""

from __future__ import annotations

from dataclasses import dataclass


class SmfError(Exception):
    """Base class for every structural problem in SMF input."""


class MalformedHeader(SmfError):
    """Bad magic, truncated header chunk, or nonsense header fields."""


class UnsupportedFormat(SmfError):
    """Format 2 files are rejected; they do not occur in drum corpora."""


class UnsupportedDivision(SmfError):
    """SMPTE timecode division (high bit of the division word) is unsupported."""


class TruncatedTrack(SmfError):
    """A chunk or event was cut off before its declared end."""


class MalformedTrack(SmfError):
    """Structurally invalid event content inside a track chunk."""


@dataclass(frozen=True)
class SmfHeader:
    format: int
    track_count: int
    ticks_per_quarter: int


@dataclass(frozen=True)
class NoteEvent:
    """A note-on with absolute tick time (velocity 0 means note-off)."""

    tick: int
    pitch: int
    velocity: int
    channel: int


@dataclass(frozen=True)
class TimeSignature:
    numerator: int
    denominator: int

    @property
    def label(self) -> str:
        """The 'N-D' form used by dataset metadata, e.g. '4-4'."""
        return f"{self.numerator}-{self.denominator}"


def _read_u16(data: bytes, pos: int) -> int:
    return (data[pos] << 8) | data[pos + 1]


def _read_u32(data: bytes, pos: int) -> int:
    return (data[pos] << 24) | (data[pos + 1] << 16) | (data[pos + 2] << 8) | data[pos + 3]


def _read_vlq(chunk: bytes, pos: int) -> tuple[int, int]:
    """Decode a variable-length quantity; returns (value, next position)."""
    value = 0
    for count in range(4):
        if pos >= len(chunk):
            raise TruncatedTrack("variable-length quantity runs past end of track")
        byte = chunk[pos]
        pos += 1
        value = (value << 7) | (byte & 0x7F)
        if not byte & 0x80:
            return value, pos
    raise MalformedTrack("variable-length quantity longer than 4 bytes")


def _parse_header(data: bytes) -> tuple[SmfHeader, int]:
    if len(data) < 8 or data[0:4] != b"MThd":
        raise MalformedHeader("input does not start with an MThd chunk")
    length = _read_u32(data, 4)
    if length < 6:
        raise MalformedHeader(f"MThd length {length} is shorter than 6")
    if 8 + length > len(data):
        raise MalformedHeader("MThd chunk is truncated")
    fmt = _read_u16(data, 8)
    track_count = _read_u16(data, 10)
    division = _read_u16(data, 12)
    if fmt == 2:
        raise UnsupportedFormat("format 2 files are not supported")
    if fmt not in (0, 1):
        raise MalformedHeader(f"unknown SMF format {fmt}")
    if fmt == 0 and track_count != 1:
        raise MalformedHeader(f"format 0 must declare exactly 1 track, not {track_count}")
    if division & 0x8000:
        raise UnsupportedDivision("SMPTE timecode division is not supported")
    if division == 0:
        raise MalformedHeader("ticks per quarter note must be positive")
    return SmfHeader(fmt, track_count, division), 8 + length


# Data byte counts for channel message kinds (upper nibble of the status byte).
_CHANNEL_DATA_BYTES = {0x80: 2, 0x90: 2, 0xA0: 2, 0xB0: 2, 0xC0: 1, 0xD0: 1, 0xE0: 2}

_META_END_OF_TRACK = 0x2F
_META_TIME_SIGNATURE = 0x58


def _read_data_byte(chunk: bytes, pos: int) -> int:
    if pos >= len(chunk):
        raise TruncatedTrack("channel event data runs past end of track")
    byte = chunk[pos]
    if byte & 0x80:
        raise MalformedTrack(f"expected data byte, found status byte 0x{byte:02x}")
    return byte


def _parse_track(chunk: bytes) -> tuple[list[NoteEvent], list[tuple[int, TimeSignature]]]:
    """Parse one MTrk payload into note-ons and tick-stamped time signatures."""
    notes: list[NoteEvent] = []
    signatures: list[tuple[int, TimeSignature]] = []
    tick = 0
    running: int | None = None
    pos = 0
    end = len(chunk)
    while pos < end:
        delta, pos = _read_vlq(chunk, pos)
        tick += delta
        if pos >= end:
            raise TruncatedTrack("event status missing after delta time")
        first = chunk[pos]
        if first == 0xFF:
            if pos + 1 >= end:
                raise TruncatedTrack("meta event type missing")
            meta_type = chunk[pos + 1]
            length, pos = _read_vlq(chunk, pos + 2)
            if pos + length > end:
                raise TruncatedTrack("meta event payload truncated")
            payload = chunk[pos : pos + length]
            pos += length
            running = None
            if meta_type == _META_END_OF_TRACK:
                break
            if meta_type == _META_TIME_SIGNATURE and length >= 2:
                numerator, denom_exp = payload[0], payload[1]
                if numerator >= 1 and denom_exp <= 16:
                    signatures.append((tick, TimeSignature(numerator, 1 << denom_exp)))
            # Tempo (0x51) and all other meta events carry nothing the grid
            # pipeline consumes; their payloads were skipped above.
        elif first in (0xF0, 0xF7):
            length, pos = _read_vlq(chunk, pos + 1)
            if pos + length > end:
                raise TruncatedTrack("sysex payload truncated")
            pos += length
            running = None
        elif first >= 0xF1:
            raise MalformedTrack(f"unexpected system byte 0x{first:02x} inside track")
        else:
            if first & 0x80:
                status = first
                running = status
                pos += 1
            elif running is None:
                raise MalformedTrack("data byte with no running status")
            else:
                status = running
            kind = status & 0xF0
            channel = status & 0x0F
            if _CHANNEL_DATA_BYTES[kind] == 1:
                _read_data_byte(chunk, pos)
                pos += 1
            else:
                d1 = _read_data_byte(chunk, pos)
                d2 = _read_data_byte(chunk, pos + 1)
                pos += 2
                if kind == 0x90:
                    notes.append(NoteEvent(tick=tick, pitch=d1, velocity=d2, channel=channel))
    return notes, signatures


def parse_smf(data: bytes) -> tuple[SmfHeader, list[NoteEvent], list[TimeSignature]]:
    """Parse SMF bytes into (header, merged note-on stream, time signatures).

    Note-ons from all tracks are merged into one stream ordered by
    absolute tick; events at the same tick keep track order, then
    in-track order. Chunks other than MThd/MTrk are skipped. Trailing
    bytes after the declared tracks are ignored (some writers pad).
    """
    header, pos = _parse_header(data)
    keyed_notes: list[tuple[int, int, int, NoteEvent]] = []
    keyed_signatures: list[tuple[int, int, int, TimeSignature]] = []
    tracks_found = 0
    while pos < len(data) and tracks_found < header.track_count:
        if len(data) - pos < 8:
            raise TruncatedTrack("chunk header truncated")
        tag = data[pos : pos + 4]
        size = _read_u32(data, pos + 4)
        pos += 8
        if pos + size > len(data):
            raise TruncatedTrack(f"{tag!r} chunk body truncated")
        chunk = data[pos : pos + size]
        pos += size
        if tag != b"MTrk":
            continue
        notes, signatures = _parse_track(chunk)
        keyed_notes.extend(
            (note.tick, tracks_found, order, note) for order, note in enumerate(notes)
        )
        keyed_signatures.extend(
            (tick, tracks_found, order, sig) for order, (tick, sig) in enumerate(signatures)
        )
        tracks_found += 1
    if tracks_found < header.track_count:
        raise TruncatedTrack(
            f"header declares {header.track_count} tracks, found {tracks_found}"
        )
    keyed_notes.sort(key=lambda item: item[:3])
    keyed_signatures.sort(key=lambda item: item[:3])
    return (
        header,
        [note for *_rest, note in keyed_notes],
        [sig for *_rest, sig in keyed_signatures],
    )
