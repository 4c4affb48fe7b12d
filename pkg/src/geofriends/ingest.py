"""Parsing, validation and region filtering of geo-tagged mention records.

Input is UTF-8 text with one record per line, either tab-separated
``sender_id, receiver_id, lat, lon, timestamp`` or a JSON object with exactly
those keys. The format is picked from the first non-empty line of a file.
"""

from __future__ import annotations

import json
import logging
import math
from collections import defaultdict
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Iterator

logger = logging.getLogger(__name__)

FIELDS = ("sender_id", "receiver_id", "lat", "lon", "timestamp")


class ParseError(ValueError):
    def __init__(self, reason: str, line_no: int | None = None):
        self.reason = reason
        self.line_no = line_no
        where = f"line {line_no}: " if line_no is not None else ""
        super().__init__(where + reason)


def _check_coords(lat: float, lon: float) -> None:
    if not (-90.0 <= lat <= 90.0):
        raise ParseError(f"latitude {lat!r} out of range [-90, 90]")
    if not (-180.0 < lon <= 180.0):
        raise ParseError(f"longitude {lon!r} out of range (-180, 180]")


@dataclass(frozen=True, slots=True)
class MentionRecord:
    sender_id: str
    receiver_id: str
    lat: float
    lon: float
    timestamp: int

    def __post_init__(self):
        if not self.sender_id or not self.receiver_id:
            raise ParseError("empty user id")
        if self.sender_id == self.receiver_id:
            raise ParseError(f"self-mention by {self.sender_id!r}")
        _check_coords(self.lat, self.lon)
        if self.timestamp <= 0:
            raise ParseError(f"timestamp {self.timestamp} not positive")

    @property
    def point(self) -> tuple[float, float]:
        return (self.lat, self.lon)

    def sort_key(self):
        # Total order used everywhere a deterministic record order is needed.
        return (self.timestamp, self.sender_id, self.receiver_id, self.lat, self.lon)


@dataclass(frozen=True, slots=True)
class LocationSample:
    user_id: str
    lat: float
    lon: float
    timestamp: int


@dataclass(frozen=True)
class RegionFilter:
    name: str
    lat_min: float
    lat_max: float
    lon_min: float
    lon_max: float

    def __post_init__(self):
        if not self.lat_min < self.lat_max:
            raise ValueError(f"region {self.name!r}: lat_min must be < lat_max")
        if not self.lon_min < self.lon_max:
            raise ValueError(f"region {self.name!r}: lon_min must be < lon_max")

    def contains(self, lat: float, lon: float) -> bool:
        return self.lat_min <= lat <= self.lat_max and self.lon_min <= lon <= self.lon_max


def _as_float(value, name: str) -> float:
    if isinstance(value, bool):
        raise ParseError(f"{name} is not a number: {value!r}")
    try:
        out = float(value)
    except (TypeError, ValueError):
        raise ParseError(f"{name} is not a number: {value!r}") from None
    if not math.isfinite(out):
        raise ParseError(f"{name} is not finite: {value!r}")
    return out


def _as_timestamp(value) -> int:
    if isinstance(value, bool):
        raise ParseError(f"non-numeric timestamp {value!r}")
    if isinstance(value, int):
        return value
    try:
        return int(str(value).strip())
    except ValueError:
        pass
    try:
        f = float(value)
    except (TypeError, ValueError):
        raise ParseError(f"non-numeric timestamp {value!r}") from None
    if not math.isfinite(f):
        raise ParseError(f"non-numeric timestamp {value!r}")
    return math.floor(f)


def _build(sender, receiver, lat, lon, ts) -> MentionRecord:
    if not isinstance(sender, str) or not isinstance(receiver, str):
        raise ParseError("user ids must be strings")
    return MentionRecord(sender, receiver, _as_float(lat, "lat"), _as_float(lon, "lon"), _as_timestamp(ts))


def _parse_tsv(line: str) -> MentionRecord:
    parts = line.split("\t")
    if len(parts) != len(FIELDS):
        raise ParseError(f"expected {len(FIELDS)} tab-separated fields, got {len(parts)}")
    return _build(*parts)


def _parse_json(line: str) -> MentionRecord:
    try:
        obj = json.loads(line)
    except json.JSONDecodeError as exc:
        raise ParseError(f"malformed JSON: {exc.msg}") from None
    if not isinstance(obj, dict):
        raise ParseError("JSON record is not an object")
    missing = [k for k in FIELDS if k not in obj]
    if missing:
        raise ParseError(f"missing field(s): {', '.join(missing)}")
    extra = sorted(set(obj) - set(FIELDS))
    if extra:
        raise ParseError(f"unexpected field(s): {', '.join(extra)}")
    return _build(*(obj[k] for k in FIELDS))


def detect_format(line: str) -> str:
    return "json" if line.lstrip().startswith("{") else "tsv"


def parse_mention_line(line: str, fmt: str | None = None, line_no: int | None = None) -> MentionRecord:
    """Parse one input line into a validated :class:`MentionRecord`.

    Raises :class:`ParseError` carrying the line number and reason.
    """
    line = line.rstrip("\r\n")
    try:
        if not line.strip():
            raise ParseError("empty line")
        if (fmt or detect_format(line)) == "json":
            return _parse_json(line)
        return _parse_tsv(line)
    except ParseError as exc:
        raise ParseError(exc.reason, line_no) from None


def format_mention_line(rec: MentionRecord, fmt: str = "tsv") -> str:
    if fmt == "json":
        return json.dumps(
            {"sender_id": rec.sender_id, "receiver_id": rec.receiver_id,
             "lat": rec.lat, "lon": rec.lon, "timestamp": rec.timestamp},
            separators=(",", ":"),
        )
    return f"{rec.sender_id}\t{rec.receiver_id}\t{rec.lat!r}\t{rec.lon!r}\t{rec.timestamp}"


@dataclass
class IngestResult:
    records: list[MentionRecord]
    rejects: list[tuple[int, str]]
    n_lines: int

    @property
    def n_accepted(self) -> int:
        return len(self.records)

    @property
    def n_rejected(self) -> int:
        return len(self.rejects)


def parse_lines(lines: Iterable[str]) -> IngestResult:
    """Parse every line, collecting rejects instead of raising."""
    records, rejects = [], []
    fmt = None
    n = 0
    for n, line in enumerate(lines, start=1):
        if fmt is None and line.strip():
            fmt = detect_format(line)
        try:
            records.append(parse_mention_line(line, fmt, n))
        except ParseError as exc:
            rejects.append((n, exc.reason))
            logger.debug("rejected line %d: %s", n, exc.reason)
    return IngestResult(records, rejects, n)


def read_mentions(path: str | Path) -> IngestResult:
    with open(path, encoding="utf-8", newline="") as fh:
        lines = fh.read().split("\n")
    if lines[-1] == "":
        lines.pop()
    return parse_lines(lines)


def write_mentions(records: Iterable[MentionRecord], path: str | Path, fmt: str = "tsv") -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        for rec in records:
            fh.write(format_mention_line(rec, fmt) + "\n")


def write_rejects(rejects: Iterable[tuple[int, str]], path: str | Path) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write("line\treason\n")
        for line_no, reason in rejects:
            fh.write(f"{line_no}\t{reason}\n")


def filter_region(records: Iterable[MentionRecord], region: RegionFilter) -> Iterator[MentionRecord]:
    return (r for r in records if region.contains(r.lat, r.lon))


def build_location_history(records: Iterable[MentionRecord]) -> dict[str, list[LocationSample]]:
    """Per-sender location samples, ordered by timestamp (stable for ties)."""
    history: dict[str, list[LocationSample]] = defaultdict(list)
    for r in records:
        history[r.sender_id].append(LocationSample(r.sender_id, r.lat, r.lon, r.timestamp))
    for samples in history.values():
        samples.sort(key=lambda s: s.timestamp)
    return dict(history)


def load_regions(path: str | Path) -> dict[str, RegionFilter]:
    """Read a region file: one ``name lat_min lat_max lon_min lon_max`` row per line.

    Fields are whitespace separated; blank lines and ``#`` comments are ignored.
    """
    regions = {}
    with open(path, encoding="utf-8") as fh:
        for n, raw in enumerate(fh, start=1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            parts = line.split()
            if len(parts) != 5:
                raise ValueError(f"{path}:{n}: expected 'name lat_min lat_max lon_min lon_max'")
            name, *nums = parts
            try:
                box = RegionFilter(name, *(float(x) for x in nums))
            except ValueError as exc:
                raise ValueError(f"{path}:{n}: {exc}") from None
            if name in regions:
                raise ValueError(f"{path}:{n}: duplicate region {name!r}")
            regions[name] = box
    return regions
