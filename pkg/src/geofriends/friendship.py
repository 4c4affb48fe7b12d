"""Bidirectional friendship detection and two-stage distance estimation.

Two users are friends when each has mentioned the other within the
friendship window. A pair's distance is estimated from exchanges: a mention
followed by the earliest later mention in the opposite direction, with the
distance taken between the two senders' positions. Only exchanges whose
interval is below ``max_interval_s`` enter the per-pair average.
"""

from __future__ import annotations

import bisect
import math
from collections import defaultdict
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Sequence

from geofriends.geodesy import great_circle_distance
from geofriends.ingest import MentionRecord

Pair = tuple[str, str]


@dataclass(frozen=True)
class FriendshipConfig:
    window_s: float | None = None  # None: the whole dataset span
    max_interval_s: float = 3600.0

    def __post_init__(self):
        if self.window_s is not None and not self.window_s > 0:
            raise ValueError("window_s must be positive")
        if not self.max_interval_s > 0:
            raise ValueError("max_interval_s must be positive")


@dataclass(frozen=True)
class ExchangeEvent:
    first: MentionRecord
    reply: MentionRecord
    interval_s: int
    distance_km: float

    @classmethod
    def from_records(cls, first: MentionRecord, reply: MentionRecord) -> "ExchangeEvent":
        if first.sender_id != reply.receiver_id or first.receiver_id != reply.sender_id:
            raise ValueError("reply is not in the opposite direction")
        interval = reply.timestamp - first.timestamp
        if interval <= 0:
            raise ValueError("reply must be strictly later than the mention")
        return cls(first, reply, interval, great_circle_distance(first.point, reply.point))


@dataclass(frozen=True)
class FriendPair:
    user_a: str
    user_b: str
    estimated_distance_km: float | None = None
    n_exchanges_total: int = 0
    n_exchanges_qualifying: int = 0

    def __post_init__(self):
        if not self.user_a < self.user_b:
            raise ValueError("FriendPair requires user_a < user_b")
        if (self.estimated_distance_km is None) != (self.n_exchanges_qualifying == 0):
            raise ValueError("distance must be present exactly when some exchange qualifies")
        if self.n_exchanges_qualifying > self.n_exchanges_total:
            raise ValueError("more qualifying exchanges than exchanges")


def canonical_pair(u: str, v: str) -> Pair:
    return (u, v) if u < v else (v, u)


def group_by_pair(records: Iterable[MentionRecord]) -> dict[Pair, list[MentionRecord]]:
    """Bucket mentions by unordered user pair; each bucket is in canonical record order."""
    groups: dict[Pair, list[MentionRecord]] = defaultdict(list)
    for r in records:
        groups[canonical_pair(r.sender_id, r.receiver_id)].append(r)
    for recs in groups.values():
        recs.sort(key=MentionRecord.sort_key)
    return dict(groups)


def _split_directions(pair: Pair, recs: Sequence[MentionRecord]):
    forward = [r for r in recs if r.sender_id == pair[0]]
    backward = [r for r in recs if r.sender_id == pair[1]]
    return forward, backward


def _within_window(ts_a: list[int], ts_b: list[int], window_s: float | None) -> bool:
    if not ts_a or not ts_b:
        return False
    if window_s is None:
        return True
    # ts_b is sorted; the closest element to each t in ts_a sits at the insertion point.
    for t in ts_a:
        i = bisect.bisect_left(ts_b, t)
        if i < len(ts_b) and ts_b[i] - t <= window_s:
            return True
        if i > 0 and t - ts_b[i - 1] <= window_s:
            return True
    return False


def detect_friend_pairs(records: Iterable[MentionRecord], config: FriendshipConfig = FriendshipConfig()) -> list[Pair]:
    """Canonical ``(user_a, user_b)`` pairs that mentioned each other within the window."""
    return _detect(group_by_pair(records), config)


def _detect(groups: dict[Pair, list[MentionRecord]], config: FriendshipConfig) -> list[Pair]:
    out = []
    for pair, recs in groups.items():
        forward, backward = _split_directions(pair, recs)
        if _within_window([r.timestamp for r in forward], [r.timestamp for r in backward], config.window_s):
            out.append(pair)
    return sorted(out)


def _match_direction(firsts: list[MentionRecord], replies: list[MentionRecord]) -> list[tuple[MentionRecord, MentionRecord]]:
    # Both lists are time sorted, so each mention's earliest unused later reply
    # lies at or beyond a single forward-moving cursor.
    matches = []
    j = 0
    for m in firsts:
        while j < len(replies) and replies[j].timestamp <= m.timestamp:
            j += 1
        if j == len(replies):
            break
        matches.append((m, replies[j]))
        j += 1
    return matches


def pair_exchanges(records: Sequence[MentionRecord]) -> list[ExchangeEvent]:
    """Match each mention of one pair with the earliest strictly later, unused reply.

    Either direction can open an exchange. A record is used at most once as a
    reply (it may still open its own exchange).
    """
    if not records:
        return []
    pair = canonical_pair(records[0].sender_id, records[0].receiver_id)
    if any(canonical_pair(r.sender_id, r.receiver_id) != pair for r in records):
        raise ValueError("records span more than one user pair")
    recs = sorted(records, key=MentionRecord.sort_key)
    forward, backward = _split_directions(pair, recs)
    matches = _match_direction(forward, backward) + _match_direction(backward, forward)
    matches.sort(key=lambda fr: (fr[0].sort_key(), fr[1].sort_key()))
    return [ExchangeEvent.from_records(f, r) for f, r in matches]


def estimate_pair_distance(events: Iterable[ExchangeEvent], max_interval_s: float = 3600.0) -> float | None:
    qualifying = [e.distance_km for e in events if e.interval_s < max_interval_s]
    if not qualifying:
        return None
    return math.fsum(qualifying) / len(qualifying)


def collect_exchanges(records: Iterable[MentionRecord], config: FriendshipConfig = FriendshipConfig()) -> dict[Pair, list[ExchangeEvent]]:
    """Exchange events for every detected friend pair, keyed by canonical pair."""
    groups = group_by_pair(records)
    return {pair: pair_exchanges(groups[pair]) for pair in _detect(groups, config)}


def build_friendship_distances(records: Iterable[MentionRecord], config: FriendshipConfig = FriendshipConfig()) -> list[FriendPair]:
    return pairs_from_exchanges(collect_exchanges(records, config), config.max_interval_s)


def pairs_from_exchanges(exchanges: dict[Pair, list[ExchangeEvent]], max_interval_s: float = 3600.0) -> list[FriendPair]:
    out = []
    for (a, b), events in sorted(exchanges.items()):
        n_qual = sum(1 for e in events if e.interval_s < max_interval_s)
        out.append(FriendPair(a, b, estimate_pair_distance(events, max_interval_s), len(events), n_qual))
    return out


PAIR_COLUMNS = ("user_a", "user_b", "estimated_distance_km", "n_exchanges_total", "n_exchanges_qualifying")


def write_pairs(pairs: Iterable[FriendPair], path: str | Path) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write("\t".join(PAIR_COLUMNS) + "\n")
        for p in pairs:
            dist = "" if p.estimated_distance_km is None else repr(p.estimated_distance_km)
            fh.write(f"{p.user_a}\t{p.user_b}\t{dist}\t{p.n_exchanges_total}\t{p.n_exchanges_qualifying}\n")


def read_pairs(path: str | Path) -> list[FriendPair]:
    with open(path, encoding="utf-8") as fh:
        header = fh.readline().rstrip("\n").split("\t")
        if tuple(header) != PAIR_COLUMNS:
            raise ValueError(f"{path}: not a friend pair table")
        out = []
        for line in fh:
            a, b, dist, total, qual = line.rstrip("\n").split("\t")
            out.append(FriendPair(a, b, float(dist) if dist else None, int(total), int(qual)))
    return out


def write_exchanges(exchanges: dict[Pair, list[ExchangeEvent]], path: str | Path) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write("sender_id\treceiver_id\tt_mention\tt_reply\tinterval_s\tdistance_km\n")
        for pair in sorted(exchanges):
            for e in exchanges[pair]:
                fh.write(f"{e.first.sender_id}\t{e.first.receiver_id}\t{e.first.timestamp}\t"
                         f"{e.reply.timestamp}\t{e.interval_s}\t{e.distance_km!r}\n")
