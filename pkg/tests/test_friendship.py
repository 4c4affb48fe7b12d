import random

import pytest
from hypothesis import given, settings, strategies as st

from geofriends.friendship import (
    ExchangeEvent,
    FriendPair,
    FriendshipConfig,
    build_friendship_distances,
    collect_exchanges,
    detect_friend_pairs,
    estimate_pair_distance,
    pair_exchanges,
    read_pairs,
    write_pairs,
)
from geofriends.geodesy import GeoPoint, destination_point, great_circle_distance
from geofriends.ingest import MentionRecord
from oracles import brute_force_friendship


def m(s, r, t, lat=34.0, lon=-118.0):
    return MentionRecord(s, r, lat, lon, t)


def fake_event(distance, interval):
    first = m("u", "v", 1000)
    return ExchangeEvent(first, m("v", "u", 1000 + interval), interval, distance)


def random_stream(rng, n_users=None, n_mentions=None, t_max=20000):
    n_users = n_users or rng.randint(2, 50)
    n_mentions = n_mentions if n_mentions is not None else rng.randint(0, 500)
    users = [f"user{i}" for i in range(n_users)]
    spots = [(34.0 + rng.random(), -118.5 + rng.random()) for _ in range(8)]
    out = []
    for _ in range(n_mentions):
        s, r = rng.sample(users, 2)
        lat, lon = rng.choice(spots)
        out.append(MentionRecord(s, r, lat, lon, rng.randint(1, t_max)))
    return out


# detect_friend_pairs

def test_bidirectional_pair_detected():
    assert detect_friend_pairs([m("u", "v", 1), m("v", "u", 601)]) == [("u", "v")]


def test_unidirectional_excluded():
    assert detect_friend_pairs([m("u", "v", 1), m("u", "v", 50)]) == []


def test_window_limits_detection():
    records = [m("u", "v", 1), m("v", "u", 1001)]
    assert detect_friend_pairs(records, FriendshipConfig(window_s=1000)) == [("u", "v")]
    assert detect_friend_pairs(records, FriendshipConfig(window_s=999)) == []


def test_detection_matches_brute_force_random():
    rng = random.Random(11)
    for _ in range(30):
        records = random_stream(rng)
        window = rng.choice([None, 50, 500, 5000])
        pairs, _, _ = brute_force_friendship(records, window_s=window)
        assert set(detect_friend_pairs(records, FriendshipConfig(window_s=window))) == pairs


@given(st.lists(st.tuples(st.sampled_from("abcd"), st.sampled_from("abcd"), st.integers(1, 100)), max_size=30))
def test_detection_symmetric_under_relabel(raw):
    records = [m(s, r, t) for s, r, t in raw if s != r]
    swap = {"a": "b", "b": "a", "c": "d", "d": "c"}
    relabeled = [m(swap[x.sender_id], swap[x.receiver_id], x.timestamp) for x in records]
    back = {tuple(sorted((swap[a], swap[b]))) for a, b in detect_friend_pairs(relabeled)}
    assert back == set(detect_friend_pairs(records))


def test_config_validation():
    with pytest.raises(ValueError):
        FriendshipConfig(window_s=0)
    with pytest.raises(ValueError):
        FriendshipConfig(max_interval_s=-1)


# pair_exchanges

def test_single_match():
    events = pair_exchanges([m("u", "v", 1), m("v", "u", 1801)])
    assert len(events) == 1 and events[0].interval_s == 1800


def test_fifo_matching():
    events = pair_exchanges([m("u", "v", 100), m("u", "v", 200), m("v", "u", 300)])
    assert [(e.first.timestamp, e.reply.timestamp) for e in events] == [(100, 300)]


def test_fifo_matches_exhaustive_enumeration():
    # On u@0, u@100, v@200 the only matchings with an injective reply are
    # {0->200} and {100->200}; greedy earliest-first picks the former.
    records = [m("u", "v", 10), m("u", "v", 110), m("v", "u", 210)]
    candidates = [[(f, r)] for f in records[:2] for r in records[2:]]
    earliest = min(candidates, key=lambda c: c[0][0].timestamp)
    events = pair_exchanges(records)
    assert [(e.first, e.reply) for e in events] == earliest


def test_long_interval_still_paired():
    events = pair_exchanges([m("u", "v", 1), m("v", "u", 5401)])
    assert len(events) == 1 and events[0].interval_s == 5400


def test_simultaneous_reply_not_matched():
    assert pair_exchanges([m("u", "v", 5), m("v", "u", 5)]) == []


def test_both_directions_open_exchanges():
    events = pair_exchanges([m("u", "v", 1), m("v", "u", 10), m("u", "v", 20)])
    assert [(e.first.sender_id, e.first.timestamp, e.reply.timestamp) for e in events] == [("u", 1, 10), ("v", 10, 20)]


def test_replies_used_once():
    rng = random.Random(5)
    for _ in range(50):
        records = [r for r in random_stream(rng, n_users=2, n_mentions=40)]
        if not records:
            continue
        events = pair_exchanges(records)
        replies = [id(e.reply) for e in events]
        assert len(replies) == len(set(replies))
        for e in events:
            assert e.first.sender_id == e.reply.receiver_id and e.interval_s > 0


def test_pair_exchanges_rejects_mixed_pairs():
    with pytest.raises(ValueError):
        pair_exchanges([m("u", "v", 1), m("u", "w", 2)])


def test_event_distance_is_sender_to_sender():
    a = GeoPoint(34.0, -118.3)
    b = destination_point(a, 45, 12.5)
    events = pair_exchanges([m("u", "v", 1, *a), m("v", "u", 60, *b)])
    assert events[0].distance_km == pytest.approx(12.5, rel=1e-9)


# estimate_pair_distance

def test_mean_of_qualifying():
    assert estimate_pair_distance([fake_event(10, 100), fake_event(20, 200)]) == 15


def test_no_qualifying_is_absent():
    assert estimate_pair_distance([fake_event(10, 5400)], 3600) is None


def test_mean_of_equal_values():
    assert estimate_pair_distance([fake_event(5, 100), fake_event(5, 200), fake_event(5, 3599)]) == 5


def test_interval_filter_is_strict():
    assert estimate_pair_distance([fake_event(5, 3600), fake_event(7, 3599)]) == 7


# build_friendship_distances

def test_single_pair_composition():
    a = GeoPoint(34.05, -118.24)
    b = destination_point(a, 200, 3.0)
    pairs = build_friendship_distances([m("v", "u", 500, *b), m("u", "v", 100, *a)])
    assert len(pairs) == 1
    p = pairs[0]
    assert (p.user_a, p.user_b, p.n_exchanges_total, p.n_exchanges_qualifying) == ("u", "v", 1, 1)
    assert p.estimated_distance_km == pytest.approx(3.0, rel=1e-9)


def test_empty_stream():
    assert build_friendship_distances([]) == []


def test_pairs_without_qualifying_exchange_kept():
    pairs = build_friendship_distances([m("u", "v", 1), m("v", "u", 9000)])
    assert pairs == [FriendPair("u", "v", None, 1, 0)]


def test_output_invariant_under_permutation():
    rng = random.Random(2)
    records = random_stream(rng, n_users=10, n_mentions=300)
    base = build_friendship_distances(records)
    for _ in range(5):
        shuffled = records[:]
        rng.shuffle(shuffled)
        assert build_friendship_distances(shuffled) == base


@settings(max_examples=50, deadline=None)
@given(st.randoms(use_true_random=False))
def test_qualifying_never_exceeds_total(rnd):
    for p in build_friendship_distances(random_stream(rnd, n_mentions=100, t_max=30000)):
        assert p.n_exchanges_qualifying <= p.n_exchanges_total


def test_matches_brute_force_with_window_and_interval():
    rng = random.Random(99)
    for _ in range(20):
        records = random_stream(rng, n_users=rng.randint(2, 15))
        window = rng.choice([None, 100, 2000])
        cap = rng.choice([600, 3600])
        pairs, events, dists = brute_force_friendship(records, window, cap)
        cfg = FriendshipConfig(window_s=window, max_interval_s=cap)
        got = build_friendship_distances(records, cfg)
        assert {(p.user_a, p.user_b) for p in got} == pairs
        assert {(p.user_a, p.user_b): p.estimated_distance_km for p in got} == dists
        got_events = [(e.first, e.reply) for evs in collect_exchanges(records, cfg).values() for e in evs]
        assert sorted(got_events, key=repr) == sorted(events, key=repr)


def test_friend_pair_invariants():
    with pytest.raises(ValueError):
        FriendPair("v", "u")
    with pytest.raises(ValueError):
        FriendPair("u", "v", 1.0, 1, 0)
    with pytest.raises(ValueError):
        FriendPair("u", "v", None, 1, 2)


def test_pairs_table_round_trip(tmp_path):
    pairs = [FriendPair("a", "b", 1.2345678901234567, 3, 2), FriendPair("a", "c", None, 1, 0)]
    write_pairs(pairs, tmp_path / "p.tsv")
    assert read_pairs(tmp_path / "p.tsv") == pairs
    assert (tmp_path / "p.tsv").read_text().splitlines()[2] == "a\tc\t\t1\t0"
