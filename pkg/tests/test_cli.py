import hashlib
import json

import pytest

from geofriends.cli import main


def run(*argv):
    return main([str(a) for a in argv])


@pytest.fixture(scope="module")
def stream(tmp_path_factory):
    out = tmp_path_factory.mktemp("synth")
    assert run("synth", "--seed", 12, "--n-pairs", 40000, "--exchanges-per-pair", 2,
               "--static-fraction", 1.0, "--out", out) == 0
    return out / "mentions.tsv"


def test_synth_then_fit_recovers_plant(stream, tmp_path, capsys):
    assert run("distances", stream, "--out", tmp_path) == 0
    assert run("fit", tmp_path / "distances.txt", "--out", tmp_path) == 0
    rec = json.loads((tmp_path / "fit.json").read_text())
    assert rec["model_choice"] == "double"
    assert rec["gamma1"] == pytest.approx(0.60, abs=0.1)
    assert rec["gamma2"] == pytest.approx(6.23, abs=0.7)
    assert abs(rec["d_s_km"] - 22.0) <= 25.12 - 19.95
    assert "fit: double power law" in capsys.readouterr().out
    assert (tmp_path / "fit.svg").read_text().startswith("<svg")
    # the pair table is accepted as fit input too
    assert run("fit", tmp_path / "pairs.tsv", "--out", tmp_path / "again") == 0
    assert (tmp_path / "again" / "fit.json").read_bytes() == (tmp_path / "fit.json").read_bytes()


def test_fit_on_empty_file_fails(tmp_path, capsys):
    (tmp_path / "d.txt").write_text("")
    assert run("fit", tmp_path / "d.txt", "--out", tmp_path) != 0
    assert "no distances" in capsys.readouterr().err


def test_ingest_counts(tmp_path, capsys):
    lines = ["a\tb\t34.0\t-118.2\t100", "oops", "b\ta\t34.0\t-118.2\t200",
             "a\tb\t95\t-118.2\t300", "c\ta\t34.1\t-118.3\t400"]
    (tmp_path / "m.tsv").write_text("\n".join(lines) + "\n")
    assert run("ingest", tmp_path / "m.tsv", "--out", tmp_path / "o") == 0
    captured = capsys.readouterr()
    assert "3 accepted, 2 rejected" in captured.out
    assert "2 rejected" in captured.err
    rejects = (tmp_path / "o" / "rejects.tsv").read_text().splitlines()
    assert [r.split("\t")[0] for r in rejects[1:]] == ["2", "4"]
    assert len((tmp_path / "o" / "mentions.tsv").read_text().splitlines()) == 3


def test_ingest_with_region(tmp_path, capsys):
    (tmp_path / "m.tsv").write_text("a\tb\t34.0\t-118.2\t100\na\tb\t51.5\t-0.1\t200\n")
    (tmp_path / "r.txt").write_text("la 33.7 34.35 -118.67 -118.15\n")
    assert run("ingest", tmp_path / "m.tsv", "--region-file", tmp_path / "r.txt", "--region", "la",
               "--out", tmp_path) == 0
    assert "1 in region la" in capsys.readouterr().out
    assert run("ingest", tmp_path / "m.tsv", "--region-file", tmp_path / "r.txt", "--region", "paris",
               "--out", tmp_path) != 0
    assert run("ingest", tmp_path / "m.tsv", "--region", "la", "--out", tmp_path) != 0


def test_missing_input(tmp_path, capsys):
    assert run("friends", tmp_path / "nope.tsv", "--out", tmp_path) != 0
    assert "not found" in capsys.readouterr().err


def test_bad_config_value(tmp_path, capsys):
    (tmp_path / "m.tsv").write_text("a\tb\t34.0\t-118.2\t100\n")
    assert run("friends", tmp_path / "m.tsv", "--window-s", 0, "--out", tmp_path) != 0
    assert run("synth", "--d-s", 5000, "--out", tmp_path) != 0


def test_friends_and_mobility(tmp_path, capsys):
    lines = ["a\tb\t34.0\t-118.2\t100", "b\ta\t34.1\t-118.2\t200", "a\tc\t34.0\t-118.2\t1900"]
    (tmp_path / "m.tsv").write_text("\n".join(lines) + "\n")
    assert run("friends", tmp_path / "m.tsv", "--out", tmp_path) == 0
    assert "1 bidirectional pairs, 1 exchanges" in capsys.readouterr().out
    assert (tmp_path / "friends.tsv").read_text() == "user_a\tuser_b\na\tb\n"
    assert run("mobility", tmp_path / "m.tsv", "--out", tmp_path) == 0
    assert "static fraction 1.000" in capsys.readouterr().out
    rows = (tmp_path / "mobility.tsv").read_text().splitlines()
    assert rows[1].startswith("a\t0.0\t1\tstatic") and rows[2].endswith("undetermined")


def _digest(directory):
    return {p.name: hashlib.sha256(p.read_bytes()).hexdigest() for p in sorted(directory.iterdir())}


def test_report_idempotent_and_inputs_untouched(stream, tmp_path):
    before = hashlib.sha256(stream.read_bytes()).hexdigest()
    assert run("report", stream, "--out", tmp_path / "r1") == 0
    assert run("report", stream, "--out", tmp_path / "r2") == 0
    d1, d2 = _digest(tmp_path / "r1"), _digest(tmp_path / "r2")
    assert d1 == d2
    assert set(d1) == {"pairs.tsv", "distances.txt", "distribution.tsv", "fit.json", "fit.svg",
                       "mobility.tsv", "report.json"}
    assert hashlib.sha256(stream.read_bytes()).hexdigest() == before


def test_json_stream_round_trip(tmp_path):
    assert run("synth", "--seed", 1, "--n-pairs", 50, "--format", "json", "--out", tmp_path / "j") == 0
    assert run("synth", "--seed", 1, "--n-pairs", 50, "--out", tmp_path / "t") == 0
    assert run("distances", tmp_path / "j" / "mentions.jsonl", "--out", tmp_path / "dj") == 0
    assert run("distances", tmp_path / "t" / "mentions.tsv", "--out", tmp_path / "dt") == 0
    assert (tmp_path / "dj" / "pairs.tsv").read_bytes() == (tmp_path / "dt" / "pairs.tsv").read_bytes()
