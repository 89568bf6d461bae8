import csv
import json

import pytest

from mpzch.cli import main


def test_collide_csv(tmp_path):
    out = tmp_path / "c.csv"
    rc = main(["collide", "--num-ids", "3000", "--table-size", "2000", "--table-size", "6000",
               "--max-probe", "8", "--max-probe", "64", "--format", "csv", "--out", str(out)])
    assert rc == 0
    rows = list(csv.DictReader(out.open()))
    assert [(r["table_size"], r["max_probe"]) for r in rows] == [
        ("2000", "8"), ("2000", "64"), ("6000", "8"), ("6000", "64")]


def test_collide_baseline_stdout(capsys):
    assert main(["collide", "--method", "baseline", "--num-ids", "1000", "--table-size", "1000"]) == 0
    recs = json.loads(capsys.readouterr().out)
    assert len(recs) == 1 and recs[0]["method"] == "baseline"


def test_churn_cli(tmp_path):
    out = tmp_path / "f.json"
    rc = main(["churn", "--policy", "ttl", "--ttl-seconds", "7200", "--feature-ttl", "1=3600",
               "--table-size", "3000", "--max-probe", "128", "--steps", "10", "--new-per-step", "100",
               "--revisits-per-step", "100", "--active-window", "2", "--out", str(out)])
    assert rc == 0
    rec = json.loads(out.read_text())[0]
    assert rec["method"] == "mpzch" and rec["steps"] == 10


def test_bench_cli(tmp_path):
    out = tmp_path / "b.json"
    rc = main(["bench", "--num-ids", "1000", "--table-size", "2000", "--max-probe", "8",
               "--max-probe", "32", "--repetitions", "1", "--out", str(out)])
    assert rc == 0
    assert [r["max_probe"] for r in json.loads(out.read_text())] == [8, 32]


def test_publish_roundtrip_cli(tmp_path):
    out = tmp_path / "pub" / "summary.json"
    rc = main(["publish-roundtrip", "--num-ids", "2000", "--table-size", "1024", "--num-shards", "2",
               "--policy", "lru", "--batches", "20", "--cuts", "4", "--dim", "4", "--out", str(out)])
    assert rc == 0
    summary = json.loads(out.read_text())
    assert summary["identities_equal"] and summary["weights_equal"] and summary["lookup_consistent"]
    assert summary["deltas"] == 4


@pytest.mark.parametrize("argv", [
    ["collide", "--num-ids", "0"],
    ["churn", "--policy", "ttl", "--ttl-seconds", "0", "--steps", "1"],
    ["collide", "--num-ids", "10", "--table-size", "5", "--num-shards", "9"],
    ["bench", "--num-ids", "10", "--out", "/nonexistent/dir/x.json", "--repetitions", "1"],
])
def test_validation_errors_exit_nonzero(argv):
    assert main(argv) != 0


def test_unknown_subcommand():
    with pytest.raises(SystemExit) as exc:
        main(["explode"])
    assert exc.value.code != 0
