import json
import subprocess
import sys

import pytest

from pathxai.cli import main
from pathxai.constraints import ConstraintInstance, Kind
from pathxai.demos import load_demonstrations_file
from pathxai.executor import read_metrics_csv
from pathxai.miner import load_library, mine
from pathxai.structure import CausalKnowledgeStructure, load_structure


@pytest.fixture
def library_file(tmp_path, data_dir):
    out = tmp_path / "library.json"
    assert main(["mine", "--corpus", str(data_dir / "corpus_fixture.json"), "--out", str(out)]) == 0
    return out


def test_gen_writes_requested_records(tmp_path):
    out = tmp_path / "corpus.json"
    assert main(["gen", "--topology", "t1", "--policy", "shortest", "--n", "20", "--seed", "7", "--out", str(out)]) == 0
    lines = [l for l in out.read_text().splitlines() if l.lstrip().startswith('{"topology":')]
    assert len(lines) == 20
    ds = load_demonstrations_file(out)
    assert len(ds) == 20 and ds.seed == 7


def test_gen_is_reproducible(tmp_path):
    a, b = tmp_path / "a.json", tmp_path / "b.json"
    for out in (a, b):
        assert main(["gen", "--topology", "t1", "--n", "5", "--seed", "3", "--out", str(out)]) == 0
    assert a.read_bytes() == b.read_bytes()


def test_gen_embeds_config(tmp_path):
    out = tmp_path / "c.json"
    main(["gen", "--topology", "t1", "--n", "2", "--seed", "4", "--out", str(out)])
    cfg = json.loads(out.read_text())["config"]
    assert cfg["seed"] == 4 and cfg["tau"] == 0.6 and cfg["discard_size"] == 10


def test_gen_zero_records_exits_2(tmp_path, capsys):
    assert main(["gen", "--topology", "t1", "--n", "0", "--out", str(tmp_path / "x.json")]) == 2
    assert "error" in capsys.readouterr().err


def test_gen_via_policy_checks_flags(tmp_path):
    assert main(["gen", "--topology", "t1", "--policy", "via", "--n", "2", "--out", str(tmp_path / "x.json")]) == 2
    out = tmp_path / "v.json"
    assert main(["gen", "--topology", "t1", "--policy", "via", "--via", "C", "--n", "3", "--out", str(out)]) == 0
    assert all("C" in p for r in load_demonstrations_file(out).records for p in r.selected)


def test_mine_matches_library_api(library_file, corpus):
    lib = load_library(library_file)
    assert lib == mine(corpus)
    assert lib.kinds() == {Kind.CONNECTIVITY, Kind.LOOP_FREE, Kind.SHORTEST, Kind.ENDPOINTS}
    assert json.loads(library_file.read_text())["config"]["tau"] == 0.6


def test_mine_empty_library_warns(tmp_path, data_dir, caplog):
    out = tmp_path / "lib.json"
    code = main(["mine", "--corpus", str(data_dir / "corpus_fixture.json"), "--tau", "0.999", "--out", str(out)])
    assert code == 0
    assert any("empty" in r.getMessage() and r.levelname == "WARNING" for r in caplog.records)
    assert len(load_library(out)) == 0


def test_mine_malformed_corpus_exits_2(tmp_path, capsys):
    bad = tmp_path / "bad.json"
    bad.write_text('{"topologies": [')
    assert main(["mine", "--corpus", str(bad)]) == 2
    assert "ParseError" in capsys.readouterr().err


def test_plan_via_intent_with_mined_library(tmp_path, library_file, capsys):
    code = main(
        ["plan", "--topology", "t2", "--library", str(library_file), "--intent", "FIND PATH FROM A TO D VIA B", "--out-dir", str(tmp_path)]
    )
    assert code == 0
    text = capsys.readouterr().out
    assert text.count("\nStep ") == 4
    assert "VIA B" in text  # the library has no FixedNode, so the note says so
    rules = json.loads((tmp_path / "flow_rules.json").read_text())
    assert rules["path"] == ["A", "B", "D"]
    assert [r["node"] for r in rules["rules"]] == ["A", "B"]
    assert load_structure(tmp_path / "structure.json").kinds == ("Connectivity", "Endpoints", "LoopFree", "Shortest")
    assert (tmp_path / "explanation.txt").read_text() == text


def test_plan_machine_format(tmp_path, library_file, capsys):
    main(["plan", "--topology", "t2", "--library", str(library_file), "--intent", "FIND PATH FROM A TO G", "--format", "machine", "--out-dir", str(tmp_path)])
    doc = json.loads(capsys.readouterr().out)
    assert [s["constraint"] for s in doc["steps"]] == ["Connectivity", "Endpoints", "LoopFree", "Shortest"]
    assert doc["selected"] == [["A", "C", "E", "G"]]


def test_plan_unknown_node_exits_2(tmp_path, library_file, capsys):
    code = main(["plan", "--topology", "t2", "--library", str(library_file), "--intent", "FIND PATH FROM A TO Z", "--out-dir", str(tmp_path)])
    assert code == 2
    assert "UnboundEntity" in capsys.readouterr().err


def test_plan_intent_syntax_error_exits_2(tmp_path, library_file, capsys):
    assert main(["plan", "--topology", "t2", "--library", str(library_file), "--intent", "GO FROM A TO B"]) == 2


def test_plan_with_saved_structure_on_new_topology(tmp_path, library_file, capsys):
    learn = tmp_path / "learn"
    main(["plan", "--topology", "t1", "--library", str(library_file), "--intent", "FIND PATH FROM A TO D", "--out-dir", str(learn)])
    transfer = tmp_path / "transfer"
    code = main(
        ["plan", "--topology", "t2", "--structure", str(learn / "structure.json"), "--intent", "FIND PATH FROM A TO G", "--out-dir", str(transfer)]
    )
    assert code == 0
    assert json.loads((transfer / "flow_rules.json").read_text())["path"] == ["A", "C", "E", "G"]
    assert load_structure(transfer / "structure.json").chain[1].binding == {"start": "A", "dest": "G"}


def test_plan_intent_file(tmp_path, library_file, capsys):
    intents = tmp_path / "intents.txt"
    intents.write_text("# batch\nFIND PATH FROM A TO G\nFIND PATH FROM B TO F\n")
    code = main(["plan", "--topology", "t2", "--library", str(library_file), "--intent-file", str(intents), "--out-dir", str(tmp_path)])
    assert code == 0
    assert (tmp_path / "flow_rules_0.json").exists() and (tmp_path / "flow_rules_1.json").exists()


def _structure_file(tmp_path, chain):
    path = tmp_path / "s.json"
    path.write_text(CausalKnowledgeStructure(tuple(chain)).dumps())
    return path


def test_eval_case_study_columns(tmp_path, library_file, capsys):
    main(["plan", "--topology", "t1", "--library", str(library_file), "--intent", "FIND PATH FROM A TO D", "--out-dir", str(tmp_path)])
    out = tmp_path / "metrics.csv"
    code = main(["eval", "--topology", "t2", "--structure", str(tmp_path / "structure.json"), "--intent", "FIND PATH FROM A TO G", "--out", str(out)])
    assert code == 0
    rows = read_metrics_csv(out.read_text())
    assert all(r.R == 1 for r in rows)
    assert rows[-1].P == 1
    assert out.read_text().startswith("# config: ")


def test_eval_adversarial_chain_shows_recall_loss(tmp_path):
    chain = [
        ConstraintInstance(Kind.SHORTEST, (), 0.85),
        ConstraintInstance(Kind.CONNECTIVITY, (), 0.9),
        ConstraintInstance(Kind.FIXED_NODE, (("node", "C"),), 0.86),
    ]
    out = tmp_path / "m.csv"
    code = main(["eval", "--topology", "t1", "--structure", str(_structure_file(tmp_path, chain)), "--intent", "FIND PATH FROM A TO D VIA C", "--out", str(out)])
    assert code == 0
    assert any(r.R < 1 for r in read_metrics_csv(out.read_text()))


def test_eval_empty_target_exits_2(tmp_path, capsys):
    topo = tmp_path / "split.json"
    topo.write_text(json.dumps({"label": "split", "nodes": ["A", "B", "C"], "links": [{"src": "A", "dst": "B"}]}))
    chain = [ConstraintInstance(Kind.CONNECTIVITY, (), 0.9)]
    code = main(["eval", "--topology", str(topo), "--structure", str(_structure_file(tmp_path, chain)), "--intent", "FIND PATH FROM A TO C", "--out", str(tmp_path / "m.csv")])
    assert code == 2
    assert "EmptyTarget" in capsys.readouterr().err


def test_config_precedence(tmp_path):
    conf = tmp_path / "conf.json"
    conf.write_text(json.dumps({"seed": 9, "discard_size": 4}))
    out = tmp_path / "c.json"
    main(["gen", "--topology", "t1", "--n", "2", "--config", str(conf), "--seed", "5", "--out", str(out)])
    cfg = json.loads(out.read_text())["config"]
    assert cfg["seed"] == 5 and cfg["discard_size"] == 4
    assert all(len(r.discarded) == 4 for r in load_demonstrations_file(out).records)


def test_unknown_config_key_exits_2(tmp_path):
    conf = tmp_path / "conf.json"
    conf.write_text(json.dumps({"sed": 9}))
    assert main(["gen", "--topology", "t1", "--config", str(conf), "--out", str(tmp_path / "x.json")]) == 2


def test_module_entry_point(tmp_path):
    out = tmp_path / "c.json"
    res = subprocess.run(
        [sys.executable, "-m", "pathxai", "gen", "--topology", "t1", "--n", "1", "--seed", "1", "--out", str(out)],
        capture_output=True,
        text=True,
    )
    assert res.returncode == 0, res.stderr
    assert out.exists()
