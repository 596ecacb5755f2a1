import argparse
import json

import pytest

from exrec import cli, config
from exrec.corpus import export_posts_xml, export_users_xml
from exrec.synthetic import disagreement_community, planted_community


def run(argv, capsys):
    try:
        code = cli.main([str(a) for a in argv])
    except SystemExit as exc:
        code = exc.code
    out, err = capsys.readouterr()
    return code, out, err


def _dump(community, tmp_path, name):
    d = tmp_path / name
    d.mkdir()
    export_posts_xml(community.store, d / "Posts.xml")
    export_users_xml(community.store, d / "Users.xml")
    return d


def _build(tmp_path, capsys, community, name, seed=42):
    d = _dump(community, tmp_path, name)
    for argv in (["ingest", d / "Posts.xml", "--users", d / "Users.xml", "--out", d / "store"],
                 ["index", "--store", d / "store", "--out", d / "index", "--seed", seed],
                 ["graph", "--store", d / "store", "--out", d / "graph"]):
        code, _, err = run(argv, capsys)
        assert code == 0, err
    return d


def _art(d):
    return ["--store", d / "store", "--index", d / "index", "--graph", d / "graph"]


@pytest.fixture(scope="module")
def planted_dir(tmp_path_factory):
    tmp = tmp_path_factory.mktemp("planted")
    c = planted_community()
    d = tmp / "p"
    d.mkdir()
    export_posts_xml(c.store, d / "Posts.xml")
    export_users_xml(c.store, d / "Users.xml")
    assert cli.main(["ingest", str(d / "Posts.xml"), "--users", str(d / "Users.xml"),
                     "--out", str(d / "store")]) == 0
    assert cli.main(["index", "--store", str(d / "store"), "--out", str(d / "index")]) == 0
    assert cli.main(["graph", "--store", str(d / "store"), "--out", str(d / "graph")]) == 0
    with open(d / "queries.tsv", "w") as fh:
        for q in c.queries():
            fh.write(q.text + "\t" + " ".join(map(str, sorted(q.gold_experts))) + "\n")
    return c, d


def test_ingest_prints_summary(six_row_dump, tmp_path, capsys):
    code, out, _ = run(["ingest", six_row_dump[0], "--out", tmp_path / "s"], capsys)
    assert code == 0
    summary = json.loads(out)["summary"]
    assert (summary["questions"], summary["answers"], summary["skipped"]) == (2, 3, 1)


def test_ingest_with_window(six_row_dump, tmp_path, capsys):
    code, out, _ = run(["ingest", six_row_dump[0], "--out", tmp_path / "s",
                        "--date-from", "2009-02-18", "--date-to", "2009-02-28"], capsys)
    assert code == 0
    assert json.loads(out)["stored"]["questions"] == 1
    manifest = json.loads((tmp_path / "s" / "manifest.json").read_text())
    assert manifest["ingest"]["window"] == ["2009-02-18T00:00:00.000", "2009-02-28T00:00:00.000"]
    assert manifest["ingest"]["run_config"]["date_to"] == "2009-02-28"


def test_inverted_window_is_a_usage_error(six_row_dump, tmp_path, capsys):
    code, _, _ = run(["ingest", six_row_dump[0], "--out", tmp_path / "s",
                      "--date-from", "2010-01-01", "--date-to", "2009-01-01"], capsys)
    assert code == 1


def test_missing_file_exit_2(tmp_path, capsys):
    code, _, err = run(["ingest", tmp_path / "none.xml", "--out", tmp_path / "s"], capsys)
    assert code == 2
    assert "I/O" in err


def test_truncated_file_exit_3(six_row_dump, tmp_path, capsys):
    p = tmp_path / "cut.xml"
    p.write_bytes(six_row_dump[0].read_bytes()[:600])
    code, _, err = run(["ingest", p, "--out", tmp_path / "s"], capsys)
    assert code == 3
    assert "byte offset" in err


def test_usage_errors_exit_1(capsys):
    assert run([], capsys)[0] == 1
    assert run(["recommend"], capsys)[0] == 1
    assert run(["index", "--store", "x", "--out", "y", "--idf-variant", "bm25"], capsys)[0] == 1


def test_recommend_table_and_json(planted_dir, tmp_path, capsys):
    c, d = planted_dir
    q = c.queries()[0]
    code, out, _ = run(["recommend", *_art(d), "--query", q.text, "--top", 3], capsys)
    assert code == 0
    lines = out.splitlines()
    assert lines[0] == f"query: {q.text}"
    assert len(lines) == 2 + 3
    assert lines[2].split()[:2] == ["1", str(c.experts[0])]
    code, out, _ = run(["recommend", *_art(d), "--query", q.text, "--output-format", "json",
                        "--json", tmp_path / "r.json"], capsys)
    report = json.loads(out)
    assert report == json.loads((tmp_path / "r.json").read_text())
    assert report["config"]["seed"] == 42
    assert report["artifacts"]["index_manifest_hash"]


def test_recommend_repeat_is_byte_identical(planted_dir, tmp_path, capsys):
    c, d = planted_dir
    q = c.queries()[1].text
    for name in ("a.json", "b.json"):
        assert run(["recommend", *_art(d), "--query", q, "--seed", 42, "--json", tmp_path / name],
                   capsys)[0] == 0
    assert (tmp_path / "a.json").read_bytes() == (tmp_path / "b.json").read_bytes()


def test_rebuilding_artifacts_is_byte_identical(tmp_path, capsys):
    c = disagreement_community()
    a = _build(tmp_path, capsys, c, "a")
    b = _build(tmp_path, capsys, c, "b")
    for sub in ("store", "index", "graph"):
        for f in sorted((a / sub).iterdir()):
            text_a = f.read_text()
            text_b = (b / sub / f.name).read_text()
            assert text_a == text_b, f


def test_alpha_changes_order_on_disagreement_fixture(tmp_path, capsys):
    c = disagreement_community()
    d = _build(tmp_path, capsys, c, "dis")
    orders = []
    for alpha in (0, 1):
        code, out, _ = run(["recommend", *_art(d), "--query", c.notes["query"], "--alpha", alpha,
                            "--output-format", "json"], capsys)
        assert code == 0
        orders.append([e["user_id"] for e in json.loads(out)["entries"]])
    assert orders[0] != orders[1]


def test_explain(planted_dir, capsys):
    c, d = planted_dir
    q = c.queries()[0]
    code, out, _ = run(["explain", *_art(d), "--query", q.text, "--user", c.experts[0]], capsys)
    assert code == 0
    rec = json.loads(out)
    assert rec["final_rank"] == 1
    assert rec["run_config"]["alpha"] == 0.5
    code, _, err = run(["explain", *_art(d), "--query", q.text, "--user", 999999], capsys)
    assert code == 1 and "999999" in err


def test_evaluate_planted_map_is_one(planted_dir, tmp_path, capsys):
    _, d = planted_dir
    code, out, _ = run(["evaluate", *_art(d), "--queries", d / "queries.tsv",
                        "--out", tmp_path / "eval.json", "--plot-data", tmp_path / "plot.csv",
                        "--threads", 3], capsys)
    assert code == 0
    assert "MAP 1.0000 over 5 queries" in out
    report = json.loads((tmp_path / "eval.json").read_text())
    assert report["map"] == 1.0
    assert report["config"]["threads"] == 3
    assert (tmp_path / "plot.csv").read_text().startswith("query_id,rank,precision\n")


def test_empty_query_exit_1(planted_dir, capsys):
    _, d = planted_dir
    code, _, err = run(["recommend", *_art(d), "--query", "the of and"], capsys)
    assert code == 1 and "no indexable terms" in err


def test_mismatched_artifacts_exit_4(planted_dir, tmp_path, capsys):
    c, d = planted_dir
    other = _build(tmp_path, capsys, disagreement_community(), "other")
    code, _, err = run(["recommend", "--store", d / "store", "--index", other / "index",
                        "--graph", d / "graph", "--query", c.queries()[0].text], capsys)
    assert code == 4
    fp_a = json.loads((d / "store" / "manifest.json").read_text())["fingerprint"]
    fp_b = json.loads((other / "store" / "manifest.json").read_text())["fingerprint"]
    assert fp_a in err and fp_b in err


def test_graph_mismatch_exit_4(planted_dir, tmp_path, capsys):
    c, d = planted_dir
    other = _build(tmp_path, capsys, disagreement_community(), "other")
    code, _, err = run(["recommend", "--store", d / "store", "--index", d / "index",
                        "--graph", other / "graph", "--query", c.queries()[0].text], capsys)
    assert code == 4 and "graph" in err


def test_seed_mismatch_exit_4(planted_dir, capsys):
    c, d = planted_dir
    code, _, _ = run(["recommend", *_art(d), "--query", c.queries()[0].text, "--seed", 7], capsys)
    assert code == 4


def _subparsers():
    parser = cli.build_parser()
    action = next(a for a in parser._actions if isinstance(a, argparse._SubParsersAction))
    return action.choices


@pytest.mark.parametrize("name", ["ingest", "index", "graph", "recommend", "explain", "evaluate"])
def test_help_lists_every_default(name, capsys):
    sub = _subparsers()[name]
    code, out, _ = run([name, "--help"], capsys)
    assert code == 0
    for action in sub._actions:
        if isinstance(action, argparse._HelpAction) or not action.option_strings:
            continue
        assert action.option_strings[-1] in out
        assert "default:" in action.help or "required" in action.help, action.option_strings


def test_config_file_and_flag_precedence(planted_dir, tmp_path, capsys, monkeypatch):
    c, d = planted_dir
    env_cfg = tmp_path / "env.cfg"
    env_cfg.write_text("alpha = 0.1\nk-users = 4\n")
    file_cfg = tmp_path / "run.cfg"
    file_cfg.write_text("# overrides the env file\nalpha = 0.2\n")
    monkeypatch.setenv("EXREC_CONFIG", str(env_cfg))
    q = c.queries()[0].text
    _, out, _ = run(["recommend", *_art(d), "--query", q, "--output-format", "json"], capsys)
    assert (json.loads(out)["config"]["alpha"], json.loads(out)["config"]["k_users"]) == (0.1, 4)
    _, out, _ = run(["recommend", *_art(d), "--query", q, "--output-format", "json",
                     "--config", file_cfg], capsys)
    assert json.loads(out)["config"]["alpha"] == 0.2
    _, out, _ = run(["recommend", *_art(d), "--query", q, "--output-format", "json",
                     "--config", file_cfg, "--alpha", 0.9], capsys)
    assert json.loads(out)["config"]["alpha"] == 0.9
    assert len(json.loads(out)["entries"]) <= 4


def test_bad_config_file(planted_dir, tmp_path, capsys):
    c, d = planted_dir
    bad = tmp_path / "bad.cfg"
    bad.write_text("alpah = 0.3\n")
    code, _, err = run(["recommend", *_art(d), "--query", "x", "--config", bad], capsys)
    assert code == 1 and "alpah" in err
    code, _, _ = run(["recommend", *_art(d), "--query", "x", "--config", tmp_path / "nope"], capsys)
    assert code == 2


def test_config_text_round_trip():
    cfg = config.RunConfig(alpha=0.7, weighted=True, date_from="2009-02-18")
    assert config.resolve(config.parse_config_text(config.write_config_text(cfg)), environ={}) == cfg


def test_standard_defaults():
    cfg = config.RunConfig()
    assert (cfg.d, cfg.k_users, cfg.k_posts, cfg.test_fraction, cfg.accept_threshold, cfg.seed) == \
        (0.85, 20, 50, 0.2, 15, 42)
