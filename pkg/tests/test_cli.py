import json
import math

import pytest

from graphtrf.cli import main
from graphtrf.evaluate import parse_report
from graphtrf.graph import TaskKind, read_instances

SIM = "gpt4o"


def run(tmp_path, *argv):
    return main([argv[0], "--workdir", str(tmp_path), *argv[1:]])


def test_gen_counts_and_determinism(tmp_path):
    assert run(tmp_path, "gen", "--tasks", "conn", "--count", "5", "--seed", "7") == 0
    first = (tmp_path / "instances.jsonl").read_bytes()
    assert len(first.splitlines()) == 5
    assert run(tmp_path, "gen", "--tasks", "conn", "--count", "5", "--seed", "7") == 0
    assert (tmp_path / "instances.jsonl").read_bytes() == first
    manifest = json.loads((tmp_path / "manifests" / "gen.json").read_text())
    assert manifest["seed"] == 7 and len(manifest["outputs"]) == 1


def test_gen_attributed(tmp_path):
    assert run(tmp_path, "gen", "--tasks", "lp,nc", "--count", "3") == 0
    insts = read_instances(tmp_path / "instances.jsonl")
    assert [q.task for q in insts] == [TaskKind.LP] * 3 + [TaskKind.NC] * 3
    assert all(q.graph.node_attrs for q in insts)


def test_gen_default_tasks(tmp_path):
    assert run(tmp_path, "gen", "--count", "2") == 0
    insts = read_instances(tmp_path / "instances.jsonl")
    assert len(insts) == 14 and len({q.task for q in insts}) == 7


def test_exit_codes(tmp_path, monkeypatch, capsys):
    assert run(tmp_path, "gen", "--tasks", "nope") == 2
    assert run(tmp_path, "train") == 3
    assert "run `graphtrf build-trfp` first" in capsys.readouterr().err
    assert run(tmp_path, "report") == 3

    run(tmp_path, "gen", "--tasks", "conn", "--count", "1")
    # no key for the live client
    monkeypatch.delenv("GRAPHTRF_API_KEY", raising=False)
    cfg = tmp_path / "live.toml"
    cfg.write_text('[client]\nbase_url = "https://llm.invalid/v1"\nmodel = "m"\n')
    assert run(tmp_path, "probe", "--config", str(cfg), "--k", "1") == 4
    # live client without a [client] section is a config error
    assert run(tmp_path, "probe", "--k", "1") == 2
    assert run(tmp_path, "probe", "--sim", "no-such-profile") == 2
    assert run(tmp_path, "eval", "--sim", SIM, "--strategy", "fixed:Tnope") == 2


def test_sim_profile_gap_is_a_client_failure(tmp_path):
    run(tmp_path, "gen", "--tasks", "conn", "--count", "1")
    prof = tmp_path / "p.toml"
    prof.write_text('name = "partial"\n')
    assert run(tmp_path, "probe", "--sim", str(prof), "--k", "1") == 4


def test_render_prints_prompt(tmp_path, capsys):
    run(tmp_path, "gen", "--tasks", "sp", "--count", "1")
    capsys.readouterr()
    assert run(tmp_path, "render", "--trf", "Tlist") == 0
    out = capsys.readouterr().out
    assert "shortest path" in out.lower()


def pipeline(workdir, seed="3"):
    steps = [
        ("gen", "--tasks", "conn,cyc,ts,sp,mf,bgm,hp", "--count", "6", "--seed", seed),
        ("probe", "--sim", SIM, "--k", "4", "--seed", seed),
        ("build-trfp",),
        ("train", "--epochs", "60", "--seed", seed),
        ("gen", "--tasks", "conn,cyc,ts,sp,mf,bgm,hp", "--count", "4", "--seed", "99", "--out",
         str(workdir / "eval_instances.jsonl")),
        ("eval", "--sim", SIM, "--instances", str(workdir / "eval_instances.jsonl"), "--seed", seed),
        ("report",),
    ]
    for step in steps:
        assert main([step[0], "--workdir", str(workdir), *step[1:]]) == 0, step
    return (workdir / "report.tsv").read_bytes()


@pytest.fixture(scope="module")
def two_runs(tmp_path_factory):
    a, b = tmp_path_factory.mktemp("a"), tmp_path_factory.mktemp("b")
    return a, pipeline(a), pipeline(b)


def test_pipeline_byte_identical(two_runs):
    _, first, second = two_runs
    assert first == second


def test_report_consistency(two_runs):
    workdir, text, _ = two_runs
    alpha, rows = parse_report(text.decode())
    assert alpha == 0.5
    assert list(rows)[:8] == [f"fixed:{t}" for t in ("Vdot", "Vneato", "Vcirco", "Vfdp", "Vsfdp", "Tset", "Tlist", "Tmat")]
    for strategy, cells in rows.items():
        for task, (acc, tok, g) in cells.items():
            assert abs(acc / tok ** alpha - g) <= 1e-9
    for task in rows["ideal"]:
        best = max(rows[f][task][2] for f in rows if f.startswith("fixed:"))
        assert rows["ideal"][task][2] >= best
    assert "# ideal routing vs fixed TRFs" in text.decode()
    for name in ("gen", "probe", "build-trfp", "train", "eval", "report"):
        assert (workdir / "manifests" / f"{name}.json").exists()


def test_probe_resume_is_noop(two_runs, capsys):
    workdir, _, _ = two_runs
    before = (workdir / "probe.jsonl").read_bytes()
    trfp = (workdir / "trfp.jsonl").read_bytes()
    assert main(["probe", "--workdir", str(workdir), "--sim", SIM, "--k", "4", "--seed", "3"]) == 0
    assert (workdir / "probe.jsonl").read_bytes() == before
    assert (workdir / "trfp.jsonl").read_bytes() == trfp
    assert len(before.splitlines()) == 42 * 8 * 4


def test_route_and_pretty(two_runs, capsys):
    workdir, _, _ = two_runs
    assert main(["route", "--workdir", str(workdir)]) == 0
    routes = [json.loads(l) for l in (workdir / "routes.jsonl").read_text().splitlines()]
    assert len(routes) == 42
    capsys.readouterr()
    assert main(["report", "--workdir", str(workdir), "--pretty", "--out", str(workdir / "pretty.tsv")]) == 0
    out = capsys.readouterr().out
    assert "ideal" in out and "Conn" in out
