from __future__ import annotations

import json
import math
import subprocess
import sys

import pytest

from multigila import generators as gen
from multigila.cli import main
from multigila.graph import ParseError, dump_edge_list
from multigila.metrics import read_coords
from multigila.pipeline import PipelineConfig, PipelineError, layout_graph, run_pipeline


def write_graph(tmp_path, g, name="g.txt"):
    p = tmp_path / name
    p.write_text(dump_edge_list(g))
    return p


def test_grid_20_end_to_end(tmp_path):
    src = write_graph(tmp_path, gen.grid(20, 20))
    report = tmp_path / "r.json"
    res = run_pipeline(PipelineConfig(input=str(src), report=str(report)))
    doc = json.loads(report.read_text())
    assert res.report.cre <= 0.05
    assert doc["cre"] == res.report.cre
    assert doc["levels"][0] == 400
    assert all(a > b for a, b in zip(doc["levels"], doc["levels"][1:]))
    assert doc["supersteps"] > 0 and doc["messages"] > 0


def test_empty_input_is_parse_error(tmp_path, capsys):
    src = tmp_path / "empty.txt"
    src.write_text("")
    with pytest.raises(PipelineError) as info:
        run_pipeline(PipelineConfig(input=str(src)))
    assert info.value.phase == "load"
    assert isinstance(info.value.cause, ParseError)
    assert main(["layout", str(src)]) != 0
    assert "load" in capsys.readouterr().err


def test_missing_file_exits_nonzero(tmp_path):
    assert main(["layout", str(tmp_path / "nope.txt")]) == 1


def test_same_seed_byte_identical(tmp_path):
    src = write_graph(tmp_path, gen.random_connected(150, 260, seed=4))
    outs = []
    for i in range(2):
        out = tmp_path / f"c{i}.coords"
        assert main(["layout", str(src), "--coords", str(out), "--seed", "9"]) == 0
        outs.append(out.read_bytes())
    assert outs[0] == outs[1]
    other = tmp_path / "other.coords"
    main(["layout", str(src), "--coords", str(other), "--seed", "10"])
    assert other.read_bytes() != outs[0]


def test_dump_levels_snapshots(tmp_path):
    g = gen.grid(15, 15)
    src = write_graph(tmp_path, g)
    dump = tmp_path / "dump"
    assert main(["layout", str(src), "--dump-levels", str(dump), "--coarsen-threshold", "20"]) == 0
    graphs = sorted(dump.glob("component0_level*_graph.json"))
    assert len(graphs) >= 2
    sizes = []
    for i in range(len(graphs)):
        doc = json.loads((dump / f"component0_level{i}_graph.json").read_text())
        sizes.append(len(doc["vertices"]))
        if i < len(graphs) - 1:
            placed = read_coords((dump / f"component0_level{i}_placed.coords").read_bytes())
            assert set(placed) == {int(v) for v in doc["vertices"]}
    for a, b in zip(sizes, sizes[1:]):
        assert b <= math.ceil(a / 2)


def test_components_arranged_disjoint():
    g = gen.grid(4, 4)
    shifted = {v + 100: {u + 100: w for u, w in g.adj[v].items()} for v in g.vertex_ids}
    from multigila.graph import Graph
    both = Graph({**g.adj, **shifted, 500: {}})
    res = layout_graph(both, PipelineConfig(seed=1))
    assert len(res.components) == 3
    assert set(res.layout) == set(both.vertex_ids)


def test_print_config_precedence(tmp_path, capsys, monkeypatch):
    conf = tmp_path / "run.conf"
    conf.write_text("workers = 3\nseed = 5\nsun_probability = 0.3\n[layout]\nideal_length = 2.5\n")
    monkeypatch.setenv("MULTIGILA_WORKERS", "2")
    assert main(["layout", "--print-config"]) == 0
    assert "workers = 2" in capsys.readouterr().out
    assert main(["layout", "--config", str(conf), "--print-config"]) == 0
    out = capsys.readouterr().out
    assert "workers = 3" in out and "seed = 5" in out and "ideal_length = 2.5" in out
    assert main(["layout", "--config", str(conf), "--seed", "7", "--mass-repulsion", "off",
                 "--print-config"]) == 0
    out = capsys.readouterr().out
    assert "seed = 7" in out and "sun_probability = 0.3" in out
    assert "mass_repulsion = False" in out


def test_bad_config_exit_code(tmp_path):
    conf = tmp_path / "bad.conf"
    conf.write_text("bogus = 1\n")
    assert main(["layout", "--config", str(conf), "--print-config"]) == 2
    conf.write_text("workers = many\n")
    assert main(["layout", "--config", str(conf), "--print-config"]) == 2


def test_svg_written(tmp_path):
    g = gen.cycle(12)
    src = write_graph(tmp_path, g)
    svg = tmp_path / "out.svg"
    assert main(["layout", str(src), "--svg", str(svg)]) == 0
    text = svg.read_text()
    assert text.count("<circle") == 12 and text.count("<line") == 12


def test_console_script_module_entry(tmp_path):
    src = write_graph(tmp_path, gen.path(5))
    proc = subprocess.run([sys.executable, "-m", "multigila.cli", "layout", str(src)],
                          capture_output=True, text=True)
    assert proc.returncode == 0
    assert "cre=" in proc.stdout
