import json

import numpy as np
import pytest

from ddarts.cli import main
from ddarts.config import ConfigError, RunConfig
from ddarts.genotype import load

TINY = ["data_n=16", "data_channels=2", "channels=2", "steps=2", "batch_size=8"]


def run(*argv):
    return main([str(a) for a in argv])


def test_encode_and_parse_roundtrip(tmp_path, capsys):
    g = tmp_path / "r18.json"
    a = tmp_path / "r18.alpha.json"
    assert run("encode", "resnet18", "-o", g, "--alpha-out", a) == 0
    assert run("parse", a, "-o", tmp_path / "back.json") == 0
    assert load(tmp_path / "back.json") == load(g)


def test_encode_xception(tmp_path):
    assert run("encode", "xception", "-o", tmp_path / "x.json") == 0
    x = load(tmp_path / "x.json")
    assert x.n_cells == 13 and len(x.share_groups) == 5


def test_config_errors_exit_2(tmp_path, capsys):
    out = tmp_path / "runs"
    assert run("parse", "missing.json", "--method", "best", "--out", out) == 2
    assert run("encode", "vgg", "--out", out) == 2
    assert run("search", "mode=nas", "--out", out) == 2
    assert run("search", "bogus_key=1", "--out", out) == 2
    assert run("search", "epochs=many", "--out", out) == 2
    assert run("frobnicate") == 2
    assert not out.exists()
    assert "config error" in capsys.readouterr().err


def test_runtime_errors_exit_1(tmp_path):
    bad = tmp_path / "bad.json"
    bad.write_text('{"cells": 3}')
    assert run("distance", bad, bad) == 1
    assert run("derive", tmp_path / "nope.json", "5") == 1


def test_derive_prints_indices(tmp_path, capsys):
    g = tmp_path / "r18.json"
    run("encode", "resnet18", "-o", g)
    capsys.readouterr()
    assert run("derive", g, "0") == 2
    # reductions at 1 and 2 leave no normal cell to copy between them
    assert run("derive", g, "7") == 1
    assert run("derive", g, "3", "-o", tmp_path / "p.json") == 0
    assert capsys.readouterr().out.strip() == "[0,1,2]"
    x = tmp_path / "x.json"
    run("encode", "xception", "-o", x)
    capsys.readouterr()
    assert run("derive", x, "20", "-o", tmp_path / "d.json") == 0
    idx = [int(v) for v in capsys.readouterr().out.strip()[1:-1].split(",")]
    d = load(tmp_path / "d.json")
    assert len(idx) == d.n_cells == 20
    src = load(x)
    assert all(d.cells[k] == src.cells[i].with_kind(d.cells[k].kind) for k, i in enumerate(idx))


def test_distance_pair_and_matrix(tmp_path, capsys):
    d = tmp_path / "g"
    d.mkdir()
    for name in ("resnet18", "resnet50"):
        run("encode", name, "-o", d / f"{name}.json")
    capsys.readouterr()
    assert run("distance", d / "resnet18.json", d / "resnet50.json") == 0
    v = float(capsys.readouterr().out)
    assert 0 < v <= 1
    assert run("distance", d, "--out", tmp_path / "o") == 0
    rows = capsys.readouterr().out.strip().splitlines()
    assert len(rows) == 3 and rows[0] == ",resnet18,resnet50"
    assert float(rows[1].split(",")[2]) == v
    assert run("stats", d, "--out", tmp_path / "o") == 0
    stats = json.loads((tmp_path / "o" / "stats-seed0" / "stats.json").read_text())
    assert stats["max"] == pytest.approx(v)


def test_gendata_deterministic(tmp_path):
    for name in ("a", "b"):
        assert run("gendata", "data_n=12", "--seed", 4, "-o", tmp_path / name) == 0
    assert (tmp_path / "a").read_bytes() == (tmp_path / "b").read_bytes()


def test_search_artifacts_and_chain(tmp_path, capsys):
    out = tmp_path / "runs"
    args = ["search", *TINY, "cells=6", "epochs=1", "--out", out]
    assert run(*args) == 0
    d = out / "ddarts-seed0"
    for f in ("genotype.json", "metrics.csv", "distance.csv", "alpha.json",
              "checkpoint.bin", "config.txt"):
        assert (d / f).is_file(), f
    first = (d / "metrics.csv").read_bytes()
    assert run(*args) == 0
    assert (d / "metrics.csv").read_bytes() == first
    assert run("derive", d / "genotype.json", "9", "--out", out) == 0
    derived = out / "derive-seed0" / "derived.genotype.json"
    assert load(derived).n_cells == 9
    # the saved config reproduces the run
    assert run("search", "--config", d / "config.txt", "run_name=again", "--out", out) == 0
    assert (out / "again" / "metrics.csv").read_bytes() == first


@pytest.mark.filterwarnings("ignore::RuntimeWarning")
def test_divergence_exit_3(tmp_path):
    from ddarts.search import oriented_textures, write_raster
    ds = oriented_textures(16, 2, 2, 8)
    ds.x[:] = np.inf
    write_raster(ds, tmp_path / "inf.raster")
    assert run("search", *TINY, "cells=2", "epochs=1", f"data={tmp_path / 'inf.raster'}",
               "--out", tmp_path / "o") == 3


def test_config_precedence(tmp_path):
    f = tmp_path / "c.txt"
    f.write_text("# comment\nepochs = 4\nw01 = 5\n")
    cfg = RunConfig.resolve(str(f), {"epochs": "9"})
    assert (cfg.epochs, cfg.w01, cfg.batch_size) == (9, 5.0, 32)
    assert RunConfig.resolve(None, {}).epochs == 30
    assert RunConfig(**RunConfig.parse_text(cfg.to_text())) == cfg
    f.write_text("epochs 4\n")
    with pytest.raises(ConfigError):
        RunConfig.resolve(str(f))
    with pytest.raises(ConfigError):
        RunConfig.resolve(str(tmp_path / "missing"))
