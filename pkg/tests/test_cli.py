"""Command-line interface: dispatch, files, determinism, exit codes."""

import json
import math
from pathlib import Path

import numpy as np
import pytest

from specpart.cli import (ConfigError, RunConfig, densities_payload,
                          load_config_file, main, merge_config,
                          partition_from_payload, recipe, write_json)
from specpart.grids import DomainSpec, build_mask
from specpart.optimizer import DensitySet, project_partition


def run_cli(args):
    return main(args)


def test_reference_prints_table(capsys):
    assert run_cli(["reference", "--domain", "square", "--count", "10"]) == 0
    out = capsys.readouterr().out
    assert "19.7392" in out
    assert "49.3480" in out
    assert out.count("\n") >= 11


def test_reference_writes_csv(tmp_path, capsys):
    out = tmp_path / "disk.csv"
    code = run_cli(["reference", "--domain", "disk", "--count", "5",
                    "--out", str(out), "--emit", "csv"])
    assert code == 0
    rows = out.read_text().splitlines()
    assert rows[0].startswith("k,eigenvalue")
    assert len(rows) == 6
    assert (tmp_path / "disk.csv.manifest.json").exists()


def test_unknown_domain_exits_config_error(capsys):
    with pytest.raises(SystemExit) as err:
        run_cli(["reference", "--domain", "hexagon", "--count", "3"])
    assert err.value.code == 2


def test_optimize_k1_writes_outputs(tmp_path, capsys):
    out = tmp_path / "run.json"
    code = run_cli(["optimize", "--domain", "disk", "--k", "1",
                    "--objective", "pnorm", "--p", "1", "--seed", "1",
                    "--grids", "60", "--refine", "201",
                    "--out", str(out), "--emit", "json,csv,svg,pgm"])
    assert code == 0
    payload = json.loads(out.read_text())
    lam = payload["relaxed_eigenvalues"][0]
    # single coarse grid: the masked-boundary error on the disk is O(h)
    assert abs(lam - 5.7831) / 5.7831 < 0.03
    assert payload["partition"]["eigenvalues"][0] == pytest.approx(5.7831,
                                                                   rel=0.03)
    assert (tmp_path / "run.cells.csv").exists()
    assert (tmp_path / "run.partition.svg").exists()
    assert (tmp_path / "run.history.svg").exists()
    assert (tmp_path / "run.mask.pgm").exists()
    assert (tmp_path / "run.json.manifest.json").exists()
    svg = (tmp_path / "run.partition.svg").read_text()
    assert svg.startswith("<?xml")


def test_optimize_determinism(tmp_path):
    args = ["optimize", "--domain", "square", "--k", "2", "--objective",
            "pnorm", "--p", "2", "--seed", "7", "--grids", "40",
            "--max-iters", "25", "--refine", "121", "--emit", "json"]
    out_a = tmp_path / "a.json"
    out_b = tmp_path / "b.json"
    assert run_cli(args + ["--out", str(out_a)]) == 0
    assert run_cli(args + ["--out", str(out_b)]) == 0
    assert out_a.read_bytes() == out_b.read_bytes()


def test_report_roundtrip(tmp_path, capsys):
    out = tmp_path / "run.json"
    assert run_cli(["optimize", "--domain", "square", "--k", "2",
                    "--objective", "pnorm", "--p", "2", "--seed", "3",
                    "--grids", "40", "--max-iters", "25", "--refine", "121",
                    "--out", str(out)]) == 0
    rep = tmp_path / "rep.json"
    assert run_cli(["report", "--run", str(out), "--refine", "121",
                    "--out", str(rep), "--emit", "json,csv"]) == 0
    payload = json.loads(rep.read_text())
    assert len(payload["partition"]["cells"]) == 2
    assert (tmp_path / "rep.csv").exists()


def _half_split_run_file(path, splits=(0.5,)):
    mask = build_mask(DomainSpec.square(), 80)
    X, _ = mask.node_xy()
    xs = [0.0] + list(splits) + [1.0]
    fields = [((X >= xs[i]) & (X < xs[i + 1])).astype(float)
              for i in range(len(xs) - 1)]
    ds = project_partition(DensitySet(mask, np.stack(fields)))
    write_json({"config": {"domain": "square"},
                "densities": densities_payload(ds)}, path)


def test_criterion_on_run_file(tmp_path, capsys):
    run = tmp_path / "half.json"
    _half_split_run_file(run)
    code = run_cli(["criterion", "--run", str(run), "--pair", "0,1",
                    "--refine", "151"])
    assert code == 0
    out = capsys.readouterr().out
    assert "inconclusive" in out


def test_criterion_incompatible_pair_is_numerical_failure(tmp_path, capsys):
    run = tmp_path / "strip.json"
    _half_split_run_file(run, splits=(0.3,))
    code = run_cli(["criterion", "--run", str(run), "--pair", "0,1",
                    "--refine", "151"])
    # the incompatibility is reported per pair, not fatal
    assert code == 0
    assert "not nodally compatible" in capsys.readouterr().out


def test_io_error_exit_code(tmp_path):
    blocker = tmp_path / "blocker"
    blocker.write_text("not a directory")
    code = run_cli(["reference", "--domain", "square", "--count", "3",
                    "--out", str(blocker / "sub" / "x.json"),
                    "--emit", "json"])
    assert code == 4


def test_dn_list(capsys):
    assert run_cli(["dn", "--list"]) == 0
    out = capsys.readouterr().out
    for name in ("square3", "square5", "triangle3", "disk6", "disk10"):
        assert name in out


def test_dn_unknown_config(capsys):
    assert run_cli(["dn", "--config", "circle99"]) == 2


@pytest.mark.slow
def test_dn_square3_writes_json(tmp_path, capsys):
    out = tmp_path / "dn3.json"
    code = run_cli(["dn", "--config", "square3", "--resolution", "281",
                    "--refine", "201", "--out", str(out),
                    "--emit", "json,svg"])
    assert code == 0
    payload = json.loads(out.read_text())
    assert abs(payload["eigenvalue"] - 66.5812) / 66.5812 < 0.01
    assert payload["k"] == 3
    assert len(payload["partition"]["cells"]) == 3
    geometry = partition_from_payload(payload["partition"])
    assert geometry.k == 3
    assert (tmp_path / "dn3.partition.svg").exists()


def test_config_file_merging(tmp_path):
    cfg_file = tmp_path / "run.cfg"
    cfg_file.write_text(
        "# settings\n"
        "k = 4\n"
        "grids = 40,80\n"
        "seed = 9\n"
        "p = 2.5\n")
    parser_args = ["optimize", "--config-file", str(cfg_file), "--k", "3"]
    from specpart.cli import build_parser
    args = build_parser().parse_args(parser_args)
    cfg = merge_config(args)
    assert cfg.k == 3              # flag beats file
    assert cfg.grids == (40, 80)   # file beats default
    assert cfg.seed == 9
    assert cfg.p == 2.5


def test_config_file_rejects_unknown_key(tmp_path):
    cfg_file = tmp_path / "bad.cfg"
    cfg_file.write_text("not_a_key = 3\n")
    from specpart.cli import build_parser
    args = build_parser().parse_args(["optimize", "--config-file",
                                      str(cfg_file)])
    with pytest.raises(ConfigError):
        merge_config(args)


def test_recipe_catalog():
    preset = recipe("sweep-triangle2")
    assert preset.subcommand == "sweep"
    assert preset.domain == "triangle"
    assert preset.k == 2
    batch = recipe("table6")
    assert batch.batch
    sub = {run.subcommand for run in batch.batch}
    assert sub == {"optimize", "dn"}
    names = [run.dn_config for run in batch.batch if run.subcommand == "dn"]
    assert "square3" in names
    with pytest.raises(ConfigError):
        recipe("table99")


def test_recipe_unknown_via_cli(capsys):
    assert run_cli(["recipe", "table99"]) == 2


def test_missing_seed_is_config_error(capsys):
    code = run_cli(["optimize", "--domain", "square", "--k", "2",
                    "--grids", "40"])
    assert code == 2
    assert "seed" in capsys.readouterr().err
