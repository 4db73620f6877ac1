import math
from pathlib import Path

import pytest

from buyhold.cli import (
    EXIT_INFINITE,
    EXIT_OK,
    EXIT_USAGE,
    EXIT_VIOLATION,
    main,
    parse_model,
)
from buyhold.models import GBM, RoughFOU, Scott


def test_price_call(capsys):
    assert main(["price", "--payoff", "pos(x-100)", "--s0", "100"]) == EXIT_OK
    out = capsys.readouterr().out
    assert "price=100.0" in out and "delta=1.0" in out


def test_price_constant(capsys):
    assert main(["price", "--payoff", "5", "--s0", "7"]) == EXIT_OK
    out = capsys.readouterr().out
    assert "price=5.0" in out and "delta=0.0" in out


def test_price_non_affine_product_exits_one(capsys):
    assert main(["price", "--payoff", "x*x", "--s0", "1"]) == EXIT_USAGE
    assert "non-affine product" in capsys.readouterr().err


def test_price_negative_payoff_mentions_shift(capsys):
    assert main(["price", "--payoff", "x-100", "--s0", "80"]) == EXIT_USAGE
    assert "cash shift" in capsys.readouterr().err
    assert main(["price", "--payoff", "x-100", "--s0", "80", "--auto-shift"]) == EXIT_OK
    out = capsys.readouterr().out
    assert "price=80.0" in out and "-20.0" in out  # original claim price by cash invariance


def test_parse_model_strings():
    spec = parse_model("gbm:sigma=0.3", 50.0, 2.0, 10)
    assert spec.variant == GBM(0.3) and spec.horizon == 2.0
    spec = parse_model("scott", 100.0, 1.0, 8)
    assert isinstance(spec.variant, Scott)
    spec = parse_model("roughfou:h=0.2", 100.0, 1.0, 8)
    assert isinstance(spec.variant, RoughFOU) and spec.variant.h == 0.2
    with pytest.raises(ValueError):
        parse_model("sabr", 100.0, 1.0, 8)
    with pytest.raises(ValueError):
        parse_model("gbm:vol=0.2", 100.0, 1.0, 8)


def test_simulate_dump(tmp_path, capsys):
    code = main([
        "simulate", "--model", "gbm", "--paths", "3", "--steps", "4",
        "--seed", "11", "--out", str(tmp_path),
    ])
    assert code == EXIT_OK
    lines = (tmp_path / "paths.csv").read_text().splitlines()
    assert lines[0] == "# seed=11"
    assert lines[1] == "path_id,t,S,nu"
    assert len(lines) == 2 + 3 * 5
    assert (tmp_path / "config_used.ini").exists()


def test_envelope_command(tmp_path):
    code = main(["envelope", "--payoff", "ind_gt(x,2)", "--out", str(tmp_path)])
    assert code == EXIT_OK
    text = (tmp_path / "envelope.csv").read_text()
    assert text.startswith("x,value,slope_right\n0.0,0.0,0.5\n")


def test_verify_domination_pass_and_sabotage(tmp_path, capsys):
    base = [
        "verify", "domination", "--payoff", "pos(x-100)", "--s0", "100",
        "--paths", "2000", "--steps", "32", "--seed", "3",
    ]
    assert main(base + ["--out", str(tmp_path / "ok")]) == EXIT_OK
    out = capsys.readouterr().out
    assert "verify: OK" in out
    code = main(base + ["--out", str(tmp_path / "bad"), "--delta-override", "0"])
    assert code == EXIT_VIOLATION
    out = capsys.readouterr().out
    assert "FAIL" in out
    assert (tmp_path / "bad" / "domination.csv").exists()


def test_verify_stopping(tmp_path, capsys):
    code = main([
        "verify", "stopping", "--payoff", "min(x,50)", "--s0", "30",
        "--out", str(tmp_path),
    ])
    assert code == EXIT_OK
    assert "stopping/oracle" in capsys.readouterr().out


def test_verify_config_file_with_flag_override(tmp_path, capsys):
    cfg = tmp_path / "run.ini"
    cfg.write_text(
        "[run]\npayoff = pos(x-100)\ns0 = 100\npaths = 1500\nsteps = 16\n"
        "seed = 4\nmodel = gbm\n"
    )
    out_dir = tmp_path / "out"
    code = main([
        "verify", "upper", "--config", str(cfg), "--paths", "800",
        "--out", str(out_dir),
    ])
    assert code == EXIT_OK
    echoed = (out_dir / "config_used.ini").read_text()
    assert "paths = 800" in echoed  # flag wins over config
    assert "seed = 4" in echoed


def test_verify_bad_config_exits_one(tmp_path, capsys):
    cfg = tmp_path / "run.ini"
    cfg.write_text("[run]\npaths = -5\n")
    assert main(["verify", "upper", "--config", str(cfg)]) == EXIT_USAGE


def test_usage_error():
    assert main(["price", "--payoff", "x"]) == EXIT_USAGE  # missing --s0
