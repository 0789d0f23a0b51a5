import io

import pytest

from coupledcloud.experiment import (RESULT_HEADER, ConfigError, parse_config,
                                     parse_config_text, run_sweep, write_results)

MINIMAL = "hosts = 40\nvms_per_host = 5\nseed = 3\n"


def test_minimal_config_gets_defaults():
    cfg = parse_config_text(MINIMAL)
    assert cfg.gen.host_count == 40 and cfg.gen.vms_per_host == 5 and cfg.seed == 3
    assert cfg.gen.s_max == 500 and cfg.gen.alpha == 2.5 and cfg.gen.m == 2
    assert cfg.protect_fractions == (0.0, 0.0005, 0.05, 0.2)
    assert cfg.attack_fractions == (0.005, 0.05, 0.1)
    assert cfg.strategies == ("degree", "random")
    assert cfg.trials == 100 and cfg.C == 0.9 and cfg.immunity_convention == "paper"


def test_list_values():
    cfg = parse_config_text(MINIMAL + "protect_fractions = 0.05, 0.2\n")
    assert cfg.protect_fractions == (0.05, 0.2)


def test_comments_and_blank_lines(tmp_path):
    path = tmp_path / "run.cfg"
    path.write_text("# sweep\n\n" + MINIMAL + "trials = 7  # few\n")
    assert parse_config(path).trials == 7


@pytest.mark.parametrize("extra, match", [
    ("C = 1.5\n", "C"),
    ("protect_fractions = 0.1, 2\n", "protect_fractions"),
    ("trials = many\n", "trials"),
    ("colour = red\n", "unknown key"),
    ("seed = 4\n", "duplicate"),
    ("strategies = degree, pagerank\n", "strategies"),
    ("immunity_convention = other\n", "immunity_convention"),
    ("just a line\n", "key = value"),
    ("s_min = 1\n", "s_min"),
])
def test_rejects_bad_values(extra, match):
    with pytest.raises(ConfigError, match=match):
        parse_config_text(MINIMAL + extra)


def test_missing_required():
    with pytest.raises(ConfigError, match="seed"):
        parse_config_text("hosts = 4\nvms_per_host = 5\n")


SMALL = ("hosts = 40\nvms_per_host = 5\nseed = 3\ns_max = 40\ntrials = 8\n"
         "protect_fractions = 0.05, 0.2\nattack_fractions = 0.005, 0.05\nstrategies = degree\n")


def test_grid_cardinality_and_order():
    rows = run_sweep(parse_config_text(SMALL))
    assert len(rows) == 4
    assert [(r.protect_frac, r.attack_frac) for r in rows] == [
        (0.05, 0.005), (0.05, 0.05), (0.2, 0.005), (0.2, 0.05)]
    for r in rows:
        assert r.ci95_low <= r.mean <= r.ci95_high
        assert 0 <= r.mean <= 1
        assert 0 <= r.solver_S <= 1


def test_full_grid_rows():
    cfg = parse_config_text(MINIMAL + "s_max = 40\ntrials = 3\n")
    rows = run_sweep(cfg)
    assert len(rows) == 4 * 3 * 2


def test_csv_is_byte_identical():
    cfg = parse_config_text(SMALL)
    outs = []
    for _ in range(2):
        buf = io.StringIO()
        write_results(run_sweep(cfg), buf)
        outs.append(buf.getvalue())
    assert outs[0] == outs[1]
    lines = outs[0].split("\n")
    assert lines[0] == ",".join(RESULT_HEADER)
    assert len([x for x in lines if x]) == 5
    assert "\r" not in outs[0]


def test_solver_column_optional():
    rows = run_sweep(parse_config_text(SMALL + "solver = false\n"))
    buf = io.StringIO()
    write_results(rows, buf)
    assert buf.getvalue().split("\n")[1].split(",")[7] == ""


def test_cell_failure_names_coordinates():
    cfg = parse_config_text(SMALL.replace("attack_fractions = 0.005, 0.05",
                                          "attack_fractions = 0.9"))
    with pytest.raises(RuntimeError, match="protect=0.2 attack=0.9 strategy=degree"):
        run_sweep(cfg)
