import json

import pytest
from hypothesis import given
from hypothesis import strategies as st

from attxray import cli, suites
from attxray.io import ConfigError, check_rng, load_config, max_workers, validate_config

SMALL = {
    "metrics": [{"type": "euclidean"}],
    "n_values": [1],
    "seed": 42,
    "resolution": {"N_r": 8, "N_phi": 16, "fan": {"n_phi": 16, "n_a": 8}},
}


def test_defaults_are_filled():
    cfg = validate_config({"seed": 3})
    assert cfg["seed"] == 3 and cfg["resolution"]["N_r"] == 24
    assert [m["type"] for m in cfg["metrics"]] == ["euclidean", "cap", "hyperbolic"]


@pytest.mark.parametrize("bad, pointer", [
    ({"metrics": [{"type": "sphere"}]}, "/metrics/0/type"),
    ({"resolution": {"N_r": 0}}, "/resolution/N_r"),
    ({"resolution": {"N_phi": 31}}, "/resolution/N_phi"),
    ({"metrics": [{"type": "grid"}]}, "/metrics/0"),
    ({"seed": -1}, "/seed"),
    ({"unknown": 1}, ""),
])
def test_schema_errors_carry_pointer(bad, pointer):
    with pytest.raises(ConfigError) as exc:
        validate_config(bad)
    assert exc.value.pointer == pointer


def test_invalid_json(tmp_path):
    p = tmp_path / "c.json"
    p.write_text("{not json")
    with pytest.raises(ConfigError):
        load_config(p)


@given(st.integers(0, 2**31), st.text(min_size=1, max_size=10))
def test_check_rng_is_reproducible(seed, name):
    assert check_rng(seed, name).integers(1 << 30) == check_rng(seed, name).integers(1 << 30)


def test_worker_cap(monkeypatch):
    monkeypatch.setenv("ATTXRAY_MAX_WORKERS", "3")
    assert max_workers() == 3
    monkeypatch.setenv("ATTXRAY_MAX_WORKERS", "zero")
    assert max_workers(2) == 2


def test_geometry_suite_is_deterministic(tmp_path):
    cfg_path = tmp_path / "cfg.json"
    cfg_path.write_text(json.dumps(SMALL))
    outs = []
    for k in range(2):
        out = tmp_path / f"run{k}"
        assert cli.main(["run", "--config", str(cfg_path), "--suite", "geometry",
                         "--out", str(out)]) == 0
        outs.append(out)
    names = sorted(p.relative_to(outs[0]) for p in outs[0].rglob("*") if p.is_file())
    assert any(str(n).endswith(".csv") for n in names)
    for n in names:
        assert (outs[0] / n).read_bytes() == (outs[1] / n).read_bytes()
    summary = json.loads((outs[0] / "summary.json").read_text())
    assert summary["passed"] and summary["suite"] == "geometry"


def test_failing_check_gives_nonzero_exit(tmp_path, monkeypatch):
    monkeypatch.setitem(suites.THRESHOLDS, "euclidean_anchor", -1.0)
    cfg_path = tmp_path / "cfg.json"
    cfg_path.write_text(json.dumps(SMALL))
    code = cli.main(["run", "--config", str(cfg_path), "--suite", "geometry",
                     "--out", str(tmp_path / "o")])
    assert code == 1


def test_bad_config_exit_code(tmp_path, capsys):
    cfg_path = tmp_path / "cfg.json"
    cfg_path.write_text(json.dumps({"metrics": [{"type": "sphere"}]}))
    code = cli.main(["run", "--config", str(cfg_path), "--suite", "geometry", "--out",
                     str(tmp_path / "o")])
    assert code == 2
    assert "/metrics/0/type" in capsys.readouterr().err


def test_schema_subcommand(tmp_path):
    assert cli.main(["schema", "--out", str(tmp_path / "s.json")]) == 0
    assert "properties" in json.loads((tmp_path / "s.json").read_text())


def test_parallel_matches_serial(tmp_path):
    checks = [suites.check_star_dA, suites.check_bracket]
    cfg = dict(SMALL, refine=False)
    a = [r.as_dict() for r in suites.run_checks(cfg, checks, workers=1)]
    b = [r.as_dict() for r in suites.run_checks(cfg, checks, workers=2)]
    assert a == b
