import json
import textwrap

import numpy as np
import pytest

from micromorphx.assembly import assemble_stiffness
from micromorphx.cli import main
from micromorphx.cli_io import ConfigError, parse_config, read_snapshot, write_snapshot
from micromorphx.dynamics import State, nodal_energy_density
from micromorphx.grid import build_grid

MINIMAL = textwrap.dedent("""\
    [grid]
    n = 3

    [material]
    mu_e = 1
    lambda_e = 1
    mu_h = 1
    lambda_h = 1
    alpha_1 = 1
    alpha_2 = 1
    alpha_3 = 1

    [time]
    dt = 0.1
    T = 1.0
    """)


def _errors(text):
    with pytest.raises(ConfigError) as info:
        parse_config(text)
    return info.value.errors


def test_minimal_config_defaults():
    cfg = parse_config(MINIMAL)
    assert cfg.material["mu_c"] == 0.0
    assert cfg.time["scheme"] == "midpoint"
    assert cfg.grid["n"] == (3, 3, 3)
    assert cfg.ic["preset"] == "zero"
    assert cfg.build_grid().n_nodes == 64


def test_condpara_error_with_line():
    errs = _errors(MINIMAL.replace("mu_e = 1", "mu_e = -1"))
    assert any(msg == "condpara: mu_e > 0" and path == "material.mu_e" and line == 5 for line, path, msg in errs)


def test_unknown_key_and_section():
    errs = _errors(MINIMAL + "viscosity = 0.3\n\n[extras]\nfoo = 1\n")
    msgs = {(path, msg) for _, path, msg in errs}
    assert ("time.viscosity", "unknown key") in msgs
    assert ("extras", "unknown section") in msgs


def test_missing_and_mistyped_keys():
    errs = _errors(MINIMAL.replace("alpha_1 = 1\n", "").replace("dt = 0.1", "dt = 'fast'"))
    msgs = {path: msg for _, path, msg in errs}
    assert msgs["material.alpha_1"] == "missing key"
    assert msgs["time.dt"].startswith("type mismatch")
    assert len([p for _, p, _ in errs if p == "time.dt"]) == 1


def test_time_must_divide():
    errs = _errors(MINIMAL.replace("T = 1.0", "T = 1.05"))
    assert any(p == "time.T" for _, p, _ in errs)


def test_order_insensitive():
    lines = MINIMAL.split("\n")
    start = lines.index("[material]")
    body = lines[start + 1:start + 8]
    shuffled = lines[:start + 1] + body[::-1] + lines[start + 8:]
    assert parse_config("\n".join(shuffled)).as_dict() == parse_config(MINIMAL).as_dict()


def test_loads_and_ic_sections():
    text = MINIMAL + textwrap.dedent("""
        [ic]
        preset = "sine"
        field = "u"
        component = 1
        amplitude = 0.5

        [loads.push]
        target = "f"
        component = 0
        time_kind = "sin"
        omega = 2.0
        """)
    cfg = parse_config(text)
    grid = cfg.build_grid()
    sm = assemble_stiffness(grid, material=cfg.build_material())
    s0 = cfg.build_initial(sm)
    assert np.abs(s0.u[:, 1]).max() > 0 and not s0.u[:, 0].any()
    loads = cfg.build_loads(grid)
    f, _ = loads.fields(np.pi / 4)
    # peak of the sine product on the 3^3 nodes times sin(2 t)
    assert np.isclose(np.abs(f[:, 0]).max(), np.sin(np.pi / 3) ** 3)
    assert not f[:, 1:].any()


def test_snapshot_round_trip(tmp_path, rng):
    g = build_grid((3, 2, 4), (1.0, 0.5, 2.0))
    sm = assemble_stiffness(g)
    s = State.random(sm, rng)
    s.t = 0.1 + 1e-17
    e = nodal_energy_density(sm, s)
    path = tmp_path / "snap.vtk"
    write_snapshot(s, g, str(path), e)
    back = read_snapshot(str(path), g)
    assert np.array_equal(back.u, s.u)
    assert np.array_equal(back.P, s.P)
    assert np.array_equal(back.energy_density, e)
    assert back.t == s.t
    assert back.dimensions == (4, 3, 5)
    text = path.read_text().split("\n")
    assert text[0] == "# vtk DataFile Version 3.0"
    assert text[2:4] == ["ASCII", "DATASET STRUCTURED_POINTS"]
    assert text[7] == f"POINT_DATA {g.n_nodes}"
    # without a grid the reader rebuilds it from the header
    assert np.array_equal(read_snapshot(str(path)).P, s.P)


def test_snapshot_zero_state(tmp_path):
    g = build_grid(2)
    path = tmp_path / "z.vtk"
    write_snapshot(State.zeros(g), g, str(path))
    snap = read_snapshot(str(path))
    assert snap.u.shape == (27, 3) and not snap.u.any() and not snap.P.any()
    assert snap.energy_density.shape == (27,)


def _write(tmp_path, text, name="cfg.ini"):
    p = tmp_path / name
    p.write_text(text)
    return str(p)


def _manifest(out):
    with open(out / "manifest.json") as fh:
        return json.load(fh)


def test_cli_check_params(tmp_path, capsys):
    out = tmp_path / "o"
    assert main(["check-params", "--config", _write(tmp_path, MINIMAL), "--out", str(out)]) == 0
    report = json.loads((out / "check_params.json").read_text())
    assert report["ok"]
    m = _manifest(out)
    assert m["exit_code"] == 0 and m["config_text"] == MINIMAL and m["seed"] == 42


def test_cli_validation_error_exit_1(tmp_path):
    out = tmp_path / "o"
    cfg = _write(tmp_path, MINIMAL.replace("mu_e = 1", "mu_e = -1"))
    assert main(["check-params", "--config", cfg, "--out", str(out)]) == 1
    assert _manifest(out)["exit_code"] == 1
    assert main(["simulate", "--out", str(out)]) == 1


def test_cli_simulate_zero_ledger(tmp_path):
    out = tmp_path / "o"
    text = MINIMAL + "\n[output]\nsnapshot_every = 5\n"
    assert main(["simulate", "--config", _write(tmp_path, text), "--out", str(out)]) == 0
    rows = (out / "ledger.csv").read_text().strip().split("\n")[1:]
    assert len(rows) == 11
    assert all(float(x) == 0.0 for r in rows for x in r.split(",")[1:])
    snaps = sorted(p.name for p in (out / "snapshots").iterdir())
    assert snaps == ["snapshot_000000.vtk", "snapshot_000005.vtk", "snapshot_000010.vtk"]
    assert "ledger.csv" in _manifest(out)["outputs"]


def test_cli_reproducible(tmp_path):
    text = MINIMAL + '\n[ic]\npreset = "random"\n'
    cfg = _write(tmp_path, text)
    for name in ("a", "b"):
        assert main(["simulate", "--config", cfg, "--out", str(tmp_path / name), "--seed", "7"]) == 0
    assert (tmp_path / "a" / "ledger.csv").read_bytes() == (tmp_path / "b" / "ledger.csv").read_bytes()
    ma, mb = _manifest(tmp_path / "a"), _manifest(tmp_path / "b")
    ma.pop("argv"), mb.pop("argv")
    assert ma == mb


def test_cli_numerical_failure_exit_2(tmp_path):
    text = MINIMAL.replace("dt = 0.1", "dt = 0.5").replace("[time]", '[time]\nscheme = "leapfrog"')
    out = tmp_path / "o"
    assert main(["simulate", "--config", _write(tmp_path, text), "--out", str(out)]) == 2
    assert _manifest(out)["status"].startswith("numerical failure")


def test_cli_static_dispersion_constants_verify(tmp_path):
    cfg = _write(tmp_path, MINIMAL)
    assert main(["static-solve", "--config", cfg, "--out", str(tmp_path / "s")]) == 0
    assert (tmp_path / "s" / "static_solution.vtk").exists()
    assert main(["dispersion", "--out", str(tmp_path / "d")]) == 0
    assert len((tmp_path / "d" / "dispersion.csv").read_text().strip().split("\n")) == 101
    assert main(["estimate-constants", "--spec", "korn", "--levels", "2,4", "--out", str(tmp_path / "c")]) == 0
    rows = (tmp_path / "c" / "constants.csv").read_text().strip().split("\n")
    assert rows[1].startswith("korn,2x2x2,")
    assert main(["verify", "--out", str(tmp_path / "v"), "--threads", "1"]) == 0
    assert _manifest(tmp_path / "v")["threads"] == 1


def test_cli_threads_env(tmp_path, monkeypatch):
    monkeypatch.setenv("MICROMORPHX_THREADS", "2")
    assert main(["dispersion", "--out", str(tmp_path)]) == 0
    assert _manifest(tmp_path)["threads"] == 2
