from __future__ import annotations

import io
import json

import pytest

from hecke_lab.cli import EXIT_FIT, EXIT_INPUT, EXIT_OK, main
from hecke_lab.config import (
    THREADS_ENV,
    ConfigError,
    RunConfig,
    build_config,
    parse_basepoint,
    parse_config_text,
    parse_number,
    preset,
    resolve_threads,
)
from hecke_lab.symspace import from_half_plane


def run(*argv):
    out, err = io.StringIO(), io.StringIO()
    code = main(list(argv), stdout=out, stderr=err)
    return code, out.getvalue(), err.getvalue()


def test_hecke_enum_records():
    code, out, _ = run("hecke", "enum", "--n", "2", "--p", "2", "--l", "1")
    assert code == EXIT_OK
    records = [json.loads(line) for line in out.splitlines()]
    assert len(records) == 3
    assert records[0]["matrix"] == ["2", "0", "0", "1"]
    code, out, _ = run("hecke", "enum", "--n", "3", "--p", "5", "--l", "0")
    assert len(out.splitlines()) == 1


def test_hecke_buckets():
    code, out, _ = run("hecke", "enum", "--n", "2", "--p", "2", "--l", "2", "--partition-buckets")
    lines = out.splitlines()
    assert len(lines) == 8
    tail = json.loads(lines[-1])
    assert tail["schema_version"] == 1 and tail["kind"] == "partition-buckets"
    assert {tuple(b["partition"]): b["count"] for b in tail["buckets"]} == {(1, 1): 1, (0, 2): 6}
    _, alone, _ = run("hecke", "buckets", "--n", "2", "--p", "2", "--l", "2")
    assert json.loads(alone) == tail


def test_cap_breach_exits_2():
    code, out, err = run("hecke", "enum", "--n", "3", "--p", "3", "--l", "6", "--cap", "100")
    assert code == EXIT_INPUT and out == ""
    assert "cap exceeded" in err and "> cap 100" in err


def test_spherical_eval():
    code, out, _ = run("spherical", "eval", "--n", "3", "--p", "2", "--l", "3", "--mu=-1,0,1")
    assert code == EXIT_OK
    d = json.loads(out)
    assert abs(d["h_tilde"]["re"] - 1) < 1e-12 and abs(d["h_tilde"]["im"]) < 1e-12
    assert d["oracle_delta"] <= 1e-9
    assert (d["n"], d["p"], d["l"]) == (3, 2, 3) and len(d["mu"]) == 3
    code, out, _ = run("spherical", "eval", "--n", "2", "--p", "3", "--l", "4", "--mu=0.7j,-0.7j")
    d = json.loads(out)
    assert abs(complex(d["h_tilde"]["re"], d["h_tilde"]["im"])) <= 1
    assert d["theta"] == 0


@pytest.mark.parametrize("mu", ["abc,1", "1,2,3", "nan,0"])
def test_spherical_eval_rejects_bad_mu(mu):
    code, out, err = run("spherical", "eval", "--n", "2", "--p", "3", "--l", "1", f"--mu={mu}")
    assert code == EXIT_INPUT and out == "" and err.startswith("error:")


def test_spherical_check():
    code, out, _ = run("spherical", "check", "--n", "2", "--p", "3", "--mu=1.2j,-1.2j")
    assert code == EXIT_OK and json.loads(out)["passed"] is True
    code, _, _ = run("spherical", "check", "--n", "2", "--p", "3", "--mu=-0.3,0.3")
    assert code == EXIT_INPUT
    code, _, _ = run("spherical", "check", "--n", "2", "--p", "3", "--mu=0,0", "--partition", "1,0")
    assert code == EXIT_INPUT


def test_cover_huge_eps(tmp_path):
    code, out, _ = run("cover", "run", "--epsilons", "5", "--k-min", "0", "--k-max", "1",
                       "--samples", "500", "--outdir", str(tmp_path))
    assert code == EXIT_OK
    d = json.loads(out)
    assert [r["fraction"] for r in d["reports"]] == [1.0, 1.0]
    assert d["config"]["epsilons"] == [5.0] and "outdir" not in d["config"]
    assert (tmp_path / "coverage.json").read_text() == out


def test_cover_repeated_seed_is_byte_identical(tmp_path):
    args = ("cover", "run", "--epsilons", "0.1,0.05", "--k-max", "2", "--samples", "1500", "--seed", "4")
    _, a, _ = run(*args, "--outdir", str(tmp_path / "a"), "--threads", "1")
    _, b, _ = run(*args, "--outdir", str(tmp_path / "b"), "--threads", "3")
    assert a == b
    assert (tmp_path / "a" / "coverage.json").read_bytes() == (tmp_path / "b" / "coverage.json").read_bytes()


def test_cover_exports(tmp_path):
    code, _, _ = run("cover", "run", "--k-max", "1", "--samples", "200", "--csv", "--svg", "--outdir", str(tmp_path))
    assert code == EXIT_OK
    assert (tmp_path / "orbit_cloud.csv").read_text().startswith("index,height")
    assert (tmp_path / "covering.svg").read_text().startswith("<svg")


def test_cover_failure_removes_partial_outputs(tmp_path):
    code, _, err = run("cover", "run", "--n", "3", "--p", "2", "--x0", "1,0,0;0,1,0;0,0,1", "--k-max", "0",
                       "--epsilons", "0.3", "--samples", "100", "--svg", "--csv", "--outdir", str(tmp_path))
    assert code == EXIT_INPUT and "n = 2" in err
    assert list(tmp_path.iterdir()) == []


def test_cover_cap_breach(tmp_path):
    code, _, err = run("cover", "run", "--k-max", "3", "--cap", "50", "--outdir", str(tmp_path))
    assert code == EXIT_INPUT and "cap exceeded" in err
    assert not (tmp_path / "coverage.json").exists()


def test_kappa_selftest():
    code, out, _ = run("kappa", "selftest")
    d = json.loads(out)
    assert code == EXIT_OK and d["passed"] and abs(d["fit"]["kappa_hat"] - 1) <= 0.1
    code, _, _ = run("kappa", "selftest", "--n", "3", "--p", "2", "--c", "2")
    assert code == EXIT_OK
    code, _, _ = run("kappa", "selftest", "--points", "2")
    assert code == EXIT_FIT


def test_kappa_fit_exit_codes(tmp_path):
    code, _, err = run("kappa", "fit", "--epsilons", "0.1,0.05", "--outdir", str(tmp_path))
    assert code == EXIT_FIT and "3 epsilons" in err
    code, out, err = run("kappa", "fit", "--epsilons", "3^-1,3^-2,3^-3", "--k-max", "1", "--samples", "500",
                         "--outdir", str(tmp_path))
    assert code == EXIT_FIT and "undetermined" in out and "no fit" in err
    assert list(tmp_path.iterdir()) == []


def test_kappa_fit_outputs(tmp_path):
    code, out, _ = run("kappa", "fit", "--epsilons", "3^-1,3^-2,3^-3", "--k-max", "6", "--samples", "800", "--json",
                       "--outdir", str(tmp_path))
    assert code == EXIT_OK
    assert "kappa_hat =" in out
    doc = json.loads(out.splitlines()[-1])
    assert doc["kind"] == "kappa-fit" and doc["schema_version"] == 1
    assert (tmp_path / "kappa.json").read_text() == out.splitlines()[-1] + "\n"
    assert (tmp_path / "kappa.csv").read_text().startswith("abscissa,k_min\n")


def test_config_grammar(tmp_path):
    text = """
        # comment
        n = 2
        epsilons = 3^-2, 0.05
        samples = 100   # trailing comment
        x0 = 0.1+1.2i
    """
    values = parse_config_text(text)
    assert values["epsilons"] == (pytest.approx(1 / 9), 0.05)
    cfg = build_config(values, seed=None, samples=200)
    assert cfg.samples == 200 and cfg.seed == 0
    path = tmp_path / "run.cfg"
    path.write_text("k_max = 1\nsamples = 300\nepsilons = 4\n")
    code, out, _ = run("cover", "run", "--config", str(path), "--no-write")
    assert code == EXIT_OK
    d = json.loads(out)
    assert d["config"]["samples"] == 300 and d["reports"][-1]["fraction"] == 1.0
    for bad in ("no equals sign", "colour = red", "n = two"):
        with pytest.raises(ConfigError):
            parse_config_text(bad)


def test_config_validation():
    with pytest.raises(ConfigError):
        RunConfig(p=4)
    with pytest.raises(ConfigError):
        RunConfig(samples=0)
    with pytest.raises(ConfigError):
        preset("nope")
    assert parse_number("3^-3") == pytest.approx(1 / 27) and parse_number("2**-1") == 0.5
    assert parse_basepoint("0.5+2i", 2).Y.tolist() == from_half_plane(0.5 + 2j).Y.tolist()
    y = parse_basepoint("2,0,0;0,1,0;0,0,1", 3).Y
    assert abs(y[0, 0] * y[1, 1] * y[2, 2] - 1) < 1e-12


def test_presets_resolve():
    for name in ("figure1", "kappa-n2-p3", "kappa-n3-p2"):
        cfg = build_config(preset(name))
        cfg.basepoint()
        assert cfg.k_min <= cfg.k_max


def test_threads_env(monkeypatch):
    monkeypatch.delenv(THREADS_ENV, raising=False)
    assert resolve_threads(None) == 1
    monkeypatch.setenv(THREADS_ENV, "3")
    assert resolve_threads(None) == 3
    assert resolve_threads(2) == 2
    monkeypatch.setenv(THREADS_ENV, "many")
    with pytest.raises(ConfigError):
        resolve_threads(None)
    code, _, err = run("cover", "run", "--k-max", "0", "--samples", "50", "--no-write")
    assert code == EXIT_INPUT and THREADS_ENV in err


def test_argparse_errors_exit_2():
    with pytest.raises(SystemExit) as e:
        main(["hecke", "enum", "--n", "2"])
    assert e.value.code == 2
