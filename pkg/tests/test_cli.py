import json

import pytest

from jacspec import cli
from jacspec.errors import ConfigError

DYUK = """
[run]
family = "dyukarev"
p = 2
p1 = 1
n_max = 512

[index]
z_points = ["i", "-i"]
ladder_max = 2048

[spectrum]
N = 8
"""

DIRAC = """
[run]
family = "dirac-alpha"
p = 1
c = 1.0
n_max = 1200

[d]
kind = "geometric"
ratio = 0.5

[alpha]
kind = "scaled-identity"
[alpha.seq]
kind = "power"
exponent = 0.0
scale = 0.2

[criteria]
which = ["carleman", "thm5.2-max-alpha"]
"""


def test_parse_minimal_dyukarev():
    cfg = cli.parse_config(DYUK)
    assert cfg.family == "dyukarev"
    assert (cfg.p, cfg.p1) == (2, 1)
    assert cfg.z_points == [1j, -1j]


def test_parse_dirac_alpha():
    cfg = cli.parse_config(DIRAC)
    assert cfg.family == "dirac-alpha"
    assert cfg.alpha is not None
    assert cfg.alpha.block(3)[0, 0] == pytest.approx(0.2)


def test_missing_alpha_names_field():
    text = DIRAC.replace('[alpha]', '[gamma]').replace('[alpha.seq]', '[gamma.seq]')
    with pytest.raises(ConfigError) as exc:
        cli.parse_config(text)
    assert "alpha" in str(exc.value)


def test_unknown_family_and_criterion():
    with pytest.raises(ConfigError):
        cli.parse_config('[run]\nfamily = "nope"')
    with pytest.raises(ConfigError):
        cli.parse_config(DYUK + '\n[criteria]\nwhich = ["bogus"]')


def test_complex_point_parser():
    assert cli._parse_complex("i") == 1j
    assert cli._parse_complex("-i") == -1j
    assert cli._parse_complex("1+i") == 1 + 1j
    assert cli._parse_complex("2-3i") == 2 - 3j
    with pytest.raises(ConfigError):
        cli._parse_complex("six")


def test_run_dyukarev_index_and_spectrum(tmp_path):
    cfg = cli.parse_config(DYUK)
    cfg.csv_path = str(tmp_path / "s.csv")
    report = cli.run(cfg, ("index", "spectrum"))
    assert report["index"]["n_plus"] == 1
    assert report["index"]["n_minus"] == 1
    assert report["index"]["stabilized"] is True
    assert len(report["spectrum"]["eigenvalues"]) == 8 * 2
    assert (tmp_path / "s.csv").read_text().count("\n") == 17
    assert report["errors"] == []


def test_run_criteria_stage():
    cfg = cli.parse_config(DIRAC)
    report = cli.run(cfg, ("criteria",))
    by_id = {c["criterion_id"]: c for c in report["criteria"]}
    assert set(by_id) == {"carleman", "thm5.2-max-alpha"}
    assert by_id["thm5.2-max-alpha"]["verdict"] == "Satisfied"
    for c in report["criteria"]:
        assert c["citations"]
        assert c["evidence"]


def test_report_deterministic_up_to_wall_time():
    cfg = cli.parse_config(DIRAC)
    a = cli.run(cfg, ("criteria",))
    b = cli.run(cli.parse_config(DIRAC), ("criteria",))
    a.pop("wall_time_s")
    b.pop("wall_time_s")
    assert cli.report_json(a) == cli.report_json(b)


def test_main_exit_codes(tmp_path, capsys):
    good = tmp_path / "good.toml"
    good.write_text(DYUK)
    bad = tmp_path / "bad.toml"
    bad.write_text('[run]\nfamily = "nope"\n')
    out = tmp_path / "report.json"

    rc = cli.main(["index", "--config", str(good), "--json", str(out)])
    assert rc == 0
    payload = json.loads(out.read_text())
    assert payload["index"]["n_plus"] == 1
    assert payload["tool"]["name"] == "jacspec"

    assert cli.main(["criteria", "--config", str(bad)]) == 2
    assert cli.main(["criteria", "--config", str(tmp_path / "missing.toml")]) == 2
    capsys.readouterr()


def test_build_dumps_blocks(tmp_path, capsys):
    good = tmp_path / "good.toml"
    good.write_text(DYUK)
    rc = cli.main(["build", "--config", str(good), "--blocks", "3"])
    assert rc == 0
    payload = json.loads(capsys.readouterr().out)
    assert len(payload["blocks"]) == 3
    assert payload["blocks"][0]["offdiag"][0][0].startswith("(1+0j)")


def test_thread_cap_respected(monkeypatch):
    monkeypatch.setenv("JACSPEC_THREADS", "1")
    cfg = cli.parse_config(DIRAC)
    report = cli.run(cfg, ("criteria",))
    assert len(report["criteria"]) == 2


def test_general_family_config():
    text = """
[run]
family = "general"
n_max = 800

[a]
kind = "power"
exponent = 2.0

[b]
kind = "power"
exponent = 1.0

[criteria]
which = ["thm2.2-a1a2"]
"""
    cfg = cli.parse_config(text)
    report = cli.run(cfg, ("criteria",))
    assert report["criteria"][0]["verdict"] == "Satisfied"


def test_pair_criterion_from_config():
    text = """
[run]
family = "dirac-beta-simple"
p = 1
c = 1.0
n_max = 2048

[d]
kind = "dyukarev-d"
c = 1.0

[beta]
kind = "scaled-identity"
[beta.seq]
kind = "dyukarev-d"
c = 1.0

[criteria]
which = ["thm4.2-perturbation"]
"""
    cfg = cli.parse_config(text)
    report = cli.run(cfg, ("criteria",))
    rec = report["criteria"][0]
    assert rec["criterion_id"] == "thm4.2-perturbation"
    assert rec["verdict"] == "Satisfied"


def test_report_validates_against_schema():
    jsonschema = pytest.importorskip("jsonschema")
    cfg = cli.parse_config(DYUK)
    report = cli.run(cfg, ("criteria", "index", "spectrum"))
    jsonschema.validate(json.loads(cli.report_json(report)), cli.REPORT_SCHEMA)
