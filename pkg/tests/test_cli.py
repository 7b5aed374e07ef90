"""End-to-end checks of the command line front end.

Everything goes through ``cli.main`` with an argv list, so exit codes and
emitted files are exactly what a shell user would see.
"""

import json
import math
import os

import pytest

from ebdyn import cli


DEPOLARIZING_QUBIT = """\
[family]
kind = depolarizing
gamma = 1.0
omega = 0.5 0; 0 0.5

[analysis]
tmax = 8.0
grid_n = 400
"""

PAULI_EQUAL = """\
[family]
kind = pauli
gamma1 = 1.0
gamma2 = 1.0
gamma3 = 1.0
"""


def write_config(tmp_path, text, name="model.ini"):
    path = tmp_path / name
    path.write_text(text, encoding="utf-8")
    return str(path)


class TestConfigErrors:
    """Broken configs must exit with code 1, never a traceback."""

    CASES = {
        "missing_kind": "[family]\ngamma = 1.0\n",
        "unknown_kind": "[family]\nkind = teleport\n",
        "unknown_section": DEPOLARIZING_QUBIT + "\n[extra]\nx = 1\n",
        "unknown_family_key": (
            "[family]\nkind = depolarizing\ngamma = 1.0\n"
            "omega = 0.5 0; 0 0.5\nflavor = mild\n"
        ),
        "unknown_analysis_key": DEPOLARIZING_QUBIT + "speed = 11\n",
        "missing_required_key": "[family]\nkind = depolarizing\ngamma = 1.0\n",
        "bad_matrix_entry": (
            "[family]\nkind = depolarizing\ngamma = 1.0\nomega = 0.5 x; 0 0.5\n"
        ),
        "ragged_matrix": (
            "[family]\nkind = depolarizing\ngamma = 1.0\nomega = 0.5 0; 0.5\n"
        ),
        "negative_gamma": (
            "[family]\nkind = depolarizing\ngamma = -1.0\n"
            "omega = 0.5 0; 0 0.5\n"
        ),
        "declared_d_mismatch": (
            "[family]\nkind = depolarizing\nd = 3\ngamma = 1.0\n"
            "omega = 0.5 0; 0 0.5\n"
        ),
        "gapped_jump_numbering": (
            "[family]\nkind = detailed_balance\nbeta = 0.7\n"
            "hamiltonian = 0 0; 0 1\n"
            "jump1 = 0 1; 0 0\nfreq1 = 1.0\n"
            "jump3 = 0 0; 1 0\nfreq3 = 1.0\n"
        ),
        "non_integer_winding": (
            "[family]\nkind = floquet_product\nperiod = 2.0\n"
            "winding = 0.5 0; 0 0\ncore_lindblad1 = 0 1; 0 0\n"
        ),
        "non_hermitian_winding": (
            "[family]\nkind = floquet_product\nperiod = 2.0\n"
            "winding = 0 1; 0 0\ncore_lindblad1 = 0 1; 0 0\n"
        ),
        "negative_times": DEPOLARIZING_QUBIT + "times = 0 -1\n",
        "unknown_cone": DEPOLARIZING_QUBIT + "cones = CP XYZ\n",
        "indefinite_decoherence_rates": (
            "[family]\nkind = pure_decoherence\na = 1 2; 2 1\n"
        ),
    }

    @pytest.mark.parametrize("label", sorted(CASES))
    def test_exit_code_one(self, tmp_path, capsys, label):
        config = write_config(tmp_path, self.CASES[label])
        code = cli.main(["classify", "--config", config])
        captured = capsys.readouterr()
        assert code == cli.EXIT_CONFIG, captured.err
        assert "error" in captured.err
        assert "Traceback" not in captured.err

    def test_missing_config_file(self, tmp_path, capsys):
        code = cli.main(["classify", "--config", str(tmp_path / "nope.ini")])
        assert code == cli.EXIT_CONFIG
        assert "cannot read config" in capsys.readouterr().err

    def test_bad_flag_values(self, tmp_path, capsys):
        config = write_config(tmp_path, DEPOLARIZING_QUBIT)
        assert cli.main(["classify", "--config", config, "--tol", "-1"]) == 1
        assert cli.main(["classify", "--config", config, "--tmax", "0"]) == 1
        assert cli.main(["classify", "--config", config, "--threads", "0"]) == 1
        capsys.readouterr()


class TestClassify:
    def test_json_rows(self, tmp_path):
        config = write_config(tmp_path, DEPOLARIZING_QUBIT)
        out = tmp_path / "out.json"
        code = cli.main(["classify", "--config", config,
                         "--times", "0 0.5 2.0", "--out", str(out)])
        assert code == 0
        payload = json.loads(out.read_text())
        assert payload["command"] == "classify"
        assert payload["kind"] == "depolarizing"
        assert payload["d"] == 2
        assert [row["t"] for row in payload["rows"]] == [0.0, 0.5, 2.0]
        first = payload["rows"][0]
        assert first["is_cp"] and not first["is_ppt"]
        late = payload["rows"][-1]
        assert late["is_ppt"] and late["eb_status"] == "EB_certified"

    def test_csv_shape(self, tmp_path):
        config = write_config(tmp_path, DEPOLARIZING_QUBIT)
        out = tmp_path / "out.csv"
        code = cli.main(["classify", "--config", config, "--format", "csv",
                         "--times", "0 1", "--out", str(out)])
        assert code == 0
        lines = out.read_text().splitlines()
        assert lines[0].split(",")[0] == "t"
        assert len(lines) == 3

    def test_byte_determinism(self, tmp_path):
        config = write_config(tmp_path, DEPOLARIZING_QUBIT)
        a, b = tmp_path / "a.json", tmp_path / "b.json"
        for out in (a, b):
            assert cli.main(["classify", "--config", config,
                             "--out", str(out)]) == 0
        assert a.read_bytes() == b.read_bytes()


class TestArrival:
    def test_depolarizing_qubit(self, tmp_path):
        config = write_config(tmp_path, DEPOLARIZING_QUBIT)
        out = tmp_path / "arrival.json"
        code = cli.main(["arrival", "--config", config,
                         "--cones", "CP PPT EB", "--out", str(out)])
        assert code == 0
        rows = {row["cone"]: row for row in json.loads(out.read_text())["rows"]}
        assert rows["CP"]["status"] == "inside_from_start"
        assert rows["CP"]["tau"] == 0.0
        assert rows["PPT"]["status"] == "arrived"
        assert abs(rows["PPT"]["tau"] - math.log(3.0)) < 1e-5
        assert abs(rows["EB"]["tau"] - rows["PPT"]["tau"]) < 1e-5
        assert rows["EB"]["eb_lower_bound"] is False

    def test_not_reached_row(self, tmp_path):
        # pure dephasing never becomes PPT; keep the horizon short enough
        # that the decaying witness is still resolvable against the psd
        # tolerance there
        config = write_config(
            tmp_path,
            "[family]\nkind = pauli\ngamma1 = 0\ngamma2 = 0\ngamma3 = 1.0\n",
        )
        out = tmp_path / "arrival.json"
        code = cli.main(["arrival", "--config", config, "--cones", "PPT",
                         "--tmax", "6", "--out", str(out)])
        assert code == 0
        row = json.loads(out.read_text())["rows"][0]
        assert row["status"] == "not_reached"
        assert row["tau"] is None
        assert row["witness_at_horizon"] < 0


class TestDivisibility:
    def test_semigroup_chain(self, tmp_path):
        config = write_config(tmp_path, DEPOLARIZING_QUBIT)
        out = tmp_path / "div.json"
        code = cli.main(["divisibility", "--config", config,
                         "--cones", "CP PPT", "--out", str(out)])
        assert code == 0
        payload = json.loads(out.read_text())
        assert payload["chain_consistent"] is True
        ppt = payload["reports"]["PPT"]
        assert ppt["verdict"] == "certified"
        assert ppt["shortcut_used"] == "semigroup"

    def test_refuted_scan_still_exits_zero(self, tmp_path):
        config = write_config(
            tmp_path, "[family]\nkind = eternal_nm\nalpha = 0.5\n"
        )
        out = tmp_path / "div.json"
        code = cli.main(["divisibility", "--config", config, "--cones", "PPT",
                         "--tmax", "10", "--out", str(out)])
        assert code == 0
        payload = json.loads(out.read_text())
        assert payload["reports"]["PPT"]["verdict"] == "refuted"
        assert payload["reports"]["PPT"]["delta"][0] == "inf"


class TestPpt2:
    def test_csv_rows(self, tmp_path):
        config = write_config(tmp_path, PAULI_EQUAL)
        out = tmp_path / "ppt2.csv"
        code = cli.main(["ppt2", "--config", config, "--format", "csv",
                         "--t", "0.1", "--kmax", "6", "--out", str(out)])
        assert code == 0
        lines = out.read_text().splitlines()
        assert lines[0] == "k,witness_choi,witness_pt,eb_status"
        assert len(lines) == 7
        assert lines[1].startswith("1,")

    def test_json_first_ppt(self, tmp_path):
        config = write_config(tmp_path, PAULI_EQUAL)
        out = tmp_path / "ppt2.json"
        code = cli.main(["ppt2", "--config", config, "--t", "0.1",
                         "--kmax", "8", "--out", str(out)])
        assert code == 0
        payload = json.loads(out.read_text())
        # map at t=0.1 matches depolarizing at rate 4, so tau = log(3)/4
        want = math.ceil(math.log(3.0) / 4.0 / 0.1)
        assert payload["first_ppt"] == want
        assert payload["first_eb"] == want


class TestListFamilies:
    def test_text_covers_all_kinds(self, capsys):
        assert cli.main(["list-families"]) == 0
        text = capsys.readouterr().out
        for kind in ("gkls", "pauli", "eternal_nm", "phase_covariant",
                     "depolarizing", "detailed_balance", "floquet_product",
                     "pure_decoherence", "diagonally_covariant"):
            assert kind in text

    def test_json_schema(self, capsys):
        assert cli.main(["list-families", "--format", "json"]) == 0
        payload = json.loads(capsys.readouterr().out)
        assert set(payload["depolarizing"]["required"]) == {"gamma", "omega"}
        assert payload["detailed_balance"]["numbered"] == ["jumpK", "freqK"]


def test_threads_flag_pins_blas_env(tmp_path, capsys, monkeypatch):
    for var in cli._THREAD_VARS:
        monkeypatch.delenv(var, raising=False)
    config = write_config(tmp_path, DEPOLARIZING_QUBIT)
    assert cli.main(["classify", "--config", config, "--times", "0",
                     "--threads", "2"]) == 0
    capsys.readouterr()
    for var in cli._THREAD_VARS:
        assert os.environ[var] == "2"


def test_reproduce_suite_passes(tmp_path):
    out = tmp_path / "repro.json"
    code = cli.main(["reproduce", "--format", "json", "--out", str(out)])
    payload = json.loads(out.read_text())
    failures = [c for c in payload["checks"] if not c["ok"]]
    assert code == 0, failures
    assert payload["all_ok"] is True
    assert len(payload["checks"]) == 13
