import json
import subprocess
import sys

import numpy as np
import pytest
import yaml

import oracles
from cryolink.cli import main, read_two_columns
from cryolink.config import experiment_config, load_document, parse_document, shipped_config_path
from cryolink.errors import ConfigError, DomainError

SHIPPED = ["base_temperature", "fig4_solid", "fig4_dashed", "heat_default"]

LOSSLESS = {
    "schema_version": 1,
    "signal_frequency_ghz": 5.65,
    "center_temperature_mk": 110,
    "squeeze": {"r": 1.2},
    "nodes": [
        {"name": "alice", "mc_temperature_mk": 35, "attenuator_temperature_mk": 0.1},
        {"name": "bob", "mc_temperature_mk": 21},
    ],
    "links": [{"source": "alice", "target": "bob", "attenuation_db_per_km": 0.0}],
}


def write_yaml(path, doc):
    path.write_text(yaml.safe_dump(doc))
    return path


def run(argv, capsys):
    code = main([str(a) for a in argv])
    out, err = capsys.readouterr()
    return code, out, err


class TestSchema:
    @pytest.mark.parametrize("name", SHIPPED)
    def test_shipped_configs_parse(self, name):
        doc = load_document(shipped_config_path(name))
        assert doc.schema_version == 1
        if name != "heat_default":
            experiment_config(doc)

    def test_unknown_key_has_path(self):
        doc = dict(LOSSLESS, nodes=[dict(LOSSLESS["nodes"][0], mc_temp_mk=3), LOSSLESS["nodes"][1]])
        with pytest.raises(ConfigError) as info:
            parse_document(doc)
        assert info.value.errors[0][0] == "nodes.0.mc_temp_mk"

    def test_schema_version_required(self):
        with pytest.raises(ConfigError) as info:
            parse_document({k: v for k, v in LOSSLESS.items() if k != "schema_version"})
        assert "schema_version" in str(info.value)

    def test_bad_value_path(self):
        doc = dict(LOSSLESS, links=[dict(LOSSLESS["links"][0], length_m=-1)])
        with pytest.raises(ConfigError) as info:
            parse_document(doc)
        assert info.value.errors[0][0] == "links.0.length_m"

    def test_squeeze_exclusive(self):
        with pytest.raises(ConfigError, match="exactly one"):
            parse_document(dict(LOSSLESS, squeeze={"r": 1.0, "squeeze_db": 3.0}))

    def test_squeeze_from_db(self):
        cfg = experiment_config(parse_document(dict(LOSSLESS, squeeze={"squeeze_db": 6.70})))
        assert cfg.squeeze.r == pytest.approx(0.67 * np.log(10) / 2)

    def test_loss_db_conversion(self):
        node = dict(LOSSLESS["nodes"][0], local_losses=[{"stage": "L3", "mode": 1, "loss_db": 3.0103}])
        cfg = experiment_config(parse_document(dict(LOSSLESS, nodes=[node, LOSSLESS["nodes"][1]])))
        assert cfg.nodes[0].local_losses[0].epsilon == pytest.approx(0.5, abs=1e-5)

    def test_bad_segment_mode_path(self):
        node = dict(LOSSLESS["nodes"][0], local_losses=[{"stage": "L1", "mode": 1, "loss_linear": 0.1}])
        with pytest.raises(ConfigError) as info:
            experiment_config(parse_document(dict(LOSSLESS, nodes=[node, LOSSLESS["nodes"][1]])))
        assert info.value.errors[0][0] == "nodes.0.local_losses.0"

    def test_unsorted_sweep(self):
        with pytest.raises(ConfigError, match="sorted"):
            parse_document(dict(LOSSLESS, sweep={"mode": "center_only", "center_temperatures_k": [0.5, 0.2]}))

    def test_full_heating_needs_fits(self):
        with pytest.raises(ConfigError, match="fits"):
            parse_document(dict(LOSSLESS, sweep={"mode": "full_heating", "center_temperatures_k": [0.2]}))

    def test_profile_bath_needs_heat(self):
        doc = dict(LOSSLESS, links=[dict(LOSSLESS["links"][0], bath="profile")])
        with pytest.raises(ConfigError) as info:
            experiment_config(parse_document(doc))
        assert info.value.errors[0][0] == "heat"

    def test_topology_error_is_config_error(self):
        doc = dict(LOSSLESS, links=[dict(LOSSLESS["links"][0], target="carol")])
        with pytest.raises(ConfigError):
            experiment_config(parse_document(doc))

    def test_yaml_syntax(self, tmp_path):
        path = tmp_path / "bad.yaml"
        path.write_text("schema_version: [1,\n")
        with pytest.raises(ConfigError, match="YAML"):
            load_document(path)

    def test_non_mapping(self):
        with pytest.raises(ConfigError):
            parse_document([1, 2])


class TestThresholdsCommand:
    def test_reports_kappa(self, capsys):
        code, out, _ = run(["thresholds", "--freq-ghz", 5.65], capsys)
        assert code == 0
        rows = dict(line.split(",") for line in out.splitlines()[1:])
        assert float(rows["T_kappa_mK"]) == pytest.approx(60.38, abs=0.01)
        assert float(rows["T_sudden_death_mK"]) == pytest.approx(391.2, abs=0.05)

    def test_occupation(self, capsys, tmp_path):
        out_path = tmp_path / "t.csv"
        code, out, _ = run(["thresholds", "--freq-ghz", 5.65, "--at-kelvin", 1.0, "--out", out_path], capsys)
        assert code == 0
        rows = dict(line.split(",") for line in out.splitlines()[1:])
        assert float(rows["n_th_at_1K"]) == pytest.approx(3.21, abs=5e-3)
        assert out_path.read_text() == out

    @pytest.mark.parametrize("freq", ["0", "-5", "nan"])
    def test_invalid_frequency(self, capsys, freq):
        code, out, err = run(["thresholds", "--freq-ghz", freq], capsys)
        assert code == 2
        assert "freq" in err and out == ""


class TestTransferCommand:
    def test_lossless_bound(self, capsys, tmp_path):
        cfg = write_yaml(tmp_path / "c.yaml", LOSSLESS)
        code, _, _ = run(["transfer", cfg, "--out-dir", tmp_path], capsys)
        assert code == 0
        doc = json.loads((tmp_path / "transfer.json").read_text())
        assert max(doc["taps"]["hr_output"]["squeezing_dB"]) <= 3.0103
        assert doc["manifest"]["command"] == "transfer"
        assert (tmp_path / "transfer.csv").read_text().startswith("tap,s_mode0_dB")

    def test_shipped_base(self, capsys, tmp_path):
        code, _, _ = run(["transfer", "base_temperature", "--out-dir", tmp_path], capsys)
        assert code == 0
        doc = json.loads((tmp_path / "transfer.json").read_text())
        assert doc["taps"]["receiver"]["squeezing_dB"][1] == pytest.approx(2.10, abs=1e-6)

    def test_malformed_leaves_nothing(self, capsys, tmp_path):
        cfg = write_yaml(tmp_path / "c.yaml", dict(LOSSLESS, bogus=1))
        out_dir = tmp_path / "out"
        code, _, err = run(["transfer", cfg, "--out-dir", out_dir], capsys)
        assert code == 2
        assert "bogus" in err
        assert not out_dir.exists()

    def test_deterministic(self, capsys, tmp_path):
        outputs = []
        for sub in ("a", "b"):
            d = tmp_path / sub
            args = ["transfer", "base_temperature", "--out-dir", d, "--samples", 20000, "--seed", 4, "--timestamp", "fixed"]
            assert run(args, capsys)[0] == 0
            outputs.append([(d / n).read_bytes() for n in ("transfer.json", "transfer.csv")])
        a, b = outputs
        assert a[1] == b[1]
        # only the output paths in the manifest differ
        ja, jb = json.loads(a[0]), json.loads(b[0])
        ja["manifest"].pop("output_paths"), jb["manifest"].pop("output_paths")
        assert ja == jb
        assert ja["manifest"]["seed"] == 4

    def test_tomography_emulation(self, capsys, tmp_path):
        run(["transfer", "base_temperature", "--out-dir", tmp_path, "--samples", 200000, "--seed", 1], capsys)
        tomo = json.loads((tmp_path / "transfer.json").read_text())["tomography"]
        assert tomo["physical"]
        assert tomo["negativity"] == pytest.approx(0.501, abs=0.01)
        assert tomo["max_abs_fourth_cumulant"] < 0.02


class TestSweepCommand:
    def test_center_only(self, capsys, tmp_path):
        out = tmp_path / "s.csv"
        code, _, _ = run(["sweep", "fig4_dashed", "--t-kelvin", 0.1, 0.5, 1.0, "--out", out], capsys)
        assert code == 0
        lines = out.read_text().splitlines()
        assert lines[0].split(",")[0] == "t_center_K" and len(lines) == 4
        manifest = json.loads(out.with_name("s.csv.manifest.json").read_text())["manifest"]
        assert manifest["extra"]["mode"] == "center_only"

    def test_empty_list(self, capsys, tmp_path):
        out = tmp_path / "s.csv"
        code, _, err = run(["sweep", "fig4_dashed", "--t-kelvin", "--out", out], capsys)
        assert code == 2 and "at least one" in err
        assert not out.exists()

    def test_byte_identical(self, capsys, tmp_path):
        for name in ("a.csv", "b.csv"):
            run(["sweep", "fig4_solid", "--out", tmp_path / name, "--workers", 3], capsys)
        assert (tmp_path / "a.csv").read_bytes() == (tmp_path / "b.csv").read_bytes()


class TestHeatCommand:
    def test_default_center(self, capsys, tmp_path):
        out = tmp_path / "p.csv"
        assert run(["heat", "heat_default", "--out", out], capsys)[0] == 0
        data = np.loadtxt(out, delimiter=",", skiprows=1)
        center = np.interp(3.0, data[:, 0], data[:, 1])
        assert center == pytest.approx(0.110, abs=1e-4)

    def test_zero_source(self, capsys, tmp_path):
        doc = {"schema_version": 1, "heat": {"emissivity": 0.0, "tube_coupling_w_per_m_k": 0.0,
                                              "conductivity": {"model": "constant", "value_w_per_m_k": 2.0}}}
        cfg = write_yaml(tmp_path / "h.yaml", doc)
        out = tmp_path / "p.csv"
        assert run(["heat", cfg, "--out", out], capsys)[0] == 0
        data = np.loadtxt(out, delimiter=",", skiprows=1)
        assert data[0, 1] == 0.035 and data[-1, 1] == 0.021
        np.testing.assert_allclose(data[:, 1], oracles.linear_profile(data[:, 0], 6.0, 0.035, 0.021), atol=1e-9)

    def test_three_points(self, capsys, tmp_path):
        out = tmp_path / "p.csv"
        assert run(["heat", "heat_default", "--grid-points", 3, "--out", out], capsys)[0] == 0
        assert len(out.read_text().splitlines()) == 4

    def test_non_convergence(self, capsys, tmp_path):
        doc = {"schema_version": 1, "heat": {"solver": {"max_iterations": 2}}}
        out = tmp_path / "p.csv"
        code, _, err = run(["heat", write_yaml(tmp_path / "h.yaml", doc), "--out", out], capsys)
        assert code == 3
        assert "2 iterations" in err
        assert not out.exists()

    def test_missing_section(self, capsys, tmp_path):
        code, _, err = run(["heat", "base_temperature", "--out", tmp_path / "p.csv"], capsys)
        assert code == 2 and "heat" in err


class TestFitCommand:
    def test_round_trip(self, capsys, tmp_path):
        t = np.linspace(0.1, 1.0, 19)
        data = tmp_path / "d.txt"
        data.write_text("# T_center, T_meas\n" + "".join(f"{a:.17g}, {b:.17g}\n" for a, b in zip(t, oracles.sigmoid_response(t, 0.1, 0.02, 0.5))))
        out = tmp_path / "fit.json"
        assert run(["fit", data, "--out", out], capsys)[0] == 0
        doc = json.loads(out.read_text())
        assert (doc["a"], doc["b"], doc["c"]) == pytest.approx((0.1, 0.02, 0.5), abs=1e-6)
        assert doc["manifest"]["extra"]["points"] == 19

    def test_constant(self, capsys, tmp_path):
        data = tmp_path / "d.txt"
        data.write_text("".join(f"{t} 0.05\n" for t in np.linspace(0.1, 1, 8)))
        code, out, _ = run(["fit", data, "--out", tmp_path / "f.json"], capsys)
        fit = json.loads(out)
        assert (fit["a"], fit["b"], fit["c"]) == pytest.approx((0.0, 0.05, 0.0), abs=1e-9)

    def test_non_numeric_line(self, capsys, tmp_path):
        data = tmp_path / "d.txt"
        data.write_text("0.1 0.2\n# comment\n0.5 abc\n")
        code, _, err = run(["fit", data, "--out", tmp_path / "f.json"], capsys)
        assert code == 2
        assert ":3:" in err

    def test_too_few_rows(self, capsys, tmp_path):
        data = tmp_path / "d.txt"
        data.write_text("0.1 0.2\n0.5 0.3\n0.9 0.4\n")
        code, _, _ = run(["fit", data, "--out", tmp_path / "f.json"], capsys)
        assert code == 2
        assert not (tmp_path / "f.json").exists()

    def test_reader_missing_file(self, tmp_path):
        with pytest.raises(DomainError):
            read_two_columns(tmp_path / "nope.txt")


def test_console_entry_point():
    proc = subprocess.run([sys.executable, "-m", "cryolink", "thresholds", "--freq-ghz", "11.3"],
                          capture_output=True, text=True, check=True)
    assert "T_kappa_mK" in proc.stdout
