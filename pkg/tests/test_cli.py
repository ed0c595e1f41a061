import hashlib
import shutil
import subprocess
import sys
import xml.etree.ElementTree as ET

import pytest
import yaml

from conftest import ROOT
from tsecon.cli import PLOT_FILES, emit_plots, fetch, main
from tsecon.errors import MissingArtifact, NetworkError, SchemaError, TsEconError

SVG = "{http://www.w3.org/2000/svg}"


def circles(svg_path, cls):
    root = ET.parse(svg_path).getroot()
    return [c for c in root.iter(f"{SVG}circle") if c.get("class") == cls]


class TestFetch:
    def test_file_url(self, tmp_path, pair_csv, capsys):
        digest = fetch(pair_csv.as_uri(), tmp_path / "out.csv")
        assert digest == hashlib.sha256(pair_csv.read_bytes()).hexdigest()
        assert digest in capsys.readouterr().out
        assert (tmp_path / "out.csv").read_bytes() == pair_csv.read_bytes()

    def test_refetch_same_checksum(self, tmp_path, pair_csv):
        a = fetch(pair_csv.as_uri(), tmp_path / "a.csv", quiet=True)
        b = fetch(pair_csv.as_uri(), tmp_path / "a.csv", quiet=True)
        assert a == b and not (tmp_path / "a.csv.part").exists()

    @pytest.mark.parametrize("body", [
        "<!DOCTYPE html><html><body>Access denied</body></html>",
        "  <html><head></head></html>",
    ])
    def test_html_rejected(self, tmp_path, body):
        src = tmp_path / "page.csv"
        src.write_text(body)
        with pytest.raises(SchemaError, match="HTML"):
            fetch(src.as_uri(), tmp_path / "out.csv")
        assert not (tmp_path / "out.csv").exists()

    def test_header_reported(self, tmp_path):
        src = tmp_path / "bad.csv"
        src.write_text("name,price\ncopper,3.1\n")
        with pytest.raises(SchemaError) as exc:
            fetch(src.as_uri(), tmp_path / "out.csv")
        assert "['name', 'price']" in str(exc.value)

    def test_undated_header_with_dates_accepted(self, tmp_path):
        src = tmp_path / "ok.csv"
        src.write_text("obs,x\n2001-01,1.0\n2001-02,2.0\n")
        fetch(src.as_uri(), tmp_path / "out.csv", quiet=True)

    @pytest.mark.parametrize("url", ["file:///nonexistent/nowhere.csv", "http://127.0.0.1:9/data.csv", "notaurl"])
    def test_unreachable(self, tmp_path, url):
        with pytest.raises(NetworkError):
            fetch(url, tmp_path / "out.csv", timeout=2)

    def test_snapshot_protected(self, pair_csv):
        with pytest.raises(TsEconError, match="bundled snapshot"):
            fetch(pair_csv.as_uri(), ROOT / "data" / "imf_dubai_gasus_1992_2018.csv")


class TestPlots:
    @pytest.fixture(scope="class")
    @staticmethod
    def svgs(repro_bundle, tmp_path_factory):
        out = tmp_path_factory.mktemp("plots")
        return {p.name: p for p in emit_plots(repro_bundle.directory, "svg", out)}

    def test_one_file_per_figure(self, svgs):
        assert sorted(svgs) == sorted(n.replace(".csv", ".svg") for n in PLOT_FILES)
        for p in svgs.values():
            assert ET.parse(p).getroot().tag == f"{SVG}svg"

    def test_roots_inside_unit_circle(self, svgs, repro_bundle):
        path = svgs["fig3_roots.svg"]
        (unit,) = circles(path, "unit-circle")
        cx, cy, r = (float(unit.get(k)) for k in ("cx", "cy", "r"))
        roots = circles(path, "root")
        n_rows = len(repro_bundle.path("fig3_roots.csv").read_text().strip().splitlines()) - 1
        assert len(roots) == n_rows > 0
        for c in roots:
            assert (float(c.get("cx")) - cx) ** 2 + (float(c.get("cy")) - cy) ** 2 < r**2

    def test_irf_four_panels_with_bands(self, svgs):
        root = ET.parse(svgs["fig4_irf.svg"]).getroot()
        titles = [t.text for t in root.iter(f"{SVG}text") if (t.text or "").startswith("Response of")]
        assert len(titles) == 4
        assert len([p for p in root.iter(f"{SVG}polygon") if p.get("class") == "band"]) == 4

    def test_cusum_bands(self, svgs):
        root = ET.parse(svgs["fig2_cusum.svg"]).getroot()
        kinds = [p.get("class") for p in root.iter(f"{SVG}polyline")]
        assert kinds.count("bound") == 2 * kinds.count("series") > 0

    def test_csv_passthrough(self, repro_bundle, tmp_path):
        for p in emit_plots(repro_bundle.directory, "csv", tmp_path):
            assert p.read_bytes() == repro_bundle.path(p.name).read_bytes()

    def test_partial_bundle(self, repro_bundle, tmp_path):
        shutil.copy(repro_bundle.path("fig3_roots.csv"), tmp_path)
        assert [p.name for p in emit_plots(tmp_path, "svg")] == ["fig3_roots.svg"]
        assert (tmp_path / "plots" / "fig3_roots.svg").exists()

    def test_empty_bundle(self, tmp_path):
        with pytest.raises(MissingArtifact):
            emit_plots(tmp_path)

    def test_header_only_file(self, tmp_path):
        (tmp_path / "fig4_irf.csv").write_text("shock,variable,horizon,value,lower,upper\n")
        with pytest.raises(MissingArtifact):
            emit_plots(tmp_path)

    def test_bad_format(self, repro_bundle):
        with pytest.raises(ValueError):
            emit_plots(repro_bundle.directory, "png")


class TestMain:
    @pytest.fixture
    @staticmethod
    def describe_config(tmp_path, pair_csv):
        doc = {"schema_version": 1, "data": {"path": str(pair_csv)}, "stages": ["describe"],
               "describe": {"series": ["dubai", "gasus"]}}
        p = tmp_path / "c.yaml"
        p.write_text(yaml.safe_dump(doc))
        return p

    def test_run_ok(self, describe_config, tmp_path, capsys):
        assert main(["run", str(describe_config), "--output", str(tmp_path / "b")]) == 0
        assert str(tmp_path / "b") in capsys.readouterr().out

    def test_failed_stage_exit_one(self, tmp_path, pair_csv, capsys):
        doc = {"schema_version": 1, "data": {"path": str(pair_csv)}, "stages": ["describe", "var_lags"],
               "describe": {"series": ["dubai"]}, "var_lags": {"variables": ["dubai", "silver"]}}
        p = tmp_path / "c.yaml"
        p.write_text(yaml.safe_dump(doc))
        assert main(["run", str(p), "--output", str(tmp_path / "b")]) == 1
        err = capsys.readouterr().err
        assert "stage var_lags failed" in err and "failed stages: var_lags" in err

    def test_config_error_exit_two(self, tmp_path, capsys):
        p = tmp_path / "c.yaml"
        p.write_text("schema_version: 1\nbogus: 1\n")
        assert main(["run", str(p)]) == 2
        assert "ConfigError" in capsys.readouterr().err

    def test_data_override(self, describe_config, tmp_path, pair_csv):
        other = tmp_path / "copy.csv"
        other.write_bytes(pair_csv.read_bytes())
        assert main(["run", str(describe_config), "--output", str(tmp_path / "b"), "--data", str(other)]) == 0

    def test_fetch_and_plots(self, tmp_path, pair_csv, repro_bundle, capsys):
        assert main(["fetch", pair_csv.as_uri(), str(tmp_path / "f.csv")]) == 0
        assert main(["plots", str(repro_bundle.directory), "--format", "csv", "--out", str(tmp_path / "p")]) == 0
        assert main(["plots", str(tmp_path / "p" / "missing")]) == 2
        assert main(["fetch", "file:///nope.csv", str(tmp_path / "g.csv")]) == 2

    def test_module_entry_point(self, describe_config, tmp_path):
        r = subprocess.run([sys.executable, "-m", "tsecon.cli", "run", str(describe_config), "--output",
                            str(tmp_path / "s")], capture_output=True, text=True, timeout=120)
        assert r.returncode == 0, r.stderr
        assert (tmp_path / "s" / "table1.csv").exists()
