import json
from dataclasses import replace

import numpy as np
import pytest

from magcav import cli, dataio, presets
from magcav.records import MapData


def run(*argv):
    return cli.main([str(a) for a in argv])


@pytest.fixture(scope="module")
def scenario_file(tmp_path_factory):
    path = tmp_path_factory.mktemp("scn") / "ref.scn"
    dataio.write_scenario(path, presets.fig2_sweep())
    return path


@pytest.fixture(scope="module")
def clean_fit(tmp_path_factory, scenario_file):
    d = tmp_path_factory.mktemp("fit")
    assert run("simulate", "--scenario", scenario_file, "--sigma", 0, "--out", d / "sweep.csv") == 0
    assert run("fit", d / "sweep.csv", "--out", d / "fit.rpt") == 0
    return d


def test_simulate_twice_gives_identical_files(tmp_path, scenario_file):
    a, b = tmp_path / "a.csv", tmp_path / "b.csv"
    assert run("simulate", "--scenario", scenario_file, "--seed", 42, "--out", a) == 0
    assert run("simulate", "--scenario", scenario_file, "--seed", 42, "--out", b) == 0
    assert a.read_bytes() == b.read_bytes()
    man = json.loads((tmp_path / "a.csv.manifest.json").read_text())
    assert man["seeds"] == [42]
    assert man["inputs"] == {str(scenario_file): dataio.digest_file(scenario_file)}


def test_unknown_flag_is_a_usage_error(capsys):
    assert run("fit", "x.csv", "--bogus") == 1
    err = capsys.readouterr()
    assert "usage:" in err.err and "--bogus" in err.err
    assert err.out == ""


def test_missing_subcommand(capsys):
    assert run() == 1
    assert "usage:" in capsys.readouterr().err


def test_missing_input_file_is_io_error(tmp_path, capsys):
    assert run("fit", tmp_path / "absent.csv") == 2
    assert capsys.readouterr().out == ""


def test_fit_report_recovers_coupling(clean_fit):
    doc = dataio.read_report(clean_fit / "fit.rpt")
    assert doc["kind"] == "sweep_fit"
    assert doc["parameters"]["g_m_hz"]["value"] == pytest.approx(47e6, rel=1e-6)
    assert doc["derived"]["cooperativity"] == pytest.approx(2975, abs=1)
    assert doc["diagnostics"]["converged"]
    assert (clean_fit / "fit.rpt.manifest.json").exists()


def test_text_report_is_byte_stable(clean_fit, tmp_path):
    a, b = tmp_path / "a.txt", tmp_path / "b.txt"
    assert run("report", clean_fit / "fit.rpt", "--out", a) == 0
    assert run("report", clean_fit / "fit.rpt", "--out", b) == 0
    text = a.read_text()
    assert a.read_bytes() == b.read_bytes()
    assert "C = 3.0e3 (2975)" in text


def test_fit_pipeline_is_byte_stable(clean_fit, tmp_path):
    again = tmp_path / "fit.rpt"
    assert run("fit", clean_fit / "sweep.csv", "--out", again) == 0
    # the embedded argv differs only in the output path
    first = json.loads((clean_fit / "fit.rpt").read_text())
    second = json.loads(again.read_text())
    first.pop("manifest"), second.pop("manifest")
    assert first == second


def test_empty_report_file_exits_2(tmp_path):
    empty = tmp_path / "empty.rpt"
    empty.write_text("")
    assert run("report", empty) == 2


def test_report_missing_fields_exits_2(tmp_path):
    bad = tmp_path / "bad.rpt"
    bad.write_text(json.dumps({"schema_version": 1, "kind": "sweep_fit"}))
    assert run("report", bad) == 2


def test_fit_to_stdout_has_only_data(clean_fit, capsys):
    assert run("fit", clean_fit / "sweep.csv") == 0
    out = capsys.readouterr()
    assert json.loads(out.out)["kind"] == "sweep_fit"
    assert out.err == ""


def test_non_convergence_exits_3(clean_fit):
    assert run("fit", clean_fit / "sweep.csv", "--max-iterations", 1) == 3


def test_scaling_and_tempfit_presets(tmp_path, capsys):
    assert run("scaling", "--preset", "fig3") == 0
    doc = json.loads(capsys.readouterr().out)
    assert doc["parameters"]["g0_hz"]["value"] == pytest.approx(39e-3, rel=1e-12)
    assert any("76 mHz" in n for n in doc["notes"])

    assert run("tempfit", "--preset", "fig4", "--out", tmp_path / "t.rpt") == 0
    doc = dataio.read_report(tmp_path / "t.rpt")
    assert doc["parameters"]["gamma_tls0_hz"]["value"] == pytest.approx(0.63e6, rel=1e-9)
    assert doc["parameters"]["gamma_mm_hz"]["value"] == pytest.approx(0.39e6, rel=1e-9)


def test_series_files_through_the_cli(tmp_path):
    series = tmp_path / "g.csv"
    assert run("simulate", "--preset", "fig3", "--sigma", 0.05, "--seed", 17, "--out", series) == 0
    assert run("scaling", series, "--relative", "--out", tmp_path / "s.rpt") == 0
    g0 = dataio.read_report(tmp_path / "s.rpt")["parameters"]["g0_hz"]["value"]
    assert g0 == pytest.approx(39e-3, rel=0.05)

    temps = tmp_path / "t.csv"
    assert run("simulate", "--preset", "fig4", "--out", temps) == 0
    assert run("tempfit", temps, "--out", tmp_path / "t.rpt") == 0


def _read_pgm(path):
    raw = path.read_bytes()
    lines, pos = [], 0
    while len(lines) < 3:
        end = raw.index(b"\n", pos)
        line = raw[pos:end].decode("ascii")
        pos = end + 1
        if not line.startswith("#"):
            lines.append(line)
    assert lines[0] == "P5" and lines[2] == "255"
    w, h = map(int, lines[1].split())
    return np.frombuffer(raw[pos:], dtype=np.uint8).reshape(h, w)


def test_constant_map_gives_uniform_raster(tmp_path):
    m = MapData(np.array([0.0, 1.0, 2.0]), np.array([1e10, 2e10]), np.full((3, 2), 0.25 + 0j))
    dataio.write_map(tmp_path / "m.csv", m)
    assert run("map", "--input", tmp_path / "m.csv", "--pgm", tmp_path / "m.pgm",
               "--matrix", tmp_path / "m.dat") == 0
    img = _read_pgm(tmp_path / "m.pgm")
    assert img.shape == (2, 3) and np.unique(img).size == 1
    rows = (tmp_path / "m.dat").read_text().splitlines()
    assert rows[2].split() == ["3", "0", "1", "2"]


def test_one_by_one_map_gives_single_pixel(tmp_path):
    m = MapData(np.array([0.0]), np.array([1e10]), np.array([[0.5 + 0j]]))
    dataio.write_map(tmp_path / "m.csv", m)
    assert run("map", "--input", tmp_path / "m.csv", "--pgm", tmp_path / "m.pgm") == 0
    assert _read_pgm(tmp_path / "m.pgm").shape == (1, 1)


def test_reference_map_ridges_closest_at_degeneracy(tmp_path):
    """Ridges are the two strongest excursions of Re(S21) from zero in each column.

    The weak extra modes are left out: near their crossings they split the
    cavity-like ridge, and that split pair would outrank the two hybrid ridges.
    """
    scn = tmp_path / "map.scn"
    scenario = replace(presets.fig2_map(sigma=0.0, n_currents=41, points=801), spurious=())
    dataio.write_scenario(scn, scenario)
    assert run("map", "--scenario", scn, "--out", tmp_path / "m.csv", "--pgm", tmp_path / "m.pgm") == 0
    img = _read_pgm(tmp_path / "m.pgm").astype(int)
    freqs = np.asarray(scenario.freq_grid)[::-1]  # raster rows run from high to low frequency
    currents = np.asarray(scenario.currents)
    seps = []
    for col in np.abs(img - 128).T:
        peaks = np.flatnonzero((col[1:-1] > col[:-2]) & (col[1:-1] >= col[2:])) + 1
        top = peaks[np.argsort(col[peaks])[-2:]]
        seps.append(abs(freqs[top[0]] - freqs[top[1]]))
    k = int(np.argmin(seps))
    step = currents[1] - currents[0]
    assert abs(currents[k] - scenario.calib.current_at_degeneracy) <= step
