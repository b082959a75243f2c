import io
import json

import numpy as np
import pytest

from ars2 import _emit
from ars2.cli import build_parser, run_cli


def run(argv):
    out, err = io.StringIO(), io.StringIO()
    code = run_cli(argv, stdout=out, stderr=err)
    return code, out.getvalue(), err.getvalue()


def test_classify_tangency():
    code, out, _ = run(["classify", "--f", "y - x^2", "--point", "0,0"])
    assert code == 0
    doc = json.loads(out)
    assert doc["kind"].startswith("Tangency") and "D2" in doc["witnesses"]


def test_jets_report_schema():
    code, out, _ = run(["jets", "--gamma", "1"])
    doc = json.loads(out)
    assert code == 0
    assert set(doc) == {"gamma", "K_agm", "constants", "closedFormMaxErr", "J0MinAbs"}
    assert {"x10", "g1", "g2", "two_g1_plus_g2"} <= set(doc["constants"])
    assert doc["K_agm"] == pytest.approx(1.8540746773, abs=1e-10)


def test_output_is_deterministic(tmp_path):
    argv = ["curvature-map", "--f", "x + 1", "--box=-0.4,0.4,-0.4,0.4", "--nx", "9", "--ny", "7"]
    a, b = run(argv)[1], run(argv)[1]
    assert a == b
    rows = np.genfromtxt(io.StringIO(a), delimiter=",", names=True)
    assert len(rows) == 63
    assert np.allclose(rows["K"], -2 / (rows["x"] + 1) ** 2, atol=1e-12)


def test_config_and_flag_override(tmp_path):
    cfg = tmp_path / "run.ini"
    cfg.write_text("[common]\nf = y - x^2\n[classify]\npoint = 0.5,0.3\n[jets]\ngamma = 2\n")
    code, out, _ = run(["classify", "--config", str(cfg)])
    assert code == 0 and json.loads(out)["kind"].startswith("Riemannian")
    code, out, _ = run(["classify", "--config", str(cfg), "--point", "0,0"])
    assert json.loads(out)["kind"].startswith("Tangency")
    assert json.loads(run(["jets", "--config", str(cfg)])[1])["gamma"] == 2.0


@pytest.mark.parametrize("text", ["[classify]\nbogus = 1\n", "[nowhere]\nf = x\n", "[common]\ntol = -1\n",
                                  "[common]\nbox = 1,0,0,1\n", "not an ini file"])
def test_config_errors_exit_2(tmp_path, text):
    cfg = tmp_path / "bad.ini"
    cfg.write_text(text)
    code, out, err = run(["classify", "--config", str(cfg), "--f", "x", "--point", "0,0"])
    assert code == 2 and "configuration error" in err


def test_threads_env_fallback(monkeypatch):
    monkeypatch.setenv("ARS2_THREADS", "zero")
    assert run(["jets"])[0] == 2
    monkeypatch.setenv("ARS2_THREADS", "3")
    assert run(["jets"])[0] == 0


def test_module_failure_is_structured_json():
    code, out, _ = run(["classify", "--f", "x + ", "--point", "0,0"])
    assert code == 1
    err = json.loads(out)["error"]
    assert err["subcommand"] == "classify" and err["type"] == "ExprSyntaxError"
    code, out, _ = run(["singular", "--f", "y - x^2", "--seed", "0.5,2"])
    assert code == 1 and json.loads(out)["error"]["type"] == "TraceError"


def test_usage_errors():
    assert run([])[0] == 2
    assert run(["classify", "--point", "0,0"])[0] == 2          # no structure
    assert run(["classify", "--f", "x", "--frame", "1;0;0;x", "--point", "0,0"])[0] == 2
    assert run(["nosuch"])[0] == 2


def test_general_frame_flag():
    code, out, _ = run(["classify", "--frame", "1; 0; 0; x", "--point", "0,0.2"])
    assert code == 0 and json.loads(out)["kind"] == "Grushin"


def test_singular_and_spade_curves(tmp_path):
    svg = tmp_path / "z.svg"
    code, out, _ = run(["singular", "--f", "y - x^2", "--seed", "0.5,0.25", "--svg", str(svg)])
    rows = np.genfromtxt(io.StringIO(out), delimiter=",", names=True)
    assert code == 0 and np.max(np.abs(rows["y"] - rows["x"] ** 2)) < 1e-9
    assert 'stroke-dasharray="1.5,3"' in svg.read_text()
    js = tmp_path / "s.json"
    code, out, _ = run(["spade", "--f", "y - x^2*(1+x)", "--seed", "0,0", "--json", str(js)])
    assert code == 0 and out.startswith("param,x,y,tx,ty")
    assert json.loads(js.read_text())["dx_dy_at_seed"] == pytest.approx(-0.3, abs=1e-6)


def test_geodesic_csv():
    code, out, _ = run(["geodesic", "--f", "x", "--state", "0,0,1,0.5", "--duration", "2", "--samples", "11"])
    rows = np.genfromtxt(io.StringIO(out), delimiter=",", names=True)
    assert code == 0 and out.splitlines()[0] == "t,x,y,p_x,p_y,H,jac_det"
    assert np.allclose(rows["H"], 0.5, atol=1e-10)
    assert np.allclose(rows["x"], np.sin(0.5 * rows["t"]) / 0.5, atol=1e-10)


def test_cutlocus_point_source(tmp_path):
    svg = tmp_path / "cut.svg"
    code, out, _ = run(["cutlocus", "--f", "x", "--source", "point", "--center", "1.5707963267948966",
                        "--a-min", "0.45", "--a-max", "1.3", "--t-min", "1.6", "--t-max", "3.0",
                        "--n-a", "96", "--n-probes", "4", "--svg", str(svg), "--box=-1,1,-0.2,2"])
    assert code == 0
    lines = out.splitlines()
    assert lines[0] == "branch_id,a,a_bar,t_cut,x,y" and len(lines) == 5
    y = np.array([float(r.split(",")[5]) for r in lines[1:]])
    t = np.array([float(r.split(",")[3]) for r in lines[1:]])
    assert np.allclose(y, t ** 2 / (2 * np.pi), rtol=1e-9)
    assert 'stroke-dasharray="6,4"' in svg.read_text()


def test_cutlocus_upper_z_branch():
    code, out, _ = run(["cutlocus", "--f", "y - x^2", "--side", "upper", "--a-min", "1e-3", "--a-max", "0.03",
                        "--n-a", "64", "--n-probes", "4"])
    rows = [r.split(",") for r in out.splitlines()[1:]]
    assert code == 0 and len(rows) == 4 and all(r[0] == "upper" for r in rows)
    assert max(abs(float(r[4])) for r in rows) < 1e-12


def test_canon_chart_json(tmp_path):
    csv = tmp_path / "f.csv"
    code, out, _ = run(["canon", "--f", "x + 1", "--point", "0,0", "--nx", "5", "--ny", "5",
                        "--extent", "0.05,0.05", "--csv", str(csv)])
    doc = json.loads(out)
    assert code == 0
    assert {"base_point", "kind", "grid", "f_tilde", "det_DE", "report"} <= set(doc)
    assert doc["grid"]["nx"] == 5 and doc["report"]["suite"] == "R1" and doc["report"]["ok"]
    assert np.allclose(np.array(doc["f_tilde"])[:, 0], np.linspace(0.95, 1.05, 5), atol=1e-8)
    assert csv.read_text().startswith("xbar,ybar,f_tilde,det_DE")


def test_help_documents_formats(capsys):
    assert "branch_id,a,a_bar,t_cut,x,y" in build_parser().format_help()
    assert run(["classify", "--help"])[0] == 0
    assert "ARS2_THREADS" in capsys.readouterr().out


def test_emitters():
    assert _emit.dumps_json({"b": float("nan"), "a": np.float64(1.5)}) == '{\n  "a": 1.5,\n  "b": null\n}\n'
    assert _emit.dumps_csv(("u", "v"), [(0.1, float("nan"))]) == "u,v\n0.1,nan\n"
    xs = ys = np.linspace(-1, 1, 21)
    Z = xs[:, None] ** 2 + ys[None, :] ** 2 - 0.25
    segs = _emit.contour_segments(xs, ys, Z)
    r = [np.hypot(*p) for s in segs for p in s]
    assert len(segs) > 10 and np.allclose(r, 0.5, atol=0.02)


def test_repro(tmp_path):
    code, out, _ = run(["repro", "--out-dir", str(tmp_path / "r")])
    assert code == 0, out
    rep = json.loads((tmp_path / "r" / "report.json").read_text())
    assert rep["all_passed"]
    assert rep["asymptotes"]["upper_slope"] == pytest.approx(-0.5, abs=0.03)
    svg = (tmp_path / "r" / "figure.svg").read_text()
    for style in ('stroke-dasharray="1.5,3"', 'stroke-dasharray="6,4"', "spade set (solid)"):
        assert style in svg
