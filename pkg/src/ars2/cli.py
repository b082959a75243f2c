"""Command line interface: ``ars2 <subcommand> [options]``.

Structures are given either in f-chart form (``--f "y - x^2*(1+x)"``, frame
F1 = d/dx, F2 = f d/dy) or by four frame components separated by semicolons
(``--frame "a1; a2; b1; b2"`` for F1 = (a1, a2), F2 = (b1, b2)).

Expression grammar: numbers, the variables x and y, + - * / and ^ with integer
exponents, parentheses, and the functions exp, log, sqrt, sin, cos.

Options may also come from an INI file (``--config run.ini``). Keys in the
``[common]`` section apply to every subcommand, keys in a section named after
the subcommand apply to it alone; the key names are the long option names
without dashes (``a-min`` or ``a_min``). Command line flags override file values.
Unknown keys, unreadable files and invalid values exit with status 2.

Exit status: 0 on success, 1 on a computational failure (a JSON object
``{"error": {...}}`` is written to stdout), 2 on usage or configuration errors.

Output formats:
  curves        CSV  param,x,y,tx,ty
  curvature-map CSV  x,y,K,A,S,h     (S raw spade indicator, h = S D^8; nan on Z)
  geodesic      CSV  t,x,y,p_x,p_y,H,jac_det
  cutlocus      CSV  branch_id,a,a_bar,t_cut,x,y
  canon         JSON {base_point, kind, grid{h, nx, ny, ...}, f_tilde, det_DE, report{...}}
  SVG figures draw the singular set dotted, cut loci dashed and the spade set solid.
"""

from __future__ import annotations

import argparse
import configparser
import math
import os
import sys
import time
import traceback
from pathlib import Path

import numpy as np

from . import _emit
from .expr import ExprError
from .frames import Ars, Tol, f_chart_class, point_class, trace_singular_set

EXAMPLE_F = "y - x^2*(1+x)"


class ConfigError(ValueError):
    pass


# --- value parsers -----------------------------------------------------------------

def _floats(n):
    def parse(text):
        parts = [p for p in str(text).replace(" ", "").split(",") if p]
        if len(parts) != n:
            raise argparse.ArgumentTypeError(f"expected {n} comma-separated numbers, got {text!r}")
        try:
            return tuple(float(p) for p in parts)
        except ValueError as exc:
            raise argparse.ArgumentTypeError(str(exc)) from None
    parse.__name__ = f"{n} numbers"
    return parse


def _positive(kind=float):
    def parse(text):
        try:
            v = kind(text)
        except ValueError as exc:
            raise argparse.ArgumentTypeError(str(exc)) from None
        if not v > 0:
            raise argparse.ArgumentTypeError(f"must be positive, got {text!r}")
        return v
    parse.__name__ = "positive " + kind.__name__
    return parse


def _sign(text):
    v = int(text)
    if v not in (1, -1):
        raise argparse.ArgumentTypeError("orientation must be 1 or -1")
    return v


def _flag(text):
    if isinstance(text, bool):
        return text
    t = str(text).strip().lower()
    if t in ("1", "true", "yes", "on"):
        return True
    if t in ("0", "false", "no", "off"):
        return False
    raise argparse.ArgumentTypeError(f"not a boolean: {text!r}")


def _choice(*options):
    def parse(text):
        if text not in options:
            raise argparse.ArgumentTypeError(f"choose from {', '.join(options)}")
        return text
    parse.__name__ = "choice"
    return parse


def _frame(text):
    parts = [p.strip() for p in str(text).split(";")]
    if len(parts) != 4 or not all(parts):
        raise argparse.ArgumentTypeError("--frame needs four expressions separated by ';'")
    return tuple(parts)


# (option, type, default, help); default None means "not set"
COMMON = [
    ("f", str, None, "f-chart function f(x, y)"),
    ("frame", _frame, None, "general frame 'a1; a2; b1; b2'"),
    ("box", _floats(4), (-1.0, 1.0, -1.0, 1.0), "domain box x0,x1,y0,y1"),
    ("tol", _positive(), 1e-9, "classification tolerance"),
    ("orientation-m", _sign, 1, "orientation of the surface (+1/-1)"),
    ("orientation-e", _sign, 1, "orientation of the frame bundle (+1/-1)"),
    ("threads", _positive(int), None, "worker count (fallback: ARS2_THREADS, else 1)"),
    ("out", str, None, "main output file (default: stdout)"),
    ("svg", str, None, "write an SVG figure to this path"),
    ("json", str, None, "write a JSON summary to this path"),
]

SUBCOMMANDS = {
    "classify": ("classify a point", [
        ("point", _floats(2), None, "point x,y"),
    ]),
    "singular": ("trace the singular set through a seed (CSV curve)", [
        ("seed", _floats(2), None, "seed point x,y on Z"),
        ("h0", _positive(), 2e-3, "initial step"),
    ]),
    "curvature-map": ("grid of K, |grad K|^2 and the spade indicators (CSV)", [
        ("nx", _positive(int), 41, "grid points in x"),
        ("ny", _positive(int), 41, "grid points in y"),
    ]),
    "spade": ("trace a branch of the spade set (CSV curve)", [
        ("seed", _floats(2), None, "seed point x,y (a tangency point selects the transversal branch)"),
        ("length", _positive(), 0.15, "half-length of the branch at a tangency point"),
        ("h0", _positive(), 2e-3, "initial step of the tracer"),
    ]),
    "geodesic": ("integrate one geodesic (CSV trajectory)", [
        ("state", _floats(4), None, "initial state x,y,p_x,p_y (p is rescaled to H = 1/2)"),
        ("source", _choice("z", "point"), None, "launch from Z or from a point instead of --state"),
        ("point", _floats(2), (0.0, 0.0), "source point (point source) or Newton guess on Z"),
        ("along", _choice("x", "y"), "x", "graph variable of Z for the Z source"),
        ("a", float, None, "launch parameter (Z coordinate or covector angle)"),
        ("side", _choice("upper", "lower"), "upper", "side of Z to launch into"),
        ("duration", float, 1.0, "integration time (negative flows backward)"),
        ("samples", _positive(int), 201, "output samples"),
    ]),
    "cutlocus": ("cut locus from Z or from a point (CSV branches)", [
        ("source", _choice("z", "point"), "z", "source type"),
        ("point", _floats(2), (0.0, 0.0), "source point, or Newton guess on Z"),
        ("along", _choice("x", "y"), "x", "graph variable of Z"),
        ("center", float, 0.0, "point source: covector angle the two subfronts are symmetric about"),
        ("side", _choice("upper", "lower", "both"), "both", "which side of Z"),
        ("a-min", _positive(), 1e-3, "smallest |a|"),
        ("a-max", _positive(), 0.05, "largest |a|"),
        ("n-a", _positive(int), 128, "geodesics per subfront"),
        ("n-probes", _positive(int), 12, "probe times per branch"),
        ("t-min", _positive(), None, "first probe time (default from the a-range)"),
        ("t-max", _positive(), None, "last probe time / point-source duration"),
        ("delta", _positive(), 0.6, "extra time of the lower-side window"),
        ("conjugate", _flag, True, "check that no conjugate time precedes the cut"),
    ]),
    "jets": ("model jet system constants (JSON)", [
        ("gamma", _positive(), 1.0, "gamma = e^xi(0,0)"),
    ]),
    "canon": ("canonical chart and invariant f~ at a point (JSON)", [
        ("point", _floats(2), None, "base point x,y"),
        ("nx", _positive(int), 21, "grid points in xbar"),
        ("ny", _positive(int), 21, "grid points in ybar"),
        ("extent", _floats(2), (0.1, 0.1), "half-widths of the xbar, ybar grid"),
        ("length", _positive(), 0.3, "length of the canonical curve"),
        ("stencil", _positive(), 1e-3, "finite-difference step of the condition checks"),
        ("verify", _flag, True, "evaluate the normal-form conditions"),
        ("csv", str, None, "also write xbar,ybar,f_tilde,det_DE as CSV"),
    ]),
    "repro": ("reproduce the results for f = y - x^2(1+x) (SVG + JSON report)", [
        ("out-dir", str, "repro_out", "output directory"),
    ]),
}


def _dest(opt):
    return opt.replace("-", "_")


def _options(cmd):
    return COMMON + SUBCOMMANDS[cmd][1]


def build_parser():
    p = argparse.ArgumentParser(prog="ars2", description=__doc__,
                                formatter_class=argparse.RawDescriptionHelpFormatter)
    sub = p.add_subparsers(dest="command", metavar="SUBCOMMAND")
    for cmd, (help_, _) in SUBCOMMANDS.items():
        sp = sub.add_parser(cmd, help=help_, description=help_)
        sp.add_argument("--config", help="INI file with [common] and [%s] sections" % cmd)
        for opt, typ, default, h in _options(cmd):
            d = f" (default {default})" if default is not None else ""
            sp.add_argument("--" + opt, dest=_dest(opt), type=typ, default=None, help=h + d)
    return p


def load_config(path, cmd):
    """Values of [common] and [cmd] converted with the option types; rejects unknown keys."""
    cp = configparser.ConfigParser(interpolation=None)
    try:
        with open(path) as fh:
            cp.read_file(fh)
    except (OSError, configparser.Error) as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from None
    table = {_dest(o): t for o, t, _, _ in _options(cmd)}
    common_keys = {_dest(o) for o, *_ in COMMON}
    out = {}
    for section in cp.sections():
        if section != "common" and section not in SUBCOMMANDS:
            raise ConfigError(f"unknown config section [{section}]")
        for key, raw in cp.items(section):
            dest = _dest(key)
            allowed = common_keys if section == "common" else {_dest(o) for o, *_ in COMMON + SUBCOMMANDS[section][1]}
            if dest not in allowed:
                raise ConfigError(f"unknown key {key!r} in [{section}]")
            if section not in ("common", cmd):
                continue
            try:
                out[dest] = table[dest](raw)
            except (argparse.ArgumentTypeError, ValueError) as exc:
                raise ConfigError(f"bad value for {key!r}: {exc}") from None
    return out


def resolve(args, cmd):
    """Merge defaults < config file < flags into a plain dict."""
    cfg = load_config(args.config, cmd) if args.config else {}
    opts = {}
    for opt, _, default, _ in _options(cmd):
        d = _dest(opt)
        flag = getattr(args, d)
        opts[d] = flag if flag is not None else cfg.get(d, default)
    if opts["threads"] is None:
        env = os.environ.get("ARS2_THREADS")
        try:
            opts["threads"] = int(env) if env else 1
        except ValueError:
            raise ConfigError(f"ARS2_THREADS must be an integer, got {env!r}") from None
        if opts["threads"] < 1:
            raise ConfigError("ARS2_THREADS must be positive")
    x0, x1, y0, y1 = opts["box"]
    if not (x0 < x1 and y0 < y1):
        raise ConfigError("box is degenerate")
    if cmd != "jets" and cmd != "repro":
        if (opts["f"] is None) == (opts["frame"] is None):
            raise ConfigError("give exactly one of --f or --frame")
    return opts


def make_ars(opts) -> Ars:
    kw = dict(domain=tuple(opts["box"]), tol=Tol(opts["tol"], opts["tol"], opts["tol"]),
              orientation_M=opts["orientation_m"], orientation_E=opts["orientation_e"])
    if opts.get("f") is not None:
        return Ars.f_chart(opts["f"], **kw)
    return Ars.from_frame(*opts["frame"], **kw)


# --- output helpers ----------------------------------------------------------------

def _write(path, text, stdout):
    if path is None or path == "-":
        stdout.write(text)
    else:
        Path(path).parent.mkdir(parents=True, exist_ok=True)
        Path(path).write_text(text)


def _curve_csv(curve):
    return _emit.dumps_csv(("param", "x", "y", "tx", "ty"), curve.to_rows())


def _try_z(ars, seed):
    try:
        return trace_singular_set(ars, seed)
    except Exception:
        return None


# --- subcommands -------------------------------------------------------------------

def cmd_classify(opts, out):
    if opts["point"] is None:
        raise ConfigError("classify needs --point")
    ars = make_ars(opts)
    pc = point_class(ars, opts["point"])
    res = {"point": list(opts["point"]), "kind": pc.kind, "witnesses": pc.witnesses}
    if ars.chart_form:
        res["f_chart_class"] = f_chart_class(ars.f, opts["point"], opts["tol"])
    _write(opts["out"], _emit.dumps_json(res), out)
    return 0


def cmd_singular(opts, out):
    if opts["seed"] is None:
        raise ConfigError("singular needs --seed")
    ars = make_ars(opts)
    c = trace_singular_set(ars, opts["seed"], h0=opts["h0"])
    _write(opts["out"], _curve_csv(c), out)
    summary = {"n": len(c), "closed": c.closed, "markers": c.markers, "stop_reasons": list(c.stop_reasons)}
    if opts["json"]:
        _write(opts["json"], _emit.dumps_json(summary), out)
    if opts["svg"]:
        plot = _emit.SvgPlot(ars.domain, title="singular set")
        plot.polyline(c.points, "Z")
        plot.points([m["point"] for m in c.markers], "spade")
        _write(opts["svg"], plot.render(), out)
    return 0


def curvature_grid(ars, nx, ny):
    """Arrays (nx, ny) of K, A, S, h on the domain box; NaN where undefined."""
    from .curvature import grad_K, spade_indicator

    x0, x1, y0, y1 = ars.domain
    xs, ys = np.linspace(x0, x1, nx), np.linspace(y0, y1, ny)
    X, Y = np.meshgrid(xs, ys, indexing="ij")
    x, y = X.ravel(), Y.ravel()
    D = ars.det(x, y)
    (a1, a2), (b1, b2) = ars.frame(x, y)
    s = a1 * a1 + a2 * a2 + b1 * b1 + b2 * b2
    off = np.abs(D) / np.maximum(s, 1e-300) > max(ars.tol.det, 1e-6)
    Kv, Av, Sv = (np.full(x.shape, np.nan) for _ in range(3))
    if off.any():
        from .curvature import gauss_curvature

        Kv[off] = gauss_curvature(ars, (x[off], y[off]))
        Av[off] = grad_K(ars, (x[off], y[off]))[1]
    with np.errstate(all="ignore"):
        raw, hv = spade_indicator(ars, (x, y))
    Sv[off] = np.asarray(raw, float)[off]
    shape = (nx, ny)
    return xs, ys, Kv.reshape(shape), Av.reshape(shape), Sv.reshape(shape), np.asarray(hv, float).reshape(shape), D.reshape(shape)


def cmd_curvature_map(opts, out):
    ars = make_ars(opts)
    xs, ys, Kg, Ag, Sg, Hg, Dg = curvature_grid(ars, opts["nx"], opts["ny"])
    X, Y = np.meshgrid(xs, ys, indexing="ij")
    rows = np.column_stack([X.ravel(), Y.ravel(), Kg.ravel(), Ag.ravel(), Sg.ravel(), Hg.ravel()])
    _write(opts["out"], _emit.dumps_csv(("x", "y", "K", "A", "S", "h"), rows), out)
    if opts["svg"]:
        plot = _emit.SvgPlot(ars.domain, title="Gaussian curvature")
        plot.heatmap(xs, ys, np.sign(Kg) * np.log1p(np.abs(Kg)))
        plot.segments(_emit.contour_segments(xs, ys, Dg), "Z")
        plot.segments(_emit.contour_segments(xs, ys, Hg), "spade")
        _write(opts["svg"], plot.render(), out)
    return 0


def cmd_spade(opts, out):
    from ._tracer import Curve, trace_zero_set
    from .curvature import spade_value_grad
    from .normalform import spade_branch

    if opts["seed"] is None:
        raise ConfigError("spade needs --seed")
    ars = make_ars(opts)
    seed = opts["seed"]
    pc = point_class(ars, seed)
    summary = {"seed": list(seed), "seed_kind": pc.kind}
    if pc.is_tangency:
        br = spade_branch(ars, seed, length=opts["length"])
        s = np.linspace(*br.span, 401)
        pts, vel = br.point(s), br.velocity(s)
        tan = vel / np.hypot(*vel)
        curve = Curve(s, pts.T, tan.T, arclength=False)
        v0 = br.velocity(0.0)[:, 0]
        summary["tangent_at_seed"] = (v0 / np.hypot(*v0)).tolist()
        summary["dx_dy_at_seed"] = float(v0[0] / v0[1]) if v0[1] != 0 else None
    else:
        curve = trace_zero_set(spade_value_grad(ars), seed, ars.domain, h0=opts["h0"])
        summary["stop_reasons"] = list(curve.stop_reasons)
    summary["n"] = len(curve)
    _write(opts["out"], _curve_csv(curve), out)
    if opts["json"]:
        _write(opts["json"], _emit.dumps_json(summary), out)
    if opts["svg"]:
        plot = _emit.SvgPlot(ars.domain, title="spade set")
        plot.polyline(curve.points, "spade")
        _write(opts["svg"], plot.render(), out)
    return 0


def cmd_geodesic(opts, out):
    from .cutlocus import PointSource, ZSource
    from .geodesics import hamiltonian, hamiltonian_vector_field, variational_flow

    ars = make_ars(opts)
    if opts["state"] is not None:
        z0 = np.array(opts["state"], float)
        H = float(hamiltonian(ars, z0[:, None])[0])
        if not H > 0:
            raise ValueError("initial covector annihilates the distribution (H = 0)")
        z0[2:] /= math.sqrt(2 * H)
        v = hamiltonian_vector_field(ars, z0[:, None])[:, 0]
        dz0 = np.array([0.0, 0.0, -v[1], v[0]])      # rotate p along the level H = 1/2
        tag = {"state": z0.tolist()}
    else:
        if opts["source"] is None or opts["a"] is None:
            raise ConfigError("geodesic needs --state, or --source with --a")
        side = 1 if opts["side"] == "upper" else -1
        if opts["source"] == "z":
            src = ZSource(ars, guess=opts["point"][1] if opts["along"] == "x" else opts["point"][0],
                          along=opts["along"])
        else:
            src = PointSource(ars, tuple(opts["point"]))
        z0 = src.launch(opts["a"], side)[:, 0]
        dz0 = src.launch_derivative(opts["a"], side)[:, 0]
        tag = {"source": src.describe(), "a": opts["a"], "side": opts["side"]}
    vf = variational_flow(ars, z0, dz0, opts["duration"], n_samples=opts["samples"])
    H = hamiltonian(ars, vf.states)
    rows = np.column_stack([vf.t, vf.states.T, H, vf.jac_det])
    _write(opts["out"], _emit.dumps_csv(("t", "x", "y", "p_x", "p_y", "H", "jac_det"), rows), out)
    if opts["json"]:
        summary = dict(tag, max_H_dev=float(np.max(np.abs(H - 0.5))),
                       first_conjugate_time=vf.first_sign_change())
        _write(opts["json"], _emit.dumps_json(summary), out)
    if opts["svg"]:
        plot = _emit.SvgPlot(ars.domain, title="geodesic")
        plot.polyline(vf.states[:2].T, "geodesic")
        _write(opts["svg"], plot.render(), out)
    return 0


def _probe_times(side, lo, hi, n, t_min=None, t_max=None, delta=0.6):
    from .jets import K

    if side > 0:
        a, b = 2 * lo, 0.6 * hi
    else:
        a, b = 2 * K * math.sqrt(lo) * 1.6, 2 * K * math.sqrt(hi) * 0.75
    a = t_min if t_min is not None else a
    b = t_max if t_max is not None else b
    if not 0 < a < b:
        raise ConfigError(f"empty probe-time range [{a:.3g}, {b:.3g}]")
    return np.geomspace(a, b, n)


def run_cutlocus(ars, opts):
    """Cut branches as {label: rows} plus a summary dict."""
    from .cutlocus import PointSource, ZSource, cut_locus, lower_window, propagate_front, z_cut_branch

    lo, hi = opts["a_min"], opts["a_max"]
    if not lo < hi:
        raise ConfigError("need a-min < a-max")
    branches, notes, conj = {}, [], {}
    if opts["source"] == "point":
        if opts["t_max"] is None:
            raise ConfigError("a point source needs --t-max")
        src = PointSource(ars, tuple(opts["point"]), opts["center"])
        fp = propagate_front(ars, src, (lo, hi), 1, t_max=opts["t_max"], n_a=opts["n_a"], spacing="lin")
        fn = propagate_front(ars, src, (-hi, -lo), 1, t_max=opts["t_max"], n_a=opts["n_a"], spacing="lin")
        t0 = opts["t_min"] or opts["t_max"] / opts["n_probes"]
        cl = cut_locus(ars, fp, fn, np.linspace(t0, opts["t_max"], opts["n_probes"]),
                       label="point", check_conjugate=opts["conjugate"])
        branches.update(cl.branches)
        notes += cl.notes
        conj.update(cl.conjugate_ok)
        return branches, {"source": src.describe(), "notes": notes, "conjugate_ok": conj}
    guess = opts["point"][1] if opts["along"] == "x" else opts["point"][0]
    src = ZSource(ars, guess=guess, along=opts["along"])
    sides = {"upper": [1], "lower": [-1], "both": [1, -1]}[opts["side"]]
    for side in sides:
        window = None if side > 0 else lower_window(1.0, opts["delta"])
        probes = _probe_times(side, lo, hi, opts["n_probes"], opts["t_min"], opts["t_max"])
        cl = z_cut_branch(ars, side, (lo, hi), probes, n_a=opts["n_a"], window=window, source=src,
                          check_conjugate=opts["conjugate"])
        name = "upper" if side > 0 else "lower"
        for label, rows in cl.branches.items():
            key = name if label in (name, "cut") else f"{name}:{label}"
            branches[key] = rows
        notes += [f"{name}: {n}" for n in cl.notes]
        conj.update({name: v for v in cl.conjugate_ok.values()})
    return branches, {"source": src.describe(), "notes": notes, "conjugate_ok": conj}


def _cut_rows(branches):
    rows = []
    for label in sorted(branches):
        for r in branches[label]:
            rows.append((label,) + tuple(float(v) for v in r[:5]))
    return rows


def cmd_cutlocus(opts, out):
    ars = make_ars(opts)
    branches, summary = run_cutlocus(ars, opts)
    _write(opts["out"], _emit.dumps_csv(("branch_id", "a", "a_bar", "t_cut", "x", "y"), _cut_rows(branches)), out)
    summary["counts"] = {k: len(v) for k, v in branches.items()}
    summary["max_residual"] = {k: float(np.max(v[:, 5])) if len(v) else None for k, v in branches.items()}
    if opts["json"]:
        _write(opts["json"], _emit.dumps_json(summary), out)
    if opts["svg"]:
        plot = _emit.SvgPlot(ars.domain, title="cut locus")
        _overlay(plot, ars, opts["point"], branches)
        _write(opts["svg"], plot.render(), out)
    return 0


def _overlay(plot, ars, q, branches, spade=None):
    z = _try_z(ars, q)
    if z is not None:
        plot.polyline(z.points, "Z")
    for label in sorted(branches):
        rows = branches[label]
        if len(rows):
            pts = rows[np.argsort(rows[:, 2])][:, 3:5]
            plot.polyline(np.vstack([np.asarray(q, float)[None], pts]), "cut")
    if spade is not None:
        plot.polyline(spade, "spade")


def jets_report(gamma):
    from .jets import K, solve_model_jets

    sol = solve_model_jets(gamma)
    c = sol.constants
    return {
        "gamma": gamma,
        "K_agm": K,
        "constants": {k: c[k] for k in ("x10", "y10", "g1", "g2", "two_g1_plus_g2")},
        "closedFormMaxErr": sol.closed_form_max_err,
        "J0MinAbs": sol.J0_min_abs,
    }


def cmd_jets(opts, out):
    _write(opts["out"], _emit.dumps_json(jets_report(opts["gamma"])), out)
    return 0


def cmd_canon(opts, out):
    from .normalform import canonical_chart, verify_conditions

    if opts["point"] is None:
        raise ConfigError("canon needs --point")
    ars = make_ars(opts)
    ex, ey = opts["extent"]
    xs = np.linspace(-ex, ex, opts["nx"])
    ys = np.linspace(-ey, ey, opts["ny"])
    chart = canonical_chart(ars, opts["point"], xs, ys, length=opts["length"])
    chart.h = opts["stencil"]
    doc = chart.to_json()
    doc["grid"].update({"h": [float(xs[1] - xs[0]) if len(xs) > 1 else 0.0,
                              float(ys[1] - ys[0]) if len(ys) > 1 else 0.0],
                        "stencil_h": opts["stencil"]})
    if opts["verify"]:
        rep = verify_conditions(chart, h=opts["stencil"])
        doc["report"] = rep.to_json()
        doc["report"]["ok"] = rep.ok
    _write(opts["out"], _emit.dumps_json(doc), out)
    if opts["csv"]:
        X, Y = np.meshgrid(xs, ys, indexing="ij")
        rows = np.column_stack([X.ravel(), Y.ravel(), chart.f_tilde.ravel(), chart.det_DE.ravel()])
        _write(opts["csv"], _emit.dumps_csv(("xbar", "ybar", "f_tilde", "det_DE"), rows), out)
    if opts["svg"]:
        plot = _emit.SvgPlot((-ex, ex, -ey, ey), title="level sets of the invariant")
        F = chart.f_tilde
        for lev in np.linspace(np.nanmin(F), np.nanmax(F), 13)[1:-1]:
            plot.segments(_emit.contour_segments(xs, ys, F, lev), "level")
        plot.segments(_emit.contour_segments(xs, ys, F, 0.0), "Z")
        _write(opts["svg"], plot.render(), out)
    return 0


def cmd_repro(opts, out):
    """Checks on the example structure, a combined figure and a JSON report."""
    from .cutlocus import fit_asymptote
    from .geodesics import track_hamiltonian
    from .jets import K, F3Params, predict_cut_coefficients
    from .normalform import canonical_chart, spade_branch, verify_conditions

    started = time.perf_counter()
    odir = Path(opts["out_dir"])
    odir.mkdir(parents=True, exist_ok=True)
    box = (-0.25, 0.25, -0.1, 0.1)
    ars = Ars.f_chart(EXAMPLE_F, domain=box)
    checks = {}

    def check(name, ok, **data):
        checks[name] = dict(data, passed=bool(ok))

    with track_hamiltonian() as hlog:
        pc = point_class(ars, (0.0, 0.0))
        check("origin_is_tangency", pc.is_tangency, kind=pc.kind)

        br = spade_branch(ars, (0.0, 0.0), length=0.15)
        v0 = br.velocity(0.0)[:, 0]
        slope = float(v0[0] / v0[1])
        check("spade_tangent", abs(slope + 0.3) <= 0.01, dx_dy=slope, expected=-0.3)
        spade_pts = br.point(np.linspace(*br.span, 301)).T

        base = dict(source="z", point=(0.0, 0.0), along="x", n_a=128, t_min=None, t_max=None,
                    delta=0.6, conjugate=True)
        up, up_sum = run_cutlocus(ars, dict(base, side="upper", a_min=5e-4, a_max=0.12, n_probes=25,
                                            t_min=1e-3, t_max=0.1))
        lo_, lo_sum = run_cutlocus(ars, dict(base, side="lower", a_min=1e-4, a_max=0.05, n_probes=10,
                                             t_min=2 * K * 0.03, t_max=2 * K * 0.15))
    branches = {**up, **lo_}
    u = branches.get("upper", np.empty((0, 6)))
    sel = (u[:, 4] >= 1e-4) & (u[:, 4] <= 1e-2) if len(u) else np.zeros(0, bool)
    fit = fit_asymptote(u[sel, 4], u[sel, 3], "line-through-origin")
    check("upper_slope", abs(fit.coefficient + 0.5) <= 0.03, slope=fit.coefficient, expected=-0.5,
          n=fit.n)
    a = np.abs(u[:, 0])
    ratio = (u[:, 2] / a - 1) / (u[:, 0] / 2)
    keep = (a >= 1e-3) & (a <= 1e-2)
    check("upper_time_ratio", np.all(np.abs(ratio[keep] - 1) <= 0.1),
          min=float(ratio[keep].min()), max=float(ratio[keep].max()))
    L = branches.get("lower", np.empty((0, 6)))
    pw = fit_asymptote(L[:, 4], L[:, 3], "power-law")
    check("lower_exponent", abs(pw.exponent - 2 / 3) <= 0.05, exponent=pw.exponent, expected=2 / 3)
    pred = predict_cut_coefficients(F3Params.make("1 + x"), 0.01)["lower"]
    eta = L[:, 2] / (2 * K)
    yr = L[:, 4] / (pred["y_eta3"] * eta ** 3)
    nxt = 1 + pred["y_eta4"] / pred["y_eta3"] * eta
    check("lower_y_ratio_next_order", np.all(np.abs(yr / nxt - 1) <= 0.01),
          eta0=eta, ratio=yr, next_order=nxt)
    check("conjugate_after_cut", all(up_sum["conjugate_ok"].values()) and all(lo_sum["conjugate_ok"].values()),
          **{k: v for k, v in {**up_sum["conjugate_ok"], **lo_sum["conjugate_ok"]}.items()})
    jr = jets_report(1.0)
    check("jets", jr["constants"]["two_g1_plus_g2"] != 0 and jr["closedFormMaxErr"] <= 1e-8, **jr)
    chart = canonical_chart(ars, (0.0, 0.0), np.linspace(-0.05, 0.05, 11), np.linspace(-0.05, 0.05, 11),
                            length=0.2)
    rep = verify_conditions(chart)
    check("tangency_conditions", rep.ok, **rep.to_json())
    hdev = max((e["dev_half"] for e in hlog), default=0.0)
    check("hamiltonian", hdev <= 1e-9, max_dev=hdev, runs=len(hlog))

    plot = _emit.SvgPlot(box, title="f = " + EXAMPLE_F)
    _overlay(plot, ars, (0.0, 0.0), branches, spade_pts)
    (odir / "figure.svg").write_text(plot.render())
    (odir / "cut.csv").write_text(_emit.dumps_csv(("branch_id", "a", "a_bar", "t_cut", "x", "y"),
                                                  _cut_rows(branches)))
    report = {"structure": EXAMPLE_F, "checks": checks, "all_passed": all(c["passed"] for c in checks.values()),
              "asymptotes": {"upper_slope": fit.coefficient, "lower_exponent": pw.exponent}}
    (odir / "report.json").write_text(_emit.dumps_json(report))
    lines = [f"{'PASS' if c['passed'] else 'FAIL'} {name}" for name, c in checks.items()]
    lines.append(f"upper slope {fit.coefficient:.4f}, lower exponent {pw.exponent:.4f}")
    lines.append(f"wrote {odir / 'figure.svg'}, {odir / 'cut.csv'}, {odir / 'report.json'} "
                 f"({time.perf_counter() - started:.1f} s)")
    out.write("\n".join(lines) + "\n")
    if not report["all_passed"]:
        failed = [n for n, c in checks.items() if not c["passed"]]
        raise RuntimeError(f"checks failed: {', '.join(failed)}")
    return 0


HANDLERS = {
    "classify": cmd_classify, "singular": cmd_singular, "curvature-map": cmd_curvature_map,
    "spade": cmd_spade, "geodesic": cmd_geodesic, "cutlocus": cmd_cutlocus, "jets": cmd_jets,
    "canon": cmd_canon, "repro": cmd_repro,
}


def run_cli(argv=None, stdout=None, stderr=None) -> int:
    stdout = stdout or sys.stdout
    stderr = stderr or sys.stderr
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    if args.command is None:
        parser.print_help(stderr)
        return 2
    try:
        opts = resolve(args, args.command)
    except ConfigError as exc:
        stderr.write(f"ars2 {args.command}: configuration error: {exc}\n")
        return 2
    try:
        return HANDLERS[args.command](opts, stdout)
    except ConfigError as exc:
        stderr.write(f"ars2 {args.command}: configuration error: {exc}\n")
        return 2
    except (ExprError, ArithmeticError, ValueError, RuntimeError, np.linalg.LinAlgError) as exc:
        err = {"error": {"subcommand": args.command, "type": type(exc).__name__, "message": str(exc)}}
        if os.environ.get("ARS2_DEBUG"):
            err["error"]["traceback"] = traceback.format_exc()
        stdout.write(_emit.dumps_json(err))
        return 1


def main(argv=None):
    try:
        code = run_cli(argv)
        sys.stdout.flush()
    except BrokenPipeError:
        # downstream closed early (e.g. piped into head)
        os.dup2(os.open(os.devnull, os.O_WRONLY), sys.stdout.fileno())
        code = 0
    sys.exit(code)


if __name__ == "__main__":
    main()
