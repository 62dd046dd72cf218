"""Command-line front end: ``photsub {theory,simulate,analyze,calibrate}``.

Exit status: 0 success, 2 usage, 3 domain or conditioning error, 4 I/O.
``PHOTSUB_OUTDIR`` sets the directory that relative output paths resolve to.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from pathlib import Path

import numpy as np

from . import __version__
from .errors import PhotsubError, ShotFileError

EXIT_USAGE, EXIT_DOMAIN, EXIT_IO = 2, 3, 4


# -- argument types

def int_range(text: str) -> list[int]:
    """``"3"``, ``"0..6"`` (inclusive) or ``"0,2,5"``."""
    try:
        if ".." in text:
            a, b = text.split("..")
            lo, hi = int(a), int(b)
            if lo < 0 or hi < lo:
                raise ValueError
            return list(range(lo, hi + 1))
        vals = [int(t) for t in text.split(",")]
        if any(v < 0 for v in vals):
            raise ValueError
        return vals
    except ValueError:
        raise argparse.ArgumentTypeError(f"invalid integer range {text!r}") from None


def float_list(text: str) -> list[float]:
    """``"2"``, ``"0.5,1,2"`` or ``"start:stop:num"`` (geometric spacing)."""
    try:
        if ":" in text:
            a, b, n = text.split(":")
            lo, hi, num = float(a), float(b), int(n)
            if not 0 < lo <= hi or num < 1:
                raise ValueError
            return np.geomspace(lo, hi, num).tolist()
        return [float(t) for t in text.split(",")]
    except ValueError:
        raise argparse.ArgumentTypeError(f"invalid value list {text!r}") from None


def gamma_interval(text: str) -> tuple[float, float]:
    try:
        a, b = (float(t) for t in text.split(":"))
        if not 0 < a < b:
            raise ValueError
        return a, b
    except ValueError:
        raise argparse.ArgumentTypeError(f"invalid interval {text!r} (use lo:hi)") from None


# -- output helpers

def _resolve(path: str | None) -> Path | None:
    if path is None:
        return None
    p = Path(path)
    base = os.environ.get("PHOTSUB_OUTDIR")
    if base and not p.is_absolute():
        p = Path(base) / p
    return p


def _emit(text: str, out: Path | None) -> None:
    if out is None:
        sys.stdout.write(text)
    else:
        out.parent.mkdir(parents=True, exist_ok=True)
        out.write_text(text, encoding="utf-8")


def _figure_path(out: Path | None, suffix: str = "") -> Path:
    if out is None:
        raise _Usage("--plot needs --out so the figure can be written next to it")
    return out.with_name(out.stem + suffix + ".png")


class _Usage(Exception):
    pass


def _meta(args, **extra) -> dict:
    keep = {k: v for k, v in vars(args).items()
            if k not in ("func", "out", "plot", "format") and v is not None}
    return {"program": "photsub", "version": __version__, **keep, **extra}


def _table(args, rows, columns, meta) -> str:
    from .reports import to_csv, to_json
    return to_csv(rows, columns, meta) if args.format == "csv" else to_json(rows, meta)


# -- theory

def _etas(args) -> tuple[float, float]:
    eta_t = args.eta if args.eta_t is None else args.eta_t
    eta_r = args.eta if args.eta_r is None else args.eta_r
    return eta_t, eta_r


def cmd_theory(args) -> int:
    from . import figures, reports
    out = _resolve(args.out)
    if args.subject == "joint":
        from .photon_ops import joint_thermal_table
        if args.Mt is None or args.Mr is None:
            raise _Usage("joint needs --Mt and --Mr")
        jd = joint_thermal_table(args.Mt, args.Mr, args.mt_max, args.mr_max)
        rows = [{"m_T": a, "m_R": b, "p": p} for a, b, p in jd.rows()]
        meta = _meta(args, tail=jd.tail)
        text = (reports.to_csv(rows, ["m_T", "m_R", "p"], meta) if args.format == "csv"
                else json.dumps({"meta": meta, **jd.to_dict()}))
        _emit(text, out)
        if args.plot:
            figures.plot_joint(jd.table, _figure_path(out))
        return 0

    if args.subject == "cps-sweep":
        if args.nth is not None:
            eta_t, eta_r = _etas(args)
            mr = args.mr if args.mr is not None else [2]
            rows = reports.cps_rows_by_energy(args.nth, args.tau, eta_t, eta_r, mr)
        else:
            if args.Mt is None or args.Mr is None:
                raise _Usage("cps-sweep needs either --Mt/--Mr or --nth")
            mr = args.mr if args.mr is not None else list(range(7))
            rows = reports.cps_rows_by_condition(args.Mt, args.Mr, mr)
        _emit(_table(args, rows, reports.CPS_COLUMNS, _meta(args)), out)
        if args.plot:
            if args.nth is not None:
                figures.plot_energy_sweep(rows, _figure_path(out), "CPS")
                figures.plot_nong([r["M_T"] + r["M_R"] for r in rows], [r["eps"] for r in rows],
                                  _figure_path(out, "_eps"), r"$M_T + M_R$", logx=True)
            else:
                figures.plot_cps_by_condition(rows, _figure_path(out))
                figures.plot_nong([r["m_R"] for r in rows], [r["eps"] for r in rows],
                                  _figure_path(out, "_eps"), r"$m_R$")
        return 0

    if args.subject == "ips-sweep":
        if args.nth is None:
            raise _Usage("ips-sweep needs --nth")
        eta_t, eta_r = _etas(args)
        rows = reports.ips_rows(args.nth, args.tau, eta_t, eta_r)
        _emit(_table(args, rows, reports.IPS_COLUMNS, _meta(args)), out)
        if args.plot:
            figures.plot_energy_sweep(rows, _figure_path(out), "IPS")
            figures.plot_nong([r["M_T"] + r["M_R"] for r in rows], [r["eps"] for r in rows],
                              _figure_path(out, "_eps"), r"$M_T + M_R$", logx=True)
        return 0

    # wigner
    from .ips import default_wigner_axis, wigner_ips_grid
    if args.nth is None or len(args.nth) != 1:
        raise _Usage("wigner needs a single --nth value")
    n_th = args.nth[0]
    eta_r = _etas(args)[1]
    xs = default_wigner_axis(n_th, args.tau, args.points)
    w = wigner_ips_grid(n_th, args.tau, eta_r, xs, xs)
    meta = _meta(args, convention={"hbar": 1, "vacuum_variance": 0.5,
                                   "normalisation": "integral of W over R^2 equals 1",
                                   "grid": "x rows, p columns"})
    x, p = np.meshgrid(xs, xs, indexing="ij")
    rows = [{"x": a, "p": b, "W": c} for a, b, c in zip(x.ravel(), p.ravel(), w.ravel())]
    _emit(reports.to_csv(rows, ["x", "p", "W"], meta), out)
    if out is not None:
        out.with_suffix(".json").write_text(json.dumps(meta, indent=2), encoding="utf-8")
    if args.plot:
        figures.plot_wigner(xs, xs, w, _figure_path(out))
    return 0


# -- simulate / analyze

def _config_from_args(args):
    from .lab import DetectorModel, ExperimentConfig
    if args.config:
        try:
            d = json.loads(Path(args.config).read_text(encoding="utf-8"))
        except json.JSONDecodeError as exc:
            raise ShotFileError(f"{args.config}:{exc.lineno}: malformed config ({exc.msg})") from exc
        base = ExperimentConfig.from_dict(d)
    else:
        base = ExperimentConfig.default()
    d = base.to_dict()
    for key in ("n_th", "tau", "shots", "seed"):
        if getattr(args, key) is not None:
            d[key] = getattr(args, key)
    for arm in ("t", "r"):
        det = d[f"det_{arm}"]
        for key, attr in (("eta", f"eta_{arm}"), ("gamma", f"gamma_{arm}"), ("noise_sigma", "noise")):
            if getattr(args, attr) is not None:
                det[key] = getattr(args, attr)
        d[f"det_{arm}"] = DetectorModel(**det)
    return ExperimentConfig(**d)


def _histogram_panels(summary, cfg):
    from .fock import thermal_pmf
    panels = []
    for e in summary["conditioned"]:
        if "histogram" in e:
            th = _theory_hist(e["mode"], cfg, len(e["histogram"]) + 3)
            panels.append((e["mode"], e["histogram"], th, e["fidelity"]))
    n = max([len(p[1]) for p in panels], default=10) + 3
    uncond = thermal_pmf(np.arange(n), cfg.big_mt)
    return panels, uncond


def _theory_hist(mode, cfg, n):
    from .cps import cps_detected
    from .ips import ips_state
    from .lab import Condition, theory_input
    cond = Condition.parse(mode)
    if cond.kind == "ips":
        return ips_state(cfg.n_th, cfg.tau, cfg.det_r.eta, cfg.det_t.eta, n - 1).detected.probs
    r = cps_detected(theory_input(cfg), cfg.tau, cfg.det_r.eta, cfg.det_t.eta, cond.m_r)
    return r.state.padded(n - 1)


def _report_outputs(summary, cfg, out: Path | None, plot: bool):
    from . import figures
    text = json.dumps(summary, indent=2, sort_keys=True) + "\n"
    _emit(text, out)
    if out is not None:
        from .reports import to_csv
        rows = []
        for e in summary["conditioned"]:
            if "histogram" not in e:
                continue
            th = _theory_hist(e["mode"], cfg, len(e["histogram"]))
            rows += [{"mode": e["mode"], "m_T": m, "p_emp": pe, "p_theory": float(pt)}
                     for m, (pe, pt) in enumerate(zip(e["histogram"], th))]
        meta = {"program": "photsub", "config": cfg.to_dict()}
        out.with_name(out.stem + "_hist.csv").write_text(
            to_csv(rows, ["mode", "m_T", "p_emp", "p_theory"], meta), encoding="utf-8")
    if plot:
        panels, _ = _histogram_panels(summary, cfg)
        if panels:
            figures.plot_histograms(panels, _figure_path(out))


def cmd_simulate(args) -> int:
    from .lab import analyze_batch, simulate
    from .shotio import write_shots
    cfg = _config_from_args(args)
    batch = simulate(cfg)
    shots_path = _resolve(args.out)
    shots_path.parent.mkdir(parents=True, exist_ok=True)
    write_shots(shots_path, cfg, batch, binary=args.binary)
    summary = {"config": cfg.to_dict(), **analyze_batch(batch, cfg)}
    _report_outputs(summary, cfg, _resolve(args.summary), args.plot)
    return 0


def cmd_analyze(args) -> int:
    from .lab import Condition, analyze_batch
    from .shotio import read_shots
    cfg, batch = read_shots(args.shots)
    modes = None
    if args.mode and args.mode != ["all"]:
        modes = [Condition.parse(m) for m in args.mode]
    summary = {"config": cfg.to_dict(), **analyze_batch(batch, cfg, modes)}
    _report_outputs(summary, cfg, _resolve(args.out), args.plot)
    return 0


def _read_voltages(path: str, arm: str) -> np.ndarray:
    from .shotio import is_binary, read_shots
    p = Path(path)
    if is_binary(p) or p.read_text(encoding="utf-8").lstrip().startswith("{"):
        _, batch = read_shots(p)
        return batch.v_t if arm == "t" else batch.v_r
    try:
        return np.loadtxt(p, comments="#", delimiter=",", ndmin=1)
    except ValueError as exc:
        raise ShotFileError(f"{path}: {exc}") from exc


def cmd_calibrate(args) -> int:
    from .lab import calibrate_gamma
    v = _read_voltages(args.source, args.arm)
    g = calibrate_gamma(v, args.range, width=args.width)
    sys.stdout.write(json.dumps({"arm": args.arm, "gamma": g, "samples": int(v.size)}) + "\n")
    return 0


# -- parser

def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="photsub", description=__doc__.splitlines()[0])
    p.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = p.add_subparsers(dest="command", required=True)

    th = sub.add_parser("theory", help="closed-form tables (joint, cps-sweep, ips-sweep, wigner)")
    th.add_argument("subject", choices=["joint", "cps-sweep", "ips-sweep", "wigner"])
    th.add_argument("--Mt", type=float, help="mean detected photons, transmitted arm")
    th.add_argument("--Mr", type=float, help="mean detected photons, reflected arm")
    th.add_argument("--mt-max", type=int, default=40)
    th.add_argument("--mr-max", type=int, default=40)
    th.add_argument("--mr", type=int_range, help="conditioning values, e.g. 0..6")
    th.add_argument("--nth", type=float_list, help="thermal means: 2 | 0.5,1,2 | lo:hi:num")
    th.add_argument("--tau", type=float, default=0.5)
    th.add_argument("--eta", type=float, default=1.0, help="efficiency of both detectors")
    th.add_argument("--eta-t", type=float)
    th.add_argument("--eta-r", type=float)
    th.add_argument("--points", type=int, default=256, help="wigner grid points per axis")
    th.add_argument("--format", choices=["csv", "json"], default="csv")
    th.add_argument("--out")
    th.add_argument("--plot", action="store_true", help="also write a PNG next to --out")
    th.set_defaults(func=cmd_theory)

    sim = sub.add_parser("simulate", help="run the virtual experiment")
    sim.add_argument("--config", help="JSON experiment config")
    sim.add_argument("--nth", dest="n_th", type=float)
    sim.add_argument("--tau", type=float)
    sim.add_argument("--eta-t", type=float)
    sim.add_argument("--eta-r", type=float)
    sim.add_argument("--gamma-t", type=float)
    sim.add_argument("--gamma-r", type=float)
    sim.add_argument("--noise", type=float, help="additive voltage noise width (V)")
    sim.add_argument("--shots", type=int)
    sim.add_argument("--seed", type=int)
    sim.add_argument("--out", required=True, help="shot file")
    sim.add_argument("--binary", action="store_true")
    sim.add_argument("--summary", help="summary JSON (stdout if omitted)")
    sim.add_argument("--plot", action="store_true")
    sim.set_defaults(func=cmd_simulate)

    an = sub.add_parser("analyze", help="condition and compare a stored run with theory")
    an.add_argument("shots")
    an.add_argument("--mode", action="append", help="all | ips | cps:K (repeatable)")
    an.add_argument("--out", help="report JSON (stdout if omitted)")
    an.add_argument("--plot", action="store_true")
    an.set_defaults(func=cmd_analyze)

    cal = sub.add_parser("calibrate", help="estimate volts-per-photon from voltages")
    cal.add_argument("source", help="shot file or one-column voltage file")
    cal.add_argument("--arm", choices=["t", "r"], default="t")
    cal.add_argument("--range", type=gamma_interval, default=(0.02, 0.5))
    cal.add_argument("--width", type=float, default=0.1)
    cal.set_defaults(func=cmd_calibrate)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except _Usage as exc:
        parser.print_usage(sys.stderr)
        print(f"photsub: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (ShotFileError, OSError) as exc:
        print(f"photsub: I/O error: {exc}", file=sys.stderr)
        return EXIT_IO
    except (PhotsubError, ArithmeticError) as exc:
        print(f"photsub: error: {exc}", file=sys.stderr)
        return EXIT_DOMAIN


if __name__ == "__main__":
    sys.exit(main())
