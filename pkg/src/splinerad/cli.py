"""``splinerad`` command line.

Exit codes: 0 success, 2 configuration error, 3 evaluation error, 4 I/O
error. Every failure prints one ``error: <Kind>: <message>`` line on stderr.
"""
import argparse
import json
import sys
from dataclasses import replace
from pathlib import Path

import numpy as np

from . import config as cfgmod
from . import io
from .cost import ProxyObjective, total_cost
from .errors import ConfigError, SplineRadError
from .geometry import NAMES, DescriptorVector, build_layout, validate_descriptors
from .metrics import metrics_over_band
from .optimizer import RunHistory, pso_optimize, sbd_optimize
from .proxy import evaluate, import_response
from .surrogate import lhs_sample

MM = 1e-3


def _config(args):
    if getattr(args, "config", None):
        return cfgmod.load(args.config), Path(args.config).read_text(encoding="utf-8")
    c = cfgmod.RunConfig()
    return c, cfgmod.emit(c)


def _descriptors(args, bounds):
    if args.chi_mm:
        try:
            vals = [float(v) * MM for v in args.chi_mm.replace(";", ",").split(",") if v.strip()]
        except ValueError:
            raise ConfigError("--chi-mm expects comma-separated numbers") from None
        return validate_descriptors(vals, bounds)
    return validate_descriptors(DescriptorVector.reference(), bounds)


def _metrics_table(bm):
    lines = [f"{'f_GHz':>8} {'S11_dB':>8} {'SLL_dB':>8} {'HPBW':>7} {'BDD':>6} {'PR_dB':>7}"]
    for f, s, sl, h, b, p in bm.table():
        lines.append(f"{f / 1e9:8.3f} {s:8.2f} {sl:8.2f} {h:7.2f} {b:6.2f} {p:7.2f}")
    return "\n".join(lines)


def cmd_init(args):
    c = cfgmod.RunConfig()
    text = cfgmod.emit(c)
    if args.output:
        io.write_text(args.output, text)
    else:
        sys.stdout.write(text)
    return 0


def cmd_evaluate(args):
    cfg, _ = _config(args)
    chi = _descriptors(args, cfg.bounds)
    files = cfg.imported_files()
    if files:
        base = Path(args.config).parent if args.config else Path(".")
        resp = import_response(base / files[0], cfg.requirements.grid(),
                               base / files[1] if files[1] else None)
    else:
        resp = evaluate(chi, cfg.proxy, cfg.requirements.grid())
    bm = metrics_over_band(resp, cap_db=cfg.proxy.pr_cap_db)
    bd = total_cost(bm, cfg.requirements, cfg.weights)
    print(_metrics_table(bm))
    print("phi = " + repr(bd.total))
    for k, v in bd.as_dict().items():
        if k != "phi":
            print(f"{k} = {v!r}")
    if args.output_dir:
        io.export_design(chi, cfg, args.output_dir, stem="design")
    return 0


def cmd_metrics(args):
    cfg, _ = _config(args)
    if args.pattern is None:
        raise ConfigError("metrics needs --pattern for SLL, HPBW, BDD and PR")
    resp = import_response(args.s11, cfg.requirements.grid(), args.pattern)
    bm = metrics_over_band(resp, cap_db=cfg.proxy.pr_cap_db)
    text = io.compliance_text(bm, cfg.requirements)
    if args.output:
        io.write_text(args.output, text)
        io.write_text(Path(args.output).with_suffix(".json"),
                      json.dumps(io.compliance_document(bm, cfg.requirements), indent=1) + "\n")
    else:
        sys.stdout.write(text)
    return 0


def cmd_sample(args):
    cfg, _ = _config(args)
    seed = cfg.seed if args.seed is None else args.seed
    u = lhs_sample(args.n, len(NAMES), seed)
    io.write_samples(args.output, [cfg.bounds.from_unit(x) for x in u])
    return 0


def run_optimization(cfg, config_text, run_dir):
    """Run the configured optimizer, persisting into ``run_dir``; returns the manifest."""
    if cfg.imported_files():
        raise ConfigError("optimize needs the proxy solver; imported data describe one design")
    obj = ProxyObjective(cfg.bounds, cfg.requirements, cfg.weights, cfg.proxy)
    hist = RunHistory()
    writer = io.HistoryWriter(run_dir, len(NAMES))
    hist.listeners.append(writer)
    model = None
    try:
        if cfg.mode == "pso":
            best, phi, hist = pso_optimize(obj.unit, cfg.pso, bounds=cfg.bounds, history=hist)
        else:
            best, phi, model, hist = sbd_optimize(obj.unit, cfg.sbd, cfg.pso, bounds=cfg.bounds,
                                                  history=hist)
    finally:
        writer.close()
    return io.persist_run(hist, run_dir, cfg, config_text, best, phi,
                          obj.breakdown(best), model)


def verify_run(run_dir, scratch_dir):
    """Re-execute a persisted run from its config echo and compare history hashes.

    Returns
    -------
    (bool, str, str)
        Match flag, recorded and reproduced sha256 of the history file.
    """
    run_dir = Path(run_dir)
    echo = run_dir / io.CONFIG_ECHO
    cfg = cfgmod.load(echo)
    run_optimization(cfg, echo.read_text(encoding="utf-8"), scratch_dir)
    manifest = json.loads((run_dir / io.MANIFEST).read_text(encoding="utf-8"))
    recorded = next(e["sha256"] for e in manifest["files"] if e["file"] == io.HISTORY)
    again = io.sha256_file(Path(scratch_dir) / io.HISTORY)
    return recorded == again, recorded, again


def cmd_optimize(args):
    cfg, text = _config(args)
    if args.mode and args.mode != cfg.mode:
        # the echo must describe the run actually performed
        cfg = replace(cfg, mode=args.mode)
        text = cfgmod.emit(cfg)
    run_dir = args.output_dir or cfg.resolved_output_dir()
    manifest = run_optimization(cfg, text, run_dir)
    summary = json.loads((Path(run_dir) / io.SUMMARY).read_text())
    print(f"best phi = {summary['best_phi']!r}")
    print(f"truth calls = {summary['truth_calls_total']}")
    print(f"run directory = {run_dir} ({len(manifest)} files)")
    return 0


def cmd_export_geometry(args):
    cfg, _ = _config(args)
    chi = _descriptors(args, cfg.bounds)
    layout = build_layout(chi, cfg.bounds, cfg.proxy.samples_per_segment)
    io.export_contour(layout, args.output)
    if args.layout:
        io.write_text(args.layout, json.dumps(io.layout_document(layout), indent=1) + "\n")
    return 0


def cmd_replay(args):
    for p in io.replay(args.run_dir, args.output_dir):
        print(p)
    if args.verify:
        out = Path(args.output_dir) if args.output_dir else Path(args.run_dir) / "replay"
        ok, rec, again = verify_run(args.run_dir, out / "rerun")
        print(f"history sha256 recorded   = {rec}")
        print(f"history sha256 reproduced = {again}")
        if not ok:
            print("error: ReplayMismatch: re-executed history differs", file=sys.stderr)
            return 3
    return 0


def build_parser():
    ap = argparse.ArgumentParser(prog="splinerad", description="Evaluate, optimize and replay spline-shaped microstrip radiator designs.")
    sub = ap.add_subparsers(dest="command", required=True)

    def with_config(p):
        p.add_argument("--config", help="run configuration (YAML); defaults when omitted")
        return p

    def with_chi(p):
        p.add_argument("--chi-mm", help="20 comma-separated descriptors l1..l11,w1..w9 in mm "
                                        "(default: the reference design)")
        return p

    p = sub.add_parser("init", help="write the annotated default configuration")
    p.add_argument("--output", help="file to write (stdout when omitted)")
    p.set_defaults(func=cmd_init)

    p = with_chi(with_config(sub.add_parser("evaluate", help="metrics and cost of one design")))
    p.add_argument("--output-dir", help="also export geometry, response and compliance files")
    p.set_defaults(func=cmd_evaluate)

    p = with_config(sub.add_parser("metrics", help="compliance report of imported responses"))
    p.add_argument("--s11", required=True)
    p.add_argument("--pattern")
    p.add_argument("--output")
    p.set_defaults(func=cmd_metrics)

    p = with_config(sub.add_parser("sample", help="Latin hypercube design in meters"))
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--seed", type=int)
    p.add_argument("--output", required=True)
    p.set_defaults(func=cmd_sample)

    p = with_config(sub.add_parser("optimize", help="run PSO or SbD and persist the run"))
    p.add_argument("--mode", choices=("pso", "sbd"))
    p.add_argument("--output-dir")
    p.set_defaults(func=cmd_optimize)

    p = with_chi(with_config(sub.add_parser("export-geometry", help="contour polygon of a design")))
    p.add_argument("--output", required=True)
    p.add_argument("--layout", help="also write the layout document (JSON)")
    p.set_defaults(func=cmd_export_geometry)

    p = sub.add_parser("replay", help="plot-ready curves from a persisted run")
    p.add_argument("run_dir")
    p.add_argument("--output-dir")
    p.add_argument("--verify", action="store_true",
                   help="re-execute the run from its config echo and compare history hashes")
    p.set_defaults(func=cmd_replay)
    return ap


def main(argv=None):
    ap = build_parser()
    try:
        args = ap.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        return args.func(args)
    except SplineRadError as exc:
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return exc.exit_code
    except (ValueError, np.linalg.LinAlgError) as exc:
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())
