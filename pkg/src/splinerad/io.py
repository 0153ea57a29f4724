"""Run directories: incremental history, summaries, exports, manifest and replay."""
import csv
import hashlib
import json
from pathlib import Path

import numpy as np

from .errors import IoError, ParseError
from .geometry import NAMES, build_layout
from .metrics import compliance_rows, metrics_over_band
from .optimizer import Record, time_saving
from .proxy import FrequencyGrid, evaluate, export_response, fmt

HISTORY = "history.csv"
TIMINGS = "timings.csv"
CONFIG_ECHO = "config.yaml"
SUMMARY = "summary.json"
MANIFEST = "manifest.json"
TERM_COLS = ["phi_s11", "phi_sll", "phi_hpbw", "phi_bdd", "phi_pr"]


def _io(path, exc):
    return IoError(path, getattr(exc, "strerror", None) or str(exc))


def history_header(dims):
    return (["iteration", "particle", "phase", "predicted", "variance", "true"]
            + TERM_COLS + [f"u{k}" for k in range(1, dims + 1)])


def _row(rec):
    terms = list(rec.terms) + [float("nan")] * (5 - len(rec.terms))
    vals = [rec.predicted, rec.variance, rec.true] + terms[:5] + list(rec.u)
    return [str(rec.iteration), str(rec.particle), rec.phase] + [fmt(v) for v in vals]


class HistoryWriter:
    """Append-only history: one flushed line per record, wall times kept apart.

    Wall times vary between runs, so they go to a separate file and the
    history itself stays byte-identical under replay.
    """

    def __init__(self, run_dir, dims):
        self.dir = Path(run_dir)
        self.dims = dims
        try:
            self.dir.mkdir(parents=True, exist_ok=True)
            self._h = open(self.dir / HISTORY, "w", encoding="ascii", newline="")
            self._t = open(self.dir / TIMINGS, "w", encoding="ascii", newline="")
        except OSError as exc:
            raise _io(self.dir, exc) from exc
        self._h.write(",".join(history_header(dims)) + "\n")
        self._t.write("iteration,particle,phase,wall_s\n")
        self._h.flush()
        self._t.flush()

    def __call__(self, rec):
        self._h.write(",".join(_row(rec)) + "\n")
        self._h.flush()
        self._t.write(f"{rec.iteration},{rec.particle},{rec.phase},{rec.wall!r}\n")
        self._t.flush()

    def close(self):
        self._h.close()
        self._t.close()


def read_history(path):
    """Parse a history file; a torn final line (interrupted run) is dropped.

    Raises
    ------
    ParseError
        For a malformed line that is not the last one.
    """
    path = Path(path)
    try:
        text = path.read_text(encoding="ascii")
    except (OSError, UnicodeDecodeError) as exc:
        raise _io(path, exc) from exc
    lines = text.split("\n")
    complete = text.endswith("\n")
    if not lines or not lines[0].startswith("iteration,particle,phase"):
        raise ParseError(path, 1, "missing history header")
    head = lines[0].split(",")
    dims = len(head) - 11
    body = lines[1:-1] if complete else lines[1:]
    recs = []
    for n, line in enumerate(body, start=2):
        last = n == len(body) + 1
        parts = line.split(",")
        try:
            if len(parts) != len(head):
                raise ValueError(f"expected {len(head)} fields, got {len(parts)}")
            nums = [float(x) for x in parts[3:]]
            recs.append(Record(int(parts[0]), int(parts[1]), parts[2], np.array(nums[8:]),
                               nums[0], nums[1], nums[2],
                               tuple(nums[3:8]) if np.isfinite(nums[3]) else ()))
        except ValueError as exc:
            if last and not complete:
                break
            raise ParseError(path, n, str(exc)) from None
    if dims < 0:
        raise ParseError(path, 1, "bad history header")
    return recs


def sha256_file(path):
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 16), b""):
            h.update(chunk)
    return h.hexdigest()


def write_text(path, text):
    try:
        Path(path).write_text(text, encoding="utf-8", newline="\n")
    except OSError as exc:
        raise _io(path, exc) from exc


def export_contour(layout, path):
    """Closed outline as ``x_m, y_m`` rows, first vertex repeated last."""
    rows = "\n".join(f"{fmt(x)}, {fmt(y)}" for x, y in layout.contour)
    write_text(path, "# x_m, y_m\n" + rows + "\n")


def import_contour(path):
    path = Path(path)
    try:
        lines = path.read_text(encoding="ascii").splitlines()
    except OSError as exc:
        raise _io(path, exc) from exc
    pts = []
    for n, line in enumerate(lines, start=1):
        if not line.strip() or line.startswith("#"):
            continue
        try:
            x, y = (float(v) for v in line.split(","))
        except ValueError:
            raise ParseError(path, n, "expected two numbers") from None
        pts.append((x, y))
    return np.array(pts)


def layout_document(layout):
    return {
        "units": "m",
        "descriptors": layout.descriptors.as_dict(),
        "offset_b": layout.offset,
        "total_length": layout.total_length,
        "control_points": [{"c": i + 1, "x": float(x), "y": float(y)}
                           for i, (x, y) in enumerate(layout.control_points)],
        "segments": [{"o": o + 1, "length": s.length, "mean_width": s.mean_width,
                      "direction": [float(v) for v in s.direction],
                      "distance_from_feed": s.distance, "y_center": s.y_center}
                     for o, s in enumerate(layout.segments)],
        "feed": {"l1": layout.feed.length, "w1": layout.feed.start_width,
                 "w2": layout.feed.end_width},
    }


def compliance_text(bm, req):
    """Delimited per-frequency report with pass flags and a band-worst footer."""
    ok = compliance_rows(bm, req)
    out = ["# f_Hz, s11_dB, sll_dB, hpbw_deg, bdd_deg, pr_dB, pass_s11, pass_sll, pass_hpbw, pass_bdd, pass_pr"]
    for row, flags in zip(bm.table(), ok):
        out.append(", ".join([fmt(row[0])] + [fmt(v) for v in row[1:]]
                             + [str(int(b)) for b in flags]))
    for name in ("s11_db", "sll_db", "hpbw_deg", "bdd_deg", "pr_db"):
        v, f = bm.worst(name)
        out.append(f"# worst {name} = {v:.4f} at {fmt(f)} Hz")
    out.append(f"# compliant = {bool(ok.all())}")
    return "\n".join(out) + "\n"


def compliance_document(bm, req):
    ok = compliance_rows(bm, req)
    return {
        "compliant": bool(ok.all()),
        "worst": {n: {"value": bm.worst(n)[0], "f_hz": bm.worst(n)[1]}
                  for n in ("s11_db", "sll_db", "hpbw_deg", "bdd_deg", "pr_db")},
        "rows": [dict(zip(["f_hz", "s11_db", "sll_db", "hpbw_deg", "bdd_deg", "pr_db"],
                          map(float, r))) for r in bm.table()],
    }


def export_design(chi, cfg, run_dir, stem="best"):
    """Geometry, response and compliance files of one design; returns the file names."""
    d = Path(run_dir)
    layout = build_layout(chi, cfg.bounds, cfg.proxy.samples_per_segment)
    resp = evaluate(chi, cfg.proxy, cfg.requirements.grid(), layout=layout)
    bm = metrics_over_band(resp, cap_db=cfg.proxy.pr_cap_db)
    names = [f"{stem}_contour.csv", f"{stem}_layout.json", f"{stem}_s11.csv",
             f"{stem}_pattern.csv", f"{stem}_compliance.csv"]
    export_contour(layout, d / names[0])
    write_text(d / names[1], json.dumps(layout_document(layout), indent=1) + "\n")
    export_response(resp, d / names[2], d / names[3])
    write_text(d / names[4], compliance_text(bm, cfg.requirements))
    return names


def write_manifest(run_dir, files):
    d = Path(run_dir)
    entries = [{"file": f, "bytes": (d / f).stat().st_size, "sha256": sha256_file(d / f)}
               for f in sorted(files)]
    write_text(d / MANIFEST, json.dumps({"files": entries}, indent=1) + "\n")
    return entries


def persist_run(history, run_dir, cfg, config_text, best_chi, best_phi, breakdown=None,
                model=None):
    """Summary, best-design exports, config echo and manifest for a finished run.

    The history file itself is written incrementally by :class:`HistoryWriter`.

    Returns
    -------
    list of manifest entries
    """
    from .surrogate import save_model

    d = Path(run_dir)
    write_text(d / CONFIG_ECHO, config_text)
    files = [HISTORY, TIMINGS, CONFIG_ECHO]
    files += export_design(best_chi, cfg, d)
    o, s = cfg.pso, cfg.sbd
    summary = {
        "mode": cfg.mode,
        "seed": cfg.seed,
        "best_descriptors_m": best_chi.as_dict(),
        "best_phi": best_phi,
        "breakdown": breakdown.as_dict() if breakdown is not None else None,
        "truth_calls": history.truth_calls,
        "truth_calls_total": history.n_truth,
        "termination": history.termination,
        "time_saving": time_saving(o.swarm_size, o.iterations, s.offline, s.reinforcement)
        if cfg.mode == "sbd" and o.iterations > 0 else None,
    }
    write_text(d / SUMMARY, json.dumps(summary, indent=1) + "\n")
    files.append(SUMMARY)
    if model is not None:
        save_model(model, d / "model.json")
        files.append("model.json")
    return write_manifest(d, files)


def replay(run_dir, out_dir=None):
    """Plot-ready curves from a persisted run.

    Writes the cost trace of true evaluations, |S11| of the best design over
    a wide sweep and its gain cuts at the band edges and center.
    """
    from .config import load

    d = Path(run_dir)
    out = Path(out_dir) if out_dir is not None else d / "replay"
    try:
        out.mkdir(parents=True, exist_ok=True)
    except OSError as exc:
        raise _io(out, exc) from exc
    cfg = load(d / CONFIG_ECHO)
    recs = read_history(d / HISTORY)
    true = [r for r in recs if np.isfinite(r.true)]
    if not true:
        raise ParseError(d / HISTORY, 2, "no true evaluations in history")
    lines = ["# call, iteration, phase, phi, best_phi"]
    best = np.inf
    for n, r in enumerate(true, start=1):
        best = min(best, r.true)
        lines.append(f"{n}, {r.iteration}, {r.phase}, {fmt(r.true)}, {fmt(best)}")
    write_text(out / "phi_trace.csv", "\n".join(lines) + "\n")

    top = min(true, key=lambda r: r.true)
    chi = cfg.bounds.from_unit(top.u)
    req = cfg.requirements
    span = req.f_max - req.f_min
    sweep = FrequencyGrid(req.f_min - span, req.f_max + span, 3 * (req.q - 1) + 1)
    resp = evaluate(chi, cfg.proxy, sweep)
    lines = ["# f_Hz, s11_dB"] + [f"{fmt(f)}, {fmt(v)}" for f, v in zip(resp.frequencies, resp.s11_db)]
    write_text(out / "s11_curve.csv", "\n".join(lines) + "\n")

    cuts = FrequencyGrid(req.f_min, req.f_max, 3)
    r3 = evaluate(chi, cfg.proxy, cuts)
    head = "# theta_deg, " + ", ".join(f"gain_dB@{fmt(f)}Hz" for f in r3.frequencies)
    lines = [head] + [", ".join([fmt(t)] + [fmt(v) for v in r3.gain[:, k]])
                      for k, t in enumerate(r3.theta)]
    write_text(out / "gain_cuts.csv", "\n".join(lines) + "\n")
    return [out / "phi_trace.csv", out / "s11_curve.csv", out / "gain_cuts.csv"]


def write_samples(path, chis):
    """Descriptor rows in meters with a named header."""
    rows = ["# " + ", ".join(f"{n}_m" for n in NAMES)]
    rows += [", ".join(fmt(v) for v in c.values) for c in chis]
    write_text(path, "\n".join(rows) + "\n")


def read_csv_numbers(path):
    """Rows of floats from a comment-headed delimited file."""
    path = Path(path)
    try:
        with open(path, encoding="ascii", newline="") as fh:
            rows = [r for r in csv.reader(fh) if r and not r[0].startswith("#")]
    except OSError as exc:
        raise _io(path, exc) from exc
    try:
        return np.array([[float(v) for v in r] for r in rows])
    except ValueError as exc:
        raise ParseError(path, 0, str(exc)) from None
