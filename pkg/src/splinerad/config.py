"""Run configuration: annotated YAML template, loading and validation."""
import os
from dataclasses import dataclass, field, fields
from pathlib import Path

import numpy as np
import yaml

from .cost import Requirements, Weights
from .errors import ConfigError, IoError
from .geometry import NAMES, DescriptorBounds
from .optimizer import PsoConfig, SbdConfig
from .proxy import ProxyConfig, SubstrateSpec

OUTPUT_ENV = "SPLINERAD_OUTPUT_DIR"
DEFAULT_REL_BOUNDS = 0.3


@dataclass(frozen=True)
class RunConfig:
    requirements: Requirements = field(default_factory=Requirements)
    weights: Weights = field(default_factory=Weights)
    bounds: DescriptorBounds = field(default_factory=lambda: DescriptorBounds.around(rel=DEFAULT_REL_BOUNDS))
    proxy: ProxyConfig = field(default_factory=ProxyConfig)
    pso: PsoConfig = field(default_factory=PsoConfig)
    sbd: SbdConfig = field(default_factory=SbdConfig)
    mode: str = "sbd"
    solver: str = "proxy"
    output_dir: str = "runs/latest"
    seed: int = 0

    def __eq__(self, other):
        if not isinstance(other, RunConfig):
            return NotImplemented
        b1, b2 = self.bounds, other.bounds
        same_bounds = (np.array_equal(b1.lo, b2.lo) and np.array_equal(b1.hi, b2.hi)
                       and b1.offset == b2.offset)
        rest = [f.name for f in fields(self) if f.name != "bounds"]
        return same_bounds and all(getattr(self, n) == getattr(other, n) for n in rest)

    @property
    def substrate(self):
        return self.proxy.substrate

    def resolved_output_dir(self):
        return os.environ.get(OUTPUT_ENV) or self.output_dir

    def imported_files(self):
        """``(s11_path, pattern_path | None)`` for an imported solver, else None."""
        if not self.solver.startswith("imported:"):
            return None
        parts = self.solver[len("imported:"):].split(",")
        return parts[0], (parts[1] if len(parts) > 1 else None)


def _num(x):
    """YAML scalar that loads back to the identical float or int."""
    if x is None:
        return "null"
    if isinstance(x, bool):
        return "true" if x else "false"
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    x = float(x)
    if x.is_integer() and abs(x) < 2**53:
        return f"{int(x)}.0"
    return repr(x)


def _floats(v):
    return "[" + ", ".join(_num(x) for x in v) + "]"


def emit(cfg=None):
    """Annotated YAML text for ``cfg`` (defaults when omitted)."""
    c = cfg or RunConfig()
    r, w, b, p, s, o, sb = c.requirements, c.weights, c.bounds, c.proxy, c.substrate, c.pso, c.sbd
    lines = [
        "# splinerad run configuration. Units: meters, Hz, dB, degrees.",
        f"seed: {_num(c.seed)}",
        f"mode: {c.mode}                 # pso | sbd",
        f"solver: {c.solver}             # proxy | imported:<s11 file>[,<pattern file>]",
        f"output_dir: {c.output_dir}     # overridden by ${OUTPUT_ENV}",
        "",
        "requirements:                  # 76-78 GHz radar antenna requirements",
        f"  f_min_hz: {_num(r.f_min)}",
        f"  f_max_hz: {_num(r.f_max)}",
        f"  s11_th_db: {_num(r.s11_th)}",
        f"  sll_th_db: {_num(r.sll_th)}",
        f"  hpbw_th_deg: {_num(r.hpbw_th)}",
        f"  bdd_th_deg: {_num(r.bdd_th)}",
        f"  pr_th_db: {_num(r.pr_th)}",
        f"  q: {_num(r.q)}                        # uniformly sampled band, Q = 41",
        "",
        "weights:                       # cost term weights, all 1.0 by default",
        f"  s11: {_num(w.s11)}",
        f"  sll: {_num(w.sll)}",
        f"  hpbw: {_num(w.hpbw)}",
        f"  bdd: {_num(w.bdd)}",
        f"  pr: {_num(w.pr)}",
        "",
        "bounds:                        # search box; reference design values -30% / +30%",
        f"  offset_m: {_num(b.offset)}          # fixed offset b = 3 mm",
        f"  names: [{', '.join(NAMES)}]",
        f"  lo_m: {_floats(b.lo)}",
        f"  hi_m: {_floats(b.hi)}",
        "",
        "substrate:                     # eps_r = 3.0, tan d = 1e-3, h = 0.127 mm, sigma = 2.5e7, tau = 25 um",
        f"  relative_permittivity: {_num(s.relative_permittivity)}",
        f"  loss_tangent: {_num(s.loss_tangent)}",
        f"  height_m: {_num(s.height)}",
        f"  conductivity_s_per_m: {_num(s.conductivity)}",
        f"  thickness_m: {_num(s.thickness)}        # stored only; copper roughness is not modeled",
        "",
        "proxy:",
        f"  theta_step_deg: {_num(p.theta_step)}          # cut over [-90, 90] deg",
        f"  radiation_coefficient: {_num(p.radiation_coefficient)}   # calibrated: minimax |S11| of the reference design",
        f"  path_factor: {_num(p.path_factor)}             # calibrated: reference-design |S11| dip at 77 GHz",
        f"  pr_cap_db: {_num(p.pr_cap_db)}                # PR cap when Ey vanishes",
        f"  element_factor: {p.element_factor}            # cos | isotropic",
        f"  polarization: {p.polarization}                # co | total",
        f"  feed_sections: {_num(p.feed_sections)}        # taper sub-sections",
        f"  reference_impedance_ohm: {_num(p.reference_impedance)}",
        f"  samples_per_segment: {_num(p.samples_per_segment)}",
        f"  gain_offset_db: {_num(p.gain_offset_db)}      # null: peak-normalized patterns",
        "",
        "pso:                           # V = 10, I = 200, w = 0.4, C1 = C2 = 2.0",
        f"  swarm_size: {_num(o.swarm_size)}",
        f"  iterations: {_num(o.iterations)}",
        f"  inertia: {_num(o.inertia)}",
        f"  c1: {_num(o.c1)}",
        f"  c2: {_num(o.c2)}",
        f"  velocity_clamp: {_num(o.velocity_clamp)}      # fraction of the unit span",
        "",
        "sbd:                           # S0 = 100 offline, S_upd = 200 reinforcement samples",
        f"  offline: {_num(sb.offline)}",
        f"  reinforcement: {_num(sb.reinforcement)}",
        f"  infill_best: {_num(sb.infill_best)}           # true call at the predicted-best particle",
        f"  infill_variance: {_num(sb.infill_variance)}   # true call at the max-variance particle",
        f"  log_offset: {_num(sb.log_offset)}             # kriging target log(phi + offset); null: phi",
        f"  converge_tol: {_num(sb.converge_tol)}",
        f"  converge_iters: {_num(sb.converge_iters)}",
        "",
    ]
    return "\n".join(lines)


def _section(d, name):
    v = d.get(name, {})
    if not isinstance(v, dict):
        raise ConfigError(f"section {name!r} must be a mapping")
    return v


def _get(sec, key, default, cast=float, section=""):
    v = sec.get(key, default)
    if v is None:
        return None
    if cast is bool and not isinstance(v, bool):
        raise ConfigError(f"{section}.{key}: expected true or false, got {v!r}")
    try:
        return cast(v)
    except (TypeError, ValueError):
        raise ConfigError(f"{section}.{key}: cannot read {v!r}") from None


def parse(text, base_dir=None):
    """RunConfig from YAML text.

    Raises
    ------
    ConfigError
        On malformed YAML, bad values or missing referenced files.
    """
    try:
        d = yaml.safe_load(text) or {}
    except yaml.YAMLError as exc:
        raise ConfigError(f"invalid YAML: {exc}") from None
    if not isinstance(d, dict):
        raise ConfigError("configuration must be a mapping")
    base = RunConfig()
    try:
        r = _section(d, "requirements")
        rq = Requirements(
            _get(r, "f_min_hz", base.requirements.f_min, section="requirements"),
            _get(r, "f_max_hz", base.requirements.f_max, section="requirements"),
            _get(r, "s11_th_db", base.requirements.s11_th, section="requirements"),
            _get(r, "sll_th_db", base.requirements.sll_th, section="requirements"),
            _get(r, "hpbw_th_deg", base.requirements.hpbw_th, section="requirements"),
            _get(r, "bdd_th_deg", base.requirements.bdd_th, section="requirements"),
            _get(r, "pr_th_db", base.requirements.pr_th, section="requirements"),
            _get(r, "q", base.requirements.q, int, "requirements"),
        )
        w = _section(d, "weights")
        wt = Weights(*[_get(w, k, 1.0, section="weights") for k in ("s11", "sll", "hpbw", "bdd", "pr")])
        b = _section(d, "bounds")
        offset = _get(b, "offset_m", base.bounds.offset, section="bounds")
        if "lo_m" in b or "hi_m" in b:
            bd = DescriptorBounds(np.array(b.get("lo_m"), dtype=float),
                                  np.array(b.get("hi_m"), dtype=float), offset)
        else:
            bd = DescriptorBounds.around(rel=_get(b, "relative", DEFAULT_REL_BOUNDS, section="bounds"),
                                         offset=offset)
        s = _section(d, "substrate")
        bs = base.substrate
        sub = SubstrateSpec(
            _get(s, "relative_permittivity", bs.relative_permittivity, section="substrate"),
            _get(s, "loss_tangent", bs.loss_tangent, section="substrate"),
            _get(s, "height_m", bs.height, section="substrate"),
            _get(s, "conductivity_s_per_m", bs.conductivity, section="substrate"),
            _get(s, "thickness_m", bs.thickness, section="substrate"),
        )
        p = _section(d, "proxy")
        bp = base.proxy
        px = ProxyConfig(
            substrate=sub,
            theta_step=_get(p, "theta_step_deg", bp.theta_step, section="proxy"),
            radiation_coefficient=_get(p, "radiation_coefficient", bp.radiation_coefficient, section="proxy"),
            path_factor=_get(p, "path_factor", bp.path_factor, section="proxy"),
            pr_cap_db=_get(p, "pr_cap_db", bp.pr_cap_db, section="proxy"),
            element_factor=_get(p, "element_factor", bp.element_factor, str, "proxy"),
            polarization=_get(p, "polarization", bp.polarization, str, "proxy"),
            feed_sections=_get(p, "feed_sections", bp.feed_sections, int, "proxy"),
            reference_impedance=_get(p, "reference_impedance_ohm", bp.reference_impedance, section="proxy"),
            samples_per_segment=_get(p, "samples_per_segment", bp.samples_per_segment, int, "proxy"),
            gain_offset_db=_get(p, "gain_offset_db", bp.gain_offset_db, section="proxy"),
        )
        seed = _get(d, "seed", 0, int, "top")
        o = _section(d, "pso")
        bo = base.pso
        ps = PsoConfig(
            _get(o, "swarm_size", bo.swarm_size, int, "pso"),
            _get(o, "iterations", bo.iterations, int, "pso"),
            _get(o, "inertia", bo.inertia, section="pso"),
            _get(o, "c1", bo.c1, section="pso"),
            _get(o, "c2", bo.c2, section="pso"),
            _get(o, "velocity_clamp", bo.velocity_clamp, section="pso"),
            seed,
        )
        solver = str(d.get("solver", "proxy"))
        sb = _section(d, "sbd")
        bb = base.sbd
        sbd = SbdConfig(
            _get(sb, "offline", bb.offline, int, "sbd"),
            _get(sb, "reinforcement", bb.reinforcement, int, "sbd"),
            _get(sb, "infill_best", bb.infill_best, bool, "sbd"),
            _get(sb, "infill_variance", bb.infill_variance, bool, "sbd"),
            _get(sb, "log_offset", bb.log_offset, section="sbd"),
            _get(sb, "converge_tol", bb.converge_tol, section="sbd"),
            _get(sb, "converge_iters", bb.converge_iters, int, "sbd"),
            solver,
        )
    except ValueError as exc:
        raise ConfigError(str(exc)) from None
    mode = str(d.get("mode", "sbd"))
    if mode not in ("pso", "sbd"):
        raise ConfigError(f"mode must be pso or sbd, got {mode!r}")
    cfg = RunConfig(rq, wt, bd, px, ps, sbd, mode, solver, str(d.get("output_dir", base.output_dir)), seed)
    if solver != "proxy":
        files = cfg.imported_files()
        if files is None:
            raise ConfigError(f"unknown solver {solver!r}")
        for f in files:
            if f is not None and not Path(base_dir or ".", f).exists():
                raise ConfigError(f"imported solver file not found: {f}")
    return cfg


def load(path):
    """Read and parse a config file; relative solver paths resolve next to it."""
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as exc:
        raise IoError(path, exc.strerror or str(exc)) from exc
    return parse(text, base_dir=path.parent)
