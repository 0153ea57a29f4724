"""Compiled versus pure-Python kernels on production-sized inputs.

Run with ``python benchmarks/bench_kernels.py [--repeat N]``. Each row is the
best-of-N wall time per call and the speedup of the compiled backend.
"""
import argparse
import timeit

import numpy as np

from splinerad import _kernels
from splinerad.geometry import DescriptorVector, build_layout, control_points
from splinerad.proxy import evaluate


def cases():
    rng = np.random.default_rng(0)
    P = control_points(DescriptorVector.reference())
    ctrl = np.stack([P[3 * o:3 * o + 4] for o in range(12)])
    t = np.linspace(0, 1, 65)
    center = build_layout(DescriptorVector.reference()).centerline
    x = rng.random((300, 20))
    theta = rng.random(20)
    m = rng.normal(size=(41, 12, 2)) + 1j * rng.normal(size=(41, 12, 2))
    y = rng.normal(size=12) * 1e-3
    k0 = np.linspace(1592, 1634, 41)
    th = np.radians(np.linspace(-90, 90, 721))
    return {
        "de_casteljau 12 x 65": ("de_casteljau", (ctrl, t)),
        "self_intersects 769 pts": ("polyline_self_intersects", (center, False, 1e-9)),
        "gauss_corr 300 x 300 x 20": ("gauss_corr", (x, x, theta)),
        "array_factor 41 x 721 x 12": ("array_factor", (m, y, k0, np.sin(th), np.cos(th))),
    }


def best(fn, repeat):
    n, _ = timeit.Timer(fn).autorange()
    return min(timeit.repeat(fn, number=n, repeat=repeat)) / n


def evaluate_with(mod, repeat):
    saved = {k: getattr(_kernels, k) for k in ("de_casteljau", "polyline_self_intersects",
                                                 "gauss_corr", "array_factor")}
    try:
        for k in saved:
            setattr(_kernels, k, getattr(mod, k))
        chi = DescriptorVector.reference()
        return best(lambda: evaluate(chi), repeat)
    finally:
        for k, v in saved.items():
            setattr(_kernels, k, v)


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--repeat", type=int, default=5)
    args = ap.parse_args(argv)
    py, cy = _kernels.python_backend, _kernels.compiled_backend
    if cy is None:
        print("compiled backend not built; showing the Python timings only")
    print(f"{'kernel':<30}{'python ms':>12}{'cython ms':>12}{'speedup':>10}")
    rows = [(name, best(lambda: getattr(py, k)(*a), args.repeat),
             best(lambda: getattr(cy, k)(*a), args.repeat) if cy else float("nan"))
            for name, (k, a) in cases().items()]
    rows.append(("evaluate (41 freqs)", evaluate_with(py, args.repeat),
                 evaluate_with(cy, args.repeat) if cy else float("nan")))
    for name, tp, tc in rows:
        print(f"{name:<30}{tp * 1e3:12.3f}{tc * 1e3:12.3f}{tp / tc:10.1f}")


if __name__ == "__main__":
    main()
