"""Compare the numba and numpy element kernels.

Times Whitney proxy evaluation plus element Gram matrices for every form
degree, then a full operator assembly, on box meshes of growing size.
The first numba call per kernel signature is timed separately as JIT
warm-up.

    python benchmarks/bench_kernels.py --sizes 4,8,16 --repeat 3
"""

import argparse
import time

import numpy as np

from dualfield import _kernels, feec
from dualfield.mesh import build_box_mesh
from dualfield.quadrature import tet_rule


def element_work(geometry, backend):
    bary, weights = tet_rule(feec.PAIRING_DEGREE)
    out = []
    for k in range(4):
        vals = _kernels.whitney_values(k, bary, geometry.grads, geometry.volumes,
                                       geometry.orientation, backend)
        out.append(_kernels.element_gram(vals, vals, weights, geometry.volumes, backend=backend))
    return out


def best_of(fn, repeat):
    times = []
    for _ in range(repeat):
        start = time.perf_counter()
        result = fn()
        times.append(time.perf_counter() - start)
    return min(times), result


def main():
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--sizes", default="4,8,16")
    parser.add_argument("--repeat", type=int, default=3)
    args = parser.parse_args()
    if not _kernels.HAVE_NUMBA:
        raise SystemExit("numba is not installed; nothing to compare")

    warm = feec.tet_geometry(build_box_mesh((1.0, 1.0, 1.0), (1, 1, 1)))
    start = time.perf_counter()
    element_work(warm, "numba")
    print(f"numba JIT warm-up: {time.perf_counter() - start:.2f} s")

    print(f"{'n':>4} {'tets':>8} {'kernel numpy':>13} {'kernel numba':>13} {'speedup':>8} "
          f"{'assembly numpy':>15} {'assembly numba':>15} {'max diff':>10}")
    for n in (int(s) for s in args.sizes.split(",")):
        complex = build_box_mesh((1.0, 0.5, 0.5), (n, n, n))
        geometry = feec.tet_geometry(complex)
        t_np, ref = best_of(lambda: element_work(geometry, "numpy"), args.repeat)
        t_nb, res = best_of(lambda: element_work(geometry, "numba"), args.repeat)
        diff = max(np.abs(a - b).max() / max(np.abs(a).max(), 1e-300) for a, b in zip(ref, res))
        assembly = {}
        for backend in ("numpy", "numba"):
            _kernels.set_backend(backend)
            assembly[backend], _ = best_of(lambda: feec.build_operators(complex), args.repeat)
        _kernels.set_backend("auto")
        print(f"{n:>4} {complex.count(3):>8} {t_np:>12.4f}s {t_nb:>12.4f}s {t_np / t_nb:>7.2f}x "
              f"{assembly['numpy']:>14.4f}s {assembly['numba']:>14.4f}s {diff:>10.1e}")


if __name__ == "__main__":
    main()
