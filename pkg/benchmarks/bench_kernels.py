"""Time each hot kernel under the numba and numpy backends.

    python3 benchmarks/bench_kernels.py [--nodes 2000] [--repeat 5]

Numba timings exclude the first (compiling) call. Results for both backends
are also checked for agreement.
"""

import argparse
import timeit

import numpy as np

from graphlcp import _accel
from graphlcp.ppr import TransitionView
from graphlcp.synth import SbmSpec, generate_sbm


def cases(n: int):
    graph, _, _ = generate_sbm(SbmSpec(num_nodes=n, intra_prob=20 / n, inter_prob=2 / n, seed=0))
    t = TransitionView(graph)
    rng = np.random.default_rng(0)
    walks = 5000
    starts = rng.integers(0, n, walks)
    lengths = rng.geometric(0.3, walks) - 1
    u = rng.random(int(lengths.sum()))
    z = rng.normal(size=(n, 8))
    bits = (rng.random(n) < 0.9).astype(np.int64)
    return {
        "ppr_truncated": ("ppr", (t.indptr, t.indices, t.probs, t.isolated, 0, 0.3, 30)),
        "random_walk_many": ("walk_many", (t.indptr, t.indices, t.keys, starts, lengths, u)),
        "pair_scan": ("pair_scan", (z, 2.0)),
        "min_density_window": ("min_window", (bits, n // 5)),
    }


def same(a, b) -> bool:
    if isinstance(a, tuple):
        return all(same(x, y) for x, y in zip(a, b))
    return bool(np.allclose(np.asarray(a, dtype=float), np.asarray(b, dtype=float), rtol=1e-12, atol=1e-15))


def main() -> None:
    ap = argparse.ArgumentParser(description=__doc__, formatter_class=argparse.RawDescriptionHelpFormatter)
    ap.add_argument("--nodes", type=int, default=2000)
    ap.add_argument("--repeat", type=int, default=5)
    args = ap.parse_args()
    print(f"n={args.nodes}, best of {args.repeat}, numba available: {_accel.HAVE_NUMBA}")
    print(f"{'kernel':<20}{'numpy [ms]':>12}{'numba [ms]':>12}{'speedup':>10}  agree")
    for name, (stem, fargs) in cases(args.nodes).items():
        np_fn = getattr(_accel, f"{stem}_numpy")
        nb_fn = getattr(_accel, f"{stem}_numba")
        t_np = min(timeit.repeat(lambda: np_fn(*fargs), number=1, repeat=args.repeat)) * 1e3
        if nb_fn is None:
            print(f"{name:<20}{t_np:>12.2f}{'-':>12}{'-':>10}  -")
            continue
        ref = nb_fn(*fargs)  # compile
        t_nb = min(timeit.repeat(lambda: nb_fn(*fargs), number=1, repeat=args.repeat)) * 1e3
        print(f"{name:<20}{t_np:>12.2f}{t_nb:>12.2f}{t_np / t_nb:>9.1f}x  {same(ref, np_fn(*fargs))}")


if __name__ == "__main__":
    main()
