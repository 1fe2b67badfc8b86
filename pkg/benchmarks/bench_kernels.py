"""Compare the compiled and numpy kernels on random arenas.

    python3 benchmarks/bench_kernels.py [--sizes 100 1000 5000] [--repeat 5]
"""
import argparse
import timeit

import numpy as np

from atld import kernels
from atld.formula import parse_formula
from atld.generators import random_model
from atld.mc_perfect import check


def arrays(n, m, g, k, seed=0):
    rng = np.random.default_rng(seed)
    P = m ** g
    prof = np.array(np.unravel_index(np.arange(P), (m,) * g)).T.astype(np.int32)
    trans = rng.integers(0, n, size=(n, P)).astype(np.int32)
    av = rng.random((g, n, m)) < 0.7
    av[:, :, 0] = True
    en = np.ones((n, P), dtype=bool)
    for gi in range(g):
        en &= av[gi][:, prof[:, gi]]
    grp = np.zeros(P, dtype=np.int32)
    for gi in range(k):
        grp = grp * m + prof[:, gi]
    phi = rng.random(n) < 0.8
    psi = rng.random(n) < 0.05
    return trans, np.ascontiguousarray(en), np.ascontiguousarray(grp), m ** k, phi, psi


def bench(fn, repeat):
    return min(timeit.repeat(fn, number=1, repeat=repeat))


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--sizes", type=int, nargs="+", default=[100, 1000, 5000])
    ap.add_argument("--agents", type=int, default=3)
    ap.add_argument("--actions", type=int, default=3)
    ap.add_argument("--repeat", type=int, default=5)
    args = ap.parse_args()
    names = sorted(kernels.BACKENDS)
    print(f"backends: {', '.join(names)}  (agents={args.agents}, actions={args.actions})")
    print(f"{'states':>7} {'kernel':>8} " + " ".join(f"{n + ' ms':>12}" for n in names)
          + ("   speedup" if len(names) == 2 else ""))
    for n in args.sizes:
        trans, en, grp, ng, phi, psi = arrays(n, args.actions, args.agents, 2)
        for kernel in ("pre", "until", "release"):
            times = []
            for name in names:
                impl = kernels.BACKENDS[name]
                u8 = lambda a: a.astype(np.uint8)
                if kernel == "pre":
                    call = lambda: impl.pre(trans, u8(en), grp, ng, u8(psi))
                else:
                    call = lambda: getattr(impl, kernel)(trans, u8(en), grp, ng, u8(phi), u8(psi))
                times.append(bench(call, args.repeat) * 1e3)
            line = f"{n:>7} {kernel:>8} " + " ".join(f"{t:>12.3f}" for t in times)
            if len(times) == 2:
                line += f"   {times[1] / times[0]:.1f}x"
            print(line)
    print("\nend-to-end check of nested fixpoints on a random model:")
    for n in args.sizes:
        m = random_model(1, states=n, agents=args.agents, actions=args.actions, props=4)
        f = parse_formula("<{a0}> G <{a1,a2}> F (p0 & <{a0,a1}> (p1 | <{}> X p3) U (p2 & !<{a2}> G p3))")
        m.arena
        for name in names:
            kernels.use_backend(name)
            print(f"{n:>7} {name:>8} {bench(lambda: check(m, f), args.repeat) * 1e3:>10.3f} ms")


if __name__ == "__main__":
    main()
