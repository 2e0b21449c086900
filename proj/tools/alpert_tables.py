#!/usr/bin/env python3
"""Generate hybrid Gauss-trapezoidal end corrections for a log singularity.

With unit spacing, the corrected rule on [0, inf) is

    sum_j w_j f(v_j) + sum_{k >= a} f(k)

and is required to integrate x^p and x^p log x exactly (zeta-regularized)
for p = 0 .. l-1, where l is the number of auxiliary nodes.  The resulting
2l moment equations are solved with mpmath and printed as C++ initializers.

usage: alpert_tables.py ORDER A L
"""
import sys
import itertools
import mpmath as mp
import numpy as np
from scipy.optimize import least_squares

mp.mp.dps = 50


def targets(a, l):
    t0, t1 = [], []
    for p in range(l):
        s0 = sum(mp.mpf(k) ** p for k in range(1, a))
        s1 = sum(mp.mpf(k) ** p * mp.log(k) for k in range(1, a))
        t0.append(s0 - mp.zeta(-p))
        t1.append(s1 + mp.zeta(-p, derivative=1))
    return t0, t1


def residual(x, a, l, t0, t1, lib):
    v, w = x[:l], x[l:]
    r = []
    for p in range(l):
        r.append(sum(w[j] * v[j] ** p for j in range(l)) - t0[p])
        r.append(sum(w[j] * v[j] ** p * lib.log(v[j]) for j in range(l)) - t1[p])
    return r


# Rough starting points; random search is too slow for l = 7.
GUESS = {
    (5, 7): [6.5e-3, 9.1e-2, 0.40, 1.03, 1.95, 2.98, 4.0,
             2.5e-2, 0.17, 0.46, 0.79, 1.0, 1.0, 1.0],
}


def solve(a, l, seed=1):
    t0, t1 = targets(a, l)
    if (a, l) in GUESS:
        x = mp.findroot(lambda *x: residual(list(x), a, l, t0, t1, mp), GUESS[(a, l)])
        return [x[j] for j in range(l)], [x[l + j] for j in range(l)]
    f0 = [float(x) for x in t0]
    f1 = [float(x) for x in t1]
    rng = np.random.default_rng(seed)
    best = None
    for _ in range(4000):
        v0 = np.sort(rng.uniform(0.0, a + 0.5, l))
        w0 = rng.uniform(0.1, 1.0, l)
        x0 = np.concatenate([v0, w0])
        lo = np.concatenate([np.full(l, 1e-8), np.full(l, -10.0)])
        hi = np.concatenate([np.full(l, a + 2.0), np.full(l, 10.0)])
        try:
            sol = least_squares(lambda x: residual(x, a, l, f0, f1, np), x0,
                                bounds=(lo, hi), xtol=1e-15, ftol=1e-15, gtol=1e-15)
        except Exception:
            continue
        if sol.cost < 1e-20 and np.all(sol.x[l:] > 0):
            best = sol.x
            break
    if best is None:
        raise SystemExit("no positive solution found")
    x = mp.findroot(lambda *x: residual(list(x), a, l, t0, t1, mp), list(best))
    v = [x[j] for j in range(l)]
    w = [x[l + j] for j in range(l)]
    order = sorted(range(l), key=lambda j: v[j])
    return [v[j] for j in order], [w[j] for j in order]


def main():
    order, a, l = (int(s) for s in sys.argv[1:4])
    v, w = solve(a, l)
    print(f"// order {order}: a = {a}, {l} nodes")
    for vj, wj in zip(v, w):
        print(f"    {{{mp.nstr(vj, 20)}, {mp.nstr(wj, 20)}}},")


if __name__ == "__main__":
    main()
