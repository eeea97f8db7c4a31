"""Smoke test for the circlot_py extension.

Build and install first:
    maturin build --release -m crates/python/Cargo.toml -o dist && pip install dist/circlot_py-*.whl
"""

import itertools
import math
import os
import random
import struct
import sys
import tempfile

import circlot_py as co


def close(a, b, tol=1e-9):
    return abs(a - b) <= tol * max(1.0, abs(b))


def cemd_by_cuts(f, g):
    # the circular EMD is the best linear EMD over every cut point
    n = len(f)
    best = math.inf
    for k in range(n):
        acc, total = 0.0, 0.0
        for i in range(n):
            acc += f[(i + k) % n] - g[(i + k) % n]
            total += abs(acc)
        best = min(best, total)
    return best


def circ(x, y):
    d = abs(x - y) % 1.0
    return min(d, 1.0 - d)


def check_cemd(rng):
    for _ in range(50):
        n = rng.randint(2, 20)
        f = [rng.random() for _ in range(n)]
        g = [rng.random() for _ in range(n)]
        f = [w / sum(f) for w in f]
        g = [w / sum(g) for w in g]
        got = co.cemd(co.Histogram(f), co.Histogram(g))
        assert close(got, cemd_by_cuts(f, g)), (got, cemd_by_cuts(f, g))
    d0 = co.Histogram([1, 0, 0, 0, 0, 0, 0, 0])
    d3 = co.Histogram([0, 0, 0, 1, 0, 0, 0, 0])
    assert co.cemd(d0, d3) == 3.0
    assert co.mk_distance(d0, d0) == 0.0
    assert co.mk_distance(d0, d3) == co.mk_distance(d3, d0)


def check_points(rng):
    for _ in range(20):
        p = rng.randint(1, 5)
        xs = [rng.random() for _ in range(p)]
        ys = [rng.random() for _ in range(p)]
        for lam in (1, 2, 3):
            brute = min(
                sum(circ(x, ys[s]) ** lam for x, s in zip(xs, perm)) / p
                for perm in itertools.permutations(range(p))
            )
            cost = co.GroundCost(f"power:{lam}")
            got = co.mk_cost(co.PointMasses(xs), co.PointMasses(ys), cost)
            assert close(got, brute, 1e-6), (lam, got, brute)
            assignment, sigma = co.solve_assignment(xs, ys, cost)
            assert close(assignment, brute, 1e-9), (assignment, brute)
            assert close(sum(circ(x, ys[s]) ** lam for x, s in zip(xs, sigma)) / p, brute, 1e-9)


def check_transport(rng):
    n = 10
    f = co.Histogram([rng.random() for _ in range(n)]).normalize()
    g = co.Histogram([rng.random() for _ in range(n)]).normalize()
    for spec in ("power:1", "power:2", "exp:2", "thresh:2", "zero-one"):
        sol = co.solve_transport(f, g, spec)
        assert close(sol.dual_objective, sol.cost, 1e-9)
        rows = [0.0] * n
        for i, j, m in sol.plan:
            rows[i] += m
        assert all(abs(r - w) < 1e-9 for r, w in zip(rows, f.weights))
        assert close(co.mk_cost(f, g, spec), sol.cost, 1e-6), spec
    half_l1 = 0.5 * sum(abs(a - b) for a, b in zip(f.weights, g.weights))
    assert close(co.mk_cost(f, g, "zero-one"), half_l1)

    lin_f = co.Histogram(f.weights, "linear")
    lin_g = co.Histogram(g.weights, "linear")
    cdf_gap = sum(abs(a - b) for a, b in zip(lin_f.cumulative(), lin_g.cumulative()))
    assert close(co.mk_cost(lin_f, lin_g), cdf_gap)


def check_map():
    f = co.Histogram([0.5, 0.5, 0, 0, 0, 0, 0, 0])
    g = co.Histogram([0, 0, 0, 0.5, 0.5, 0, 0, 0])
    m = co.transfer_map(f, g, "power:2")
    assert close(m.apply(0.0), 0.375) and close(m.apply(0.125), 0.5)
    cost = co.GroundCost("power:2")
    assert close(m.transport_cost(cost), co.mk_cost(f, g, cost), 1e-9)
    alpha, value = co.minimize_phi(f, g, cost)
    assert close(co.phi(f, g, alpha, cost), value)


def write_ppm(path, w, h, rgb):
    with open(path, "wb") as fh:
        fh.write(f"P6 {w} {h} 255\n".encode())
        for y in range(h):
            for x in range(w):
                fh.write(struct.pack("BBB", *rgb(x, y)))


def check_hue():
    with tempfile.TemporaryDirectory() as d:
        s, t, o = (os.path.join(d, n) for n in ("s.ppm", "t.ppm", "o.ppm"))
        write_ppm(s, 6, 4, lambda x, y: (200, 30 * x, 20 * y))
        write_ppm(t, 4, 4, lambda x, y: (40 * x, 60, 220))
        co.transfer_hue(s, t, o, bins=36)
        assert os.path.getsize(o) > 6 * 4 * 3
        try:
            co.transfer_hue(os.path.join(d, "missing.ppm"), t, o)
        except OSError:
            pass
        else:
            raise AssertionError("missing input should raise")


def check_errors():
    for bad in (lambda: co.Histogram([1, -1]), lambda: co.GroundCost("power:0.5"), lambda: co.PointMasses([1.5])):
        try:
            bad()
        except ValueError:
            continue
        raise AssertionError("expected ValueError")


def main():
    rng = random.Random(11)
    check_cemd(rng)
    check_points(rng)
    check_transport(rng)
    check_map()
    check_hue()
    check_errors()
    passed, dev = co.selftest(trials=20, seed=7)
    assert passed, dev
    maps = dict(co.bench("weight", seed=5, per_class=8, samples=200, bins=30, distances=["l1", "mk1"]))
    assert set(maps) == {"l1", "mk1"} and all(0 < v <= 1 for v in maps.values())
    print("smoke test passed")


if __name__ == "__main__":
    sys.exit(main())
