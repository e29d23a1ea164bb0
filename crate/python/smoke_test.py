"""Smoke test for the magweyl_py extension module.

Run with pytest or directly: python python/smoke_test.py
"""

import json
import math

import numpy as np

import magweyl_py as mw


def test_heisenberg_bch():
    h = mw.Algebra.preset("heisenberg:3")
    assert h.dim == 3 and h.nilpotency_index == 1
    # X∗Y = X + Y + ½[X,Y], and [e1,e2] = e3
    z = h.bch([1.0, 0.0, 0.0], [0.0, 1.0, 0.0])
    assert np.allclose(z, [1.0, 1.0, 0.5], atol=1e-14)
    assert np.allclose(h.bch(z, [-v for v in z]), 0.0, atol=1e-14)
    again = mw.Algebra.from_json(h.to_json())
    assert again.bracket([1, 0, 0], [0, 1, 0]) == h.bracket([1, 0, 0], [0, 1, 0])


def test_psi_round_trip():
    f = mw.Algebra.preset("filiform3:4")
    v, y = [0.3, -0.2, 0.5, 0.1], [0.7, 0.4, -0.6, 0.2]
    z = f.psi(v, y)
    assert np.allclose(f.psi_inverse(v, z), y, atol=1e-12)


def test_kernel_unitarity_and_round_trip():
    ctx = mw.Context(mw.Algebra.preset("abelian:1"), mw.Potential.preset("zero", 1), 64, 8.0)
    x = np.array([ctx.x(j) for j in range(64)])
    xi = np.array([ctx.xi(k) for k in range(64)])
    X, XI = np.meshgrid(x, xi, indexing="ij")
    values = (1 + 0.5 * X) * np.exp(-X**2 / 2 - XI**2 / 2) + 0j
    a = ctx.symbol(values.ravel().tolist())
    assert a.shape == [64, 64]
    k = ctx.kernel(a)
    assert abs(k.l2_norm() / a.l2_norm() - 1) < 1e-6
    back = ctx.symbol_from_kernel(k)
    assert back.relative_error(a) < 1e-6


def test_gauge_covariance_on_the_plane():
    ctx = mw.Context(mw.Algebra.preset("abelian:2"), mw.Potential.preset("landau:0.7", 2), 12, 6.0)
    a = ctx.gaussian_symbol(1.5, 1.0)
    assert ctx.gauge_covariance(mw.Potential.preset("symmetric:0.7", 2), a) < 1e-9


def test_derivative_check():
    ctx = mw.Context(mw.Algebra.preset("abelian:2"), mw.Potential.preset("landau:0.7", 2), 16, 6.0)
    error, _, ratio = ctx.derivative_check([0.6, -0.8], 1e-3)
    assert error < 1e-4 and abs(ratio / 4 - 1) < 0.2


def test_run_suites_fourier():
    cfg = {"algebra": "heisenberg:3", "grid": {"N": 8, "L": 4}, "suites": ["fourier"]}
    report = json.loads(mw.run_suites(json.dumps(cfg)))
    assert report["pass"]
    assert [c["check"] for c in report["checks"]] == ["fourier-involution", "fourier-parseval"]
    assert all(math.isfinite(c["value"]) for c in report["checks"])


def test_verify_algebra():
    report = json.loads(mw.verify_algebra(json.dumps({"algebra": "filiform3:4"})))
    assert report["pass"] and len(report["checks"]) == 4


if __name__ == "__main__":
    for name, fn in list(globals().items()):
        if name.startswith("test_"):
            fn()
            print(f"ok {name}")
