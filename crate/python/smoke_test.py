"""Smoke test for the pyfibercz extension.

Build and install with maturin:

    pip install maturin
    maturin develop -m crates/python/Cargo.toml --features extension-module

or copy the shared library next to this script:

    cargo build --release -p pyfibercz
    cp target/release/libpyfibercz.so python/pyfibercz.so
"""

import math

import pyfibercz as fz


def main():
    grid = fz.Grid1D.spanning(0.0, 1.0, 64)
    values = [4.0 if 16 <= i < 20 else 0.1 for i in range(64)]
    f = fz.SampledFunction1D(grid, values)

    d = fz.cz_decompose_1d(f, 1.0)
    report = fz.verify_cz_invariants(d, f)
    assert all(v for k, v in report.items() if isinstance(v, bool)), report
    rebuilt = d.reconstruct().values
    assert max(abs(a - b) for a, b in zip(rebuilt, values)) < 1e-12
    print(f"cz: {len(d.atoms())} atoms, selected measure {d.selected_measure():.4f}")

    gy = fz.Grid1D.spanning(0.0, 1.0, 32)
    ft = fz.TensorFunction2D(grid, gy, [(values, [0, 3, 7])])
    g = fz.DenseFunction2D(grid, gy, [[math.sin(0.3 * m + n) for m in range(64)] for n in range(32)])
    dense = fz.paraproduct_t(ft.materialize(), g)
    fiber = fz.paraproduct_t_fiberwise(ft, g)
    assert dense.rows() == fiber.rows()
    assert dense.shape == (32, 64)

    h = fz.DenseFunction2D(grid, gy, [[math.cos(0.2 * m * n) for m in range(64)] for n in range(32)])
    lhs = fz.paraproduct_t(ft.materialize(), g).inner(h)
    rhs = ft.materialize().inner(fz.dual_t1(h, g))
    assert abs(lhs - rhs) <= 1e-10 * max(abs(lhs), abs(rhs), 1.0)
    print(f"adjoint: <T(f,g),h> = {lhs:.6e}, <f,T1(h,g)> = {rhs:.6e}")

    fd = fz.fiberwise_decompose(ft, 1.0)
    print(f"fiberwise: exceptional measure {fd.exceptional_measure():.4f}")

    print("lp_norm(f, 2) =", fz.lp_norm(f, 2.0))
    weak = fz.weak_lp_quasinorm(dense, 2.0)
    print("weak L^2 quasinorm of T =", weak["quasiNorm"])
    print("exponents(2, 2) =", fz.exponent_algebra(2.0, 2.0))

    v = fz.run_verify("norms", 0)
    assert v["passed"], v
    print("verify norms: passed")


if __name__ == "__main__":
    main()
