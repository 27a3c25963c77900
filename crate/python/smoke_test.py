"""Smoke test for the zakotfs extension module.

Build it first with ``pip install -e crates/py --no-build-isolation``.
"""

import cmath
import json

import zakotfs


def main():
    taps = zakotfs.eva_profile()
    assert len(taps) == 6 and taps[0] == (0.0, 0.0)

    lam0, lam1, grid, psi = zakotfs.solve_pswf(1.0, 1.0, 256)
    assert 0.0 < lam1 < lam0 <= 1.0
    assert len(grid) == len(psi) == 256

    x = [[complex(l, k) for k in range(4)] for l in range(4)]
    assert zakotfs.twisted_convolution(x, [(0, 0, 1 + 0j)]) == x
    shifted = zakotfs.twisted_convolution(x, [(1, 0, 1 + 0j)])
    # row 0 reads the quasi-periodic copy of row 3
    for k in range(4):
        assert abs(shifted[0][k] - x[3][k] * cmath.exp(-2j * cmath.pi * k / 4)) < 1e-12
        assert shifted[1][k] == x[0][k]

    rect = zakotfs.PulseSet("rect", m=8, n=8, delta_f=15e3, l=4)
    assert rect.shape == (256, 64)
    assert rect.orthogonality_defect() < 1e-10
    iota = zakotfs.PulseSet("iota-pswf", m=8, n=8, delta_f=15e3, l=4)
    assert iota.orthogonality_defect() < 1e-8
    assert len(iota.pulsone(3, 2)) == 256

    config = {
        "window": "iota-pswf",
        "lattice": {"m": 8, "n": 8, "delta_f": 15e3, "l": 4},
        "layout": {"g1": 2, "g2": 2, "shrink": 1},
        "csi": "perfect",
        "trials": 4,
        "sweep": {"axis": "snr_db", "points": [30.0]},
    }
    report = json.loads(zakotfs.run_sweep(json.dumps(config)))
    point = report["points"][0]
    assert point["trials"] == 4 and 0.0 <= point["ber"] <= 1.0

    try:
        zakotfs.PulseSet("hann")
    except ValueError:
        pass
    else:
        raise AssertionError("unknown window accepted")

    print("zakotfs smoke test passed")


if __name__ == "__main__":
    main()
