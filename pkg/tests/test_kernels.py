import math
import os
import subprocess
import sys

import numpy as np
import pytest

from twinfringe import _kernels

RNG = np.random.default_rng(2)


class TestBackendAgreement:
    """The JIT path must reproduce the plain-numpy reference path."""

    def test_coincidence_curve(self):
        for _ in range(20):
            s = RNG.uniform(0.0, 1.0)
            u, w = RNG.uniform(-0.5, 0.5, 2)
            phases = RNG.uniform(-10, 10, 1000)
            got = _kernels.coincidence_curve(s, u, w, phases)
            ref = _kernels._coincidence_curve_np(s, u, w, phases)
            assert np.max(np.abs(got - ref)) < 1e-14

    def test_grid_extrema(self):
        for _ in range(20):
            s = RNG.uniform(0.0, 1.0)
            u, w = RNG.uniform(-0.5, 0.5, 2)
            got = _kernels.grid_extrema(s, u, w, 4096)
            ref = _kernels._grid_extrema_np(s, u, w, 4096)
            assert got[0] == pytest.approx(ref[0], abs=1e-12)
            assert got[1] == pytest.approx(ref[1], abs=1e-14)
            assert got[2] == pytest.approx(ref[2], abs=1e-12)
            assert got[3] == pytest.approx(ref[3], abs=1e-14)

    def test_fringe_curve(self):
        x = np.linspace(-1e-2, 1e-2, 500)
        for _ in range(20):
            c0 = RNG.uniform(1.0, 100.0)
            mu = RNG.uniform(0.0, 1.0)
            period = RNG.uniform(1e-4, 1e-2)
            psi = RNG.uniform(-math.pi, math.pi)
            got = _kernels.fringe_curve(x, c0, mu, period, psi)
            ref = _kernels._fringe_curve_np(x, c0, mu, period, psi)
            assert np.max(np.abs(got - ref)) < 1e-10


def test_env_flag_selects_numpy_fallback():
    code = (
        "import twinfringe, numpy as np\n"
        "from twinfringe.analysis import phi_scan_oracle\n"
        "from twinfringe.spdc import TwoPhotonState\n"
        "from twinfringe.polarization import VERTICAL, HORIZONTAL, DIAGONAL\n"
        "s = TwoPhotonState(complex(0.8), complex(0.6j), VERTICAL, HORIZONTAL)\n"
        "mu = phi_scan_oracle(s, (DIAGONAL, DIAGONAL)).mu\n"
        "print(twinfringe.USING_NUMBA, repr(mu))\n"
    )
    env = dict(os.environ)
    env["TWINFRINGE_NO_NUMBA"] = "1"
    out = subprocess.run([sys.executable, "-c", code], env=env,
                         capture_output=True, text=True, check=True)
    flag, mu = out.stdout.split()
    assert flag == "False"
    assert float(mu) == pytest.approx(2 * 0.8 * 0.6, abs=1e-9)
