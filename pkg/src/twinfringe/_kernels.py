"""Hot numeric kernels, JIT-compiled with numba when available.

Everything here is also implemented in plain numpy; the pure-numpy path is
selected automatically when numba is not installed, or explicitly by setting
the environment variable ``TWINFRINGE_NO_NUMBA=1`` before import.  Both paths
compute the same quantities; ``benchmarks/bench_kernels.py`` compares them.

No kernel uses parallel reductions, so results do not depend on thread count.
"""

import os

import numpy as np

_env = os.environ.get("TWINFRINGE_NO_NUMBA", "").strip()
_jit_requested = _env in ("", "0")

if _jit_requested:
    try:
        from numba import njit

        USING_NUMBA = True
    except ImportError:  # pragma: no cover - exercised via env flag instead
        USING_NUMBA = False
else:
    USING_NUMBA = False


# --- pure-numpy reference implementations -----------------------------------

def _coincidence_curve_np(pair_sum, cross_re, cross_im, phases):
    phases = np.asarray(phases, dtype=np.float64)
    return 0.5 * pair_sum + cross_re * np.cos(phases) - cross_im * np.sin(phases)


def _grid_extrema_np(pair_sum, cross_re, cross_im, n_grid):
    phases = np.arange(n_grid) * (2.0 * np.pi / n_grid)
    c = _coincidence_curve_np(pair_sum, cross_re, cross_im, phases)
    i_max = int(np.argmax(c))
    i_min = int(np.argmin(c))
    return phases[i_max], c[i_max], phases[i_min], c[i_min]


def _fringe_curve_np(x, c0, mu, period, psi):
    x = np.asarray(x, dtype=np.float64)
    return c0 * (1.0 + mu * np.cos(2.0 * np.pi * x / period + psi))


# --- numba versions ----------------------------------------------------------

if USING_NUMBA:

    @njit(cache=True)
    def _coincidence_curve_nb(pair_sum, cross_re, cross_im, phases):
        out = np.empty(phases.shape[0], dtype=np.float64)
        for k in range(phases.shape[0]):
            out[k] = (0.5 * pair_sum + cross_re * np.cos(phases[k])
                      - cross_im * np.sin(phases[k]))
        return out

    @njit(cache=True)
    def _grid_extrema_nb(pair_sum, cross_re, cross_im, n_grid):
        step = 2.0 * np.pi / n_grid
        phi_max = 0.0
        phi_min = 0.0
        c_max = 0.5 * pair_sum + cross_re
        c_min = c_max
        for k in range(1, n_grid):
            phi = k * step
            c = 0.5 * pair_sum + cross_re * np.cos(phi) - cross_im * np.sin(phi)
            if c > c_max:
                c_max = c
                phi_max = phi
            if c < c_min:
                c_min = c
                phi_min = phi
        return phi_max, c_max, phi_min, c_min

    @njit(cache=True)
    def _fringe_curve_nb(x, c0, mu, period, psi):
        out = np.empty(x.shape[0], dtype=np.float64)
        w = 2.0 * np.pi / period
        for k in range(x.shape[0]):
            out[k] = c0 * (1.0 + mu * np.cos(w * x[k] + psi))
        return out


def coincidence_curve(pair_sum, cross_re, cross_im, phases):
    """Coincidence probability over an array of interferometric phases.

    The curve is 0.5*pair_sum + cross_re*cos(phi) - cross_im*sin(phi), i.e.
    half the squared two-path amplitude with the cross term already folded
    into (cross_re, cross_im).
    """
    if USING_NUMBA:
        return _coincidence_curve_nb(
            float(pair_sum), float(cross_re), float(cross_im),
            np.ascontiguousarray(phases, dtype=np.float64))
    return _coincidence_curve_np(pair_sum, cross_re, cross_im, phases)


def grid_extrema(pair_sum, cross_re, cross_im, n_grid):
    """Scan the coincidence curve on a uniform phase grid over [0, 2pi).

    Returns (phi_at_max, c_max, phi_at_min, c_min) at the first grid point
    attaining each extremum.
    """
    if USING_NUMBA:
        return _grid_extrema_nb(float(pair_sum), float(cross_re),
                                float(cross_im), int(n_grid))
    return _grid_extrema_np(pair_sum, cross_re, cross_im, int(n_grid))


def fringe_curve(x, c0, mu, period, psi):
    """Double-slit fringe rate c0*(1 + mu*cos(2*pi*x/period + psi)) over x."""
    if USING_NUMBA:
        return _fringe_curve_nb(np.ascontiguousarray(x, dtype=np.float64),
                                float(c0), float(mu), float(period), float(psi))
    return _fringe_curve_np(x, c0, mu, period, psi)
