"""One-dimensional reflection model of the viscous sponge layer.

A harmonic shear wave in a Kelvin-Voigt half-space meets a layer of thickness ``H`` whose
viscosity is raised by ``1 + alpha / H`` and which ends at a traction-free wall.  The
closed-form reflection coefficient is used to pick ``alpha`` and to check the FE layer.
"""

from __future__ import annotations

import numpy as np
from scipy.optimize import minimize_scalar

from .material import KelvinVoigt, complex_modulus


def layer_reflection(m: KelvinVoigt, omega: float, thickness: float, alpha: float) -> complex:
    """Complex reflection coefficient at the layer entrance (time factor ``exp(i w t)``)."""
    g1 = complex_modulus(m, omega)
    g2 = complex(m.mu, omega * m.eta * (1.0 + alpha / thickness))
    k1 = omega * np.sqrt(m.rho / g1)
    k2 = omega * np.sqrt(m.rho / g2)
    # unknowns (R, a, b): u1 = e^{-ik1x} + R e^{ik1x}, u2 = a e^{-ik2x} + b e^{ik2x}
    A = np.array(
        [
            [1.0, -1.0, -1.0],
            [g1 * k1, g2 * k2, -g2 * k2],
            [0.0, -np.exp(-1j * k2 * thickness), np.exp(1j * k2 * thickness)],
        ],
        dtype=complex,
    )
    rhs = np.array([-1.0, g1 * k1, 0.0], dtype=complex)
    return complex(np.linalg.solve(A, rhs)[0])


def optimal_layer_alpha(m: KelvinVoigt, omega: float, thickness: float,
                        upper: float = 10.0) -> float:
    """``alpha`` minimising ``|R|`` for the given layer thickness."""
    grid = np.geomspace(1e-4, upper, 200)
    r = [abs(layer_reflection(m, omega, thickness, a)) for a in grid]
    i = int(np.argmin(r))
    lo, hi = grid[max(i - 1, 0)], grid[min(i + 1, len(grid) - 1)]
    res = minimize_scalar(lambda a: abs(layer_reflection(m, omega, thickness, a)),
                          bounds=(lo, hi), method="bounded", options={"xatol": 1e-8})
    return float(res.x)


def standing_wave_ratio(profile: np.ndarray, x: np.ndarray, k: complex) -> float:
    """Fit ``u(x) = a e^{-ikx} + b e^{ikx}`` to a complex line profile and return |b / a|.

    The ratio is measured at ``x = 0`` and includes the round-trip attenuation, which makes
    it a direct measure of how much backward-travelling energy the line carries.
    """
    basis = np.stack([np.exp(-1j * k * x), np.exp(1j * k * x)], axis=1)
    coef, *_ = np.linalg.lstsq(basis, profile, rcond=None)
    a, b = coef
    return float(abs(b) / abs(a))
