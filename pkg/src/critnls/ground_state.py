"""Townes profile: the positive decaying solution of  Dw - w + w^3 = 0.

Two deliberately independent solvers are provided.  The Petviashvili
(spectral renormalization) iteration on a periodic 2D grid is the one
used by the rest of the package; a radial ODE shooting integrator acts
as the verification oracle for its numbers.  Neither is trusted alone:
their masses must agree to 1e-4 relative or the build fails.
"""

from __future__ import annotations

import csv
import json
from dataclasses import dataclass
from typing import Optional

import numpy as np
import scipy.fft
from numba import njit

from .errors import ConvergenceError, OracleError
from .grid import ComplexField2D, GridSpec, kinetic as field_kinetic, l4norm4 as field_l4, mass as field_mass

DEFAULT_GRID = GridSpec(40.0, 512)


@dataclass(frozen=True)
class GroundState:
    """Radial samples of the profile plus the scalar functionals of it."""

    r: np.ndarray
    w: np.ndarray
    mass: float
    grad2: float
    l4norm4: float
    center_value: float
    residual: float
    field: Optional[ComplexField2D] = None  # 2D embedding when grid-based

    @property
    def l2norm(self) -> float:
        """||Q||_{L2}, the concentration threshold."""
        return float(np.sqrt(self.mass))

    @property
    def energy(self) -> float:
        return 0.5 * self.grad2 - 0.25 * self.l4norm4

    def to_json(self) -> str:
        return json.dumps(
            {
                "mass": self.mass,
                "grad2": self.grad2,
                "l4norm4": self.l4norm4,
                "center_value": self.center_value,
                "residual": self.residual,
                "energy": self.energy,
                "l2norm": self.l2norm,
            }
        )

    def write_profile_csv(self, path) -> None:
        with open(path, "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(["r", "w"])
            for r, w in zip(self.r, self.w):
                writer.writerow([f"{r:.17g}", f"{w:.17g}"])

    def sample(self, radius: np.ndarray) -> np.ndarray:
        """Profile values at arbitrary radii (0 beyond the sampled range)."""
        return np.interp(radius, self.r, self.w, right=0.0)


def embed(ground: GroundState, grid: GridSpec, center=(0.0, 0.0)) -> ComplexField2D:
    """Radial profile placed on a 2D grid as a complex field."""
    return ComplexField2D(grid, ground.sample(grid.radius(center)).astype(np.complex128))


# ---------------------------------------------------------------------------
# Petviashvili / spectral renormalization iteration


def solve_petviashvili(grid: GridSpec = DEFAULT_GRID, tol: float = 1e-9,
                       max_iter: int = 10_000) -> GroundState:
    """Fixed point of  w <- S^{3/2} (1 - D)^{-1} w^3  on the periodic grid.

    S is the standard renormalization quotient <(1-D)w, w> / <w^3, w>;
    the stabilizing power 3/2 makes the cubic fixed point attracting.
    Stops when the PDE residual ||Dw - w + w^3||_{L2} drops below tol.
    """
    if not (tol > 0):
        raise ValueError("tol must be positive")
    _, _, kmag = grid.wavenumbers()
    k2 = kmag**2
    h2 = grid.spacing ** 2
    w = 2.2 * np.exp(-0.5 * grid.radius2())

    history = []
    for _ in range(max_iter):
        what = scipy.fft.fft2(w, norm="ortho")
        w3 = w**3
        w3hat = scipy.fft.fft2(w3, norm="ortho")
        num = np.sum((1.0 + k2) * np.abs(what) ** 2)
        den = np.sum(np.conj(what) * w3hat).real
        if den <= 0:
            raise ConvergenceError("renormalization quotient lost positivity", history)
        s_quot = num / den
        w = scipy.fft.ifft2(s_quot**1.5 * w3hat / (1.0 + k2), norm="ortho").real

        res_hat = scipy.fft.fft2(w**3, norm="ortho") - (1.0 + k2) * scipy.fft.fft2(w, norm="ortho")
        residual = float(np.sqrt(np.sum(np.abs(res_hat) ** 2) * h2))
        history.append(residual)
        if residual < tol:
            break
    else:
        raise ConvergenceError(
            f"Petviashvili iteration did not reach tol={tol} in {max_iter} iterations",
            history,
        )

    field = ComplexField2D(grid, w.astype(np.complex128))
    n = grid.points
    r = grid.coords()[n // 2:] - grid.coords()[n // 2]
    profile = w[n // 2, n // 2:].copy()
    return GroundState(
        r=r,
        w=profile,
        mass=field_mass(field),
        grad2=2.0 * field_kinetic(field),
        l4norm4=field_l4(field),
        center_value=float(w[n // 2, n // 2]),
        residual=residual,
        field=field,
    )


# ---------------------------------------------------------------------------
# radial ODE shooting oracle


@njit(cache=True)
def _shoot_classify(a, dr, n_steps):
    """RK4 on w'' + w'/r - w + w^3 = 0 from the series start at r = dr.

    Returns +1 if the shot turns up (w(0) too large), -1 if it crosses
    zero (too small), 0 if it survives to r_max still decaying.
    """
    c = 0.25 * (a - a**3)
    w = a + c * dr * dr
    p = 2.0 * c * dr
    r = dr
    for _ in range(n_steps):
        k1w = p
        k1p = w - w**3 - p / r
        r2 = r + 0.5 * dr
        w2 = w + 0.5 * dr * k1w
        p2 = p + 0.5 * dr * k1p
        k2w = p2
        k2p = w2 - w2**3 - p2 / r2
        w3_ = w + 0.5 * dr * k2w
        p3 = p + 0.5 * dr * k2p
        k3w = p3
        k3p = w3_ - w3_**3 - p3 / r2
        r4 = r + dr
        w4 = w + dr * k3w
        p4 = p + dr * k3p
        k4w = p4
        k4p = w4 - w4**3 - p4 / r4
        w += dr * (k1w + 2.0 * k2w + 2.0 * k3w + k4w) / 6.0
        p += dr * (k1p + 2.0 * k2p + 2.0 * k3p + k4p) / 6.0
        r = r4
        if w <= 0.0:
            return -1
        if (p > 0.0 and w < a) or w > 2.0 * a:
            return 1
    return 0


@njit(cache=True)
def _shoot_record(a, dr, n_steps):
    """Same integration, recording (w, w') at every node including r=0."""
    w_arr = np.empty(n_steps + 2)
    p_arr = np.empty(n_steps + 2)
    c = 0.25 * (a - a**3)
    w = a + c * dr * dr
    p = 2.0 * c * dr
    w_arr[0] = a
    p_arr[0] = 0.0
    w_arr[1] = w
    p_arr[1] = p
    r = dr
    for i in range(n_steps):
        k1w = p
        k1p = w - w**3 - p / r
        r2 = r + 0.5 * dr
        w2 = w + 0.5 * dr * k1w
        p2 = p + 0.5 * dr * k1p
        k2w = p2
        k2p = w2 - w2**3 - p2 / r2
        w3_ = w + 0.5 * dr * k2w
        p3 = p + 0.5 * dr * k2p
        k3w = p3
        k3p = w3_ - w3_**3 - p3 / r2
        r4 = r + dr
        w4 = w + dr * k3w
        p4 = p + dr * k3p
        k4w = p4
        k4p = w4 - w4**3 - p4 / r4
        w += dr * (k1w + 2.0 * k2w + 2.0 * k3w + k4w) / 6.0
        p += dr * (k1p + 2.0 * k2p + 2.0 * k3p + k4p) / 6.0
        r = r4
        w_arr[i + 2] = w
        p_arr[i + 2] = p
    return w_arr, p_arr


def shooting_oracle(dr: float = 1e-4, r_max: float = 20.0) -> GroundState:
    """Bisect on w(0) between turning-up and sign-crossing shots.

    The returned profile follows the converged shot until the bracketing
    error takes over, then continues with the known e^{-r}/sqrt(r)
    asymptotic tail.
    """
    if not (dr < 1e-3):
        raise ValueError("dr must be below 1e-3")
    if not (r_max >= 15.0):
        raise ValueError("r_max must be at least 15")

    n_steps = int(round(r_max / dr)) - 1
    # Below the critical amplitude the shot turns back up (it spirals
    # toward the w = 1 equilibrium); above it, it crosses zero.
    lo, hi = 1.5, 4.0
    if _shoot_classify(lo, dr, n_steps) != 1 or _shoot_classify(hi, dr, n_steps) != -1:
        raise OracleError("shooting bracket [1.5, 4] does not separate the two behaviors")
    while hi - lo > 1e-12:
        mid = 0.5 * (lo + hi)
        if _shoot_classify(mid, dr, n_steps) == -1:
            hi = mid
        else:
            lo = mid
    a = 0.5 * (lo + hi)

    w, p = _shoot_record(a, dr, n_steps)
    r = dr * np.arange(len(w))

    # splice the analytic tail where the shot stops decaying or crosses
    bad = np.nonzero((w <= 0.0) | (np.append(p[1:] > 0.0, True)))[0]
    j = int(bad[0]) if len(bad) else len(w) - 1
    j = max(j - 5, 1)
    tail = slice(j, len(w))
    w[tail] = w[j] * np.exp(-(r[tail] - r[j])) * np.sqrt(r[j] / r[tail])
    p[tail] = -w[tail] * (1.0 + 0.5 / r[tail])

    mass = 2.0 * np.pi * np.trapezoid(w**2 * r, dx=dr)
    grad2 = 2.0 * np.pi * np.trapezoid(p**2 * r, dx=dr)
    l4 = 2.0 * np.pi * np.trapezoid(w**4 * r, dx=dr)

    # finite-difference PDE residual of the recorded profile (interior)
    wpp = (w[2:] - 2.0 * w[1:-1] + w[:-2]) / dr**2
    wp = (w[2:] - w[:-2]) / (2.0 * dr)
    res = wpp + wp / r[1:-1] - w[1:-1] + w[1:-1] ** 3
    residual = float(np.sqrt(2.0 * np.pi * np.trapezoid(res**2 * r[1:-1], dx=dr)))

    return GroundState(
        r=r,
        w=w,
        mass=float(mass),
        grad2=float(grad2),
        l4norm4=float(l4),
        center_value=float(a),
        residual=residual,
    )


# ---------------------------------------------------------------------------
# Gagliardo-Nirenberg bookkeeping


def j_functional(field: ComplexField2D) -> float:
    """Quotient ||grad f||^2 ||f||^2 / ||f||_{L4}^4; minimized by the Townes profile."""
    m = field_mass(field)
    l4 = field_l4(field)
    if m == 0.0 or l4 == 0.0:
        raise ValueError("j_functional is undefined for the zero field")
    return 2.0 * field_kinetic(field) * m / l4


def c_opt(ground: GroundState) -> float:
    """Optimal Gagliardo-Nirenberg constant, 2 / ||Q||_{L2}^2."""
    return 2.0 / ground.mass
