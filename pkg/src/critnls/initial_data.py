"""Initial-condition factories shared by the CLI and the experiments."""

from __future__ import annotations

import numpy as np
import scipy.fft

from .grid import ComplexField2D, GridSpec, load_checkpoint, mass
from .ground_state import solve_petviashvili


def gaussian(grid: GridSpec, amplitude: float = 1.0, width: float = 1.0) -> ComplexField2D:
    """A exp(-r^2 / width^2) centered in the box."""
    r2 = grid.radius2()
    return ComplexField2D(grid, (amplitude * np.exp(-r2 / width**2)).astype(np.complex128))


def townes(grid: GridSpec, tol: float = 1e-9) -> ComplexField2D:
    """Ground-state profile solved directly on the target grid, so the
    discrete stationary state matches the grid's own spectral Laplacian."""
    return solve_petviashvili(grid=grid, tol=tol).field


def random_radial(grid: GridSpec, seed: int, decay: float = 1.9,
                  l2norm: float = 2.0, nodes: int = 33) -> ComplexField2D:
    """Seeded radial field with power-law spectral envelope <k>^{-decay}.

    Phase and a mild amplitude modulation are smooth random radial
    functions interpolated from `nodes` seeded values, so the field is
    rough-but-radial with content at every resolved frequency.
    """
    rng = np.random.default_rng(seed)
    _, _, kmag = grid.wavenumbers()
    knodes = np.linspace(0.0, grid.nyquist * np.sqrt(2.0), nodes)
    phase_nodes = rng.uniform(0.0, 2.0 * np.pi, nodes)
    amp_nodes = rng.uniform(0.5, 1.5, nodes)
    phase = np.interp(kmag, knodes, phase_nodes)
    ampmod = np.interp(kmag, knodes, amp_nodes)
    coeffs = ampmod * (1.0 + kmag**2) ** (-0.5 * decay) * np.exp(1j * phase)
    u = scipy.fft.ifft2(coeffs, norm="ortho")
    field = ComplexField2D(grid, u)
    scale = l2norm / np.sqrt(mass(field))
    return ComplexField2D(grid, field.values * scale)


def from_file(path) -> ComplexField2D:
    field, _ = load_checkpoint(path)
    return field


def make_initial(kind: str, grid: GridSpec, **params) -> ComplexField2D:
    if kind == "gaussian":
        return gaussian(grid, params.get("amplitude", 1.0), params.get("width", 1.0))
    if kind == "townes":
        return townes(grid)
    if kind == "random_seeded":
        return random_radial(
            grid,
            int(params.get("seed", 0)),
            params.get("decay", 1.9),
            params.get("l2norm", 2.0),
        )
    if kind == "file":
        return from_file(params["path"])
    raise ValueError(f"unknown initial data kind {kind!r}")
