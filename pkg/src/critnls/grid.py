"""Periodic square grid, unitary FFT, Fourier calculus, norms and quadrature.

Everything downstream (time stepping, smoothing operators, concentration
scans) is built on the two value types here: ComplexField2D (physical
samples) and SpectrumField2D (Fourier coefficients).  The FFT uses the
unitary normalization so Parseval holds with no bookkeeping factors;
integrals are the rectangle rule on the periodic grid, which is
spectrally accurate for smooth decaying fields.
"""

from __future__ import annotations

import io
import warnings
from dataclasses import dataclass
from functools import lru_cache

import numpy as np
import scipy.fft
from scipy.ndimage import uniform_filter

from .errors import ConfigurationError

CHECKPOINT_MAGIC = "NLSFIELD"
CHECKPOINT_VERSION = "v1"


def _is_power_of_two(n: int) -> bool:
    return n >= 1 and (n & (n - 1)) == 0


@dataclass(frozen=True)
class GridSpec:
    """Square periodic box of side `extent` with `points` samples per axis."""

    extent: float
    points: int

    def __post_init__(self):
        if not (self.extent > 0):
            raise ConfigurationError(f"box extent must be positive, got {self.extent}")
        if self.points < 16 or not _is_power_of_two(self.points):
            raise ConfigurationError(
                f"points must be a power of two >= 16, got {self.points}"
            )

    @property
    def spacing(self) -> float:
        return self.extent / self.points

    @property
    def nyquist(self) -> float:
        """Largest resolved wavenumber magnitude per axis, pi*n/L."""
        return np.pi * self.points / self.extent

    def coords(self) -> np.ndarray:
        """1D sample coordinates in [-L/2, L/2)."""
        return -0.5 * self.extent + self.spacing * np.arange(self.points)

    def meshgrid(self):
        x = self.coords()
        return np.meshgrid(x, x, indexing="ij")

    def radius(self, center=(0.0, 0.0)) -> np.ndarray:
        """Periodic (minimum-image) distance of each sample from `center`."""
        return np.sqrt(self.radius2(center))

    def radius2(self, center=(0.0, 0.0)) -> np.ndarray:
        x = self.coords()
        dx = np.remainder(x - center[0] + 0.5 * self.extent, self.extent) - 0.5 * self.extent
        dy = np.remainder(x - center[1] + 0.5 * self.extent, self.extent) - 0.5 * self.extent
        return dx[:, None] ** 2 + dy[None, :] ** 2

    def wavenumbers(self):
        """(kx, ky, |k|) arrays; set per axis is {2*pi*j/L : j=-n/2..n/2-1}."""
        return _wavenumbers(self.extent, self.points)


@lru_cache(maxsize=32)
def _wavenumbers(extent: float, points: int):
    k = 2.0 * np.pi * scipy.fft.fftfreq(points, d=extent / points)
    kx = k[:, None] * np.ones((1, points))
    ky = np.ones((points, 1)) * k[None, :]
    kmag = np.sqrt(kx**2 + ky**2)
    for a in (kx, ky, kmag):
        a.setflags(write=False)
    return kx, ky, kmag


@dataclass(frozen=True)
class ComplexField2D:
    """Complex samples u(x) on a GridSpec; treated as an immutable value."""

    grid: GridSpec
    values: np.ndarray

    def __post_init__(self):
        v = np.asarray(self.values, dtype=np.complex128)
        n = self.grid.points
        if v.shape != (n, n):
            raise ConfigurationError(
                f"field shape {v.shape} does not match grid {n}x{n}"
            )
        if not np.all(np.isfinite(v.view(np.float64))):
            raise ConfigurationError("field contains non-finite values")
        object.__setattr__(self, "values", v)


@dataclass(frozen=True)
class SpectrumField2D:
    """Unitary-normalized Fourier coefficients indexed by wavenumber."""

    grid: GridSpec
    coefficients: np.ndarray

    def __post_init__(self):
        c = np.asarray(self.coefficients, dtype=np.complex128)
        n = self.grid.points
        if c.shape != (n, n):
            raise ConfigurationError(
                f"spectrum shape {c.shape} does not match grid {n}x{n}"
            )
        object.__setattr__(self, "coefficients", c)


def transform(field: ComplexField2D) -> SpectrumField2D:
    return SpectrumField2D(field.grid, scipy.fft.fft2(field.values, norm="ortho"))


def inverse(spec: SpectrumField2D) -> ComplexField2D:
    return ComplexField2D(spec.grid, scipy.fft.ifft2(spec.coefficients, norm="ortho"))


def apply_symbol(field: ComplexField2D, symbol) -> ComplexField2D:
    """Fourier multiplier with radial symbol: u -> F^{-1}[symbol(|k|) F u]."""
    _, _, kmag = field.grid.wavenumbers()
    sym = np.asarray(symbol(kmag))
    if not np.all(np.isfinite(sym.view(np.float64) if sym.dtype.kind == "c" else sym)):
        raise ValueError("symbol takes non-finite values on the grid wavenumbers")
    coeffs = scipy.fft.fft2(field.values, norm="ortho") * sym
    return ComplexField2D(field.grid, scipy.fft.ifft2(coeffs, norm="ortho"))


# ---------------------------------------------------------------------------
# quadrature functionals


def mass(field: ComplexField2D) -> float:
    """L2 mass, ||u||_{L2}^2."""
    h = field.grid.spacing
    return float(np.sum(np.abs(field.values) ** 2) * h * h)


def kinetic(field: ComplexField2D) -> float:
    """Kinetic energy, (1/2)||grad u||_{L2}^2, computed spectrally."""
    _, _, kmag = field.grid.wavenumbers()
    h = field.grid.spacing
    coeffs = scipy.fft.fft2(field.values, norm="ortho")
    return float(0.5 * np.sum(kmag**2 * np.abs(coeffs) ** 2) * h * h)


def l4norm4(field: ComplexField2D) -> float:
    """||u||_{L4}^4."""
    h = field.grid.spacing
    return float(np.sum(np.abs(field.values) ** 4) * h * h)


def energy(field: ComplexField2D) -> float:
    """Total energy (1/2)||grad u||^2 - (1/4)||u||_{L4}^4."""
    return kinetic(field) - 0.25 * l4norm4(field)


def hs_norm(field: ComplexField2D, s: float) -> float:
    """Sobolev norm ||<D>^s u||_{L2} for s in (0, 1]."""
    if not (0.0 < s <= 1.0):
        raise ValueError(f"s must lie in (0, 1], got {s}")
    _, _, kmag = field.grid.wavenumbers()
    h = field.grid.spacing
    coeffs = scipy.fft.fft2(field.values, norm="ortho")
    return float(np.sqrt(np.sum((1.0 + kmag**2) ** s * np.abs(coeffs) ** 2) * h * h))


def mass_in_ball(field: ComplexField2D, radius: float, center=(0.0, 0.0)) -> float:
    """L2 norm of u restricted to the (periodic) ball |x - center| < radius."""
    if not (radius > 0):
        raise ValueError(f"radius must be positive, got {radius}")
    if radius > 0.5 * field.grid.extent:
        warnings.warn(
            "ball radius exceeds half the box; periodic wrap-around is ambiguous",
            stacklevel=2,
        )
    r2 = field.grid.radius2(center)
    h = field.grid.spacing
    inside = r2 < radius * radius
    return float(np.sqrt(np.sum(np.abs(field.values[inside]) ** 2) * h * h))


def sup_mass_over_cubes(field: ComplexField2D, side: float) -> float:
    """Max L2 norm of u over all grid-aligned squares of the given side.

    The scan strides by one grid spacing; window sums use a periodic
    uniform filter so every placement in the box is covered.
    """
    if not (side > 0):
        raise ValueError(f"cube side must be positive, got {side}")
    grid = field.grid
    m = min(grid.points, max(1, int(round(side / grid.spacing))))
    dens = np.abs(field.values) ** 2
    window_mean = uniform_filter(dens, size=m, mode="wrap")
    h = grid.spacing
    return float(np.sqrt(np.max(window_mean) * m * m * h * h))


# ---------------------------------------------------------------------------
# checkpoint format: `NLSFIELD v1 n L t` header + raw little-endian complex128


def write_checkpoint(stream, field: ComplexField2D, t: float) -> None:
    header = f"{CHECKPOINT_MAGIC} {CHECKPOINT_VERSION} {field.grid.points} " \
             f"{field.grid.extent!r} {t!r}\n"
    stream.write(header.encode("ascii"))
    stream.write(np.ascontiguousarray(field.values, dtype="<c16").tobytes())


def read_checkpoint(stream):
    """Returns (field, t) from a stream in NLSFIELD v1 format."""
    header = bytearray()
    while not header.endswith(b"\n"):
        ch = stream.read(1)
        if not ch:
            raise ConfigurationError("truncated checkpoint header")
        header.extend(ch)
    parts = header.decode("ascii").split()
    if len(parts) != 5 or parts[0] != CHECKPOINT_MAGIC or parts[1] != CHECKPOINT_VERSION:
        raise ConfigurationError(f"bad checkpoint header: {header!r}")
    n, extent, t = int(parts[2]), float(parts[3]), float(parts[4])
    raw = stream.read(16 * n * n)
    if len(raw) != 16 * n * n:
        raise ConfigurationError("truncated checkpoint payload")
    values = np.frombuffer(raw, dtype="<c16").reshape(n, n).copy()
    return ComplexField2D(GridSpec(extent, n), values), t


def save_checkpoint(path, field: ComplexField2D, t: float) -> None:
    with open(path, "wb") as fh:
        write_checkpoint(fh, field, t)


def load_checkpoint(path):
    with open(path, "rb") as fh:
        return read_checkpoint(fh)


def checkpoint_bytes(field: ComplexField2D, t: float) -> bytes:
    buf = io.BytesIO()
    write_checkpoint(buf, field, t)
    return buf.getvalue()
