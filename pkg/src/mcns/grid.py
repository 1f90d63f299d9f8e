"""Periodic 3D grid, discrete Fourier transforms, multipliers and dealiasing.

The computational box is [-L/2, L/2)^3 sampled on n points per axis.  Spectral
coefficients follow the convention

    u_hat(xi) = (1/n^3) sum_x u(x) exp(-i xi . x)

with wavenumbers xi_k = 2 pi k / L, k in {-n/2, ..., n/2 - 1}, so the zero mode
equals the grid mean of the field.  All operators downstream (heat, wave,
Biot-Savart, ...) are diagonal in this basis.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass, field, replace

import numpy as np

from .errors import MultiplierError, RepresentationError, SnapshotFormatError

PHYSICAL = "physical"
SPECTRAL = "spectral"

SNAPSHOT_MAGIC = b"MCNS"
SNAPSHOT_VERSION = 1


@dataclass(frozen=True)
class GridSpec:
    """Cubic periodic grid with precomputed wavenumber arrays.

    Parameters
    ----------
    n : int
        Points per axis; must be even and >= 8 (powers of two recommended).
    length : float
        Box edge length L; the box is [-L/2, L/2)^3.
    """

    n: int
    length: float
    spacing: float = field(init=False)

    def __post_init__(self):
        if self.n < 8 or self.n % 2 != 0:
            raise ValueError(f"grid needs n >= 8 and even, got n={self.n}")
        if self.length <= 0:
            raise ValueError(f"box length must be positive, got {self.length}")
        object.__setattr__(self, "spacing", self.length / self.n)

        x1 = -self.length / 2 + self.spacing * np.arange(self.n)
        k1 = 2.0 * np.pi * np.fft.fftfreq(self.n, d=self.spacing)
        object.__setattr__(self, "x1", x1)
        object.__setattr__(self, "k1", k1)
        object.__setattr__(self, "kx", k1.reshape(self.n, 1, 1))
        object.__setattr__(self, "ky", k1.reshape(1, self.n, 1))
        object.__setattr__(self, "kz", k1.reshape(1, 1, self.n))
        k2 = self.kx**2 + self.ky**2 + self.kz**2
        object.__setattr__(self, "k2", k2)
        object.__setattr__(self, "kmag", np.sqrt(k2))
        # Centered-box phase: exp(-i xi_k . x) picks up (-1)^(k1+k2+k3)
        # relative to numpy's origin-at-index-0 transform.
        sign1 = np.where(np.arange(self.n) % 2 == 0, 1.0, -1.0)
        phase = (sign1.reshape(-1, 1, 1) * sign1.reshape(1, -1, 1)
                 * sign1.reshape(1, 1, -1))
        object.__setattr__(self, "phase", phase)
        kcut = np.abs(k1) > (2.0 * np.pi / self.length) * (self.n / 3.0)
        mask = ~(kcut.reshape(-1, 1, 1) | kcut.reshape(1, -1, 1)
                 | kcut.reshape(1, 1, -1))
        object.__setattr__(self, "dealias_mask", mask)

    def meshgrid(self):
        """Physical coordinates as three broadcastable (n,1,1)/(1,n,1)/(1,1,n) arrays."""
        return (self.x1.reshape(self.n, 1, 1),
                self.x1.reshape(1, self.n, 1),
                self.x1.reshape(1, 1, self.n))

    def points(self):
        """All grid points as an (n^3, 3) array, x-index slowest."""
        X, Y, Z = np.meshgrid(self.x1, self.x1, self.x1, indexing="ij")
        return np.stack([X.ravel(), Y.ravel(), Z.ravel()], axis=-1)

    @property
    def cell_volume(self):
        return self.spacing**3


@dataclass(frozen=True)
class ScalarField:
    """Complex-valued samples (physical) or coefficients (spectral) on a grid."""

    grid: GridSpec
    values: np.ndarray
    rep: str = PHYSICAL

    def __post_init__(self):
        shape = (self.grid.n,) * 3
        if self.values.shape != shape:
            raise ValueError(f"field shape {self.values.shape} != grid shape {shape}")
        if self.rep not in (PHYSICAL, SPECTRAL):
            raise ValueError(f"unknown representation {self.rep!r}")

    @classmethod
    def from_function(cls, grid, fn):
        """Sample fn(x, y, z) (broadcastable arrays) onto the grid."""
        X, Y, Z = grid.meshgrid()
        vals = np.asarray(fn(X, Y, Z), dtype=complex)
        vals = np.broadcast_to(vals, (grid.n,) * 3).copy()
        return cls(grid, vals, PHYSICAL)

    @classmethod
    def zeros(cls, grid, rep=PHYSICAL):
        return cls(grid, np.zeros((grid.n,) * 3, dtype=complex), rep)

    def copy(self):
        return replace(self, values=self.values.copy())

    def __add__(self, other):
        _check_compatible(self, other)
        return replace(self, values=self.values + other.values)

    def __sub__(self, other):
        _check_compatible(self, other)
        return replace(self, values=self.values - other.values)

    def __mul__(self, scalar):
        return replace(self, values=self.values * scalar)

    __rmul__ = __mul__

    def __neg__(self):
        return replace(self, values=-self.values)


def _check_compatible(f, g):
    if f.grid is not g.grid and f.grid != g.grid:
        raise ValueError("fields live on different grids")
    if f.rep != g.rep:
        raise RepresentationError(f"mixed representations {f.rep!r} and {g.rep!r}")


@dataclass(frozen=True)
class VectorField3:
    """Three scalar components sharing one grid and representation."""

    components: tuple

    def __post_init__(self):
        if len(self.components) != 3:
            raise ValueError("vector field needs exactly 3 components")
        c0 = self.components[0]
        for c in self.components[1:]:
            _check_compatible(c0, c)

    @classmethod
    def from_functions(cls, grid, fns):
        return cls(tuple(ScalarField.from_function(grid, fn) for fn in fns))

    @classmethod
    def zeros(cls, grid, rep=PHYSICAL):
        return cls(tuple(ScalarField.zeros(grid, rep) for _ in range(3)))

    @property
    def grid(self):
        return self.components[0].grid

    @property
    def rep(self):
        return self.components[0].rep

    def __getitem__(self, i):
        return self.components[i]

    def __add__(self, other):
        return VectorField3(tuple(a + b for a, b in zip(self.components, other.components)))

    def __sub__(self, other):
        return VectorField3(tuple(a - b for a, b in zip(self.components, other.components)))

    def __mul__(self, scalar):
        return VectorField3(tuple(c * scalar for c in self.components))

    __rmul__ = __mul__

    def __neg__(self):
        return VectorField3(tuple(-c for c in self.components))


def forward_transform(f: ScalarField) -> ScalarField:
    """Physical -> spectral; the zero mode equals the grid mean."""
    if f.rep != PHYSICAL:
        raise RepresentationError("forward_transform expects a physical field")
    vals = np.fft.fftn(f.values) * (f.grid.phase / f.grid.n**3)
    return ScalarField(f.grid, vals, SPECTRAL)


def inverse_transform(f: ScalarField) -> ScalarField:
    """Spectral -> physical; exact inverse of forward_transform."""
    if f.rep != SPECTRAL:
        raise RepresentationError("inverse_transform expects a spectral field")
    vals = np.fft.ifftn(f.values * f.grid.phase) * f.grid.n**3
    return ScalarField(f.grid, vals, PHYSICAL)


def apply_multiplier(f: ScalarField, m) -> ScalarField:
    """Multiply spectral coefficients by m(kx, ky, kz).

    The callable receives the three broadcastable wavenumber arrays and must
    return finite values everywhere, including the zero mode (callers supply
    the removable-singularity value there).
    """
    if f.rep != SPECTRAL:
        raise RepresentationError("apply_multiplier expects a spectral field")
    g = f.grid
    mvals = np.asarray(m(g.kx, g.ky, g.kz))
    bad = ~np.isfinite(np.broadcast_to(mvals, f.values.shape))
    if bad.any():
        i, j, k = (int(ix[0]) for ix in np.nonzero(bad))
        xi = (g.k1[i], g.k1[j], g.k1[k])
        raise MultiplierError(f"multiplier not finite at xi = {xi}")
    return ScalarField(g, f.values * mvals, SPECTRAL)


def multiply_spectrum(f: ScalarField, mvals: np.ndarray) -> ScalarField:
    """Coefficientwise product with a precomputed (finite) multiplier array."""
    if f.rep != SPECTRAL:
        raise RepresentationError("multiply_spectrum expects a spectral field")
    return ScalarField(f.grid, f.values * mvals, SPECTRAL)


def dealias(f: ScalarField) -> ScalarField:
    """Zero all modes with any |k_i| > n/3 (2/3 rule); idempotent."""
    if f.rep != SPECTRAL:
        raise RepresentationError("dealias expects a spectral field")
    return ScalarField(f.grid, f.values * f.grid.dealias_mask, SPECTRAL)


def to_physical(f):
    if isinstance(f, VectorField3):
        return VectorField3(tuple(to_physical(c) for c in f.components))
    return f if f.rep == PHYSICAL else inverse_transform(f)


def to_spectral(f):
    if isinstance(f, VectorField3):
        return VectorField3(tuple(to_spectral(c) for c in f.components))
    return f if f.rep == SPECTRAL else forward_transform(f)


def vector_apply(vf: VectorField3, op, *args, **kwargs) -> VectorField3:
    """Apply a ScalarField -> ScalarField operation componentwise."""
    return VectorField3(tuple(op(c, *args, **kwargs) for c in vf.components))


def grid_mean_square(f: ScalarField) -> float:
    """Grid mean of |f|^2 (physical representation)."""
    g = to_physical(f)
    return float(np.mean(np.abs(g.values) ** 2))


def spectral_power(f: ScalarField) -> float:
    """Sum over modes of |u_hat|^2; equals grid mean of |f|^2 (Parseval)."""
    g = to_spectral(f)
    return float(np.sum(np.abs(g.values) ** 2))


def l2_norm(f) -> float:
    """Unweighted L^2(box) norm, via h^3-weighted quadrature.

    Vector fields use the max-over-components convention.
    """
    if isinstance(f, VectorField3):
        return max(l2_norm(c) for c in f.components)
    vol = f.grid.cell_volume
    return float(np.sqrt(vol * np.sum(np.abs(to_physical(f).values) ** 2)))


def rel_l2_diff(f, g) -> float:
    """Relative L^2 difference ||f - g|| / ||g||."""
    denom = l2_norm(g)
    if denom == 0.0:
        return l2_norm(f)
    if isinstance(f, VectorField3):
        num = max(l2_norm(fc - gc) for fc, gc in zip(f.components, g.components))
    else:
        num = l2_norm(f - g)
    return num / denom


def conjugate_symmetry_defect(f: ScalarField) -> float:
    """Max |u_hat(-xi) - conj(u_hat(xi))| relative to the largest coefficient."""
    g = to_spectral(f)
    v = g.values
    idx = (-np.arange(g.grid.n)) % g.grid.n  # index of -k mod n along each axis
    flipped = np.conj(v[np.ix_(idx, idx, idx)])
    scale = np.max(np.abs(v))
    if scale == 0:
        return 0.0
    return float(np.max(np.abs(v - flipped)) / scale)


def write_snapshot(path, f: ScalarField):
    """Write the binary field snapshot format.

    Little-endian header {magic 'MCNS', version u32, n u32, L f64,
    representation u8} followed by n^3 complex64 values ordered so the x index
    varies fastest.
    """
    rep_code = 0 if f.rep == PHYSICAL else 1
    header = SNAPSHOT_MAGIC + struct.pack("<IId B", SNAPSHOT_VERSION, f.grid.n,
                                          f.grid.length, rep_code)
    data = np.ascontiguousarray(f.values.transpose(2, 1, 0)).astype(np.complex64)
    with open(path, "wb") as fh:
        fh.write(header)
        fh.write(data.tobytes())


def read_snapshot(path, grid=None) -> ScalarField:
    """Read a field snapshot; validates magic, version and grid consistency."""
    with open(path, "rb") as fh:
        magic = fh.read(4)
        if magic != SNAPSHOT_MAGIC:
            raise SnapshotFormatError(f"{path}: bad magic {magic!r}")
        version, n = struct.unpack("<II", fh.read(8))
        if version != SNAPSHOT_VERSION:
            raise SnapshotFormatError(f"{path}: unsupported version {version}")
        (length,) = struct.unpack("<d", fh.read(8))
        (rep_code,) = struct.unpack("<B", fh.read(1))
        raw = fh.read(n**3 * 8)
        if len(raw) != n**3 * 8:
            raise SnapshotFormatError(f"{path}: truncated payload")
    if grid is None:
        grid = GridSpec(n, length)
    elif grid.n != n or abs(grid.length - length) > 1e-12 * max(1.0, length):
        raise SnapshotFormatError(f"{path}: grid mismatch (n={n}, L={length})")
    vals = np.frombuffer(raw, dtype="<c8").reshape(n, n, n).transpose(2, 1, 0)
    rep = PHYSICAL if rep_code == 0 else SPECTRAL
    return ScalarField(grid, np.ascontiguousarray(vals, dtype=complex), rep)
