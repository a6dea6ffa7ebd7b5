"""Raster and sinogram containers, spectral transforms, comparison metrics and
the binary/text file formats used across the package.

Conventions
-----------
* ``ImageGrid.values[i, j]`` is the cell centered at
  ``x = -L + (j + 1/2) * 2L/n`` and ``y = -L + (i + 1/2) * 2L/n``.
* ``fft2`` computes ``F(xi) = sum_x f(x) exp(-i x . xi)`` over cell centers
  (no normalization) on the lattice ``xi in (pi/L) * {-n/2 .. n/2-1}^2``,
  stored with the zero frequency at index ``n/2``. ``ifft2`` carries the
  ``1/n^2``. Multiply by ``cell**2`` to approximate the continuous transform.
* Sinogram angles are ``phi_j = j*pi/m`` and offsets are pixel-centered on
  ``[-R, R]``.
"""
from dataclasses import dataclass, field

import numpy as np


class GridError(ValueError):
    """Invalid grid construction or mismatched grids."""


class FormatError(ValueError):
    """Malformed grid/sinogram file."""


def is_power_of_two(n):
    return n >= 1 and (n & (n - 1)) == 0


def _frozen(a, dtype=np.float64):
    a = np.array(a, dtype=dtype, copy=True)
    a.setflags(write=False)
    return a


@dataclass(frozen=True)
class ImageGrid:
    n: int
    half_extent: float
    values: np.ndarray

    def __post_init__(self):
        n = int(self.n)
        if n < 2 or not is_power_of_two(n):
            raise GridError(f"grid size must be a power of two >= 2, got {self.n}")
        if not self.half_extent > 0:
            raise GridError(f"half_extent must be positive, got {self.half_extent}")
        vals = _frozen(self.values)
        if vals.shape != (n, n):
            raise GridError(f"values shape {vals.shape} does not match n={n}")
        if not np.all(np.isfinite(vals)):
            raise GridError("grid values must be finite")
        object.__setattr__(self, "n", n)
        object.__setattr__(self, "half_extent", float(self.half_extent))
        object.__setattr__(self, "values", vals)

    @classmethod
    def zeros(cls, n, half_extent):
        return cls(n, half_extent, np.zeros((n, n)))

    @classmethod
    def from_function(cls, n, half_extent, func):
        """Sample ``func(x, y)`` at the cell centers."""
        x, y = cell_centers(n, half_extent)
        return cls(n, half_extent, func(x, y))

    @property
    def cell(self):
        return 2.0 * self.half_extent / self.n

    @property
    def axis(self):
        return axis_coords(self.n, self.half_extent)

    def mesh(self):
        return cell_centers(self.n, self.half_extent)

    def with_values(self, values):
        return ImageGrid(self.n, self.half_extent, values)

    def same_shape(self, other):
        return self.n == other.n and self.half_extent == other.half_extent


def axis_coords(n, half_extent):
    cell = 2.0 * half_extent / n
    return -half_extent + (np.arange(n) + 0.5) * cell


def cell_centers(n, half_extent):
    """Return (x, y) meshes; x varies along columns, y along rows."""
    ax = axis_coords(n, half_extent)
    return np.meshgrid(ax, ax, indexing="xy")


@dataclass(frozen=True)
class Sinogram:
    """Samples ``g(phi_j, p_i)``, ``phi_j = j*pi/m``, pixel-centered ``p`` on [-R, R].

    ``origin`` records a refocusing center: a reconstruction evaluates the data
    at ``(x - origin) . omega``. It is not part of the file format.
    """
    m: int
    p_count: int
    p_half_extent: float
    values: np.ndarray
    psi_mask: np.ndarray = None
    origin: tuple = (0.0, 0.0)

    def __post_init__(self):
        m, pc = int(self.m), int(self.p_count)
        if m < 1:
            raise GridError(f"need at least one angle, got m={self.m}")
        if pc < 2:
            raise GridError(f"need at least two offsets, got {self.p_count}")
        if not self.p_half_extent > 0:
            raise GridError("p_half_extent must be positive")
        vals = _frozen(self.values)
        if vals.shape != (m, pc):
            raise GridError(f"values shape {vals.shape} != ({m}, {pc})")
        if not np.all(np.isfinite(vals)):
            raise GridError("sinogram values must be finite")
        mask = np.ones(m) if self.psi_mask is None else self.psi_mask
        mask = _frozen(mask)
        if mask.shape != (m,) or np.any(mask < 0) or np.any(mask > 1) or not np.all(np.isfinite(mask)):
            raise GridError("psi_mask must hold m values in [0, 1]")
        object.__setattr__(self, "m", m)
        object.__setattr__(self, "p_count", pc)
        object.__setattr__(self, "p_half_extent", float(self.p_half_extent))
        object.__setattr__(self, "values", vals)
        object.__setattr__(self, "psi_mask", mask)
        object.__setattr__(self, "origin", (float(self.origin[0]), float(self.origin[1])))

    @property
    def angles(self):
        return np.arange(self.m) * np.pi / self.m

    @property
    def dp(self):
        return 2.0 * self.p_half_extent / self.p_count

    @property
    def p(self):
        return axis_coords(self.p_count, self.p_half_extent)

    def replace(self, **kw):
        d = dict(m=self.m, p_count=self.p_count, p_half_extent=self.p_half_extent,
                 values=self.values, psi_mask=self.psi_mask, origin=self.origin)
        d.update(kw)
        return Sinogram(**d)

    def full_circle(self):
        """Rows for the 2m angles j*pi/m, j = 0..2m-1, using g(phi+pi, p) = g(phi, -p).

        Reversing a pixel-centered symmetric p-grid maps p_i to -p_i exactly.
        """
        return np.concatenate([self.values, self.values[:, ::-1]], axis=0)


@dataclass(frozen=True)
class SpectralGrid:
    n: int
    half_extent: float
    values: np.ndarray

    def __post_init__(self):
        vals = np.array(self.values, dtype=np.complex128, copy=True)
        vals.setflags(write=False)
        if vals.shape != (self.n, self.n):
            raise GridError("spectral values shape mismatch")
        object.__setattr__(self, "values", vals)

    @property
    def freqs(self):
        return (np.pi / self.half_extent) * (np.arange(self.n) - self.n // 2)

    def mesh(self):
        """(xi_x, xi_y) meshes matching ``values``."""
        f = self.freqs
        return np.meshgrid(f, f, indexing="xy")


@dataclass
class Metrics:
    l2_rel: float
    linf_rel: float
    peak_list: list = field(default_factory=list)
    extra: dict = field(default_factory=dict)


# ---------------------------------------------------------------------------
# spectral transforms
# ---------------------------------------------------------------------------

def _phase(n, half_extent):
    cell = 2.0 * half_extent / n
    x0 = -half_extent + 0.5 * cell
    f = (np.pi / half_extent) * (np.arange(n) - n // 2)
    ph = np.exp(-1j * x0 * f)
    return ph[None, :] * ph[:, None]


def fft2(img):
    raw = np.fft.fftshift(np.fft.fft2(img.values))
    return SpectralGrid(img.n, img.half_extent, raw * _phase(img.n, img.half_extent))


def ifft2(spec):
    raw = np.fft.ifftshift(spec.values / _phase(spec.n, spec.half_extent))
    return ImageGrid(spec.n, spec.half_extent, np.fft.ifft2(raw).real)


def pad_grid(img, factor):
    """Embed ``img`` in a zero grid ``factor`` times larger (same cell size)."""
    if factor == 1:
        return img
    if not is_power_of_two(factor):
        raise GridError("pad factor must be a power of two")
    big = np.zeros((img.n * factor, img.n * factor))
    o = (img.n * factor - img.n) // 2
    big[o:o + img.n, o:o + img.n] = img.values
    return ImageGrid(img.n * factor, img.half_extent * factor, big)


def crop_grid(img, n):
    o = (img.n - n) // 2
    return ImageGrid(n, img.half_extent * n / img.n, img.values[o:o + n, o:o + n])


def apply_multiplier(img, multiplier, pad=1):
    """Apply a Fourier multiplier ``multiplier(xi_x, xi_y) -> array``.

    With ``pad > 1`` the product is taken on a zero-padded grid so that
    shifted components do not wrap around into the window.
    """
    big = pad_grid(img, pad)
    spec = fft2(big)
    kx, ky = spec.mesh()
    out = ifft2(SpectralGrid(spec.n, spec.half_extent, spec.values * multiplier(kx, ky)))
    return crop_grid(out, img.n)


def envelope(img, direction):
    """Modulus of the analytic signal along ``direction``.

    Keeps the half plane ``xi . direction > 0`` (doubled), drops the other
    half, so an oscillation ``cos(x . xi0)`` with ``xi0`` along ``direction``
    becomes its smooth envelope.
    """
    d = np.asarray(direction, dtype=float)
    d = d / np.linalg.norm(d)
    spec = fft2(img)
    kx, ky = spec.mesh()
    proj = kx * d[0] + ky * d[1]
    w = np.where(proj > 0, 2.0, np.where(proj == 0, 1.0, 0.0))
    raw = np.fft.ifftshift(spec.values * w / _phase(img.n, img.half_extent))
    return img.with_values(np.abs(np.fft.ifft2(raw)))


# ---------------------------------------------------------------------------
# comparison
# ---------------------------------------------------------------------------

def find_peaks2d(arr, threshold):
    """Strict local maxima (8-neighborhood) of ``arr`` above ``threshold``.

    Returns a list of (row, col) float positions refined by a per-axis
    parabola through the neighbors, and the peak values.
    """
    a = np.asarray(arr, dtype=float)
    p = np.pad(a, 1, mode="constant", constant_values=-np.inf)
    core = p[1:-1, 1:-1]
    is_max = core > threshold
    for dy in (-1, 0, 1):
        for dx in (-1, 0, 1):
            if dy == 0 and dx == 0:
                continue
            is_max &= core > p[1 + dy:p.shape[0] - 1 + dy, 1 + dx:p.shape[1] - 1 + dx]
    rows, cols = np.nonzero(is_max)
    out = []
    for r, c in zip(rows, cols):
        out.append(((r + _vertex(a, r, c, 0), c + _vertex(a, r, c, 1)), a[r, c]))
    out.sort(key=lambda t: -t[1])
    return out


def _vertex(a, r, c, axis):
    n = a.shape[axis]
    i = r if axis == 0 else c
    if i == 0 or i == n - 1:
        return 0.0
    if axis == 0:
        fm, f0, fp = a[r - 1, c], a[r, c], a[r + 1, c]
    else:
        fm, f0, fp = a[r, c - 1], a[r, c], a[r, c + 1]
    den = fm - 2.0 * f0 + fp
    if den >= 0:
        return 0.0
    return float(np.clip(0.5 * (fm - fp) / den, -0.5, 0.5))


def index_to_xy(grid, rc):
    r, c = rc
    cell = grid.cell
    return (-grid.half_extent + (c + 0.5) * cell, -grid.half_extent + (r + 0.5) * cell)


def rel_l2(a, b, region=None):
    """``||a - b|| / ||b||`` over ``region`` (boolean mask), with 0/0 = 0."""
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    if region is not None:
        a, b = a[region], b[region]
    num = np.linalg.norm(a - b)
    den = np.linalg.norm(b)
    if den == 0.0:
        return 0.0 if num == 0.0 else np.inf
    return float(num / den)


def compare(a, b, peak_threshold=0.5, region=None):
    """Relative L2/Linf error of ``a`` against ``b`` and the peaks of |a - b|.

    ``region`` optionally restricts the norms (not the peak search) to a mask.
    """
    if not a.same_shape(b):
        raise GridError(f"shape mismatch: ({a.n}, {a.half_extent}) vs ({b.n}, {b.half_extent})")
    d = np.abs(a.values - b.values)
    l2 = rel_l2(a.values, b.values, region)
    bv = b.values if region is None else b.values[region]
    dv = d if region is None else d[region]
    bmax = np.max(np.abs(bv)) if bv.size else 0.0
    dmax = np.max(dv) if dv.size else 0.0
    linf = 0.0 if dmax == 0.0 else (np.inf if bmax == 0.0 else float(dmax / bmax))
    peaks = []
    top = d.max()
    if top > 0:
        for rc, mag in find_peaks2d(d, peak_threshold * top):
            peaks.append((index_to_xy(a, rc), float(mag)))
    return Metrics(l2, linf, peaks)


def disk_mask(grid, radius, center=(0.0, 0.0)):
    x, y = grid.mesh()
    return (x - center[0]) ** 2 + (y - center[1]) ** 2 <= radius ** 2


# ---------------------------------------------------------------------------
# file formats
# ---------------------------------------------------------------------------

def _read_header(fh, magic, nfields):
    line = fh.readline(256)
    if not line.endswith(b"\n"):
        raise FormatError("missing header line")
    parts = line.decode("ascii", errors="replace").split()
    if not parts or parts[0] != magic:
        raise FormatError(f"bad magic: expected {magic}, got {parts[:1]}")
    if len(parts) != nfields or parts[1] != "1":
        raise FormatError(f"unsupported {magic} header: {line!r}")
    return parts


def _read_payload(fh, count, what):
    raw = fh.read()
    if len(raw) != 8 * count:
        raise FormatError(f"truncated payload in {what}: expected {8 * count} bytes, got {len(raw)}")
    vals = np.frombuffer(raw, dtype="<f8").astype(np.float64)
    if not np.all(np.isfinite(vals)):
        raise FormatError(f"non-finite values in {what}")
    return vals


def write_grid(path, grid):
    with open(path, "wb") as fh:
        fh.write(f"RGRID 1 {grid.n} {grid.half_extent!r}\n".encode("ascii"))
        fh.write(np.ascontiguousarray(grid.values, dtype="<f8").tobytes())


def read_grid(path):
    with open(path, "rb") as fh:
        _, _, n, L = _read_header(fh, "RGRID", 4)
        n = int(n)
        vals = _read_payload(fh, n * n, path)
    return ImageGrid(n, float(L), vals.reshape(n, n))


def write_sino(path, sino):
    with open(path, "wb") as fh:
        fh.write(f"RSINO 1 {sino.m} {sino.p_count} {sino.p_half_extent!r}\n".encode("ascii"))
        fh.write(np.ascontiguousarray(sino.psi_mask, dtype="<f8").tobytes())
        fh.write(np.ascontiguousarray(sino.values, dtype="<f8").tobytes())


def read_sino(path):
    with open(path, "rb") as fh:
        _, _, m, pc, R = _read_header(fh, "RSINO", 5)
        m, pc = int(m), int(pc)
        vals = _read_payload(fh, m + m * pc, path)
    return Sinogram(m, pc, float(R), vals[m:].reshape(m, pc), psi_mask=vals[:m])


def crosscut(grid, row=None, col=None, angle=None, through=(0.0, 0.0)):
    """Extract a 1-D profile: a grid row, a grid column, or a line at ``angle``.

    ``row``/``col`` are physical coordinates (y for a row, x for a column),
    snapped to the nearest cell. A line at ``angle`` passes through ``through``
    and is sampled at cell spacing with nearest-cell lookup; its coordinate is
    the signed distance from ``through``. Returns (coords, values).
    """
    ax = grid.axis
    cell = grid.cell
    if row is not None:
        i = int(np.clip(np.round((row + grid.half_extent) / cell - 0.5), 0, grid.n - 1))
        return ax.copy(), grid.values[i].copy()
    if col is not None:
        j = int(np.clip(np.round((col + grid.half_extent) / cell - 0.5), 0, grid.n - 1))
        return ax.copy(), grid.values[:, j].copy()
    if angle is None:
        raise GridError("crosscut needs row, col or angle")
    t = np.arange(-2 * grid.n, 2 * grid.n + 1) * cell
    x = through[0] + t * np.cos(angle)
    y = through[1] + t * np.sin(angle)
    j = np.round((x + grid.half_extent) / cell - 0.5).astype(int)
    i = np.round((y + grid.half_extent) / cell - 0.5).astype(int)
    ok = (i >= 0) & (i < grid.n) & (j >= 0) & (j < grid.n)
    return t[ok], grid.values[i[ok], j[ok]]


def write_csv_crosscut(path, coords, values):
    with open(path, "w") as fh:
        for c, v in zip(coords, values):
            fh.write(f"{float(c)!r},{float(v)!r}\n")


def to_bytes8(values, vmin=None, vmax=None):
    v = np.asarray(values, dtype=float)
    lo = v.min() if vmin is None else vmin
    hi = v.max() if vmax is None else vmax
    if hi <= lo:
        return np.zeros(v.shape, dtype=np.uint8)
    scaled = np.clip((v - lo) / (hi - lo), 0.0, 1.0) * 255.0
    return np.round(scaled).astype(np.uint8)


def write_image8(path, grid, vmin=None, vmax=None):
    """8-bit binary PGM; top image row is the largest y."""
    data = to_bytes8(grid.values, vmin, vmax)[::-1]
    with open(path, "wb") as fh:
        fh.write(f"P5\n{grid.n} {grid.n}\n255\n".encode("ascii"))
        fh.write(data.tobytes())
