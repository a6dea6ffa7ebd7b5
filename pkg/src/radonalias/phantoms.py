"""Test functions: coherent states, erf-smoothed edges and disks.

Every phantom is a closed-form function of (x, y), so it can be rasterized on
any grid and integrated along lines without going through a raster.

Edges are built from the smoothed Heaviside ``h_lam(t) = (1 + erf(lam t))/2``
and localized by the taper ``h_mu(r_loc - |x - center|)`` with
``mu = 10 * mu_scale / r_loc``.
"""
from dataclasses import dataclass

import numpy as np
from scipy.special import erf

from .grids import GridError, ImageGrid

KINDS = ("coherent", "flat_edge", "convex_edge", "corner", "disk")

# h_lam(t) < 1e-12 once lam * t < -_ERF_TAIL
_ERF_TAIL = 5.05


class PhantomError(ValueError):
    """Invalid phantom specification."""


def smooth_step(t, lam):
    """``(1 + erf(lam t)) / 2``."""
    return 0.5 * (1.0 + erf(lam * np.asarray(t, dtype=float)))


@dataclass(frozen=True)
class PhantomSpec:
    """Parameters of one phantom.

    Parameters
    ----------
    kind : str
        One of ``coherent``, ``flat_edge``, ``convex_edge``, ``corner``, ``disk``.
    center : tuple
        Packet center (coherent), edge point / vertex / corner (edges) or disk
        center. The taper is centered here as well.
    xi0 : tuple
        Semiclassical frequency of a coherent state; the classical frequency
        is ``xi0 / h``.
    h : float
        Semiclassical parameter.
    lam : float
        Edge sharpness.
    a : float
        Convex edge ``u1 = a * u2**2`` in the local frame.
    angle : float
        Rotation of the local frame; for edges its first axis is the normal.
    r_loc : float
        Taper radius (edges only).
    radius : float
        Disk radius.
    mu_scale : float
        Multiplies the taper sharpness ``10 / r_loc``.
    """
    kind: str
    center: tuple = (0.0, 0.0)
    xi0: tuple = (0.0, 72.0)
    h: float = 1.0
    lam: float = 64.0
    a: float = 1.5
    angle: float = 0.0
    r_loc: float = 0.4
    radius: float = 0.5
    mu_scale: float = 1.0

    def __post_init__(self):
        if self.kind not in KINDS:
            raise PhantomError(f"unknown phantom kind {self.kind!r}; expected one of {KINDS}")
        if not self.h > 0:
            raise PhantomError("h must be positive")
        if not self.lam > 0:
            raise PhantomError("lam must be positive")
        if not self.r_loc > 0:
            raise PhantomError("r_loc must be positive")
        if not self.radius > 0:
            raise PhantomError("radius must be positive")
        if self.kind == "coherent" and np.hypot(*self.xi0) == 0:
            raise PhantomError("coherent state needs a nonzero frequency")
        object.__setattr__(self, "center", tuple(float(v) for v in self.center))
        object.__setattr__(self, "xi0", tuple(float(v) for v in self.xi0))

    @property
    def mu(self):
        return 10.0 * self.mu_scale / self.r_loc

    @property
    def curvature(self):
        """Curvature of the convex edge at its vertex."""
        return 2.0 * self.a

    @property
    def normal(self):
        return np.array([np.cos(self.angle), np.sin(self.angle)])

    def support_disk(self):
        """(center, radius) of a disk outside which the phantom is below 1e-12."""
        if self.kind == "coherent":
            return self.center, float(np.sqrt(2.0 * self.h * np.log(1e12)))
        if self.kind == "disk":
            return self.center, self.radius + _ERF_TAIL / self.lam
        return self.center, self.r_loc + _ERF_TAIL / self.mu

    def quadrature_step(self):
        """A line-integration step that resolves the finest feature."""
        if self.kind == "coherent":
            wavelength = 2.0 * np.pi * self.h / np.hypot(*self.xi0)
            return min(np.sqrt(self.h) / 4.0, wavelength / 10.0)
        return min(0.25 / self.lam, 0.25 / self.mu)


def _local(spec, x, y):
    c, s = np.cos(spec.angle), np.sin(spec.angle)
    dx = np.asarray(x, dtype=float) - spec.center[0]
    dy = np.asarray(y, dtype=float) - spec.center[1]
    return c * dx + s * dy, -s * dx + c * dy


def taper(spec, x, y):
    dx = np.asarray(x, dtype=float) - spec.center[0]
    dy = np.asarray(y, dtype=float) - spec.center[1]
    return smooth_step(spec.r_loc - np.hypot(dx, dy), spec.mu)


def evaluate(spec, x, y):
    """Phantom values at arbitrary points."""
    if spec.kind == "coherent":
        dx = np.asarray(x, dtype=float) - spec.center[0]
        dy = np.asarray(y, dtype=float) - spec.center[1]
        phase = (np.asarray(x) * spec.xi0[0] + np.asarray(y) * spec.xi0[1]) / spec.h
        return np.cos(phase) * np.exp(-(dx * dx + dy * dy) / (2.0 * spec.h))
    if spec.kind == "disk":
        dx = np.asarray(x, dtype=float) - spec.center[0]
        dy = np.asarray(y, dtype=float) - spec.center[1]
        return smooth_step(spec.radius - np.hypot(dx, dy), spec.lam)
    u1, u2 = _local(spec, x, y)
    if spec.kind == "flat_edge":
        core = smooth_step(u1, spec.lam)
    elif spec.kind == "convex_edge":
        core = smooth_step(u1 - spec.a * u2 * u2, spec.lam)
    else:
        core = smooth_step(u1, spec.lam) * smooth_step(u2, spec.lam)
    return taper(spec, x, y) * core


def check_support(spec, half_extent):
    c, r = spec.support_disk()
    if max(abs(c[0]), abs(c[1])) + r > half_extent:
        raise GridError(
            f"{spec.kind} phantom support (center {c}, radius {r:.4g}) leaves [-{half_extent}, {half_extent}]^2")


def rasterize(spec, n, half_extent, check=True):
    """Sample the phantom at the cell centers of an n x n grid on [-L, L]^2."""
    if check:
        check_support(spec, half_extent)
    return ImageGrid.from_function(n, half_extent, lambda x, y: evaluate(spec, x, y))


def coherent_state(n, half_extent, xi0, h=1.0, center=(0.0, 0.0), check=True):
    """``Re exp(i x.xi0/h - |x - center|^2 / (2h))`` on a grid.

    The phase is referenced to the origin, so the value at ``center`` is
    ``cos(center . xi0 / h)``; it equals 1 when ``center . xi0 = 0``.
    With ``check=False`` a packet wider than the grid is silently truncated.
    """
    spec = PhantomSpec("coherent", center=center, xi0=xi0, h=h)
    return rasterize(spec, n, half_extent, check=check)


def edge_phantom(spec, n, half_extent):
    if spec.kind not in ("flat_edge", "convex_edge", "corner"):
        raise PhantomError(f"edge_phantom needs an edge kind, got {spec.kind!r}")
    return rasterize(spec, n, half_extent)


def disk_phantom(n, half_extent, center=(0.0, 0.0), radius=0.5, lam=64.0):
    return rasterize(PhantomSpec("disk", center=center, radius=radius, lam=lam), n, half_extent)


def flat_edge_jump(spec):
    """Jump of Rf across the edge line of a flat edge.

    Equals the taper's integral along the line through ``center`` with
    normal ``spec.normal``.
    """
    _, r = spec.support_disk()
    t = np.linspace(-r, r, 8001)
    n = spec.normal
    px = spec.center[0] - t * n[1]
    py = spec.center[1] + t * n[0]
    return float(np.trapezoid(taper(spec, px, py), t))


def convex_edge_strength(spec):
    """``k = 2 sqrt(2) f(x0) / sqrt(kappa)`` for the convex edge, f(x0) the taper at the vertex."""
    f0 = float(taper(spec, *spec.center))
    return 2.0 * np.sqrt(2.0) * f0 / np.sqrt(spec.curvature)


# key -> PhantomSpec field for the flat text form
_BLOCK_KEYS = {"kind": "kind", "x0": "center", "center": "center", "xi0": "xi0", "h": "h",
               "lambda": "lam", "a": "a", "angle": "angle", "rloc": "r_loc", "radius": "radius",
               "mu_scale": "mu_scale"}


def _numbers(text, count):
    parts = text.replace(",", " ").split()
    if len(parts) != count:
        raise PhantomError(f"expected {count} number(s), got {text!r}")
    try:
        vals = tuple(float(p) for p in parts)
    except ValueError:
        raise PhantomError(f"not a number in {text!r}") from None
    return vals if count > 1 else vals[0]


def parse_phantom_block(text):
    """PhantomSpec from ``key = value`` lines.

    Keys: kind, x0 (or center), xi0, h, lambda, a, angle, rloc, radius,
    mu_scale. Pairs are written ``x y`` or ``x,y``; ``#`` starts a comment.
    """
    kw = {}
    for lineno, line in enumerate(text.splitlines(), 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise PhantomError(f"line {lineno}: expected key = value")
        key, value = (p.strip() for p in line.split("=", 1))
        if key not in _BLOCK_KEYS:
            raise PhantomError(f"line {lineno}: unknown phantom key {key!r}")
        name = _BLOCK_KEYS[key]
        if name == "kind":
            kw[name] = value
        elif name in ("center", "xi0"):
            kw[name] = _numbers(value, 2)
        else:
            kw[name] = _numbers(value, 1)
    if "kind" not in kw:
        raise PhantomError("phantom block has no kind")
    return PhantomSpec(**kw)
