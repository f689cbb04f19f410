"""Flat discretized base domains and their scalar operators.

Fields are numpy arrays whose leading dimensions follow ``GridGeometry.shape``;
any trailing dimensions (matrix indices, say) are carried along untouched.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np
from scipy import ndimage

from ..errors import InvalidGeometryError, ShapeError

PERIODIC = "periodic"
TWISTED = "twisted"
DIRICHLET = "dirichlet"
RULES = (PERIODIC, TWISTED, DIRICHLET)

# Width of the frozen layer next to a Dirichlet boundary. Nested centered
# differences reach two sites, so two layers keep summation by parts exact.
STENCIL_RADIUS = 2


@dataclass(frozen=True)
class Axis:
    name: str
    length: float
    points: int
    rule: str
    start: float = 0.0

    @property
    def wraps(self) -> bool:
        return self.rule in (PERIODIC, TWISTED)

    @property
    def spacing(self) -> float:
        if self.wraps:
            return self.length / self.points
        return self.length / (self.points - 1)

    @property
    def coords(self) -> np.ndarray:
        return self.start + self.spacing * np.arange(self.points)


@dataclass(frozen=True)
class ReducedAxis:
    """A real direction along which every field is constant."""

    name: str
    length: float


@dataclass(frozen=True)
class GridGeometry:
    axes: tuple[Axis, ...]
    complex_pairing: tuple[tuple[str, str], ...]
    reduced_axes: tuple[ReducedAxis, ...] = ()
    _index: dict = field(init=False, repr=False, compare=False)

    def __post_init__(self) -> None:
        object.__setattr__(self, "axes", tuple(self.axes))
        object.__setattr__(self, "complex_pairing", tuple(tuple(p) for p in self.complex_pairing))
        object.__setattr__(self, "reduced_axes", tuple(self.reduced_axes))
        names = [a.name for a in self.axes] + [a.name for a in self.reduced_axes]
        if len(set(names)) != len(names):
            raise InvalidGeometryError(f"duplicate axis names in {names}")
        for ax in self.axes:
            if ax.rule not in RULES:
                raise InvalidGeometryError(f"axis {ax.name}: unknown rule {ax.rule!r}")
            if not (ax.length > 0 and math.isfinite(ax.length)):
                raise InvalidGeometryError(f"axis {ax.name}: length must be positive")
            if ax.rule == DIRICHLET and ax.points < 3:
                raise InvalidGeometryError(f"Dirichlet axis {ax.name} needs at least 3 points")
            if ax.wraps and ax.points < 4:
                raise InvalidGeometryError(f"periodic axis {ax.name} needs at least 4 points")
        for red in self.reduced_axes:
            if not red.length > 0:
                raise InvalidGeometryError(f"reduced axis {red.name}: length must be positive")
        if sum(a.rule == TWISTED for a in self.axes) > 1:
            raise InvalidGeometryError("at most one twisted axis is supported")
        used: list[str] = []
        for pair in self.complex_pairing:
            if len(pair) != 2:
                raise InvalidGeometryError(f"complex pair {pair} must name two axes")
            for nm in pair:
                if nm not in names:
                    raise InvalidGeometryError(f"complex pair {pair} names unknown axis {nm}")
            used.extend(pair)
        if len(set(used)) != len(used):
            raise InvalidGeometryError("an axis appears in two complex pairs")
        object.__setattr__(self, "_index", {a.name: i for i, a in enumerate(self.axes)})

    # -- basic queries --------------------------------------------------
    @property
    def shape(self) -> tuple[int, ...]:
        return tuple(a.points for a in self.axes)

    @property
    def ndim(self) -> int:
        return len(self.axes)

    @property
    def n_complex(self) -> int:
        return len(self.complex_pairing)

    def axis(self, name: str) -> Axis:
        return self.axes[self.axis_index(name)]

    def axis_index(self, name: str) -> int:
        try:
            return self._index[name]
        except KeyError:
            raise InvalidGeometryError(f"no active axis named {name!r}") from None

    def has_axis(self, name: str) -> bool:
        return name in self._index

    @property
    def spacings(self) -> tuple[float, ...]:
        return tuple(a.spacing for a in self.axes)

    @property
    def twisted_axis(self) -> int | None:
        for i, a in enumerate(self.axes):
            if a.rule == TWISTED:
                return i
        return None

    @property
    def volume(self) -> float:
        vol = 1.0
        for a in self.axes:
            vol *= a.length
        for r in self.reduced_axes:
            vol *= r.length
        return vol

    def mesh(self, name: str) -> np.ndarray:
        """Coordinate of axis ``name`` broadcast to the full grid shape."""
        i = self.axis_index(name)
        shp = [1] * self.ndim
        shp[i] = self.shape[i]
        return np.broadcast_to(self.axes[i].coords.reshape(shp), self.shape)

    def cell_volume(self) -> np.ndarray:
        """Quadrature weight per site: spacing products, half cells on Dirichlet ends."""
        w = np.ones(self.shape)
        for i, a in enumerate(self.axes):
            wa = np.full(a.points, a.spacing)
            if a.rule == DIRICHLET:
                wa[0] *= 0.5
                wa[-1] *= 0.5
            shp = [1] * self.ndim
            shp[i] = a.points
            w = w * wa.reshape(shp)
        for r in self.reduced_axes:
            w = w * r.length
        return w

    def full_mask(self) -> np.ndarray:
        return np.ones(self.shape, dtype=bool)

    def derivative_coefficients(self) -> list[tuple[dict[int, complex], dict[int, complex]]]:
        """For each complex coordinate, the real-axis expansions of d/dz_k and d/dzbar_k.

        Keys are active axis indices; reduced axes drop out.
        """
        out = []
        for x_name, y_name in self.complex_pairing:
            c: dict[int, complex] = {}
            d: dict[int, complex] = {}
            if self.has_axis(x_name):
                i = self.axis_index(x_name)
                c[i] = 0.5
                d[i] = 0.5
            if self.has_axis(y_name):
                j = self.axis_index(y_name)
                c[j] = -0.5j
                d[j] = 0.5j
            out.append((c, d))
        return out

    def contraction_weights(self) -> np.ndarray:
        """W[p, q] such that i*Lambda*dbar(a) = sum W[p,q] D_p a_q for real-axis forms a_q."""
        n = self.ndim
        W = np.zeros((n, n), dtype=complex)
        for c, d in self.derivative_coefficients():
            for p, dp in d.items():
                for q, cq in c.items():
                    W[p, q] += -2.0 * dp * cq
        return W


def build_monopole_domain(torus_period: float, S: float, resolution: Sequence[int],
                          b_start: float = 0.0) -> GridGeometry:
    """Grid on (Im z, log|w|, arg w) with Re z reduced by circle invariance.

    The twisted axis covers [b_start, b_start + torus_period).
    """
    if not (torus_period > 0):
        raise InvalidGeometryError("torus period must be positive")
    if not (S > 0):
        raise InvalidGeometryError("cylinder half-width S must be positive")
    res = tuple(int(n) for n in resolution)
    if len(res) != 3:
        raise InvalidGeometryError("resolution needs three entries (b, s, theta)")
    nb, ns, nt = res
    if nb < 4 or nt < 4:
        raise InvalidGeometryError("periodic axes need at least 4 points")
    if ns < 3:
        raise InvalidGeometryError("Dirichlet axis s needs at least 3 points")
    axes = (
        Axis("b", float(torus_period), nb, TWISTED, start=float(b_start)),
        Axis("s", 2.0 * S, ns, DIRICHLET, start=-float(S)),
        Axis("theta", 2.0 * math.pi, nt, PERIODIC),
    )
    return GridGeometry(axes, (("a", "b"), ("s", "theta")), (ReducedAxis("a", float(torus_period)),))


def build_instanton_domain(T: float, resolution: Sequence[int], periods: Sequence[float] = (1.0, 1.0, 1.0)) -> GridGeometry:
    """R_t x T^3 with Dirichlet t on [-T, T]; complex pairs (t, x) and (y, z)."""
    if not T > 0:
        raise InvalidGeometryError("half-width T must be positive")
    nt, nx, ny, nz = (int(n) for n in resolution)
    axes = (
        Axis("t", 2.0 * T, nt, DIRICHLET, start=-float(T)),
        Axis("x", float(periods[0]), nx, PERIODIC),
        Axis("y", float(periods[1]), ny, PERIODIC),
        Axis("z", float(periods[2]), nz, PERIODIC),
    )
    return GridGeometry(axes, (("t", "x"), ("y", "z")))


# -- scalar operators ---------------------------------------------------

def laplacian(f: np.ndarray, g: GridGeometry) -> np.ndarray:
    """-(1/2) sum of second differences; NaN on Dirichlet end sites."""
    f = np.asarray(f)
    if f.shape[: g.ndim] != g.shape:
        raise ShapeError(f"field shape {f.shape} does not match grid {g.shape}")
    out = np.zeros(f.shape, dtype=np.result_type(f, float))
    bad = np.zeros(g.shape, dtype=bool)
    for i, ax in enumerate(g.axes):
        h2 = ax.spacing ** 2
        second = np.roll(f, -1, axis=i) - 2.0 * f + np.roll(f, 1, axis=i)
        out += second / h2
        if ax.rule == DIRICHLET:
            idx = [slice(None)] * g.ndim
            idx[i] = 0
            bad[tuple(idx)] = True
            idx[i] = -1
            bad[tuple(idx)] = True
    out *= -0.5
    out[bad] = np.nan
    return out


def integrate(f: np.ndarray, g: GridGeometry, mask: np.ndarray | None = None) -> complex | float:
    f = np.asarray(f)
    w = g.cell_volume()
    if mask is not None:
        mask = np.asarray(mask, dtype=bool)
        if not mask.any():
            return 0.0
        return (f[mask] * w[mask]).sum()
    return (f * w).sum()


# -- forms -------------------------------------------------------------

@dataclass
class FormField:
    """Coefficients of dz_k ^ dzbar_l, keyed by (k, l) complex-coordinate indices."""

    components: dict[tuple[int, int], np.ndarray]

    def __getitem__(self, key: tuple[int, int]) -> np.ndarray:
        return self.components[key]

    def get(self, key: tuple[int, int], default=None):
        return self.components.get(key, default)

    def keys(self):
        return self.components.keys()


def kahler_form(g: GridGeometry, rank: int | None = None) -> FormField:
    """omega = (i/2) sum dz_k ^ dzbar_k, tensored with the identity when rank is given."""
    unit = np.ones(g.shape, dtype=complex) if rank is None else np.broadcast_to(
        np.eye(rank, dtype=complex), g.shape + (rank, rank)
    ).copy()
    return FormField({(k, k): 0.5j * unit for k in range(g.n_complex)})


def lambda_contract(F: FormField, g: GridGeometry) -> np.ndarray:
    """-2i times the sum of the diagonal (k, kbar) coefficients."""
    n = g.n_complex
    shape = None
    for (k, l), comp in F.components.items():
        if not (0 <= k < n and 0 <= l < n):
            raise ShapeError(f"form component ({k},{l}) outside {n} complex coordinates")
        comp = np.asarray(comp)
        if comp.shape[: g.ndim] != g.shape:
            raise ShapeError(f"component ({k},{l}) has shape {comp.shape}, grid is {g.shape}")
        if shape is None:
            shape = comp.shape
        elif comp.shape != shape:
            raise ShapeError("form components disagree in shape")
    if shape is None:
        raise ShapeError("form has no components")
    out = np.zeros(shape, dtype=complex)
    for k in range(n):
        comp = F.components.get((k, k))
        if comp is not None:
            out += comp
    return -2j * out


# -- masks --------------------------------------------------------------

def _diamond(ndim: int, radius: int) -> np.ndarray:
    idx = np.indices((2 * radius + 1,) * ndim) - radius
    return np.abs(idx).sum(axis=0) <= radius


def erode(mask: np.ndarray, g: GridGeometry, radius: int = STENCIL_RADIUS) -> np.ndarray:
    """Sites whose whole L1 ball of given radius lies in the mask; wraps periodic axes."""
    mask = np.asarray(mask, dtype=bool)
    pad = [(radius, radius) if ax.wraps else (0, 0) for ax in g.axes]
    mp = np.pad(mask, pad, mode="wrap")
    er = ndimage.binary_erosion(mp, structure=_diamond(g.ndim, radius), border_value=0)
    sl = tuple(slice(radius, -radius) if ax.wraps else slice(None) for ax in g.axes)
    return er[sl]


def interior(mask: np.ndarray | None, g: GridGeometry) -> np.ndarray:
    if mask is None:
        mask = g.full_mask()
    return erode(mask, g)


def boundary(mask: np.ndarray | None, g: GridGeometry) -> np.ndarray:
    """Frozen layer of a mask: its sites that are not interior."""
    if mask is None:
        mask = g.full_mask()
    mask = np.asarray(mask, dtype=bool)
    return mask & ~interior(mask, g)


def axis_mask(g: GridGeometry, name: str, predicate) -> np.ndarray:
    return np.asarray(predicate(g.mesh(name)), dtype=bool)


def iter_axes(g: GridGeometry, rules: Iterable[str]) -> list[int]:
    rules = tuple(rules)
    return [i for i, a in enumerate(g.axes) if a.rule in rules]
