"""Uniform Cartesian grids, scalar fields, zero level sets and set metrics.

Fields live at cell centers of a uniform, isotropic grid in one or two
dimensions. This module supplies the geometric primitives every solver
shares: extraction of the zero level set by linear interpolation along
grid edges, signed distance to that set, Hausdorff distance between
point clouds, and the measure of the thin band around an interface.
"""

from __future__ import annotations

import os
from dataclasses import dataclass, replace

import numpy as np
from scipy.spatial import cKDTree

from .errors import NoInterfaceError, SpecError

BOUNDARY_KINDS = ("zero-normal-derivative", "periodic")


@dataclass(frozen=True)
class Grid:
    """Uniform isotropic grid over a rectangular domain.

    ``origin`` is the coordinate of the first cell center; cell ``i``
    (or ``(i, j)``) sits at ``origin + i*h`` per axis. ``extents`` is the
    cell count per axis and fixes the dimension (1 or 2).
    """

    origin: tuple[float, ...]
    h: float
    extents: tuple[int, ...]
    boundary: str = "zero-normal-derivative"

    def __post_init__(self):
        origin = tuple(float(v) for v in np.atleast_1d(self.origin))
        extents = tuple(int(n) for n in np.atleast_1d(self.extents))
        object.__setattr__(self, "origin", origin)
        object.__setattr__(self, "extents", extents)
        if len(extents) not in (1, 2):
            raise SpecError("grid dimension must be 1 or 2, got %d" % len(extents))
        if len(origin) != len(extents):
            raise SpecError("grid origin and extents must have the same length")
        if not (self.h > 0):
            raise SpecError("grid spacing h must be positive")
        if any(n < 3 for n in extents):
            raise SpecError("grid extents must be at least 3 cells per axis")
        if self.boundary not in BOUNDARY_KINDS:
            raise SpecError(
                "boundary must be one of %s, got %r" % (BOUNDARY_KINDS, self.boundary)
            )

    @property
    def dim(self) -> int:
        return len(self.extents)

    @property
    def shape(self) -> tuple[int, ...]:
        return self.extents

    @property
    def n_cells(self) -> int:
        return int(np.prod(self.extents))

    @property
    def cell_volume(self) -> float:
        return self.h ** self.dim

    def axis_coords(self, axis: int) -> np.ndarray:
        return self.origin[axis] + self.h * np.arange(self.extents[axis])

    def meshgrid(self) -> tuple[np.ndarray, ...]:
        """Cell-center coordinate arrays, shaped like the field values."""
        axes = [self.axis_coords(a) for a in range(self.dim)]
        return tuple(np.meshgrid(*axes, indexing="ij"))

    def points(self) -> np.ndarray:
        """All cell centers as an (n_cells, dim) array in C order."""
        mesh = self.meshgrid()
        return np.stack([m.ravel() for m in mesh], axis=1)


@dataclass(frozen=True)
class ScalarField:
    """Real values on a grid, one per cell. Values are finite and read-only."""

    grid: Grid
    values: np.ndarray

    def __post_init__(self):
        v = np.asarray(self.values, dtype=float)
        if v.shape != self.grid.shape:
            raise SpecError(
                "field shape %s does not match grid extents %s"
                % (v.shape, self.grid.shape)
            )
        if not np.isfinite(v).all():
            raise SpecError("field values must be finite")
        v = v.copy()
        v.setflags(write=False)
        object.__setattr__(self, "values", v)

    def with_values(self, values: np.ndarray) -> "ScalarField":
        return replace(self, values=values)

    def min(self) -> float:
        return float(self.values.min())

    def max(self) -> float:
        return float(self.values.max())


@dataclass(frozen=True)
class FrontTriple:
    """Zero set plus the open positive/negative regions of a field.

    ``gamma`` holds the crossing points, shape (m, dim): one point per
    grid edge whose endpoint values straddle ``iso`` (by linear
    interpolation) plus the centers of cells sitting exactly on ``iso``.
    ``d_plus``/``d_minus`` are strict-inequality cell masks; cells equal
    to ``iso`` belong to neither.
    """

    gamma: np.ndarray
    d_plus: np.ndarray
    d_minus: np.ndarray
    iso: float = 0.0

    @property
    def is_empty(self) -> bool:
        return self.gamma.shape[0] == 0


def zero_level_set(f: ScalarField, iso: float = 0.0) -> FrontTriple:
    """Extract the iso-crossing points and sign masks of a field.

    An empty front is a reported state, not an error: fronts legitimately
    vanish when a positive-speed flow sweeps the domain.
    """
    grid = f.grid
    v = f.values - iso
    d_plus = v > 0
    d_minus = v < 0

    points = []
    exact = np.argwhere(v == 0)
    if exact.size:
        centers = np.asarray(grid.origin) + grid.h * exact
        points.append(centers.astype(float))

    for axis in range(grid.dim):
        sl_a = [slice(None)] * grid.dim
        sl_b = [slice(None)] * grid.dim
        sl_a[axis] = slice(0, -1)
        sl_b[axis] = slice(1, None)
        a = v[tuple(sl_a)]
        b = v[tuple(sl_b)]
        straddle = (a * b) < 0
        if not straddle.any():
            continue
        idx = np.argwhere(straddle)
        t = a[straddle] / (a[straddle] - b[straddle])
        pts = np.asarray(grid.origin) + grid.h * idx.astype(float)
        pts[:, axis] += grid.h * t
        points.append(pts)

    if points:
        gamma = np.concatenate(points, axis=0)
    else:
        gamma = np.empty((0, grid.dim))
    return FrontTriple(gamma=gamma, d_plus=d_plus, d_minus=d_minus, iso=iso)


def signed_distance(source, grid: Grid | None = None) -> ScalarField:
    """Signed Euclidean distance to the zero set of ``source``.

    ``source`` is a ScalarField (implicit function) or a boolean mask
    (with ``grid``), whose True region is taken as positive. The distance
    is measured to the interpolated crossing points, so it is exact to
    O(h); the sign matches the sign region of each cell.

    Raises NoInterfaceError when either sign region is empty.
    """
    if isinstance(source, ScalarField):
        f = source
    else:
        if grid is None:
            raise SpecError("signed_distance needs a grid when given a mask")
        mask = np.asarray(source, dtype=bool)
        f = ScalarField(grid, np.where(mask, 1.0, -1.0))

    triple = zero_level_set(f)
    if not triple.d_plus.any() or not triple.d_minus.any():
        raise NoInterfaceError("no interface: input field is one-signed")

    tree = cKDTree(triple.gamma)
    dist, _ = tree.query(f.grid.points())
    dist = dist.reshape(f.grid.shape)
    sign = np.where(f.values < 0, -1.0, 1.0)
    sign[f.values == 0] = 0.0
    return ScalarField(f.grid, dist * sign + 0.0)


def hausdorff_distance(a: np.ndarray, b: np.ndarray) -> float:
    """Symmetric Hausdorff distance between two point sets.

    Accepts (m,) arrays for 1D points or (m, dim) arrays. Both sets must
    be nonempty.
    """
    a = _as_points(a)
    b = _as_points(b)
    if a.shape[0] == 0 or b.shape[0] == 0:
        raise SpecError("hausdorff distance of an empty point set is undefined")
    if a.shape[1] != b.shape[1]:
        raise SpecError("point sets have mismatched dimensions")
    d_ab = cKDTree(b).query(a)[0].max()
    d_ba = cKDTree(a).query(b)[0].max()
    return float(max(d_ab, d_ba))


def _as_points(p: np.ndarray) -> np.ndarray:
    p = np.asarray(p, dtype=float)
    if p.ndim == 1:
        p = p[:, None]
    return p


def interior_band_measure(f: ScalarField, tol: float) -> float:
    """Measure (cell count times h^dim) of the band {|f| <= tol}.

    A fattening proxy: for a transversal interface the band stays O(h),
    while a field hovering near zero on a fat set blows the measure up.
    """
    if not (tol > 0):
        raise SpecError("interior_band_measure needs tol > 0")
    count = int(np.count_nonzero(np.abs(f.values) <= tol))
    return count * f.grid.cell_volume


def front_size(f: ScalarField, iso: float = 0.0) -> float:
    """Size of the iso-front: polyline length in 2D, crossing count in 1D.

    Cells exactly on the iso level are biased to the positive side for
    the topology, so a field that is identically ``iso`` has size 0 (and
    a huge band measure: the fattening signature).
    """
    v = f.values - iso
    if f.grid.dim == 1:
        strict = np.count_nonzero(v[:-1] * v[1:] < 0)
        zero = v == 0
        isolated = 0
        for i in np.flatnonzero(zero):
            left = v[i - 1] if i > 0 else 0.0
            right = v[i + 1] if i + 1 < v.size else 0.0
            if left * right < 0 or (left != 0 and right != 0):
                isolated += 1
        return float(strict + isolated)
    return _marching_squares_length(v, f.grid.h)


def _marching_squares_length(v: np.ndarray, h: float) -> float:
    """Total segment length of the zero contour on the cell-center lattice."""
    s = np.where(v >= 0, 1, -1)
    v00, v10 = v[:-1, :-1], v[1:, :-1]
    v01, v11 = v[:-1, 1:], v[1:, 1:]
    s00, s10 = s[:-1, :-1], s[1:, :-1]
    s01, s11 = s[:-1, 1:], s[1:, 1:]

    def cut(a, b):
        # interpolation parameter of the crossing on an edge, in [0, 1]
        with np.errstate(divide="ignore", invalid="ignore"):
            t = a / (a - b)
        return np.clip(np.nan_to_num(t, nan=0.5), 0.0, 1.0)

    # edge crossing flags and local (x, y) coordinates within each square
    e_left = s00 != s01    # x = 0,   y = cut(v00, v01)
    e_right = s10 != s11   # x = 1,   y = cut(v10, v11)
    e_bottom = s00 != s10  # y = 0,   x = cut(v00, v10)
    e_top = s01 != s11     # y = 1,   x = cut(v01, v11)
    y_left = cut(v00, v01)
    y_right = cut(v10, v11)
    x_bottom = cut(v00, v10)
    x_top = cut(v01, v11)

    total = 0.0
    n_cross = (e_left.astype(int) + e_right.astype(int)
               + e_bottom.astype(int) + e_top.astype(int))
    for i, j in np.argwhere(n_cross > 0):
        pts = []
        if e_left[i, j]:
            pts.append((0.0, y_left[i, j]))
        if e_bottom[i, j]:
            pts.append((x_bottom[i, j], 0.0))
        if e_right[i, j]:
            pts.append((1.0, y_right[i, j]))
        if e_top[i, j]:
            pts.append((x_top[i, j], 1.0))
        if len(pts) == 2:
            total += _seg_len(pts[0], pts[1])
        elif len(pts) == 4:
            # saddle: resolve the pairing with the square's center sign
            center = 0.25 * (v[i, j] + v[i + 1, j] + v[i, j + 1] + v[i + 1, j + 1])
            pos_corner = s[i, j] > 0
            if (center >= 0) == pos_corner:
                total += _seg_len(pts[0], pts[1]) + _seg_len(pts[2], pts[3])
            else:
                total += _seg_len(pts[0], pts[3]) + _seg_len(pts[1], pts[2])
    return total * h


def _seg_len(p, q) -> float:
    return float(np.hypot(p[0] - q[0], p[1] - q[1]))


# --- text serialization ---------------------------------------------------

FIELD_MAGIC = "frontlim-field v1"


def write_field(f: ScalarField, path) -> None:
    """Write a field in the frontlim text format.

    One header line then row-major ASCII floats, one row per line (a 1D
    field is a single row). Floats use shortest round-trip formatting so
    identical fields serialize byte-identically; the file appears
    atomically (write to a sibling then rename).
    """
    g = f.grid
    header = "%s dim=%d extents=%s origin=%s h=%s" % (
        FIELD_MAGIC,
        g.dim,
        ",".join(str(n) for n in g.extents),
        ",".join(repr(x) for x in g.origin),
        repr(g.h),
    )
    rows = f.values[None, :] if g.dim == 1 else f.values
    tmp = os.fspath(path) + ".tmp"
    with open(tmp, "w") as fh:
        fh.write(header + "\n")
        for row in rows:
            fh.write(" ".join(repr(float(x)) for x in row) + "\n")
    os.replace(tmp, path)


def read_field(path, boundary: str = "zero-normal-derivative") -> ScalarField:
    """Read a field written by :func:`write_field`."""
    with open(path) as fh:
        header = fh.readline().strip()
        if not header.startswith(FIELD_MAGIC):
            raise SpecError("%s: not a frontlim field file" % path)
        meta = dict(tok.split("=", 1) for tok in header[len(FIELD_MAGIC):].split())
        dim = int(meta["dim"])
        extents = tuple(int(x) for x in meta["extents"].split(","))
        origin = tuple(float(x) for x in meta["origin"].split(","))
        h = float(meta["h"])
        if len(extents) != dim:
            raise SpecError("%s: header extents do not match dim" % path)
        data = [np.fromstring(line, sep=" ") for line in fh if line.strip()]
    values = np.concatenate(data) if data else np.empty(0)
    if values.size != int(np.prod(extents)):
        raise SpecError("%s: value count does not match extents" % path)
    grid = Grid(origin=origin, h=h, extents=extents, boundary=boundary)
    return ScalarField(grid, values.reshape(extents))


def write_field_csv(f: ScalarField, path) -> None:
    """Write cell centers and values as CSV: ``x[,y],value`` rows."""
    g = f.grid
    pts = g.points()
    vals = f.values.ravel()
    cols = ["x", "y"][: g.dim] + ["value"]
    tmp = os.fspath(path) + ".tmp"
    with open(tmp, "w") as fh:
        fh.write(",".join(cols) + "\n")
        for p, v in zip(pts, vals):
            fh.write(",".join(repr(float(c)) for c in p) + "," + repr(float(v)) + "\n")
    os.replace(tmp, path)
