"""Velocity models and the cubic bistable reaction they drive.

A :class:`VelocityModel` carries two continuous front speeds ``n1 < n2``
separated by an oriented interface (given through its signed distance
``dtilde``), together with the positive floor ``rho`` and the
mollification exponent ``k``. The limiting speed equals ``n1`` on the
``dtilde < 0`` side, ``n2`` on the other, and is undetermined inside
``[n1, n2]`` on the interface itself; the lower/upper envelopes realize
that interval numerically.

A :class:`BistableModel` adds the width parameter ``epsilon`` and the
scaling regime, producing the cubic reaction

    f(q, x) = 2 (q - c(x)/2) (q^2 - 1)

whose traveling-wave profile is ``tanh(r + shift(x))`` with speed
``c(x)``; the mollified speed ramps from ``n1`` to ``n2`` over a band of
width ``epsilon**k`` around the interface.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .errors import SpecError
from .fields import Grid, ScalarField

SpatialFunc = Callable[[np.ndarray], np.ndarray]

SCALINGS = ("one", "two")


def as_spatial(value) -> SpatialFunc:
    """Normalize a constant or callable to a points -> values function.

    Points come in as an (m, dim) array; the result is an (m,) array.
    """
    if callable(value):
        def fn(pts, _f=value):
            out = np.asarray(_f(pts), dtype=float)
            return np.broadcast_to(out, (pts.shape[0],)).astype(float)
        return fn
    const = float(value)

    def fn(pts):
        return np.full(pts.shape[0], const)

    return fn


def hyperplane_interface(normal, offset: float) -> SpatialFunc:
    """Signed distance to the hyperplane x . v = b, positive on the +v side."""
    n = np.atleast_1d(np.asarray(normal, dtype=float))
    norm = float(np.linalg.norm(n))
    if norm == 0:
        raise SpecError("hyperplane interface needs a nonzero normal")
    n = n / norm
    b = float(offset) / norm

    def fn(pts):
        return pts @ n - b

    return fn


def circle_interface(center, radius: float) -> SpatialFunc:
    """Signed distance to the sphere |x - c| = R, positive outside."""
    c = np.atleast_1d(np.asarray(center, dtype=float))
    if not (radius > 0):
        raise SpecError("circle interface needs a positive radius")

    def fn(pts):
        return np.linalg.norm(pts - c, axis=-1) - radius

    return fn


def far_interface(distance: float = 1e9) -> SpatialFunc:
    """An interface pushed infinitely far to the fast side.

    The whole domain then sits at dtilde = -distance, so every speed
    evaluation saturates to n1 exactly; used for constant-speed models.
    """

    def fn(pts):
        return np.full(pts.shape[0], -float(distance))

    return fn


def smoothstep(t: np.ndarray) -> np.ndarray:
    """Clamped cubic ramp 3t^2 - 2t^3, C^1 across its [0, 1] support."""
    t = np.clip(t, 0.0, 1.0)
    return t * t * (3.0 - 2.0 * t)


@dataclass(frozen=True)
class VelocityModel:
    """Two-speed medium with an oriented discontinuity interface."""

    n1: SpatialFunc
    n2: SpatialFunc
    dtilde: SpatialFunc
    rho: float = 0.05
    k: float = 0.25

    def __post_init__(self):
        object.__setattr__(self, "n1", as_spatial(self.n1))
        object.__setattr__(self, "n2", as_spatial(self.n2))
        object.__setattr__(self, "dtilde", as_spatial(self.dtilde))
        if not (self.rho > 0):
            raise SpecError("rho must be positive")
        if not (0 <= self.k):
            raise SpecError("mollification exponent k must be nonnegative")

    def envelopes(self, pts: np.ndarray, snap: float = 0.0):
        """Lower/upper admissible limit speeds at the given points.

        Points within ``snap`` of the interface see the full interval
        [n1, n2]; elsewhere both envelopes collapse to the one-sided
        speed. Sub-cell interface geometry is unresolvable, so callers
        snap with half a cell.
        """
        pts = _as_batch(pts)
        d = self.dtilde(pts)
        lo = np.where(d > snap, self.n2(pts), self.n1(pts))
        hi = np.where(d < -snap, self.n1(pts), self.n2(pts))
        return lo, hi

    def one_sided_limit_speeds(self, pts: np.ndarray, eps: float):
        """Continuous speeds pinching the limit from both sides.

        The envelopes are ramped over the bands dtilde in [-2*eps, -eps]
        (upper) and [eps, 2*eps] (lower); outside those bands both equal
        the one-sided limit speed, so the pair differs from it only
        within 2*eps of the interface.
        """
        pts = _as_batch(pts)
        if not (eps > 0):
            raise SpecError("one-sided band parameter eps must be positive")
        d = self.dtilde(pts)
        n1 = self.n1(pts)
        n2 = self.n2(pts)
        alpha = np.where(d > 0, n2, n1)
        eta = smoothstep((d + 2.0 * eps) / eps)
        xi = smoothstep((2.0 * eps - d) / eps)
        upper = eta * n2 + (1.0 - eta) * alpha
        lower = xi * n1 + (1.0 - xi) * alpha
        return lower, upper

    def speed_bounds(self, pts: np.ndarray):
        n1 = self.n1(pts)
        n2 = self.n2(pts)
        return float(n1.min()), float(n2.max())


@dataclass(frozen=True)
class BistableModel:
    """Velocity model plus interface width and scaling regime."""

    velocity: VelocityModel
    epsilon: float
    scaling: str = "one"

    def __post_init__(self):
        if not (self.epsilon > 0):
            raise SpecError("epsilon must be positive")
        if self.scaling not in SCALINGS:
            raise SpecError("scaling must be 'one' or 'two', got %r" % (self.scaling,))
        k = self.velocity.k
        if self.scaling == "one" and k > 0.5:
            raise SpecError("scaling one requires k in [0, 1/2], got %g" % k)
        if self.scaling == "two" and k >= 1.0:
            raise SpecError("scaling two requires k in [0, 1), got %g" % k)

    @property
    def band_width(self) -> float:
        """Width of the speed transition band, epsilon**k."""
        return self.epsilon ** self.velocity.k

    def base_speed(self, pts: np.ndarray) -> np.ndarray:
        """Mollified speed on the limit scale, strictly between n1 and n2."""
        pts = _as_batch(pts)
        v = self.velocity
        th = np.tanh(v.dtilde(pts) / self.band_width)
        return 0.5 * v.n1(pts) * (1.0 - th) + 0.5 * v.n2(pts) * (1.0 + th)

    def wave_speed(self, pts: np.ndarray) -> np.ndarray:
        """Traveling-wave speed c(x); epsilon times the base speed under scaling two."""
        c = self.base_speed(pts)
        if self.scaling == "two":
            c = self.epsilon * c
        return c

    def unstable_zero(self, pts: np.ndarray) -> np.ndarray:
        """Middle root c(x)/2 of the cubic reaction."""
        return 0.5 * self.wave_speed(pts)

    def reaction(self, q, pts: np.ndarray) -> np.ndarray:
        """Cubic reaction 2(q - c(x)/2)(q^2 - 1), zeros at -1, c/2, 1."""
        c = self.wave_speed(pts)
        return reaction_term(np.asarray(q, dtype=float), c)

    def reaction_dq(self, q, pts: np.ndarray) -> np.ndarray:
        c = self.wave_speed(pts)
        return reaction_dq(np.asarray(q, dtype=float), c)

    def wave_shift(self, pts: np.ndarray) -> np.ndarray:
        """Profile shift log((2+c)/(2-c))/2 placing the unstable zero at r=0."""
        c = self.wave_speed(pts)
        if np.any(np.abs(c) >= 2):
            raise SpecError("wave speed must satisfy |c| < 2 for the tanh profile")
        return 0.5 * np.log((2.0 + c) / (2.0 - c))

    def wave_profile(self, r, pts: np.ndarray) -> np.ndarray:
        """Increasing tanh front connecting -1 to 1 with q(0) = c(x)/2."""
        return np.tanh(np.asarray(r, dtype=float) + self.wave_shift(pts))

    def wave_profile_slope(self, r, pts: np.ndarray) -> np.ndarray:
        q = self.wave_profile(r, pts)
        return 1.0 - q * q

    def one_sided_speeds(self, pts: np.ndarray):
        """Mollified speed pinched between cutoff blends toward n1 and n2.

        Returns speeds on the limit scale: the pair brackets the base
        speed (and the wave speed divided by epsilon under scaling two)
        between n1 and n2 everywhere.
        """
        pts = _as_batch(pts)
        v = self.velocity
        eps = self.epsilon
        d = v.dtilde(pts)
        c = self.base_speed(pts)
        eta = smoothstep((d + 2.0 * eps) / eps)
        xi = smoothstep((2.0 * eps - d) / eps)
        upper = eta * v.n2(pts) + (1.0 - eta) * c
        lower = xi * v.n1(pts) + (1.0 - xi) * c
        return lower, upper


def reaction_term(q: np.ndarray, c: np.ndarray) -> np.ndarray:
    """The cubic 2(q - c/2)(q^2 - 1) as a kernel over precomputed speeds."""
    return 2.0 * (q - 0.5 * c) * (q * q - 1.0)


def reaction_dq(q: np.ndarray, c: np.ndarray) -> np.ndarray:
    return 6.0 * q * q - 2.0 * c * q - 2.0


def reaction_lipschitz(c_min: float, c_max: float, n_samples: int = 401) -> float:
    """Bound max |f_q| over q in [-1, 1] for speeds in [c_min, c_max].

    f_q is affine in c, so the extremes over c sit at the endpoints; q is
    sampled on a fixed lattice.
    """
    q = np.linspace(-1.0, 1.0, n_samples)
    worst = 0.0
    for c in (c_min, c_max):
        worst = max(worst, float(np.abs(reaction_dq(q, np.full_like(q, c))).max()))
    return worst


def wave_equation_residual(model: BistableModel, r_samples, pts: np.ndarray) -> float:
    """Max residual of q_rr + c q_r - f(q) along the exact tanh profile.

    Uses the exact derivatives q_r = 1 - q^2, q_rr = -2 q (1 - q^2); the
    identity holds analytically, so the residual is rounding noise.
    """
    pts = _as_batch(pts)
    r = np.asarray(r_samples, dtype=float)
    c = model.wave_speed(pts)
    q = model.wave_profile(r, pts)
    qr = 1.0 - q * q
    qrr = -2.0 * q * qr
    res = qrr + c * qr - reaction_term(q, c)
    return float(np.abs(res).max())


def wave_front_initial(model: BistableModel, grid: Grid, s) -> ScalarField:
    """Initial data carrying the exact wave profile across the zero set of s.

    ``s`` is a signed-distance-like array (positive on the side that
    relaxes to +1); the returned field is q(s/eps, x), so the tracked
    front (the crossing through the unstable level) starts exactly on
    {s = 0} with no initial transient.
    """
    s = np.asarray(s, dtype=float).reshape(grid.shape)
    g = model.wave_profile(s.ravel() / model.epsilon, grid.points())
    return ScalarField(grid, g.reshape(grid.shape))


def constant_speed_model(speed: float, rho: float | None = None,
                         k: float = 0.25) -> VelocityModel:
    """A model whose mollified speed equals ``speed`` exactly everywhere.

    The interface is pushed far outside any finite domain, so the tanh
    ramp saturates and the n2 branch never contributes.
    """
    if not (speed > 0):
        raise SpecError("constant speed must be positive")
    if rho is None:
        rho = min(0.05, 0.5 * speed)
    return VelocityModel(
        n1=speed,
        n2=speed * 1.05 + 0.05,
        dtilde=far_interface(),
        rho=rho,
        k=k,
    )


def two_speed_model(n1: float, n2: float, interface: SpatialFunc | None = None,
                    rho: float = 0.05, k: float = 0.25) -> VelocityModel:
    """Piecewise medium: speed n1 where dtilde < 0, n2 where dtilde > 0."""
    if interface is None:
        interface = hyperplane_interface([1.0], 0.0)
    return VelocityModel(n1=n1, n2=n2, dtilde=interface, rho=rho, k=k)


# --- structure validation ---------------------------------------------------


@dataclass(frozen=True)
class CheckEntry:
    name: str
    passed: bool
    worst_value: float
    worst_point: tuple[float, ...]
    detail: str = ""


@dataclass(frozen=True)
class ModelReport:
    entries: tuple[CheckEntry, ...]
    notes: tuple[str, ...] = field(default_factory=tuple)

    @property
    def passed(self) -> bool:
        return all(e.passed for e in self.entries)

    def format(self) -> str:
        lines = []
        for e in self.entries:
            status = "pass" if e.passed else "FAIL"
            lines.append(
                "%-44s %s  worst=%.6g at %s%s"
                % (e.name, status, e.worst_value, _fmt_point(e.worst_point),
                   "  (%s)" % e.detail if e.detail else "")
            )
        for n in self.notes:
            lines.append("note: %s" % n)
        return "\n".join(lines)


def _fmt_point(p) -> str:
    return "(" + ", ".join("%.6g" % v for v in p) + ")"


def _worst(pts: np.ndarray, margin: np.ndarray) -> tuple[float, tuple[float, ...]]:
    i = int(np.argmin(margin))
    return float(margin[i]), tuple(float(v) for v in pts[i])


def validate_model(model: BistableModel, grid: Grid,
                   r_samples=None) -> ModelReport:
    """Check the structure inequalities of a model on a sample grid.

    Failures are report entries, never exceptions; the report also
    records the measured growth rate of the speed gradient against the
    mollification band width, which has no pass/fail threshold.
    """
    v = model.velocity
    pts = grid.points()
    if r_samples is None:
        r_samples = np.linspace(-5.0, 5.0, 41)
    entries = []

    n1 = v.n1(pts)
    n2 = v.n2(pts)
    c = model.base_speed(pts)
    cw = model.wave_speed(pts)
    m = 0.5 * cw

    margin = n1 - 2.0 * v.rho
    entries.append(CheckEntry("speed floor 2*rho <= n1", bool(margin.min() >= 0),
                              *_worst(pts, margin)))
    margin = n2 - n1
    entries.append(CheckEntry("speed ordering n1 < n2", bool(margin.min() > 0),
                              *_worst(pts, margin)))
    margin = 2.0 * (1.0 - v.rho) - n2
    entries.append(CheckEntry("speed ceiling n2 <= 2*(1-rho)", bool(margin.min() >= 0),
                              *_worst(pts, margin)))
    margin = np.minimum(c - n1, n2 - c)
    entries.append(CheckEntry("mollified speed inside [n1, n2]",
                              bool(margin.min() >= 0), *_worst(pts, margin)))
    if model.scaling == "one":
        margin = np.minimum(m - v.rho, (1.0 - v.rho) - m)
        entries.append(CheckEntry("unstable zero in [rho, 1-rho]",
                                  bool(margin.min() >= 0), *_worst(pts, margin)))
    else:
        margin = np.minimum(m, 1.0 - v.rho - m)
        entries.append(CheckEntry("unstable zero in (0, 1-rho]",
                                  bool(margin.min() > 0), *_worst(pts, margin)))

    # derivative of the reaction at the stable zeros: 4(1 -/+ c/2)
    margin = np.minimum(4.0 * (1.0 - 0.5 * cw), 4.0 * (1.0 + 0.5 * cw)) - 4.0 * v.rho
    entries.append(CheckEntry("reaction slope at stable zeros >= 4*rho",
                              bool(margin.min() >= 0), *_worst(pts, margin)))

    stride = max(1, pts.shape[0] // 256)
    sub = pts[::stride]
    try:
        slope = model.wave_profile_slope(np.asarray(r_samples)[:, None], sub)
        margin = slope.min(axis=0)
        entries.append(CheckEntry("wave profile increasing (slope > 0)",
                                  bool(margin.min() > 0), *_worst(sub, margin)))
    except SpecError:
        # speed saturated to |c| = 2 somewhere: the profile shift diverges
        worst = np.abs(model.wave_speed(sub))
        i = int(np.argmax(worst))
        entries.append(CheckEntry("wave profile increasing (slope > 0)", False,
                                  float(2.0 - worst[i]),
                                  tuple(float(x) for x in sub[i]),
                                  detail="wave speed saturated to 2"))

    lo, hi = model.one_sided_speeds(pts)
    tolr = 1e-12
    chain = np.minimum.reduce([lo - n1, c - lo, hi - c, n2 - hi])
    entries.append(CheckEntry("one-sided ordering n1 <= lo <= c <= hi <= n2",
                              bool(chain.min() >= -tolr), *_worst(pts, chain)))

    elo, ehi = v.envelopes(pts, snap=0.0)
    chain = np.minimum(elo - lo, hi - ehi)
    entries.append(CheckEntry("one-sided speeds bracket the envelopes",
                              bool(chain.min() >= -tolr), *_worst(pts, chain)))

    d = v.dtilde(pts).reshape(grid.shape)
    worst_lip = 0.0
    for axis in range(grid.dim):
        diff = np.abs(np.diff(d, axis=axis))
        worst_lip = max(worst_lip, float(diff.max()))
    entries.append(CheckEntry("dtilde 1-Lipschitz across cells (within 2h)",
                              worst_lip <= 3.0 * grid.h, worst_lip,
                              tuple(float(x) for x in pts[0])))

    notes = [_gradient_growth_note(model, grid)]
    return ModelReport(entries=tuple(entries), notes=tuple(notes))


def _gradient_growth_note(model: BistableModel, grid: Grid) -> str:
    pts = grid.points()
    c = model.base_speed(pts).reshape(grid.shape)
    g = 0.0
    for axis in range(grid.dim):
        g = max(g, float(np.abs(np.diff(c, axis=axis)).max()) / grid.h)
    w = model.band_width
    return ("measured max |grad c| = %.4g; band width eps^k = %.4g; "
            "product = %.4g (growth-rate data, no threshold)" % (g, w, g * w))


def _as_batch(pts: np.ndarray) -> np.ndarray:
    pts = np.asarray(pts, dtype=float)
    if pts.ndim == 1:
        pts = pts[None, :]
    return pts
