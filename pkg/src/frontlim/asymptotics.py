"""Convergence harness: epsilon ladders, empirical half-limits, scaling fits.

Runs the reaction-diffusion solver down a decreasing ladder of interface
widths, measures how fast the tracked front approaches a reference
front (arrival-time or level-set), estimates the equilibrium plateaus
and the interface generation time, and fits the generation-time scaling
law: linear in eps for the first scaling, eps^2 |ln eps| for the second.
"""

from __future__ import annotations

import logging
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np
from scipy import ndimage

from . import reaction_diffusion as rd
from .arrival import _front_seed, arrival_time, lower_speed_cells
from .errors import NumericalError, SpecError
from .fields import Grid, ScalarField, hausdorff_distance, signed_distance, zero_level_set
from .models import BistableModel, VelocityModel

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class EpsilonLadder:
    """Decreasing widths sharing one velocity model and one domain.

    The grid refines with the width: h <= min(eps/4, eps^k/4) so both
    the wave profile and the speed transition band stay resolved.
    """

    velocity: VelocityModel
    epsilons: tuple[float, ...]
    origin: tuple[float, ...]
    lengths: tuple[float, ...]
    scaling: str = "one"
    boundary: str = "zero-normal-derivative"
    h_max: float | None = None

    def __post_init__(self):
        eps = tuple(float(e) for e in self.epsilons)
        object.__setattr__(self, "epsilons", eps)
        object.__setattr__(self, "origin",
                           tuple(float(v) for v in np.atleast_1d(self.origin)))
        object.__setattr__(self, "lengths",
                           tuple(float(v) for v in np.atleast_1d(self.lengths)))
        if len(eps) < 3:
            raise SpecError("an epsilon ladder needs at least 3 entries")
        if any(e <= 0 for e in eps):
            raise SpecError("ladder epsilons must be positive")
        if any(a <= b for a, b in zip(eps, eps[1:])):
            raise SpecError("ladder epsilons must be strictly decreasing")
        if len(self.origin) != len(self.lengths):
            raise SpecError("ladder origin and lengths must have the same length")

    def model_for(self, eps: float) -> BistableModel:
        return BistableModel(velocity=self.velocity, epsilon=eps,
                             scaling=self.scaling)

    def grid_for(self, eps: float) -> Grid:
        h_target = min(eps / 4.0, eps ** self.velocity.k / 4.0)
        if self.h_max is not None:
            h_target = min(h_target, self.h_max)
        n = max(int(math.ceil(self.lengths[0] / h_target)) + 1, 3)
        h = self.lengths[0] / (n - 1)
        extents = [n]
        for L in self.lengths[1:]:
            extents.append(max(int(round(L / h)) + 1, 3))
        return Grid(origin=self.origin, h=h, extents=tuple(extents),
                    boundary=self.boundary)


def _resample_nearest(f: ScalarField, target: Grid) -> np.ndarray:
    """Nearest-neighbor resample onto a coarser grid over the same domain.

    Nearest-neighbor on purpose: interpolation would invent new extrema
    and corrupt min/max half-limits.
    """
    src = f.grid
    if src.dim != target.dim:
        raise SpecError("mismatched domains: field dimensions differ")
    idx = []
    for a in range(src.dim):
        xc = target.axis_coords(a)
        lo = src.origin[a] - 0.5 * src.h
        hi = src.origin[a] + (src.extents[a] - 0.5) * src.h
        if xc[0] < lo - 1e-9 or xc[-1] > hi + 1e-9:
            raise SpecError("mismatched domains: target grid leaves the source domain")
        i = np.rint((xc - src.origin[a]) / src.h).astype(int)
        idx.append(np.clip(i, 0, src.extents[a] - 1))
    if src.dim == 1:
        return f.values[idx[0]]
    return f.values[np.ix_(idx[0], idx[1])]


def relaxed_limits(entries, radius: float | None = None):
    """Empirical half-limits of a family of fields at one fixed time.

    ``entries`` is an iterable of (eps, ScalarField) sharing a physical
    domain. The discrete proxy takes the min/max over the two smallest
    widths and a spatial window of the given radius (default two cells
    of the coarsest grid), on the coarsest grid of the family.
    """
    items = sorted(entries, key=lambda kv: kv[0])
    if len(items) < 2:
        raise SpecError("relaxed limits need at least two epsilon entries")
    coarse = max((f.grid for _, f in items), key=lambda g: g.h)
    if radius is None:
        radius = 2.0 * coarse.h
    half = max(1, int(round(radius / coarse.h)))
    size = 2 * half + 1

    finest_two = [f for _, f in items[:2]]
    lo = None
    hi = None
    for f in finest_two:
        v = _resample_nearest(f, coarse)
        vmin = ndimage.minimum_filter(v, size=size, mode="nearest")
        vmax = ndimage.maximum_filter(v, size=size, mode="nearest")
        lo = vmin if lo is None else np.minimum(lo, vmin)
        hi = vmax if hi is None else np.maximum(hi, vmax)
    return ScalarField(coarse, lo), ScalarField(coarse, hi)


def scaled_offset(f: ScalarField, center: float, eps: float) -> ScalarField:
    """(u - center) / eps, the second-scaling input to the half-limits."""
    return ScalarField(f.grid, (f.values - center) / eps)


def half_limit_agreement(entries) -> float:
    """Sup-norm gap between the two finest-width fields, coarsest grid.

    The empirical half-limits only support a verdict when the finest two
    entries already agree; callers should gate any thresholding of the
    limits on this number being below their tolerance.
    """
    items = sorted(entries, key=lambda kv: kv[0])
    if len(items) < 2:
        raise SpecError("half-limit agreement needs at least two entries")
    coarse = max((f.grid for _, f in items), key=lambda g: g.h)
    a = _resample_nearest(items[0][1], coarse)
    b = _resample_nearest(items[1][1], coarse)
    return float(np.abs(a - b).max())


def phase_regions(liminf_field: ScalarField, limsup_field: ScalarField,
                  tol: float, scaling: str = "one"):
    """Masks of the regions converged to the two stable equilibria.

    First scaling: liminf >= 1 - tol and limsup <= -1 + tol. Second
    scaling expects the (u -/+ 1)/eps inputs and thresholds them around
    zero. The masks are disjoint whenever liminf <= limsup and tol < 1.
    """
    if not (0 < tol < 1):
        raise SpecError("phase_regions needs tol in (0, 1)")
    if liminf_field.grid.shape != limsup_field.grid.shape:
        raise SpecError("mismatched domains between half-limit fields")
    if scaling == "one":
        omega1 = liminf_field.values >= 1.0 - tol
        omega2 = limsup_field.values <= -1.0 + tol
    elif scaling == "two":
        omega1 = liminf_field.values >= -tol
        omega2 = limsup_field.values <= tol
    else:
        raise SpecError("scaling must be 'one' or 'two'")
    return omega1, omega2


# --- interface generation ---------------------------------------------------


@dataclass(frozen=True)
class GenerationResult:
    """First time the solution plateaus near +1 deep inside the + phase."""

    time: float | None
    eps: float
    scaling: str
    beta: float
    threshold: float
    scale: float
    region_cells: int

    @property
    def ratio(self) -> float | None:
        if self.time is None:
            return None
        return self.time / self.scale


def generation_scale(eps: float, scaling: str) -> float:
    """The predicted generation-time scale: eps, or eps^2 |ln eps|."""
    if scaling == "one":
        return eps
    return eps * eps * abs(math.log(eps))


def generation_time(model: BistableModel, g: ScalarField, beta: float,
                    dt: float | None = None, t_end: float | None = None,
                    record_every: int = 1) -> GenerationResult:
    """Measure the interface generation time of initial data g.

    The test region is {d0 >= beta} where d0 is the signed distance to
    the initial front (the crossing of g through the upper unstable
    level for the first scaling, through zero for the second); the
    measured time is the first snapshot at which u >= 1 - beta
    (first scaling) or u >= 1 - beta*eps (second) on the whole region.
    """
    if not (beta > 0):
        raise SpecError("generation_time needs beta > 0")
    grid = g.grid
    pts = grid.points()
    if model.scaling == "one":
        _, upper = model.velocity.envelopes(pts, snap=0.5 * grid.h)
        level = g.values - (0.5 * upper).reshape(grid.shape)
        threshold = 1.0 - beta
    else:
        level = g.values.copy()
        threshold = 1.0 - beta * model.epsilon
    if (level < 0).all():
        raise SpecError("generation_time needs initial data above the front level "
                        "somewhere")
    if (level > 0).all():
        # no front at all: the whole domain is deep inside the + phase
        region = np.ones(grid.shape, dtype=bool)
    else:
        d0 = signed_distance(ScalarField(grid, level))
        region = d0.values >= beta
    if not region.any():
        raise SpecError("generation-time region {d0 >= beta} is empty")
    if float(level[region].min()) <= 0:
        raise SpecError("initial data must exceed the unstable level on the region")

    scale = generation_scale(model.epsilon, model.scaling)
    if dt is None:
        dt = rd.stable_dt(model, grid)
    if t_end is None:
        t_end = 12.0 * scale
    config = rd.RDConfig(model=model, grid=grid, dt=dt, t_end=t_end,
                         record_every=record_every)
    traj = rd.run(config, g)
    found = None
    for t, snap in zip(traj.times, traj.snapshots):
        if float(snap.values[region].min()) >= threshold:
            found = t
            break
    return GenerationResult(time=found, eps=model.epsilon, scaling=model.scaling,
                            beta=beta, threshold=threshold, scale=scale,
                            region_cells=int(np.count_nonzero(region)))


# --- reaction ODE -----------------------------------------------------------


def reaction_ode(xi: float, x, model: BistableModel, tau_end: float,
                 dtau: float | None = None):
    """RK4 trajectory of chi' = -f(chi, x) from chi(0) = xi.

    Trajectories relax monotonically to the stable equilibrium of the
    basin containing xi and stay inside [-C, C] for |xi| <= C.
    """
    if not (tau_end > 0):
        raise SpecError("reaction_ode needs tau_end > 0")
    pts = np.atleast_1d(np.asarray(x, dtype=float))[None, :]
    c = float(model.wave_speed(pts)[0])

    cap = max(1.0, abs(xi))
    qs = np.linspace(-cap, cap, 101)
    lf = float(np.abs(6.0 * qs * qs - 2.0 * c * qs - 2.0).max())
    if dtau is None:
        dtau = min(tau_end, 0.1 / max(lf, 1e-6))
    n = max(1, int(math.ceil(tau_end / dtau - 1e-12)))
    dtau = tau_end / n

    def f(q):
        return 2.0 * (q - 0.5 * c) * (q * q - 1.0)

    taus = np.empty(n + 1)
    chis = np.empty(n + 1)
    taus[0] = 0.0
    chis[0] = xi
    q = float(xi)
    for i in range(1, n + 1):
        k1 = -f(q)
        k2 = -f(q + 0.5 * dtau * k1)
        k3 = -f(q + 0.5 * dtau * k2)
        k4 = -f(q + dtau * k3)
        q = q + dtau / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
        if not math.isfinite(q) or abs(q) > cap + 1.0:
            raise NumericalError(
                "reaction ODE step unstable at tau=%g; retry with dtau <= %g"
                % (i * dtau, dtau / 4.0)
            )
        taus[i] = i * dtau
        chis[i] = q
    return taus, chis


# --- convergence study ------------------------------------------------------


class ArrivalReference:
    """Reference front positions from one seeded arrival field.

    Built once from reference initial data on its own grid; calling it
    with a time returns the front point set of the reconstructed
    level-set field at that time.
    """

    def __init__(self, u0: ScalarField, velocity, neighbors: int = 8):
        self.u0 = u0
        speed = lower_speed_cells(velocity, u0.grid)
        if speed.min() <= 0:
            raise SpecError("arrival reference requires a positive speed floor")
        self._speed = speed
        self._velocity = velocity
        self._neighbors = neighbors
        self._T = None

    def _times(self):
        if self._T is None:
            seeded = _front_seed(self.u0, 1.0 / self._speed)
            if seeded is None:
                raise SpecError("arrival reference needs initial data with a front")
            mask, t0 = seeded
            self._T = arrival_time(mask, self._velocity, self.u0.grid,
                                   neighbors=self._neighbors, seed_times=t0).times
        return self._T

    def field_at(self, t: float) -> ScalarField:
        T = self._times()
        w = np.where(self.u0.values > 0, T - t, -(T + t)) * self._speed
        return ScalarField(self.u0.grid, w)

    def __call__(self, t: float) -> np.ndarray:
        return zero_level_set(self.field_at(t)).gamma


@dataclass(frozen=True)
class LadderEntry:
    eps: float
    h: float
    distances: tuple[float, ...]
    plus_fractions: tuple[float | None, ...]
    minus_fractions: tuple[float | None, ...]
    generation: GenerationResult


@dataclass(frozen=True)
class ConvergenceReport:
    """Per-width metrics of a ladder against a fixed reference front."""

    times: tuple[float, ...]
    entries: tuple[LadderEntry, ...]
    scaling: str
    beta: float
    tol: float

    def distances_at(self, t_index: int) -> list[float]:
        return [e.distances[t_index] for e in self.entries]

    @property
    def hausdorff_strictly_decreasing(self) -> tuple[bool, ...]:
        out = []
        for j in range(len(self.times)):
            d = self.distances_at(j)
            ok = all(a > b for a, b in zip(d, d[1:])) and all(map(math.isfinite, d))
            out.append(ok)
        return tuple(out)

    def hausdorff_decreasing_within(self, slack: float) -> tuple[bool, ...]:
        """Nonincreasing allowing one inversion of at most ``slack``."""
        out = []
        for j in range(len(self.times)):
            d = self.distances_at(j)
            if not all(map(math.isfinite, d)):
                out.append(False)
                continue
            inversions = [max(0.0, b - a) for a, b in zip(d, d[1:])]
            bad = [v for v in inversions if v > 0]
            out.append(len(bad) <= 1 and all(v <= slack for v in bad))
        return tuple(out)

    @property
    def generation_fit_slope(self) -> float | None:
        """Least-squares slope of generation time against its scale."""
        xs, ys = [], []
        for e in self.entries:
            if e.generation.time is not None:
                xs.append(e.generation.scale)
                ys.append(e.generation.time)
        if len(xs) < 2:
            return None
        xs = np.asarray(xs)
        ys = np.asarray(ys)
        return float((xs * ys).sum() / (xs * xs).sum())

    @property
    def generation_ratios(self) -> tuple[float | None, ...]:
        return tuple(e.generation.ratio for e in self.entries)

    def to_dict(self) -> dict:
        return {
            "times": list(self.times),
            "scaling": self.scaling,
            "beta": self.beta,
            "tol": self.tol,
            "entries": [
                {
                    "eps": e.eps,
                    "h": e.h,
                    "distances": list(e.distances),
                    "plus_fractions": list(e.plus_fractions),
                    "minus_fractions": list(e.minus_fractions),
                    "generation_time": e.generation.time,
                    "generation_scale": e.generation.scale,
                    "generation_ratio": e.generation.ratio,
                }
                for e in self.entries
            ],
            "hausdorff_strictly_decreasing":
                list(self.hausdorff_strictly_decreasing),
            "generation_fit_slope": self.generation_fit_slope,
        }


def boundary_clearance_warning(grid: Grid, front_points: np.ndarray,
                               t_max: float, max_speed: float) -> None:
    """Warn when the front can plausibly reach the domain boundary.

    No principled box-size bound is available, so the harness records
    the influence radius and lets the user judge.
    """
    if front_points.size == 0:
        return
    lo = np.asarray(grid.origin)
    hi = lo + (np.asarray(grid.extents) - 1) * grid.h
    margin = min(float((front_points - lo).min()),
                 float((hi - front_points).min()))
    influence = max_speed * t_max + 4.0 * grid.h
    if margin < influence:
        log.warning(
            "front within %.3g of the boundary but influence radius is %.3g; "
            "results near the boundary may be contaminated", margin, influence
        )


def run_convergence_study(ladder: EpsilonLadder, initial, reference,
                          times, beta: float = 0.1, tol: float = 0.1,
                          jobs: int = 1) -> ConvergenceReport:
    """Ladder of reaction-diffusion runs measured against a reference front.

    ``initial(model, grid)`` builds the initial data for each width;
    ``reference(t)`` returns the reference front point set. Solver
    failures propagate annotated with the width that failed.
    """
    times = tuple(float(t) for t in times)
    if not times:
        raise SpecError("convergence study needs at least one time")

    def run_entry(eps: float) -> LadderEntry:
        model = ladder.model_for(eps)
        grid = ladder.grid_for(eps)
        g = initial(model, grid)
        dt = rd.stable_dt(model, grid)
        vmax = float(model.velocity.n2(grid.points()).max())
        stride = max(1, int(grid.h / (2.0 * vmax * dt)))
        config = rd.RDConfig(model=model, grid=grid, dt=dt, t_end=max(times),
                             record_every=stride)
        try:
            traj = rd.run(config, g)
        except (SpecError, NumericalError) as exc:
            raise type(exc)("eps=%g: %s" % (eps, exc)) from exc
        g_front = zero_level_set(traj.tracked_field(0.0))
        boundary_clearance_warning(grid, g_front.gamma, max(times), vmax)

        distances, plus, minus = [], [], []
        margin = max(5.0 * eps, 4.0 * grid.h)
        for t in times:
            front = rd.front_position(traj, t)
            ref_pts = reference(t)
            if front.is_empty or ref_pts.shape[0] == 0:
                distances.append(math.nan)
            else:
                distances.append(hausdorff_distance(front.gamma, ref_pts))
            pf, mf = rd.equilibrium_fraction(traj, t, front, margin, tol)
            plus.append(pf)
            minus.append(mf)
        gen = generation_time(model, g, beta)
        return LadderEntry(eps=eps, h=grid.h, distances=tuple(distances),
                           plus_fractions=tuple(plus), minus_fractions=tuple(minus),
                           generation=gen)

    if jobs > 1:
        with ThreadPoolExecutor(max_workers=jobs) as pool:
            entries = list(pool.map(run_entry, ladder.epsilons))
    else:
        entries = [run_entry(e) for e in ladder.epsilons]
    return ConvergenceReport(times=times, entries=tuple(entries),
                             scaling=ladder.scaling, beta=beta, tol=tol)
