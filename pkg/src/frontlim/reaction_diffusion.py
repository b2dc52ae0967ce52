"""Explicit finite-difference solver for the bistable reaction-diffusion flow.

Two scalings of the same cubic-reaction equation are supported:

    scaling one:  u_t = eps * lap(u) - f(u, x) / eps
    scaling two:  u_t =       lap(u) - f(u, x) / eps^2

with forward Euler in time and the centered 3-point (1D) / 5-point (2D)
Laplacian. The time step is gated by the monotone-scheme bound

    dt * (2 * dim * D / h^2 + L_f / s) <= 1

(D the diffusion coefficient, s the reaction scale, L_f a Lipschitz
bound of the reaction on [-1, 1]), which implies both the diffusion and
reaction CFL bounds and makes the update order-preserving: the discrete
maximum principle and comparison hold exactly, not just stably.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass

import numpy as np
from scipy.spatial import cKDTree

from .errors import NumericalError, SpecError
from .fields import FrontTriple, Grid, ScalarField, zero_level_set
from .models import BistableModel, reaction_lipschitz, reaction_term

log = logging.getLogger(__name__)


def diffusion_and_scale(model: BistableModel) -> tuple[float, float]:
    """(diffusion coefficient, reaction scale) for the model's scaling."""
    if model.scaling == "one":
        return model.epsilon, model.epsilon
    return 1.0, model.epsilon ** 2


def cfl_bound(model: BistableModel, grid: Grid) -> float:
    """Largest dt for which the explicit update is monotone."""
    diff, scale = diffusion_and_scale(model)
    c = model.wave_speed(grid.points())
    lf = reaction_lipschitz(float(c.min()), float(c.max()))
    return 1.0 / (2.0 * grid.dim * diff / grid.h ** 2 + lf / scale)


def stable_dt(model: BistableModel, grid: Grid, safety: float = 0.9) -> float:
    return safety * cfl_bound(model, grid)


@dataclass(frozen=True)
class RDConfig:
    """Run parameters for the reaction-diffusion solver."""

    model: BistableModel
    grid: Grid
    dt: float
    t_end: float
    record_every: int = 1

    def __post_init__(self):
        if not (self.dt > 0 and self.t_end > 0):
            raise SpecError("dt and t_end must be positive")
        if self.record_every < 1:
            raise SpecError("record_every must be >= 1")
        resolved = 0.25 * min(self.model.epsilon, self.model.band_width)
        if self.grid.h > resolved * (1.0 + 1e-12):
            log.warning(
                "grid spacing h=%g does not resolve the wave width and the "
                "speed transition band (want h <= min(eps, eps^k)/4 = %g)",
                self.grid.h, resolved)
        bound = cfl_bound(self.model, self.grid)
        if self.dt > bound * (1.0 + 1e-12):
            diff, scale = diffusion_and_scale(self.model)
            raise SpecError(
                "CFL bound violated: dt=%g exceeds the monotone bound %g "
                "(requires dt <= h^2/(2*dim*D)=%g, dt <= s/L_f, and their "
                "harmonic combination; D=%g, s=%g, h=%g)"
                % (self.dt, bound, self.grid.h ** 2 / (2 * self.grid.dim * diff),
                   diff, scale, self.grid.h)
            )


@dataclass(frozen=True)
class RDTrajectory:
    """Recorded snapshots of a reaction-diffusion run.

    Fronts are tracked at the spatially varying unstable level c(x)/2,
    not at zero: the wave profile crosses its unstable zero exactly at
    the front, so tracking level zero would bias positions by O(eps).
    """

    config: RDConfig
    times: tuple[float, ...]
    snapshots: tuple[ScalarField, ...]
    unstable_level: np.ndarray

    def snapshot_at(self, t: float) -> tuple[float, ScalarField]:
        """Nearest recorded snapshot to time t."""
        i = int(np.argmin(np.abs(np.asarray(self.times) - t)))
        return self.times[i], self.snapshots[i]

    def tracked_field(self, t: float) -> ScalarField:
        ts, snap = self.snapshot_at(t)
        return ScalarField(self.config.grid, snap.values - self.unstable_level)


def _laplacian(u: np.ndarray, grid: Grid) -> np.ndarray:
    pad_mode = "wrap" if grid.boundary == "periodic" else "edge"
    pad = np.pad(u, 1, mode=pad_mode)
    if grid.dim == 1:
        lap = pad[2:] + pad[:-2] - 2.0 * u
    else:
        lap = (pad[2:, 1:-1] + pad[:-2, 1:-1] + pad[1:-1, 2:] + pad[1:-1, :-2]
               - 4.0 * u)
    return lap / grid.h ** 2


def run(config: RDConfig, g: ScalarField) -> RDTrajectory:
    """Evolve initial data g up to t_end, recording snapshots.

    Requires -1 <= g <= 1; the maximum principle then keeps every
    snapshot in [-1, 1]. Blow-up is checked every step so a bad
    configuration fails loudly instead of wasting a convergence run.
    """
    grid = config.grid
    if g.grid.shape != grid.shape:
        raise SpecError("initial data does not live on the configured grid")
    if g.min() < -1.0 or g.max() > 1.0:
        raise SpecError("initial data must take values in [-1, 1]")

    c = config.model.wave_speed(grid.points()).reshape(grid.shape)
    m = 0.5 * c
    diff, scale = diffusion_and_scale(config.model)

    n_steps = max(1, math.ceil(config.t_end / config.dt - 1e-12))
    u = g.values.copy()
    times = [0.0]
    snaps = [g]
    for step in range(1, n_steps + 1):
        dt = config.dt
        t = step * config.dt
        if t > config.t_end:
            dt = config.t_end - (step - 1) * config.dt
            t = config.t_end
        u = u + dt * (diff * _laplacian(u, grid) - reaction_term(u, c) / scale)
        if not np.isfinite(u).all():
            raise NumericalError(
                "rd solver produced non-finite values at step %d (t=%g)" % (step, t)
            )
        if step % config.record_every == 0 or step == n_steps:
            times.append(t)
            snaps.append(ScalarField(grid, u))
    return RDTrajectory(config=config, times=tuple(times), snapshots=tuple(snaps),
                        unstable_level=m)


def front_position(traj: RDTrajectory, t: float) -> FrontTriple:
    """Front at time t: zero set of u - c(x)/2 at the nearest snapshot."""
    return zero_level_set(traj.tracked_field(t))


def equilibrium_fraction(traj: RDTrajectory, t: float, front: FrontTriple,
                         margin: float, tol: float):
    """Fractions of near-equilibrium cells away from the front.

    Counts cells farther than ``margin`` from ``front`` inside the
    positive (negative) region with |u - 1| < tol (|u + 1| < tol). A
    region with no test cells reports None rather than erroring.
    """
    if margin < 2.0 * traj.config.grid.h:
        raise SpecError("equilibrium_fraction needs margin >= 2h")
    _, snap = traj.snapshot_at(t)
    grid = traj.config.grid
    if front.is_empty:
        dist = np.full(grid.shape, np.inf)
    else:
        dist = cKDTree(front.gamma).query(grid.points())[0].reshape(grid.shape)
    away = dist > margin
    out = []
    for region, target in ((front.d_plus, 1.0), (front.d_minus, -1.0)):
        cells = region & away
        if not cells.any():
            out.append(None)
            continue
        good = np.abs(snap.values[cells] - target) < tol
        out.append(float(np.count_nonzero(good)) / float(np.count_nonzero(cells)))
    return tuple(out)


def front_speed(traj: RDTrajectory, t_start: float, t_end: float) -> float:
    """Least-squares front speed from 1D front positions in [t_start, t_end]."""
    grid = traj.config.grid
    if grid.dim != 1:
        raise SpecError("front_speed is defined for 1D trajectories")
    ts, xs = [], []
    for t, snap in zip(traj.times, traj.snapshots):
        if t < t_start - 1e-12 or t > t_end + 1e-12:
            continue
        triple = zero_level_set(ScalarField(grid, snap.values - traj.unstable_level))
        if triple.is_empty:
            continue
        ts.append(t)
        xs.append(float(triple.gamma[:, 0].mean()))
    if len(ts) < 2:
        raise SpecError("front_speed needs at least two recorded fronts in the window")
    slope = np.polyfit(np.asarray(ts), np.asarray(xs), 1)[0]
    return float(slope)
