"""Random-waypoint trace generators.

A walker repeatedly picks a waypoint and a speed, walks toward the waypoint
emitting one position every ``step_dt_s`` and pauses there, emitting the
same position for every whole ``step_dt_s`` of the pause. The last step of
a leg lands exactly on the waypoint. Generation stops after ``n_steps``
positions, the first of which is the start position.
"""

import logging
import math
from typing import Callable, Optional

import numpy as np

from apps.core.exceptions import ConfigError
from apps.core.rng import derive_seed, make_rng

from .schemas import GammaSpeed, RwpConfig, Trace, TraceModel

logger = logging.getLogger(__name__)

SpeedSampler = Callable[[np.random.Generator], float]


def _uniform_point(rng: np.random.Generator, cfg: RwpConfig) -> np.ndarray:
    return np.array([rng.uniform(0.0, cfg.bed.width_m), rng.uniform(0.0, cfg.bed.height_m)])


def _leg(start: np.ndarray, waypoint: np.ndarray, step_m: float, limit: int) -> np.ndarray:
    """Positions after each step from ``start`` to ``waypoint`` (at most ``limit``)."""
    delta = waypoint - start
    distance = float(np.hypot(delta[0], delta[1]))
    if distance == 0.0 or limit <= 0:
        return np.empty((0, 2))
    full = int(distance // step_m)
    travelled = np.arange(1, min(full, limit) + 1, dtype=np.float64) * step_m
    positions = start + travelled[:, None] * (delta / distance)
    if len(positions) < limit and (full == 0 or travelled[-1] < distance):
        positions = np.vstack([positions, waypoint])
    elif len(positions) and travelled[-1] >= distance:
        positions[-1] = waypoint
    return positions


def boundary_distance(cfg: RwpConfig, start: np.ndarray, heading: float) -> float:
    """Distance from ``start`` along ``heading`` (radians) to the bed edge."""
    direction = np.array([math.cos(heading), math.sin(heading)])
    limits = []
    for axis, extent in ((0, cfg.bed.width_m), (1, cfg.bed.height_m)):
        if direction[axis] > 0:
            limits.append((extent - start[axis]) / direction[axis])
        elif direction[axis] < 0:
            limits.append(-start[axis] / direction[axis])
    return max(0.0, min(limits))


def _walk(
    cfg: RwpConfig,
    model: TraceModel,
    speed: SpeedSampler,
    first_waypoint: Optional[Callable[[np.random.Generator, np.ndarray], np.ndarray]] = None,
) -> Trace:
    rng = make_rng(cfg.seed)
    width, height = cfg.bed.width_m, cfg.bed.height_m
    position = _uniform_point(rng, cfg)

    chunks = [position[None, :]]
    emitted = 1
    waypoints, speeds = [], []
    while emitted < cfg.n_steps:
        if first_waypoint is not None and not waypoints:
            waypoint = first_waypoint(rng, position)
        else:
            waypoint = _uniform_point(rng, cfg)
        leg_speed = speed(rng)
        waypoints.append(waypoint)
        speeds.append(leg_speed)

        moving = _leg(position, waypoint, leg_speed * cfg.step_dt_s, cfg.n_steps - emitted)
        chunks.append(moving)
        emitted += len(moving)
        if len(moving):
            position = moving[-1]

        pause_s = rng.uniform(0.0, cfg.max_pause_s) if cfg.max_pause_s > 0 else 0.0
        pause_steps = min(int(pause_s // cfg.step_dt_s), cfg.n_steps - emitted)
        if pause_steps > 0:
            chunks.append(np.repeat(position[None, :], pause_steps, axis=0))
            emitted += pause_steps

    positions = np.clip(np.vstack(chunks)[: cfg.n_steps], 0.0, [width, height])
    return Trace(
        positions=positions,
        seed=cfg.seed,
        model=model,
        waypoints=np.array(waypoints).reshape(-1, 2),
        leg_speeds=np.array(speeds, dtype=np.float64),
    )


def rwp_generate(cfg: RwpConfig) -> Trace:
    """Classic random waypoint: uniform waypoints, uniform [v_min, v_max] leg speeds."""
    return _walk(cfg, TraceModel.RWP, lambda rng: rng.uniform(cfg.v_min, cfg.v_max))


def gamma_rwp_generate(cfg: RwpConfig, shape_k: float, scale_theta: float) -> Trace:
    """
    Random waypoint with Gamma(shape_k, scale_theta) leg speeds.

    The first leg heads in a uniform direction from the uniform start, toward
    a point a uniform fraction of the way to the bed edge; later waypoints are
    uniform. ``v_min``/``v_max`` are not used by this variant.
    """
    if not (shape_k > 0 and scale_theta > 0):
        raise ConfigError(
            f"Gamma parameters must be positive, got k={shape_k}, theta={scale_theta}"
        )

    def speed(rng: np.random.Generator) -> float:
        value = 0.0
        while value <= 0.0:
            value = rng.gamma(shape_k, scale_theta)
        return float(value)

    def first_waypoint(rng: np.random.Generator, start: np.ndarray) -> np.ndarray:
        heading = rng.uniform(0.0, 2.0 * math.pi)
        reach = rng.uniform(0.0, 1.0) * boundary_distance(cfg, start, heading)
        return start + reach * np.array([math.cos(heading), math.sin(heading)])

    return _walk(cfg, TraceModel.GAMMA, speed, first_waypoint)


def generate_traces(
    cfg: RwpConfig,
    count: int,
    model: TraceModel = TraceModel.RWP,
    gamma: Optional[GammaSpeed] = None,
) -> list[Trace]:
    """``count`` traces; trace ``i`` uses seed ``cfg.seed + i``."""
    if count <= 0:
        raise ConfigError(f"trace count must be positive, got {count}")
    traces = []
    for index in range(count):
        trace_cfg = cfg.model_copy(update={"seed": derive_seed(cfg.seed, index)})
        if model is TraceModel.GAMMA:
            gamma = gamma or GammaSpeed()
            traces.append(gamma_rwp_generate(trace_cfg, gamma.shape_k, gamma.scale_theta))
        else:
            traces.append(rwp_generate(trace_cfg))
    logger.info(
        "Generated traces",
        extra={"extra": {"model": model.value, "count": count, "steps": cfg.n_steps,
                         "bed": cfg.bed.label(), "seed": cfg.seed}},
    )
    return traces
