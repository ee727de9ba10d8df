"""Desk-scale 2D kinematic simulator for the soccer-like toy domain.

A point robot (position p_r, velocity v_r, acceleration-capped) pursues a
ball (position p_b, velocity v_b) that decelerates under linear rolling
friction. Each step the policy picks Goto (drive at the ball, matching its
velocity), Inter (drive to a predicted interception point and arrive at
rest), or Kick (strike now). A kick fired within both success thresholds
(max distance, max relative speed) ends the episode successfully; fired
outside them it is a miss and the episode fails; otherwise episodes time
out.

The interception planner predicts the ball with the *calibrated* friction
coefficient in SimConfig.planner_friction, which perturb() deliberately
does not touch: scaling the true ball_friction manufactures a controlled
model/reality gap for repair experiments, exactly like a controller tuned
in simulation and deployed on a different surface.

Physics is deliberately minimal; the artifact tests synthesis, not
robotics fidelity. Everything is deterministic given the config seed.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace

import numpy as np

from .dsl import Policy
from .interp import WorldState, eval_policy
from .synth import Demonstration

__all__ = [
    "SimConfig",
    "Episode",
    "run_episode",
    "record_demos",
    "grid_starts",
    "score",
    "ScoreResult",
    "perturb",
]

# Control-law constants: braking margin on the sqrt approach profile and
# the velocity-tracking time constant. Calibrated once with the reference
# policy; not part of the experiment surface.
_BRAKE_MARGIN = 0.8
_CONTROL_TAU = 0.25

# The drivetrain feels the same surface friction as the ball (as a ratio of
# the ball's rolling coefficient), so a rougher surface slows both.
_ROBOT_DRAG = 2.0


@dataclass(frozen=True)
class SimConfig:
    timestep: float = 0.05
    max_steps: int = 240
    robot_accel: float = 0.30
    ball_friction: float = 0.25
    planner_friction: float = 0.25
    kick_dist: float = 0.50
    kick_speed: float = 0.60
    seed: int = 0
    friction_scale: float = 1.0
    accel_scale: float = 1.0

    def __post_init__(self):
        if self.timestep <= 0:
            raise ValueError("timestep must be positive")
        if self.kick_dist <= 0 or self.kick_speed <= 0:
            raise ValueError("kick thresholds must be positive")


@dataclass(frozen=True)
class Episode:
    initial: WorldState
    trace: tuple  # ((WorldState, action), ...)
    outcome: str  # "success" | "failure" | "timeout"


def perturb(cfg: SimConfig, friction=1.0, accel=1.0) -> SimConfig:
    """Scale the true ball friction and the robot acceleration limit.
    The planner's calibrated friction model is left untouched."""
    if friction <= 0 or accel <= 0:
        raise ValueError("perturbation factors must be positive")
    return replace(cfg,
                   ball_friction=cfg.ball_friction * friction,
                   robot_accel=cfg.robot_accel * accel,
                   friction_scale=cfg.friction_scale * friction,
                   accel_scale=cfg.accel_scale * accel)


def _ball_future(p_b, v_b, k, friction, dt):
    """Ball position after k steps of move-then-decay integration: the
    geometric sum of per-step displacements, exact for the discrete model."""
    m = max(0.0, 1.0 - friction * dt)
    if m >= 1.0:
        travel = dt * k
    else:
        travel = dt * (1.0 - m ** k) / (1.0 - m)
    return (p_b[0] + v_b[0] * travel, p_b[1] + v_b[1] * travel)


def _intercept_point(p_r, v_r, p_b, v_b, cfg: SimConfig):
    """Closest point on the ball's predicted forward path that the robot
    can reach under its acceleration cap, found by bisection on time."""
    speed = math.hypot(v_r[0], v_r[1])
    a = cfg.robot_accel

    def unreachable(k):
        bp = _ball_future(p_b, v_b, k, cfg.planner_friction, cfg.timestep)
        t = k * cfg.timestep
        reach = speed * t + 0.5 * a * t * t
        return math.hypot(bp[0] - p_r[0], bp[1] - p_r[1]) > reach

    horizon = cfg.max_steps
    if not unreachable(0):
        return p_b
    if unreachable(horizon):
        return _ball_future(p_b, v_b, horizon, cfg.planner_friction,
                            cfg.timestep)
    lo, hi = 0, horizon
    while hi - lo > 1:
        mid = (lo + hi) // 2
        if unreachable(mid):
            lo = mid
        else:
            hi = mid
    return _ball_future(p_b, v_b, hi, cfg.planner_friction, cfg.timestep)


def _control(p_r, v_r, target, v_target, cfg: SimConfig):
    """Acceleration command: sqrt braking profile toward the target plus
    feedforward of the target's velocity, clamped to the accel limit."""
    dx = (target[0] - p_r[0], target[1] - p_r[1])
    d = math.hypot(dx[0], dx[1])
    if d > 1e-12:
        cruise = _BRAKE_MARGIN * math.sqrt(2.0 * cfg.robot_accel * d)
        v_des = (v_target[0] + dx[0] / d * cruise,
                 v_target[1] + dx[1] / d * cruise)
    else:
        v_des = v_target
    ax = (v_des[0] - v_r[0]) / _CONTROL_TAU
    ay = (v_des[1] - v_r[1]) / _CONTROL_TAU
    mag = math.hypot(ax, ay)
    if mag > cfg.robot_accel:
        scale = cfg.robot_accel / mag
        ax, ay = ax * scale, ay * scale
    return ax, ay


def run_episode(policy: Policy, cfg: SimConfig, init: WorldState) -> Episode:
    """Run `policy` in closed loop from `init` until a kick, a miss, or
    timeout. The previous action is fed back as a_s each step."""
    p_r = tuple(init.bindings["p_r"])
    v_r = tuple(init.bindings["v_r"])
    p_b = tuple(init.bindings["p_b"])
    v_b = tuple(init.bindings["v_b"])
    prev = init.start_action
    dt = cfg.timestep
    trace = []
    outcome = "timeout"
    for _ in range(cfg.max_steps):
        w = WorldState(prev, {"p_r": p_r, "v_r": v_r, "p_b": p_b, "v_b": v_b})
        action = eval_policy(policy, w)
        trace.append((w, action))
        if action == "Kick":
            close = math.hypot(p_r[0] - p_b[0], p_r[1] - p_b[1]) <= cfg.kick_dist
            matched = math.hypot(v_r[0] - v_b[0],
                                 v_r[1] - v_b[1]) <= cfg.kick_speed
            outcome = "success" if (close and matched) else "failure"
            break
        if action == "Inter":
            target = _intercept_point(p_r, v_r, p_b, v_b, cfg)
            v_target = (0.0, 0.0)
        else:
            target = p_b
            v_target = v_b
        ax, ay = _control(p_r, v_r, target, v_target, cfg)
        drag = max(0.0, 1.0 - cfg.ball_friction * _ROBOT_DRAG * dt)
        v_r = ((v_r[0] + ax * dt) * drag, (v_r[1] + ay * dt) * drag)
        p_r = (p_r[0] + v_r[0] * dt, p_r[1] + v_r[1] * dt)
        p_b = (p_b[0] + v_b[0] * dt, p_b[1] + v_b[1] * dt)
        decay = max(0.0, 1.0 - cfg.ball_friction * dt)
        v_b = (v_b[0] * decay, v_b[1] * decay)
        prev = action
    return Episode(init, tuple(trace), outcome)


def record_demos(policy: Policy, cfg: SimConfig, starts, stride=1):
    """One demonstration per recorded step of each episode: the previous
    action, the world, and the action the policy chose. A stride of s keeps
    every s-th step."""
    demos = []
    for init in starts:
        episode = run_episode(policy, cfg, init)
        for i, (w, action) in enumerate(episode.trace):
            if i % stride == 0:
                demos.append(Demonstration(w.start_action, w, action))
    return demos


def grid_starts(cfg: SimConfig, nx=20, ny=15,
                x_range=(0.5, 2.4), y_range=(-0.7, 0.7),
                speed_range=(0.15, 0.40), default_action="Goto"):
    """Initial states over an nx-by-ny grid of ball positions. The robot
    starts at rest at the origin; ball speed and heading per cell come from
    the config seed, so a grid is reproducible bit-for-bit."""
    rng = np.random.default_rng(cfg.seed)
    starts = []
    xs = np.linspace(x_range[0], x_range[1], nx)
    ys = np.linspace(y_range[0], y_range[1], ny)
    for x in xs:
        for y in ys:
            angle = rng.uniform(0.0, 2.0 * math.pi)
            speed = rng.uniform(*speed_range)
            starts.append(WorldState(default_action, {
                "p_r": (0.0, 0.0),
                "v_r": (0.0, 0.0),
                "p_b": (float(x), float(y)),
                "v_b": (speed * math.cos(angle), speed * math.sin(angle)),
            }))
    return starts


@dataclass(frozen=True)
class ScoreResult:
    rate: float
    cells: tuple  # ((x, y, outcome), ...) per start, in order


def score(policy: Policy, cfg: SimConfig, starts, jobs=1) -> ScoreResult:
    """Fraction of successful episodes over the given starts, plus per-cell
    outcomes suitable for heatmap plotting."""
    if jobs > 1:
        episodes = _run_parallel(policy, cfg, starts, jobs)
    else:
        episodes = [run_episode(policy, cfg, s) for s in starts]
    cells = []
    wins = 0
    for s, ep in zip(starts, episodes):
        ball = s.bindings["p_b"]
        wins += ep.outcome == "success"
        cells.append((ball[0], ball[1], ep.outcome))
    rate = wins / len(starts) if starts else 0.0
    return ScoreResult(rate, tuple(cells))


def _run_parallel(policy, cfg, starts, jobs):
    from concurrent.futures import ProcessPoolExecutor

    with ProcessPoolExecutor(max_workers=jobs) as pool:
        return list(pool.map(_episode_task,
                             ((policy, cfg, s) for s in starts),
                             chunksize=max(1, len(starts) // (jobs * 4))))


def _episode_task(args):
    policy, cfg, start = args
    return run_episode(policy, cfg, start)
