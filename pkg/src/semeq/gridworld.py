"""Deterministic grid-world navigation task with an exact action-value oracle.

Positions are (col, row) pairs with the origin in the top-left corner.
Moves that would leave the grid clamp the agent to the boundary.  The
treasure never moves; an observation is terminal when the agent sits on it.
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import IntEnum
from typing import NamedTuple


class Action(IntEnum):
    RIGHT = 0
    DOWN = 1
    LEFT = 2
    UP = 3


ACTIONS: tuple[Action, ...] = tuple(Action)

# (dcol, drow) per action, indexed by Action value
_MOVES = ((1, 0), (0, 1), (-1, 0), (0, -1))


@dataclass(frozen=True)
class GridConfig:
    width: int = 5
    height: int = 5
    max_steps: int = 150

    def __post_init__(self) -> None:
        if self.width < 2 or self.height < 2:
            raise ValueError("grid must be at least 2x2")
        if self.max_steps < self.width + self.height:
            raise ValueError("max_steps must be at least width + height")


class Observation(NamedTuple):
    agent: tuple[int, int]
    treasure: tuple[int, int]

    @property
    def terminal(self) -> bool:
        return self.agent == self.treasure


def manhattan(a: tuple[int, int], b: tuple[int, int]) -> int:
    return abs(a[0] - b[0]) + abs(a[1] - b[1])


def validate_observation(cfg: GridConfig, obs: Observation) -> None:
    """Reject observations whose positions fall outside the grid."""
    for c, r in (obs.agent, obs.treasure):
        if not (0 <= c < cfg.width and 0 <= r < cfg.height):
            raise ValueError(f"position {(c, r)} outside {cfg.width}x{cfg.height} grid")


def step(cfg: GridConfig, obs: Observation, act: int) -> Observation:
    """Apply one move, clamping at the walls.  Terminal observations reject."""
    if obs.agent == obs.treasure:
        raise ValueError("cannot step a terminal observation")
    dc, dr = _MOVES[act]
    c, r = obs.agent
    nc = c + dc
    nr = r + dr
    if nc < 0:
        nc = 0
    elif nc >= cfg.width:
        nc = cfg.width - 1
    if nr < 0:
        nr = 0
    elif nr >= cfg.height:
        nr = cfg.height - 1
    return Observation((nc, nr), obs.treasure)


def q_star(cfg: GridConfig, obs: Observation, act: int) -> float:
    """Optimal action value: -(1 + remaining distance after taking `act`)."""
    nxt = step(cfg, obs, act)
    return -1.0 - manhattan(nxt.agent, nxt.treasure)


def q_star_values(cfg: GridConfig, obs: Observation) -> tuple[float, float, float, float]:
    return tuple(q_star(cfg, obs, a) for a in ACTIONS)  # type: ignore[return-value]


def q_star_plus(cfg: GridConfig, obs: Observation, act: int) -> float:
    """q_star shifted so the per-observation minimum sits at zero."""
    values = q_star_values(cfg, obs)
    return values[act] - min(values)


def best_action(cfg: GridConfig, obs: Observation) -> Action:
    """Argmax of q_star with ties broken by the lowest action index."""
    values = q_star_values(cfg, obs)
    best = 0
    for a in (1, 2, 3):
        if values[a] > values[best]:
            best = a
    return Action(best)


def all_observations(cfg: GridConfig) -> list[Observation]:
    """Every non-terminal observation, in a fixed canonical order."""
    out = []
    for ar in range(cfg.height):
        for ac in range(cfg.width):
            for tr in range(cfg.height):
                for tc in range(cfg.width):
                    if (ac, ar) != (tc, tr):
                        out.append(Observation((ac, ar), (tc, tr)))
    return out


@dataclass(frozen=True)
class ObservationDistribution:
    """Probability weights over non-terminal observations."""

    weights: dict[Observation, float]

    def __post_init__(self) -> None:
        if not self.weights:
            raise ValueError("empty observation distribution")
        total = 0.0
        for obs, w in self.weights.items():
            if obs.terminal:
                raise ValueError(f"terminal observation {obs} in support")
            if w < 0.0:
                raise ValueError("negative probability weight")
            total += w
        if abs(total - 1.0) > 1e-12:
            raise ValueError(f"weights sum to {total!r}, not 1")

    def __iter__(self):
        return iter(self.weights.items())

    @property
    def support(self) -> list[Observation]:
        return list(self.weights)


def uniform_mu(cfg: GridConfig) -> ObservationDistribution:
    """Uniform distribution over agent/treasure placements with agent != treasure."""
    observations = all_observations(cfg)
    w = 1.0 / len(observations)
    return ObservationDistribution({obs: w for obs in observations})
