"""Emergent-style languages: encoder tables over a 2-D semantic space.

A language pairs a deterministic encoder (observation -> 2-D symbol inside
the unit box) with a nearest-anchor decoder.  Four anchor points, one per
action, induce a Voronoi partition of the plane into atoms; a softmax over
negative squared anchor distances turns symbol positions into action
probabilities at a chosen inverse temperature.
"""

from __future__ import annotations

import json
import math
import random
from dataclasses import dataclass, field
from typing import Callable

from .gridworld import (
    ACTIONS,
    Action,
    GridConfig,
    Observation,
    ObservationDistribution,
    all_observations,
    best_action,
    q_star_values,
    uniform_mu,
)
from .seeding import derive_seed

Symbol = tuple[float, float]

FORMAT_VERSION = 1

# Largest anchor radius that keeps every anchor inside the unit box under
# any rotation of the base cross.
ANCHOR_RADIUS = 2.0**-0.5

DEFAULT_JITTER_RADIUS = 0.15 * ANCHOR_RADIUS

# Base cross, indexed by Action: opposite actions sit antipodal.
_BASE_ANCHORS: tuple[Symbol, ...] = (
    (ANCHOR_RADIUS, 0.0),    # RIGHT
    (0.0, -ANCHOR_RADIUS),   # DOWN
    (-ANCHOR_RADIUS, 0.0),   # LEFT
    (0.0, ANCHOR_RADIUS),    # UP
)


def _sqdist(a: Symbol, b: Symbol) -> float:
    dx = a[0] - b[0]
    dy = a[1] - b[1]
    return dx * dx + dy * dy


@dataclass(frozen=True)
class Partition:
    """Voronoi atoms of the semantic plane, one per action."""

    anchors: tuple[Symbol, ...]

    def __post_init__(self) -> None:
        if len(self.anchors) != len(ACTIONS):
            raise ValueError("expected one anchor per action")
        for i in range(len(self.anchors)):
            for j in range(i + 1, len(self.anchors)):
                if self.anchors[i] == self.anchors[j]:
                    raise ValueError("anchors must be pairwise distinct")

    def atom_of(self, x: Symbol) -> int:
        """Index of the nearest anchor; ties go to the lowest action index."""
        best = 0
        best_d = _sqdist(x, self.anchors[0])
        for a in range(1, len(self.anchors)):
            d = _sqdist(x, self.anchors[a])
            if d < best_d:
                best = a
                best_d = d
        return best

    @property
    def margin(self) -> float:
        """Half the minimum pairwise anchor distance."""
        dmin = min(
            math.sqrt(_sqdist(self.anchors[i], self.anchors[j]))
            for i in range(len(self.anchors))
            for j in range(i + 1, len(self.anchors))
        )
        return 0.5 * dmin


@dataclass(frozen=True)
class DecoderQ:
    """Softmax action scorer over negative squared anchor distances."""

    anchors: tuple[Symbol, ...]
    beta: float

    def q_of(self, action: int, x: Symbol) -> float:
        return -_sqdist(x, self.anchors[action])

    def q_values(self, x: Symbol) -> tuple[float, ...]:
        return tuple(-_sqdist(x, a) for a in self.anchors)

    def distribution(self, x: Symbol) -> tuple[float, ...]:
        """Action probabilities at inverse temperature beta.

        beta = 0 is uniform; beta = inf is a point mass on the argmax with
        ties resolved to the lowest action index.
        """
        n = len(self.anchors)
        if self.beta == 0.0:
            return (1.0 / n,) * n
        q = self.q_values(x)
        if math.isinf(self.beta):
            best = 0
            for a in range(1, n):
                if q[a] > q[best]:
                    best = a
            probs = [0.0] * n
            probs[best] = 1.0
            return tuple(probs)
        m = max(q)
        w = [math.exp(self.beta * (v - m)) for v in q]
        total = sum(w)
        return tuple(v / total for v in w)

    def sample(self, x: Symbol, rng: random.Random) -> Action:
        """Draw an action.  Consumes exactly one uniform draw per call."""
        u = rng.random()
        if self.beta == 0.0:
            return Action(min(int(u * 4.0), 3))
        q = self.q_values(x)
        if math.isinf(self.beta):
            best = 0
            for a in range(1, 4):
                if q[a] > q[best]:
                    best = a
            return Action(best)
        m = q[0]
        for v in q:
            if v > m:
                m = v
        w0 = math.exp(self.beta * (q[0] - m))
        w1 = math.exp(self.beta * (q[1] - m))
        w2 = math.exp(self.beta * (q[2] - m))
        w3 = math.exp(self.beta * (q[3] - m))
        target = u * (w0 + w1 + w2 + w3)
        if target < w0:
            return Action(0)
        target -= w0
        if target < w1:
            return Action(1)
        target -= w1
        if target < w2:
            return Action(2)
        return Action(3)


@dataclass(frozen=True)
class Language:
    """Encoder table plus anchor geometry over a fixed grid task."""

    grid: GridConfig
    seed: int
    anchors: tuple[Symbol, ...]
    encoder: dict[Observation, Symbol]
    mu: ObservationDistribution = field(repr=False)

    def encode(self, obs: Observation) -> Symbol:
        return self.encoder[obs]

    @property
    def partition(self) -> Partition:
        return Partition(self.anchors)

    def atom_of(self, x: Symbol) -> int:
        best = 0
        best_d = _sqdist(x, self.anchors[0])
        for a in range(1, 4):
            d = _sqdist(x, self.anchors[a])
            if d < best_d:
                best = a
                best_d = d
        return best

    def decoder(self, beta: float) -> DecoderQ:
        return DecoderQ(self.anchors, beta)

    def decode_distribution(self, x: Symbol, beta: float) -> tuple[float, ...]:
        return DecoderQ(self.anchors, beta).distribution(x)

    def decode(self, x: Symbol, beta: float, rng: random.Random) -> Action:
        return DecoderQ(self.anchors, beta).sample(x, rng)

    def decoder_q_table(self, obs: Observation, q_source: str = "decoder") -> tuple[float, ...]:
        """Per-action values at `obs`: the decoder's own estimate or the task oracle."""
        if q_source == "decoder":
            x = self.encoder[obs]
            return tuple(-_sqdist(x, a) for a in self.anchors)
        if q_source == "oracle":
            return q_star_values(self.grid, obs)
        raise ValueError(f"unknown q_source {q_source!r}")

    def validate(self) -> None:
        """Check the box bound and strict task-consistency of the encoder."""
        for obs, sym in self.encoder.items():
            if not (abs(sym[0]) <= 1.0 and abs(sym[1]) <= 1.0):
                raise ValueError(f"symbol {sym} for {obs} outside the unit box")
            target = int(best_action(self.grid, obs))
            d_own = _sqdist(sym, self.anchors[target])
            for a in range(4):
                if a != target and _sqdist(sym, self.anchors[a]) <= d_own:
                    raise ValueError(
                        f"symbol for {obs} not strictly inside atom {target}"
                    )


def _orthogonal_transform(seed: int) -> Callable[[Symbol], Symbol]:
    """Seed-derived random orthogonal map: optional reflection, then rotation."""
    rng = random.Random(derive_seed(seed, "orientation"))
    angle = rng.random() * 2.0 * math.pi
    reflect = rng.random() < 0.5
    c = math.cos(angle)
    s = math.sin(angle)

    def apply(p: Symbol) -> Symbol:
        x, y = p
        if reflect:
            y = -y
        return (c * x - s * y, s * x + c * y)

    return apply


def synthesize_language(
    grid: GridConfig,
    seed: int,
    jitter_radius: float = DEFAULT_JITTER_RADIUS,
) -> Language:
    """Construct a task-consistent language from a seed.

    The base anchor cross is carried through a seed-derived orthogonal
    transform, and every observation encodes to its best action's anchor
    plus a deterministic per-observation jitter of norm <= jitter_radius.
    """
    transform = _orthogonal_transform(seed)
    anchors = tuple(transform(a) for a in _BASE_ANCHORS)
    margin = Partition(anchors).margin
    if not 0.0 <= jitter_radius < (math.sqrt(2.0) / 2.0) * margin:
        raise ValueError(
            f"jitter_radius {jitter_radius} outside [0, {math.sqrt(2.0) / 2.0 * margin})"
        )
    encoder: dict[Observation, Symbol] = {}
    for obs in all_observations(grid):
        target = int(best_action(grid, obs))
        ax, ay = anchors[target]
        rng = random.Random(derive_seed(seed, "jitter", *obs.agent, *obs.treasure))
        radius = jitter_radius * math.sqrt(rng.random())
        theta = 2.0 * math.pi * rng.random()
        encoder[obs] = (ax + radius * math.cos(theta), ay + radius * math.sin(theta))
    lang = Language(
        grid=grid,
        seed=seed,
        anchors=anchors,
        encoder=encoder,
        mu=uniform_mu(grid),
    )
    lang.validate()
    return lang


def perturb_language(lang: Language, fraction: float, seed: int) -> Language:
    """Flip a fraction of encoder entries to the anchor of a wrong action.

    Produces a deliberately defective copy: flipped observations encode to
    the exact anchor of a uniformly random action other than the best one.
    The result is not task-consistent and is not re-validated.
    """
    if not 0.0 <= fraction <= 1.0:
        raise ValueError("fraction must be in [0, 1]")
    observations = all_observations(lang.grid)
    count = round(fraction * len(observations))
    rng = random.Random(derive_seed(seed, "perturb", fraction))
    flipped = rng.sample(observations, count)
    encoder = dict(lang.encoder)
    for obs in flipped:
        target = int(best_action(lang.grid, obs))
        wrong = [a for a in range(4) if a != target]
        encoder[obs] = lang.anchors[wrong[rng.randrange(3)]]
    return Language(
        grid=lang.grid,
        seed=lang.seed,
        anchors=lang.anchors,
        encoder=encoder,
        mu=lang.mu,
    )


def language_to_dict(lang: Language) -> dict:
    entries = []
    for obs in all_observations(lang.grid):
        sym = lang.encoder[obs]
        entries.append(
            {
                "agent": [obs.agent[0], obs.agent[1]],
                "treasure": [obs.treasure[0], obs.treasure[1]],
                "symbol": [sym[0], sym[1]],
            }
        )
    return {
        "format_version": FORMAT_VERSION,
        "grid": {
            "width": lang.grid.width,
            "height": lang.grid.height,
            "max_steps": lang.grid.max_steps,
        },
        "seed": lang.seed,
        "anchors": [[a[0], a[1]] for a in lang.anchors],
        "encoder": entries,
    }


def language_from_dict(data: dict) -> Language:
    version = data.get("format_version")
    if version != FORMAT_VERSION:
        raise ValueError(f"unsupported language format_version {version!r}")
    grid = GridConfig(
        width=data["grid"]["width"],
        height=data["grid"]["height"],
        max_steps=data["grid"]["max_steps"],
    )
    anchors = tuple((float(a[0]), float(a[1])) for a in data["anchors"])
    encoder: dict[Observation, Symbol] = {}
    for entry in data["encoder"]:
        obs = Observation(
            (int(entry["agent"][0]), int(entry["agent"][1])),
            (int(entry["treasure"][0]), int(entry["treasure"][1])),
        )
        encoder[obs] = (float(entry["symbol"][0]), float(entry["symbol"][1]))
    expected = all_observations(grid)
    if len(encoder) != len(expected) or any(obs not in encoder for obs in expected):
        raise ValueError("encoder table does not cover the observation space")
    return Language(
        grid=grid,
        seed=int(data["seed"]),
        anchors=anchors,
        encoder=encoder,
        mu=uniform_mu(grid),
    )


def save_language(lang: Language, path: str) -> None:
    with open(path, "w", encoding="utf-8") as f:
        json.dump(language_to_dict(lang), f, indent=2)
        f.write("\n")


def load_language(path: str) -> Language:
    with open(path, "r", encoding="utf-8") as f:
        return language_from_dict(json.load(f))
