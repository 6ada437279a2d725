"""Mismatch metrics between two languages sharing a task.

Two complementary views: semantic mismatch counts how often a source
symbol, optionally passed through an equalizing transform, lands outside
the target-language atom of the target's own encoding; effectiveness
mismatch measures how much task value the target's literal interpretation
of the source symbol gives up, using the exact task oracle.  Both are
exact expectations over the observation distribution (the encoders are
deterministic tables, so no sampling is involved).
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

from .gridworld import ACTIONS, Observation, q_star_values

Symbol = tuple[float, float]
Transform = Callable[[Symbol], Symbol]


@dataclass(frozen=True)
class ObservationBreakdown:
    obs: Observation
    source_atom: int
    target_atom: int
    interpreted_action: int
    q_plus_ratio: float


@dataclass(frozen=True)
class MismatchReport:
    sm: float
    em: float
    per_observation: tuple[ObservationBreakdown, ...] | None = None


@dataclass(frozen=True)
class InfoTransferMatrix:
    """Atom-to-atom landing probabilities under a transform; rows sum to 1."""

    values: tuple[tuple[float, ...], ...]
    sample_count: int


def _check_compatible(src, tgt) -> None:
    if (src.grid.width, src.grid.height) != (tgt.grid.width, tgt.grid.height):
        raise ValueError("languages live on different grids")
    if len(src.anchors) != len(tgt.anchors):
        raise ValueError("languages have different action sets")
    if src.mu.weights.keys() != tgt.mu.weights.keys():
        raise ValueError("languages disagree on the observation support")


def semantic_mismatch(src, tgt, equalizer: Transform | None = None) -> float:
    """Probability mass of observations whose source symbol is mis-atomed.

    The source symbol (after `equalizer`, when given) is placed in the
    target partition and compared against the atom of the target's own
    encoding of the same observation.
    """
    _check_compatible(src, tgt)
    # Normalizing by the accumulated mass keeps both endpoints exact even
    # when the weights do not sum to exactly 1.0 in floating point.
    hit = 0.0
    miss = 0.0
    for obs, w in src.mu:
        x = src.encode(obs)
        if equalizer is not None:
            x = equalizer(x)
        if tgt.atom_of(x) == tgt.atom_of(tgt.encode(obs)):
            hit += w
        else:
            miss += w
    sm = miss / (hit + miss)
    return min(max(sm, 0.0), 1.0)


def effectiveness_mismatch(src, tgt, equalizer: Transform | None = None) -> float:
    """Expected task-value shortfall of the target's reading of source symbols.

    For each observation the target decoder's deterministic action on the
    (equalized) source symbol is scored by the min-shifted oracle value and
    divided by the best action's shifted value; a zero denominator counts
    as a full ratio of one.
    """
    _check_compatible(src, tgt)
    grid = src.grid
    # Shortfalls are accumulated directly (rather than one minus the hit
    # mass) so that a perfect interpretation scores exactly zero.
    shortfall = 0.0
    total = 0.0
    for obs, w in src.mu:
        x = src.encode(obs)
        if equalizer is not None:
            x = equalizer(x)
        interpreted = tgt.atom_of(x)
        values = q_star_values(grid, obs)
        floor = min(values)
        denom = max(values) - floor
        if denom == 0.0:
            ratio = 1.0
        else:
            ratio = (values[interpreted] - floor) / denom
        shortfall += w * (1.0 - ratio)
        total += w
    em = shortfall / total
    return min(max(em, 0.0), 1.0)


def mismatch_report(src, tgt, equalizer: Transform | None = None,
                    per_observation: bool = False) -> MismatchReport:
    """Both metrics, optionally with a per-observation breakdown table."""
    sm = semantic_mismatch(src, tgt, equalizer)
    em = effectiveness_mismatch(src, tgt, equalizer)
    if not per_observation:
        return MismatchReport(sm=sm, em=em)
    rows = []
    grid = src.grid
    for obs, _ in src.mu:
        x = src.encode(obs)
        if equalizer is not None:
            x = equalizer(x)
        interpreted = tgt.atom_of(x)
        values = q_star_values(grid, obs)
        floor = min(values)
        denom = max(values) - floor
        ratio = 1.0 if denom == 0.0 else (values[interpreted] - floor) / denom
        rows.append(
            ObservationBreakdown(
                obs=obs,
                source_atom=src.atom_of(src.encode(obs)),
                target_atom=tgt.atom_of(tgt.encode(obs)),
                interpreted_action=interpreted,
                q_plus_ratio=ratio,
            )
        )
    return MismatchReport(sm=sm, em=em, per_observation=tuple(rows))


def info_transfer_row(src, tgt, transform: Transform | None, i: int) -> tuple[float, ...]:
    """Landing distribution over target atoms for symbols from source atom i."""
    _check_compatible(src, tgt)
    mass = 0.0
    hits = [0.0] * len(ACTIONS)
    for obs, w in src.mu:
        x = src.encode(obs)
        if src.atom_of(x) != i:
            continue
        mass += w
        if transform is not None:
            x = transform(x)
        hits[tgt.atom_of(x)] += w
    if mass == 0.0:
        raise ValueError(f"source atom {i} is empty under the observation distribution")
    return tuple(h / mass for h in hits)


def info_transfer(src, tgt, transform: Transform | None, i: int, j: int,
                  n_samples: int | None = None, rng=None) -> float:
    """Probability that a source-atom-i symbol lands in target atom j.

    Encoders here are finite deterministic tables, so the value is computed
    exactly by enumeration; `n_samples` and `rng` are accepted for
    interface compatibility with sampling estimators and ignored.
    """
    del n_samples, rng
    return info_transfer_row(src, tgt, transform, i)[j]


def info_transfer_matrix(src, tgt, transform: Transform | None) -> InfoTransferMatrix:
    values = tuple(
        info_transfer_row(src, tgt, transform, i) for i in range(len(ACTIONS))
    )
    return InfoTransferMatrix(values=values, sample_count=len(src.mu.weights))
