"""Observation-conditioned selection of codebook maps for equalized encoding.

A policy picks one affine map from the codebook per observation.  The
interpretation-risk rule routes the observation's source atom onto its
action-matched target atom using the cached transfer rows; the task-risk
rule weighs the cached rows by the min-shifted per-action values at that
observation.  Both are deterministic with ties resolved to the lowest
candidate index, which attains the optimum over stochastic selections as
well (the objective is linear in the selection probabilities).
"""

from __future__ import annotations

from dataclasses import dataclass, field

from .gridworld import Observation
from .language import Language, Symbol
from .transport import AffineMap, TransformCodebook


def select_sm(codebook: TransformCodebook, src: Language, obs: Observation) -> AffineMap:
    """Map maximizing transfer into the action-matched target atom."""
    i = src.atom_of(src.encode(obs))
    j_matched = codebook.atom_correspondence[i]
    best_j = 0
    best_score = codebook.cached_row(i, 0)[j_matched]
    for j in range(1, len(codebook.maps[i])):
        score = codebook.cached_row(i, j)[j_matched]
        if score > best_score:
            best_j = j
            best_score = score
    return codebook.maps[i][best_j]


def select_em(codebook: TransformCodebook, src: Language, tgt: Language,
              obs: Observation, q_source: str = "decoder") -> AffineMap:
    """Map maximizing expected min-shifted action value under the transfer rows."""
    i = src.atom_of(src.encode(obs))
    q = tgt.decoder_q_table(obs, q_source)
    floor = min(q)
    shifted = tuple(v - floor for v in q)
    best_j = 0
    best_score = -1.0
    for j in range(len(codebook.maps[i])):
        row = codebook.cached_row(i, j)
        score = sum(r * s for r, s in zip(row, shifted))
        if score > best_score:
            best_j = j
            best_score = score
    return codebook.maps[i][best_j]


@dataclass
class Policy:
    """Deterministic observation -> codebook-map selector.

    kind is one of "sm", "em", "none", "fixed".  "none" selects no
    transform at all; "fixed" always returns the (i, j) codebook entry.
    Selections are memoized: languages and codebook are immutable.
    """

    kind: str
    codebook: TransformCodebook | None = None
    source: Language | None = None
    target: Language | None = None
    q_source: str = "decoder"
    fixed: tuple[int, int] | None = None
    _cache: dict[Observation, AffineMap] = field(
        default_factory=dict, repr=False, compare=False
    )

    def __post_init__(self) -> None:
        if self.kind not in ("sm", "em", "none", "fixed"):
            raise ValueError(f"unknown policy kind {self.kind!r}")
        if self.kind in ("sm", "em") and (self.codebook is None or self.source is None):
            raise ValueError(f"policy {self.kind!r} needs a codebook and a source language")
        if self.kind == "em" and self.target is None:
            raise ValueError("policy 'em' needs a target language")
        if self.kind == "fixed":
            if self.codebook is None or self.fixed is None:
                raise ValueError("policy 'fixed' needs a codebook and an (i, j) index")
            i, j = self.fixed
            n = len(self.codebook.maps)
            if not (0 <= i < n and 0 <= j < n):
                raise ValueError(f"fixed index {self.fixed} out of range")

    def selection(self, obs: Observation) -> AffineMap | None:
        if self.kind == "none":
            return None
        if self.kind == "fixed":
            return self.codebook.maps[self.fixed[0]][self.fixed[1]]
        cached = self._cache.get(obs)
        if cached is not None:
            return cached
        if self.kind == "sm":
            chosen = select_sm(self.codebook, self.source, obs)
        else:
            chosen = select_em(self.codebook, self.source, self.target, obs, self.q_source)
        self._cache[obs] = chosen
        return chosen


def _clip(x: Symbol) -> Symbol:
    a = x[0]
    b = x[1]
    if a > 1.0:
        a = 1.0
    elif a < -1.0:
        a = -1.0
    if b > 1.0:
        b = 1.0
    elif b < -1.0:
        b = -1.0
    return (a, b)


@dataclass(frozen=True)
class EqualizedLanguage:
    """Source-language view whose encoder composes the selected map.

    Transformed symbols are clipped back into the unit box before they can
    reach the channel unless `clip` is disabled.  Decoder-side behavior
    delegates to the base language.
    """

    base: Language
    policy: Policy
    clip: bool = True

    def encode(self, obs: Observation) -> Symbol:
        x = self.base.encode(obs)
        transform = self.policy.selection(obs)
        if transform is None:
            return x
        x = transform(x)
        return _clip(x) if self.clip else x

    @property
    def grid(self):
        return self.base.grid

    @property
    def mu(self):
        return self.base.mu

    @property
    def anchors(self):
        return self.base.anchors

    @property
    def seed(self) -> int:
        return self.base.seed

    def atom_of(self, x: Symbol) -> int:
        return self.base.atom_of(x)

    def decode(self, x: Symbol, beta: float, rng) -> int:
        return self.base.decode(x, beta, rng)

    def decode_distribution(self, x: Symbol, beta: float):
        return self.base.decode_distribution(x, beta)


def equalize(lang: Language, policy: Policy, clip: bool = True) -> EqualizedLanguage:
    """Wrap a language so its encoder passes through the policy's maps."""
    return EqualizedLanguage(base=lang, policy=policy, clip=clip)
