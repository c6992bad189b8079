"""Seeded random pLTSs and distributions for property sweeps."""

from __future__ import annotations

import random
from dataclasses import dataclass
from fractions import Fraction

from .dist import Dist
from .plts import PLTS, TAU


@dataclass(frozen=True)
class GenParams:
    states: int = 4
    actions: int = 2
    max_transitions: int = 3  # per state
    max_support: int = 2
    denominator: int = 4  # bound on the denominators before normalisation
    tau_probability: float = 0.25  # chance that a transition is internal


def random_dist(rng: random.Random, states, max_support: int = 2, denominator: int = 4) -> Dist:
    states = list(states)
    k = rng.randint(1, min(max_support, len(states)))
    support = rng.sample(states, k)
    weights = [rng.randint(1, denominator) for _ in support]
    total = sum(weights)
    return Dist({s: Fraction(w, total) for s, w in zip(support, weights)})


def random_plts(rng: random.Random, params: GenParams = GenParams()) -> PLTS:
    """A random pLTS; internal steps only go to higher-numbered states, so it never diverges."""
    names = [f"s{i}" for i in range(params.states)]
    alphabet = [chr(ord("a") + i) for i in range(params.actions)]
    trans = []
    for i, src in enumerate(names):
        for _ in range(rng.randint(0, params.max_transitions)):
            later = names[i + 1 :]
            if later and rng.random() < params.tau_probability:
                trans.append((src, TAU, random_dist(rng, later, params.max_support, params.denominator)))
            elif alphabet:
                a = rng.choice(alphabet)
                trans.append((src, a, random_dist(rng, names, params.max_support, params.denominator)))
    return PLTS(names, trans, alphabet)


def random_system(seed: int, params: GenParams = GenParams()) -> PLTS:
    return random_plts(random.Random(seed), params)


def tau_free(params: GenParams) -> GenParams:
    return GenParams(
        params.states, params.actions, params.max_transitions, params.max_support, params.denominator, 0.0
    )
