"""User trait distributions, profile sampling, and trait binarization.

Numeric traits are modeled as truncated Gaussians (age bounded 18..60,
scale traits 1..5); gender is categorical with empirical frequencies.
The three behavior-relevant traits (domain expertise, trust propensity,
technical affinity) are binarized at the Likert midpoint into the 3-bit
tuple that conditions simulated behavior.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .corpus import (
    AGE_MAX,
    AGE_MIN,
    Corpus,
    Gender,
    LIKERT_MAX,
    LIKERT_MIN,
    SCALE_TRAITS,
    UserRecord,
)
from .errors import InsufficientUsers, InvalidBounds, InvalidConfig
from .sampling import RandomStream, categorical, truncated_gaussian

# A trait counts as "high" strictly above the Likert midpoint (3.0 -> low).
LIKERT_BINARY_THRESHOLD = 3.0

GENDER_ORDER = (Gender.MALE, Gender.FEMALE, Gender.OTHER)

# UserProfile shares fields and invariants with an observed UserRecord;
# the only difference is provenance (sampled vs measured).
UserProfile = UserRecord


@dataclass(frozen=True)
class TruncGauss:
    """Parameters of a truncated Gaussian: N(mean, sd) restricted to [lo, hi]."""

    mean: float
    sd: float
    lo: float
    hi: float

    def __post_init__(self):
        if not self.lo < self.hi:
            raise InvalidBounds(f"need lo < hi, got [{self.lo}, {self.hi}]")
        if self.sd < 0:
            raise InvalidBounds(f"sd must be >= 0, got {self.sd}")


@dataclass(frozen=True)
class TraitDistributions:
    """Fitted (or configured) population distributions for all user traits."""

    age: TruncGauss
    technical_affinity: TruncGauss
    trust_propensity: TruncGauss
    domain_expertise: TruncGauss
    openness: TruncGauss
    conscientiousness: TruncGauss
    extraversion: TruncGauss
    agreeableness: TruncGauss
    neuroticism: TruncGauss
    gender_probs: tuple[float, float, float]  # (male, female, other)

    def __post_init__(self):
        if (self.age.lo, self.age.hi) != (AGE_MIN, AGE_MAX):
            raise InvalidBounds(f"age bounds must be [{AGE_MIN}, {AGE_MAX}]")
        for name in SCALE_TRAITS:
            dist = getattr(self, name)
            if (dist.lo, dist.hi) != (LIKERT_MIN, LIKERT_MAX):
                raise InvalidBounds(f"{name} bounds must be [1, 5]")
        object.__setattr__(self, "gender_probs", tuple(float(p) for p in self.gender_probs))
        if len(self.gender_probs) != len(GENDER_ORDER):
            raise InvalidConfig("gender_probs needs (male, female, other)")
        if any(p < 0 for p in self.gender_probs):
            raise InvalidConfig("gender probabilities must be non-negative")
        if abs(sum(self.gender_probs) - 1.0) > 1e-9:
            raise InvalidConfig("gender probabilities must sum to 1")

    def to_json_dict(self) -> dict:
        payload = {
            name: vars(getattr(self, name))
            for name in ("age",) + SCALE_TRAITS
        }
        payload["gender_probs"] = list(self.gender_probs)
        return payload

    @classmethod
    def from_json_dict(cls, payload: dict) -> "TraitDistributions":
        kwargs = {
            name: TruncGauss(**payload[name]) for name in ("age",) + SCALE_TRAITS
        }
        return cls(gender_probs=tuple(payload["gender_probs"]), **kwargs)


@dataclass(frozen=True)
class TraitTuple:
    """3-bit conditioning tuple, rendered expertise/propensity/affinity."""

    domain_expertise_high: bool
    trust_propensity_high: bool
    technical_affinity_high: bool

    @property
    def bits(self) -> str:
        return "".join(
            "1" if flag else "0"
            for flag in (
                self.domain_expertise_high,
                self.trust_propensity_high,
                self.technical_affinity_high,
            )
        )

    @property
    def index(self) -> int:
        return int(self.bits, 2)

    @classmethod
    def from_bits(cls, bits: str) -> "TraitTuple":
        if len(bits) != 3 or any(b not in "01" for b in bits):
            raise InvalidConfig(f"trait tuple must be 3 bits, got {bits!r}")
        return cls(bits[0] == "1", bits[1] == "1", bits[2] == "1")

    def __str__(self):
        return self.bits


ALL_TRAIT_TUPLES = tuple(TraitTuple.from_bits(f"{i:03b}") for i in range(8))


def fit_trait_distributions(corpus: Corpus) -> TraitDistributions:
    """Sample mean/SD per numeric trait (bounds fixed), empirical gender freqs."""
    if len(corpus.users) < 2:
        raise InsufficientUsers(f"need >= 2 users, got {len(corpus.users)}")
    ages = np.array([u.age for u in corpus.users], dtype=float)
    kwargs = {"age": TruncGauss(float(ages.mean()), float(ages.std(ddof=1)), AGE_MIN, AGE_MAX)}
    for name in SCALE_TRAITS:
        values = np.array([getattr(u, name) for u in corpus.users], dtype=float)
        kwargs[name] = TruncGauss(
            float(values.mean()), float(values.std(ddof=1)), LIKERT_MIN, LIKERT_MAX
        )
    counts = {g: 0 for g in GENDER_ORDER}
    for user in corpus.users:
        counts[user.gender] += 1
    total = len(corpus.users)
    probs = tuple(counts[g] / total for g in GENDER_ORDER)
    return TraitDistributions(gender_probs=probs, **kwargs)


def sample_truncated_gaussian(mean, sd, lo, hi, stream: RandomStream) -> float:
    """One truncated-Gaussian draw; sd = 0 returns clamp(mean, lo, hi)."""
    return truncated_gaussian(mean, sd, lo, hi, stream.gen)


def sample_user(dists: TraitDistributions, stream: RandomStream,
                user_id: str = "sim") -> UserProfile:
    """Sample a full profile. Age is drawn continuously then rounded.

    Each trait draws from its own named substream, so the draw for one
    trait never shifts another's.
    """
    age_raw = truncated_gaussian(
        dists.age.mean, dists.age.sd, dists.age.lo, dists.age.hi,
        stream.child("age").gen,
    )
    kwargs = {"age": int(math.floor(age_raw + 0.5))}
    for name in SCALE_TRAITS:
        dist = getattr(dists, name)
        kwargs[name] = truncated_gaussian(
            dist.mean, dist.sd, dist.lo, dist.hi, stream.child(name).gen
        )
    gender = GENDER_ORDER[categorical(dists.gender_probs, stream.child("gender").gen)]
    return UserProfile(user_id=user_id, gender=gender, **kwargs)


def binarize_traits(profile: UserProfile) -> TraitTuple:
    """Map the three behavior-relevant traits to bits: high iff value > 3.0."""
    return TraitTuple(
        domain_expertise_high=profile.domain_expertise > LIKERT_BINARY_THRESHOLD,
        trust_propensity_high=profile.trust_propensity > LIKERT_BINARY_THRESHOLD,
        technical_affinity_high=profile.technical_affinity > LIKERT_BINARY_THRESHOLD,
    )


def default_trait_distributions() -> TraitDistributions:
    """Stand-in population used by the synthetic generator.

    The source study population is not published; these moments give a
    spread of user types across all eight trait tuples.
    """
    return TraitDistributions(
        age=TruncGauss(38.0, 12.0, AGE_MIN, AGE_MAX),
        technical_affinity=TruncGauss(3.4, 0.9, LIKERT_MIN, LIKERT_MAX),
        trust_propensity=TruncGauss(3.1, 1.0, LIKERT_MIN, LIKERT_MAX),
        domain_expertise=TruncGauss(2.9, 1.1, LIKERT_MIN, LIKERT_MAX),
        openness=TruncGauss(3.5, 0.8, LIKERT_MIN, LIKERT_MAX),
        conscientiousness=TruncGauss(3.6, 0.7, LIKERT_MIN, LIKERT_MAX),
        extraversion=TruncGauss(3.0, 0.9, LIKERT_MIN, LIKERT_MAX),
        agreeableness=TruncGauss(3.4, 0.7, LIKERT_MIN, LIKERT_MAX),
        neuroticism=TruncGauss(2.8, 0.9, LIKERT_MIN, LIKERT_MAX),
        gender_probs=(0.48, 0.48, 0.04),
    )
