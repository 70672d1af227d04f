"""Synthetic corpus generation with an exportable ground-truth process.

Real interaction data for this domain is not publicly released, so the
pipeline is verified against corpora drawn from a fully documented
generating process: every conditional distribution the generator uses
(request probabilities, score mixture, duration and difficulty models,
trust response rule) is computable from the exported config, giving
evaluation a known ground truth.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from statistics import NormalDist

from .corpus import (
    ACT_ORDER,
    Corpus,
    Exchange,
    LIKERT_MAX,
    LIKERT_MIN,
    MIN_DURATION_S,
    ProactiveAct,
    STEPS_PER_DIALOG,
    complexity_of_step,
    max_option_score,
    option_scores,
)
from .errors import InvalidConfig
from .sampling import RandomStream, categorical, truncated_gaussian
from .user_model import (
    TraitDistributions,
    TraitTuple,
    binarize_traits,
    default_trait_distributions,
    sample_user,
)

PROB_FLOOR, PROB_CEIL = 0.02, 0.98

TRUST_FIELDS = ("trust", "competence", "reliability", "predictability")


def _clip_prob(p: float) -> float:
    return min(PROB_CEIL, max(PROB_FLOOR, p))


def _clip(x: float, lo: float, hi: float) -> float:
    return min(hi, max(lo, x))


def drift_center(step: int) -> float:
    """Phase position of a step in [-1, 1]: phases are blocks of 3 steps."""
    phase = (step - 1) // 3
    return (phase - 1.5) / 1.5


def _act_index(act: ProactiveAct) -> int:
    return ACT_ORDER.index(act)


@dataclass(frozen=True)
class BehaviorProcess:
    """Ground-truth conditional behavior model for the synthetic game.

    Linear-in-traits probability and location models; all coefficients
    documented here and serialized with the corpus. Drift terms shift
    score and duration by step phase when step_drift > 0.
    """

    help_base: float = 0.25
    help_expertise: float = -0.12
    help_propensity: float = 0.06
    help_complexity: float = 0.08          # per option above 3
    help_act: tuple = (0.05, 0.02, -0.05, -0.08)

    sugg_base: float = 0.30
    sugg_expertise: float = -0.10
    sugg_propensity: float = 0.10
    sugg_complexity: float = 0.05
    sugg_act: tuple = (0.10, 0.05, -0.15, -0.18)

    best_base: float = 0.40                # chance of picking the top option
    best_expertise: float = 0.18
    best_sugg_request: float = 0.08
    best_act: tuple = (0.0, 0.05, 0.15, 0.22)
    best_drift_gain: float = 0.3

    duration_base: float = 35.0
    duration_complexity: float = 9.0
    duration_expertise: float = -5.0
    duration_help: float = 7.0
    duration_sugg: float = 4.0
    duration_sd: float = 6.0
    duration_drift_gain: float = 0.5

    difficulty_base: float = 1.8
    difficulty_complexity: float = 0.7
    difficulty_low_expertise: float = 0.9
    difficulty_low_affinity: float = 0.4
    difficulty_sd: float = 0.9

    trust_act_delta: tuple = (-0.05, 0.08, 0.18, 0.25)
    trust_intervention_low_propensity: float = -0.30
    trust_best_bonus: float = 0.08
    trust_noise_sd: float = 0.5

    def help_prob(self, traits: TraitTuple, act: ProactiveAct, step: int) -> float:
        k = complexity_of_step(step)
        return _clip_prob(
            self.help_base
            + self.help_expertise * traits.domain_expertise_high
            + self.help_propensity * traits.trust_propensity_high
            + self.help_complexity * (k - 3)
            + self.help_act[_act_index(act)]
        )

    def sugg_prob(self, traits: TraitTuple, act: ProactiveAct, step: int) -> float:
        k = complexity_of_step(step)
        return _clip_prob(
            self.sugg_base
            + self.sugg_expertise * traits.domain_expertise_high
            + self.sugg_propensity * traits.trust_propensity_high
            + self.sugg_complexity * (k - 3)
            + self.sugg_act[_act_index(act)]
        )

    def best_prob(self, traits: TraitTuple, act: ProactiveAct, sugg_request: bool,
                  step: int, step_drift: float = 0.0) -> float:
        return _clip_prob(
            self.best_base
            + self.best_expertise * traits.domain_expertise_high
            + self.best_sugg_request * sugg_request
            + self.best_act[_act_index(act)]
            + self.best_drift_gain * step_drift * drift_center(step)
        )

    def score_pmf(self, traits: TraitTuple, act: ProactiveAct, step: int,
                  step_drift: float = 0.0) -> dict:
        """Marginal pmf over the step's option scores (suggestion request
        integrated out)."""
        scores = option_scores(complexity_of_step(step))
        top = scores[-1]
        p_sugg = self.sugg_prob(traits, act, step)
        pmf = {s: 0.0 for s in scores}
        for sugg, w in ((False, 1.0 - p_sugg), (True, p_sugg)):
            p_best = self.best_prob(traits, act, sugg, step, step_drift)
            pmf[top] += w * p_best
            for s in scores[:-1]:
                pmf[s] += w * (1.0 - p_best) / (len(scores) - 1)
        return pmf

    def duration_mean(self, traits: TraitTuple, help_request: bool,
                      sugg_request: bool, step: int, step_drift: float = 0.0) -> float:
        k = complexity_of_step(step)
        base = (
            self.duration_base
            + self.duration_complexity * (k - 3)
            + self.duration_expertise * traits.domain_expertise_high
            + self.duration_help * help_request
            + self.duration_sugg * sugg_request
        )
        return base * (1.0 + self.duration_drift_gain * step_drift * drift_center(step))

    def difficulty_pmf(self, traits: TraitTuple, step: int) -> tuple:
        """Discretized-Gaussian pmf over difficulty classes 1..5."""
        k = complexity_of_step(step)
        mu = (
            self.difficulty_base
            + self.difficulty_complexity * (k - 3)
            + self.difficulty_low_expertise * (not traits.domain_expertise_high)
            + self.difficulty_low_affinity * (not traits.technical_affinity_high)
        )
        dist = NormalDist(mu, self.difficulty_sd)
        edges = [-math.inf, 1.5, 2.5, 3.5, 4.5, math.inf]
        probs = tuple(dist.cdf(edges[i + 1]) - dist.cdf(edges[i]) for i in range(5))
        total = sum(probs)
        return tuple(p / total for p in probs)

    def trust_delta(self, act: ProactiveAct, propensity_high: bool,
                    best_chosen: bool) -> float:
        delta = self.trust_act_delta[_act_index(act)]
        if act is ProactiveAct.INTERVENTION and not propensity_high:
            delta = self.trust_intervention_low_propensity
        return delta + self.trust_best_bonus * best_chosen

    def to_json_dict(self) -> dict:
        out = {}
        for name, value in vars(self).items():
            out[name] = list(value) if isinstance(value, tuple) else value
        return out

    @classmethod
    def from_json_dict(cls, payload: dict) -> "BehaviorProcess":
        kwargs = {
            k: tuple(v) if isinstance(v, list) else v for k, v in payload.items()
        }
        return cls(**kwargs)


@dataclass(frozen=True)
class GeneratorConfig:
    """Everything needed to regenerate a synthetic corpus bit-exactly
    (together with one seed)."""

    n_dialogs: int = 308
    traits: TraitDistributions = field(default_factory=default_trait_distributions)
    process: BehaviorProcess = field(default_factory=BehaviorProcess)
    step_drift: float = 0.0
    duration_hi: float = 300.0

    def __post_init__(self):
        if not isinstance(self.n_dialogs, int) or self.n_dialogs < 1:
            raise InvalidConfig(f"n_dialogs must be a positive integer, got {self.n_dialogs}")
        if not 0.0 <= self.step_drift <= 1.0:
            raise InvalidConfig(f"step_drift must be in [0, 1], got {self.step_drift}")
        if not self.duration_hi > MIN_DURATION_S:
            raise InvalidConfig(f"duration_hi must exceed {MIN_DURATION_S}")

    def to_json_dict(self) -> dict:
        return {
            "n_dialogs": self.n_dialogs,
            "traits": self.traits.to_json_dict(),
            "process": self.process.to_json_dict(),
            "step_drift": self.step_drift,
            "duration_hi": self.duration_hi,
        }

    @classmethod
    def from_json_dict(cls, payload: dict) -> "GeneratorConfig":
        return cls(
            n_dialogs=payload["n_dialogs"],
            traits=TraitDistributions.from_json_dict(payload["traits"]),
            process=BehaviorProcess.from_json_dict(payload["process"]),
            step_drift=payload["step_drift"],
            duration_hi=payload["duration_hi"],
        )

    def with_overrides(self, **kwargs) -> "GeneratorConfig":
        return replace(self, **kwargs)


def _bernoulli(p: float, gen) -> bool:
    return bool(gen.random() < p)


def _annotation(latent: float, noise_sd: float, gen) -> int:
    value = math.floor(latent + gen.normal(0.0, noise_sd) + 0.5)
    return int(min(LIKERT_MAX, max(LIKERT_MIN, value)))


def generate_synthetic_corpus(config: GeneratorConfig, seed: int) -> Corpus:
    """Draw a corpus from the documented process, one dialog per user.

    Deterministic for (config, seed): every random field reads its own
    named substream, so outputs are stable under field reordering.
    """
    if not isinstance(seed, int):
        raise InvalidConfig(f"seed must be an integer, got {seed!r}")
    proc = config.process
    root = RandomStream(seed, "synth")
    users = []
    dialogs = {}
    for i in range(config.n_dialogs):
        uid = f"u{i:04d}"
        ustream = root.child(uid)
        profile = sample_user(config.traits, ustream.child("traits"), user_id=uid)
        traits = binarize_traits(profile)
        users.append(profile)
        latent_trust = _clip(profile.trust_propensity, LIKERT_MIN, LIKERT_MAX)
        exchanges = []
        for step in range(1, STEPS_PER_DIALOG + 1):
            sstream = ustream.child("step", step)
            k = complexity_of_step(step)
            scores = option_scores(k)
            act = ACT_ORDER[int(sstream.child("act").gen.integers(len(ACT_ORDER)))]

            help_req = _bernoulli(proc.help_prob(traits, act, step),
                                  sstream.child("help").gen)
            sugg_req = _bernoulli(proc.sugg_prob(traits, act, step),
                                  sstream.child("sugg").gen)

            p_best = proc.best_prob(traits, act, sugg_req, step, config.step_drift)
            score_gen = sstream.child("score").gen
            if _bernoulli(p_best, score_gen):
                game_score = scores[-1]
            else:
                game_score = scores[int(score_gen.integers(k - 1))]

            mean = proc.duration_mean(traits, help_req, sugg_req, step,
                                      config.step_drift)
            duration = truncated_gaussian(mean, proc.duration_sd, MIN_DURATION_S,
                                          config.duration_hi,
                                          sstream.child("duration").gen)
            # type invariant is strict: duration > 20
            duration = max(duration, math.nextafter(MIN_DURATION_S, math.inf))

            pmf = proc.difficulty_pmf(traits, step)
            difficulty = 1 + categorical(pmf, sstream.child("difficulty").gen)

            best_chosen = game_score == max_option_score(k)
            latent_trust = _clip(
                latent_trust + proc.trust_delta(act, traits.trust_propensity_high,
                                                best_chosen),
                LIKERT_MIN, LIKERT_MAX,
            )
            annotations = {
                name: _annotation(latent_trust, proc.trust_noise_sd,
                                  sstream.child(name).gen)
                for name in TRUST_FIELDS
            }

            exchanges.append(Exchange(
                dialog_id=f"d{i:04d}",
                step=step,
                complexity=k,
                proactive_act=act,
                game_score=float(game_score),
                help_request=help_req,
                suggestion_request=sugg_req,
                duration=duration,
                difficulty=difficulty,
                **annotations,
            ))
        dialogs[uid] = tuple(exchanges)
    return Corpus(users=tuple(users), dialogs=dialogs)
