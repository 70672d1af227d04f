"""Shared fixtures and hand-construction helpers for the test suite."""

from __future__ import annotations

import math
import sys
from statistics import NormalDist

import numpy as np
import pytest

from trustsim.corpus import (
    Corpus,
    Exchange,
    Gender,
    ProactiveAct,
    UserRecord,
    complexity_of_step,
    option_scores,
)
from trustsim.rl_env import EnvState
from trustsim.synth import GeneratorConfig, generate_synthetic_corpus
from trustsim.trust_model import N_FEATURES, SCHEMA_VERSION, TrustClassifier
from trustsim.user_model import ALL_TRAIT_TUPLES


def analytic_truncated_mean(mean, sd, lo, hi):
    # standard closed form: mean + sd * (phi(a) - phi(b)) / (Phi(b) - Phi(a))
    std = NormalDist()
    a, b = (lo - mean) / sd, (hi - mean) / sd
    phi = lambda x: math.exp(-x * x / 2) / math.sqrt(2 * math.pi)
    z = std.cdf(b) - std.cdf(a)
    return mean + sd * (phi(a) - phi(b)) / z


class RiggedSweepEnv:
    """Action-independent state cycle that touches every discrete state;
    only SUGGESTION pays. The optimal policy is the same everywhere."""

    def __init__(self):
        self.episode = -1

    def _state(self, t):
        tt = ALL_TRAIT_TUPLES[(self.episode + t) % 8]
        trust = 1 + ((self.episode // 8) + t) % 5
        return EnvState(step=t, complexity=complexity_of_step(t),
                        trait_tuple=tt, last_turn=None, estimated_trust=trust)

    def reset(self, rng):
        self.episode += 1
        self.t = 1
        return self._state(1)

    def step(self, action):
        reward = 1.0 if action is ProactiveAct.SUGGESTION else 0.0
        done = self.t == 12
        if not done:
            self.t += 1
        return self._state(self.t), reward, done


def stub_trust_model(biases) -> TrustClassifier:
    """Zero-weight classifier whose prediction is fixed by the bias argmax."""
    biases = np.asarray(biases, dtype=float)
    return TrustClassifier(
        schema_version=SCHEMA_VERSION,
        classes=tuple(range(1, len(biases) + 1)),
        weights=np.zeros((len(biases), N_FEATURES)),
        biases=biases,
        feature_mean=np.zeros(N_FEATURES),
        feature_scale=np.ones(N_FEATURES),
    )


def make_user(user_id="u0", age=30, gender=Gender.FEMALE, technical_affinity=3.5,
              trust_propensity=2.5, domain_expertise=4.0, openness=3.0,
              conscientiousness=3.0, extraversion=3.0, agreeableness=3.0,
              neuroticism=3.0) -> UserRecord:
    return UserRecord(
        user_id=user_id, age=age, gender=gender,
        technical_affinity=technical_affinity, trust_propensity=trust_propensity,
        domain_expertise=domain_expertise, openness=openness,
        conscientiousness=conscientiousness, extraversion=extraversion,
        agreeableness=agreeableness, neuroticism=neuroticism,
    )


def make_exchange(step, dialog_id="d0", act=ProactiveAct.NONE, game_score=None,
                  help_request=False, suggestion_request=False, duration=42.0,
                  difficulty=3, trust=3, competence=3, reliability=3,
                  predictability=3) -> Exchange:
    k = complexity_of_step(step)
    if game_score is None:
        game_score = option_scores(k)[-1]
    return Exchange(
        dialog_id=dialog_id, step=step, complexity=k, proactive_act=act,
        game_score=float(game_score), help_request=help_request,
        suggestion_request=suggestion_request, duration=duration,
        difficulty=difficulty, trust=trust, competence=competence,
        reliability=reliability, predictability=predictability,
    )


def make_dialog(user_id, acts=None, **exchange_overrides) -> tuple:
    """Build a full 12-step dialog; acts may be one act or a list of 12."""
    if acts is None:
        acts = [ProactiveAct.NONE] * 12
    elif isinstance(acts, ProactiveAct):
        acts = [acts] * 12
    return tuple(
        make_exchange(step, dialog_id=f"d-{user_id}", act=acts[step - 1],
                      **exchange_overrides)
        for step in range(1, 13)
    )


def make_corpus(n_users=2, acts=None, user_overrides=None,
                **exchange_overrides) -> Corpus:
    """Uniform hand-built corpus: same traits and behavior for every user
    unless overridden."""
    users = []
    dialogs = {}
    for i in range(n_users):
        overrides = dict(user_overrides or {})
        uid = f"u{i}"
        users.append(make_user(user_id=uid, **overrides))
        dialogs[uid] = make_dialog(uid, acts=acts, **exchange_overrides)
    return Corpus(users=tuple(users), dialogs=dialogs)


@pytest.fixture(scope="session")
def default_corpus() -> Corpus:
    """The standard 308-dialog synthetic corpus used across suites."""
    return generate_synthetic_corpus(GeneratorConfig(), seed=42)


@pytest.fixture(scope="session")
def drifting_corpus() -> Corpus:
    return generate_synthetic_corpus(GeneratorConfig(step_drift=0.8), seed=42)


@pytest.fixture(scope="session")
def small_corpus() -> Corpus:
    return generate_synthetic_corpus(GeneratorConfig(n_dialogs=40), seed=7)


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    """Echo release-gate verdicts after the run, outside output capture."""
    module = sys.modules.get("test_acceptance")
    verdicts = getattr(module, "VERDICTS", None)
    if verdicts:
        terminalreporter.section("acceptance verdicts")
        for line in verdicts:
            terminalreporter.line(line)
