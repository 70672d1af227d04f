"""Synthetic generator: process math oracles and corpus-level calibration."""

from __future__ import annotations

import math
from dataclasses import replace
from statistics import fmean, pstdev

import pytest

from trustsim.corpus import Gender, ProactiveAct, complexity_of_step, option_scores
from trustsim.errors import InvalidConfig
from trustsim.synth import (
    BehaviorProcess,
    GeneratorConfig,
    drift_center,
    generate_synthetic_corpus,
)
from trustsim.user_model import TraitTuple


def tt(bits):
    return TraitTuple.from_bits(bits)


class TestDriftCenter:
    def test_phase_values(self):
        # four 3-step phases spread evenly over [-1, 1]
        expected = [-1.0] * 3 + [-1 / 3] * 3 + [1 / 3] * 3 + [1.0] * 3
        got = [drift_center(s) for s in range(1, 13)]
        assert got == pytest.approx(expected)

    def test_antisymmetric(self):
        assert drift_center(1) == -drift_center(12)
        assert drift_center(4) == -drift_center(9)


class TestProcessFormulas:
    def test_help_prob_low_traits_none_act(self):
        # 0.25 + 0.05, complexity term zero at k=3
        p = BehaviorProcess().help_prob(tt("000"), ProactiveAct.NONE, step=1)
        assert p == pytest.approx(0.30)

    def test_help_prob_all_terms(self):
        # 0.25 - 0.12 + 0.06 + 0.08*2 - 0.08 at k=5 under intervention
        p = BehaviorProcess().help_prob(tt("110"), ProactiveAct.INTERVENTION, step=3)
        assert p == pytest.approx(0.27)

    def test_help_prob_floor(self):
        proc = replace(BehaviorProcess(), help_base=0.05)
        p = proc.help_prob(tt("100"), ProactiveAct.INTERVENTION, step=1)
        assert p == 0.02

    def test_sugg_prob_oracle(self):
        # 0.30 - 0.10 + 0.10 + 0.05*1 + 0.05 at k=4 under notification
        p = BehaviorProcess().sugg_prob(tt("110"), ProactiveAct.NOTIFICATION, step=2)
        assert p == pytest.approx(0.40)

    def test_best_prob_without_drift(self):
        p = BehaviorProcess().best_prob(tt("000"), ProactiveAct.NONE, False, step=1)
        assert p == pytest.approx(0.40)

    def test_best_prob_with_drift_endpoints(self):
        proc = BehaviorProcess()
        early = proc.best_prob(tt("000"), ProactiveAct.NONE, False, 1, step_drift=1.0)
        late = proc.best_prob(tt("000"), ProactiveAct.NONE, False, 12, step_drift=1.0)
        assert early == pytest.approx(0.40 - 0.30)
        assert late == pytest.approx(0.40 + 0.30)

    def test_score_pmf_is_distribution(self):
        proc = BehaviorProcess()
        for step in (1, 2, 3):
            pmf = proc.score_pmf(tt("101"), ProactiveAct.SUGGESTION, step)
            scores = option_scores(3 + step - 1)
            assert tuple(pmf) == scores
            assert sum(pmf.values()) == pytest.approx(1.0)
            # non-top options share the remainder uniformly
            rest = [pmf[s] for s in scores[:-1]]
            assert all(r == pytest.approx(rest[0]) for r in rest)

    def test_score_pmf_top_mass_marginalizes_suggestion(self):
        proc = BehaviorProcess()
        traits, act, step = tt("010"), ProactiveAct.NONE, 5
        p_sugg = proc.sugg_prob(traits, act, step)
        expected_top = (1 - p_sugg) * proc.best_prob(traits, act, False, step) \
            + p_sugg * proc.best_prob(traits, act, True, step)
        pmf = proc.score_pmf(traits, act, step)
        assert pmf[max(pmf)] == pytest.approx(expected_top)

    def test_duration_mean_oracle(self):
        proc = BehaviorProcess()
        assert proc.duration_mean(tt("000"), False, False, 1) == pytest.approx(35.0)
        # + 9*2 complexity - 5 expertise + 7 help + 4 sugg
        assert proc.duration_mean(tt("100"), True, True, 3) == pytest.approx(59.0)

    def test_duration_drift_scales_multiplicatively(self):
        proc = BehaviorProcess()
        base = proc.duration_mean(tt("000"), False, False, 12)
        drifted = proc.duration_mean(tt("000"), False, False, 12, step_drift=0.8)
        assert drifted == pytest.approx(base * (1 + 0.5 * 0.8 * 1.0))

    def test_difficulty_pmf_valid_and_shifts_with_complexity(self):
        proc = BehaviorProcess()
        low = proc.difficulty_pmf(tt("111"), step=1)
        high = proc.difficulty_pmf(tt("111"), step=3)
        for pmf in (low, high):
            assert len(pmf) == 5
            assert sum(pmf) == pytest.approx(1.0)
            assert all(p >= 0 for p in pmf)
        # harder tasks put more mass on high difficulty classes
        assert sum(high[3:]) > sum(low[3:])

    def test_difficulty_harder_for_novices(self):
        proc = BehaviorProcess()
        novice = proc.difficulty_pmf(tt("000"), step=2)
        expert = proc.difficulty_pmf(tt("111"), step=2)
        assert sum(novice[3:]) > sum(expert[3:])

    def test_trust_delta_rule(self):
        proc = BehaviorProcess()
        cases = [
            (ProactiveAct.NONE, True, False, -0.05),
            (ProactiveAct.NOTIFICATION, True, False, 0.08),
            (ProactiveAct.SUGGESTION, False, False, 0.18),
            (ProactiveAct.INTERVENTION, True, False, 0.25),
            (ProactiveAct.INTERVENTION, False, False, -0.30),
            (ProactiveAct.NONE, False, True, -0.05 + 0.08),
        ]
        for act, prop_high, best, expected in cases:
            assert proc.trust_delta(act, prop_high, best) == pytest.approx(expected)

    def test_json_round_trip_preserves_tuples(self):
        proc = replace(BehaviorProcess(), help_base=0.33)
        restored = BehaviorProcess.from_json_dict(proc.to_json_dict())
        assert restored == proc
        assert isinstance(restored.help_act, tuple)


class TestGeneratorConfig:
    def test_rejects_bad_fields(self):
        with pytest.raises(InvalidConfig):
            GeneratorConfig(n_dialogs=0)
        with pytest.raises(InvalidConfig):
            GeneratorConfig(step_drift=-0.1)
        with pytest.raises(InvalidConfig):
            GeneratorConfig(step_drift=1.5)
        with pytest.raises(InvalidConfig):
            GeneratorConfig(duration_hi=20.0)

    def test_json_round_trip(self):
        config = GeneratorConfig(n_dialogs=17, step_drift=0.4)
        assert GeneratorConfig.from_json_dict(config.to_json_dict()) == config

    def test_with_overrides(self):
        config = GeneratorConfig().with_overrides(n_dialogs=5)
        assert config.n_dialogs == 5
        assert config.step_drift == 0.0


class TestGenerateCorpus:
    def test_shape_and_validity(self, small_corpus):
        assert len(small_corpus.users) == 40
        assert len(small_corpus.dialogs) == 40
        for user in small_corpus.users:
            assert len(small_corpus.dialogs[user.user_id]) == 12

    def test_deterministic(self):
        config = GeneratorConfig(n_dialogs=12)
        assert generate_synthetic_corpus(config, seed=3) == \
            generate_synthetic_corpus(config, seed=3)

    def test_seed_changes_output(self):
        config = GeneratorConfig(n_dialogs=12)
        assert generate_synthetic_corpus(config, seed=3) != \
            generate_synthetic_corpus(config, seed=4)

    def test_rejects_non_int_seed(self):
        with pytest.raises(InvalidConfig):
            generate_synthetic_corpus(GeneratorConfig(n_dialogs=1), seed="42")

    def test_acts_roughly_uniform(self, default_corpus):
        counts = {act: 0 for act in ProactiveAct}
        total = 0
        for _, ex in default_corpus.iter_exchanges():
            counts[ex.proactive_act] += 1
            total += 1
        for act in ProactiveAct:
            assert abs(counts[act] / total - 0.25) < 0.02

    def test_help_rate_matches_flat_process(self):
        # zero out every help coefficient so the rate is exactly the base
        proc = replace(BehaviorProcess(), help_base=0.5, help_expertise=0.0,
                       help_propensity=0.0, help_complexity=0.0,
                       help_act=(0.0, 0.0, 0.0, 0.0))
        config = GeneratorConfig(n_dialogs=600, process=proc)
        corpus = generate_synthetic_corpus(config, seed=11)
        rate = sum(ex.help_request for _, ex in corpus.iter_exchanges()) / 7200
        assert abs(rate - 0.5) < 0.02

    def test_drift_raises_late_durations(self, drifting_corpus):
        early, late = [], []
        for _, ex in drifting_corpus.iter_exchanges():
            if ex.step <= 3:
                early.append(ex.duration)
            elif ex.step >= 10:
                late.append(ex.duration)
        mean = lambda xs: sum(xs) / len(xs)
        assert mean(late) > mean(early) * 1.3

    def test_durations_exceed_floor_under_drift(self, drifting_corpus):
        assert all(ex.duration > 20.0
                   for _, ex in drifting_corpus.iter_exchanges())

    def test_gender_marginal_sampled(self, default_corpus):
        seen = {user.gender for user in default_corpus.users}
        assert Gender.MALE in seen and Gender.FEMALE in seen


@pytest.fixture(scope="module")
def by_step(default_corpus):
    rows = {s: {"duration": [], "score": [], "help": []} for s in range(1, 13)}
    for _, ex in default_corpus.iter_exchanges():
        rows[ex.step]["duration"].append(ex.duration)
        rows[ex.step]["score"].append(ex.game_score)
        rows[ex.step]["help"].append(1.0 if ex.help_request else 0.0)
    return rows


class TestDriftDisabledStepInvariance:
    """With drift off, the generator treats steps of equal complexity
    identically, so per-step statistics stay inside sampling noise of the
    per-complexity pool."""

    @pytest.mark.parametrize("field", ["duration", "score"])
    def test_step_means_sit_in_complexity_pool(self, by_step, field):
        for k in (3, 4, 5):
            steps = [s for s in range(1, 13) if complexity_of_step(s) == k]
            pool = [v for s in steps for v in by_step[s][field]]
            pool_mean = fmean(pool)
            bound = 5 * pstdev(pool) / math.sqrt(len(by_step[steps[0]][field]))
            for s in steps:
                assert abs(fmean(by_step[s][field]) - pool_mean) < bound

    def test_step_help_rates_sit_in_complexity_pool(self, by_step):
        for k in (3, 4, 5):
            steps = [s for s in range(1, 13) if complexity_of_step(s) == k]
            pool = [v for s in steps for v in by_step[s]["help"]]
            p = fmean(pool)
            bound = 5 * math.sqrt(p * (1 - p) / len(by_step[steps[0]]["help"]))
            for s in steps:
                assert abs(fmean(by_step[s]["help"]) - p) < bound
