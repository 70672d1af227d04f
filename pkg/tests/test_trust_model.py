"""Trust target folding, feature schema, classifier training and metrics."""

from __future__ import annotations

import numpy as np
import pytest

from conftest import make_dialog, make_user, stub_trust_model as stub_model
from trustsim.corpus import Corpus, ProactiveAct
from trustsim.errors import (
    DegenerateLabels,
    EmptyTestSet,
    InsufficientData,
    InvalidConfig,
    LengthMismatch,
    SchemaMismatch,
    ValueOutOfRange,
)
from trustsim.trust_model import (
    FEATURE_NAMES,
    N_FEATURES,
    TrainConfig,
    TurnContext,
    classification_metrics,
    classifier_from_json_dict,
    classifier_to_json_dict,
    combine_trust_target,
    corpus_to_dataset,
    evaluate_classifier,
    extract_features,
    load_classifier,
    predict_trust,
    save_classifier,
    train_classifier,
)
from trustsim.user_model import GENDER_ORDER


class TestCombineTrustTarget:
    @pytest.mark.parametrize("ratings,expected", [
        ((3, 3, 3, 3), 3),
        ((4, 4, 4, 3), 4),    # 3.75 rounds up
        ((4, 3, 3, 3), 3),    # 3.25 rounds down
        ((4, 4, 3, 3), 4),    # exact half rounds up
        ((1, 2, 1, 2), 2),
        ((1, 1, 1, 2), 1),
        ((5, 5, 5, 5), 5),
        ((1, 1, 1, 1), 1),
    ])
    def test_rounding_oracle(self, ratings, expected):
        assert combine_trust_target(*ratings) == expected

    @pytest.mark.parametrize("bad", [0, 6, 3.5, "3", True])
    def test_rejects_non_likert(self, bad):
        with pytest.raises(ValueOutOfRange):
            combine_trust_target(bad, 3, 3, 3)


def context(step=1, act=ProactiveAct.NONE, difficulty=3, duration=42.0,
            game_score=30.0, help_request=False, suggestion_request=False,
            trust_label=None):
    from trustsim.corpus import complexity_of_step
    return TurnContext(
        proactive_act=act, complexity=complexity_of_step(step), step=step,
        difficulty=difficulty, duration=duration, game_score=game_score,
        help_request=help_request, suggestion_request=suggestion_request,
        trust_label=trust_label,
    )


class TestFeatureSchema:
    def test_dimension_and_uniqueness(self):
        assert N_FEATURES == 43
        assert len(FEATURE_NAMES) == 43
        assert len(set(FEATURE_NAMES)) == 43

    def test_layout_blocks(self):
        assert FEATURE_NAMES[0] == "age"
        assert FEATURE_NAMES.index("complexity") == 16
        assert sum(1 for n in FEATURE_NAMES if n.startswith("lag1:")) == 10
        assert sum(1 for n in FEATURE_NAMES if n.startswith("lag2:")) == 10

    def test_vector_without_history(self):
        profile = make_user()
        current = context(step=1, act=ProactiveAct.SUGGESTION, difficulty=2,
                          duration=50.0, game_score=20.0, help_request=True)
        vec = extract_features(profile, [], current)
        gender = [1.0 if g is profile.gender else 0.0 for g in GENDER_ORDER]
        lag_fill = [0.0, 0.0, 0.0, 0.0, 3.0, 0.0, 0.0, 0.0, 0.0, 3.0]
        expected = np.array(
            [30.0] + gender + [3.5, 2.5, 4.0, 3.0, 3.0, 3.0, 3.0, 3.0]
            + [0.0, 0.0, 1.0, 0.0]
            + [3.0, 1.0, 2.0, 50.0, 20.0, 1.0, 0.0]
            + lag_fill + lag_fill
        )
        assert np.array_equal(vec, expected)

    def test_vector_with_one_lag(self):
        profile = make_user()
        past = context(step=1, act=ProactiveAct.NONE, difficulty=4,
                       duration=60.0, game_score=10.0, suggestion_request=True,
                       trust_label=2)
        vec = extract_features(profile, [past], context(step=2))
        lag1 = [1.0, 0.0, 0.0, 0.0, 4.0, 60.0, 10.0, 0.0, 1.0, 2.0]
        start = FEATURE_NAMES.index(f"lag1:act={ProactiveAct.NONE.value}")
        assert vec[start:start + 10].tolist() == lag1
        lag2 = [0.0, 0.0, 0.0, 0.0, 3.0, 0.0, 0.0, 0.0, 0.0, 3.0]
        assert vec[start + 10:].tolist() == lag2

    def test_unlabeled_lag_reads_neutral(self):
        profile = make_user()
        past = context(step=1, trust_label=None)
        vec = extract_features(profile, [past], context(step=2))
        assert vec[FEATURE_NAMES.index("lag1:trust")] == 3.0

    def test_only_last_two_turns_matter(self):
        profile = make_user()
        history = [context(step=s, difficulty=(s % 5) + 1, trust_label=4)
                   for s in range(1, 6)]
        full = extract_features(profile, history, context(step=6))
        tail = extract_features(profile, history[-2:], context(step=6))
        assert np.array_equal(full, tail)

    def test_rejects_disordered_history(self):
        profile = make_user()
        with pytest.raises(SchemaMismatch):
            extract_features(profile, [context(step=3)], context(step=2))
        with pytest.raises(SchemaMismatch):
            extract_features(profile, [context(step=2), context(step=2)],
                             context(step=3))
        bad_step = TurnContext(proactive_act=ProactiveAct.NONE, complexity=3,
                               step=0, difficulty=3, duration=42.0,
                               game_score=30.0, help_request=False,
                               suggestion_request=False)
        with pytest.raises(SchemaMismatch):
            extract_features(profile, [], bad_step)


class TestCorpusToDataset:
    def test_shapes_and_alignment(self, small_corpus):
        X, y, owners = corpus_to_dataset(small_corpus)
        n = sum(1 for _ in small_corpus.iter_exchanges())
        assert X.shape == (n, N_FEATURES)
        assert y.shape == (n,)
        assert len(owners) == n
        assert set(y) <= {1, 2, 3, 4, 5}
        assert owners[0] == small_corpus.users[0].user_id
        assert owners[12] == small_corpus.users[1].user_id

    def test_lag_labels_are_teacher_forced(self, small_corpus):
        X, _, _ = corpus_to_dataset(small_corpus)
        user = small_corpus.users[0]
        first = small_corpus.dialogs[user.user_id][0]
        expected = combine_trust_target(first.trust, first.competence,
                                        first.reliability, first.predictability)
        lag_ix = FEATURE_NAMES.index("lag1:trust")
        assert X[1][lag_ix] == float(expected)


def separable_corpus() -> Corpus:
    """Two archetypes whose profiles fully determine their trust labels."""
    users, dialogs = [], {}
    for i in range(3):
        low = make_user(user_id=f"low{i}", age=22 + i, domain_expertise=1.5,
                        trust_propensity=1.0, technical_affinity=2.0)
        users.append(low)
        dialogs[low.user_id] = make_dialog(
            low.user_id, trust=1, competence=1, reliability=1, predictability=2)
        high = make_user(user_id=f"high{i}", age=50 + i, domain_expertise=4.5,
                         trust_propensity=5.0, technical_affinity=4.5)
        users.append(high)
        dialogs[high.user_id] = make_dialog(
            high.user_id, trust=5, competence=5, reliability=5, predictability=4)
    return Corpus(users=tuple(users), dialogs=dialogs)


class TestTraining:
    def test_insufficient_data(self):
        with pytest.raises(InsufficientData):
            train_classifier(Corpus(users=(), dialogs={}))

    def test_degenerate_labels(self):
        user = make_user(user_id="u0")
        corpus = Corpus(users=(user,), dialogs={"u0": make_dialog("u0")})
        with pytest.raises(DegenerateLabels):
            train_classifier(corpus)

    def test_config_validation(self):
        with pytest.raises(InvalidConfig):
            TrainConfig(epochs=0)
        with pytest.raises(InvalidConfig):
            TrainConfig(l2=0.0)

    def test_separable_corpus_is_fit_exactly(self):
        corpus = separable_corpus()
        model = train_classifier(corpus)
        assert model.classes == (1, 5)
        report = evaluate_classifier(model, corpus)
        assert report.accuracy == 1.0

    def test_training_is_deterministic(self):
        corpus = separable_corpus()
        a = train_classifier(corpus)
        b = train_classifier(corpus)
        assert np.array_equal(a.weights, b.weights)
        assert np.array_equal(a.biases, b.biases)

    def test_classes_are_present_labels_ascending(self, small_corpus):
        model = train_classifier(small_corpus)
        _, y, _ = corpus_to_dataset(small_corpus)
        assert model.classes == tuple(sorted(set(int(v) for v in y)))




class TestPrediction:
    def test_argmax_over_scores(self):
        model = stub_model([0.0, 0.3, 0.1, 0.0, 0.0])
        label, scores = predict_trust(model, np.zeros(N_FEATURES))
        assert label == 2
        assert set(scores) == {1, 2, 3, 4, 5}
        assert scores[2] == pytest.approx(0.3)

    def test_ties_break_to_lowest_label(self):
        label, _ = predict_trust(stub_model([0.0] * 5), np.zeros(N_FEATURES))
        assert label == 1

    def test_wrong_dimension_rejected(self):
        with pytest.raises(SchemaMismatch):
            predict_trust(stub_model([0.0] * 5), np.zeros(7))


class TestClassificationMetrics:
    # 20 aligned pairs, confusion counted by hand
    Y_TRUE = [1, 1, 1, 2, 2, 2, 2, 3, 3, 3, 3, 3, 4, 4, 4, 5, 5, 5, 5, 5]
    Y_PRED = [1, 2, 1, 2, 2, 3, 2, 3, 3, 4, 3, 5, 4, 4, 3, 5, 5, 5, 4, 5]

    def test_counting_oracle(self):
        report = classification_metrics(self.Y_TRUE, self.Y_PRED)
        assert report.n == 20
        assert report.accuracy == pytest.approx(14 / 20)
        assert report.majority_baseline == pytest.approx(5 / 20)
        # per-class F1: 4/5, 3/4, 3/5, 4/7, 4/5
        assert report.macro_f1 == pytest.approx(493 / 700)
        assert report.confusion == (
            (2, 1, 0, 0, 0),
            (0, 3, 1, 0, 0),
            (0, 0, 3, 1, 1),
            (0, 0, 1, 2, 0),
            (0, 0, 0, 1, 4),
        )

    def test_unsupported_classes_carry_no_vote(self):
        report = classification_metrics([1, 1, 3], [1, 2, 3])
        assert report.accuracy == pytest.approx(2 / 3)
        # class 2 has predictions but no support, so macro spans {1, 3}
        assert report.macro_f1 == pytest.approx((2 / 3 + 1.0) / 2)

    def test_perfect_predictions(self):
        report = classification_metrics([1, 2, 3, 4, 5], [1, 2, 3, 4, 5])
        assert report.accuracy == 1.0
        assert report.macro_f1 == 1.0

    def test_length_mismatch(self):
        with pytest.raises(LengthMismatch):
            classification_metrics([1, 2], [1])

    def test_empty_rejected(self):
        with pytest.raises(EmptyTestSet):
            classification_metrics([], [])

    def test_json_dict_shape(self):
        payload = classification_metrics(self.Y_TRUE, self.Y_PRED).to_json_dict()
        assert payload["classes"] == [1, 2, 3, 4, 5]
        assert len(payload["confusion"]) == 5


class TestEvaluateClassifier:
    def test_empty_corpus_rejected(self):
        model = stub_model([0.0] * 5)
        with pytest.raises(EmptyTestSet):
            evaluate_classifier(model, Corpus(users=(), dialogs={}))

    def test_stub_model_matches_hand_count(self):
        # a model that always answers 3 scores exactly the label-3 share
        corpus = separable_corpus()
        model = stub_model([0.0, 0.0, 1.0, 0.0, 0.0])
        report = evaluate_classifier(model, corpus)
        assert report.accuracy == 0.0
        assert report.majority_baseline == pytest.approx(0.5)


class TestSerialization:
    def test_round_trip(self, tmp_path):
        model = train_classifier(separable_corpus())
        path = tmp_path / "model.json"
        save_classifier(model, path)
        loaded = load_classifier(path)
        assert loaded.classes == model.classes
        assert np.array_equal(loaded.weights, model.weights)
        probe = np.arange(N_FEATURES, dtype=float)
        assert np.array_equal(loaded.scores(probe), model.scores(probe))

    def test_byte_stable(self, tmp_path):
        model = train_classifier(separable_corpus())
        save_classifier(model, tmp_path / "a.json")
        save_classifier(model, tmp_path / "b.json")
        assert (tmp_path / "a.json").read_bytes() == (tmp_path / "b.json").read_bytes()

    def test_wrong_format_rejected(self):
        payload = classifier_to_json_dict(train_classifier(separable_corpus()))
        payload["format"] = "trust-model/v0"
        with pytest.raises(InvalidConfig):
            classifier_from_json_dict(payload)

    def test_schema_drift_rejected(self):
        payload = classifier_to_json_dict(train_classifier(separable_corpus()))
        payload["schema_version"] = "turn-features/v0"
        with pytest.raises(SchemaMismatch):
            classifier_from_json_dict(payload)
