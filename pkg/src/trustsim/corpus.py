"""Dialog-corpus data model, file IO, and splitting.

A corpus holds one 12-step dialog per user. Every exchange records the
agent's proactive act, the user's observable behavior for that task step,
and the user's four self-reported trust annotations. Files are flat
(one row per exchange, user columns denormalized); see CORPUS_COLUMNS.
"""

from __future__ import annotations

import csv
import json
import math
from dataclasses import dataclass, fields
from enum import Enum
from pathlib import Path
from typing import Iterator

from .errors import (
    EmptyCorpus,
    IncompleteDialog,
    InvalidConfig,
    MissingColumn,
    StepOutOfRange,
    ValueOutOfRange,
)
from .sampling import RandomStream

STEPS_PER_DIALOG = 12
COMPLEXITY_LEVELS = (3, 4, 5)
MIN_DURATION_S = 20.0
LIKERT_MIN, LIKERT_MAX = 1, 5
AGE_MIN, AGE_MAX = 18, 60

# Synthetic game score table: a step with k options scores them
# 10, 20, ..., 10k; the agent-preferred option is the maximum.
OPTION_SCORE_UNIT = 10.0


class ProactiveAct(Enum):
    """The four agent act types, ordered by increasing autonomy."""

    NONE = "None"
    NOTIFICATION = "Notification"
    SUGGESTION = "Suggestion"
    INTERVENTION = "Intervention"


class Gender(Enum):
    MALE = "male"
    FEMALE = "female"
    OTHER = "other"


# Canonical act ordering used for one-hot encodings and action indices.
ACT_ORDER = (
    ProactiveAct.NONE,
    ProactiveAct.NOTIFICATION,
    ProactiveAct.SUGGESTION,
    ProactiveAct.INTERVENTION,
)


def complexity_of_step(step: int) -> int:
    """Number of options at a task step: the period-3 cycle 3,4,5 over 1..12."""
    if not isinstance(step, int) or not 1 <= step <= STEPS_PER_DIALOG:
        raise StepOutOfRange(f"step must be in 1..{STEPS_PER_DIALOG}, got {step}")
    return 3 + (step - 1) % 3


def option_scores(complexity: int) -> tuple[float, ...]:
    """Attainable option scores at a step of the given complexity."""
    if complexity not in COMPLEXITY_LEVELS:
        raise ValueOutOfRange("complexity", complexity)
    return tuple(OPTION_SCORE_UNIT * i for i in range(1, complexity + 1))


def max_option_score(complexity: int) -> float:
    return OPTION_SCORE_UNIT * complexity


def _check_likert(field_name: str, value) -> None:
    # bool passes isinstance(int) but is never a valid rating
    if isinstance(value, bool) or not isinstance(value, int) \
            or not LIKERT_MIN <= value <= LIKERT_MAX:
        raise ValueOutOfRange(field_name, value, detail="Likert value in 1..5")


@dataclass(frozen=True)
class Exchange:
    """One user-agent turn: the atomic corpus record."""

    dialog_id: str
    step: int
    complexity: int
    proactive_act: ProactiveAct
    game_score: float
    help_request: bool
    suggestion_request: bool
    duration: float
    difficulty: int
    trust: int
    competence: int
    reliability: int
    predictability: int

    def __post_init__(self):
        if not 1 <= self.step <= STEPS_PER_DIALOG:
            raise ValueOutOfRange("step", self.step)
        if self.complexity != complexity_of_step(self.step):
            raise ValueOutOfRange(
                "complexity", self.complexity,
                detail=f"step {self.step} has complexity {complexity_of_step(self.step)}",
            )
        if self.game_score < 0:
            raise ValueOutOfRange("game_score", self.game_score)
        if not self.duration > MIN_DURATION_S:
            raise ValueOutOfRange("duration", self.duration, detail="must exceed 20 s")
        _check_likert("difficulty", self.difficulty)
        _check_likert("trust", self.trust)
        _check_likert("competence", self.competence)
        _check_likert("reliability", self.reliability)
        _check_likert("predictability", self.predictability)


@dataclass(frozen=True)
class UserRecord:
    """Static per-user traits, observed (corpus) or sampled (simulation)."""

    user_id: str
    age: int
    gender: Gender
    technical_affinity: float
    trust_propensity: float
    domain_expertise: float
    openness: float
    conscientiousness: float
    extraversion: float
    agreeableness: float
    neuroticism: float

    def __post_init__(self):
        if not isinstance(self.age, int) or not AGE_MIN <= self.age <= AGE_MAX:
            raise ValueOutOfRange("age", self.age, detail="integer in 18..60")
        for name in SCALE_TRAITS:
            value = getattr(self, name)
            if not LIKERT_MIN <= value <= LIKERT_MAX:
                raise ValueOutOfRange(name, value, detail="scale value in 1..5")


# The 1..5 scale traits of a UserRecord, in schema order.
SCALE_TRAITS = (
    "technical_affinity",
    "trust_propensity",
    "domain_expertise",
    "openness",
    "conscientiousness",
    "extraversion",
    "agreeableness",
    "neuroticism",
)


@dataclass(frozen=True)
class Corpus:
    """All users plus one complete 12-step dialog per user."""

    users: tuple[UserRecord, ...]
    dialogs: dict[str, tuple[Exchange, ...]]

    def __post_init__(self):
        object.__setattr__(self, "users", tuple(self.users))
        object.__setattr__(
            self, "dialogs", {uid: tuple(exs) for uid, exs in self.dialogs.items()}
        )
        ids = [u.user_id for u in self.users]
        if len(set(ids)) != len(ids):
            raise ValueOutOfRange("user_id", "duplicate", detail="user ids must be unique")
        if set(self.dialogs) != set(ids):
            missing = set(ids).symmetric_difference(self.dialogs)
            raise IncompleteDialog(sorted(missing)[0] if missing else "?",
                                   "users and dialogs must match 1:1")
        for uid, exchanges in self.dialogs.items():
            if len(exchanges) != STEPS_PER_DIALOG:
                raise IncompleteDialog(uid, f"{len(exchanges)} exchanges, need 12")
            for i, ex in enumerate(exchanges, start=1):
                if ex.step != i:
                    raise IncompleteDialog(uid, f"steps out of order at position {i}")

    @property
    def n_dialogs(self) -> int:
        return len(self.users)

    @property
    def exchange_count(self) -> int:
        return sum(len(d) for d in self.dialogs.values())

    def user_by_id(self, user_id: str) -> UserRecord:
        for user in self.users:
            if user.user_id == user_id:
                return user
        raise KeyError(user_id)

    def iter_exchanges(self) -> Iterator[tuple[UserRecord, Exchange]]:
        """(user, exchange) pairs in canonical order: user list order, steps ascending."""
        for user in self.users:
            for ex in self.dialogs[user.user_id]:
                yield user, ex


# --- flat file schema -------------------------------------------------------

USER_COLUMNS = ("user_id", "age", "gender") + SCALE_TRAITS
EXCHANGE_COLUMNS = tuple(f.name for f in fields(Exchange))
CORPUS_COLUMNS = USER_COLUMNS + EXCHANGE_COLUMNS

_BOOL_FIELDS = {"help_request", "suggestion_request"}
_INT_FIELDS = {
    "age", "step", "complexity", "difficulty",
    "trust", "competence", "reliability", "predictability",
}
_FLOAT_FIELDS = set(SCALE_TRAITS) | {"game_score", "duration"}


def _parse_field(name: str, raw, row: int):
    """Raw file value -> typed value; raises ValueOutOfRange on bad input."""
    try:
        if name in _BOOL_FIELDS:
            if isinstance(raw, bool):
                return raw
            text = str(raw).strip().lower()
            if text in ("true", "1"):
                return True
            if text in ("false", "0"):
                return False
            raise ValueError(raw)
        if name in _INT_FIELDS:
            return int(raw)
        if name in _FLOAT_FIELDS:
            value = float(raw)
            if math.isnan(value) or math.isinf(value):
                raise ValueError(raw)
            return value
        if name == "gender":
            return Gender(str(raw).strip().lower())
        if name == "proactive_act":
            return ProactiveAct(str(raw).strip())
        return str(raw)
    except (ValueError, KeyError) as exc:
        raise ValueOutOfRange(name, raw, row=row, detail=str(exc)) from exc


def _format_field(value):
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, Enum):
        return value.value
    if isinstance(value, float):
        return repr(value)  # shortest exact round-trip
    return str(value)


def _infer_format(path: Path, file_format: str | None) -> str:
    if file_format is None:
        file_format = path.suffix.lstrip(".").lower()
    if file_format not in ("csv", "jsonl"):
        raise InvalidConfig(f"unsupported corpus format {file_format!r}")
    return file_format


def _read_rows(path: Path, file_format: str) -> list[dict]:
    if file_format == "csv":
        with path.open(newline="", encoding="utf-8") as handle:
            reader = csv.DictReader(handle)
            header = reader.fieldnames or []
            for col in CORPUS_COLUMNS:
                if col not in header:
                    raise MissingColumn(f"column {col!r} missing from {path}")
            return list(reader)
    rows = []
    with path.open(encoding="utf-8") as handle:
        for line in handle:
            line = line.strip()
            if line:
                rows.append(json.loads(line))
    for i, row in enumerate(rows, start=1):
        for col in CORPUS_COLUMNS:
            if col not in row:
                raise MissingColumn(f"column {col!r} missing from {path} (row {i})")
    return rows


def load_corpus(path, file_format: str | None = None) -> Corpus:
    """Load and validate a corpus from a CSV or JSONL file.

    Rows are grouped by user_id; each user must contribute exactly the
    steps 1..12. Row numbers in errors are 1-based data rows.
    """
    path = Path(path)
    file_format = _infer_format(path, file_format)
    raw_rows = _read_rows(path, file_format)

    users: list[UserRecord] = []
    seen: dict[str, UserRecord] = {}
    dialog_rows: dict[str, list[Exchange]] = {}
    for i, raw in enumerate(raw_rows, start=1):
        parsed = {name: _parse_field(name, raw[name], i) for name in CORPUS_COLUMNS}
        try:
            user = UserRecord(**{name: parsed[name] for name in USER_COLUMNS})
            exchange = Exchange(**{name: parsed[name] for name in EXCHANGE_COLUMNS})
        except ValueOutOfRange as exc:
            raise ValueOutOfRange(exc.field, exc.value, row=i) from exc
        uid = user.user_id
        if uid not in seen:
            seen[uid] = user
            users.append(user)
            dialog_rows[uid] = []
        elif seen[uid] != user:
            raise ValueOutOfRange("user_id", uid, row=i,
                                  detail="user columns differ between rows")
        dialog_rows[uid].append(exchange)

    for uid, exchanges in dialog_rows.items():
        dialog_rows[uid] = sorted(exchanges, key=lambda ex: ex.step)
    return Corpus(users=tuple(users), dialogs=dialog_rows)


def save_corpus(corpus: Corpus, path, file_format: str | None = None) -> None:
    """Write the corpus in the flat row schema; load(save(c)) == c."""
    path = Path(path)
    file_format = _infer_format(path, file_format)
    rows = []
    for user, ex in corpus.iter_exchanges():
        row = {name: getattr(user, name) for name in USER_COLUMNS}
        row.update({name: getattr(ex, name) for name in EXCHANGE_COLUMNS})
        rows.append(row)
    if file_format == "csv":
        with path.open("w", newline="", encoding="utf-8") as handle:
            writer = csv.writer(handle, lineterminator="\n")
            writer.writerow(CORPUS_COLUMNS)
            for row in rows:
                writer.writerow([_format_field(row[c]) for c in CORPUS_COLUMNS])
    else:
        with path.open("w", encoding="utf-8") as handle:
            for row in rows:
                payload = {
                    c: (row[c].value if isinstance(row[c], Enum) else row[c])
                    for c in CORPUS_COLUMNS
                }
                handle.write(json.dumps(payload) + "\n")


def split_corpus(corpus: Corpus, train_fraction: float, seed: int) -> tuple[Corpus, Corpus]:
    """Deterministic dialog-granularity split: floor(fraction * dialogs) train.

    A user's dialog never straddles the split; both partitions keep the
    original user order.
    """
    if corpus.n_dialogs == 0:
        raise EmptyCorpus("cannot split an empty corpus")
    if not 0 < train_fraction < 1:
        raise InvalidConfig(f"train_fraction must be in (0,1), got {train_fraction}")
    n_train = math.floor(train_fraction * corpus.n_dialogs)
    perm = RandomStream(seed, "split").gen.permutation(corpus.n_dialogs)
    train_ids = {corpus.users[i].user_id for i in perm[:n_train]}

    def subset(keep: set[str]) -> Corpus:
        users = tuple(u for u in corpus.users if u.user_id in keep)
        dialogs = {u.user_id: corpus.dialogs[u.user_id] for u in users}
        return Corpus(users=users, dialogs=dialogs)

    test_ids = {u.user_id for u in corpus.users} - train_ids
    return subset(train_ids), subset(test_ids)
