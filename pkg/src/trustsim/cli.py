"""Batch command-line front end.

Every stochastic subcommand takes an explicit --seed; outputs land in
--out together with manifest.json listing the resolved config and the
sha256 of each artifact, so identical invocations are checkable for
bit-identical results. Exit codes: 0 success, 1 usage, 2 validation,
3 runtime failure.
"""

from __future__ import annotations

import argparse
import csv
import hashlib
import json
import sys
from pathlib import Path

from .behavior_tables import TableMode, build_table, load_table, save_table, table_summary
from .corpus import load_corpus, save_corpus
from .errors import TrustSimError
from .fidelity import (
    compare_modes,
    evaluate_simulator,
    render_report_text,
    report_csv_rows,
)
from .rl_env import Hyperparams, RewardConfig, TrustSimEnv, train_tabular_policy
from .sampling import RandomStream
from .simulator import replay_conditions, save_simulated_log
from .synth import GeneratorConfig, generate_synthetic_corpus
from .trust_model import TrainConfig, save_classifier, train_classifier
from .user_model import fit_trait_distributions

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_VALIDATION = 2
EXIT_RUNTIME = 3

MODE_NAMES = {m.value: m for m in TableMode}


class _Parser(argparse.ArgumentParser):
    # argparse exits 2 on usage errors; the contract here reserves 2 for
    # validation failures, so remap to 1.
    def error(self, message):
        self.print_usage(sys.stderr)
        print(f"{self.prog}: error: {message}", file=sys.stderr)
        raise SystemExit(EXIT_USAGE)


def _sha256(path: Path) -> str:
    digest = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 16), b""):
            digest.update(chunk)
    return digest.hexdigest()


def _write_json(path: Path, payload) -> None:
    path.write_text(json.dumps(payload, indent=2, sort_keys=True) + "\n",
                    encoding="utf-8")


def _write_manifest(out_dir: Path, command: str, config: dict, artifacts) -> None:
    manifest = {
        "command": command,
        "config": config,
        "artifacts": {name: f"sha256:{_sha256(out_dir / name)}" for name in artifacts},
    }
    _write_json(out_dir / "manifest.json", manifest)


def _out_dir(args) -> Path:
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    return out


def _load_generator_config(args) -> GeneratorConfig:
    if getattr(args, "config", None):
        payload = json.loads(Path(args.config).read_text(encoding="utf-8"))
        config = GeneratorConfig.from_json_dict(payload)
    else:
        config = GeneratorConfig()
    overrides = {}
    if args.dialogs is not None:
        overrides["n_dialogs"] = args.dialogs
    if args.drift is not None:
        overrides["step_drift"] = args.drift
    return config.with_overrides(**overrides) if overrides else config


def cmd_gen_corpus(args) -> int:
    out = _out_dir(args)
    config = _load_generator_config(args)
    corpus = generate_synthetic_corpus(config, args.seed)
    corpus_name = f"corpus.{args.format}"
    save_corpus(corpus, out / corpus_name, args.format)
    _write_json(out / "generator_params.json", config.to_json_dict())
    _write_manifest(out, "gen-corpus",
                    {"seed": args.seed, "format": args.format,
                     "generator": config.to_json_dict()},
                    [corpus_name, "generator_params.json"])
    print(f"wrote {corpus.exchange_count} exchanges "
          f"({corpus.n_dialogs} dialogs) to {out / corpus_name}")
    return EXIT_OK


def cmd_fit(args) -> int:
    out = _out_dir(args)
    corpus = load_corpus(args.corpus)
    mode = MODE_NAMES[args.mode]
    table = build_table(corpus, mode, args.fallback_threshold)
    save_table(table, out / "table.json")
    dists = fit_trait_distributions(corpus)
    _write_json(out / "trait_dists.json", dists.to_json_dict())
    model = train_classifier(corpus, TrainConfig(seed=args.seed))
    save_classifier(model, out / "trust_model.json")
    _write_json(out / "table_summary.json", table_summary(table).to_json_dict())
    _write_manifest(out, "fit",
                    {"corpus": str(args.corpus), "mode": args.mode,
                     "fallback_threshold": args.fallback_threshold,
                     "seed": args.seed},
                    ["table.json", "trait_dists.json", "trust_model.json",
                     "table_summary.json"])
    print(f"fitted {mode.value} table ({len(table.cells)} cells), "
          f"trait distributions, and trust model under {out}")
    return EXIT_OK


def cmd_simulate(args) -> int:
    out = _out_dir(args)
    corpus = load_corpus(args.corpus)
    if args.table:
        table = load_table(args.table)
    else:
        table = build_table(corpus, MODE_NAMES[args.mode], args.fallback_threshold)
    log = replay_conditions(corpus, table, RandomStream(args.seed, "replay"))
    log_name = f"sim_log.{args.format}"
    save_simulated_log(log, out / log_name, args.format)
    _write_manifest(out, "simulate",
                    {"corpus": str(args.corpus), "seed": args.seed,
                     "mode": table.mode.value, "format": args.format,
                     "table": str(args.table) if args.table else "fit from corpus"},
                    [log_name])
    print(f"replayed {len(log)} turns (fallback rate {log.fallback_rate():.3f}) "
          f"to {out / log_name}")
    return EXIT_OK


def cmd_evaluate(args) -> int:
    out = _out_dir(args)
    corpus = load_corpus(args.corpus)
    if args.table:
        table = load_table(args.table)
    else:
        table = build_table(corpus, MODE_NAMES[args.mode], args.fallback_threshold)
    log = replay_conditions(corpus, table, RandomStream(args.seed, "replay"))
    report = evaluate_simulator(corpus, log, table.mode.value)
    _write_json(out / "report.json", report.to_json_dict())
    (out / "report.txt").write_text(render_report_text(report), encoding="utf-8")
    _write_csv(out / "report.csv", report_csv_rows(report))
    _write_manifest(out, "evaluate",
                    {"corpus": str(args.corpus), "seed": args.seed,
                     "mode": table.mode.value},
                    ["report.json", "report.txt", "report.csv"])
    print(render_report_text(report))
    return EXIT_OK


def cmd_compare(args) -> int:
    out = _out_dir(args)
    corpus = load_corpus(args.corpus)
    comparison = compare_modes(corpus, args.seed,
                               train_fraction=args.train_fraction,
                               fallback_threshold=args.fallback_threshold)
    _write_json(out / "comparison.json", comparison.to_json_dict())
    (out / "comparison.txt").write_text(render_report_text(comparison),
                                        encoding="utf-8")
    _write_csv(out / "comparison.csv", report_csv_rows(comparison))
    _write_manifest(out, "compare",
                    {"corpus": str(args.corpus), "seed": args.seed,
                     "train_fraction": args.train_fraction,
                     "fallback_threshold": args.fallback_threshold},
                    ["comparison.json", "comparison.txt", "comparison.csv"])
    print(render_report_text(comparison))
    return EXIT_OK


def cmd_train_rl(args) -> int:
    out = _out_dir(args)
    corpus = load_corpus(args.corpus)
    mode = MODE_NAMES[args.mode]
    table = build_table(corpus, mode, args.fallback_threshold)
    dists = fit_trait_distributions(corpus)
    model = train_classifier(corpus, TrainConfig(seed=args.seed))
    env = TrustSimEnv(table, dists, model,
                      RewardConfig(args.score_weight, args.trust_weight))
    result = train_tabular_policy(env, args.episodes, Hyperparams(seed=args.seed))
    _write_json(out / "policy.json", {
        "format": "tabular-policy/v1",
        "policy": [int(a) for a in result.policy],
        "q": [[float(v) for v in row] for row in result.q],
    })
    _write_csv(out / "returns.csv",
               [("episode", "return")] + [(i, repr(r)) for i, r in
                                          enumerate(result.returns)])
    _write_manifest(out, "train-rl",
                    {"corpus": str(args.corpus), "mode": args.mode,
                     "episodes": args.episodes, "seed": args.seed,
                     "score_weight": args.score_weight,
                     "trust_weight": args.trust_weight,
                     "fallback_threshold": args.fallback_threshold},
                    ["policy.json", "returns.csv"])
    mean_tail = sum(result.returns[-100:]) / min(100, len(result.returns))
    print(f"trained {args.episodes} episodes; mean return over last 100: "
          f"{mean_tail:.3f}")
    return EXIT_OK


def _write_csv(path: Path, rows) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerows(rows)


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="trustsim",
                     description="Corpus-based trust-aware user simulation")
    sub = parser.add_subparsers(dest="command", required=True,
                                parser_class=_Parser)

    def add_common(p, needs_corpus=True):
        if needs_corpus:
            p.add_argument("--corpus", required=True, help="corpus file (csv/jsonl)")
        p.add_argument("--seed", type=int, required=True,
                       help="root random seed for this run")
        p.add_argument("--out", default="out", help="output directory")

    p = sub.add_parser("gen-corpus", help="generate a synthetic corpus")
    add_common(p, needs_corpus=False)
    p.add_argument("--dialogs", type=int, default=None,
                   help="dialog count override")
    p.add_argument("--drift", type=float, default=None,
                   help="step-drift amplitude override (0..1)")
    p.add_argument("--config", default=None,
                   help="generator config JSON (flags override its values)")
    p.add_argument("--format", choices=("csv", "jsonl"), default="csv")
    p.set_defaults(func=cmd_gen_corpus)

    p = sub.add_parser("fit", help="fit behavior table, traits, and trust model")
    add_common(p)
    p.add_argument("--mode", choices=tuple(MODE_NAMES), default="task-step")
    p.add_argument("--fallback-threshold", type=int, default=10)
    p.set_defaults(func=cmd_fit)

    p = sub.add_parser("simulate", help="replay corpus conditions through the simulator")
    add_common(p)
    p.add_argument("--table", default=None,
                   help="behavior table JSON (default: fit from --corpus)")
    p.add_argument("--mode", choices=tuple(MODE_NAMES), default="task-step")
    p.add_argument("--fallback-threshold", type=int, default=10)
    p.add_argument("--format", choices=("csv", "jsonl"), default="csv")
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("evaluate", help="replay and score one simulation mode")
    add_common(p)
    p.add_argument("--table", default=None)
    p.add_argument("--mode", choices=tuple(MODE_NAMES), default="task-step")
    p.add_argument("--fallback-threshold", type=int, default=10)
    p.set_defaults(func=cmd_evaluate)

    p = sub.add_parser("compare", help="train/test comparison of both modes")
    add_common(p)
    p.add_argument("--train-fraction", type=float, default=0.8)
    p.add_argument("--fallback-threshold", type=int, default=10)
    p.set_defaults(func=cmd_compare)

    p = sub.add_parser("train-rl", help="train the reference tabular policy")
    add_common(p)
    p.add_argument("--mode", choices=tuple(MODE_NAMES), default="task-step")
    p.add_argument("--fallback-threshold", type=int, default=10)
    p.add_argument("--episodes", type=int, required=True)
    p.add_argument("--score-weight", type=float, default=0.5)
    p.add_argument("--trust-weight", type=float, default=0.5)
    p.set_defaults(func=cmd_train_rl)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return exc.code if isinstance(exc.code, int) else EXIT_USAGE
    try:
        return args.func(args)
    except TrustSimError as exc:
        print(json.dumps({"error": type(exc).__name__, "message": str(exc)}),
              file=sys.stderr)
        return EXIT_VALIDATION
    except Exception as exc:  # noqa: BLE001 - boundary of the process
        print(json.dumps({"error": type(exc).__name__, "message": str(exc)}),
              file=sys.stderr)
        return EXIT_RUNTIME


if __name__ == "__main__":
    raise SystemExit(main())
