"""tokforge command line.

One entry point, one subcommand per pipeline step: tokenizer training and
merging, token-efficiency stats, embedding resize plans, conversation
cleaning and generation, judge-based evaluation, score reports, and
training-config emission.  Every run writes a manifest recording the tool
version, resolved options, and input hashes, so outputs are traceable and
reruns reproducible.

Exit codes: 0 success, 1 runtime failure, 2 usage error.  Endpoint auth
tokens are read from environment variables only.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
from datetime import datetime, timezone
from pathlib import Path

from . import __version__
from .bpe import load_tokenizer, merge_vocab, save_tokenizer, train_bpe
from .client import DEFAULT_TOKEN_ENV, RetryPolicy, make_client
from .conversation import (
    LANGUAGES,
    GenerationParams,
    read_conversations,
    segment,
    write_conversations,
)
from .conversation import filter_languages as _filter_languages
from .errors import ConfigError, InputError, TokforgeError
from .evaluation import (
    aggregate,
    read_eval_samples,
    read_responses,
    read_verdicts,
    reclassify,
    report_row,
    run_judging,
    write_failures,
    write_verdicts,
)
from .generate import generate_conversations
from .manifest import RunManifest, file_sha256
from .resize import INIT_MEAN, INIT_ZERO, resize_plan
from .templates import (
    JUDGE_PROMPT_GOLD,
    JUDGE_PROMPT_PLAIN,
    SEED_PROMPT,
    template_hash,
)
from .tokstats import tok_stats
from .trainconfig import dataset_label, emit_train_config, write_train_config

# Fixed timestamp used with mock endpoints so reruns are byte-identical.
_MOCK_TS = "1970-01-01T00:00:00+00:00"


def _now() -> str:
    return datetime.now(timezone.utc).isoformat()


def _jsonable(value):
    if isinstance(value, (list, tuple)):
        return [_jsonable(v) for v in value]
    if isinstance(value, dict):
        return {k: _jsonable(v) for k, v in value.items()}
    if isinstance(value, Path):
        return str(value)
    return value


def _input_hashes(paths) -> dict[str, str]:
    """Hash input files; for a tokenizer directory, hash the files inside
    (its own manifest excluded — it describes provenance, not content)."""
    out: dict[str, str] = {}
    for p in paths:
        p = Path(p)
        if p.is_dir():
            for child in sorted(p.iterdir()):
                if child.is_file() and child.name != "manifest.json":
                    out[str(child)] = file_sha256(child)
        else:
            out[str(p)] = file_sha256(p)
    return out


def _write_manifest(path, subcommand, args, inputs, templates=()) -> None:
    config = {
        k: _jsonable(v)
        for k, v in vars(args).items()
        if k not in ("func", "config", "subcommand") and not k.startswith("_")
    }
    RunManifest(
        tool="tokforge",
        version=__version__,
        subcommand=subcommand,
        config=config,
        inputs=_input_hashes(inputs),
        templates={name: template_hash(name) for name in templates},
        seed=args.seed,
        started=args._started,
        finished=_now(),
    ).save(path)


def _write_json(path, payload) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as f:
        json.dump(payload, f, indent=2, sort_keys=True, ensure_ascii=False)
        f.write("\n")


def _read_lines(path) -> list[str]:
    return Path(path).read_text(encoding="utf-8").splitlines()


def _read_seeds(path) -> list[tuple[str, str]]:
    seeds = []
    with open(path, encoding="utf-8") as f:
        for lineno, line in enumerate(f):
            line = line.strip()
            if not line:
                continue
            try:
                row = json.loads(line)
                seeds.append((str(row["id"]), row["seed"]))
            except (json.JSONDecodeError, KeyError, TypeError) as e:
                raise InputError(f"{path}:{lineno + 1}: bad seed row: {e}")
    return seeds


def _name_eq_dir(value: str) -> tuple[str, str]:
    name, sep, directory = value.partition("=")
    if not sep or not name or not directory:
        raise argparse.ArgumentTypeError(f"expected name=<dir>, got {value!r}")
    return name, directory


def _mock_inputs(endpoint: str) -> list[str]:
    return [endpoint[len("mock:") :]] if endpoint.startswith("mock:") else []


# --- subcommand handlers --------------------------------------------------

def cmd_train_bpe(args) -> None:
    lines = _read_lines(args.input)
    tokenizer = train_bpe(
        lines, args.vocab_size, byte_fallback=not args.no_byte_fallback
    )
    out = Path(args.out)
    save_tokenizer(tokenizer, out)
    _write_manifest(out / "manifest.json", "train-bpe", args, [args.input])
    print(f"trained {len(tokenizer.vocab)} tokens -> {out}")


def cmd_merge_vocab(args) -> None:
    merged = merge_vocab(load_tokenizer(args.base), load_tokenizer(args.ext))
    out = Path(args.out)
    save_tokenizer(merged, out)
    _write_manifest(out / "manifest.json", "merge-vocab", args, [args.base, args.ext])
    print(f"merged vocabulary: {len(merged.vocab)} tokens -> {out}")


def cmd_tok_stats(args) -> None:
    lines = _read_lines(args.input)
    tokenizers = [(name, load_tokenizer(d)) for name, d in args.tokenizer]
    report = tok_stats(lines, tokenizers).to_dict()
    if args.out:
        _write_json(args.out, report)
        _write_manifest(
            f"{args.out}.manifest.json",
            "tok-stats",
            args,
            [args.input] + [d for _, d in args.tokenizer],
        )
    else:
        json.dump(report, sys.stdout, indent=2, sort_keys=True)
        print()


def cmd_resize_plan(args) -> None:
    plan = resize_plan(
        load_tokenizer(args.base).vocab,
        load_tokenizer(args.merged).vocab,
        args.dim,
        args.init,
    )
    plan.save(args.out)
    _write_manifest(
        f"{args.out}.manifest.json", "resize-plan", args, [args.base, args.merged]
    )
    print(f"resize plan: {plan.base_size} -> {plan.merged_size} rows")


def cmd_clean_conv(args) -> None:
    convs = read_conversations(args.input)
    keep = [part for part in args.keep.split(",") if part]
    kept, report = _filter_languages(convs, keep)
    tokenizer = load_tokenizer(args.tokenizer)
    segments = []
    for conv in kept:
        segments.extend(segment(conv, tokenizer, max_tokens=args.max_tokens))
    write_conversations(args.out, segments)
    _write_json(
        f"{args.out}.report.json",
        {
            "filter": report.to_dict(),
            "segmentation": {
                "input_conversations": len(kept),
                "output_segments": len(segments),
            },
        },
    )
    _write_manifest(
        f"{args.out}.manifest.json", "clean-conv", args, [args.input, args.tokenizer]
    )
    print(f"kept {len(kept)}/{len(convs)} conversations, {len(segments)} segments")


def cmd_gen_conv(args) -> None:
    seeds = _read_seeds(args.seeds)
    client = make_client(
        args.endpoint, token_env=args.token_env, min_interval=args.min_interval
    )
    params = GenerationParams(
        temperature=args.temperature,
        max_new_tokens=args.max_new_tokens,
        model=args.model,
    )
    mock = args.endpoint.startswith("mock:")
    convs, failures = generate_conversations(
        seeds,
        client,
        params=params,
        turns_target=args.turns,
        max_workers=1 if mock else args.threads,
        retry=RetryPolicy(max_retries=args.max_retries),
    )
    write_conversations(args.out, convs)
    with open(f"{args.out}.failures.jsonl", "w", encoding="utf-8", newline="\n") as f:
        for failure in failures:
            f.write(json.dumps(failure.to_dict(), ensure_ascii=False) + "\n")
    _write_manifest(
        f"{args.out}.manifest.json",
        "gen-conv",
        args,
        [args.seeds] + _mock_inputs(args.endpoint),
        templates=[SEED_PROMPT],
    )
    print(f"generated {len(convs)} conversations, {len(failures)} failures")


def cmd_evaluate(args) -> None:
    samples = reclassify(read_eval_samples(args.eval_set))
    responses = read_responses(args.responses)
    client = make_client(
        args.judge_endpoint, token_env=args.token_env, min_interval=args.min_interval
    )
    mock = args.judge_endpoint.startswith("mock:")
    verdicts, failures = run_judging(
        samples,
        responses,
        client,
        params=GenerationParams(
            temperature=args.temperature,
            max_new_tokens=args.max_new_tokens,
            model=args.judge_model,
        ),
        retry=RetryPolicy(max_retries=args.max_retries),
        missing_gold=args.missing_gold,
        max_workers=1 if mock else args.threads,
        clock=(lambda: _MOCK_TS) if mock else _now,
    )
    write_verdicts(args.out, verdicts)
    write_failures(f"{args.out}.failures.jsonl", failures)
    _write_manifest(
        f"{args.out}.manifest.json",
        "evaluate",
        args,
        [args.eval_set, args.responses] + _mock_inputs(args.judge_endpoint),
        templates=[JUDGE_PROMPT_GOLD, JUDGE_PROMPT_PLAIN],
    )
    print(f"judged {len(verdicts)} responses, {len(failures)} failures")


def cmd_score_report(args) -> None:
    verdicts = read_verdicts(args.verdicts)
    samples = reclassify(read_eval_samples(args.eval_set))
    models = sorted({v.model for v in verdicts})
    rows = [report_row(aggregate(verdicts, samples, model=m)) for m in models]
    _write_json(args.out, {"rows": rows})
    _write_manifest(
        f"{args.out}.manifest.json",
        "score-report",
        args,
        [args.verdicts, args.eval_set],
    )
    print(f"wrote {len(rows)} model row(s) -> {args.out}")


def cmd_emit_train_config(args) -> None:
    overrides = {}
    for item in args.set:
        key, sep, raw = item.partition("=")
        if not sep or not key:
            raise ConfigError(f"--set expects field=value, got {item!r}")
        try:
            overrides[key] = json.loads(raw)
        except json.JSONDecodeError:
            overrides[key] = raw
    labels = []
    for item in args.dataset:
        language, sep, name = item.partition(":")
        if not sep:
            raise ConfigError(f"--dataset expects lang:name, got {item!r}")
        labels.append(dataset_label(language, name))
    config = emit_train_config(overrides, labels)
    write_train_config(args.out, config)
    _write_manifest(f"{args.out}.manifest.json", "emit-train-config", args, [])
    print(f"wrote training config -> {args.out}")


# --- parser ---------------------------------------------------------------

def build_parser():
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--seed", type=int, default=0, help="seed for all randomness")
    common.add_argument("--threads", type=int, default=1, help="worker threads")
    common.add_argument(
        "--config",
        help="JSON file of option defaults for the subcommand (flags override)",
    )
    common_dests = {"seed", "threads", "config"}

    parser = argparse.ArgumentParser(
        prog="tokforge",
        description="Tokenizer extension, corpus cleaning, conversation "
        "generation, and judge-based evaluation pipelines.",
    )
    parser.add_argument(
        "--version", action="version", version=f"%(prog)s {__version__}"
    )
    sub = parser.add_subparsers(dest="subcommand", metavar="subcommand")
    registry: dict[str, dict] = {}

    def new(name, help_text, func):
        sp = sub.add_parser(
            name, help=help_text, description=help_text, parents=[common]
        )
        sp.set_defaults(func=func)
        entry = {
            "parser": sp,
            "dests": set(common_dests),
            "actions": {},
            "repeatable": set(),
        }
        registry[name] = entry

        def arg(*a, **k):
            action = sp.add_argument(*a, **k)
            entry["dests"].add(action.dest)
            entry["actions"][action.dest] = action
            if k.get("action") == "append":
                entry["repeatable"].add(action.dest)

        return arg

    arg = new("train-bpe", "train a byte-level BPE tokenizer", cmd_train_bpe)
    arg("--input", required=True, help="line corpus (UTF-8, one sequence per line)")
    arg("--vocab-size", type=int, required=True, help="target vocabulary size")
    arg("--out", required=True, help="output tokenizer directory")
    arg(
        "--no-byte-fallback",
        action="store_true",
        help="restrict the alphabet to bytes seen in the corpus",
    )

    arg = new("merge-vocab", "graft an extension tokenizer onto a base", cmd_merge_vocab)
    arg("--base", required=True, help="base tokenizer directory")
    arg("--ext", required=True, help="extension tokenizer directory")
    arg("--out", required=True, help="output tokenizer directory")

    arg = new("tok-stats", "compare tokens-per-line across tokenizers", cmd_tok_stats)
    arg("--input", required=True, help="line corpus to measure on")
    arg(
        "--tokenizer",
        action="append",
        type=_name_eq_dir,
        required=True,
        metavar="NAME=DIR",
        help="tokenizer to compare (repeat; first is the baseline)",
    )
    arg("--out", help="report JSON path (default: stdout)")

    arg = new("resize-plan", "plan the embedding-matrix resize", cmd_resize_plan)
    arg("--base", required=True, help="base tokenizer directory")
    arg("--merged", required=True, help="merged tokenizer directory")
    arg("--dim", type=int, required=True, help="embedding dimension")
    arg("--init", choices=[INIT_MEAN, INIT_ZERO], default=INIT_MEAN)
    arg("--out", required=True, help="plan JSON path")

    arg = new(
        "clean-conv",
        "filter conversations by language and split to a token budget",
        cmd_clean_conv,
    )
    arg("--in", dest="input", required=True, help="conversations JSONL")
    arg(
        "--keep",
        default="zh,en",
        help=f"comma-separated languages to keep, from {','.join(LANGUAGES)}",
    )
    arg("--max-tokens", type=int, default=2048, help="per-segment token budget")
    arg("--tokenizer", required=True, help="tokenizer directory for token counts")
    arg("--out", required=True, help="cleaned conversations JSONL")

    arg = new(
        "gen-conv",
        "generate multi-turn conversations from seed first turns",
        cmd_gen_conv,
    )
    arg("--seeds", required=True, help='seeds JSONL ({"id", "seed"} rows)')
    arg("--endpoint", required=True, help="chat endpoint URL, or mock:<script.jsonl>")
    arg("--temperature", type=float, default=0.001)
    arg("--max-new-tokens", type=int, default=1024)
    arg("--model", default="gpt-3.5-turbo", help="generator model name")
    arg("--turns", type=int, default=6, help="requested turn count")
    arg("--max-retries", type=int, default=3)
    arg("--min-interval", type=float, default=0.0, help="seconds between requests")
    arg(
        "--token-env",
        default=DEFAULT_TOKEN_ENV,
        help="environment variable holding the endpoint auth token",
    )
    arg("--out", required=True, help="conversations JSONL")

    arg = new("evaluate", "score responses with a judge endpoint", cmd_evaluate)
    arg("--eval-set", required=True, help="evaluation samples JSONL")
    arg("--responses", required=True, help="model responses JSONL")
    arg(
        "--judge-endpoint",
        required=True,
        help="judge endpoint URL, or mock:<script.jsonl>",
    )
    arg("--judge-model", default="gpt-4", help="judge model name")
    arg("--temperature", type=float, default=0.0)
    arg("--max-new-tokens", type=int, default=1024)
    arg("--max-retries", type=int, default=3)
    arg("--min-interval", type=float, default=0.0, help="seconds between requests")
    arg(
        "--missing-gold",
        choices=["warn", "error"],
        default="warn",
        help="what to do when a gold-bearing category lacks a gold answer",
    )
    arg(
        "--token-env",
        default=DEFAULT_TOKEN_ENV,
        help="environment variable holding the endpoint auth token",
    )
    arg("--out", required=True, help="verdicts JSONL")

    arg = new("score-report", "aggregate verdicts into a results table", cmd_score_report)
    arg("--verdicts", required=True, help="verdicts JSONL")
    arg("--eval-set", required=True, help="evaluation samples JSONL")
    arg("--out", required=True, help="report JSON path")

    arg = new(
        "emit-train-config",
        "write the fine-tuning hyper-parameter config",
        cmd_emit_train_config,
    )
    arg(
        "--set",
        action="append",
        default=[],
        metavar="FIELD=VALUE",
        help="override a config field (repeatable)",
    )
    arg(
        "--dataset",
        action="append",
        default=[],
        metavar="LANG:NAME",
        help="tag a training dataset, e.g. zh:alpaca (repeatable)",
    )
    arg("--out", required=True, help="config JSON path")

    return parser, registry


def _apply_config_file(path, rest, registry) -> None:
    try:
        with open(path, encoding="utf-8") as f:
            cfg = json.load(f)
    except (OSError, json.JSONDecodeError) as e:
        raise ConfigError(f"cannot read config file {path}: {e}")
    if not isinstance(cfg, dict):
        raise ConfigError(f"config file {path} must hold a JSON object")
    name = next((a for a in rest if not a.startswith("-")), None)
    if name is None or name not in registry:
        raise ConfigError("--config needs a subcommand to apply its values to")
    entry = registry[name]
    unknown = sorted(set(cfg) - entry["dests"])
    if unknown:
        raise ConfigError(
            f"config file {path}: unknown option(s) for {name}: {unknown}"
        )
    for dest in cfg:
        if dest in entry["repeatable"]:
            raise ConfigError(
                f"config file {path}: {dest!r} is repeatable and must be "
                f"given on the command line"
            )
        action = entry["actions"].get(dest)
        if action is not None:
            # a config-file value satisfies a required option
            action.required = False
    entry["parser"].set_defaults(**cfg)


def main(argv=None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    logging.basicConfig(
        level=logging.WARNING, format="%(levelname)s %(name)s: %(message)s"
    )
    pre = argparse.ArgumentParser(add_help=False)
    pre.add_argument("--config")
    known, rest = pre.parse_known_args(argv)
    parser, registry = build_parser()
    try:
        if known.config:
            _apply_config_file(known.config, rest, registry)
        args = parser.parse_args(rest)
        if not hasattr(args, "func"):
            parser.print_usage(sys.stderr)
            return 2
        args._started = _now()
        args.func(args)
    except TokforgeError as e:
        print(f"tokforge: error: {e}", file=sys.stderr)
        return 1
    except OSError as e:
        print(f"tokforge: error: {e}", file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
