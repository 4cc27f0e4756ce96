"""Judge-based evaluation: category-aware prompts, score parsing, and
macro-averaged reports.

Samples fall into nine categories.  Three of them (rewrite, generation,
brainstorming) have no single correct answer, so their judge prompts never
include a reference; the other six normally carry a gold answer.  Scores
are decimals in [0, 1]; reports average per category first, then across
categories (macro), with and without the catch-all "others" bucket.
"""

from __future__ import annotations

import json
import logging
import math
import re
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from datetime import datetime, timezone
from pathlib import Path
from typing import Callable, Iterable, Sequence

from .client import ChatClient, RetryPolicy, call_with_retries
from .conversation import GenerationParams
from .corpus import CleaningReport, Document, semantic_dedup
from .errors import (
    ConsistencyError,
    InputError,
    ScoreParseError,
    TransportError,
)
from .templates import JUDGE_PROMPT_GOLD, JUDGE_PROMPT_PLAIN, load_template

logger = logging.getLogger(__name__)

CATEGORIES = (
    "others",
    "rewrite",
    "classification",
    "generation",
    "summarization",
    "extract",
    "open_qa",
    "brainstorming",
    "closed_qa",
)
# Open-ended categories: no reference answer is shown to the judge.
NO_GOLD_CATEGORIES = frozenset({"rewrite", "generation", "brainstorming"})
# Raw sets may still label math/code tasks; they fold into "others".
RECLASSIFY = {"math": "others", "code": "others"}


@dataclass
class EvalSample:
    id: str
    instruction: str
    category: str
    gold: str | None = None

    def to_dict(self) -> dict:
        d = {"id": self.id, "instruction": self.instruction, "category": self.category}
        if self.gold is not None:
            d["gold"] = self.gold
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "EvalSample":
        category = d["category"]
        if category not in CATEGORIES and category not in RECLASSIFY:
            raise InputError(f"sample {d.get('id')!r}: unknown category {category!r}")
        return cls(
            id=str(d["id"]),
            instruction=d["instruction"],
            category=category,
            gold=d.get("gold"),
        )


def reclassify(samples: Sequence[EvalSample]) -> list[EvalSample]:
    """Normalize categories: math/code fold into others, anything outside
    the known set is an error, and open-ended categories lose any gold
    answer they accidentally carry."""
    out = []
    for s in samples:
        category = RECLASSIFY.get(s.category, s.category)
        if category not in CATEGORIES:
            raise InputError(f"sample {s.id!r}: unknown category {s.category!r}")
        gold = None if category in NO_GOLD_CATEGORIES else s.gold
        out.append(EvalSample(s.id, s.instruction, category, gold))
    return out


def dedup_evalset(
    samples: Sequence[EvalSample], **dedup_kwargs
) -> tuple[list[EvalSample], CleaningReport]:
    """Near-duplicate removal over instructions (same machinery as corpus
    semantic dedup)."""
    docs = [Document(id=s.id, text=s.instruction) for s in samples]
    kept_docs, report = semantic_dedup(docs, **dedup_kwargs)
    kept_ids = {d.id for d in kept_docs}
    return [s for s in samples if s.id in kept_ids], report


def build_judge_prompt(
    sample: EvalSample,
    response: str,
    missing_gold: str = "warn",
) -> str:
    """Render the judge prompt for one (sample, response) pair.

    Open-ended categories always use the no-reference template.  A
    gold-bearing category without a gold answer either degrades to the
    no-reference template with a warning (default) or fails hard
    (``missing_gold="error"``)."""
    if sample.category not in CATEGORIES:
        raise InputError(
            f"sample {sample.id!r}: category {sample.category!r} is not "
            f"normalized (run reclassify first)"
        )
    if missing_gold not in ("warn", "error"):
        raise InputError(f"missing_gold must be 'warn' or 'error', got {missing_gold!r}")
    use_gold = sample.category not in NO_GOLD_CATEGORIES
    if use_gold and sample.gold is None:
        if missing_gold == "error":
            raise InputError(
                f"sample {sample.id!r} ({sample.category}) has no gold answer"
            )
        logger.warning(
            "sample %s (%s) has no gold answer; judging without reference",
            sample.id,
            sample.category,
        )
        use_gold = False
    if use_gold:
        return load_template(JUDGE_PROMPT_GOLD).format(
            instruction=sample.instruction, gold=sample.gold, response=response
        )
    return load_template(JUDGE_PROMPT_PLAIN).format(
        instruction=sample.instruction, response=response
    )


_NUMBER = re.compile(r"-?(?:\d+\.\d+|\.\d+|\d+)")


def parse_score(reply: str) -> float:
    """Extract the first decimal in the reply; it must lie in [0, 1].

    The first number decides: a reply leading with 1.2 is a parse error,
    not an invitation to hunt for a smaller number later in the text."""
    m = _NUMBER.search(reply)
    if m is None:
        raise ScoreParseError("no numeric score in judge reply", raw=reply)
    value = float(m.group())
    if not 0.0 <= value <= 1.0:
        raise ScoreParseError(
            f"score {m.group()} outside [0, 1]", raw=reply
        )
    return value


@dataclass
class JudgeVerdict:
    sample_id: str
    model: str
    score: float
    raw: str
    judge_model: str
    ts: str

    def __post_init__(self):
        if not 0.0 <= self.score <= 1.0:
            raise InputError(
                f"verdict for {self.sample_id!r}: score {self.score} outside [0, 1]"
            )

    def to_dict(self) -> dict:
        return {
            "sample_id": self.sample_id,
            "model": self.model,
            "score": self.score,
            "raw": self.raw,
            "judge_model": self.judge_model,
            "ts": self.ts,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "JudgeVerdict":
        return cls(
            sample_id=str(d["sample_id"]),
            model=d["model"],
            score=d["score"],
            raw=d.get("raw", ""),
            judge_model=d.get("judge_model", ""),
            ts=d.get("ts", ""),
        )


@dataclass
class JudgeFailure:
    sample_id: str
    model: str
    reason: str  # "transport" | "parse"
    detail: str
    raw: str | None = None

    def to_dict(self) -> dict:
        return {
            "sample_id": self.sample_id,
            "model": self.model,
            "reason": self.reason,
            "detail": self.detail,
            "raw": self.raw,
        }


def _utc_now() -> str:
    return datetime.now(timezone.utc).isoformat()


def judge(
    sample: EvalSample,
    response: str,
    model: str,
    client: ChatClient,
    params: GenerationParams | None = None,
    retry: RetryPolicy | None = None,
    missing_gold: str = "warn",
    clock: Callable[[], str] = _utc_now,
) -> JudgeVerdict:
    """Score one response with the judge endpoint.

    Transport failures are retried with exponential backoff (and re-raised
    once retries are exhausted); an unparseable or out-of-range reply
    raises ScoreParseError with the raw reply attached.  Judge sampling
    defaults to temperature 0 for reproducibility.
    """
    params = params or GenerationParams(temperature=0.0)
    prompt = build_judge_prompt(sample, response, missing_gold=missing_gold)
    reply = call_with_retries(lambda: client.complete(prompt, params), retry or RetryPolicy())
    score = parse_score(reply)
    return JudgeVerdict(
        sample_id=sample.id,
        model=model,
        score=score,
        raw=reply,
        judge_model=params.model,
        ts=clock(),
    )


@dataclass
class ResponseRow:
    sample_id: str
    model: str
    response: str


def run_judging(
    samples: Sequence[EvalSample],
    responses: Sequence[ResponseRow],
    client: ChatClient,
    params: GenerationParams | None = None,
    retry: RetryPolicy | None = None,
    missing_gold: str = "warn",
    max_workers: int = 1,
    clock: Callable[[], str] = _utc_now,
) -> tuple[list[JudgeVerdict], list[JudgeFailure]]:
    """Judge a batch of responses.

    Every response row ends up in exactly one of the two result lists —
    scored, or a structured failure — so nothing is silently dropped.
    Rows referencing unknown samples, or judging the same (sample, model)
    pair twice, are consistency errors.
    """
    by_id = {s.id: s for s in samples}
    seen: set[tuple[str, str]] = set()
    for row in responses:
        if row.sample_id not in by_id:
            raise ConsistencyError(
                f"response references unknown sample {row.sample_id!r}"
            )
        key = (row.sample_id, row.model)
        if key in seen:
            raise ConsistencyError(
                f"duplicate judgement for sample {row.sample_id!r}, "
                f"model {row.model!r}"
            )
        seen.add(key)

    def one(row: ResponseRow):
        sample = by_id[row.sample_id]
        try:
            return judge(
                sample,
                row.response,
                row.model,
                client,
                params=params,
                retry=retry,
                missing_gold=missing_gold,
                clock=clock,
            )
        except TransportError as e:
            return JudgeFailure(row.sample_id, row.model, "transport", str(e))
        except ScoreParseError as e:
            return JudgeFailure(row.sample_id, row.model, "parse", str(e), raw=e.raw)

    if max_workers <= 1:
        results = [one(row) for row in responses]
    else:
        with ThreadPoolExecutor(max_workers=max_workers) as pool:
            futures = [pool.submit(one, row) for row in responses]
            results = [f.result() for f in futures]
    verdicts = [r for r in results if isinstance(r, JudgeVerdict)]
    failures = [r for r in results if isinstance(r, JudgeFailure)]
    return verdicts, failures


@dataclass
class ScoreReport:
    model: str
    categories: dict[str, dict]  # category -> {"mean": float, "count": int}
    macro_ave: float
    macro_ave_wo_others: float
    warnings: list[str] = field(default_factory=list)

    def to_dict(self) -> dict:
        return {
            "model": self.model,
            "categories": self.categories,
            "macro_ave": self.macro_ave,
            "macro_ave_wo_others": self.macro_ave_wo_others,
            "warnings": self.warnings,
        }


def aggregate(
    verdicts: Sequence[JudgeVerdict],
    samples: Sequence[EvalSample],
    model: str | None = None,
) -> ScoreReport:
    """Per-category means plus macro averages for one model.

    Macro averages are unweighted means over category means; categories
    with no judged samples are excluded from them, with a warning.  The
    others-free macro additionally drops the catch-all bucket.
    """
    by_id = {s.id: s for s in samples}
    models = sorted({v.model for v in verdicts})
    if model is None:
        if len(models) > 1:
            raise ConsistencyError(
                f"verdicts cover several models {models}; pass model= to pick one"
            )
        model = models[0] if models else ""
    rows = [v for v in verdicts if v.model == model]
    seen: set[str] = set()
    scores: dict[str, list[float]] = {c: [] for c in CATEGORIES}
    for v in rows:
        sample = by_id.get(v.sample_id)
        if sample is None:
            raise ConsistencyError(
                f"verdict references unknown sample {v.sample_id!r}"
            )
        if v.sample_id in seen:
            raise ConsistencyError(
                f"sample {v.sample_id!r} judged more than once for model {model!r}"
            )
        seen.add(v.sample_id)
        if sample.category not in CATEGORIES:
            raise InputError(
                f"sample {sample.id!r}: category {sample.category!r} is not "
                f"normalized (run reclassify first)"
            )
        scores[sample.category].append(v.score)

    warnings: list[str] = []
    categories: dict[str, dict] = {}
    means: dict[str, float] = {}
    for category in CATEGORIES:
        values = scores[category]
        if values:
            # fsum: category means do not depend on verdict order
            mean = math.fsum(values) / len(values)
            categories[category] = {"mean": mean, "count": len(values)}
            means[category] = mean
        else:
            categories[category] = {"mean": None, "count": 0}
            warnings.append(f"category {category!r} has no judged samples")
            logger.warning("category %r has no judged samples", category)
    included = list(means.values())
    macro = math.fsum(included) / len(included) if included else 0.0
    wo = [m for c, m in means.items() if c != "others"]
    macro_wo = math.fsum(wo) / len(wo) if wo else 0.0
    return ScoreReport(
        model=model,
        categories=categories,
        macro_ave=macro,
        macro_ave_wo_others=macro_wo,
        warnings=warnings,
    )


def report_row(report: ScoreReport) -> dict:
    """Flatten a ScoreReport into one results-table row: model, the nine
    per-category means (null where nothing was judged), then the two macro
    averages."""
    row: dict = {"model": report.model}
    for category in CATEGORIES:
        row[category] = report.categories[category]["mean"]
    row["score_ave"] = report.macro_ave
    row["score_w/o_others"] = report.macro_ave_wo_others
    return row


# --- JSONL IO -------------------------------------------------------------

def read_eval_samples(path: str | Path) -> list[EvalSample]:
    return _read_jsonl(path, EvalSample.from_dict)


def read_responses(path: str | Path) -> list[ResponseRow]:
    def parse(d: dict) -> ResponseRow:
        return ResponseRow(str(d["sample_id"]), d["model"], d["response"])

    return _read_jsonl(path, parse)


def read_verdicts(path: str | Path) -> list[JudgeVerdict]:
    return _read_jsonl(path, JudgeVerdict.from_dict)


def write_verdicts(path: str | Path, verdicts: Iterable[JudgeVerdict]) -> None:
    _write_jsonl(path, (v.to_dict() for v in verdicts))


def write_failures(path: str | Path, failures: Iterable[JudgeFailure]) -> None:
    _write_jsonl(path, (f.to_dict() for f in failures))


def _read_jsonl(path: str | Path, parse: Callable[[dict], object]) -> list:
    out = []
    with open(path, encoding="utf-8") as f:
        for lineno, line in enumerate(f):
            line = line.strip()
            if not line:
                continue
            try:
                out.append(parse(json.loads(line)))
            except (json.JSONDecodeError, KeyError, TypeError) as e:
                raise InputError(f"{path}:{lineno + 1}: bad row: {e}")
    return out


def _write_jsonl(path: str | Path, rows: Iterable[dict]) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as f:
        for row in rows:
            f.write(json.dumps(row, ensure_ascii=False) + "\n")
