import random

import pytest

from fakes import ScriptedClient
from tokforge.client import RetryPolicy
from tokforge.conversation import GenerationParams
from tokforge.errors import (
    ConsistencyError,
    InputError,
    ScoreParseError,
    TransportError,
)
from tokforge.evaluation import (
    CATEGORIES,
    NO_GOLD_CATEGORIES,
    EvalSample,
    JudgeFailure,
    JudgeVerdict,
    ResponseRow,
    aggregate,
    build_judge_prompt,
    dedup_evalset,
    judge,
    parse_score,
    read_eval_samples,
    read_responses,
    read_verdicts,
    reclassify,
    run_judging,
    write_failures,
    write_verdicts,
)

NO_SLEEP = RetryPolicy(max_retries=2, sleep=lambda s: None)


def sample(id="s1", category="open_qa", gold="the gold answer", instruction=None):
    return EvalSample(
        id=id,
        instruction=instruction or f"instruction for {id}",
        category=category,
        gold=gold,
    )


# --- categories -----------------------------------------------------------

def test_from_dict_accepts_legacy_labels_and_rejects_unknown():
    s = EvalSample.from_dict({"id": 1, "instruction": "x", "category": "math"})
    assert s.category == "math"  # normalized later, by reclassify
    with pytest.raises(InputError):
        EvalSample.from_dict({"id": 1, "instruction": "x", "category": "poetry"})


def test_reclassify_folds_math_and_code_into_others():
    samples = [
        sample("m", "math"),
        sample("c", "code"),
        sample("q", "closed_qa"),
    ]
    out = reclassify(samples)
    assert [s.category for s in out] == ["others", "others", "closed_qa"]
    assert all(s.category in CATEGORIES for s in out)


def test_reclassify_strips_gold_from_open_ended_categories():
    out = reclassify([sample("r", "rewrite", gold="should vanish")])
    assert out[0].gold is None
    out = reclassify([sample("q", "extract", gold="stays")])
    assert out[0].gold == "stays"
    with pytest.raises(InputError):
        reclassify([sample("x", "poetry")])


# --- judge prompts --------------------------------------------------------

def test_gold_visibility_per_category():
    sentinel = "GOLD-SENTINEL-3f9a"
    for category in CATEGORIES:
        s = reclassify([sample("s", category, gold=sentinel)])[0]
        prompt = build_judge_prompt(s, "model answer here")
        assert s.instruction in prompt
        assert "model answer here" in prompt
        if category in NO_GOLD_CATEGORIES:
            assert sentinel not in prompt
        else:
            assert sentinel in prompt


def test_missing_gold_warns_and_degrades_by_default(caplog):
    s = sample("s", "closed_qa", gold=None)
    with caplog.at_level("WARNING", logger="tokforge.evaluation"):
        prompt = build_judge_prompt(s, "resp")
    assert "no gold answer" in caplog.text
    # degraded to the same prompt an open-ended category would get
    assert prompt == build_judge_prompt(sample("s", "rewrite", gold=None), "resp")
    assert "Reference" not in prompt


def test_missing_gold_error_mode_fails_hard():
    s = sample("s", "closed_qa", gold=None)
    with pytest.raises(InputError):
        build_judge_prompt(s, "resp", missing_gold="error")
    with pytest.raises(InputError):
        build_judge_prompt(s, "resp", missing_gold="maybe")


def test_prompt_requires_normalized_category():
    with pytest.raises(InputError):
        build_judge_prompt(sample("s", "math"), "resp")


def test_prompt_is_deterministic():
    s = sample()
    assert build_judge_prompt(s, "r") == build_judge_prompt(s, "r")


# --- score parsing --------------------------------------------------------

@pytest.mark.parametrize(
    "reply,score",
    [
        ("0.75", 0.75),
        ("Score: 0.3", 0.3),
        ("1", 1.0),
        ("0", 0.0),
        (".8", 0.8),
        ("0.85/1.0", 0.85),
        ("I would rate this 0.9 out of 1.", 0.9),
        ("0.5\nThe response partially addresses the task.", 0.5),
    ],
)
def test_parse_score_accepts(reply, score):
    assert parse_score(reply) == pytest.approx(score)


@pytest.mark.parametrize(
    "reply",
    ["Score: 1.2", "-0.5", "2", "no score in this reply", "", "1.2 but maybe 0.3"],
)
def test_parse_score_rejects(reply):
    with pytest.raises(ScoreParseError) as e:
        parse_score(reply)
    assert e.value.raw == reply


# --- judging --------------------------------------------------------------

def test_judge_retries_transport_then_succeeds():
    client = ScriptedClient([TransportError("blip"), "0.8"])
    v = judge(
        sample(), "resp", "model-a", client, retry=NO_SLEEP, clock=lambda: "T0"
    )
    assert v.score == pytest.approx(0.8)
    assert v.model == "model-a"
    assert v.raw == "0.8"
    assert v.ts == "T0"
    assert len(client.calls) == 2
    # judge defaults to greedy scoring
    assert client.calls[0][1].temperature == 0.0


def test_judge_surfaces_unparseable_reply():
    client = ScriptedClient(["the response is excellent"])
    with pytest.raises(ScoreParseError) as e:
        judge(sample(), "resp", "m", client, retry=NO_SLEEP)
    assert e.value.raw == "the response is excellent"


def test_judge_params_override():
    params = GenerationParams(temperature=0.2, model="custom-judge")
    client = ScriptedClient(["0.5"])
    v = judge(sample(), "r", "m", client, params=params, retry=NO_SLEEP)
    assert v.judge_model == "custom-judge"
    assert client.calls[0][1] is params


def test_run_judging_rejects_unknown_sample_and_duplicates():
    samples = [sample("s1"), sample("s2")]
    with pytest.raises(ConsistencyError):
        run_judging(samples, [ResponseRow("ghost", "m", "r")], ScriptedClient([]))
    with pytest.raises(ConsistencyError):
        run_judging(
            samples,
            [ResponseRow("s1", "m", "r"), ResponseRow("s1", "m", "r2")],
            ScriptedClient([]),
        )
    # same sample under different models is legitimate
    client = ScriptedClient(["0.1", "0.2"])
    verdicts, failures = run_judging(
        samples,
        [ResponseRow("s1", "model-a", "r"), ResponseRow("s1", "model-b", "r")],
        client,
        retry=NO_SLEEP,
    )
    assert failures == []
    assert [(v.model, v.score) for v in verdicts] == [("model-a", 0.1), ("model-b", 0.2)]


def test_run_judging_partitions_every_row():
    samples = [sample(f"s{i}") for i in range(3)]
    client = ScriptedClient(
        ["0.9", "utterly unparseable", TransportError("down"), TransportError("down"), TransportError("down")]
    )
    verdicts, failures = run_judging(
        samples,
        [ResponseRow(f"s{i}", "m", "r") for i in range(3)],
        client,
        retry=NO_SLEEP,
    )
    assert len(verdicts) + len(failures) == 3
    assert [v.sample_id for v in verdicts] == ["s0"]
    assert [(f.sample_id, f.reason) for f in failures] == [
        ("s1", "parse"),
        ("s2", "transport"),
    ]
    assert failures[0].raw == "utterly unparseable"


class ByIdScoringClient:
    """Stateless: reads the sample index out of the prompt and scores it."""

    def complete(self, prompt, params):
        import re

        m = re.search(r"instruction for s(\d+)", prompt)
        return f"0.{m.group(1)}"


def test_run_judging_threaded_keeps_row_order():
    samples = [sample(f"s{i}") for i in range(8)]
    rows = [ResponseRow(f"s{i}", "m", "r") for i in range(8)]
    verdicts, failures = run_judging(
        samples, rows, ByIdScoringClient(), retry=NO_SLEEP, max_workers=4
    )
    assert failures == []
    assert [v.sample_id for v in verdicts] == [f"s{i}" for i in range(8)]
    assert [v.score for v in verdicts] == [pytest.approx(i / 10) for i in range(8)]


# --- aggregation ----------------------------------------------------------

def make_verdict(sample_id, score, model="m"):
    return JudgeVerdict(
        sample_id=sample_id, model=model, score=score, raw=str(score),
        judge_model="judge", ts="T",
    )


def test_aggregate_hand_computed_macro():
    cats = ["others", "rewrite", "classification"]
    samples = [sample(f"s{i}", c, gold=None) for i, c in enumerate(cats)]
    verdicts = [make_verdict("s0", 0.2), make_verdict("s1", 0.4), make_verdict("s2", 0.9)]
    report = aggregate(verdicts, samples)
    assert report.macro_ave == pytest.approx((0.2 + 0.4 + 0.9) / 3)
    assert report.macro_ave_wo_others == pytest.approx((0.4 + 0.9) / 2)
    assert report.categories["rewrite"] == {"mean": 0.4, "count": 1}
    assert report.categories["open_qa"] == {"mean": None, "count": 0}
    assert len(report.warnings) == 6  # the six unjudged categories


def test_aggregate_is_order_independent():
    rng = random.Random(11)
    samples = [sample(f"s{i}", CATEGORIES[i % 9], gold=None) for i in range(30)]
    verdicts = [make_verdict(s.id, round(rng.random(), 3)) for s in samples]
    base = aggregate(verdicts, samples).to_dict()
    shuffled = list(verdicts)
    rng.shuffle(shuffled)
    assert aggregate(shuffled, samples).to_dict() == base


def test_aggregate_category_mean_weights_samples_equally():
    samples = [sample("a", "open_qa"), sample("b", "open_qa"), sample("c", "extract")]
    verdicts = [make_verdict("a", 1.0), make_verdict("b", 0.0), make_verdict("c", 0.6)]
    report = aggregate(verdicts, samples)
    assert report.categories["open_qa"] == {"mean": 0.5, "count": 2}
    assert report.macro_ave == pytest.approx((0.5 + 0.6) / 2)


def test_aggregate_multi_model_requires_choice():
    samples = [sample("s1")]
    verdicts = [make_verdict("s1", 0.5, "a"), make_verdict("s1", 0.7, "b")]
    with pytest.raises(ConsistencyError):
        aggregate(verdicts, samples)
    assert aggregate(verdicts, samples, model="b").macro_ave == pytest.approx(0.7)


def test_aggregate_consistency_errors():
    samples = [sample("s1")]
    with pytest.raises(ConsistencyError):
        aggregate([make_verdict("ghost", 0.5)], samples)
    with pytest.raises(ConsistencyError):
        aggregate([make_verdict("s1", 0.5), make_verdict("s1", 0.6)], samples)
    with pytest.raises(InputError):
        aggregate([make_verdict("s1", 0.5)], [sample("s1", "math")])


def test_verdict_rejects_out_of_range_score():
    with pytest.raises(InputError):
        make_verdict("s", 1.5)


# --- dedup + IO -----------------------------------------------------------

def test_dedup_evalset_drops_near_duplicate_instructions():
    text = "please summarize the following article about deep sea life"
    samples = [
        sample("a", instruction=text),
        sample("b", instruction=text + " thanks"),
        sample("c", instruction="write a limerick about an absent-minded professor"),
    ]
    kept, report = dedup_evalset(samples)
    assert [s.id for s in kept] == ["a", "c"]
    assert report.input_count == 3 and report.output_count == 2


def test_jsonl_roundtrips(tmp_path):
    verdicts = [make_verdict("s1", 0.25), make_verdict("s2", 1.0)]
    vp = tmp_path / "verdicts.jsonl"
    write_verdicts(vp, verdicts)
    assert [v.to_dict() for v in read_verdicts(vp)] == [v.to_dict() for v in verdicts]

    write_failures(tmp_path / "fail.jsonl", [JudgeFailure("s", "m", "parse", "d", raw="x")])
    assert '"reason": "parse"' in (tmp_path / "fail.jsonl").read_text()

    sp = tmp_path / "samples.jsonl"
    sp.write_text(
        '{"id": "s1", "instruction": "do a thing", "category": "open_qa", "gold": "g"}\n'
        '{"id": "s2", "instruction": "rewrite it", "category": "rewrite"}\n',
        encoding="utf-8",
    )
    loaded = read_eval_samples(sp)
    assert [s.id for s in loaded] == ["s1", "s2"]
    assert loaded[0].gold == "g" and loaded[1].gold is None

    rp = tmp_path / "resp.jsonl"
    rp.write_text(
        '{"sample_id": "s1", "model": "m", "response": "hi"}\n', encoding="utf-8"
    )
    assert read_responses(rp)[0].response == "hi"

    bad = tmp_path / "bad.jsonl"
    bad.write_text('{"id": "s1"}\n', encoding="utf-8")
    with pytest.raises(InputError):
        read_eval_samples(bad)
