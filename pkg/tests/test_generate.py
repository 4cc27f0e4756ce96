import pytest

from fakes import ScriptedClient
from tokforge.client import RetryPolicy, call_with_retries
from tokforge.conversation import GenerationParams
from tokforge.errors import DialogueParseError, InputError, TransportError
from tokforge.generate import (
    GenerationFailure,
    generate_conversations,
    parse_dialogue,
    seed_prompt,
)

NO_SLEEP = RetryPolicy(max_retries=2, sleep=lambda s: None)


# --- prompt rendering -----------------------------------------------------

def test_seed_prompt_embeds_seed_verbatim():
    seed = "Why is the sky blue, and does the answer change on Mars?"
    prompt = seed_prompt(seed)
    assert f"Human: {seed}" in prompt
    assert "6" in prompt  # default turn target
    assert "8" in seed_prompt(seed, turns_target=8)


def test_prompts_differ_only_in_the_seed_span():
    a = "first distinctive seed xQ1"
    b = "second distinctive seed zW2"
    assert seed_prompt(a).replace(a, b) == seed_prompt(b)


def test_empty_seed_rejected():
    with pytest.raises(InputError):
        seed_prompt("")
    with pytest.raises(InputError):
        seed_prompt("   \n ")


# --- dialogue parsing -----------------------------------------------------

def test_parse_dialogue_happy_path():
    turns = parse_dialogue(
        "Human: hi there\n"
        "Assistant: hello, how can I help?\n"
        "Human: explain tides\n"
        "Assistant: the moon pulls the ocean\n"
        "and the earth rotates under the bulge\n"
    )
    assert [(t.role, t.text) for t in turns] == [
        ("human", "hi there"),
        ("assistant", "hello, how can I help?"),
        ("human", "explain tides"),
        ("assistant", "the moon pulls the ocean\nand the earth rotates under the bulge"),
    ]


def test_parse_dialogue_ignores_preamble():
    turns = parse_dialogue(
        "Sure! Here is the conversation you asked for:\n"
        "\n"
        "Human: q\n"
        "Assistant: a\n"
    )
    assert len(turns) == 2 and turns[0].text == "q"


def test_parse_dialogue_errors_preserve_raw():
    bad = "I cannot help with that request."
    with pytest.raises(DialogueParseError) as e:
        parse_dialogue(bad)
    assert e.value.raw == bad
    with pytest.raises(DialogueParseError):
        parse_dialogue("Assistant: I speak first\nHuman: hey")
    with pytest.raises(DialogueParseError):
        parse_dialogue("Human: one\nHuman: two\nAssistant: a")
    with pytest.raises(DialogueParseError):
        parse_dialogue("Human: hi\nAssistant:\nHuman: still there?")


# --- retry policy ---------------------------------------------------------

def test_retry_delays_double_up_to_cap():
    p = RetryPolicy(backoff_base=0.5, backoff_cap=8.0)
    assert [p.delay(i) for i in range(6)] == [0.5, 1.0, 2.0, 4.0, 8.0, 8.0]


def test_call_with_retries_only_retries_transport_errors():
    client = ScriptedClient([InputError("permanent")])
    with pytest.raises(InputError):
        call_with_retries(lambda: client.complete("p", None), NO_SLEEP)
    assert len(client.calls) == 1

    slept = []
    policy = RetryPolicy(max_retries=3, backoff_base=0.5, sleep=slept.append)
    client = ScriptedClient([TransportError("x"), TransportError("y"), "ok"])
    assert call_with_retries(lambda: client.complete("p", None), policy) == "ok"
    assert len(client.calls) == 3
    assert slept == [0.5, 1.0]


# --- generation -----------------------------------------------------------

def test_generate_single_seed_end_to_end():
    reply = (
        "Human: what's a haiku?\n"
        "Assistant: a three-line poem\n"
        "Human: write one about rain\n"
        "Assistant: soft rain on the roof\n"
    )
    client = ScriptedClient([reply])
    convs, failures = generate_conversations(
        [("s1", "what's a haiku?")], client, retry=NO_SLEEP
    )
    assert failures == []
    (conv,) = convs
    assert conv.id == "s1"
    assert conv.source == "generated"
    assert conv.language == "en"
    assert len(conv.turns) == 4
    conv.validate()
    # the request carried the seed verbatim and the default sampling params
    prompt, params = client.calls[0]
    assert "Human: what's a haiku?" in prompt
    assert params.temperature == pytest.approx(0.001)


class EchoClient:
    """Stateless, thread-safe: builds the reply from the seed in the prompt."""

    def complete(self, prompt, params):
        for line in prompt.splitlines():
            if line.startswith("Human: "):
                seed = line[len("Human: ") :]
                return f"Human: {seed}\nAssistant: echo of {seed}"
        raise AssertionError("no seed line in prompt")


def test_results_come_back_in_seed_order_with_workers():
    seeds = [(f"seed-{i}", f"question number {i}") for i in range(12)]
    convs, failures = generate_conversations(
        seeds, EchoClient(), max_workers=4, retry=NO_SLEEP
    )
    assert failures == []
    assert [c.id for c in convs] == [sid for sid, _ in seeds]
    for (sid, text), conv in zip(seeds, convs):
        assert conv.turns[0].text == text
        assert conv.turns[1].text == f"echo of {text}"


def test_transport_failure_after_exhausting_retries():
    client = ScriptedClient(
        [TransportError("down"), TransportError("down"), TransportError("down")]
    )
    convs, failures = generate_conversations(
        [("s1", "hello?")], client, retry=NO_SLEEP
    )
    assert convs == []
    (f,) = failures
    assert f.reason == "transport" and f.seed_id == "s1"
    assert len(client.calls) == 3  # 1 attempt + max_retries=2


def test_parse_failure_keeps_raw_reply_and_other_seeds_succeed():
    good = "Human: q\nAssistant: a"
    bad = "As an assistant I would rather not role-play a dialogue."
    client = ScriptedClient([good, bad])
    convs, failures = generate_conversations(
        [("ok", "q"), ("broken", "r")], client, retry=NO_SLEEP
    )
    assert [c.id for c in convs] == ["ok"]
    (f,) = failures
    assert f.reason == "parse" and f.seed_id == "broken"
    assert f.raw == bad
    assert f.to_dict()["raw"] == bad


def test_generation_params_recorded_not_mutated():
    params = GenerationParams(temperature=0.7, max_new_tokens=256, model="test-model")
    client = ScriptedClient(["Human: q\nAssistant: a"])
    generate_conversations([("s", "q")], client, params=params, retry=NO_SLEEP)
    assert client.calls[0][1] is params


def test_failure_record_shape():
    f = GenerationFailure("id9", "seed text", "transport", "gave up")
    d = f.to_dict()
    assert d == {
        "seed_id": "id9",
        "seed": "seed text",
        "reason": "transport",
        "detail": "gave up",
        "raw": None,
    }
