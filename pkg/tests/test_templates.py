from tokforge.templates import (
    JUDGE_PROMPT_GOLD,
    JUDGE_PROMPT_PLAIN,
    SEED_PROMPT,
    load_template,
    template_hash,
)


def test_bundled_templates_have_expected_placeholders():
    assert "{seed}" in load_template(SEED_PROMPT)
    for name in (JUDGE_PROMPT_GOLD, JUDGE_PROMPT_PLAIN):
        text = load_template(name)
        assert "{instruction}" in text
        assert "{response}" in text
    assert "{gold}" in load_template(JUDGE_PROMPT_GOLD)
    assert "{gold}" not in load_template(JUDGE_PROMPT_PLAIN)


def test_template_hash_is_stable_hex():
    h1 = template_hash(SEED_PROMPT)
    h2 = template_hash(SEED_PROMPT)
    assert h1 == h2
    assert len(h1) == 64
    assert all(c in "0123456789abcdef" for c in h1)
    assert template_hash(JUDGE_PROMPT_GOLD) != h1
