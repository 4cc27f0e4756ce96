"""Access to packaged prompt templates.

Templates are versioned resource files; bumping a prompt means adding a new
file and pointing the relevant constant at it, so run manifests (which
record template hashes) stay meaningful across releases.
"""

from __future__ import annotations

import hashlib
from importlib import resources

SEED_PROMPT = "seed_prompt_v1.txt"
JUDGE_PROMPT_GOLD = "judge_gold_v1.txt"
JUDGE_PROMPT_PLAIN = "judge_plain_v1.txt"


def _resource(name: str):
    return resources.files("tokforge").joinpath("templates", name)


def load_template(name: str) -> str:
    return _resource(name).read_text(encoding="utf-8")


def template_hash(name: str) -> str:
    return hashlib.sha256(_resource(name).read_bytes()).hexdigest()
