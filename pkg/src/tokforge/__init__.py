"""tokforge: tooling for extending BPE vocabularies, cleaning bilingual
conversation corpora, and scoring model outputs with an LLM judge."""

__version__ = "0.1.0"
