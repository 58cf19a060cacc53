"""Language-model contract, choice algorithm and backends."""

from .base import DEFAULT_SAMPLING, Capabilities, LmBackend, SamplingConfig, complete_line, sample_token
from .choice import TokenChoiceTree, choose, choose_scored, tree_add, tree_eval
from .openai import OpenAICompatibleLm
from .scripted import ScriptedLm, TranscriptEntry, scripted_greedy, structural_prefix, transcript_from_text

__all__ = [
    "DEFAULT_SAMPLING",
    "Capabilities",
    "LmBackend",
    "OpenAICompatibleLm",
    "SamplingConfig",
    "ScriptedLm",
    "TokenChoiceTree",
    "TranscriptEntry",
    "choose",
    "choose_scored",
    "complete_line",
    "sample_token",
    "scripted_greedy",
    "structural_prefix",
    "transcript_from_text",
    "tree_add",
    "tree_eval",
]
