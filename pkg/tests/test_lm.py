from __future__ import annotations

import json
import math

import httpx
import numpy as np
import pytest
from hypothesis import assume, given, settings
from hypothesis import strategies as st

from sta.errors import BackendError, CapabilityError, EmptyCandidate
from sta.lm import (
    Capabilities,
    LmBackend,
    OpenAICompatibleLm,
    SamplingConfig,
    ScriptedLm,
    TokenChoiceTree,
    choose,
    choose_scored,
    complete_line,
    sample_token,
    scripted_greedy,
    transcript_from_text,
    tree_add,
    tree_eval,
)

from conftest import FIXTURES, QUESTION

PROMPT = "Q:"


def abc_lm() -> ScriptedLm:
    return ScriptedLm(["a", "b", "c"], [("", [0.5, 0.3, 0.2]), ("b", [0.05, 0.05, 0.9])])


def enumerated_score(lm: LmBackend, prompt: str, candidate: str) -> float:
    """Geometric mean of token probabilities, one distribution query per token."""
    tokens = lm.tokenize(candidate)
    logp = 0.0
    text = prompt
    for tok in tokens:
        logp += float(np.log(np.exp(lm.greedy(text))[tok]))
        text += lm.detokenize([tok])
    return math.exp(logp / len(tokens))


# -- choice tree -------------------------------------------------------------------


def test_shared_prefix_structure():
    lm = abc_lm()
    tree = TokenChoiceTree()
    tree_add(tree, "ab", lm)
    tree_add(tree, "ac", lm)
    assert len(tree.children) == 1
    (a,) = tree.children.values()
    assert len(a.children) == 2 and a.depth == 1


def test_single_candidate_structure():
    tree = TokenChoiceTree()
    leaf = tree_add(tree, "b", abc_lm())
    assert list(tree.children.values()) == [leaf] and leaf.depth == 1


def test_empty_candidate_rejected():
    with pytest.raises(EmptyCandidate):
        TokenChoiceTree().add(abc_lm(), "")
    with pytest.raises(EmptyCandidate):
        choose(abc_lm(), PROMPT, [])


def test_products_along_paths():
    lm = abc_lm()
    tree = TokenChoiceTree()
    a, bc = tree.add(lm, "a"), tree.add(lm, "bc")
    tree_eval(tree, PROMPT, lm)
    assert a.cumul == pytest.approx(0.5, abs=1e-12)
    assert bc.cumul == pytest.approx(0.27, abs=1e-12)
    assert bc.cumul == pytest.approx(bc.parent.cumul * bc.proba, abs=1e-12)


def test_bare_root_queries_once():
    lm = abc_lm()
    tree = TokenChoiceTree()
    assert tree.evaluate(lm, PROMPT) == 1
    assert lm.greedy_calls == 1 and tree.probability() is None


def test_choice_picks_longer_candidate():
    lm = abc_lm()
    index, scores = choose_scored(lm, PROMPT, ["a", "c", "bc"])
    assert index == 2
    assert scores == pytest.approx([0.5, 0.2, math.sqrt(0.27)], abs=1e-12)
    for cand, score in zip(["a", "c", "bc"], scores):
        assert abs(score - enumerated_score(lm, PROMPT, cand)) < 1e-9


def test_single_candidate_needs_no_query():
    lm = abc_lm()
    assert choose(lm, PROMPT, ["c"]) == 0 and lm.greedy_calls == 0


def test_identical_candidates_tie_to_lowest_index():
    assert choose(abc_lm(), PROMPT, ["bc", "bc"]) == 0
    assert choose(ScriptedLm(["x", "y"]), PROMPT, ["y", "x"]) == 0


candidate_sets = st.lists(st.text("abc", min_size=1, max_size=4), min_size=1, max_size=6)


def random_lm(seed: int) -> ScriptedLm:
    rng = np.random.default_rng(seed)
    rules = [(suffix, list(rng.dirichlet(np.ones(3)))) for suffix in ["", "a", "b", "c", "ab", "ba", "cc"]]
    return ScriptedLm(["a", "b", "c"], rules)


@settings(max_examples=50, deadline=None)
@given(candidate_sets, st.integers(0, 10_000))
def test_greedy_calls_are_distinct_proper_prefixes_plus_one(cands, seed):
    lm = random_lm(seed)
    tree = TokenChoiceTree()
    for c in cands:
        tree.add(lm, c)
    prefixes = {c[:k] for c in cands for k in range(1, len(c))}
    assert tree.count_internal() == len(prefixes) + 1
    tree.evaluate(lm, PROMPT)
    assert lm.greedy_calls == len(prefixes) + 1


@settings(max_examples=50, deadline=None)
@given(candidate_sets, st.integers(0, 10_000))
def test_scores_match_enumeration(cands, seed):
    # a lone candidate is returned without scoring
    assume(len(cands) > 1)
    lm = random_lm(seed)
    _, scores = choose_scored(lm, PROMPT, cands)
    for c, s in zip(cands, scores):
        assert abs(s - enumerated_score(lm, PROMPT, c)) < 1e-9


@settings(max_examples=50, deadline=None)
@given(candidate_sets, st.integers(0, 10_000), st.randoms())
def test_permutation_stability(cands, seed, rnd):
    cands = list(dict.fromkeys(cands))
    lm = random_lm(seed)
    index, scores = choose_scored(lm, PROMPT, cands)
    if sorted(scores)[-1] - sorted(scores)[-2 if len(scores) > 1 else -1] < 1e-12 and len(scores) > 1:
        return  # tie: only the tie-break decides
    shuffled = cands[:]
    rnd.shuffle(shuffled)
    assert shuffled[choose(lm, PROMPT, shuffled)] == cands[index]


@settings(max_examples=30, deadline=None)
@given(st.lists(st.text("abc", min_size=3, max_size=3), min_size=2, max_size=6, unique=True), st.integers(0, 999))
def test_equal_length_agrees_with_raw_product(cands, seed):
    lm = random_lm(seed)
    tree = TokenChoiceTree()
    leaves = [tree.add(lm, c) for c in cands]
    tree.evaluate(lm, PROMPT)
    assert choose(lm, PROMPT, cands) == int(np.argmax([leaf.cumul for leaf in leaves]))


class Echoing(LmBackend):
    """Completion-only backend with forced-continuation scoring."""

    capabilities = Capabilities(supports_continuation_logprobs=True)

    def __init__(self, inner: ScriptedLm):
        self.inner = inner

    def tokenize(self, text):
        return self.inner.tokenize(text)

    def detokenize(self, tokens):
        return self.inner.detokenize(tokens)

    def complete(self, prompt, config):
        return ""

    def continuation_logprobs(self, prompt, continuation):
        out, text = [], prompt
        for tok in self.tokenize(continuation):
            out.append(float(self.inner.greedy(text)[tok]))
            text += self.detokenize([tok])
        return out


class Completing(LmBackend):
    capabilities = Capabilities()

    def __init__(self, text):
        self.text = text

    def tokenize(self, text):
        return [ord(c) for c in text]

    def detokenize(self, tokens):
        return "".join(chr(t) for t in tokens)

    def complete(self, prompt, config):
        return self.text


def test_fallback_continuation_logprobs_matches_tree():
    lm = abc_lm()
    idx, scores = choose_scored(Echoing(lm), PROMPT, ["a", "c", "bc"])
    assert idx == 2 and scores == pytest.approx([0.5, 0.2, math.sqrt(0.27)], abs=1e-12)


def test_fallback_longest_prefix():
    assert choose(Completing("submit\n"), PROMPT, ["edit", "submit"]) == 1
    assert choose(Completing("zzz"), PROMPT, ["edit", "submit"]) == 0


def test_tree_needs_distribution():
    with pytest.raises(CapabilityError):
        TokenChoiceTree().evaluate(Completing("x"), PROMPT)
    with pytest.raises(CapabilityError):
        Completing("x").greedy(PROMPT)


def test_long_candidates_do_not_underflow():
    lm = ScriptedLm(["a", "b"], [("", [0.01, 0.99])])
    idx, scores = choose_scored(lm, PROMPT, ["a" * 400, "b"])
    assert idx == 1 and scores[0] == pytest.approx(0.01)


# -- scripted backend -----------------------------------------------------------------


def test_greedy_rule_lookup():
    lm = abc_lm()
    assert scripted_greedy(lm, "x") == pytest.approx(np.log([0.5, 0.3, 0.2]))


def test_greedy_uniform_without_rules():
    lm = ScriptedLm(["a", "b", "c", "d"])
    assert scripted_greedy(lm, "x") == pytest.approx(np.full(4, math.log(0.25)))


def test_longest_suffix_wins():
    lm = ScriptedLm(["a", "b"], [("b", [1.0, 0.0]), ("ab", [0.0, 1.0])])
    assert np.exp(lm.greedy("zab")) == pytest.approx([0.0, 1.0])
    assert np.exp(lm.greedy("zbb")) == pytest.approx([1.0, 0.0])


def test_rule_probabilities_must_normalize():
    with pytest.raises(ValueError):
        ScriptedLm(["a", "b"], [("", [0.5, 0.6])])
    with pytest.raises(ValueError):
        ScriptedLm(["a", "b"], [("", [1.0])])
    with pytest.raises(ValueError):
        ScriptedLm(["a", "a"])


def test_mapping_rules():
    lm = ScriptedLm(["a", "b", "c"], [("", {"c": 1.0})])
    assert np.exp(lm.greedy("x")) == pytest.approx([0, 0, 1])


def test_multi_character_tokens():
    lm = ScriptedLm(["ab", "a", "b", "c"])
    assert lm.tokenize("abac") == [0, 1, 3]
    assert lm.detokenize(lm.tokenize("abac")) == "abac"
    with pytest.raises(ValueError):
        lm.tokenize("z")


def gpt_lm():
    return ScriptedLm.from_file(FIXTURES / "gpt35_scripted.json")


def fixture_prompts():
    text = (FIXTURES / "gpt35_edit_transcript.txt").read_text(encoding="utf-8")
    cut = text.index("start(record):\n") + len("start(record):\n")
    lines = text[cut:].split("\n")
    return [text[:cut] + "\n".join(lines[:k]) for k in range(len(lines))]


def test_distribution_sums_to_one_on_fixture_prompts():
    for lm in (gpt_lm(), abc_lm(), ScriptedLm()):
        for prompt in fixture_prompts():
            assert abs(np.exp(lm.greedy(prompt)).sum() - 1.0) < 1e-6


def test_tokenize_round_trip_on_fixtures():
    lm = gpt_lm()
    for name in ("gpt35_edit_transcript.txt", "llama_edit_transcript.txt"):
        text = (FIXTURES / name).read_text(encoding="utf-8")
        assert lm.detokenize(lm.tokenize(text)) == text


def test_sampling_is_deterministic():
    config = SamplingConfig(max_tokens=30, temperature=1.0, stop_sequences=("\n", "."))
    a, b = ScriptedLm(seed=3), ScriptedLm(seed=3)
    assert a.complete("hello", config) == b.complete("hello", config)
    assert a.complete("hello", config) != ScriptedLm(seed=4).complete("hello", config)


def test_transcript_completion():
    lm = ScriptedLm(transcript=[("> question(text):", QUESTION)])
    prompt = "start(record):\n> question(text): "
    assert complete_line(lm, prompt, SamplingConfig(max_tokens=200)) == QUESTION


def test_transcript_steers_choices():
    lm = gpt_lm()
    header_and_body = fixture_prompts()[8]  # up to consider[3]
    assert header_and_body.endswith("Add an example of one of the phases.  ")
    candidates = ["> problems[2](record):", "> answer[1](sentence):"]
    assert choose(lm, header_and_body + "\n", candidates) == 1


def test_transcript_parsing():
    entries = transcript_from_text((FIXTURES / "gpt35_edit_transcript.txt").read_text(encoding="utf-8"))
    assert entries[0].prefix == "> question(text):" and entries[0].text == QUESTION
    assert entries[3].prefix == "> problems[1](record):" and entries[3].text == ""
    assert entries[-1].line == "exit(next): submit"
    assert len(entries) == 11


def test_definition_files(tmp_path):
    spec = {"vocab": ["x", "y"], "rules": [{"suffix": "", "probs": [0.25, 0.75]}], "seed": 1}
    (tmp_path / "lm.json").write_text(json.dumps(spec))
    (tmp_path / "lm.yaml").write_text("vocab: [x, y]\nrules:\n  - suffix: ''\n    probs: [0.25, 0.75]\nseed: 1\n")
    for name in ("lm.json", "lm.yaml"):
        lm = ScriptedLm.from_file(tmp_path / name)
        assert np.exp(lm.greedy("")) == pytest.approx([0.25, 0.75])


# -- completion and sampling ----------------------------------------------------------


class Fixed(Completing):
    pass


def test_complete_line_cuts_at_newline():
    assert complete_line(Fixed("abc\ndef"), "", SamplingConfig()) == "abc"


def test_complete_line_respects_max_tokens():
    assert complete_line(Fixed("abcdef"), "", SamplingConfig(max_tokens=1)) == "a"
    out = complete_line(ScriptedLm(), "p", SamplingConfig(max_tokens=1, temperature=1.0))
    assert len(ScriptedLm().tokenize(out)) <= 1


def test_complete_line_strips_trailing_blanks():
    assert complete_line(Fixed(" two  words  \nnext"), "", SamplingConfig()) == " two  words"


def test_complete_line_needs_newline_stop():
    with pytest.raises(ValueError):
        complete_line(Fixed("x"), "", SamplingConfig(stop_sequences=(".",)))


@pytest.mark.parametrize(
    "kwargs", [{"max_tokens": 0}, {"temperature": -1}, {"top_k": 0}, {"top_p": 0.0}, {"top_p": 1.5}]
)
def test_sampling_config_validation(kwargs):
    with pytest.raises(ValueError):
        SamplingConfig(**kwargs)


def test_sample_token_argmax_cases():
    logp = np.log([0.2, 0.5, 0.3])
    rng = np.random.default_rng(0)
    assert sample_token(logp, SamplingConfig(temperature=0), rng) == 1
    assert all(sample_token(logp, SamplingConfig(temperature=1.0, top_k=1), rng) == 1 for _ in range(50))
    assert all(sample_token(logp, SamplingConfig(temperature=1.0, top_p=0.4), rng) == 1 for _ in range(50))
    picks = {sample_token(logp, SamplingConfig(temperature=1.0, top_p=0.75), rng) for _ in range(200)}
    assert picks == {1, 2}


def test_sample_token_temperature_scaling():
    probs = np.array([0.2, 0.5, 0.3])
    rng = np.random.default_rng(42)
    n = 20_000
    for temp in (1.0, 0.5):
        draws = np.bincount(
            [sample_token(np.log(probs), SamplingConfig(temperature=temp), rng) for _ in range(n)], minlength=3
        )
        target = probs ** (1 / temp) / (probs ** (1 / temp)).sum()
        assert np.abs(draws / n - target).max() < 0.015


# -- HTTP client ------------------------------------------------------------------------


def client_with(handler) -> httpx.Client:
    return httpx.Client(transport=httpx.MockTransport(handler))


def test_completion_request(monkeypatch):
    seen = {}

    def handler(request):
        seen["url"] = str(request.url)
        seen["auth"] = request.headers.get("authorization")
        seen["body"] = json.loads(request.content)
        return httpx.Response(200, json={"choices": [{"text": " hello\nworld"}]})

    monkeypatch.setenv("TEST_KEY", "sk-123")
    lm = OpenAICompatibleLm("m", "http://lm.local/", api_key_env="TEST_KEY", client=client_with(handler))
    config = SamplingConfig(max_tokens=20, temperature=0.4)
    assert complete_line(lm, "prompt", config) == " hello"
    assert seen["url"] == "http://lm.local/v1/completions"
    assert seen["auth"] == "Bearer sk-123"
    body = seen["body"]
    assert body["model"] == "m" and body["prompt"] == "prompt"
    assert body["max_tokens"] == 20 and body["temperature"] == 0.4 and body["stop"] == ["\n"]
    assert "logprobs" in body
    assert not lm.capabilities.supports_full_distribution


def test_retries_then_succeeds():
    calls = []

    def handler(request):
        calls.append(1)
        if len(calls) < 3:
            return httpx.Response(503, text="busy")
        return httpx.Response(200, json={"choices": [{"text": "ok"}]})

    lm = OpenAICompatibleLm("m", "http://x", retries=2, backoff=0, client=client_with(handler))
    assert lm.complete("p", SamplingConfig()) == "ok" and len(calls) == 3


def test_gives_up_with_attempt_count():
    lm = OpenAICompatibleLm("m", "http://x", retries=2, backoff=0, client=client_with(lambda r: httpx.Response(500)))
    with pytest.raises(BackendError) as err:
        lm.complete("p", SamplingConfig())
    assert err.value.attempts == 3 and err.value.status == 500 and err.value.retryable


def test_client_errors_are_not_retried():
    calls = []

    def handler(request):
        calls.append(1)
        return httpx.Response(400, text="bad")

    lm = OpenAICompatibleLm("m", "http://x", retries=5, backoff=0, client=client_with(handler))
    with pytest.raises(BackendError) as err:
        lm.complete("p", SamplingConfig())
    assert len(calls) == 1 and err.value.attempts == 1 and not err.value.retryable


def test_transport_errors_are_retried():
    def handler(request):
        raise httpx.ConnectError("down", request=request)

    lm = OpenAICompatibleLm("m", "http://x", retries=1, backoff=0, client=client_with(handler))
    with pytest.raises(BackendError) as err:
        lm.complete("p", SamplingConfig())
    assert err.value.attempts == 2


def test_malformed_response():
    lm = OpenAICompatibleLm("m", "http://x", client=client_with(lambda r: httpx.Response(200, json={"nope": 1})))
    with pytest.raises(BackendError):
        lm.complete("p", SamplingConfig())


def test_echo_logprobs_choice():
    prompt = "Q: "
    lps = {"edit": [-2.0, -0.1], "submit": [-0.2, -0.2]}

    def handler(request):
        body = json.loads(request.content)
        assert body["echo"] is True and body["max_tokens"] == 1
        cont = body["prompt"][len(prompt) :]
        half = len(cont) // 2
        return httpx.Response(
            200,
            json={
                "choices": [
                    {
                        "text": body["prompt"],
                        "logprobs": {
                            "text_offset": [0, len(prompt), len(prompt) + half, len(body["prompt"])],
                            "token_logprobs": [None, *lps[cont], -9.0],
                        },
                    }
                ]
            },
        )

    lm = OpenAICompatibleLm("m", "http://x", echo_logprobs=True, client=client_with(handler))
    assert lm.continuation_logprobs(prompt, "edit") == [-2.0, -0.1]
    idx, scores = choose_scored(lm, prompt, ["edit", "submit"])
    assert idx == 1 and scores[1] == pytest.approx(math.exp(-0.2))


def test_tokenizer_round_trip():
    lm = OpenAICompatibleLm("m", client=client_with(lambda r: httpx.Response(500)))
    text = "> > consider[2](thought):  Use simpler language."
    assert lm.detokenize(lm.tokenize(text)) == text
