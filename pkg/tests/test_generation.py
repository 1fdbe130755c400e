import json

import pytest
import requests

from ruleforge import (CandidateSource, DeterministicGenerator, EditKind, EvidenceFile,
                       GenerationFailure, LabeledRun, LlmConfig, LlmGenerator,
                       MockGenerator, Oracle, Outcome, PolarizedRule, Polarity,
                       RefinementContext, RejectedResponse, apply_edits, build_evidence,
                       build_prompt, diff_rules, generate_candidate, make_oracle,
                       parse_candidate_response, parse_rule, print_rule, random_rule,
                       search_counterfactual)
from ruleforge.generation import FORMAT_EXEMPLAR, enumerate_single_edits
from ruleforge.grammar import GRAMMAR_TEXT
from ruleforge.semantics import decisiveness

X1 = {"ego_speed": 8.0, "dist_front": 4.2, "lane_offset": 0.1}


@pytest.fixture(scope="module")
def x1_context(fixture42):
    oracle = make_oracle(fixture42.config)
    pair = search_counterfactual(X1, Outcome.FAIL, oracle, fixture42.config.odd, 20)
    evidence = EvidenceFile(rule_id=fixture42.baseline_rule.id,
                            rule_text=print_rule(fixture42.baseline_rule.ast),
                            dataset_ref="fixture", pairs=(pair,), unresolved=())
    return RefinementContext(grammar_doc=GRAMMAR_TEXT, target=fixture42.baseline_rule,
                             historical=(), evidence=evidence)


class TestBuildPrompt:
    def test_first_attempt_lacks_failure_section(self, x1_context, odd):
        prompt = build_prompt(x1_context, odd)
        assert "Previous attempt failed" not in prompt
        assert GRAMMAR_TEXT in prompt
        assert FORMAT_EXEMPLAR in prompt
        assert "(dist_front < 5) and (ego_speed > 0)" in prompt
        assert "dist_front=-0.2" in prompt  # the evidence delta

    def test_failure_summary_verbatim(self, x1_context, odd):
        import dataclasses
        ctx = dataclasses.replace(x1_context, failure_summary="out-of-vocabulary token ARG3")
        prompt = build_prompt(ctx, odd)
        assert "out-of-vocabulary token ARG3" in prompt
        assert "Previous attempt failed" in prompt

    def test_byte_identical(self, x1_context, odd):
        assert build_prompt(x1_context, odd) == build_prompt(x1_context, odd)

    def test_sections_in_order(self, x1_context, odd):
        prompt = build_prompt(x1_context, odd)
        anchors = ["Grammar:", "Allowed vocabulary", "Inconsistent rule",
                   "Historical rules", "Counterfactual evidence", "Format exemplar:", "Task:"]
        positions = [prompt.index(a) for a in anchors]
        assert positions == sorted(positions)

    def test_target_not_in_historical(self, fixture42, x1_context):
        with pytest.raises(ValueError):
            RefinementContext(grammar_doc=GRAMMAR_TEXT, target=fixture42.baseline_rule,
                              historical=(fixture42.baseline_rule,),
                              evidence=x1_context.evidence)


class TestParseCandidateResponse:
    def test_fenced_code_block_repaired(self, odd):
        raw = "```\nRule: (dist_front < 4.1) and (ego_speed > 0)\nExplanation: tightened\n```"
        result = parse_candidate_response(raw, odd)
        assert not isinstance(result, RejectedResponse)
        assert print_rule(result.ast) == "(dist_front < 4.1) and (ego_speed > 0)"
        assert result.explanation == "tightened"

    def test_tuple_list_form_rejected(self, odd):
        result = parse_candidate_response("[[('greater_than_func','ARG1','0')]]", odd)
        assert isinstance(result, RejectedResponse)
        assert result.failure_summary == "structural violation: list/tuple form"

    def test_clean_rule_with_explanation(self, odd):
        raw = ("Rule: (dist_front < 4.1) and (ego_speed > 0)\n"
               "Explanation: Tightened the distance threshold toward the counterfactual\n"
               "boundary to exclude the failing neighborhood.")
        result = parse_candidate_response(raw, odd)
        assert not isinstance(result, RejectedResponse)
        assert "Tightened the distance threshold" in result.explanation

    def test_prose_trimmed_without_labels(self, odd):
        raw = ("Sure! Here is the refined rule.\n"
               "(dist_front < 4.1) and (ego_speed > 0)\n"
               "This keeps the speed condition untouched.")
        result = parse_candidate_response(raw, odd)
        assert not isinstance(result, RejectedResponse)
        assert print_rule(result.ast) == "(dist_front < 4.1) and (ego_speed > 0)"

    def test_out_of_vocabulary_rejected(self, odd):
        result = parse_candidate_response("Rule: (ARG3 > 1)", odd)
        assert isinstance(result, RejectedResponse)
        assert "UnknownVariable" in result.failure_summary

    def test_out_of_range_bound_rejected(self, odd):
        result = parse_candidate_response("Rule: (dist_front < 120)", odd)
        assert isinstance(result, RejectedResponse)
        assert "OutOfRangeBound" in result.failure_summary

    def test_unparseable_rejected(self, odd):
        result = parse_candidate_response("I could not find a refinement.", odd)
        assert isinstance(result, RejectedResponse)

    def test_empty_rejected(self, odd):
        result = parse_candidate_response("   \n", odd)
        assert isinstance(result, RejectedResponse)
        assert result.failure_summary == "empty response"


class TestDeterministicGenerator:
    def test_worked_example_threshold(self, fixture42, x1_context):
        gen = DeterministicGenerator(fixture42.dataset, fixture42.config.odd)
        candidate = generate_candidate(gen, x1_context)
        assert print_rule(candidate.ast) == "(dist_front < 4.1) and (ego_speed > 0)"
        assert candidate.source is CandidateSource.DETERMINISTIC
        assert [e.kind for e in candidate.change_log] == [EditKind.THRESHOLD_ADJUST]

    def test_deterministic(self, fixture42, x1_context):
        gen = DeterministicGenerator(fixture42.dataset, fixture42.config.odd)
        assert generate_candidate(gen, x1_context) == generate_candidate(gen, x1_context)

    def test_change_log_replays(self, fixture42, x1_context):
        gen = DeterministicGenerator(fixture42.dataset, fixture42.config.odd)
        candidate = generate_candidate(gen, x1_context)
        assert apply_edits(fixture42.baseline_rule.ast, candidate.change_log) == candidate.ast

    def test_no_evidence_fails(self, fixture42, x1_context):
        import dataclasses
        empty = dataclasses.replace(x1_context.evidence, pairs=())
        ctx = dataclasses.replace(x1_context, evidence=empty)
        gen = DeterministicGenerator(fixture42.dataset, fixture42.config.odd)
        with pytest.raises(GenerationFailure):
            generate_candidate(gen, ctx)

    def test_removal_edits_enumerated(self, arg_odd):
        target = parse_rule("(ARG2 > 3) and (ARG2 > 5)")
        pair_evidence = EvidenceFile(
            rule_id="r", rule_text=print_rule(target), dataset_ref="",
            pairs=(_pair({"ARG1": 1.0, "ARG2": 7.0}, {"ARG1": 1.0, "ARG2": 9.0},
                         {"ARG2": 2.0}),),
            unresolved=())
        candidates = enumerate_single_edits(target, pair_evidence, arg_odd)
        removals = [(print_rule(ast), edit.kind) for ast, edit in candidates
                    if edit.kind is EditKind.REMOVE_CONJUNCT]
        assert ("(ARG2 > 5)", EditKind.REMOVE_CONJUNCT) in removals
        assert ("(ARG2 > 3)", EditKind.REMOVE_CONJUNCT) in removals

    def test_no_improving_edit(self, arg_odd):
        # compound-expression relations admit no single allowed edit; verified
        # below by an exhaustive sweep of the generator's own candidate space
        target_rule = PolarizedRule("sum", Polarity.PASS_RULE, parse_rule("(ARG1 + ARG2 > 5)"))
        oracle = Oracle(lambda x: Outcome.PASS if x["ARG1"] + x["ARG2"] <= 5 else Outcome.FAIL)
        data = [LabeledRun({"ARG1": 3.0, "ARG2": 4.0}, Outcome.FAIL),
                LabeledRun({"ARG1": 1.0, "ARG2": 2.0}, Outcome.PASS)]
        evidence = build_evidence(target_rule, data, oracle, arg_odd)
        assert evidence.pairs
        base = decisiveness(target_rule, data).n_mismatch
        swept = enumerate_single_edits(target_rule.ast, evidence, arg_odd)
        assert all(
            decisiveness(PolarizedRule("c", Polarity.PASS_RULE, ast), data).n_mismatch >= base
            for ast, _ in swept)
        ctx = RefinementContext(grammar_doc=GRAMMAR_TEXT, target=target_rule,
                                historical=(), evidence=evidence)
        gen = DeterministicGenerator(data, arg_odd)
        with pytest.raises(GenerationFailure, match="no improving edit"):
            generate_candidate(gen, ctx)

    def test_phase_order_thresholds_first(self, fixture42, x1_context):
        candidates = enumerate_single_edits(fixture42.baseline_rule.ast,
                                            x1_context.evidence, fixture42.config.odd)
        kinds = [edit.kind for _, edit in candidates]
        first_add = kinds.index(EditKind.ADD_CONJUNCT)
        assert EditKind.THRESHOLD_ADJUST in kinds[:first_add]
        assert all(k is not EditKind.THRESHOLD_ADJUST for k in kinds[first_add:])


def _pair(x, x_cf, delta):
    from ruleforge import CounterfactualPair
    l1 = sum(abs(v) for v in delta.values())
    return CounterfactualPair(x=x, y=Outcome.FAIL, x_cf=x_cf, y_cf=Outcome.PASS,
                              delta=delta, l1=l1, l1_steps=int(l1))


class TestChangeLog:
    def test_replay_on_random_rule_pairs(self, odd):
        for seed in range(200):
            original = random_rule(seed, odd, 3, 3)
            refined = random_rule(seed + 10_000, odd, 3, 3)
            edits = diff_rules(original, refined)
            assert apply_edits(original, edits) == refined
            assert all(e.kind in EditKind for e in edits)

    def test_identity_diff_is_empty(self, odd):
        ast = random_rule(5, odd, 2, 3)
        assert diff_rules(ast, ast) == ()

    def test_threshold_adjust_classified(self):
        a = parse_rule("(x < 5) and (y > 0)")
        b = parse_rule("(x < 4.1) and (y > 0)")
        edits = diff_rules(a, b)
        assert [e.kind for e in edits] == [EditKind.THRESHOLD_ADJUST]
        assert edits[0].path == (0, 0)
        assert edits[0].before == "(x < 5)" and edits[0].after == "(x < 4.1)"

    def test_operator_replace_classified(self):
        a = parse_rule("(x < 5)")
        b = parse_rule("(x <= 5)")
        edits = diff_rules(a, b)
        assert [e.kind for e in edits] == [EditKind.OPERATOR_REPLACE]

    def test_conjunct_add_remove(self):
        a = parse_rule("(x < 5) and (y > 0)")
        b = parse_rule("(x < 5)")
        assert [e.kind for e in diff_rules(a, b)] == [EditKind.REMOVE_CONJUNCT]
        assert [e.kind for e in diff_rules(b, a)] == [EditKind.ADD_CONJUNCT]

    def test_disjunct_add_remove(self):
        a = parse_rule("(x < 5) or (y > 0)")
        b = parse_rule("(x < 5)")
        assert [e.kind for e in diff_rules(a, b)] == [EditKind.REMOVE_DISJUNCT]
        assert [e.kind for e in diff_rules(b, a)] == [EditKind.ADD_DISJUNCT]


class TestMockGenerator:
    def test_scripted_sequence(self, fixture42, x1_context):
        gen = MockGenerator(["Rule: (ARG3 > 1)",
                             "Rule: (dist_front < 4.1) and (ego_speed > 0)"],
                            fixture42.config.odd)
        with pytest.raises(GenerationFailure, match="UnknownVariable"):
            generate_candidate(gen, x1_context)
        candidate = generate_candidate(gen, x1_context)
        assert print_rule(candidate.ast) == "(dist_front < 4.1) and (ego_speed > 0)"
        assert candidate.source is CandidateSource.MOCK

    def test_exhausted_script(self, fixture42, x1_context):
        gen = MockGenerator([], fixture42.config.odd)
        with pytest.raises(GenerationFailure, match="mock script exhausted"):
            generate_candidate(gen, x1_context)


class _FakeResponse:
    def __init__(self, content):
        self._content = content

    def raise_for_status(self):
        pass

    def json(self):
        return {"choices": [{"message": {"content": self._content}}]}


class TestLlmGenerator:
    def test_parses_backend_reply(self, fixture42, x1_context, monkeypatch):
        captured = {}

        def fake_post(url, json=None, headers=None, timeout=None):
            captured["url"] = url
            captured["payload"] = json
            return _FakeResponse("Rule: (dist_front < 4.1) and (ego_speed > 0)\n"
                                 "Explanation: tightened")

        monkeypatch.setattr(requests, "post", fake_post)
        gen = LlmGenerator(LlmConfig("http://llm.example/v1", "key", "test-model"),
                           fixture42.config.odd)
        candidate = generate_candidate(gen, x1_context)
        assert print_rule(candidate.ast) == "(dist_front < 4.1) and (ego_speed > 0)"
        assert candidate.source is CandidateSource.LLM
        assert apply_edits(fixture42.baseline_rule.ast, candidate.change_log) == candidate.ast
        assert captured["url"] == "http://llm.example/v1/chat/completions"
        assert captured["payload"]["temperature"] == 0
        assert len(gen.transcript) == 1
        assert gen.transcript[0].response.startswith("Rule:")

    def test_transport_error_is_generation_failure(self, fixture42, x1_context, monkeypatch):
        def fake_post(*args, **kwargs):
            raise requests.ConnectionError("refused")

        monkeypatch.setattr(requests, "post", fake_post)
        gen = LlmGenerator(LlmConfig("http://llm.example", "key", "m"), fixture42.config.odd)
        with pytest.raises(GenerationFailure, match="transport error"):
            generate_candidate(gen, x1_context)

    def test_rejected_reply_is_generation_failure(self, fixture42, x1_context, monkeypatch):
        monkeypatch.setattr(requests, "post",
                            lambda *a, **k: _FakeResponse("[[('gt','ARG1','0')]]"))
        gen = LlmGenerator(LlmConfig("http://llm.example", "key", "m"), fixture42.config.odd)
        with pytest.raises(GenerationFailure, match="structural violation"):
            generate_candidate(gen, x1_context)
        assert len(gen.transcript) == 1  # audit trail kept even for rejects
