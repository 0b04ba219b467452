from __future__ import annotations

from decimal import Decimal

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from finqa.gateway import mock_faithful, mock_hallucinate
from finqa.intent import classify, default_rules
from finqa.prompt import assemble, load_exemplars, load_persona
from finqa.ranking import build_index, rank
from finqa.scoring import (
    ExtractedNumber,
    extract_numbers,
    score_response,
    split_sentences,
    verify_numbers,
)


def nums(text):
    return [(float(n.value), n.kind) for n in extract_numbers(text)]


class TestExtractNumbers:
    def test_magnitude_and_percent(self):
        assert nums("Revenue was $1.2M, up 12%.") == [(1200000.0, "plain"), (12.0, "percentage")]

    def test_date_guard(self):
        assert nums("In Q3-2023 revenue held steady.") == []

    def test_empty(self):
        assert nums("") == []

    def test_negative_with_commas(self):
        assert nums("-3,500.75") == [(-3500.75, "plain")]

    def test_quarter_label_alone(self):
        assert nums("Compare Q1 and Q4 results.") == []

    def test_month_adjacent_year(self):
        assert nums("As of March 2023 the total was 10.") == [(10.0, "plain")]
        assert nums("2021 December figures follow.") == []

    def test_bare_year_like_value_kept(self):
        # only period tokens and month-adjacent years are guarded
        assert nums("the unit count was 2000 units") == [(2000.0, "plain")]

    def test_suffix_words(self):
        assert nums("about 3 million units and 2k spares") == [(3_000_000.0, "plain"), (2000.0, "plain")]
        assert nums("a 1.5bn writedown") == [(1_500_000_000.0, "plain")]

    def test_spans_cover_raw(self):
        text = "Growth of 12% on 1,000 units."
        for n in extract_numbers(text):
            assert text[n.start:n.end] == n.raw

    @given(st.decimals(min_value=-10**9, max_value=10**9, places=2))
    @settings(max_examples=50, deadline=None)
    def test_roundtrip_plain_decimals(self, value):
        from finqa.corpus import render_value

        rendered = render_value(value)
        found = extract_numbers(f"The total was {rendered} USD.")
        assert len(found) == 1
        assert found[0].value == value.quantize(Decimal("0.01"))


def fake_numbers(values):
    return [ExtractedNumber(Decimal(str(v)), "plain", 0, 0, str(v)) for v in values]


def derivation_oracle(v, chunks, tolerance=0.005):
    """Brute-force membership check of v in the derivation set."""
    candidates = list(chunks)
    for i, ci in enumerate(chunks):
        for j, cj in enumerate(chunks):
            if i == j:
                continue
            candidates.append(ci + cj)
            candidates.append(ci - cj)
            if cj != 0:
                candidates.append(ci / cj)
                candidates.append(100 * (ci - cj) / abs(cj))
    return any(abs(v - c) <= max(1e-9, tolerance * abs(c)) for c in candidates)


class TestVerifyNumbers:
    def test_sum_derivation(self):
        verified, unverified, _ = verify_numbers(fake_numbers([150]), fake_numbers([100, 50]))
        assert not unverified
        assert "derived" in verified[0]["provenance"]
        assert derivation_oracle(150, [100.0, 50.0])

    def test_percent_change_derivation(self):
        verified, unverified, _ = verify_numbers(fake_numbers([12]), fake_numbers([112, 100]))
        assert not unverified
        assert derivation_oracle(12, [112.0, 100.0])

    def test_unverified(self):
        verified, unverified, _ = verify_numbers(fake_numbers([110]), fake_numbers([100, 50]))
        assert not verified
        assert len(unverified) == 1
        assert not derivation_oracle(110, [100.0, 50.0])

    def test_empty_response_numbers(self):
        verified, unverified, _ = verify_numbers([], fake_numbers([100]))
        assert verified == [] and unverified == []

    def test_direct_match_within_tolerance(self):
        verified, unverified, _ = verify_numbers(fake_numbers([100.4]), fake_numbers([100]))
        assert not unverified  # 0.4% < 0.5%
        verified, unverified, _ = verify_numbers(fake_numbers([101]), fake_numbers([100]))
        assert unverified  # 1% > 0.5% and not derivable from a single value

    def test_cap_disables_derivations(self):
        chunks = fake_numbers(list(range(1, 45)))
        verified, unverified, diags = verify_numbers(fake_numbers([3]), chunks)
        assert not unverified  # direct match still allowed
        assert diags
        verified, unverified, _ = verify_numbers(fake_numbers([83]), chunks)
        assert unverified  # 40+43 would derive it, but the cap is in force

    @given(
        chunks=st.lists(st.integers(1, 500), min_size=2, max_size=6),
        v=st.integers(1, 1200),
    )
    @settings(max_examples=100, deadline=None)
    def test_matches_brute_force_oracle(self, chunks, v):
        _, unverified, _ = verify_numbers(fake_numbers([v]), fake_numbers(chunks))
        assert (not unverified) == derivation_oracle(float(v), [float(c) for c in chunks])


def build_prompt(synth_corpus, query, k=8, budget=800):
    index = build_index(synth_corpus)
    intent = classify(query, default_rules())
    ranked = rank(query, index, k)
    return assemble(
        query, intent, ranked, synth_corpus, load_persona(), load_exemplars(), budget
    )


class TestScoreResponse:
    QUERY = "What was the revenue for region EMEA product phones in Q1-2023?"

    def test_faithful_is_high_confidence(self, synth_corpus):
        bundle = build_prompt(synth_corpus, self.QUERY)
        response = mock_faithful(bundle.serialized)
        report = score_response(self.QUERY, bundle, response)
        assert report.contextual_pass and report.numeric_pass
        assert report.uniqueness_pass and report.grammatical_pass
        assert report.confidence == "High"
        assert not report.unverified_numbers

    def test_hallucinated_is_low_confidence(self, synth_corpus):
        bundle = build_prompt(synth_corpus, self.QUERY)
        response = mock_hallucinate(bundle.serialized, 0.10, seed=3)
        report = score_response(self.QUERY, bundle, response)
        assert report.numeric_pass is False
        assert report.confidence == "Low"
        assert report.unverified_numbers

    def test_repeated_sentence_fails_uniqueness(self, synth_corpus):
        bundle = build_prompt(synth_corpus, self.QUERY)
        report = score_response(
            self.QUERY, bundle, "Revenue rose. Revenue rose. Revenue rose. Revenue rose."
        )
        assert report.uniqueness_pass is False

    def test_confidence_labels_closed_set(self, synth_corpus):
        bundle = build_prompt(synth_corpus, self.QUERY)
        for response in [
            mock_faithful(bundle.serialized),
            mock_hallucinate(bundle.serialized, 0.10, seed=1),
            "Revenue rose.",
            "gibberish",
        ]:
            report = score_response(self.QUERY, bundle, response)
            assert report.confidence in {"Low", "Medium", "High"}

    def test_empty_response_fails_contextual(self, synth_corpus):
        bundle = build_prompt(synth_corpus, self.QUERY)
        report = score_response(self.QUERY, bundle, "")
        assert report.contextual_pass is False
        assert report.confidence == "Low"

    def test_zero_numbers_fails_for_what_with_data(self, synth_corpus):
        bundle = build_prompt(synth_corpus, self.QUERY)
        report = score_response(
            self.QUERY, bundle, "Revenue for region EMEA product phones held steady."
        )
        assert report.numeric_pass is False

    def test_zero_numbers_allowed_for_why(self, synth_corpus):
        query = "Why did revenue for region EMEA product phones move in Q1-2023?"
        bundle = build_prompt(synth_corpus, query)
        report = score_response(
            query, bundle, "The revenue for region EMEA product phones shifted on mix."
        )
        assert report.numeric_pass is True

    def test_determinism(self, synth_corpus):
        bundle = build_prompt(synth_corpus, self.QUERY)
        response = mock_faithful(bundle.serialized)
        a = score_response(self.QUERY, bundle, response)
        b = score_response(self.QUERY, bundle, response)
        assert a.to_dict() == b.to_dict()

    def test_uniqueness_monotone_under_sentence_removal(self, synth_corpus):
        bundle = build_prompt(synth_corpus, self.QUERY)
        response = mock_faithful(bundle.serialized)
        assert score_response(self.QUERY, bundle, response).uniqueness_pass
        sentences = split_sentences(response)
        for i in range(len(sentences)):
            shorter = " ".join(sentences[:i] + sentences[i + 1:])
            if not shorter:
                continue
            assert score_response(self.QUERY, bundle, shorter).uniqueness_pass


class TestGrammaticalChecks:
    QUERY = "What was the revenue for region EMEA product phones in Q1-2023?"

    @pytest.mark.parametrize(
        "response",
        [
            "lowercase start is wrong here today.",
            "No terminal punctuation on this sentence",
            "The figure (was 100 USD.",
            "Short one.",
            "The the figure was 100 USD.",
        ],
    )
    def test_failures(self, synth_corpus, response):
        bundle = build_prompt(synth_corpus, self.QUERY)
        assert score_response(self.QUERY, bundle, response).grammatical_pass is False

    def test_clean_sentence_passes(self, synth_corpus):
        bundle = build_prompt(synth_corpus, self.QUERY)
        report = score_response(
            self.QUERY, bundle, 'The revenue for region EMEA was reported as "steady" overall.'
        )
        assert report.grammatical_pass is True
