import math
from collections import Counter

import pytest
from hypothesis import given
from hypothesis import strategies as st

from pluginaudit.consistency import (
    DESCRIPTION_MISMATCH,
    LEGAL_URL_MISMATCH,
    NAME_MISMATCH,
    ConsistencyThresholds,
    check_consistency,
    cosine_similarity,
    text_vector,
    urls_match,
)
from pluginaudit.errors import InvalidUrl
from pluginaudit.models import ManifestData, StoreListing


def oracle_cosine(text_a: str, text_b: str) -> float:
    """Independent brute-force cosine over whitespace/underscore tokens."""
    def toks(text):
        out = []
        word = ""
        for ch in text.lower():
            if ch.isalnum():
                word += ch
            else:
                if word:
                    out.append(word)
                word = ""
        if word:
            out.append(word)
        return Counter(out)

    a, b = toks(text_a), toks(text_b)
    if not a and not b:
        return 1.0
    if not a or not b:
        return 0.0
    dot = 0
    for token in set(a) | set(b):
        dot += a[token] * b[token]
    return dot / (math.sqrt(sum(v * v for v in a.values()))
                  * math.sqrt(sum(v * v for v in b.values())))


# Frozen from the oracle: two shared tokens of three vs two.
WEATHER_EXPECTED = 0.816496580927726


class TestTextVector:
    def test_simple_words(self):
        assert text_vector("Weather Manager") == {"weather": 1, "manager": 1}

    def test_underscores_split(self):
        assert text_vector("AAA_weather_manager") == {"aaa": 1, "weather": 1, "manager": 1}

    def test_empty(self):
        assert text_vector("") == {}


class TestCosine:
    def test_identity(self):
        vec = text_vector("alpha beta beta")
        assert cosine_similarity(vec, vec) == 1.0

    def test_weather_manager_scenario_matches_oracle(self):
        expected = oracle_cosine("weather manager", "AAA_weather_manager")
        assert expected == pytest.approx(WEATHER_EXPECTED, abs=1e-12)
        got = cosine_similarity(
            text_vector("weather manager"), text_vector("AAA_weather_manager")
        )
        assert got == pytest.approx(WEATHER_EXPECTED, abs=1e-12)
        assert got < 0.85  # below the name threshold, so it flags

    def test_orthogonal(self):
        assert cosine_similarity({"a": 1}, {"b": 1}) == 0.0

    def test_empty_edges(self):
        assert cosine_similarity({}, {}) == 1.0
        assert cosine_similarity({}, {"a": 1}) == 0.0

    @given(
        a=st.dictionaries(st.sampled_from("abcdef"), st.integers(1, 9), max_size=6),
        b=st.dictionaries(st.sampled_from("abcdef"), st.integers(1, 9), max_size=6),
    )
    def test_symmetric_and_bounded(self, a, b):
        left = cosine_similarity(a, b)
        assert left == cosine_similarity(b, a)
        assert 0.0 <= left <= 1.0

    @given(
        vec=st.dictionaries(st.sampled_from("abcdef"), st.integers(1, 9), min_size=1, max_size=6),
        scale=st.integers(1, 20),
    )
    def test_scale_invariant(self, vec, scale):
        scaled = {k: v * scale for k, v in vec.items()}
        other = {"a": 2, "c": 1}
        assert cosine_similarity(vec, other) == pytest.approx(
            cosine_similarity(scaled, other), abs=1e-12
        )

    @given(vec=st.dictionaries(st.sampled_from("abcdef"), st.integers(1, 9), min_size=1))
    def test_self_similarity_is_one(self, vec):
        assert cosine_similarity(vec, vec) == pytest.approx(1.0, abs=1e-12)


class TestUrlsMatch:
    def test_normalization(self):
        assert urls_match("https://X.io/legal/", "https://x.io/legal") is True

    def test_distinct_paths(self):
        assert urls_match("https://x.io/legal", "https://x.io/privacy") is False

    def test_default_port_stripped(self):
        assert urls_match("https://x.io:443/legal", "https://x.io/legal") is True
        assert urls_match("http://x.io:8080/legal", "http://x.io/legal") is False

    def test_fragment_dropped(self):
        assert urls_match("https://x.io/legal#top", "https://x.io/legal") is True

    def test_query_significant(self):
        assert urls_match("https://x.io/legal?v=1", "https://x.io/legal") is False

    def test_invalid_url_raises(self):
        with pytest.raises(InvalidUrl):
            urls_match("not a url", "https://x.io/legal")


def make_pair(listing_name="Swift Helper", manifest_name="Swift Helper",
              listing_desc="Daily weather digests.", manifest_desc="Daily weather digests.",
              listing_legal="https://x.io/legal", manifest_legal="https://x.io/legal"):
    listing = StoreListing(plugin_id="p1", name=listing_name, description=listing_desc,
                           legal_url=listing_legal)
    manifest = ManifestData(
        name=manifest_name, legal_url=manifest_legal, api_url="https://x.io/api.json",
        multi_auth=False, verification_token=None, description=manifest_desc,
    )
    return listing, manifest


class TestCheckConsistency:
    def test_identical_fields_no_flags(self):
        verdict = check_consistency(*make_pair())
        assert verdict.flags == ()
        assert verdict.exposure2 is False
        assert verdict.name_similarity == 1.0

    def test_ranking_prefix_flags_name(self):
        verdict = check_consistency(
            *make_pair(listing_name="weather manager", manifest_name="AAA_weather_manager")
        )
        assert verdict.name_similarity == pytest.approx(WEATHER_EXPECTED, abs=1e-9)
        assert NAME_MISMATCH in verdict.flags
        assert DESCRIPTION_MISMATCH not in verdict.flags
        assert verdict.exposure2 is True

    def test_description_mismatch(self):
        verdict = check_consistency(
            *make_pair(manifest_desc="Totally different service blurb entirely.")
        )
        assert DESCRIPTION_MISMATCH in verdict.flags

    def test_legal_mismatch(self):
        verdict = check_consistency(*make_pair(manifest_legal="https://x.io/privacy"))
        assert LEGAL_URL_MISMATCH in verdict.flags
        assert verdict.legal_url_match is False

    def test_missing_manifest_legal_is_mismatch(self):
        verdict = check_consistency(*make_pair(manifest_legal=None))
        assert LEGAL_URL_MISMATCH in verdict.flags

    def test_both_legal_missing_is_consistent(self):
        verdict = check_consistency(*make_pair(listing_legal=None, manifest_legal=None))
        assert LEGAL_URL_MISMATCH not in verdict.flags

    def test_empty_descriptions_are_consistent(self):
        verdict = check_consistency(*make_pair(listing_desc="", manifest_desc=""))
        assert verdict.description_similarity == 1.0

    @given(
        name_pair=st.sampled_from([
            ("weather manager", "weather manager"),
            ("weather manager", "AAA_weather_manager"),
            ("alpha beta", "gamma delta"),
        ]),
        theta_lo=st.floats(0.0, 1.0),
        theta_hi=st.floats(0.0, 1.0),
    )
    def test_flags_monotone_in_threshold(self, name_pair, theta_lo, theta_hi):
        lo, hi = sorted((theta_lo, theta_hi))
        pair = make_pair(listing_name=name_pair[0], manifest_name=name_pair[1])
        flagged_lo = NAME_MISMATCH in check_consistency(
            *pair, thresholds=ConsistencyThresholds(theta1=lo)
        ).flags
        flagged_hi = NAME_MISMATCH in check_consistency(
            *pair, thresholds=ConsistencyThresholds(theta1=hi)
        ).flags
        # Raising the threshold never unsets the flag.
        assert not (flagged_lo and not flagged_hi)


def test_threshold_bounds_validated():
    with pytest.raises(ValueError):
        ConsistencyThresholds(theta1=1.5)
