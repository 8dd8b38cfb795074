"""Challenge-set screening: proper nouns, katakana, dedup, and sampling."""

import json

import numpy as np
import pytest

from speechalign import (
    FormatError,
    ParallelSet,
    TaggedUtterance,
    ValidationError,
    build_challenge_set,
    build_full_set,
    contains_katakana,
    dedup,
    has_proper_noun,
    proportion_sample,
    read_blocklist,
    read_parallel_json,
    read_tagged_jsonl,
    save_parallel_json,
)


def tag(utt_id, lang, text, upos_seq=None):
    """Whitespace-tokenize text and zip with the given tag sequence."""
    surfaces = text.split()
    if upos_seq is None:
        upos_seq = ["NOUN"] * len(surfaces)
    return TaggedUtterance(utt_id, lang, text, tuple(zip(surfaces, upos_seq)))


class TestKatakanaDetection:
    def test_plain_katakana(self):
        assert contains_katakana("コーヒー")
        assert contains_katakana("カメラ")

    def test_hiragana_is_not_katakana(self):
        assert not contains_katakana("こんにちは")
        assert not contains_katakana("水を飲む")

    def test_mixed_sentence(self):
        assert contains_katakana("この店のコーヒーは美味しい")

    def test_halfwidth_forms(self):
        assert contains_katakana("ｶﾀｶﾅ")

    def test_phonetic_extensions(self):
        assert contains_katakana("ㇰ")

    def test_iteration_marks(self):
        assert contains_katakana("ヽ")

    def test_prolonged_mark_needs_katakana_neighbor(self):
        # the mark alone, or next to hiragana, proves nothing
        assert not contains_katakana("ー")
        assert not contains_katakana("あーあ")
        assert contains_katakana("カー")
        assert contains_katakana("ーカ")

    def test_middle_dot_not_katakana(self):
        assert not contains_katakana("・")

    def test_empty_and_ascii(self):
        assert not contains_katakana("")
        assert not contains_katakana("coffee")


class TestProperNounScreen:
    def test_tagged_positive(self):
        utt = tag("u1", "eng", "Goma is a city", ["PROPN", "AUX", "DET", "NOUN"])
        assert has_proper_noun(utt)

    def test_tagged_negative(self):
        utt = tag("u2", "eng", "the cat sat")
        assert not has_proper_noun(utt)

    def test_untagged_nonempty_is_an_error(self):
        utt = TaggedUtterance("u3", "eng", "some text", ())
        with pytest.raises(ValidationError, match="no tags"):
            has_proper_noun(utt)

    def test_untagged_empty_is_clean(self):
        utt = TaggedUtterance("u4", "eng", "", ())
        assert not has_proper_noun(utt)


class TestTaggedUtterance:
    def test_tokens_must_reassemble_text(self):
        with pytest.raises(ValidationError, match="reassemble"):
            TaggedUtterance("u", "eng", "hello world", (("goodbye", "NOUN"),))

    def test_reassembly_ignores_spacing(self):
        TaggedUtterance("u", "zho", "你好 世界", (("你好", "NOUN"), ("世界", "NOUN")))
        TaggedUtterance("u", "zho", "你好世界", (("你好", "NOUN"), ("世界", "NOUN")))


class TestDedup:
    def test_keeps_first_of_case_variants(self):
        utts = [
            tag("a", "eng", "Hello World"),
            tag("b", "eng", "hello world"),
            tag("c", "eng", "hello   world"),
            tag("d", "eng", "something else"),
        ]
        kept = dedup(utts)
        assert [u.utt_id for u in kept] == ["a", "d"]

    def test_unicode_form_variants_collapse(self):
        composed = TaggedUtterance("a", "fra", "état", (("état", "NOUN"),))
        decomposed = TaggedUtterance("b", "fra", "état", (("état", "NOUN"),))
        assert [u.utt_id for u in dedup([composed, decomposed])] == ["a"]


def corpus(n_rows=12):
    """A 3-language parallel table with known contamination.

    Row layout (ids r<i>_<lang>):
      rows 0, 5:   proper noun on the eng side
      rows 1, 7:   katakana on the jpn side
      row 3:       duplicate eng text of row 2
      everything else clean and unique
    """
    langs = ("eng", "deu", "jpn")
    rows = []
    tags = {}
    for i in range(n_rows):
        row = []
        for lang in langs:
            utt_id = f"r{i}_{lang}"
            row.append(utt_id)
            if lang == "eng" and i in (0, 5):
                tags[utt_id] = tag(utt_id, lang, f"Goma sentence {i}", ["PROPN", "NOUN", "NUM"])
            elif lang == "jpn" and i in (1, 7):
                tags[utt_id] = TaggedUtterance(utt_id, lang, f"コーヒー{i}", ((f"コーヒー{i}", "NOUN"),))
            elif lang == "eng" and i == 3:
                tags[utt_id] = tag(utt_id, lang, "plain sentence 2")
            else:
                tags[utt_id] = tag(utt_id, lang, f"plain sentence {i}" if lang == "eng" else f"{lang} satz {i}")
        rows.append(tuple(row))
    return ParallelSet(langs=langs, rows=tuple(rows)), tags


class TestBuildSets:
    def test_full_set_drops_only_duplicates(self):
        parallel, tags = corpus()
        full, counts = build_full_set(parallel, tags, [("eng", "jpn"), ("deu", "jpn")])
        # row 3 duplicates row 2's english text, every other row survives
        assert counts[("eng", "jpn")] == 11
        assert counts[("deu", "jpn")] == 11
        assert ("r3_eng", "r3_jpn") not in full[("eng", "jpn")].rows

    def test_challenge_set_removes_planted_violations(self):
        parallel, tags = corpus()
        challenge, counts = build_challenge_set(parallel, tags, [("eng", "jpn")])
        kept_rows = challenge[("eng", "jpn")].rows
        # dropped: dup row 3, PROPN rows 0 and 5, katakana rows 1 and 7
        assert counts[("eng", "jpn")] == 7
        kept_ids = {r[0] for r in kept_rows}
        assert kept_ids.isdisjoint({"r0_eng", "r5_eng", "r1_eng", "r7_eng", "r3_eng"})
        # no surviving row has a violation on either side
        for eng_id, jpn_id in kept_rows:
            assert not has_proper_noun(tags[eng_id])
            assert not has_proper_noun(tags[jpn_id])
            assert not contains_katakana(tags[jpn_id].text)

    def test_katakana_screen_only_for_japanese_sides(self):
        parallel, tags = corpus()
        challenge, counts = build_challenge_set(parallel, tags, [("eng", "deu")])
        # katakana rows 1 and 7 are jpn-side only; eng-deu keeps them
        assert counts[("eng", "deu")] == 9
        kept_ids = {r[0] for r in challenge[("eng", "deu")].rows}
        assert "r1_eng" in kept_ids and "r7_eng" in kept_ids

    def test_blocklist_mapping_and_flat(self):
        parallel, tags = corpus()
        base = build_challenge_set(parallel, tags, [("eng", "jpn")])[1][("eng", "jpn")]
        per_lang = build_challenge_set(
            parallel, tags, [("eng", "jpn")], blocklist={"eng": ["SENTENCE 9"]}
        )[1][("eng", "jpn")]
        assert per_lang == base - 1
        flat = build_challenge_set(
            parallel, tags, [("eng", "jpn")], blocklist=["sentence"]
        )[1][("eng", "jpn")]
        assert flat == 0

    def test_missing_tags_rejected(self):
        parallel, tags = corpus()
        del tags["r2_deu"]
        with pytest.raises(ValidationError, match="lack tags"):
            build_challenge_set(parallel, tags, [("eng", "deu")])

    def test_bad_pairs_rejected(self):
        parallel, tags = corpus()
        with pytest.raises(ValidationError):
            build_challenge_set(parallel, tags, [("eng", "eng")])
        with pytest.raises(ValidationError):
            build_challenge_set(parallel, tags, [("eng", "zho")])
        with pytest.raises(ValidationError):
            build_challenge_set(parallel, tags, [])

    def test_no_violations_on_random_corpus(self):
        # randomized contamination; the filtered output must screen clean
        rng = np.random.default_rng(2024)
        langs = ("eng", "jpn")
        rows, tags = [], {}
        for i in range(200):
            eng_id, jpn_id = f"e{i}", f"j{i}"
            rows.append((eng_id, jpn_id))
            if rng.random() < 0.3:
                tags[eng_id] = tag(eng_id, "eng", f"Name{i} spoke", ["PROPN", "VERB"])
            else:
                tags[eng_id] = tag(eng_id, "eng", f"word {i}")
            if rng.random() < 0.3:
                tags[jpn_id] = TaggedUtterance(jpn_id, "jpn", f"カメラ{i}", ((f"カメラ{i}", "NOUN"),))
            else:
                tags[jpn_id] = TaggedUtterance(jpn_id, "jpn", f"文{i}", ((f"文{i}", "NOUN"),))
        parallel = ParallelSet(langs=langs, rows=tuple(rows))
        challenge, counts = build_challenge_set(parallel, tags, [("eng", "jpn")])
        violations = 0
        for eng_id, jpn_id in challenge[("eng", "jpn")].rows:
            if has_proper_noun(tags[eng_id]) or has_proper_noun(tags[jpn_id]):
                violations += 1
            if contains_katakana(tags[jpn_id].text):
                violations += 1
        assert violations == 0
        assert 0 < counts[("eng", "jpn")] < 200


def synthetic_full(pairs, n=427):
    out = {}
    for pair in pairs:
        rows = tuple((f"{pair[0]}{i}", f"{pair[1]}{i}") for i in range(n))
        out[pair] = ParallelSet(langs=pair, rows=rows)
    return out


PAPER_TARGETS = {
    ("eng", "zho"): 100,
    ("fra", "zho"): 108,
    ("deu", "zho"): 94,
    ("eng", "jpn"): 77,
    ("fra", "jpn"): 72,
    ("deu", "jpn"): 67,
}


class TestProportionSample:
    def test_exact_counts_per_pair(self):
        full = synthetic_full(PAPER_TARGETS)
        sampled = proportion_sample(full, PAPER_TARGETS, seed=13)
        got = {pair: len(ps.rows) for pair, ps in sampled.items()}
        assert got == PAPER_TARGETS

    def test_deterministic_across_runs_and_dict_order(self):
        full = synthetic_full(PAPER_TARGETS)
        first = proportion_sample(full, PAPER_TARGETS, seed=13)
        second = proportion_sample(full, PAPER_TARGETS, seed=13)
        assert first == second
        reordered = dict(reversed(list(full.items())))
        third = proportion_sample(reordered, PAPER_TARGETS, seed=13)
        assert {p: third[p] for p in first} == first

    def test_seed_changes_selection(self):
        full = synthetic_full(PAPER_TARGETS)
        a = proportion_sample(full, PAPER_TARGETS, seed=13)
        b = proportion_sample(full, PAPER_TARGETS, seed=14)
        assert a != b

    def test_pairs_sample_independently(self):
        # same row indices exist in every pair; identical picks across all
        # six pairs would mean the pair is not feeding the generator
        full = synthetic_full(PAPER_TARGETS)
        sampled = proportion_sample(full, {p: 50 for p in PAPER_TARGETS}, seed=0)
        index_sets = {
            pair: tuple(int(r[0][3:]) for r in ps.rows) for pair, ps in sampled.items()
        }
        assert len(set(index_sets.values())) > 1

    def test_row_order_preserved(self):
        full = synthetic_full({("a", "b"): 0}, n=100)
        sampled = proportion_sample(full, {("a", "b"): 30}, seed=5)
        indices = [int(r[0][1:]) for r in sampled[("a", "b")].rows]
        assert indices == sorted(indices)
        assert len(set(indices)) == 30

    def test_target_equals_available_is_identity(self):
        full = synthetic_full({("a", "b"): 0}, n=42)
        sampled = proportion_sample(full, {("a", "b"): 42}, seed=5)
        assert sampled[("a", "b")] is full[("a", "b")]

    def test_target_zero(self):
        full = synthetic_full({("a", "b"): 0}, n=10)
        sampled = proportion_sample(full, {("a", "b"): 0}, seed=5)
        assert sampled[("a", "b")].rows == ()

    def test_target_too_large(self):
        full = synthetic_full({("a", "b"): 0}, n=10)
        with pytest.raises(ValidationError, match="exceeds"):
            proportion_sample(full, {("a", "b"): 11}, seed=5)

    def test_missing_target(self):
        full = synthetic_full({("a", "b"): 0}, n=10)
        with pytest.raises(ValidationError, match="no sample target"):
            proportion_sample(full, {}, seed=5)


class TestReaders:
    def test_tagged_jsonl_roundtrip(self, tmp_path):
        path = tmp_path / "tags.jsonl"
        records = [
            {"utt_id": "u1", "lang": "eng", "text": "hello world",
             "tokens": [{"surface": "hello", "upos": "INTJ"}, {"surface": "world", "upos": "NOUN"}]},
            {"utt_id": "u2", "lang": "jpn", "text": "コーヒー",
             "tokens": [{"surface": "コーヒー", "upos": "NOUN"}]},
        ]
        path.write_text("\n".join(json.dumps(r, ensure_ascii=False) for r in records), encoding="utf-8")
        tags = read_tagged_jsonl(path)
        assert set(tags) == {"u1", "u2"}
        assert tags["u1"].tokens == (("hello", "INTJ"), ("world", "NOUN"))
        assert contains_katakana(tags["u2"].text)

    def test_tagged_jsonl_duplicate(self, tmp_path):
        path = tmp_path / "tags.jsonl"
        rec = json.dumps({"utt_id": "u", "lang": "e", "text": "a", "tokens": [{"surface": "a", "upos": "X"}]})
        path.write_text(rec + "\n" + rec, encoding="utf-8")
        with pytest.raises(ValidationError, match="duplicate"):
            read_tagged_jsonl(path)

    def test_tagged_jsonl_malformed(self, tmp_path):
        path = tmp_path / "tags.jsonl"
        path.write_text('{"utt_id": "u"}', encoding="utf-8")
        with pytest.raises(FormatError):
            read_tagged_jsonl(path)

    def test_blocklist_comments(self, tmp_path):
        path = tmp_path / "block.txt"
        path.write_text("# header\nGoma\n  kinshasa  # city\n\n", encoding="utf-8")
        assert read_blocklist(path) == ("Goma", "kinshasa")

    def test_parallel_json_roundtrip(self, tmp_path):
        pset = ParallelSet(langs=("eng", "jpn"), rows=(("e1", "j1"), ("e2", "j2")))
        path = tmp_path / "p.json"
        save_parallel_json(pset, path)
        assert read_parallel_json(path) == pset

    def test_parallel_json_malformed(self, tmp_path):
        path = tmp_path / "p.json"
        path.write_text('{"langs": ["a", "b"]}', encoding="utf-8")
        with pytest.raises(FormatError):
            read_parallel_json(path)
