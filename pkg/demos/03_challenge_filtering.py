"""Build a pronunciation-controlled challenge subset from a tagged corpus.

Rows are dropped when either side of a pair contains a proper noun, or when
the Japanese side contains katakana (loanwords tend to sound like their
source language, which would let a model "cheat" on cross-lingual retrieval
without aligning meaning). Run with: python3 demos/03_challenge_filtering.py
"""

from speechalign import (
    ParallelSet,
    TaggedUtterance,
    build_challenge_set,
    build_full_set,
    proportion_sample,
)


def tag(uid, lang, text, *tokens):
    return TaggedUtterance(uid, lang, text, tuple(tokens))


def main():
    langs = ("eng", "jpn")
    rows = tuple((f"e{i}", f"j{i}") for i in range(6))
    parallel = ParallelSet(langs=langs, rows=rows)

    tags = {
        "e0": tag("e0", "eng", "the water is cold", ("the", "DET"), ("water", "NOUN"), ("is", "AUX"), ("cold", "ADJ")),
        "j0": tag("j0", "jpn", "水は冷たい", ("水", "NOUN"), ("は", "ADP"), ("冷たい", "ADJ")),
        "e1": tag("e1", "eng", "Maria reads a book", ("Maria", "PROPN"), ("reads", "VERB"), ("a", "DET"), ("book", "NOUN")),
        "j1": tag("j1", "jpn", "マリアは本を読む", ("マリア", "PROPN"), ("は", "ADP"), ("本", "NOUN"), ("を", "ADP"), ("読む", "VERB")),
        "e2": tag("e2", "eng", "I drink coffee", ("I", "PRON"), ("drink", "VERB"), ("coffee", "NOUN")),
        "j2": tag("j2", "jpn", "コーヒーを飲む", ("コーヒー", "NOUN"), ("を", "ADP"), ("飲む", "VERB")),
        "e3": tag("e3", "eng", "the door is open", ("the", "DET"), ("door", "NOUN"), ("is", "AUX"), ("open", "ADJ")),
        "j3": tag("j3", "jpn", "戸が開いている", ("戸", "NOUN"), ("が", "ADP"), ("開いている", "VERB")),
        "e4": tag("e4", "eng", "The water is cold", ("The", "DET"), ("water", "NOUN"), ("is", "AUX"), ("cold", "ADJ")),
        "j4": tag("j4", "jpn", "水はとても冷たい", ("水", "NOUN"), ("は", "ADP"), ("とても", "ADV"), ("冷たい", "ADJ")),
        "e5": tag("e5", "eng", "birds sing at dawn", ("birds", "NOUN"), ("sing", "VERB"), ("at", "ADP"), ("dawn", "NOUN")),
        "j5": tag("j5", "jpn", "鳥は夜明けに歌う", ("鳥", "NOUN"), ("は", "ADP"), ("夜明け", "NOUN"), ("に", "ADP"), ("歌う", "VERB")),
    }

    pairs = [("eng", "jpn")]
    full, _ = build_full_set(parallel, tags, pairs)
    challenge, counts = build_challenge_set(parallel, tags, pairs)

    key = ("eng", "jpn")
    print(f"rows in corpus:           {len(rows)}")
    print(f"rows after deduplication: {len(full[key].rows)}   (row 4 repeats row 0's English text up to case)")
    print(f"rows in challenge set:    {counts[key]}")
    print()

    kept = {uid for uid, _ in challenge[key].rows}
    for eng_id, jpn_id in full[key].rows:
        verdict = "kept" if eng_id in kept else "dropped"
        reason = ""
        if verdict == "dropped":
            reason = "  <- proper noun" if eng_id == "e1" else "  <- katakana loanword"
        print(f"  {verdict:<7} {tags[eng_id].text:<22} / {tags[jpn_id].text}{reason}")

    print("\nSampling 2 of the surviving rows, twice with one seed and once with another:")
    for seed in (11, 11, 15):
        sampled = proportion_sample({key: challenge[key]}, {key: 2}, seed=seed)
        print(f"  seed {seed}: {[uid for uid, _ in sampled[key].rows]}")
    print("Equal seeds give identical samples; the draw is uniform without replacement.")


if __name__ == "__main__":
    main()
