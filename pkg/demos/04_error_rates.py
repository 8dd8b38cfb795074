"""Character and word error rates, and what text normalization does to them.

Run with: python3 demos/04_error_rates.py
"""

from speechalign import NormalizationConfig, cer, corpus_rate, normalize_text, wer


def main():
    print("Edit operations are counted with the fewest total edits, preferring")
    print("substitutions over insertion+deletion pairs on ties:\n")
    for ref, hyp in [("kitten", "sitting"), ("dadi", "dati"), ("ab", "ba")]:
        r = cer(ref, hyp)
        print(f"  CER({ref!r:>9}, {hyp!r:>9}) = {r.rate:.4f}   S={r.substitutions} I={r.insertions} D={r.deletions}")

    print("\nWER tokenizes on whitespace. A short reference with a long")
    print("hypothesis can push the rate past 1.0:")
    r = wer("a b", "a b c d")
    print(f"  WER('a b', 'a b c d') = {r.rate:.2f}   (2 insertions over 2 reference words)")

    print("\nNormalization is applied to both sides before counting.")
    cfg = NormalizationConfig()
    print(f"  default: {normalize_text('  The  QUICK (brown) fox!  ', cfg)!r}")
    cfg_nfkc = NormalizationConfig(unicode_form="NFKC")
    print(f"  '①' under NFC:  {normalize_text('①', cfg)!r}")
    print(f"  '①' under NFKC: {normalize_text('①', cfg_nfkc)!r}   (compatibility form unpacks it)")

    print("\nCase folding changes whether 'Dadi' matches 'dadi':")
    strict = NormalizationConfig(case_fold=False)
    print(f"  case-folded CER = {cer('Dadi', 'dadi').rate:.2f}")
    print(f"  case-kept   CER = {cer('Dadi', 'dadi', strict).rate:.2f}")

    print("\nCorpus aggregation pools edit counts over pooled reference length")
    print("(micro average), so long utterances weigh more than short ones:")
    pairs = [("a", "b"), ("abcdefghi", "abcdefghi")]
    report = corpus_rate(pairs, unit="char")
    naive = sum(cer(r, h).rate for r, h in pairs) / len(pairs)
    print(f"  micro rate     = {report.corpus.rate:.3f}   (1 edit / 10 reference chars)")
    print(f"  mean of rates  = {naive:.3f}   (the short utterance dominates)")


if __name__ == "__main__":
    main()
