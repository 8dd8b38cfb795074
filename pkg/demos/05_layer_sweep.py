"""Early-exit layer sweep: pick a decoding layer on dev, report it on test.

Hypotheses live in a directory tree <root>/<lang>/<split>/layer_<i>.tsv. The
sweep scores every layer on both splits, selects the dev argmin per metric,
and reports the test-set gap between the final layer and that pick. Run with:
python3 demos/05_layer_sweep.py
"""

import tempfile
from pathlib import Path

from speechalign import read_hypothesis_dir, sweep_report

REF = "the cat sat on the mat and watched the birds outside"

# per-layer corruption: (characters substituted on dev, on test)
CORRUPTION = {
    24: (20, 22), 25: (14, 16), 26: (9, 12), 27: (5, 8), 28: (7, 7),
    29: (10, 11), 30: (13, 13), 31: (15, 15), 32: (17, 18),
}


def corrupt(text, n):
    out = list(text)
    step = max(1, len(out) // max(n, 1))
    changed = 0
    for i in range(0, len(out), step):
        if changed == n:
            break
        if out[i] != " ":
            out[i] = "#"
            changed += 1
    return "".join(out)


def main():
    refs = {"utt0": REF}
    with tempfile.TemporaryDirectory() as tmp:
        root = Path(tmp)
        for split_index, split in enumerate(("dev", "test")):
            d = root / "eng" / split
            d.mkdir(parents=True)
            for layer, pair in CORRUPTION.items():
                hyp = corrupt(REF, pair[split_index])
                (d / f"layer_{layer}.tsv").write_text(f"utt0\t{hyp}\n", encoding="utf-8")

        dev = read_hypothesis_dir(root, "eng", "dev")
        test = read_hypothesis_dir(root, "eng", "test")
        report = sweep_report(dev, test, refs, refs)

    print(f"{'layer':>5} {'dev CER':>8} {'test CER':>9}")
    for layer in report.layers:
        d = report.cer.dev_rates[layer]
        t = report.cer.test_rates[layer]
        print(f"{layer:>5} {d:>8.3f} {t:>9.3f}")

    best = report.cer
    print(f"\nDev selects layer {best.best_layer}; on test that layer scores {best.best_test_rate:.3f}")
    print(f"while the final layer scores {best.final_layer_rate:.3f}.")
    print(f"Exiting early at layer {best.best_layer} saves {best.delta:.3f} CER ({100 * best.delta:.1f} points).")
    print("\nSelection never reads the test split: layer 28 has the best test")
    print("CER here, but layer 27 wins on dev and is the one reported.")


if __name__ == "__main__":
    main()
