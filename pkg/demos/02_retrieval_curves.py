"""Spoken-translation retrieval across encoder depth, on synthetic data.

Each utterance has a hidden content vector. Two "languages" observe that
vector through their own frame noise, and the noise level varies by layer:
large early, smallest in the upper-middle, larger again at the top. Retrieval
recall@K should therefore peak at the middle layer. Run with:
python3 demos/02_retrieval_curves.py
"""

import numpy as np

from speechalign import (
    EmbeddingSequence,
    RetrievalConfig,
    evaluate_pairs,
    random_baseline,
    seqsim_matrix,
)

rng = np.random.default_rng(21)

N_UTTS = 40
DIM = 32
FRAMES = 8
NOISE_BY_LAYER = {6: 9.0, 18: 1.2, 30: 3.5}


def render(seed_vectors, noise):
    """One language's view of every utterance at a given noise level."""
    seqs = []
    for z in seed_vectors:
        frames = z[None, :] + noise * rng.standard_normal((FRAMES, DIM))
        seqs.append(EmbeddingSequence(frames.astype(np.float32)))
    return seqs


def main():
    content = rng.standard_normal((N_UTTS, DIM))
    ids = [f"utt{i:02d}" for i in range(N_UTTS)]
    config = RetrievalConfig(ks=(1, 5, 10))

    print(f"{N_UTTS} parallel utterances, chance recall@K is K/N:")
    for k in config.ks:
        print(f"  K={k:<3} baseline {random_baseline(N_UTTS, k):.3f}")

    print(f"\n{'layer':>5} {'K':>3} {'direction':>9} {'recall':>7} {'95% CI':>15} {'baseline':>8}")
    for layer, noise in sorted(NOISE_BY_LAYER.items()):
        matrix = seqsim_matrix(
            render(content, noise), render(content, noise), src_ids=ids, trg_ids=ids
        )
        rows = evaluate_pairs({"langA-langB": matrix}, layer, config)
        for row in rows:
            if row.pair == "ALL" and row.direction != "pooled":
                continue  # per-direction micros repeat the single pair's rows
            ci = f"[{row.ci_low:.3f}, {row.ci_high:.3f}]"
            print(f"{layer:>5} {row.k:>3} {row.direction:>9} {row.recall:>7.3f} {ci:>15} {row.baseline:>8.3f}")

    print("\nThe middle layer dominates both directions; the top layer gives")
    print("part of that alignment back. Whenever the interval clears the")
    print("baseline column, recall is above chance at the 95% level.")


if __name__ == "__main__":
    main()
