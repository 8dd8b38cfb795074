"""Walk through the frame-similarity kernel on synthetic utterances.

The score between two variable-length embedding sequences is the harmonic
mean of two best-match averages: how well each source frame is covered by
the target (recall) and how well each target frame is covered by the source
(precision). Run with: python3 demos/01_frame_similarity.py
"""

import numpy as np

from speechalign import EmbeddingSequence, seqsim

rng = np.random.default_rng(7)
DIM = 64


def utterance(n_frames):
    return EmbeddingSequence(rng.standard_normal((n_frames, DIM)).astype(np.float32))


def noisy_time_warp(seq, noise=0.15):
    """Duplicate random frames and jitter them, mimicking a slower speaker."""
    idx = np.sort(rng.choice(seq.frames, size=int(seq.frames * 1.4), replace=True))
    warped = seq.data[idx] + noise * rng.standard_normal((len(idx), DIM)).astype(np.float32)
    return EmbeddingSequence(warped)


def show(label, result):
    print(f"  {label:<34} score={result.score:+.4f}  recall={result.recall:+.4f}  precision={result.precision:+.4f}")


def main():
    src = utterance(40)
    same_content = noisy_time_warp(src)
    unrelated = utterance(40)

    print("Self, warped copy, and an unrelated utterance:")
    show("src vs src", seqsim(src, src))
    show("src vs warped copy", seqsim(src, same_content))
    show("src vs unrelated", seqsim(src, unrelated))

    print("\nPartial overlap pulls the two directions apart.")
    print("The target covers only the first half of the source, so source")
    print("frames from the second half find no good match (low recall),")
    print("while every target frame is well covered (high precision):")
    half = EmbeddingSequence(same_content.data[: same_content.frames // 2])
    show("src vs first-half copy", seqsim(src, half))
    show("first-half copy vs src", seqsim(half, src))
    print("  (swapping arguments swaps recall and precision; the score is symmetric)")

    print("\nCosine frame matching is the default. Raw dot products keep")
    print("magnitude information, so a rescaled copy no longer scores 1:")
    doubled = EmbeddingSequence(2.0 * src.data)
    show("src vs 2*src, cosine", seqsim(src, doubled))
    show("src vs 2*src, raw dot", seqsim(src, doubled, normalize="none"))


if __name__ == "__main__":
    main()
