#!/usr/bin/env python3
"""Brute-force BLEU / ROUGE-L oracle.

Computes expected values straight from the metric definitions with no shared
code with the Rust crate. Output is frozen into fixtures/pairs20.expected.json.

    python3 metrics_oracle.py ../fixtures/pairs20.hyp ../fixtures/pairs20.ref
"""
import itertools
import json
import math
import sys

EPS = 1e-9


def ngrams(tokens, n):
    return [tuple(tokens[i:i + n]) for i in range(len(tokens) - n + 1)]


def clipped(h, r, n):
    hyp = ngrams(h, n)
    ref = ngrams(r, n)
    total = 0
    for g in set(hyp):
        total += min(hyp.count(g), ref.count(g))
    return total, len(hyp)


def bleu(pairs, max_order=4):
    c = sum(len(h) for h, _ in pairs)
    r = sum(len(x) for _, x in pairs)
    if c == 0:
        return 0.0
    logs = []
    for n in range(1, max_order + 1):
        match = 0
        cand = 0
        for h, x in pairs:
            m, k = clipped(h, x, n)
            match += m
            cand += k
        if cand == 0:
            continue
        p = match / cand if match > 0 else EPS
        logs.append(math.log(p))
    bp = 1.0 if c > r else math.exp(1 - r / c)
    return bp * math.exp(sum(logs) / len(logs))


def lcs_brute(a, b):
    # Longest common subsequence by enumerating subsequences of the shorter
    # side, longest first. Exponential, fine for short fixture sentences.
    short, long_ = (a, b) if len(a) <= len(b) else (b, a)

    def is_subseq(s, t):
        it = iter(t)
        return all(tok in it for tok in s)

    for L in range(len(short), 0, -1):
        for idx in itertools.combinations(range(len(short)), L):
            if is_subseq([short[i] for i in idx], long_):
                return L
    return 0


def rouge_l(h, r, beta=1.0):
    if not h or not r:
        return 0.0, 0.0, 0.0
    L = lcs_brute(h, r)
    p = L / len(h)
    rec = L / len(r)
    if p == 0 and rec == 0:
        return p, rec, 0.0
    f = (1 + beta ** 2) * p * rec / (rec + beta ** 2 * p)
    return p, rec, f


def main():
    hyp_path, ref_path = sys.argv[1], sys.argv[2]
    with open(hyp_path, encoding="utf-8") as fh:
        hyps = fh.read().split("\n")
    with open(ref_path, encoding="utf-8") as fh:
        refs = fh.read().split("\n")
    if hyps and hyps[-1] == "":
        hyps.pop()
    if refs and refs[-1] == "":
        refs.pop()
    assert len(hyps) == len(refs)
    pairs = [(h.split(), r.split()) for h, r in zip(hyps, refs)]
    per = [rouge_l(h, r) for h, r in pairs]
    n = len(per)
    out = {
        "n_sentences": n,
        "bleu": bleu(pairs),
        "rouge_l_p": sum(p for p, _, _ in per) / n,
        "rouge_l_r": sum(r for _, r, _ in per) / n,
        "rouge_l_f": sum(f for _, _, f in per) / n,
        "sentence_bleu": [bleu([pr]) for pr in pairs],
        "sentence_rouge_l": [list(x) for x in per],
        "hand_cases": {
            "bleu_abcde_vs_abcdf": bleu([("a b c d e".split(), "a b c d f".split())]),
            "bleu_ab_vs_abcd": bleu([("a b".split(), "a b c d".split())]),
            "rouge_cat": list(rouge_l("the cat sat on mat".split(), "the cat on the mat".split())),
        },
    }
    json.dump(out, sys.stdout, indent=2)
    sys.stdout.write("\n")


if __name__ == "__main__":
    main()
