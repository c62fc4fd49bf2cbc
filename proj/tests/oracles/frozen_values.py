"""Independent derivations of the frozen expected values used in the unit tests.

Everything here is computed with exact rationals (fractions) and mpmath at 50
digits, directly from the closed forms, without touching the C++ code.
Run: python3 tests/oracles/frozen_values.py
"""
from fractions import Fraction as F
from itertools import product
import mpmath as mp

mp.mp.dps = 50

BOS, EOS, UNK = "<s>", "</s>", "<unk>"


def bleu_example():
    # cand "the cat sat on mat" vs ref "the cat sat on the mat", max order 2
    cand = "the cat sat on mat".split()
    ref = "the cat sat on the mat".split()

    def grams(t, n):
        return [tuple(t[i:i + n]) for i in range(len(t) - n + 1)]

    precisions = []
    for n in (1, 2):
        cg, rg = grams(cand, n), grams(ref, n)
        matched = sum(min(cg.count(g), rg.count(g)) for g in set(cg))
        precisions.append(F(matched, len(cg)))
    bp = mp.e ** (1 - mp.mpf(len(ref)) / len(cand))
    geo = mp.sqrt(mp.mpf(precisions[0].numerator) / precisions[0].denominator *
                  mp.mpf(precisions[1].numerator) / precisions[1].denominator)
    print("bleu precisions", precisions, "value", mp.nstr(bp * geo, 20))


class ToyModel:
    def __init__(self, pairs, order=3, lam=F(3, 10), alpha=F(1, 10)):
        self.order, self.lam, self.alpha = order, lam, alpha
        self.w = [F(1, order)] * order
        vocab = {EOS, UNK}
        for _, tgt in pairs:
            vocab.update(tgt)
        self.vocab = sorted(vocab)
        self.pairs = pairs

    # Counting is done by rescanning the corpus on every query.
    def count(self, ctx, tok):
        c = 0
        total = 0
        o = len(ctx) + 1
        for _, tgt in self.pairs:
            seq = tgt + [EOS]
            padded = [BOS] * (self.order - 1)
            for i, t in enumerate(seq):
                hist = (padded + seq[:i])
                h = tuple(hist[len(hist) - (o - 1):]) if o > 1 else ()
                if h == tuple(ctx):
                    total += 1
                    if t == tok:
                        c += 1
        return c, total

    def prob(self, source, history, tok):
        V = len(self.vocab)
        m = lambda t: t if t in self.vocab else UNK
        tok = m(tok)
        hist = [BOS] * (self.order - 1) + [m(t) for t in history]
        plm = F(0)
        for o in range(1, self.order + 1):
            ctx = hist[len(hist) - (o - 1):] if o > 1 else []
            c, total = self.count(ctx, tok)
            plm += self.w[o - 1] * F(c + 1, total + V)
        src = [m(t) for t in source]
        pcopy = (src.count(tok) + self.alpha) / (len(src) + self.alpha * V)
        return (1 - self.lam) * plm + self.lam * pcopy

    def logprob(self, source, history, tok):
        p = self.prob(source, history, tok)
        return mp.log(mp.mpf(p.numerator) / p.denominator)

    def score(self, source, cand):
        total = mp.mpf(0)
        for i, t in enumerate(cand + [EOS]):
            total += self.logprob(source, cand[:i], t)
        return total / (len(cand) + 1)


def condlm_examples():
    pairs = [(["x", "y"], ["a", "b"]),
             (["y", "z"], ["b", "c", "a"]),
             (["x"], ["a", "a", "c"])]
    m = ToyModel(pairs)
    print("vocab", m.vocab)
    for ctx, tok in [([], "a"), ([], EOS), ([BOS], "a"), (["a"], "a"), (["a"], "b"),
                     (["a"], EOS), ([BOS, BOS], "a"), ([BOS, "a"], "b"),
                     (["a", "a"], "c"), (["c", "a"], EOS)]:
        print("count", ctx, tok, m.count(ctx, tok))
    print("lp1", mp.nstr(m.logprob(["x", "a"], ["a"], "b"), 20))
    print("lp2", mp.nstr(m.logprob(["b", "b", "q"], ["b", "c"], "a"), 20))
    print("lp3", mp.nstr(m.logprob([], [], "zzz"), 20))
    print("score", mp.nstr(m.score(["x", "y"], ["a", "b"]), 20))
    print("score_empty", mp.nstr(m.score(["x"], []), 20))
    # normalization sanity
    tot = sum(m.prob(["x", "a"], ["a"], v) for v in m.vocab)
    print("normalized", tot)


def pearson_example():
    xs, ys = [1, 2, 3, 4], [1, 3, 2, 4]
    mx, my = F(sum(xs), 4), F(sum(ys), 4)
    num = sum((x - mx) * (y - my) for x, y in zip(xs, ys))
    den = mp.sqrt(sum((x - mx) ** 2 for x in xs) * sum((y - my) ** 2 for y in ys))
    print("pearson", num, mp.nstr(mp.mpf(num.numerator) / num.denominator / den, 20))


if __name__ == "__main__":
    bleu_example()
    condlm_examples()
    pearson_example()
