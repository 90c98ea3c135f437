"""Independent brute-force routines used as test oracles.

Everything here is deliberately written from the definitions with plain
dicts and math, not shared with the package's numpy kernels, so agreement
between the two is a real dual-path check.
"""

import itertools
import math
from collections import Counter, defaultdict
from math import comb


def count_entropy(values) -> float:
    counts = Counter(values)
    n = len(values)
    return -sum((c / n) * math.log2(c / n) for c in counts.values())


def count_mi(x, y) -> float:
    """Plug-in mutual information in bits via H(X) + H(Y) - H(X,Y)."""
    return count_entropy(x) + count_entropy(y) - count_entropy(list(zip(x, y)))


class DictDist:
    """Joint distribution as a dict of assignment tuples, with exact sums."""

    def __init__(self, names, probs, target="Y", context=None, y_numeric=None):
        self.names = list(names)
        self.idx = {n: i for i, n in enumerate(self.names)}
        self.probs = {a: p for a, p in probs.items() if p > 0}
        self.target = target
        self.context = context
        self.y_numeric = y_numeric  # optional code -> float mapping

    @property
    def inputs(self):
        return [n for n in self.names if n not in (self.target, self.context)]

    def _pairs(self, m, fixed):
        sel = [(self.idx[k], v) for k, v in fixed.items()]
        im, iy = self.idx[m], self.idx[self.target]
        pairs = defaultdict(float)
        mass = 0.0
        for a, p in self.probs.items():
            if all(a[i] == v for i, v in sel):
                pairs[(a[im], a[iy])] += p
                mass += p
        return pairs, mass

    def cond_g(self, m, fixed):
        """G(Y;X_m | fixed): mutual information (bits) or variance decrease."""
        pairs, mass = self._pairs(m, fixed)
        if mass <= 0:
            return None
        if self.y_numeric is None:
            px, py = defaultdict(float), defaultdict(float)
            for (xm, y), p in pairs.items():
                px[xm] += p
                py[y] += p
            mi = 0.0
            for (xm, y), p in pairs.items():
                mi += (p / mass) * math.log2(p * mass / (px[xm] * py[y]))
            return mi
        by_xm = defaultdict(lambda: [0.0, 0.0, 0.0])  # mass, sum, sumsq
        tot = [0.0, 0.0, 0.0]
        for (xm, y), p in pairs.items():
            v = self.y_numeric[y]
            for acc in (by_xm[xm], tot):
                acc[0] += p
                acc[1] += p * v
                acc[2] += p * v * v

        def var(acc):
            return acc[2] / acc[0] - (acc[1] / acc[0]) ** 2

        return var(tot) - sum((acc[0] / mass) * var(acc) for acc in by_xm.values())

    def marginal(self, cols):
        out = defaultdict(float)
        ids = [self.idx[c] for c in cols]
        for a, p in self.probs.items():
            out[tuple(a[i] for i in ids)] += p
        return out

    def subset_weights(self, m):
        others = [v for v in self.inputs if v != m]
        p = len(self.inputs)
        for k in range(p):
            w = 1.0 / (comb(p, k) * (p - k))
            for B in itertools.combinations(others, k):
                yield w, B

    def asymptotic_mdi(self, m):
        total = 0.0
        for w, B in self.subset_weights(m):
            for b, pb in self.marginal(B).items():
                g = self.cond_g(m, dict(zip(B, b)))
                if g is not None:
                    total += w * pb * g
        return total

    def contextual(self, m, xc):
        """(signed, abs) with the empty-slice-contributes-zero convention."""
        signed = abs_total = 0.0
        for w, B in self.subset_weights(m):
            for b, pb in self.marginal(B).items():
                fixed = dict(zip(B, b))
                g = self.cond_g(m, fixed)
                fixed[self.context] = xc
                gc = self.cond_g(m, fixed)
                d = g - (gc if gc is not None else 0.0)
                signed += w * pb * d
                abs_total += w * pb * abs(d)
        return signed, abs_total

    def global_effect(self, m):
        ctx_values = sorted({a[self.idx[self.context]] for a in self.probs})
        total = 0.0
        for w, B in self.subset_weights(m):
            joint = self.marginal(list(B) + [self.context])
            for b, pb in self.marginal(B).items():
                fixed = dict(zip(B, b))
                g = self.cond_g(m, fixed)
                avg = 0.0
                for xc in ctx_values:
                    pj = joint.get(tuple(b) + (xc,), 0.0)
                    if pj > 0:
                        avg += (pj / pb) * self.cond_g(m, {**fixed, self.context: xc})
                total += w * pb * (g - avg)
        return total

    def condition(self, name, value):
        i = self.idx[name]
        keep = {a: p for a, p in self.probs.items() if a[i] == value}
        mass = sum(keep.values())
        return DictDist(self.names, {a: p / mass for a, p in keep.items()},
                        self.target, self.context, self.y_numeric)


def from_joint(jd) -> DictDist:
    """Bridge a package JointDistribution into the dict representation."""
    probs = {tuple(int(v) for v in row): float(p)
             for row, p in zip(jd.support, jd.probs)}
    return DictDist(jd.names, probs, jd.target, jd.context)


def joint_target_input_mi(jd) -> float:
    """I(Y; all inputs) computed directly from the joint table."""
    ids = [jd.index(n) for n in jd.inputs]
    iy = jd.index(jd.target)
    pv, py, pvy = defaultdict(float), defaultdict(float), defaultdict(float)
    for row, p in zip(jd.support, jd.probs):
        v = tuple(int(row[i]) for i in ids)
        y = int(row[iy])
        pv[v] += p
        py[y] += p
        pvy[(v, y)] += p
    return sum(p * math.log2(p / (pv[v] * py[y]))
               for (v, y), p in pvy.items() if p > 0)
