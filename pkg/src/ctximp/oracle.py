"""Exact asymptotic importances and brute-force checks on small joint distributions.

For totally randomized, fully developed trees in the large-ensemble,
large-sample limit, the mean decrease impurity of a variable equals a
weighted sum of conditional mutual informations over all conditioning
subsets ``B`` of the other inputs:

    Imp(X_m) = sum_k  1/(C(p,k) * (p-k)) * sum_{|B|=k} I(Y; X_m | B)

This module evaluates that sum (and its contextual variants) exactly on an
explicit joint distribution by enumerating every subset, so it serves as an
oracle for the finite-forest estimators.  The contextual variants weight each
conditioning event ``B=b`` by its unconditional probability and compare the
conditional mutual information with and without fixing the context, mirroring
what the node-level forest estimators converge to; a conditioning event that
never occurs within a context value contributes a conditioned term of zero,
matching the estimators' empty-slice convention.

Brute-force checkers for relevance, context dependence (in several variants),
and per-context characterization quantify over all subsets, values, and
context values directly from the definitions, skipping zero-probability
events, and are used to verify the theory's guarantees executably.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from math import comb
from pathlib import Path

import numpy as np

from .dataset import CATEGORICAL, Dataset
from .errors import ConfigError, DataError, GuardExceededError
from .importance import (LABEL_COMPLEMENTARY, LABEL_INDEPENDENT, LABEL_MIXED,
                         LABEL_REDUNDANT)

MAX_ENUMERATION_INPUTS = 20
MAX_SUPPORT_CELLS = 2 ** 24
INFO_TOL = 1e-12


def _xlog2x(a: np.ndarray) -> np.ndarray:
    a = np.asarray(a, dtype=np.float64)
    return np.where(a > 0, a * np.log2(np.where(a > 0, a, 1.0)), 0.0)


@dataclass(frozen=True)
class JointDistribution:
    """Probability table over a small set of categorical variables.

    ``support`` holds one row per assignment with positive probability;
    ``probs`` the matching probabilities (non-negative, summing to one).
    """

    names: tuple[str, ...]
    arities: tuple[int, ...]
    support: np.ndarray
    probs: np.ndarray
    target: str
    context: str | None = None

    def __post_init__(self):
        if len(self.names) != len(self.arities) or len(set(self.names)) != len(self.names):
            raise DataError("variable names/arities malformed")
        if self.target not in self.names:
            raise DataError(f"target {self.target!r} not among the variables")
        if self.context is not None and (self.context not in self.names
                                         or self.context == self.target):
            raise DataError("context must be a non-target variable")
        if self.support.ndim != 2 or self.support.shape != (self.probs.size, len(self.names)):
            raise DataError("support/probability shapes disagree")
        if np.any(self.probs < 0) or abs(self.probs.sum() - 1.0) > 1e-12:
            raise DataError("probabilities must be non-negative and sum to 1")
        for j, k in enumerate(self.arities):
            if k < 1 or self.support[:, j].min() < 0 or self.support[:, j].max() >= k:
                raise DataError(f"support values of {self.names[j]!r} outside 0..{k - 1}")
        if np.unique(self.support, axis=0).shape[0] != self.support.shape[0]:
            raise DataError("duplicate support assignments")

    # -- accessors -----------------------------------------------------------

    @property
    def inputs(self) -> tuple[str, ...]:
        return tuple(n for n in self.names if n != self.target and n != self.context)

    def index(self, name: str) -> int:
        return self.names.index(name)

    def arity(self, name: str) -> int:
        return self.arities[self.index(name)]

    def column(self, name: str) -> np.ndarray:
        return self.support[:, self.index(name)]

    def condition(self, name: str, value: int) -> "JointDistribution":
        """Distribution conditioned on one variable's value (renormalized)."""
        mask = self.column(name) == value
        mass = self.probs[mask].sum()
        if mass <= 0:
            raise DataError(f"conditioning event {name}={value} has zero probability")
        return JointDistribution(self.names, self.arities, self.support[mask],
                                 self.probs[mask] / mass, self.target, self.context)

    # -- grouped conditional mutual information --------------------------------

    def _group_keys(self, cols: tuple[str, ...]) -> np.ndarray:
        if not cols:
            return np.zeros(self.support.shape[0], dtype=np.int64)
        key = np.zeros(self.support.shape[0], dtype=np.int64)
        for name in cols:
            key = key * self.arity(name) + self.column(name)
        return key

    def _grouped_mi(self, m: str, inv: np.ndarray, n_groups: int,
                    mask: np.ndarray | None = None):
        """Masses P(group) and MI(Y; X_m | group) for each group.

        ``mask`` optionally restricts to a subset of support rows (the groups
        stay those of the full support so results align across calls)."""
        xm = self.column(m)
        y = self.column(self.target)
        km, ky = self.arity(m), self.arity(self.target)
        fused = (inv * km + xm) * ky + y
        probs = self.probs
        if mask is not None:
            fused, probs = fused[mask], probs[mask]
        w = np.bincount(fused, weights=probs,
                        minlength=n_groups * km * ky).reshape(n_groups, km, ky)
        mass = w.sum(axis=(1, 2))
        phi = (_xlog2x(w).sum(axis=(1, 2))
               - _xlog2x(w.sum(axis=2)).sum(axis=1)
               - _xlog2x(w.sum(axis=1)).sum(axis=1)
               + _xlog2x(mass))
        with np.errstate(invalid="ignore", divide="ignore"):
            mi = np.where(mass > 0, phi / np.where(mass > 0, mass, 1.0), 0.0)
        return mass, np.maximum(mi, 0.0)


def from_dataset(dataset: Dataset) -> JointDistribution:
    """Empirical plug-in distribution of an all-categorical dataset."""
    if dataset.target_kind != CATEGORICAL:
        raise DataError("the empirical distribution needs a categorical target")
    arities = [dataset.arity(n) for n in dataset.names]
    cells = 1
    for k in arities:
        cells *= k
    if cells > MAX_SUPPORT_CELLS:
        raise GuardExceededError(
            f"arity product {cells} exceeds the {MAX_SUPPORT_CELLS} guard")
    table = dataset.code_table()
    support, counts = np.unique(table, axis=0, return_counts=True)
    return JointDistribution(dataset.names, tuple(arities), support,
                             counts / dataset.n_samples, dataset.target,
                             dataset.context)


def cond_mi(dist: JointDistribution, m: str, b: dict | None = None,
            context_value: int | None = None) -> float | None:
    """Exact I(Y; X_m | B=b[, X_c=x_c]) in bits, or None for a null event.

    ``b`` maps conditioning variables to values.  A conditioning event with
    zero probability yields ``None`` (the undefined marker) rather than an
    exception; population sums treat such events according to the documented
    conventions.
    """
    b = dict(b or {})
    if m == dist.target or m in b:
        raise ConfigError("X_m must differ from the target and the conditioning set")
    if context_value is not None:
        if dist.context is None:
            raise DataError("no context variable designated")
        b[dist.context] = context_value
    mask = np.ones(dist.support.shape[0], dtype=bool)
    for name, value in b.items():
        if not 0 <= value < dist.arity(name):
            raise DataError(f"value {value} out of range for {name!r}")
        mask &= dist.column(name) == value
    if not dist.probs[mask].sum() > 0:
        return None
    inv = np.zeros(dist.support.shape[0], dtype=np.int64)
    mass, mi = dist._grouped_mi(m, inv, 1, mask)
    return float(mi[0])


def _check_guard(dist: JointDistribution):
    if len(dist.inputs) > MAX_ENUMERATION_INPUTS:
        raise GuardExceededError(
            f"{len(dist.inputs)} inputs exceed the enumeration guard "
            f"({MAX_ENUMERATION_INPUTS}); 2^(p-1) subsets per variable")


def _subsets(dist: JointDistribution, m: str):
    """(weight, B) pairs over all conditioning subsets for variable m."""
    others = [v for v in dist.inputs if v != m]
    p = len(dist.inputs)
    for k in range(p):
        w = 1.0 / (comb(p, k) * (p - k))
        for B in itertools.combinations(others, k):
            yield w, B


def asymptotic_mdi(dist: JointDistribution, m: str) -> float:
    """Exact large-ensemble mean decrease impurity of one input variable."""
    if m not in dist.inputs:
        raise ConfigError(f"{m!r} is not an input variable")
    _check_guard(dist)
    total = 0.0
    for w, B in _subsets(dist, m):
        keys = dist._group_keys(B)
        uniq, inv = np.unique(keys, return_inverse=True)
        mass, mi = dist._grouped_mi(m, inv, uniq.size)
        total += w * float(mass @ mi)
    return total


@dataclass(frozen=True)
class ContextualScores:
    """Exact contextual importances of one (variable, context value) pair."""

    signed: float
    abs: float
    baseline: float
    global_context: float


def asymptotic_contextual(dist: JointDistribution, m: str, x_c: int) -> ContextualScores:
    """Exact contextual importance scores for variable ``m`` at context ``x_c``.

    ``signed``/``abs`` weight every conditioning event by its unconditional
    probability and take the (absolute) difference between the conditional
    mutual information with and without fixing the context, the quantity the
    node-level forest estimators converge to.  ``baseline`` applies the plain
    asymptotic importance to the distribution conditioned on the context
    value (the two-ensembles approach).  ``global_context`` averages the
    signed differences over context values with conditional weights.
    """
    if dist.context is None:
        raise DataError("no context variable designated")
    if m not in dist.inputs:
        raise ConfigError(f"{m!r} is not an input variable")
    kc = dist.arity(dist.context)
    if not 0 <= x_c < kc:
        raise DataError(f"unknown context value {x_c}")
    ctx_col = dist.column(dist.context)
    if dist.probs[ctx_col == x_c].sum() <= 0:
        raise DataError(f"context value {x_c} has zero probability")
    _check_guard(dist)

    signed = abs_score = global_ctx = 0.0
    for w, B in _subsets(dist, m):
        keys = dist._group_keys(B)
        uniq, inv = np.unique(keys, return_inverse=True)
        mass, mi = dist._grouped_mi(m, inv, uniq.size)
        mass_c, mi_c = dist._grouped_mi(m, inv, uniq.size, ctx_col == x_c)
        diff = np.where(mass_c > 0, mi - mi_c, mi)
        signed += w * float(mass @ diff)
        abs_score += w * float(mass @ np.abs(diff))
        avg = np.zeros_like(mi)
        for c in range(kc):
            mass_k, mi_k = dist._grouped_mi(m, inv, uniq.size, ctx_col == c)
            nz = mass > 0
            avg[nz] += (mass_k[nz] / mass[nz]) * mi_k[nz]
        global_ctx += w * float(mass @ (mi - avg))
    baseline = asymptotic_mdi(dist.condition(dist.context, x_c), m)
    return ContextualScores(signed, abs_score, baseline, global_ctx)


def is_relevant(dist: JointDistribution, m: str) -> bool:
    """Whether some conditioning subset of the inputs gives X_m information about Y.

    ``m`` may be an input or the context variable (whose own relevance is
    assessed against the full input set).
    """
    if m == dist.target:
        raise ConfigError("relevance of the target is not defined")
    _check_guard(dist)
    others = [v for v in dist.inputs if v != m]
    for k in range(len(others) + 1):
        for B in itertools.combinations(others, k):
            keys = dist._group_keys(B)
            uniq, inv = np.unique(keys, return_inverse=True)
            mass, mi = dist._grouped_mi(m, inv, uniq.size)
            if np.any((mass > 0) & (mi > INFO_TOL)):
                return True
    return False


def _pairwise_tables(dist: JointDistribution, m: str, B: tuple[str, ...]):
    """Aligned per-group MI tables: unconditioned and one per context value."""
    keys = dist._group_keys(B)
    uniq, inv = np.unique(keys, return_inverse=True)
    mass, mi = dist._grouped_mi(m, inv, uniq.size)
    ctx_col = dist.column(dist.context)
    kc = dist.arity(dist.context)
    per_ctx = [dist._grouped_mi(m, inv, uniq.size, ctx_col == c) for c in range(kc)]
    return mass, mi, per_ctx


def is_context_dependent(dist: JointDistribution, m: str, condition: int = 1) -> bool:
    """Brute-force context-dependence check under one of five conditions.

    Condition 1 is the general definition: some conditioning event ``B=b``
    and context value change the conditional mutual information.  Conditions
    3-6 are the stricter variants that respectively compare two context
    values at fixed ``b`` (3), aggregate over ``b`` (4), average over context
    values at fixed ``b`` (5), or aggregate over both (6).  Zero-probability
    events never witness dependence.
    """
    if dist.context is None:
        raise DataError("no context variable designated")
    if m not in dist.inputs:
        raise ConfigError(f"{m!r} is not an input variable")
    if condition not in (1, 3, 4, 5, 6):
        raise ConfigError("condition must be one of 1, 3, 4, 5, 6")
    _check_guard(dist)
    kc = dist.arity(dist.context)
    p_ctx = np.array([dist.probs[dist.column(dist.context) == c].sum()
                      for c in range(kc)])
    for _, B in _subsets(dist, m):
        mass, mi, per_ctx = _pairwise_tables(dist, m, B)
        nz = mass > 0
        if condition == 1:
            for mass_c, mi_c in per_ctx:
                if np.any(nz & (mass_c > 0) & (np.abs(mi - mi_c) > INFO_TOL)):
                    return True
        elif condition == 3:
            for (ma, ia), (mb, ib) in itertools.combinations(per_ctx, 2):
                if np.any(nz & (ma > 0) & (mb > 0) & (np.abs(ia - ib) > INFO_TOL)):
                    return True
        elif condition == 4:
            overall = float(mass @ mi)
            for c, (mass_c, mi_c) in enumerate(per_ctx):
                if p_ctx[c] > 0:
                    inside = float(mass_c @ mi_c) / p_ctx[c]
                    if abs(inside - overall) > INFO_TOL:
                        return True
        elif condition == 5:
            avg = np.zeros_like(mi)
            for mass_c, mi_c in per_ctx:
                avg[nz] += (mass_c[nz] / mass[nz]) * mi_c[nz]
            if np.any(nz & (np.abs(avg - mi) > INFO_TOL)):
                return True
        else:  # condition 6
            overall = float(mass @ mi)
            joint = sum(float(mass_c @ mi_c) for mass_c, mi_c in per_ctx)
            if abs(joint - overall) > INFO_TOL:
                return True
    return False


def characterize_exact(dist: JointDistribution, m: str, x_c: int) -> str:
    """Exhaustive sign audit of the context's effect on one variable.

    Compares I(Y;X_m|B=b,X_c=x_c) against I(Y;X_m|B=b) over every
    conditioning event with positive probability in the context.  All
    increases: context-complementary.  All decreases: context-redundant.
    No change anywhere: context-independent (at this context value).
    Both directions: mixed.
    """
    if dist.context is None:
        raise DataError("no context variable designated")
    if m not in dist.inputs:
        raise ConfigError(f"{m!r} is not an input variable")
    _check_guard(dist)
    ctx_col = dist.column(dist.context)
    saw_up = saw_down = False
    for _, B in _subsets(dist, m):
        keys = dist._group_keys(B)
        uniq, inv = np.unique(keys, return_inverse=True)
        mass, mi = dist._grouped_mi(m, inv, uniq.size)
        mass_c, mi_c = dist._grouped_mi(m, inv, uniq.size, ctx_col == x_c)
        nz = (mass > 0) & (mass_c > 0)
        d = mi_c[nz] - mi[nz]
        saw_up |= bool(np.any(d > INFO_TOL))
        saw_down |= bool(np.any(d < -INFO_TOL))
    if saw_up and saw_down:
        return LABEL_MIXED
    if saw_up:
        return LABEL_COMPLEMENTARY
    if saw_down:
        return LABEL_REDUNDANT
    return LABEL_INDEPENDENT


@dataclass(frozen=True)
class TheoremReport:
    """Outcome of the executable theorem checks on one distribution."""

    irrelevant_context_iff_no_dependence: bool
    independence_iff_zero_abs: bool
    sign_rule_matches_audit: bool
    witnesses: tuple[str, ...] = ()

    @property
    def passed(self) -> bool:
        return (self.irrelevant_context_iff_no_dependence
                and self.independence_iff_zero_abs
                and self.sign_rule_matches_audit)


def verify_theorems(dist: JointDistribution) -> TheoremReport:
    """Check the three structural guarantees on a concrete distribution.

    1. The context is irrelevant to the output (with respect to the inputs)
       exactly when every input is context-independent and the context alone
       carries no information about the output.
    2. An input is context-independent exactly when its absolute contextual
       importance vanishes for every context value.
    3. Whenever the signed score's magnitude equals the absolute score (and
       is nonzero), the exhaustive sign audit agrees with the sign rule:
       negative means context-complementary, positive context-redundant.
    """
    if dist.context is None:
        raise DataError("no context variable designated")
    _check_guard(dist)
    witnesses = []
    kc = dist.arity(dist.context)

    dependent = {m: is_context_dependent(dist, m, 1) for m in dist.inputs}
    scores = {m: [asymptotic_contextual(dist, m, c) for c in range(kc)]
              for m in dist.inputs}

    ctx_relevant = is_relevant(dist, dist.context)
    marginal = cond_mi(dist, dist.context, {})
    rhs = (not any(dependent.values())) and (marginal is not None and marginal <= INFO_TOL)
    t1 = (not ctx_relevant) == rhs
    if not t1:
        witnesses.append(
            f"T1: context relevant={ctx_relevant}, dependent variables="
            f"{[m for m, d in dependent.items() if d]}, I(Y;context)={marginal!r}")

    t2 = True
    for m in dist.inputs:
        abs_zero = all(s.abs <= INFO_TOL for s in scores[m])
        if abs_zero != (not dependent[m]):
            t2 = False
            witnesses.append(
                f"T2: {m}: dependent={dependent[m]}, abs scores="
                f"{[s.abs for s in scores[m]]}")

    t3 = True
    for m in dist.inputs:
        for c in range(kc):
            s = scores[m][c]
            if s.abs > INFO_TOL and abs(abs(s.signed) - s.abs) <= INFO_TOL:
                expected = LABEL_COMPLEMENTARY if s.signed < 0 else LABEL_REDUNDANT
                got = characterize_exact(dist, m, c)
                if got != expected:
                    t3 = False
                    witnesses.append(
                        f"T3: {m} at context {c}: signed={s.signed!r} "
                        f"abs={s.abs!r} audit says {got}, sign rule {expected}")
    return TheoremReport(t1, t2, t3, tuple(witnesses))


def random_distribution(rng: np.random.Generator, input_arities,
                        target_arity: int, context_arity: int | None = None,
                        names=None) -> JointDistribution:
    """Random full-support distribution with probabilities from a flat simplex."""
    input_arities = tuple(int(k) for k in input_arities)
    arities = input_arities + (target_arity,)
    var_names = ([f"X{i + 1}" for i in range(len(input_arities))] + ["Y"]
                 if names is None else list(names))
    context = None
    if context_arity is not None:
        arities = arities + (context_arity,)
        if names is None:
            var_names.append("Xc")
        context = var_names[-1]
    support = np.array(list(itertools.product(*(range(k) for k in arities))),
                       dtype=np.int64)
    probs = rng.dirichlet(np.ones(support.shape[0]))
    return JointDistribution(tuple(var_names), arities, support, probs,
                             var_names[len(input_arities)], context)


# ---------------------------------------------------------------------------
# Distribution file format
# ---------------------------------------------------------------------------


def save_distribution(dist: JointDistribution, path) -> None:
    """Write a distribution file: header (names, arities, roles), then support."""
    order = list(dist.inputs) + [dist.target] + ([dist.context] if dist.context else [])
    cols = [dist.index(n) for n in order]
    lines = ["variables: " + ",".join(f"{n}:{dist.arity(n)}" for n in order),
             f"target: {dist.target}"]
    if dist.context:
        lines.append(f"context: {dist.context}")
    for row, p in zip(dist.support[:, cols], dist.probs):
        lines.append(",".join(str(int(v)) for v in row) + " " + repr(float(p)))
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")


def load_distribution(path) -> JointDistribution:
    """Read a distribution file written by :func:`save_distribution`.

    Probabilities must sum to 1 within 1e-9; they are renormalized exactly.
    """
    p = Path(path)
    if not p.exists():
        raise DataError(f"no such file: {p}")
    lines = [ln for ln in p.read_text(encoding="utf-8").splitlines() if ln.strip()]
    if len(lines) < 3 or not lines[0].startswith("variables: "):
        raise DataError("malformed distribution file")
    pairs = [item.split(":") for item in lines[0][len("variables: "):].split(",")]
    names = tuple(name for name, _ in pairs)
    arities = tuple(int(k) for _, k in pairs)
    if not lines[1].startswith("target: "):
        raise DataError("distribution file is missing the target line")
    target = lines[1][len("target: "):]
    context = None
    body = 2
    if len(lines) > 2 and lines[2].startswith("context: "):
        context = lines[2][len("context: "):]
        body = 3
    support, probs = [], []
    for ln in lines[body:]:
        codes, _, prob = ln.partition(" ")
        support.append([int(v) for v in codes.split(",")])
        probs.append(float(prob))
    probs = np.array(probs, dtype=np.float64)
    if abs(probs.sum() - 1.0) > 1e-9:
        raise DataError(f"probabilities sum to {probs.sum()!r}, not 1")
    probs = probs / probs.sum()
    return JointDistribution(names, arities, np.array(support, dtype=np.int64),
                             probs, target, context)
