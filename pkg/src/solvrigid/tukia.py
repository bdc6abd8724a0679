"""Conjugation pipeline: sup-measure conjugator on one-dimensional first
blocks, stretch normalization, radial-conjugator iteration, and
post-conjugation similarity verification."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Optional, Sequence

import numpy as np

from .errors import ConvergenceError, DomainError, InputError
from .mapalg import FirstBlockAffineMap
from .quasimetric import dilate, distance
from .spectral import BlockPoint, SpectralData


# -- word enumeration -------------------------------------------------------


@dataclass(frozen=True)
class OneDGenerator:
    """Monotone map of the line with exact derivative and inverse."""

    fn: Callable[[float], float]
    dfn: Callable[[float], float]
    inv: Callable[[float], float]
    stretch: float = 1.0
    label: str = ""


def reduced_words(n_generators: int, word_len: int) -> list[tuple[tuple[int, int], ...]]:
    """Freely reduced words over generators and inverses, up to word_len."""
    out: list[tuple[tuple[int, int], ...]] = [()]
    frontier: list[tuple[tuple[int, int], ...]] = [()]
    letters = [(i, s) for i in range(n_generators) for s in (1, -1)]
    for _ in range(word_len):
        nxt = []
        for w in frontier:
            for idx, sgn in letters:
                if w and w[-1] == (idx, -sgn):
                    continue
                nxt.append(w + ((idx, sgn),))
        frontier = nxt
        out.extend(frontier)
    return out


def word_apply_1d(generators: Sequence[OneDGenerator], word, x: float) -> float:
    for idx, sgn in reversed(word):
        g = generators[idx]
        x = g.fn(x) if sgn == 1 else g.inv(x)
    return x


def word_derivative_1d(generators: Sequence[OneDGenerator], word, x: float) -> tuple[float, float]:
    """(derivative, stretch) of the word at x, by the chain rule."""
    deriv = 1.0
    stretch = 1.0
    for idx, sgn in reversed(word):
        g = generators[idx]
        if sgn == 1:
            deriv *= g.dfn(x)
            x = g.fn(x)
            stretch *= g.stretch
        else:
            x = g.inv(x)
            deriv /= g.dfn(x)
            stretch /= g.stretch
    return deriv, stretch


@dataclass
class GroupSample:
    """A finitely generated sample of boundary maps with a truncation depth."""

    generators: list
    word_len: int
    uniform_K: float
    alpha1: float = 1.0


# -- 1-D sup measure and conjugator ----------------------------------------


@dataclass
class SupMeasure1D:
    xs: np.ndarray
    values: np.ndarray
    flagged: list[int]

    def __call__(self, x: float) -> float:
        return float(np.interp(x, self.xs, self.values))


def sup_measure_1d(
    sample: GroupSample, xs: np.ndarray, word_len: Optional[int] = None
) -> SupMeasure1D:
    """Pointwise max of stretch-normalized word derivatives on the grid.

    Grid points where some word derivative vanishes are flagged and their
    value taken over the remaining words. ``word_len`` overrides the
    sample's truncation depth; callers widen it when the grid extends far
    beyond the probe window, so the sup stays faithful at every node.
    """
    xs = np.asarray(xs, dtype=float)
    depth = sample.word_len if word_len is None else word_len
    words = reduced_words(len(sample.generators), depth)
    values = np.empty_like(xs)
    flagged = []
    for i, x in enumerate(xs):
        best = 0.0
        bad = False
        for w in words:
            try:
                deriv, stretch = word_derivative_1d(sample.generators, w, float(x))
            except ZeroDivisionError:
                bad = True
                continue
            if deriv == 0.0 or not math.isfinite(deriv):
                bad = True
                continue
            best = max(best, abs(deriv) / stretch**sample.alpha1)
        values[i] = best
        if bad:
            flagged.append(i)
    return SupMeasure1D(xs=xs, values=values, flagged=flagged)


@dataclass
class OneDConjugator:
    """Strictly monotone change of the first coordinate, grid-interpolated."""

    xs: np.ndarray
    values: np.ndarray

    def fn(self, x: float) -> float:
        return float(np.interp(x, self.xs, self.values))

    def inv(self, u: float) -> float:
        return float(np.interp(u, self.values, self.xs))

    def __call__(self, x: float) -> float:
        return self.fn(x)


def conjugator_1d(mu: SupMeasure1D) -> OneDConjugator:
    """Antiderivative of the sup measure, anchored at 0 (trapezoid rule)."""
    if np.any(mu.values <= 0.0):
        raise InputError("sup measure must be positive on the whole grid")
    steps = np.diff(mu.xs) * 0.5 * (mu.values[1:] + mu.values[:-1])
    vals = np.concatenate(([0.0], np.cumsum(steps)))
    vals -= np.interp(0.0, mu.xs, vals)
    return OneDConjugator(xs=mu.xs.copy(), values=vals)


@dataclass(frozen=True)
class WordVerdict:
    word: tuple
    defect: float
    mean_scale: float


@dataclass
class ConjugationReport:
    conjugator: object
    verdicts: list[WordVerdict]
    max_defect: float
    passed: bool
    diagnostics: dict = field(default_factory=dict)


def verify_conjugation(
    sample: GroupSample,
    F: OneDConjugator,
    probes: np.ndarray,
    probe_step: float = 0.5,
    tol: float = 1e-3,
    word_len: Optional[int] = None,
) -> ConjugationReport:
    """Classify every conjugated word by its first-block derivative spread.

    The defect of a word is the maximal relative deviation of the
    conjugated slope (measured over probe intervals) from its geometric
    mean; all defects at most tol means the conjugated sample acts by
    similarities on the line.
    """
    probes = np.asarray(probes, dtype=float)
    span = F.fn(float(probes.max() + probe_step)) - F.fn(float(probes.min()))
    if not span > 0:
        raise InputError("conjugator is not increasing on the probe range")
    depth = sample.word_len if word_len is None else word_len
    words = reduced_words(len(sample.generators), depth)
    verdicts = []
    worst = 0.0
    for w in words:
        if not w:
            continue
        slopes = []
        for x in probes:
            u0 = F.fn(float(x))
            u1 = F.fn(float(x) + probe_step)
            v0 = F.fn(word_apply_1d(sample.generators, w, F.inv(u0)))
            v1 = F.fn(word_apply_1d(sample.generators, w, F.inv(u1)))
            slopes.append(abs((v1 - v0) / (u1 - u0)))
        logs = np.log(np.asarray(slopes))
        gmean = float(np.exp(logs.mean()))
        defect = float(np.max(np.abs(np.asarray(slopes) / gmean - 1.0)))
        verdicts.append(WordVerdict(word=w, defect=defect, mean_scale=gmean))
        worst = max(worst, defect)
    return ConjugationReport(
        conjugator=F, verdicts=verdicts, max_defect=worst, passed=worst <= tol
    )


# -- stretch normalization --------------------------------------------------


def _word_eta(word, y: tuple, alpha1: float) -> float:
    """Normalized first-block stretch of a generator word at y (cocycle)."""
    eta = 1.0
    for g in reversed(word):
        eta *= g.lam_of(y) / g.stretch**alpha1
        y = tuple(g.quotient(y))
    return eta


@dataclass
class NormalizedSample:
    conjugated: list[FirstBlockAffineMap]
    mu_of: Callable[[tuple], float]
    alpha1: float


def normalize_stretch(sample: GroupSample, word_len: Optional[int] = None) -> NormalizedSample:
    """Conjugate so the first-block stretch is exactly t_g^alpha_1.

    mu(y) is the truncated sup of normalized stretches over forward words;
    conjugating by (x, y) -> (mu(y) x, y) rescales each generator's lam to
    mu(g y) lam(y) / mu(y). Generators must have affine first blocks.
    """
    gens = sample.generators
    for g in gens:
        if not isinstance(g, FirstBlockAffineMap):
            raise InputError(
                "stretch normalization needs affine first blocks; run the "
                "sup-measure pipeline first"
            )
    depth = sample.word_len if word_len is None else word_len
    alpha1 = gens[0].spec.exponents[0]
    index_words = [w for w in _forward_words(len(gens), depth)]

    def mu_of(y: tuple) -> float:
        best = 1.0
        for w in index_words:
            best = max(best, _word_eta([gens[i] for i in w], y, alpha1))
        return best

    conjugated = []
    for g in gens:
        conjugated.append(_conjugate_by_scale(g, mu_of))
    return NormalizedSample(conjugated=conjugated, mu_of=mu_of, alpha1=alpha1)


def _forward_words(n_generators: int, word_len: int) -> list[tuple[int, ...]]:
    out: list[tuple[int, ...]] = [()]
    frontier: list[tuple[int, ...]] = [()]
    for _ in range(word_len):
        frontier = [w + (gi,) for w in frontier for gi in range(n_generators)]
        out.extend(frontier)
    return out


def _conjugate_by_scale(g: FirstBlockAffineMap, mu_of: Callable[[tuple], float]) -> FirstBlockAffineMap:
    def lam(y):
        return mu_of(tuple(g.quotient(y))) * g.lam_of(y) / mu_of(y)

    def b_of(y):
        return mu_of(y) * g.B_of(y)

    return FirstBlockAffineMap(
        spec=g.spec,
        stretch=g.stretch,
        quotient=g.quotient,
        lam_of=lam,
        A_of=g.A_of,
        B_of=b_of,
        label=f"norm({g.label})",
    )


# -- radial conjugator ------------------------------------------------------


@dataclass
class RadialStep:
    t: float
    cauchy_defect: float
    similarity_defect: float


@dataclass
class RadialReport:
    conjugators: list
    steps: list[RadialStep]
    limit: object


def radial_conjugator(
    sample: GroupSample,
    escape: Sequence[FirstBlockAffineMap],
    a_matrix: np.ndarray,
    probe_box: float = 1.0,
    probe_count: int = 64,
    rng: Optional[np.random.Generator] = None,
) -> RadialReport:
    """Conjugator sequence dilation(t_i) . a . G_i along an escaping orbit.

    t_i is the reciprocal of the escape word's quotient similarity
    constant; the report tracks the sup-distance between successive maps on
    a probe box and the similarity defect of the conjugated generators.
    """
    if rng is None:
        rng = np.random.default_rng(11)
    if not escape:
        raise InputError("escape sequence must be nonempty")
    spec = escape[0].spec
    ts = [1.0 / g.stretch for g in escape]
    if any(t2 <= t1 for t1, t2 in zip(ts, ts[1:])):
        raise ConvergenceError("escape stretches are not strictly increasing")
    a_matrix = np.asarray(a_matrix, dtype=float)

    def make_conjugator(t: float, G: FirstBlockAffineMap):
        def F(p: BlockPoint) -> BlockPoint:
            q = G(p)
            q = BlockPoint((a_matrix @ q.blocks[0],) + tuple(q.blocks[1:]))
            return dilate(spec, t, q)

        def F_inv(p: BlockPoint) -> BlockPoint:
            q = dilate(spec, 1.0 / t, p)
            q = BlockPoint((np.linalg.solve(a_matrix, q.blocks[0]),) + tuple(q.blocks[1:]))
            return G.invert_point(q)

        return F, F_inv

    probes = [
        BlockPoint(tuple(rng.uniform(-probe_box, probe_box, n) for n in spec.multiplicities))
        for _ in range(probe_count)
    ]
    maps = [make_conjugator(t, g) for t, g in zip(ts, escape)]
    steps = []
    for i, (F, F_inv) in enumerate(maps):
        if i + 1 < len(maps):
            Fn = maps[i + 1][0]
            cauchy = max(float(np.linalg.norm(F(p).flat() - Fn(p).flat())) for p in probes)
        else:
            cauchy = float("nan")
        defect = _similarity_defect(sample, F, F_inv, probes, spec)
        steps.append(RadialStep(t=ts[i], cauchy_defect=cauchy, similarity_defect=defect))
    return RadialReport(conjugators=[m[0] for m in maps], steps=steps, limit=maps[-1][0])


def _similarity_defect(sample: GroupSample, F, F_inv, probes, spec: SpectralData) -> float:
    """Spread of first-block distance ratios of the conjugated generators."""
    worst = 0.0
    for G in sample.generators:
        ratios = []
        for p in probes:
            hp = F(G(F_inv(p)))
            for bi in range(spec.r):
                for delta in (0.25, 0.5):
                    shifted = list(p.blocks)
                    shifted[bi] = shifted[bi] + delta
                    q = BlockPoint(tuple(shifted))
                    hq = F(G(F_inv(q)))
                    d0 = distance(spec, p, q)
                    d1 = distance(spec, hp, hq)
                    if d0 > 0 and d1 > 0:
                        ratios.append(d1 / d0)
        if ratios:
            logs = np.log(np.asarray(ratios))
            worst = max(worst, float(np.max(np.abs(logs - logs.mean()))))
    return worst
