"""The block quasi-metric, standard dilations, and the chain functional."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DomainError, InputError
from .spectral import BlockPoint, SpectralData


def distance(spec: SpectralData, p: BlockPoint, q: BlockPoint) -> float:
    """max_i |x_i - y_i|^(1/alpha_i) with the Euclidean norm per block."""
    p.require_conforms(spec)
    q.require_conforms(spec)
    best = 0.0
    for a, x, y in zip(spec.exponents, p.blocks, q.blocks):
        d = float(np.linalg.norm(x - y))
        if d > 0.0:
            best = max(best, d ** (1.0 / a))
    return best


def dilate(spec: SpectralData, t: float, p: BlockPoint) -> BlockPoint:
    """Scale block i by t^alpha_i; multiplies the quasi-metric by t exactly."""
    if not t > 0:
        raise DomainError(f"dilation parameter must be positive, got {t}")
    p.require_conforms(spec)
    return BlockPoint(tuple((t ** a) * x for a, x in zip(spec.exponents, p.blocks)))


@dataclass(frozen=True)
class ChainGrid:
    """Subdivision control for the chain-functional estimate."""

    resolution: int = 1
    max_depth: int = 12
    stop_decrement: float = 1e-8

    def __post_init__(self):
        if self.resolution < 1 or self.max_depth < 1:
            raise InputError("resolution and max_depth must be >= 1")


@dataclass(frozen=True)
class ChainEnergyEstimate:
    value: float
    last_decrement: float
    rounds: int

    def __float__(self) -> float:
        return self.value


def _segment_chain_cost(gap: float, alpha: float, beta: float, k: int) -> float:
    # k equal subdivisions of a single-block move of length `gap`:
    # each chain step costs (gap/k)^(beta/alpha).
    if gap == 0.0:
        return 0.0
    return k * (gap / k) ** (beta / alpha)


def chain_energy(
    spec: SpectralData, beta: float, p: BlockPoint, q: BlockPoint, grid: ChainGrid
) -> ChainEnergyEstimate:
    """Upper estimate of the chain functional over axis-aligned interleaved chains.

    The chain changes one block at a time, each block move split into equal
    steps; the per-block subdivision count doubles each round and the
    running minimum over rounds is reported, together with the last-round
    decrement so callers can judge convergence.
    """
    if not beta > 0:
        raise DomainError(f"beta must be positive, got {beta}")
    p.require_conforms(spec)
    q.require_conforms(spec)
    gaps = [float(np.linalg.norm(x - y)) for x, y in zip(p.blocks, q.blocks)]
    best_per_block = [float("inf")] * spec.r
    prev_total = float("inf")
    last_dec = float("inf")
    rounds = 0
    k = grid.resolution
    for depth in range(grid.max_depth):
        for i, (a, g) in enumerate(zip(spec.exponents, gaps)):
            best_per_block[i] = min(best_per_block[i], _segment_chain_cost(g, a, beta, k))
        total = sum(best_per_block)
        rounds = depth + 1
        if np.isfinite(prev_total):
            last_dec = prev_total - total
            if last_dec < grid.stop_decrement:
                prev_total = total
                break
        prev_total = total
        k *= 2
    if not np.isfinite(last_dec):
        last_dec = 0.0
    return ChainEnergyEstimate(value=prev_total, last_decrement=last_dec, rounds=rounds)


def enumerate_chain_cost(
    spec: SpectralData, beta: float, p: BlockPoint, q: BlockPoint, k: int
) -> float:
    """Brute-force chain cost: materialize the interleaved chain and sum D^beta.

    Oracle companion of :func:`chain_energy` at a fixed subdivision count.
    """
    cost = 0.0
    current = [x.copy() for x in p.blocks]
    for i in range(spec.r):
        target = q.blocks[i]
        for j in range(1, k + 1):
            nxt = [b.copy() for b in current]
            nxt[i] = p.blocks[i] + (j / k) * (target - p.blocks[i])
            cost += distance(spec, BlockPoint(tuple(current)), BlockPoint(tuple(nxt))) ** beta
            current = nxt
    return cost


def estimate_qsim_constants(spec: SpectralData, F, samples) -> tuple[float, float]:
    """Empirical quasisimilarity constants (N, K) of a map on sampled pairs.

    N is the geometric mean of image/preimage distance ratios; K bounds the
    two-sided deviation from N. ``F`` maps BlockPoint to BlockPoint.
    """
    ratios = []
    for p, q in samples:
        d = distance(spec, p, q)
        if d == 0.0:
            continue
        ratios.append(distance(spec, F(p), F(q)) / d)
    if not ratios:
        raise InputError("no non-degenerate sample pairs")
    logs = np.log(np.asarray(ratios))
    n = float(np.exp(logs.mean()))
    k = float(np.exp(np.abs(logs - logs.mean()).max()))
    return n, max(k, 1.0)
