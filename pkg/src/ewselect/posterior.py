"""Exact enumeration of the support posterior and its estimators.

Feasible only up to the shared subset cap; serves as the ground-truth
oracle for the Metropolis sampler and as the solver for tiny problems.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass, field
from typing import Iterator, NamedTuple

import numpy as np

from .data import Dataset
from .enumeration import (ENUMERATION_CAP, SCAN_CHUNK, batched_beta,
                          batched_rss, check_cap, subset_count,
                          subset_index_array, subset_rank)
from .errors import DomainError
from .priors import NEG_INF, PosteriorConfig, log_prior, log_prior_table
from .subsets import EPS_RANK, _check_subset, least_squares_min_norm, residual_ss


def log_posterior_unnorm(data: Dataset, J, cfg: PosteriorConfig) -> float:
    """log prior(|J|) - rss(J) / (2 sigma^2); -inf above the support cap."""
    support = _check_subset(J, data.p)
    lp = log_prior(len(support), data.p, cfg)
    if lp == NEG_INF:
        return NEG_INF
    return lp - residual_ss(data, support) / (2.0 * cfg.sigma2)


@dataclass
class _SizeBlock:
    size: int
    subsets: np.ndarray      # (m, size) lexicographic
    log_weight: np.ndarray   # (m,)
    prob: np.ndarray         # (m,)
    min_eig: np.ndarray      # (m,) smallest Gram eigenvalue per subset


@dataclass
class PosteriorTable:
    """Exhaustive normalized posterior over all supports up to the cap."""

    p: int
    blocks: list[_SizeBlock] = field(repr=False)
    log_normalizer: float
    map_subset: tuple[int, ...]
    map_log_weight: float

    @property
    def n_entries(self) -> int:
        return sum(len(b.prob) for b in self.blocks)

    def entries(self) -> Iterator[tuple[tuple[int, ...], float, float]]:
        """Yield (subset, log_weight, prob) in size-then-lex order."""
        for b in self.blocks:
            for row, lw, pr in zip(b.subsets, b.log_weight, b.prob):
                yield tuple(int(v) for v in row), float(lw), float(pr)

    def _locate(self, J) -> tuple[_SizeBlock, int]:
        support = _check_subset(J, self.p)
        s = len(support)
        if s >= len(self.blocks):
            raise DomainError(f"subset size {s} above the enumerated cap")
        return self.blocks[s], subset_rank(support, self.p)

    def prob_of(self, J) -> float:
        block, idx = self._locate(J)
        return float(block.prob[idx])

    def log_weight_of(self, J) -> float:
        block, idx = self._locate(J)
        return float(block.log_weight[idx])

    def to_csv(self, path) -> None:
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["subset", "log_weight", "prob"])
            for subset, lw, pr in self.entries():
                w.writerow([";".join(str(v) for v in subset),
                            f"{lw:.17g}", f"{pr:.17g}"])


def enumerate_posterior(data: Dataset, cfg: PosteriorConfig,
                        cap: int | None = None) -> PosteriorTable:
    """Evaluate the posterior weight of every support with |J| <= max_support.

    MAP ties break toward smaller supports, then lexicographically; both are
    automatic from the size-ascending, lex-ordered scan with strict argmax.
    """
    p = data.p
    s_max = min(cfg.max_support, p)
    total = subset_count(p, s_max)
    check_cap(total, cap if cap is not None else ENUMERATION_CAP)

    lp = log_prior_table(p, cfg)
    eps_n = EPS_RANK * data.n
    G, b, yty = data.gram, data.xty, data.yty
    twos2 = 2.0 * cfg.sigma2

    blocks: list[_SizeBlock] = []
    for s in range(s_max + 1):
        subs = subset_index_array(p, s)
        m = len(subs)
        rss = np.empty(m)
        mineig = np.empty(m)
        for lo in range(0, m, SCAN_CHUNK):
            hi = min(lo + SCAN_CHUNK, m)
            rss[lo:hi], mineig[lo:hi] = batched_rss(G, b, yty, subs[lo:hi], eps_n)
        logw = lp[s] - rss / twos2
        blocks.append(_SizeBlock(s, subs, logw, np.empty(m), mineig))

    peak = max(float(np.max(b.log_weight)) for b in blocks)
    total_mass = sum(float(np.sum(np.exp(b.log_weight - peak))) for b in blocks)
    log_norm = peak + np.log(total_mass)

    map_subset: tuple[int, ...] = ()
    map_lw = NEG_INF
    for b in blocks:
        b.prob = np.exp(b.log_weight - log_norm)
        i = int(np.argmax(b.log_weight))
        if b.log_weight[i] > map_lw:
            map_lw = float(b.log_weight[i])
            map_subset = tuple(int(v) for v in b.subsets[i])

    return PosteriorTable(p=p, blocks=blocks, log_normalizer=float(log_norm),
                          map_subset=map_subset, map_log_weight=map_lw)


class ExactEstimators(NamedTuple):
    map_subset: tuple[int, ...]
    map_beta: np.ndarray
    mean_beta: np.ndarray
    restricted_mean_beta: np.ndarray


def exact_estimators(table: PosteriorTable, data: Dataset) -> ExactEstimators:
    """MAP refit, posterior-mean fit, and the mean restricted to full-rank supports.

    The restricted mean keeps the original posterior weights (it is a
    sub-probability average, not a renormalized one).
    """
    if table.n_entries == 0:
        raise DomainError("posterior table is empty")
    p = data.p
    eps_n = EPS_RANK * data.n
    mean = np.zeros(p)
    restricted = np.zeros(p)
    for blk in table.blocks:
        if blk.size == 0:
            continue
        m = len(blk.subsets)
        for lo in range(0, m, SCAN_CHUNK):
            hi = min(lo + SCAN_CHUNK, m)
            subs = blk.subsets[lo:hi]
            betas = batched_beta(data.gram, data.xty, subs, eps_n)
            wb = blk.prob[lo:hi, None] * betas
            mean += np.bincount(subs.ravel(), weights=wb.ravel(), minlength=p)
            ok = blk.min_eig[lo:hi] > eps_n
            if np.any(ok):
                restricted += np.bincount(subs[ok].ravel(),
                                          weights=wb[ok].ravel(), minlength=p)
    map_beta = least_squares_min_norm(data, table.map_subset)
    return ExactEstimators(table.map_subset, map_beta, mean, restricted)
