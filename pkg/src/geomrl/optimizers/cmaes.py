"""CMA-ES with rank-one and rank-mu covariance updates (maximization).

Strategy constants follow the default settings of Hansen's CMA-ES tutorial.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, replace
from typing import Sequence

import numpy as np

from ..errors import NonFiniteReturn


@dataclass(frozen=True)
class CmaesState:
    mean: np.ndarray
    sigma: float
    C: np.ndarray
    p_sigma: np.ndarray
    p_c: np.ndarray
    B: np.ndarray
    D: np.ndarray
    generation: int
    lam: int
    mu: int
    weights: np.ndarray
    mueff: float
    cc: float
    cs: float
    c1: float
    cmu: float
    damps: float
    chi_n: float

    @property
    def dim(self) -> int:
        return self.mean.size


def default_popsize(n: int) -> int:
    return 4 + int(math.floor(3 * math.log(n)))


def cmaes_init(x0: np.ndarray, sigma0: float, popsize: int | None = None) -> CmaesState:
    x0 = np.asarray(x0, dtype=float).ravel()
    n = x0.size
    if n < 1:
        raise ValueError("CMA-ES needs at least one parameter")
    if not sigma0 > 0:
        raise ValueError("sigma0 must be positive")
    lam = popsize or default_popsize(n)
    if lam < 2:
        raise ValueError("population size must be at least 2")
    mu = lam // 2
    w = math.log(mu + 0.5) - np.log(np.arange(1, mu + 1))
    w = w / w.sum()
    mueff = 1.0 / float(np.sum(w ** 2))

    cc = (4 + mueff / n) / (n + 4 + 2 * mueff / n)
    cs = (mueff + 2) / (n + mueff + 5)
    c1 = 2 / ((n + 1.3) ** 2 + mueff)
    cmu = min(1 - c1, 2 * (mueff - 2 + 1 / mueff) / ((n + 2) ** 2 + mueff))
    damps = 1 + 2 * max(0.0, math.sqrt((mueff - 1) / (n + 1)) - 1) + cs
    chi_n = math.sqrt(n) * (1 - 1 / (4 * n) + 1 / (21 * n * n))
    return CmaesState(
        mean=x0.copy(), sigma=float(sigma0), C=np.eye(n),
        p_sigma=np.zeros(n), p_c=np.zeros(n), B=np.eye(n), D=np.ones(n),
        generation=0, lam=lam, mu=mu, weights=w, mueff=mueff,
        cc=cc, cs=cs, c1=c1, cmu=cmu, damps=damps, chi_n=chi_n,
    )


def cmaes_ask(state: CmaesState, rng: np.random.Generator) -> np.ndarray:
    """``lam`` candidates from ``N(mean, sigma^2 C)``, one per row."""
    z = rng.standard_normal((state.lam, state.dim))
    return state.mean + state.sigma * (z * state.D) @ state.B.T


def cmaes_tell(state: CmaesState,
               evaluated: Sequence[tuple[np.ndarray, float]]) -> CmaesState:
    """Update the search distribution from ``(candidate, return)`` pairs.

    Higher returns are better.  Ties keep the order in which candidates were
    given.
    """
    if len(evaluated) != state.lam:
        raise ValueError(f"expected {state.lam} candidates, got {len(evaluated)}")
    returns = np.array([float(r) for _, r in evaluated])
    if not np.all(np.isfinite(returns)):
        raise NonFiniteReturn("CMA-ES received a non-finite return")
    xs = np.array([np.asarray(x, dtype=float).ravel() for x, _ in evaluated])
    order = np.argsort(-returns, kind="stable")
    sel = xs[order[: state.mu]]

    n = state.dim
    old = state.mean
    mean = state.weights @ sel
    y = (mean - old) / state.sigma

    inv_sqrt_c = (state.B / state.D) @ state.B.T
    ps = (1 - state.cs) * state.p_sigma + math.sqrt(state.cs * (2 - state.cs) * state.mueff) * (inv_sqrt_c @ y)
    gen = state.generation + 1
    ps_norm = float(np.linalg.norm(ps))
    hsig = ps_norm / math.sqrt(1 - (1 - state.cs) ** (2 * gen)) / state.chi_n < 1.4 + 2 / (n + 1)
    pc = (1 - state.cc) * state.p_c
    if hsig:
        pc = pc + math.sqrt(state.cc * (2 - state.cc) * state.mueff) * y

    ys = (sel - old) / state.sigma
    rank_mu = (ys.T * state.weights) @ ys
    c1a = state.c1 * (1 - (1 - hsig) * state.cc * (2 - state.cc))
    C = (1 - c1a - state.cmu) * state.C + state.c1 * np.outer(pc, pc) + state.cmu * rank_mu
    C = 0.5 * (C + C.T)

    sigma = state.sigma * math.exp(min(1.0, (state.cs / state.damps) * (ps_norm / state.chi_n - 1)))

    evals, B = np.linalg.eigh(C)
    floor = 1e-20 * max(1.0, float(evals[-1]))
    if evals[0] <= floor:
        # keep C strictly positive definite in degenerate generations
        evals = np.maximum(evals, floor)
        C = 0.5 * ((B * evals) @ B.T + ((B * evals) @ B.T).T)
    D = np.sqrt(evals)
    return replace(state, mean=mean, sigma=sigma, C=C, p_sigma=ps, p_c=pc,
                   B=B, D=D, generation=gen)
