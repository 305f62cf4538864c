"""Shared helpers for building randomized valid strategies and tables."""

from __future__ import annotations

import itertools

import numpy as np
import pytest

from paraself.qcore import DensityMatrix, Povm
from paraself.strategies import SingleCopyStrategy


def haar_unitary(d: int, rng: np.random.Generator) -> np.ndarray:
    z = (rng.normal(size=(d, d)) + 1j * rng.normal(size=(d, d))) / np.sqrt(2)
    q, r = np.linalg.qr(z)
    return q * (np.diag(r) / np.abs(np.diag(r)))


def random_projective_povm(d: int, rng: np.random.Generator) -> Povm:
    """Rank-one projective POVM with d outcomes from a Haar-random basis."""
    u = haar_unitary(d, rng)
    return Povm(tuple(np.outer(u[:, k], u[:, k].conj()) for k in range(d)))


def random_general_povm(d: int, o: int, rng: np.random.Generator) -> Povm:
    """Generic o-outcome POVM: random PSD pieces whitened to sum to I."""
    pieces = []
    for _ in range(o):
        a = rng.normal(size=(d, d)) + 1j * rng.normal(size=(d, d))
        pieces.append(a @ a.conj().T)
    total = sum(pieces)
    w, v = np.linalg.eigh(total)
    inv_sqrt = v @ np.diag(1.0 / np.sqrt(w)) @ v.conj().T
    return Povm(tuple(inv_sqrt @ g @ inv_sqrt for g in pieces))


def random_state(d_a: int, d_b: int, rng: np.random.Generator,
                 mix: float = 0.15) -> DensityMatrix:
    """Random pure state blended with white noise; the blend keeps every
    rank-one outcome probability strictly positive."""
    d = d_a * d_b
    psi = rng.normal(size=d) + 1j * rng.normal(size=d)
    psi /= np.linalg.norm(psi)
    rho = (1.0 - mix) * np.outer(psi, psi.conj()) + mix * np.eye(d) / d
    return DensityMatrix(rho)


def random_strategy(rng: np.random.Generator, m: int | None = None,
                    o: int | None = None, projective: bool = True) -> SingleCopyStrategy:
    m = int(rng.integers(2, 4)) if m is None else m
    o = int(rng.integers(2, 4)) if o is None else o
    if projective:
        d = o
        alice = tuple(random_projective_povm(d, rng) for _ in range(m))
        bob = tuple(random_projective_povm(d, rng) for _ in range(m))
    else:
        d = int(rng.integers(2, 4))
        alice = tuple(random_general_povm(d, o, rng) for _ in range(m))
        bob = tuple(random_general_povm(d, o, rng) for _ in range(m))
    state = random_state(alice[0].dim, bob[0].dim, rng)
    return SingleCopyStrategy(state, alice, bob, m=m, o=o, label="random")


def deterministic_table_probs(m: int, o: int, alice, bob) -> np.ndarray:
    """Explicit table of a local deterministic assignment (test-side oracle)."""
    probs = np.zeros((m, m, o, o))
    for x, y in itertools.product(range(m), range(m)):
        probs[x, y, alice[x], bob[y]] = 1.0
    return probs


@pytest.fixture
def rng():
    return np.random.default_rng(20240817)
