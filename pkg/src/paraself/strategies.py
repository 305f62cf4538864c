"""Reference measurement strategies, parallel composition, adversarial
constructions, and the isotropic noise channel.

A :class:`SingleCopyStrategy` bundles one shared bipartite state with one
POVM per input per party.  ``compose`` turns a list of copies into a joint
:class:`~paraself.bell.CorrelationTable` under either input scheme; the two
``adversary_*`` constructors build the broadcast-shaped tables obtainable
from a *single* shared pair that nevertheless reproduce the honest per-pair
game score.  Adversary tables are constructed in closed form from the
single-copy probabilities (no sampling), so every test against them is exact.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .bell import (
    BellExpression,
    CorrelationTable,
    Scheme,
    bell_operator,
    tilted_chsh_expression,
)
from .errors import (
    InvalidAngles,
    SchemeInputMismatch,
    SeeSawDidNotConverge,
    UnsupportedDimension,
)
from .qcore import (
    SIGMA_MINUS,
    SIGMA_PLUS,
    SIGMA_X,
    SIGMA_Z,
    DensityMatrix,
    Povm,
    born_probability,
    max_eigenvalue,
    maximally_entangled_ket,
    povm_from_observable,
)

# Joint tables grow as o^(2n) m^2; six copies per party is the desk-scale cap.
MAX_COPIES = 6

SEESAW_MAX_ITERATIONS = 10**4
SEESAW_IMPROVEMENT_THRESHOLD = 1e-12
SEESAW_ORACLE_AGREEMENT = 1e-6
SEESAW_RESTARTS = 8


@dataclass(frozen=True)
class SingleCopyStrategy:
    """One shared state plus per-input measurement effect lists.

    Outcome index 0 corresponds to observable eigenvalue +1 wherever a POVM
    is built from a +/-1 observable.
    """

    state: DensityMatrix
    alice: tuple
    bob: tuple
    m: int
    o: int
    label: str = ""

    def __post_init__(self):
        alice = tuple(self.alice)
        bob = tuple(self.bob)
        if len(alice) != self.m or len(bob) != self.m:
            raise SchemeInputMismatch(
                f"expected {self.m} POVMs per party, got {len(alice)}/{len(bob)}"
            )
        for side, povms in (("alice", alice), ("bob", bob)):
            for x, p in enumerate(povms):
                if not isinstance(p, Povm):
                    raise TypeError(f"{side}[{x}] is not a Povm")
                if p.n_outcomes != self.o:
                    raise SchemeInputMismatch(
                        f"{side}[{x}] has {p.n_outcomes} effects, expected {self.o}"
                    )
        d_a = alice[0].dim
        d_b = bob[0].dim
        if any(p.dim != d_a for p in alice) or any(p.dim != d_b for p in bob):
            raise SchemeInputMismatch("effect dimensions differ between inputs")
        if self.state.dim != d_a * d_b:
            raise SchemeInputMismatch(
                f"state dim {self.state.dim} != {d_a} * {d_b}"
            )
        object.__setattr__(self, "alice", alice)
        object.__setattr__(self, "bob", bob)

    @property
    def dims(self) -> tuple:
        return (self.alice[0].dim, self.bob[0].dim)


@dataclass(frozen=True)
class NoiseSpec:
    """Visibility of the white-noise channel applied identically to every
    copy: the state becomes nu * rho + (1 - nu) * I/4."""

    nu: float

    def __post_init__(self):
        if not 0.0 <= self.nu <= 1.0:
            raise ValueError(f"visibility {self.nu} outside [0, 1]")


def chsh_reference() -> SingleCopyStrategy:
    """Maximally entangled pair measured along Z/X (Alice) and the diagonal
    directions (Bob); attains the CHSH quantum maximum 2*sqrt(2)."""
    return SingleCopyStrategy(
        state=maximally_entangled_ket(2).density(),
        alice=(povm_from_observable(SIGMA_Z), povm_from_observable(SIGMA_X)),
        bob=(povm_from_observable(SIGMA_PLUS), povm_from_observable(SIGMA_MINUS)),
        m=2,
        o=2,
        label="chsh",
    )


def fullstats_reference(gamma: float, delta: float) -> SingleCopyStrategy:
    """Two-angle strategy on the maximally entangled pair whose four
    correlators are (cos gamma, -cos delta, sin gamma, sin delta).

    Requires gamma != delta and gamma, delta in (0, pi/4].  Bob's second
    observable is sin(delta) X - cos(delta) Z; the outcome labeling is fixed
    so that the correlator targets above come out with the stated signs.
    """
    if not (0.0 < gamma <= np.pi / 4 and 0.0 < delta <= np.pi / 4):
        raise InvalidAngles(f"angles ({gamma}, {delta}) outside (0, pi/4]")
    if gamma == delta:
        raise InvalidAngles("angles must differ")
    bob0 = np.cos(gamma) * SIGMA_Z + np.sin(gamma) * SIGMA_X
    bob1 = np.sin(delta) * SIGMA_X - np.cos(delta) * SIGMA_Z
    return SingleCopyStrategy(
        state=maximally_entangled_ket(2).density(),
        alice=(povm_from_observable(SIGMA_Z), povm_from_observable(SIGMA_X)),
        bob=(povm_from_observable(bob0), povm_from_observable(bob1)),
        m=2,
        o=2,
        label=f"fullstats({gamma:g},{delta:g})",
    )


def local_deterministic(alice_outputs: Sequence[int], bob_outputs: Sequence[int],
                        o: int, label: str = "deterministic") -> SingleCopyStrategy:
    """Classical strategy answering a(x), b(y) deterministically, realized on
    trivial one-dimensional local systems."""
    m = len(alice_outputs)
    if len(bob_outputs) != m:
        raise SchemeInputMismatch("assignments must have equal length")
    one = np.ones((1, 1))
    zero = np.zeros((1, 1))

    def povm_for(answer: int) -> Povm:
        return Povm(tuple(one if k == answer else zero for k in range(o)))

    return SingleCopyStrategy(
        state=DensityMatrix(one),
        alice=tuple(povm_for(int(a)) for a in alice_outputs),
        bob=tuple(povm_for(int(b)) for b in bob_outputs),
        m=m,
        o=o,
        label=label,
    )


def apply_isotropic_noise(s: SingleCopyStrategy, noise) -> SingleCopyStrategy:
    """Replace the shared state by nu * rho + (1 - nu) * I/4; measurements are
    unchanged.  Only two-qubit (dimension-4) states are supported."""
    spec = noise if isinstance(noise, NoiseSpec) else NoiseSpec(float(noise))
    if s.state.dim != 4:
        raise UnsupportedDimension(
            f"isotropic noise implemented for two-qubit states, got dim {s.state.dim}"
        )
    mixed = spec.nu * s.state.matrix + (1.0 - spec.nu) * np.eye(4) / 4.0
    return SingleCopyStrategy(
        state=DensityMatrix(mixed),
        alice=s.alice,
        bob=s.bob,
        m=s.m,
        o=s.o,
        label=f"{s.label}+noise({spec.nu:g})",
    )


def single_copy_table(s: SingleCopyStrategy) -> CorrelationTable:
    """Born-rule table p(a, b | x, y) of one strategy."""
    probs = np.zeros((s.m, s.m, s.o, s.o))
    for x, y, a, b in itertools.product(range(s.m), range(s.m), range(s.o), range(s.o)):
        probs[x, y, a, b] = born_probability(
            s.state, s.alice[x].effects[a], s.bob[y].effects[b]
        )
    # Clip losses from trace round-off; values are within 1e-15 of [0, 1].
    probs = np.clip(probs, 0.0, 1.0)
    return CorrelationTable(Scheme.BROADCAST, (s.m,), (s.o,), probs)


def compose(strategies: Sequence[SingleCopyStrategy], scheme: Scheme) -> CorrelationTable:
    """Joint table of independent copies.

    Broadcast: every copy receives the shared inputs (x, y), so all copies
    must have the same number of inputs; the joint probability is the product
    of single-copy probabilities at those inputs.  Per-copy: inputs are joint
    mixed-radix indices as well, and copy i sees only (x_i, y_i).  Copy 1 is
    least significant in every joint index.
    """
    strategies = list(strategies)
    if not strategies:
        raise SchemeInputMismatch("need at least one strategy")
    if len(strategies) > MAX_COPIES:
        raise SchemeInputMismatch(
            f"{len(strategies)} copies exceed the cap of {MAX_COPIES}"
        )
    tables = [single_copy_table(s).probs for s in strategies]
    output_arities = tuple(s.o for s in strategies)
    if scheme is Scheme.BROADCAST:
        m = strategies[0].m
        if any(s.m != m for s in strategies):
            raise SchemeInputMismatch("broadcast composition requires equal input counts")
        probs = tables[0]
        for t in tables[1:]:
            a_new, b_new = t.shape[2], t.shape[3]
            a_old, b_old = probs.shape[2], probs.shape[3]
            probs = np.einsum("xyab,xycd->xyacbd", t, probs).reshape(
                m, m, a_new * a_old, b_new * b_old
            )
        return CorrelationTable(scheme, (m,) * len(strategies), output_arities, probs)
    if scheme is Scheme.PER_COPY:
        probs = tables[0]
        for t in tables[1:]:
            # np.kron makes the newer copy most significant on every axis.
            probs = np.kron(t, probs)
        input_arities = tuple(s.m for s in strategies)
        return CorrelationTable(scheme, input_arities, output_arities, probs)
    raise SchemeInputMismatch(f"unknown scheme {scheme!r}")


def adversary_copy(n: int) -> CorrelationTable:
    """Broadcast-shaped table from a single shared pair whose one outcome is
    copied into all n output slots.

    Every per-pair marginal reproduces the honest game score, but outputs are
    perfectly correlated across copies: conditioning on the first pair makes
    every later pair deterministic.
    """
    if n < 2:
        raise SchemeInputMismatch("copying adversary needs n >= 2")
    if n > MAX_COPIES:
        raise SchemeInputMismatch(f"{n} copies exceed the cap of {MAX_COPIES}")
    p1 = single_copy_table(chsh_reference()).probs
    size = 2 ** n
    probs = np.zeros((2, 2, size, size))
    all_ones = size - 1
    for a, b in itertools.product(range(2), repeat=2):
        probs[:, :, a * all_ones, b * all_ones] = p1[:, :, a, b]
    return CorrelationTable(Scheme.BROADCAST, (2,) * n, (2,) * n, probs)


def adversary_shared_randomness(n: int) -> CorrelationTable:
    """Copying adversary with outputs XORed against i.i.d. uniform shared
    bits, which makes every local marginal uniform (1/2^n) while preserving
    each pair's parity a_i XOR b_i.

    Closed form: p(a, b | x, y) = P(parity s | x, y) / 2^n whenever all pairs
    share the parity s, and 0 otherwise.
    """
    if n < 2:
        raise SchemeInputMismatch("shared-randomness adversary needs n >= 2")
    if n > MAX_COPIES:
        raise SchemeInputMismatch(f"{n} copies exceed the cap of {MAX_COPIES}")
    p1 = single_copy_table(chsh_reference()).probs
    parity_prob = np.zeros((2, 2, 2))
    for a, b in itertools.product(range(2), repeat=2):
        parity_prob[:, :, a ^ b] += p1[:, :, a, b]
    size = 2 ** n
    probs = np.zeros((2, 2, size, size))
    all_ones = size - 1
    for joint_a in range(size):
        for s in range(2):
            joint_b = joint_a ^ (s * all_ones)
            probs[:, :, joint_a, joint_b] = parity_prob[:, :, s] / size
    return CorrelationTable(Scheme.BROADCAST, (2,) * n, (2,) * n, probs)


# ---------------------------------------------------------------------------
# See-saw optimization for two-qubit strategies with binary outcomes.

def _partial_trace_alice(rho4: np.ndarray, op_b: np.ndarray) -> np.ndarray:
    # tr_B[(I (x) T) rho]: rho4[i, j, k, l] = rho[(i, j), (k, l)]
    return np.einsum("ijkl,lj->ik", rho4, op_b)


def _partial_trace_bob(rho4: np.ndarray, op_a: np.ndarray) -> np.ndarray:
    return np.einsum("ijkl,ki->jl", rho4, op_a)


def _best_binary_povm(score_gap: np.ndarray) -> Povm:
    """POVM maximizing tr[M_0 D] over binary POVMs: projector onto the
    nonnegative eigenspace of D."""
    eigenvalues, eigenvectors = np.linalg.eigh((score_gap + score_gap.conj().T) / 2)
    dim = score_gap.shape[0]
    p0 = np.zeros((dim, dim), dtype=complex)
    for k in range(dim):
        if eigenvalues[k] > 0:
            v = eigenvectors[:, k]
            p0 += np.outer(v, v.conj())
    return Povm((p0, np.eye(dim) - p0))


def _seesaw_binary_qubits(expr: BellExpression, alice, bob):
    """Alternate state / Alice / Bob optimization until the value improvement
    drops below the threshold.  Returns (state ket, alice POVMs, bob POVMs,
    achieved value)."""
    if expr.o != 2:
        raise SeeSawDidNotConverge("see-saw implemented for binary outcomes")
    previous = -math.inf
    for _ in range(SEESAW_MAX_ITERATIONS):
        op = bell_operator(expr, alice, bob)
        eigenvalues, eigenvectors = np.linalg.eigh(op)
        psi = eigenvectors[:, -1]
        value = float(eigenvalues[-1])
        # Converged: the state is the top eigenvector of the operator built
        # from exactly these measurements.
        if value - previous < SEESAW_IMPROVEMENT_THRESHOLD:
            return psi, alice, bob, value
        previous = value
        rho4 = np.outer(psi, psi.conj()).reshape(2, 2, 2, 2)
        new_alice = []
        for x in range(expr.m):
            gaps = []
            for a in range(2):
                t = sum(
                    expr.coeffs[x, y, a, b] * bob[y].effects[b]
                    for y in range(expr.m) for b in range(2)
                )
                gaps.append(_partial_trace_alice(rho4, t))
            new_alice.append(_best_binary_povm(gaps[0] - gaps[1]))
        alice = tuple(new_alice)
        new_bob = []
        for y in range(expr.m):
            gaps = []
            for b in range(2):
                t = sum(
                    expr.coeffs[x, y, a, b] * alice[x].effects[a]
                    for x in range(expr.m) for a in range(2)
                )
                gaps.append(_partial_trace_bob(rho4, t))
            new_bob.append(_best_binary_povm(gaps[0] - gaps[1]))
        bob = tuple(new_bob)
    raise SeeSawDidNotConverge(
        f"no convergence after {SEESAW_MAX_ITERATIONS} iterations"
    )


def _random_qubit_observables(m: int, rng: np.random.Generator):
    angles = rng.uniform(0.0, 2 * np.pi, size=m)
    return tuple(
        povm_from_observable(np.cos(t) * SIGMA_Z + np.sin(t) * SIGMA_X) for t in angles
    )


def tilted_chsh_reference(alpha: float, coefficients: BellExpression,
                          seed: int = 0) -> SingleCopyStrategy:
    """Two-qubit strategy maximizing the supplied tilted-family expression.

    The optimum is found by see-saw over states and binary qubit
    measurements and certified against the eigenvalue oracle of the final
    operator: the value reached by the strategy must agree with the largest
    eigenvalue to within 1e-6, otherwise :class:`SeeSawDidNotConverge` is
    raised.  The coefficient tensor is supplied by the caller; this function
    does not fix the family.
    """
    if not 0.0 <= alpha < 2.0:
        raise ValueError(f"tilt parameter {alpha} outside [0, 2)")
    if coefficients.o != 2:
        raise SeeSawDidNotConverge("tilted references are binary-outcome")
    rng = np.random.default_rng(seed)
    if coefficients.m == 2:
        first = (
            (povm_from_observable(SIGMA_Z), povm_from_observable(SIGMA_X)),
            (povm_from_observable(SIGMA_PLUS), povm_from_observable(SIGMA_MINUS)),
        )
    else:
        # Evenly spaced directions in the Z-X plane.
        spread = tuple(
            povm_from_observable(
                np.cos(k * np.pi / coefficients.m) * SIGMA_Z
                + np.sin(k * np.pi / coefficients.m) * SIGMA_X
            )
            for k in range(coefficients.m)
        )
        first = (spread, spread)
    starts = [first]
    # Seeded random restarts: the alternating optimization is a lower-bound
    # method and can stall on suboptimal fixed points (e.g. deterministic
    # ones for strong tilts), so every start is evaluated and the best
    # certified strategy wins.
    for _ in range(SEESAW_RESTARTS):
        starts.append((
            _random_qubit_observables(coefficients.m, rng),
            _random_qubit_observables(coefficients.m, rng),
        ))
    best = None
    best_value = -math.inf
    last_error = None
    for alice0, bob0 in starts:
        try:
            psi, alice, bob, value = _seesaw_binary_qubits(coefficients, alice0, bob0)
        except SeeSawDidNotConverge as exc:
            last_error = exc
            continue
        strategy = SingleCopyStrategy(
            state=DensityMatrix(np.outer(psi, psi.conj())),
            alice=alice,
            bob=bob,
            m=coefficients.m,
            o=2,
            label=f"tilted-chsh({alpha:g})",
        )
        oracle = max_eigenvalue(bell_operator(coefficients, alice, bob))
        achieved = math.fsum(
            (coefficients.coeffs * single_copy_table(strategy).probs).ravel()
        )
        if abs(achieved - oracle) > SEESAW_ORACLE_AGREEMENT:
            last_error = SeeSawDidNotConverge(
                f"achieved value {achieved!r} disagrees with eigenvalue oracle {oracle!r}"
            )
            continue
        if achieved > best_value:
            best = strategy
            best_value = achieved
    if best is None:
        raise last_error
    return best


# ---------------------------------------------------------------------------
# Named presets, addressable as "name" or "name(arg, ...)".

def parse_strategy_spec(text: str) -> tuple:
    """Split a preset spec like ``tilted-chsh(0.5)`` into (name, args)."""
    text = text.strip()
    if "(" in text:
        if not text.endswith(")"):
            raise KeyError(f"unbalanced parentheses in {text!r}")
        name, _, inner = text[:-1].partition("(")
        args = tuple(float(v) for v in inner.split(",")) if inner.strip() else ()
        return name.strip(), args
    return text, ()


ADVERSARY_PRESETS = ("adversary-copy", "adversary-shared-randomness")


def build_preset_strategy(name: str, args: Sequence[float],
                          seed: int = 0) -> SingleCopyStrategy:
    """Construct a single-copy strategy preset by name.  Adversary presets
    are whole tables, not single-copy strategies; see
    :func:`build_preset_table`."""
    if name == "chsh":
        if args:
            raise KeyError("chsh takes no parameters")
        return chsh_reference()
    if name == "tilted-chsh":
        if len(args) != 1:
            raise KeyError("tilted-chsh takes exactly one parameter (alpha)")
        alpha = float(args[0])
        return tilted_chsh_reference(alpha, tilted_chsh_expression(alpha), seed=seed)
    if name == "fullstats":
        if len(args) != 2:
            raise KeyError("fullstats takes exactly two parameters (gamma, delta)")
        return fullstats_reference(float(args[0]), float(args[1]))
    raise KeyError(f"unknown strategy preset {name!r}")


def build_preset_table(name: str, n: int) -> CorrelationTable:
    """Construct an adversary table preset by name."""
    if name == "adversary-copy":
        return adversary_copy(n)
    if name == "adversary-shared-randomness":
        return adversary_shared_randomness(n)
    raise KeyError(f"unknown adversary preset {name!r}")
