"""Protocol-level certification verdicts and noise sweeps.

A certifier takes an observed correlation table and checks, copy by copy,
whether the relevant conditional or averaged expression values sit at their
targets.  Certification here is exact-statistics with a numerical tolerance
knob: ``tol`` is numerical slack, not noise robustness, and defaults to 1e-8.

Reports never short-circuit: every copy is evaluated so diagnostics are
complete.  A copy whose conditional values are undefined because some prefix
has (numerically) zero probability is reported with the average taken over
the well-defined prefixes (keeping the full prefix count as divisor) plus a
diagnostic naming the offending prefixes; the verdict is then

* ``fail`` if any copy with fully defined values deviates beyond ``tol``
  (definitive rejection wins over a precondition complaint),
* ``precondition-violated`` if no copy cleanly fails but some copy has
  undefined prefixes (or another protocol precondition is broken),
* ``pass`` otherwise.
"""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .bell import (
    BellExpression,
    CorrelationTable,
    Scheme,
    averaged_j_percopy,
    conditional_slice,
    copy_marginal,
    correlator,
    j_value,
    generalized_j_value,
    POSITIVITY_THRESHOLD,
)
from .errors import SchemeInputMismatch, ShapeMismatch, ZeroPrefixProbability
from .strategies import MAX_COPIES, SingleCopyStrategy, apply_isotropic_noise, compose

DEFAULT_TOL = 1e-8

VERDICT_PASS = "pass"
VERDICT_FAIL = "fail"
VERDICT_PRECONDITION = "precondition-violated"


@dataclass(frozen=True)
class CopyCheck:
    """Per-copy certification record: the computed value (or check
    statistic), its target, and the absolute margin."""

    index: int
    value: float
    target: float
    margin: float
    precondition_ok: bool = True


@dataclass(frozen=True)
class CertificationReport:
    verdict: str
    per_copy: tuple
    diagnostics: tuple

    def to_json_dict(self) -> dict:
        return {
            "verdict": self.verdict,
            "copies": [
                {"i": c.index, "value": c.value, "target": c.target, "margin": c.margin}
                for c in self.per_copy
            ],
            "diagnostics": list(self.diagnostics),
        }


def _finish_report(checks: list, diagnostics: list, tol: float) -> CertificationReport:
    clean_failure = any(c.precondition_ok and c.margin > tol for c in checks)
    precondition_issue = any(not c.precondition_ok for c in checks)
    if clean_failure:
        verdict = VERDICT_FAIL
    elif precondition_issue:
        verdict = VERDICT_PRECONDITION
    else:
        verdict = VERDICT_PASS
    return CertificationReport(verdict, tuple(checks), tuple(diagnostics))


def _certify_broadcast(table: CorrelationTable, exprs: Sequence[BellExpression],
                       betas: Sequence[float], tol: float) -> CertificationReport:
    if table.scheme is not Scheme.BROADCAST:
        raise SchemeInputMismatch("conditional certification requires a broadcast table")
    n = table.n_copies
    exprs = tuple(exprs)
    betas = tuple(float(b) for b in betas)
    if len(exprs) != n or len(betas) != n:
        raise ShapeMismatch(f"need {n} expressions and targets, got {len(exprs)}/{len(betas)}")
    checks: list[CopyCheck] = []
    diagnostics: list[str] = []
    for i in range(1, n + 1):
        target = betas[i - 1]
        try:
            value = generalized_j_value(table, exprs, i)
            ok = True
        except ZeroPrefixProbability as first:
            value = generalized_j_value(table, exprs, i, skip_zero_prefixes=True)
            ok = False
            diagnostics.append(
                f"copy {i}: conditional values undefined on zero-probability "
                f"prefixes (first offender: prefix (a={first.prefix_a}, "
                f"b={first.prefix_b}) at inputs (x={first.x}, y={first.y})); "
                f"reported value averages the well-defined prefixes"
            )
        margin = abs(value - target)
        if ok and margin > tol:
            diagnostics.append(
                f"copy {i}: value {value!r} deviates from target {target!r} "
                f"by {margin:.3e} (tol {tol:.1e})"
            )
        checks.append(CopyCheck(i, value, target, margin, precondition_ok=ok))
    return _finish_report(checks, diagnostics, tol)


def certify_theorem1(table: CorrelationTable, expr: BellExpression, beta: float,
                     tol: float = DEFAULT_TOL) -> CertificationReport:
    """Broadcast certification with one expression and one target: every
    copy's prefix-averaged conditional value must equal ``beta`` and every
    prefix must have strictly positive probability."""
    if len(set(table.output_arities)) != 1:
        raise ShapeMismatch("equal per-copy output arities required")
    n = table.n_copies
    return _certify_broadcast(table, (expr,) * n, (beta,) * n, tol)


def certify_theorem3(table: CorrelationTable, exprs: Sequence[BellExpression],
                     betas: Sequence[float], tol: float = DEFAULT_TOL) -> CertificationReport:
    """Broadcast certification with copy-specific expressions and targets;
    all expressions must share the table's input arity, output arities may
    differ per copy."""
    return _certify_broadcast(table, exprs, betas, tol)


def certify_theorem2(table: CorrelationTable, reference: CorrelationTable,
                     tol: float = DEFAULT_TOL) -> CertificationReport:
    """Full-statistics certification: the copy-1 marginal and every
    conditional distribution of every later copy must equal the single-copy
    reference entrywise.

    The reference must be single-copy with strictly positive entries.  The
    per-copy check statistic is the largest entrywise deviation (target 0).
    For binary-outcome scenarios, the four reference correlators and their
    observed copy-1 counterparts are reported as named diagnostics.
    """
    if table.scheme is not Scheme.BROADCAST:
        raise SchemeInputMismatch("full-statistics certification requires a broadcast table")
    if reference.n_copies != 1:
        raise ShapeMismatch("reference must be a single-copy table")
    m = reference.input_arities[0]
    o = reference.output_arities[0]
    if table.input_arities[0] != m or any(v != o for v in table.output_arities):
        raise ShapeMismatch("table copies do not match the reference arities")
    checks: list[CopyCheck] = []
    diagnostics: list[str] = []
    if float(reference.probs.min()) <= POSITIVITY_THRESHOLD:
        x, y, a, b = (int(v) for v in np.argwhere(
            reference.probs <= POSITIVITY_THRESHOLD)[0])
        diagnostics.append(
            f"reference entry p({a},{b}|{x},{y}) is not strictly positive; "
            f"conditional comparisons are ill-posed"
        )
        checks.append(CopyCheck(1, 0.0, 0.0, 0.0, precondition_ok=False))
        return _finish_report(checks, diagnostics, tol)

    marginal = copy_marginal(table, 1)
    dev1 = float(np.max(np.abs(marginal.probs - reference.probs)))
    checks.append(CopyCheck(1, dev1, 0.0, dev1))
    if o == 2:
        for x in range(m):
            for y in range(m):
                diagnostics.append(
                    f"correlator({x},{y}): copy-1 {correlator(marginal, x, y)!r}, "
                    f"reference {correlator(reference, x, y)!r}"
                )

    parity_signs = np.array([[1.0, -1.0], [-1.0, 1.0]])
    low = 1
    for i in range(2, table.n_copies + 1):
        low *= o
        worst = 0.0
        worst_prefix = None
        unreachable = []
        corr_dev = np.zeros((m, m))
        for prefix_a in range(low):
            for prefix_b in range(low):
                sl = conditional_slice(table, i, prefix_a, prefix_b)
                if np.any(sl.prefix_prob <= POSITIVITY_THRESHOLD):
                    unreachable.append((prefix_a, prefix_b))
                    continue
                dev = float(np.max(np.abs(sl.probs - reference.probs)))
                if dev > worst:
                    worst = dev
                    worst_prefix = (prefix_a, prefix_b)
                if o == 2:
                    cond_corr = (sl.probs * parity_signs).sum(axis=(2, 3))
                    ref_corr = (reference.probs * parity_signs).sum(axis=(2, 3))
                    corr_dev = np.maximum(corr_dev, np.abs(cond_corr - ref_corr))
        if o == 2 and not unreachable:
            for x in range(m):
                for y in range(m):
                    diagnostics.append(
                        f"conditional correlator({x},{y}) copy {i}: max deviation "
                        f"{corr_dev[x, y]:.3e} over all prefixes"
                    )
        if unreachable:
            # A strictly positive reference makes every prefix reachable in
            # the honest experiment, so unreachable prefixes are a failure in
            # their own right, not merely a precondition gap.
            worst = max(worst, 1.0)
            diagnostics.append(
                f"copy {i}: {len(unreachable)} prefixes unreachable "
                f"(first: (a={unreachable[0][0]}, b={unreachable[0][1]})) although "
                f"the reference is strictly positive"
            )
        elif worst > tol and worst_prefix is not None:
            diagnostics.append(
                f"copy {i}: max conditional deviation {worst:.6e} at prefix "
                f"(a={worst_prefix[0]}, b={worst_prefix[1]})"
            )
        checks.append(CopyCheck(i, worst, 0.0, worst))
    if checks[0].margin > tol:
        diagnostics.append(
            f"copy 1: max marginal deviation {checks[0].margin:.6e}"
        )
    return _finish_report(checks, diagnostics, tol)


def certify_theorem4(table: CorrelationTable, exprs: Sequence[BellExpression],
                     betas: Sequence[float], tol: float = DEFAULT_TOL) -> CertificationReport:
    """Per-copy-input certification: the input-averaged expression value of
    every copy must equal its target."""
    if table.scheme is not Scheme.PER_COPY:
        raise SchemeInputMismatch("averaged certification requires a per-copy table")
    n = table.n_copies
    exprs = tuple(exprs)
    betas = tuple(float(b) for b in betas)
    if len(exprs) != n or len(betas) != n:
        raise ShapeMismatch(f"need {n} expressions and targets, got {len(exprs)}/{len(betas)}")
    checks: list[CopyCheck] = []
    diagnostics: list[str] = []
    for i in range(1, n + 1):
        value = averaged_j_percopy(table, exprs, i)
        target = betas[i - 1]
        margin = abs(value - target)
        if margin > tol:
            diagnostics.append(
                f"copy {i}: averaged value {value!r} deviates from target "
                f"{target!r} by {margin:.3e} (tol {tol:.1e})"
            )
        checks.append(CopyCheck(i, value, target, margin))
    return _finish_report(checks, diagnostics, tol)


@dataclass(frozen=True)
class ProtocolSpec:
    """Bundle of everything a certification run needs; ``run`` dispatches on
    the protocol kind ("theorem1" .. "theorem4")."""

    kind: str
    expressions: tuple
    targets: tuple
    reference_table: CorrelationTable | None = None
    tol: float = DEFAULT_TOL

    def run(self, table: CorrelationTable) -> CertificationReport:
        if self.kind == "theorem1":
            return certify_theorem1(table, self.expressions[0], self.targets[0], self.tol)
        if self.kind == "theorem2":
            if self.reference_table is None:
                raise ShapeMismatch("theorem2 certification needs a reference table")
            return certify_theorem2(table, self.reference_table, self.tol)
        if self.kind == "theorem3":
            return certify_theorem3(table, self.expressions, self.targets, self.tol)
        if self.kind == "theorem4":
            return certify_theorem4(table, self.expressions, self.targets, self.tol)
        raise ShapeMismatch(f"unknown protocol kind {self.kind!r}")


def sweep_noise(strategy: SingleCopyStrategy, n: int, expr: BellExpression,
                nus: Sequence[float], workers: int | None = None) -> list:
    """Compose ``n`` identically noisy copies for each visibility and report
    all per-copy averaged conditional values.

    Rows are returned in ascending visibility.  Work items are independent;
    ``workers`` > 1 evaluates them in a thread pool.
    """
    if not 1 <= n <= MAX_COPIES:
        raise SchemeInputMismatch(f"copies must be in 1..{MAX_COPIES}")
    nus = [float(v) for v in nus]
    if any(not 0.0 <= v <= 1.0 for v in nus):
        raise ValueError("visibilities must lie in [0, 1]")

    def row(nu: float) -> dict:
        noisy = apply_isotropic_noise(strategy, nu)
        table = compose([noisy] * n, Scheme.BROADCAST)
        values = [j_value(table, expr, i) for i in range(1, n + 1)]
        return {"nu": nu, "j_values": values}

    ordered = sorted(nus)
    if workers is not None and workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            rows = list(pool.map(row, ordered))
    else:
        rows = [row(nu) for nu in ordered]
    return rows
