"""Optimal recursive state estimation from imperfect detector records.

Given per-step Kraus families {M_q} and detection-error matrices eta, the
least-squares-optimal estimate of the state conditioned on the detector
record p_1..p_k obeys the recursion

    rho' = sum_q eta[p, q] M_q rho M_q^dag / tr(same),

and the probability of seeing outcome p next is exactly that denominator.
Both facts follow from Bayes' law over the unobserved ideal jumps; the
brute-force expansion lives in the oracle module and is used to certify
this recursion.

The same recursion run from an arbitrary initial state is a consistent
(if suboptimal) estimator; when its denominator vanishes the update is
defined through a shrinking-epsilon limit (see ``filter_update``).
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass
from typing import Callable, List, Optional, Sequence, Tuple

import numpy as np

from .density import DEFAULT_TOLERANCES, DensityOperator, Tolerances
from .errormodel import ErrorModel
from .errors import (
    DimensionMismatchError,
    IndexOutOfRangeError,
    RegularizationWarning,
    ZeroEvidenceError,
)
from .kraus import (
    PROB_FLOOR,
    KrausFamily,
    _clamp_and_renormalize,
    raw_jump_probabilities,
    weighted_image,
)

__all__ = [
    "MeasurementStep",
    "FilterState",
    "coarse_kraus",
    "filter_update",
    "outcome_probabilities",
    "run_filter",
    "EPS_LADDER",
    "EPS_STABILIZATION_TOL",
    "regularized_image",
]

# Shrinking-epsilon ladder for degenerate updates, and the max-norm threshold
# at which two successive rungs count as stabilized.
EPS_LADDER = (1e-8, 1e-10, 1e-12)
EPS_STABILIZATION_TOL = 1e-6


@dataclass(frozen=True)
class MeasurementStep:
    """One time step: a Kraus family paired with its detection-error matrix."""

    family: KrausFamily
    errors: ErrorModel
    label: Optional[str] = None

    def __post_init__(self):
        if self.family.count != self.errors.m_ideal:
            raise DimensionMismatchError(
                f"family has {self.family.count} jumps but error model expects "
                f"m_ideal={self.errors.m_ideal}"
            )

    @property
    def m_real(self) -> int:
        return self.errors.m_real

    @property
    def m_ideal(self) -> int:
        return self.family.count

    @property
    def dim(self) -> int:
        return self.family.dim


@dataclass(frozen=True)
class FilterState:
    """Filter estimate after step_index - 1 updates (step_index starts at 1).

    ``log`` (optional) accumulates (outcome, predicted probability) pairs;
    ``regularized`` marks whether the update that produced this state went
    through the shrinking-epsilon branch.
    """

    estimate: DensityOperator
    step_index: int = 1
    log: Optional[Tuple[Tuple[int, float], ...]] = None
    regularized: bool = False


def coarse_kraus(step: MeasurementStep, p: int) -> List[np.ndarray]:
    """Coarse-grained operators sqrt(eta[p, q]) * M_q for every ideal q.

    Grouping ideal jumps by the detector outcome p partitions the full set
    {sqrt(eta[p, q]) M_q : p, q}; the union over p reproduces
    sum_q M_q^dag M_q with multiplicity.
    """
    if not 0 <= p < step.m_real:
        raise IndexOutOfRangeError(
            f"real outcome {p} out of range for m_real={step.m_real}"
        )
    weights = np.sqrt(step.errors.eta[p])
    return [w * m for w, m in zip(weights, step.family.operators)]


def regularized_image(
    rho: np.ndarray,
    image: Callable[[np.ndarray], np.ndarray],
    *,
    eps_ladder: Sequence[float] = EPS_LADDER,
    stabilization_tol: float = EPS_STABILIZATION_TOL,
) -> Tuple[np.ndarray, bool]:
    """Normalized image of a CP map at a state whose image trace vanishes.

    Evaluates image((rho + eps I)/tr(rho + eps I)), normalized, along the
    shrinking eps ladder and accepts the smaller-eps member of the first
    pair that agrees to ``stabilization_tol`` in max-norm. Returns the
    matrix and whether the ladder stabilized; emits RegularizationWarning
    if it did not. Such a limit point always exists (states live in a
    compact set); any stabilized limit is acceptable.
    """
    d = rho.shape[0]
    eye = np.eye(d, dtype=np.complex128)
    prev = None
    stabilized = False
    for eps in eps_ladder:
        rho_eps = (rho + eps * eye) / (np.trace(rho).real + eps * d)
        out = image(rho_eps)
        tr = np.trace(out).real
        if tr <= 0.0:
            raise ZeroEvidenceError(
                "map image has nonpositive trace even at a positive definite "
                "regularization; the outcome is impossible from every state"
            )
        out = out / tr
        if prev is not None and float(np.abs(out - prev).max()) < stabilization_tol:
            stabilized = True
            prev = out
            break
        prev = out
    if not stabilized:
        warnings.warn(
            "shrinking-epsilon regularization did not stabilize across "
            f"{tuple(eps_ladder)}; using the smallest-epsilon value",
            RegularizationWarning,
            stacklevel=2,
        )
    return prev, stabilized


def filter_update(
    state: FilterState,
    step: MeasurementStep,
    p: int,
    tolerances: Tolerances = DEFAULT_TOLERANCES,
) -> FilterState:
    """Advance the estimate by one detector outcome p.

    The numerator sum_q eta[p, q] M_q rho M_q^dag is re-symmetrized after
    assembly to bound Hermiticity drift over long runs. When the denominator
    falls at or below the probability floor (possible only if the current
    estimate is rank-deficient), the update is evaluated at positive
    definite regularizations (rho + eps I)/tr and the stabilized limit is
    taken; the returned state is flagged ``regularized``.

    If the outcome is impossible from every state (all eta[p, q] M_q
    vanish), raises ZeroEvidenceError.
    """
    family = step.family
    if family.dim != state.estimate.dim:
        raise DimensionMismatchError(
            f"step dimension {family.dim} != estimate dimension {state.estimate.dim}"
        )
    if not 0 <= p < step.m_real:
        raise IndexOutOfRangeError(
            f"real outcome {p} out of range for m_real={step.m_real}"
        )
    eta_row = step.errors.eta[p]
    rho = state.estimate.matrix

    numerator = weighted_image(family, eta_row, rho)
    denominator = float(numerator.trace().real)
    regularized = False
    if denominator > PROB_FLOOR:
        new_matrix = numerator / denominator
    else:
        # Structurally impossible outcome: every coarse operator is zero.
        strength = float(
            (eta_row * (np.abs(family.operators) ** 2).sum(axis=(1, 2))).sum()
        )
        if strength <= PROB_FLOOR:
            raise ZeroEvidenceError(
                f"outcome {p} has zero probability from every state "
                "(all coarse operators vanish)"
            )
        new_matrix, _ = regularized_image(
            rho, lambda x: weighted_image(family, eta_row, x)
        )
        regularized = True

    new_matrix = (new_matrix + new_matrix.conj().T) / 2.0
    log = state.log
    if log is not None:
        log = log + ((p, denominator),)
    return FilterState(
        estimate=DensityOperator(new_matrix, tolerances),
        step_index=state.step_index + 1,
        log=log,
        regularized=regularized,
    )


def outcome_probabilities(state: FilterState, step: MeasurementStep) -> np.ndarray:
    """Predicted distribution of the next detector outcome.

    Component p is tr(sum_q eta[p, q] M_q rho M_q^dag) = (eta @ jump_probs)_p,
    clamped and renormalized exactly as jump probabilities are. Because eta
    is column-stochastic the vector sums to 1 within the family's
    completeness tolerance before renormalization.
    """
    if step.dim != state.estimate.dim:
        raise DimensionMismatchError(
            f"step dimension {step.dim} != estimate dimension {state.estimate.dim}"
        )
    raw = step.errors.eta @ raw_jump_probabilities(step.family, state.estimate)
    return _clamp_and_renormalize(raw, step.family.completeness_tolerance)


def run_filter(
    initial: DensityOperator,
    steps: Sequence[MeasurementStep],
    outcomes: Sequence[int],
    *,
    log_probabilities: bool = False,
    tolerances: Tolerances = DEFAULT_TOLERANCES,
) -> List[FilterState]:
    """Run the recursion over a recorded outcome sequence.

    Returns the estimates for steps 1..k+1; index 0 is the (unmodified)
    initial state, index j the estimate after consuming outcomes[:j].
    """
    if len(steps) != len(outcomes):
        raise DimensionMismatchError(
            f"{len(steps)} steps but {len(outcomes)} outcomes"
        )
    state = FilterState(
        estimate=initial,
        step_index=1,
        log=() if log_probabilities else None,
    )
    states = [state]
    for step, p in zip(steps, outcomes):
        state = filter_update(state, step, int(p), tolerances)
        states.append(state)
    return states
