"""Kraus operator families: completeness checking, jumps, and the channel map.

A family {M_q} with sum_q M_q^dag M_q = I describes one measurement step.
Detecting jump q collapses rho to M_q rho M_q^dag / tr(...), with
probability tr(M_q rho M_q^dag). Families are stored stacked (m, d, d) so
the per-step linear algebra is a handful of batched numpy calls.

Approximately complete families (deficit up to a declared tolerance) are
accepted; probability vectors are then renormalized. This accommodates
physically truncated models whose completeness holds only to second order
in a small decoherence parameter.
"""

from __future__ import annotations

from typing import Optional, Sequence

import numpy as np

from .density import DEFAULT_TOLERANCES, DensityOperator, Tolerances
from .errors import (
    CompletenessViolationError,
    DimensionMismatchError,
    IndexOutOfRangeError,
    ProbabilityDeficitError,
    ValidationError,
    ZeroProbabilityJumpError,
)

__all__ = [
    "PROB_FLOOR",
    "KrausFamily",
    "jump_probabilities",
    "apply_jump",
    "kraus_map",
]

# Below this, a jump probability is treated as zero: dividing by it would
# amplify rounding noise past any useful precision.
PROB_FLOOR = 1e-12


class KrausFamily:
    """Ordered set of same-dimension Kraus operators with completeness check.

    Labels are human-readable metadata only; all math indexes by position.
    """

    __slots__ = (
        "operators",
        "labels",
        "completeness_tolerance",
        "_flat",
        "_adjoints_flat",
    )

    def __init__(
        self,
        operators: Sequence,
        *,
        completeness_tolerance: float = 1e-9,
        labels: Optional[Sequence[str]] = None,
    ):
        ops = np.asarray(operators, dtype=np.complex128)
        if ops.ndim != 3 or ops.shape[1] != ops.shape[2]:
            raise DimensionMismatchError(
                f"expected a stack of square matrices, got shape {ops.shape}"
            )
        if ops.shape[0] < 1:
            raise ValidationError("a Kraus family needs at least one operator")
        if not np.all(np.isfinite(ops)):
            raise ValidationError("Kraus operators contain NaN or Inf entries")
        if labels is not None and len(labels) != ops.shape[0]:
            raise ValidationError(
                f"{len(labels)} labels for {ops.shape[0]} operators"
            )

        gram = np.einsum("qki,qkj->ij", ops.conj(), ops)
        deviation = float(np.abs(gram - np.eye(ops.shape[1])).max())
        if deviation > completeness_tolerance:
            raise CompletenessViolationError(deviation, completeness_tolerance)

        m, d, _ = ops.shape
        ops = np.ascontiguousarray(ops)
        ops.flags.writeable = False
        # Contiguous (m*d, d) layouts so per-step algebra is two gemms.
        flat = ops.reshape(m * d, d)
        adj_flat = np.ascontiguousarray(
            ops.conj().transpose(0, 2, 1)
        ).reshape(m * d, d)
        adj_flat.flags.writeable = False
        self.operators = ops
        self._flat = flat
        self._adjoints_flat = adj_flat
        self.labels = tuple(labels) if labels is not None else None
        self.completeness_tolerance = float(completeness_tolerance)

    @property
    def count(self) -> int:
        return self.operators.shape[0]

    @property
    def dim(self) -> int:
        return self.operators.shape[1]

    def completeness_deficit(self) -> float:
        """Measured max-norm of sum_q M_q^dag M_q - I."""
        gram = np.einsum("qki,qkj->ij", self.operators.conj(), self.operators)
        return float(np.abs(gram - np.eye(self.dim)).max())

    def __len__(self) -> int:
        return self.count

    def __repr__(self) -> str:
        return (
            f"KrausFamily(count={self.count}, dim={self.dim}, "
            f"tolerance={self.completeness_tolerance:.2e})"
        )


def _check_dim(family: KrausFamily, rho: DensityOperator) -> None:
    if family.dim != rho.dim:
        raise DimensionMismatchError(
            f"family dimension {family.dim} != state dimension {rho.dim}"
        )


def weighted_image(
    family: KrausFamily, weights: np.ndarray, rho_matrix: np.ndarray
) -> np.ndarray:
    """sum_q weights[q] M_q rho M_q^dag as two gemms over the stacked family."""
    m = family.count
    d = family.dim
    blocks = (family._flat @ rho_matrix).reshape(m, d, d)
    blocks *= weights[:, None, None]
    side_by_side = np.ascontiguousarray(blocks.transpose(1, 0, 2)).reshape(d, m * d)
    return side_by_side @ family._adjoints_flat


def raw_jump_probabilities(family: KrausFamily, rho: DensityOperator) -> np.ndarray:
    """tr(M_q rho M_q^dag) per q, with no clamping or renormalization."""
    _check_dim(family, rho)
    m, d = family.count, family.dim
    m_rho = (family._flat @ rho.matrix).reshape(m, d, d)
    return (m_rho * family.operators.conj()).sum(axis=(1, 2)).real


def _clamp_and_renormalize(
    probs: np.ndarray, tolerance: float
) -> np.ndarray:
    total = float(probs.sum())
    if abs(total - 1.0) > tolerance + 1e-12:
        raise ProbabilityDeficitError(total - 1.0, tolerance)
    if probs.min() < -PROB_FLOOR:
        raise ValidationError(
            f"probability component {probs.min():.3e} below -{PROB_FLOOR:.0e}; "
            "input state is likely not PSD"
        )
    probs = np.clip(probs, 0.0, None)
    return probs / probs.sum()


def jump_probabilities(family: KrausFamily, rho: DensityOperator) -> np.ndarray:
    """Probability of each ideal jump from state rho.

    Components are tr(M_q rho M_q^dag), clamped at zero and renormalized to
    sum exactly to 1 (a no-op for exactly complete families). Raises
    ProbabilityDeficitError if the raw sum deviates from 1 beyond the
    family's completeness tolerance.
    """
    return _clamp_and_renormalize(
        raw_jump_probabilities(family, rho), family.completeness_tolerance
    )


def apply_jump(
    family: KrausFamily,
    q: int,
    rho: DensityOperator,
    tolerances: Tolerances = DEFAULT_TOLERANCES,
) -> DensityOperator:
    """Conditional state after detecting jump q: M_q rho M_q^dag / tr(...)."""
    _check_dim(family, rho)
    if not 0 <= q < family.count:
        raise IndexOutOfRangeError(
            f"jump index {q} out of range for {family.count} operators"
        )
    m = family.operators[q]
    out = m @ rho.matrix @ m.conj().T
    prob = float(np.trace(out).real)
    if prob <= PROB_FLOOR:
        raise ZeroProbabilityJumpError(
            f"jump {q} has probability {prob:.3e} <= {PROB_FLOOR:.0e}"
        )
    return DensityOperator(out / prob, tolerances)


def kraus_map(
    family: KrausFamily,
    rho: DensityOperator,
    tolerances: Tolerances = DEFAULT_TOLERANCES,
) -> DensityOperator:
    """Unconditional evolution sum_q M_q rho M_q^dag, trace-renormalized.

    Equals the jump-probability-weighted mixture of apply_jump outcomes.
    """
    _check_dim(family, rho)
    total = weighted_image(family, np.ones(family.count), rho.matrix)
    return DensityOperator(total / total.trace().real, tolerances)
