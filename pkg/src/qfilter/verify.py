"""Named verification suites over seeded random instances.

Each suite returns a CheckResult with measured quantities and a pass flag;
failures never raise out of the suite, so a verification run always
produces a complete machine-readable report. The CLI's ``verify``
subcommand and the acceptance tests drive the same functions.
"""

from __future__ import annotations

import dataclasses
from dataclasses import dataclass, field
from typing import Callable, Dict, List, Optional, Sequence, Tuple

import numpy as np

from .density import DensityOperator
from .errormodel import ErrorModel
from .errors import QFilterError, SubmartingaleViolationError
from .filtering import FilterState, MeasurementStep, filter_update, outcome_probabilities, run_filter
from .kraus import KrausFamily, apply_jump
from .oracle import direct_estimate, marginal_evidence
from .photonbox import (
    PhotonBoxParams,
    atom_completeness_residual,
    cavity_completeness_deficit,
    detection_error_model,
    displacement,
    fock_operators,
)
from .simulate import TrajectoryConfig, run_ensemble, run_trajectory
from .stability import (
    check_fidelity_inequality,
    exact_one_step_submartingale,
    random_density_operator,
    random_kraus_family,
    random_measurement_step,
)
from . import serialize

__all__ = [
    "CheckResult",
    "oracle_equivalence_suite",
    "ideal_reduction_suite",
    "exact_submartingale_suite",
    "inequality_suite",
    "photonbox_structure_suite",
    "predictive_consistency_suite",
    "determinism_suite",
    "error_model_check",
    "ALL_SUITES",
    "run_suites",
]


@dataclass
class CheckResult:
    """Outcome of one named verification suite."""

    name: str
    passed: bool
    measured: Dict = field(default_factory=dict)
    tolerance: Dict = field(default_factory=dict)
    error: Optional[str] = None

    def to_dict(self) -> Dict:
        return dataclasses.asdict(self)


def _random_instance(
    rng: np.random.Generator,
    dims: Sequence[int],
    m_ideals: Sequence[int],
    m_reals: Sequence[int],
    max_k: int,
) -> Tuple[DensityOperator, List[MeasurementStep], List[int]]:
    """Random filtering instance with outcomes sampled from the true process."""
    d = int(rng.choice(dims))
    k = int(rng.integers(1, max_k + 1))
    steps = [
        random_measurement_step(
            rng, d, int(rng.choice(m_ideals)), int(rng.choice(m_reals))
        )
        for _ in range(k)
    ]
    initial = random_density_operator(rng, d)
    config = TrajectoryConfig(
        true_initial=initial,
        filter_initials={"optimal": initial},
        steps=steps,
        horizon=k,
        seed=int(rng.integers(2**63)),
    )
    record = run_trajectory(config)
    return initial, steps, [int(p) for p in record.real_outcomes]


def oracle_equivalence_suite(
    n_instances: int = 200,
    dims: Sequence[int] = (2, 3, 4),
    m_ideals: Sequence[int] = (2, 3),
    m_reals: Sequence[int] = (2, 3),
    max_k: int = 5,
    seed: int = 20240001,
    state_tol: float = 1e-9,
    evidence_tol: float = 1e-10,
) -> CheckResult:
    """Recursive filter vs. brute-force Bayes expansion on random instances.

    Also checks that the total record probability telescopes into the
    product of the per-step predicted outcome probabilities.
    """
    rng = np.random.default_rng(seed)
    max_state_dev = 0.0
    max_evidence_dev = 0.0
    try:
        for _ in range(n_instances):
            initial, steps, outcomes = _random_instance(
                rng, dims, m_ideals, m_reals, max_k
            )
            states = run_filter(initial, steps, outcomes)
            exact = direct_estimate(initial, steps, outcomes)
            dev = float(
                np.abs(states[-1].estimate.matrix - exact.matrix).max()
            )
            max_state_dev = max(max_state_dev, dev)

            telescoped = 1.0
            for state, step, p in zip(states[:-1], steps, outcomes):
                telescoped *= float(outcome_probabilities(state, step)[p])
            evidence = marginal_evidence(initial, steps, outcomes)
            max_evidence_dev = max(max_evidence_dev, abs(evidence - telescoped))
    except QFilterError as err:
        return CheckResult("oracle_equivalence", False, error=str(err))
    return CheckResult(
        name="oracle_equivalence",
        passed=max_state_dev <= state_tol and max_evidence_dev <= evidence_tol,
        measured={
            "n_instances": n_instances,
            "max_state_deviation": max_state_dev,
            "max_evidence_deviation": max_evidence_dev,
        },
        tolerance={"state": state_tol, "evidence": evidence_tol},
    )


def ideal_reduction_suite(
    n_instances: int = 100,
    dims: Sequence[int] = (2, 3, 4),
    m_ideals: Sequence[int] = (2, 3, 4),
    seed: int = 20240002,
    tol: float = 1e-12,
) -> CheckResult:
    """With a perfect detector the filter update is exactly the jump update."""
    rng = np.random.default_rng(seed)
    max_dev = 0.0
    try:
        for _ in range(n_instances):
            d = int(rng.choice(dims))
            m = int(rng.choice(m_ideals))
            family = random_kraus_family(rng, d, m)
            step = MeasurementStep(family, ErrorModel.identity(m))
            rho = random_density_operator(rng, d)
            q = int(rng.integers(m))
            via_filter = filter_update(FilterState(estimate=rho), step, q)
            via_jump = apply_jump(family, q, rho)
            dev = float(
                np.abs(via_filter.estimate.matrix - via_jump.matrix).max()
            )
            max_dev = max(max_dev, dev)
    except QFilterError as err:
        return CheckResult("ideal_reduction", False, error=str(err))
    return CheckResult(
        name="ideal_reduction",
        passed=max_dev <= tol,
        measured={"n_instances": n_instances, "max_deviation": max_dev},
        tolerance={"max_deviation": tol},
    )


def exact_submartingale_suite(
    n_instances: int = 1000,
    max_dim: int = 4,
    seed: int = 20240003,
    slack_tol: float = 1e-9,
    rank_deficient_fraction: float = 0.25,
) -> CheckResult:
    """Zero one-step violations over random pairs, including degenerate ones.

    A slice of the instances uses basis-projector families with
    rank-deficient mismatched states aligned to kill an outcome's trace,
    which forces the shrinking-epsilon branch to run.
    """
    rng = np.random.default_rng(seed)
    violations = 0
    min_slack = np.inf
    n_regularized = 0
    try:
        for i in range(n_instances):
            d = int(rng.integers(2, max_dim + 1))
            degenerate = i < int(n_instances * rank_deficient_fraction)
            if degenerate:
                # Projective measurement with a state missing one basis
                # direction: outcome on the missing direction has zero trace.
                projectors = [
                    np.diag((np.arange(d) == j).astype(np.complex128))
                    for j in range(d)
                ]
                step = MeasurementStep(
                    family=KrausFamily(projectors, completeness_tolerance=1e-12),
                    errors=ErrorModel.identity(d),
                )
                rho_hat = random_density_operator(rng, d)
                rank = int(rng.integers(1, d))
                g = rng.standard_normal((d, rank)) + 1j * rng.standard_normal(
                    (d, rank)
                )
                g[int(rng.integers(d)), :] = 0.0  # kill one basis direction
                mat = g @ g.conj().T
                tr = float(np.trace(mat).real)
                if tr <= 0.0:
                    continue
                rho_e = DensityOperator(mat / tr)
            else:
                m_ideal = int(rng.integers(2, 5))
                m_real = int(rng.integers(2, 5))
                step = random_measurement_step(rng, d, m_ideal, m_real)
                rho_hat = random_density_operator(rng, d)
                low_rank = rng.random() < 0.3
                rho_e = random_density_operator(
                    rng, d, rank=int(rng.integers(1, d)) if low_rank else None
                )
            try:
                check = exact_one_step_submartingale(
                    rho_hat, rho_e, step, slack_tol=slack_tol
                )
                n_regularized += len(check.regularized_outcomes)
                min_slack = min(min_slack, check.slack)
            except SubmartingaleViolationError as err:
                violations += 1
                min_slack = min(min_slack, err.rhs - err.lhs)
    except QFilterError as err:
        return CheckResult("exact_submartingale", False, error=str(err))
    return CheckResult(
        name="exact_submartingale",
        passed=violations == 0 and n_regularized > 0,
        measured={
            "n_instances": n_instances,
            "violations": violations,
            "min_slack": float(min_slack),
            "regularized_updates": n_regularized,
        },
        tolerance={"slack": slack_tol},
    )


def _random_partition(
    rng: np.random.Generator, size: int
) -> List[List[int]]:
    n_parts = int(rng.integers(1, size + 1))
    assignment = rng.integers(0, n_parts, size=size)
    # Guarantee no empty part by seeding each part with one index.
    perm = rng.permutation(size)
    for j in range(n_parts):
        assignment[perm[j]] = j
    return [
        [int(i) for i in np.flatnonzero(assignment == j)] for j in range(n_parts)
    ]


def _random_partition_of(
    rng: np.random.Generator, indices: Sequence[int]
) -> List[List[int]]:
    shape = _random_partition(rng, len(indices))
    return [[indices[i] for i in part] for part in shape]


def inequality_suite(
    n_instances: int = 1000,
    max_dim: int = 4,
    max_ops: int = 8,
    seed: int = 20240004,
    slack_tol: float = 1e-9,
) -> CheckResult:
    """Partitioned-channel fidelity inequality on random exact families.

    Includes single-part partitions (channel monotonicity of fidelity) and
    deliberately aligned rank-deficient sigma instances (basis-projector
    family, sigma with one basis direction zeroed out, the matching
    projector isolated in its own part) so the degenerate sigma branch is
    exercised, not just reachable.
    """
    rng = np.random.default_rng(seed)
    min_slack = np.inf
    violations = 0
    n_degenerate = 0
    n_single_part = 0
    try:
        for i in range(n_instances):
            d = int(rng.integers(2, max_dim + 1))
            if i % 7 == 3:
                # Aligned degenerate instance.
                ops = np.stack(
                    [
                        np.diag((np.arange(d) == j).astype(np.complex128))
                        for j in range(d)
                    ]
                )
                dead = int(rng.integers(d))
                rest = [j for j in range(d) if j != dead]
                partition = [[dead]] + _random_partition_of(rng, rest)
                rho = random_density_operator(rng, d)
                g = rng.standard_normal((d, d)) + 1j * rng.standard_normal((d, d))
                g[dead, :] = 0.0
                mat = g @ g.conj().T
                sigma = DensityOperator(mat / np.trace(mat).real)
            else:
                s = int(rng.integers(1, max_ops + 1))
                ops = random_kraus_family(rng, d, s).operators
                if i % 10 == 0:
                    partition = [list(range(s))]
                else:
                    partition = _random_partition(rng, s)
                rho = random_density_operator(rng, d)
                if rng.random() < 0.25 and d > 1:
                    sigma = random_density_operator(
                        rng, d, rank=int(rng.integers(1, d))
                    )
                else:
                    sigma = random_density_operator(rng, d)
            n_single_part += len(partition) == 1
            check = check_fidelity_inequality(ops, partition, rho, sigma)
            n_degenerate += len(check.degenerate_parts)
            min_slack = min(min_slack, check.slack)
            if check.slack < -slack_tol:
                violations += 1
    except QFilterError as err:
        return CheckResult("fidelity_inequality", False, error=str(err))
    return CheckResult(
        name="fidelity_inequality",
        passed=violations == 0 and n_single_part > 0 and n_degenerate > 0,
        measured={
            "n_instances": n_instances,
            "violations": violations,
            "min_slack": float(min_slack),
            "single_part_instances": n_single_part,
            "degenerate_parts_hit": n_degenerate,
        },
        tolerance={"slack": slack_tol},
    )


def _random_photonbox_params(rng: np.random.Generator) -> PhotonBoxParams:
    p = rng.dirichlet(np.ones(3))
    p_atom = (float(p[0]), float(p[1]), float(1.0 - p[0] - p[1]))
    return PhotonBoxParams(
        n_max=int(rng.integers(3, 11)),
        p_atom=p_atom,
        detection_efficiency=float(rng.random()),
        assign_error_g=float(rng.random()),
        assign_error_e=float(rng.random()),
        decoherence_strength=float(10 ** rng.uniform(-3, -1.5)),
        thermal_occupation=float(10 ** rng.uniform(-2.5, -1)),
        phase_per_photon=float(rng.uniform(0, np.pi)),
        reference_phase=float(rng.uniform(0, 2 * np.pi)),
    )


def photonbox_structure_suite(
    n_param_draws: int = 100,
    seed: int = 20240005,
    column_tol: float = 1e-12,
    atom_tol: float = 1e-12,
    ratio_window: Tuple[float, float] = (3.5, 4.5),
    unitarity_tol: float = 1e-6,
    mean_photon_tol: float = 1e-6,
) -> CheckResult:
    """Structural checks of the cavity probe model.

    Random parameter draws: detection columns sum to 1, atom sector exactly
    complete. Fixed defaults: second-order scaling of the cavity deficit,
    displacement unitarity, and the coherent-state mean photon number.
    """
    rng = np.random.default_rng(seed)
    max_column_dev = 0.0
    max_atom_residual = 0.0
    try:
        for _ in range(n_param_draws):
            params = _random_photonbox_params(rng)
            eta = detection_error_model(params).eta
            max_column_dev = max(
                max_column_dev, float(np.abs(eta.sum(axis=0) - 1.0).max())
            )
            max_atom_residual = max(
                max_atom_residual, atom_completeness_residual(params)
            )

        defaults = PhotonBoxParams()
        halved = dataclasses.replace(
            defaults, decoherence_strength=defaults.decoherence_strength / 2
        )
        deficit = cavity_completeness_deficit(defaults)
        ratio = deficit / cavity_completeness_deficit(halved)

        d_op = displacement(0.5, defaults.n_max)
        unitarity_dev = float(
            np.abs(d_op.conj().T @ d_op - np.eye(defaults.dim)).max()
        )
        _, _, n_op = fock_operators(defaults.n_max)
        coherent = d_op[:, 0]
        mean_n = float((coherent.conj() @ n_op @ coherent).real)
    except QFilterError as err:
        return CheckResult("photonbox_structure", False, error=str(err))
    passed = (
        max_column_dev <= column_tol
        and max_atom_residual <= atom_tol
        and ratio_window[0] <= ratio <= ratio_window[1]
        and unitarity_dev <= unitarity_tol
        and abs(mean_n - 0.25) <= mean_photon_tol
    )
    return CheckResult(
        name="photonbox_structure",
        passed=passed,
        measured={
            "n_param_draws": n_param_draws,
            "max_column_sum_deviation": max_column_dev,
            "max_atom_sector_residual": max_atom_residual,
            "cavity_deficit": deficit,
            "cavity_deficit_ratio": float(ratio),
            "displacement_unitarity_deviation": unitarity_dev,
            "coherent_mean_photon_number": mean_n,
        },
        tolerance={
            "column_sum": column_tol,
            "atom_residual": atom_tol,
            "ratio_window": list(ratio_window),
            "unitarity": unitarity_tol,
            "mean_photon": mean_photon_tol,
        },
    )


def _two_level_step() -> MeasurementStep:
    """The worked 2x2 instance: projective probe, 10% symmetric readout error."""
    family = KrausFamily(
        [np.diag([1.0, 0.0]).astype(complex), np.diag([0.0, 1.0]).astype(complex)],
        completeness_tolerance=1e-12,
        labels=["down", "up"],
    )
    errors = ErrorModel([[0.9, 0.1], [0.1, 0.9]])
    return MeasurementStep(family, errors, label="two-level")


def predictive_consistency_suite(
    n_traj: int = 10_000,
    seed: int = 20240006,
    sigma_bound: float = 3.0,
) -> CheckResult:
    """First detector outcome frequencies vs. the predicted distribution.

    On the two-level model with the filter at the true state, empirical
    outcome frequencies must match the predicted probabilities within
    ``sigma_bound`` binomial standard deviations.
    """
    step = _two_level_step()
    rho = DensityOperator(np.diag([0.3, 0.7]))
    predicted = outcome_probabilities(FilterState(estimate=rho), step)
    config = TrajectoryConfig(
        true_initial=rho,
        filter_initials={"optimal": rho},
        steps=step,
        horizon=1,
    )
    try:
        records = run_ensemble(config, n_traj, base_seed=seed)
    except QFilterError as err:
        return CheckResult("predictive_consistency", False, error=str(err))
    firsts = np.array([r.real_outcomes[0] for r in records])
    counts = np.bincount(firsts, minlength=step.m_real)
    freqs = counts / n_traj
    sigmas = np.sqrt(predicted * (1.0 - predicted) / n_traj)
    deviations = np.abs(freqs - predicted)
    passed = bool(np.all(deviations <= sigma_bound * sigmas + 1e-15))
    return CheckResult(
        name="predictive_consistency",
        passed=passed,
        measured={
            "n_traj": n_traj,
            "predicted": predicted.tolist(),
            "empirical": freqs.tolist(),
            "deviation_in_sigmas": (
                deviations / np.where(sigmas > 0, sigmas, np.inf)
            ).tolist(),
        },
        tolerance={"sigma_bound": sigma_bound},
    )


def determinism_suite(
    n_traj: int = 50,
    horizon: int = 10,
    seed: int = 20240007,
) -> CheckResult:
    """Two ensemble runs with one base seed serialize byte-identically."""
    step = _two_level_step()
    rho = DensityOperator(np.diag([0.3, 0.7]))
    config = TrajectoryConfig(
        true_initial=rho,
        filter_initials={"optimal": rho, "alt": DensityOperator.maximally_mixed(2)},
        steps=step,
        horizon=horizon,
        fidelity_pairs=(("optimal", "alt"),),
    )
    try:
        blobs = []
        for _ in range(2):
            records = run_ensemble(config, n_traj, base_seed=seed)
            lines = [
                serialize.dumps(serialize.record_to_dict(r)) for r in records
            ]
            blobs.append("\n".join(lines).encode())
    except QFilterError as err:
        return CheckResult("determinism", False, error=str(err))
    return CheckResult(
        name="determinism",
        passed=blobs[0] == blobs[1],
        measured={"n_traj": n_traj, "bytes": len(blobs[0])},
    )


def error_model_check(eta_rows) -> CheckResult:
    """Validate a raw detection-error matrix, surfacing the exact violation."""
    try:
        model = ErrorModel(np.asarray(eta_rows, dtype=np.float64))
    except QFilterError as err:
        return CheckResult("error_model", False, error=str(err))
    return CheckResult(
        name="error_model",
        passed=True,
        measured={"m_real": model.m_real, "m_ideal": model.m_ideal},
    )


ALL_SUITES: Dict[str, Callable[..., CheckResult]] = {
    "oracle": oracle_equivalence_suite,
    "ideal-reduction": ideal_reduction_suite,
    "submartingale-exact": exact_submartingale_suite,
    "inequality": inequality_suite,
    "photonbox-structure": photonbox_structure_suite,
    "predictive-consistency": predictive_consistency_suite,
    "determinism": determinism_suite,
}


def run_suites(
    names: Sequence[str],
    suite_params: Optional[Dict[str, Dict]] = None,
) -> List[CheckResult]:
    """Run named suites with per-suite keyword overrides; never aborts early."""
    suite_params = suite_params or {}
    results = []
    for name in names:
        if name not in ALL_SUITES:
            results.append(
                CheckResult(name, False, error=f"unknown check {name!r}")
            )
            continue
        kwargs = dict(suite_params.get(name, {}))
        try:
            results.append(ALL_SUITES[name](**kwargs))
        except Exception as err:  # a crashing suite must not abort the report
            results.append(CheckResult(name, False, error=repr(err)))
    return results
