import numpy as np
import pytest

from qfilter import (
    DensityOperator,
    ErrorModel,
    FilterState,
    KrausFamily,
    MeasurementStep,
    TrajectoryConfig,
    outcome_probabilities,
    run_ensemble,
    run_trajectory,
    step_truth,
    validate_density,
)
from qfilter.errors import ValidationError
from qfilter import serialize
from qfilter.stability import random_density_operator


def identity_step(d=2):
    family = KrausFamily([np.eye(d, dtype=complex)], completeness_tolerance=1e-12)
    return MeasurementStep(family, ErrorModel.identity(1))


class TestStepTruth:
    def test_identity_family_never_moves(self, rng, mixed_qubit):
        q, p, rho = step_truth(mixed_qubit, identity_step(), rng)
        assert (q, p) == (0, 0)
        assert np.abs(rho.matrix - mixed_qubit.matrix).max() < 1e-14

    def test_projective_eigenstate_is_fixed_point(self, two_level_step, rng):
        vac = DensityOperator.basis_state(2, 0)
        for _ in range(20):
            q, p, rho = step_truth(vac, two_level_step, rng)
            assert q == 0
            assert np.abs(rho.matrix - vac.matrix).max() < 1e-14

    def test_jump_statistics(self, two_level_step):
        rho = DensityOperator(np.diag([0.3, 0.7]))
        rng = np.random.default_rng(2024)
        n = 10_000
        counts = np.zeros(2)
        for _ in range(n):
            q, _, _ = step_truth(rho, two_level_step, rng)
            counts[q] += 1
        for q, target in enumerate((0.3, 0.7)):
            sigma = np.sqrt(target * (1 - target) / n)
            assert abs(counts[q] / n - target) <= 3 * sigma


class TestRunTrajectory:
    def test_perfect_observation_tracks_truth(self, projective_family):
        # identity error model + projective probe: the filter sees the ideal
        # outcome and collapses exactly like the true state
        step = MeasurementStep(projective_family, ErrorModel.identity(2))
        rho = DensityOperator(np.diag([0.4, 0.6]))
        config = TrajectoryConfig(
            true_initial=rho,
            filter_initials={"optimal": rho},
            steps=step,
            horizon=10,
            seed=5,
            store_states=True,
        )
        record = run_trajectory(config)
        for truth, estimate in zip(
            record.true_states, record.filter_states["optimal"]
        ):
            assert np.abs(truth.matrix - estimate.matrix).max() < 1e-12

    def test_self_pair_fidelity_is_one(self, two_level_step, mixed_qubit):
        config = TrajectoryConfig(
            true_initial=mixed_qubit,
            filter_initials={"optimal": mixed_qubit},
            steps=two_level_step,
            horizon=8,
            seed=3,
            fidelity_pairs=(("optimal", "optimal"),),
        )
        record = run_trajectory(config)
        assert np.abs(record.fidelities[("optimal", "optimal")] - 1.0).max() < 1e-12

    def test_two_filter_fidelity_series(self, two_level_step, mixed_qubit):
        config = TrajectoryConfig(
            true_initial=DensityOperator(np.diag([0.8, 0.2])),
            filter_initials={
                "optimal": DensityOperator(np.diag([0.8, 0.2])),
                "agnostic": mixed_qubit,
            },
            steps=two_level_step,
            horizon=12,
            seed=11,
            fidelity_pairs=(("optimal", "agnostic"),),
        )
        record = run_trajectory(config)
        series = record.fidelities[("optimal", "agnostic")]
        assert len(series) == 13
        assert np.all((series >= 0.0) & (series <= 1.0))
        assert record.truth_matched_filter == "optimal"
        assert record.shared_outcome_stream

    def test_recorded_states_validate(self, two_level_step, rng):
        rho = random_density_operator(rng, 2)
        config = TrajectoryConfig(
            true_initial=rho,
            filter_initials={"optimal": rho},
            steps=two_level_step,
            horizon=15,
            seed=7,
            store_states=True,
        )
        record = run_trajectory(config)
        for state in record.true_states:
            validate_density(state.matrix)
        for state in record.filter_states["optimal"]:
            validate_density(state.matrix)

    def test_step_callback_receives_feedback(self, two_level_step):
        seen = []

        def controller(k, estimate):
            seen.append((k, float(estimate.matrix[0, 0].real)))
            return two_level_step

        rho = DensityOperator(np.diag([0.25, 0.75]))
        config = TrajectoryConfig(
            true_initial=rho,
            filter_initials={"optimal": rho},
            steps=controller,
            horizon=4,
            seed=1,
        )
        run_trajectory(config)
        assert [k for k, _ in seen] == [1, 2, 3, 4]
        assert seen[0][1] == pytest.approx(0.25)

    def test_horizon_validation(self, two_level_step, mixed_qubit):
        with pytest.raises(ValidationError):
            TrajectoryConfig(
                true_initial=mixed_qubit,
                filter_initials={"f": mixed_qubit},
                steps=[two_level_step],
                horizon=2,
            )


class TestRunEnsemble:
    def test_single_trajectory_reproduces_run_trajectory(
        self, two_level_step, mixed_qubit
    ):
        config = TrajectoryConfig(
            true_initial=mixed_qubit,
            filter_initials={"optimal": mixed_qubit},
            steps=two_level_step,
            horizon=6,
        )
        [from_ensemble] = run_ensemble(config, 1, base_seed=123)
        import dataclasses

        child = np.random.SeedSequence(123).spawn(1)[0]
        direct = run_trajectory(dataclasses.replace(config, seed=child))
        assert np.array_equal(from_ensemble.real_outcomes, direct.real_outcomes)
        assert np.array_equal(from_ensemble.ideal_outcomes, direct.ideal_outcomes)

    def test_byte_identical_under_same_seed(self, two_level_step, mixed_qubit):
        config = TrajectoryConfig(
            true_initial=DensityOperator(np.diag([0.7, 0.3])),
            filter_initials={
                "optimal": DensityOperator(np.diag([0.7, 0.3])),
                "agnostic": mixed_qubit,
            },
            steps=two_level_step,
            horizon=10,
            fidelity_pairs=(("optimal", "agnostic"),),
        )
        blobs = []
        for _ in range(2):
            records = run_ensemble(config, 40, base_seed=2718)
            blob = "\n".join(
                serialize.dumps(serialize.record_to_dict(r)) for r in records
            ).encode()
            blobs.append(blob)
        assert blobs[0] == blobs[1]

    def test_different_seeds_differ(self, two_level_step, mixed_qubit):
        config = TrajectoryConfig(
            true_initial=mixed_qubit,
            filter_initials={"optimal": mixed_qubit},
            steps=two_level_step,
            horizon=20,
        )
        a = run_ensemble(config, 5, base_seed=1)
        b = run_ensemble(config, 5, base_seed=2)
        assert any(
            not np.array_equal(x.real_outcomes, y.real_outcomes)
            for x, y in zip(a, b)
        )

    def test_first_outcome_frequencies_match_prediction(
        self, two_level_step
    ):
        rho = DensityOperator(np.diag([0.3, 0.7]))
        predicted = outcome_probabilities(FilterState(estimate=rho), two_level_step)
        config = TrajectoryConfig(
            true_initial=rho,
            filter_initials={"optimal": rho},
            steps=two_level_step,
            horizon=1,
        )
        n = 10_000
        records = run_ensemble(config, n, base_seed=31415)
        counts = np.bincount(
            [r.real_outcomes[0] for r in records], minlength=2
        )
        for p in range(2):
            sigma = np.sqrt(predicted[p] * (1 - predicted[p]) / n)
            assert abs(counts[p] / n - predicted[p]) <= 3 * sigma

    def test_predictions_recorded_when_asked(self, two_level_step, mixed_qubit):
        config = TrajectoryConfig(
            true_initial=mixed_qubit,
            filter_initials={"optimal": mixed_qubit},
            steps=two_level_step,
            horizon=3,
            record_predictions=True,
        )
        [record] = run_ensemble(config, 1, base_seed=0)
        rows = record.predicted_probabilities["optimal"]
        assert rows.shape == (3, 2)
        assert np.allclose(rows.sum(axis=1), 1.0, atol=1e-12)
