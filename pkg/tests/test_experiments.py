import json
import math

import pytest
from pydantic import ValidationError

from app.errors import GuardExceededError
from app.schemas import CounterexampleReport, ExperimentParameters, ExperimentSpec
from app.services import experiments


def test_demo_two_one():
    report = experiments.run_counterexample_demo(2, 1)
    assert report.size == 3
    assert report.delta == pytest.approx(1 / math.sqrt(3), abs=1e-10)
    assert report.bound == pytest.approx(1 / math.sqrt(3), abs=1e-15)
    assert report.beta1 == pytest.approx(2 / 3, abs=1e-12)
    assert report.alphaN == pytest.approx(2 / 3, abs=1e-12)
    outcomes = {outcome.policy: outcome for outcome in report.outcomes}
    assert outcomes["lex"].first_selection == [0]
    assert outcomes["lex"].recovered
    assert not set(outcomes["adversarial"].first_selection) & {0, 1}
    assert not outcomes["adversarial"].recovered
    assert "Contraejemplo K=2, N=1" in report.summary()


def test_demo_one_one():
    report = experiments.run_counterexample_demo(1, 1)
    assert report.delta == pytest.approx(1 / math.sqrt(2), abs=1e-10)
    assert report.beta1 == pytest.approx(0.5, abs=1e-12)
    assert report.alphaN == pytest.approx(0.5, abs=1e-12)


def test_demo_three_two_spectrum():
    report = experiments.run_counterexample_demo(3, 2)
    radius = math.sqrt(2 / 5)
    expected = sorted([0.6, 0.6, 1.0, 1.0, 1.0, 1 - radius, 1 + radius])
    assert report.eigenvalues == pytest.approx(expected, abs=1e-10)
    assert report.expected_eigenvalues == pytest.approx(expected, abs=1e-15)


def test_demo_with_more_selections_than_sparsity_reports_only_the_tie():
    report = experiments.run_counterexample_demo(1, 2)
    assert report.beta1 == pytest.approx(1 / 3, abs=1e-12)
    assert report.outcomes == []


def test_demo_size_guard():
    with pytest.raises(GuardExceededError):
        experiments.run_counterexample_demo(8, 8)


def test_exhaustive_recovery_on_identity():
    report = experiments.run_exhaustive_recovery(6, 6, 2, 1, 2, ensemble="identity", master_seed=3)
    assert len(report.matrices) == 2
    for record in report.matrices:
        assert record.certified
        assert record.trials == math.comb(6, 2)
        assert record.success_rate == 1.0
    assert report.certified_failures == 0


@pytest.mark.parametrize("policy", ["lex", "adversarial"])
def test_exhaustive_recovery_certified_gaussians_never_fail(policy):
    report = experiments.run_exhaustive_recovery(10, 12, 1, 1, 5, master_seed=11, policy=policy)
    assert report.certified_failures == 0
    for record in report.matrices:
        if record.certified:
            assert record.successes == record.trials
    assert "violaciones=0" in report.summary()


def test_exhaustive_recovery_with_capped_loop_counts_no_failures():
    report = experiments.run_exhaustive_recovery(6, 6, 3, 1, 1, ensemble="identity", master_seed=3)
    (record,) = report.matrices
    assert record.certified
    assert record.trials == math.comb(6, 3)
    assert record.successes == 0
    assert report.iteration_capped
    assert report.certified_failures == 0
    assert "tope de iteraciones" in report.summary()


def test_exhaustive_recovery_budget_guard():
    with pytest.raises(GuardExceededError):
        experiments.run_exhaustive_recovery(10, 20, 5, 1, 1000)


def phase_parameters(**overrides) -> ExperimentParameters:
    values = dict(m=4, n=4, K_values=[1, 3], N_values=[1, 2], trials=5, ensemble="identity", master_seed=5)
    values.update(overrides)
    return ExperimentParameters(**values)


def test_phase_transition_rows():
    document = experiments.run_phase_transition(phase_parameters())
    lines = document.splitlines()
    assert lines[0] == "K,N,m,n,trials,successes,success_rate"
    assert lines[1] == "1,1,4,4,5,5,1.0"
    assert lines[2] == "1,2,4,4,0,0,"
    assert lines[3].startswith("3,1,4,4,5,")
    assert lines[4] == "3,2,4,4,0,0,"
    assert document.endswith("\n")


def test_phase_transition_is_reproducible():
    params = phase_parameters(ensemble="gaussian", m=8, n=12, K_values=[1, 2, 3], trials=10)
    first = experiments.run_phase_transition(params)
    assert experiments.run_phase_transition(params) == first
    assert experiments.run_phase_transition(params, workers=2) == first


def test_child_seeds_are_stable_and_distinct():
    assert experiments.child_seed(0, 1, 2) == experiments.child_seed(0, 1, 2)
    assert experiments.child_seed(0, 1, 2) != experiments.child_seed(0, 2, 1)
    assert experiments.child_seed(0, 1, 2) != experiments.child_seed(1, 1, 2)


def test_spec_requires_parameters_per_kind():
    with pytest.raises(ValidationError, match="parameters.n"):
        ExperimentSpec.model_validate({"kind": "exhaustive_recovery", "parameters": {"m": 4}})
    with pytest.raises(ValidationError):
        ExperimentSpec.model_validate({"kind": "unknown"})
    with pytest.raises(ValidationError):
        ExperimentSpec.model_validate({"kind": "counterexample_demo", "parameters": {"K": 0, "N": 1}})


@pytest.mark.parametrize(
    "kind,parameters,field",
    [
        ("exhaustive_recovery", {"m": 6, "n": 6, "K": 1, "N": 2, "seeds": 1}, "parameters.N"),
        ("exhaustive_recovery", {"m": 5, "n": 12, "K": 3, "N": 2, "seeds": 1}, "parameters.m"),
        ("noise_sweep", {"m": 8, "n": 8, "K": 4, "N": 2, "epsilons": [0.1], "trials": 1}, "parameters.n"),
        ("noise_sweep", {"m": 6, "n": 8, "K": 3, "N": 1, "epsilons": [0.1], "trials": 1}, "parameters.m"),
    ],
)
def test_spec_rejects_inconsistent_dimensions(kind, parameters, field):
    with pytest.raises(ValidationError, match=field):
        ExperimentSpec.model_validate({"kind": kind, "parameters": parameters})


def test_spec_accepts_consistent_dimensions():
    spec = ExperimentSpec.model_validate(
        {"kind": "noise_sweep", "parameters": {"m": 4, "n": 5, "K": 2, "N": 2, "epsilons": [0.1], "trials": 1}}
    )
    assert spec.parameters.N * spec.parameters.K + 1 == spec.parameters.n


def test_parameter_validation():
    with pytest.raises(ValidationError):
        ExperimentParameters(m=4, n=5, ensemble="identity")
    with pytest.raises(ValidationError):
        ExperimentParameters(epsilons=[0.1, -0.1])
    with pytest.raises(ValidationError):
        ExperimentParameters(K_values=[0, 1])


def test_noise_sweep_on_identity():
    params = ExperimentParameters(m=8, n=8, K=2, N=1, epsilons=[0.05, 0.1], trials=20, ensemble="identity")
    report = experiments.run_noise_sweep(params)
    assert report.certified_matrices == 1
    assert report.skipped_matrices == 0
    assert [level.epsilon for level in report.levels] == [0.05, 0.1]
    for level in report.levels:
        assert level.trials == 20
        assert level.successes == 20


def test_noise_sweep_on_gaussians_counts_every_matrix():
    params = ExperimentParameters(m=10, n=12, K=1, N=1, epsilons=[0.05], trials=10, seeds=4, master_seed=2)
    report = experiments.run_noise_sweep(params)
    assert report.certified_matrices + report.skipped_matrices == 4
    assert report.levels[0].trials == 10 * report.certified_matrices
    assert report.levels[0].successes == report.levels[0].trials


def test_run_experiment_and_write_report(tmp_path):
    spec = ExperimentSpec.model_validate({"kind": "counterexample_demo", "parameters": {"K": 2, "N": 1}})
    report = experiments.run_experiment(spec)
    assert isinstance(report, CounterexampleReport)
    path = experiments.write_report(report, tmp_path / "out" / "demo.json")
    document = json.loads(path.read_text())
    assert document["K"] == 2
    assert len(document["outcomes"]) == 2


def test_phase_transition_through_run_experiment(tmp_path):
    spec = ExperimentSpec.model_validate(
        {
            "kind": "phase_transition",
            "parameters": {"m": 4, "n": 4, "K_values": [1], "trials": 3, "ensemble": "identity"},
        }
    )
    report = experiments.run_experiment(spec)
    document, summary = experiments.render_report(report)
    assert document == summary == report
    path = experiments.write_report(report, tmp_path / "phase.csv")
    assert path.read_bytes() == report.encode()
