import csv
import json
import math

import numpy as np
import pytest

from structbal.dynamics import IntegratorOptions, integrate
from structbal.equilibria import enumerate_balanced
from structbal.montecarlo import (
    OutcomeKind,
    chernoff_epsilon,
    chernoff_n,
    classify_outcome,
    gen_initial,
    initial_state,
    run_experiment,
    trial_seed,
)

from oracles import kulakowski_limit_balanced


def test_chernoff():
    assert chernoff_n(0.01, 0.01) == 26492 == math.ceil(5000 * math.log(200))
    assert chernoff_n(0.1, 0.05) == 185
    assert chernoff_n(0.999, 0.5) == 1
    assert chernoff_epsilon(27000, 0.01) < 0.01
    with pytest.raises(ValueError):
        chernoff_n(0.0, 0.01)


def test_gen_initial():
    a = gen_initial("symmetric", 6, 42)
    assert np.array_equal(a, gen_initial("symmetric", 6, 42))
    assert np.abs(a - a.T).max() == 0.0 and np.all(np.diag(a) == 0)
    assert np.abs(a).max() <= 100.0
    b = gen_initial("asymmetric", 6, 42)
    assert np.all(np.diag(b) == 0) and np.abs(b - b.T).max() > 0
    k = gen_initial("kulakowski", 6, 42)
    assert np.linalg.norm(k) == pytest.approx(1.0) and np.all(np.diag(k) != 0)
    with pytest.raises(ValueError):
        gen_initial("symmetric", 2, 1)
    assert np.linalg.norm(initial_state("projected-pure", "asymmetric", 4, 3)) == pytest.approx(1.0)


def test_trial_seed_independent():
    seeds = {trial_seed(7, i) for i in range(1000)}
    assert len(seeds) == 1000
    assert trial_seed(7, 3) == trial_seed(7, 3) != trial_seed(8, 3)


def test_outcomes_basic():
    z = next(iter(enumerate_balanced(5, 5))).entries
    o = classify_outcome(integrate("projected-pure", z))
    assert o.kind is OutcomeKind.BALANCED and o.one_positive
    x = gen_initial("asymmetric", 5, 1)
    o = classify_outcome(integrate("projected-pure", x / np.linalg.norm(x),
                                   IntegratorOptions(max_time=0.1)))
    assert o.kind is OutcomeKind.NO_DECISION


def test_kulakowski_self_loops_only_unbalanced():
    x0 = -np.eye(4) + 0.01 * (np.ones((4, 4)) - np.eye(4))
    x0 /= np.linalg.norm(x0)
    traj = integrate("projected-kulakowski", x0)
    off = traj.final_state - np.diag(np.diag(traj.final_state))
    assert np.abs(off).max() < 1e-7
    assert classify_outcome(traj).kind is OutcomeKind.CONVERGED_UNBALANCED


def test_padded_limit_is_components():
    z = next(iter(enumerate_balanced(3, 5))).entries
    o = classify_outcome(integrate("projected-pure", z))
    assert o.kind is OutcomeKind.BALANCED_COMPONENTS


def test_report_reproducible_and_worker_independent():
    a = run_experiment("projected-pure", "asymmetric", 4, 12, master_seed=5)
    b = run_experiment("projected-pure", "asymmetric", 4, 12, master_seed=5, workers=2)
    assert a.to_json() == b.to_json()
    assert a.p_hat == 1.0 and a.N == 12
    assert [t.seed for t in a.trials] == [trial_seed(5, i) for i in range(12)]
    assert "runtime_seconds" not in a.to_dict()
    assert "runtime_seconds" in a.to_dict(include_runtime=True)


def test_kulakowski_agrees_with_closed_form():
    rep = run_experiment("projected-kulakowski", "kulakowski", 5, 60, master_seed=11)
    for t in rep.trials:
        x0 = gen_initial("kulakowski", 5, t.seed)
        assert (t.kind is OutcomeKind.BALANCED) == kulakowski_limit_balanced(x0)


def test_family_model_compatibility():
    with pytest.raises(ValueError):
        run_experiment("projected-kulakowski", "symmetric", 5, 1, 0)
    with pytest.raises(ValueError):
        run_experiment("projected-pure", "kulakowski", 5, 1, 0)


def test_trials_csv(tmp_path):
    rep = run_experiment("projected-pure", "symmetric", 3, 4, master_seed=1)
    rep.write_trials_csv(tmp_path / "t.csv")
    rows = list(csv.DictReader((tmp_path / "t.csv").open()))
    assert len(rows) == 4 and rows[0]["outcome"] == "BalancedFinite"
    d = json.loads(json.dumps(rep.to_dict(include_trials=True)))
    assert len(d["trials"]) == 4
