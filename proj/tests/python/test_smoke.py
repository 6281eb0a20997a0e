import math

import pytest

import fairrep


def test_entropy_round_trip():
    for p in (0.0, 0.05, 0.25, 0.5):
        assert abs(fairrep.inverse_binary_entropy(fairrep.binary_entropy(p)) - p) < 1e-9
    assert fairrep.binary_entropy(0.5) == 1.0


def test_metrics_on_two_point_joint():
    joint = fairrep.DiscreteJoint([0.5, 0.5], [0.8, 0.2])
    rule = [1.0, 0.0]
    s1, s0 = fairrep.group_rates(rule, joint)
    assert s1 == pytest.approx(0.8)
    assert s0 == pytest.approx(0.2)
    assert fairrep.statistical_parity(rule, joint) == pytest.approx(0.6)
    assert fairrep.disparate_impact(rule, joint) == pytest.approx(0.75)
    assert fairrep.balanced_error_rate(rule, joint) == pytest.approx(0.2)


def test_certificates_match_enumeration():
    joint = fairrep.DiscreteJoint([0.2, 0.3, 0.5], [0.9, 0.4, 0.1], [0.7, 0.5, 0.2])
    p_s1 = sum(p * s for p, s in zip(joint.px, joint.ps_given_x))
    ber = fairrep.sp_certificate_ber(joint.ps_given_x, joint.px, p_s1)
    assert fairrep.max_sp(joint) == pytest.approx(ber, abs=1e-12)
    assert fairrep.sp_certificate_entropy(joint.ps_given_x, joint.px, p_s1) >= ber
    assert fairrep.max_di(joint) == pytest.approx(fairrep.di_certificate(0.9, p_s1), abs=1e-12)
    assert fairrep.individual_fairness_bound(0.1, 0.05) == pytest.approx((0.2, 0.1))


def test_decide_matches_enumerated_optimum():
    joint = fairrep.DiscreteJoint([0.25, 0.25, 0.5], [0.9, 0.1, 0.5], [0.6, 0.8, 0.3])
    rule = fairrep.decide(joint.py_given_x, joint.ps_given_x, 0.5, 0.5, 1.0)
    assert list(rule) == [0, 1, 0]
    assert fairrep.min_rys(joint, 0.5, 0.5, 1.0) <= fairrep.min_rys(joint, 0.5, 0.5, 0.0) + 1.0


def test_oracle_check_has_no_violations():
    summary = fairrep.oracle_check(seed=2, instances=30, max_support=6)
    assert summary["instances"] == 30
    assert summary["violations"] == 0


def test_representation_training_and_errors():
    data = fairrep.make_synthetic(rows=120, noise_features=3, sensitive_copies=1, seed=4)
    assert data.features.shape == (120, 4)
    result = fairrep.train_representation(data.features, data.s, 1.0, epochs=2, batch_size=40,
                                          learning_rate=1e-2, seed=1, hidden_units=8)
    assert result.trace.adversary_steps == result.trace.encoder_steps == 6
    cleaned = result.model.apply(data.features)
    assert cleaned.shape == data.features.shape
    probs = result.model.adversary_probabilities(cleaned)
    assert all(0.0 < p < 1.0 for p in probs)
    with pytest.raises(fairrep.FairrepError):
        fairrep.train_representation(data.features, data.s, -1.0)
    with pytest.raises(fairrep.UsageError):
        fairrep.sweep("unknown_key=1\n")


def test_sweep_is_deterministic(tmp_path):
    manifest = tmp_path / "synthetic.manifest"
    manifest.write_text("kind=synthetic\nrows=200\nnoise_features=2\nsensitive_copies=1\nseed=3\n")
    config = (f"dataset={manifest}\nlambda_grid=0,1\nepochs=2\nbatch_size=50\n"
              "learning_rate=0.01\nhidden_units=8\n")
    first = fairrep.sweep(config, str(tmp_path / "out"))
    assert first == fairrep.sweep(config)
    lines = first.strip().split("\n")
    assert lines[0].startswith("lambda,sp_via_ber_rule")
    assert len(lines) == 3
    assert (tmp_path / "out" / "sweep.csv").read_text() == first
    assert not math.isnan(float(lines[1].split(",")[1]))
