import json
import time

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from splinerad import surrogate as sg
from splinerad.errors import DuplicateInput, ParseError

from oracles import kriging_2pt


def _bumpy(x):
    return np.sin(3 * x).sum(axis=1) + 0.5 * (x**2).sum(axis=1)


@pytest.fixture(scope="module")
def big_model():
    x = sg.lhs_sample(300, 20, 3)
    t0 = time.perf_counter()
    m = sg.fit(sg.TrainingSet(x, _bumpy(x)))
    return m, time.perf_counter() - t0


@settings(max_examples=150, deadline=None)
@given(st.integers(1, 64), st.integers(1, 20), st.integers(0, 2**63 - 1))
def test_lhs_one_point_per_bin(n, dims, seed):
    x = sg.lhs_sample(n, dims, seed)
    assert x.shape == (n, dims)
    assert np.all((x >= 0) & (x < 1))
    bins = np.floor(x * n).astype(int)
    for k in range(dims):
        assert sorted(bins[:, k]) == list(range(n))


def test_lhs_seeded():
    assert np.array_equal(sg.lhs_sample(10, 3, 5), sg.lhs_sample(10, 3, 5))
    assert not np.array_equal(sg.lhs_sample(10, 3, 5), sg.lhs_sample(10, 3, 6))
    with pytest.raises(ValueError):
        sg.lhs_sample(0, 3, 1)


def test_two_point_closed_form(backend):
    tr = sg.TrainingSet(np.array([[0.2], [0.7]]), np.array([1.0, 3.0]))
    m = sg._assemble(tr, np.array([4.0]))
    for x in (0.0, 0.45, 0.9, 2.0):
        assert m.predict([x])[0] == pytest.approx(kriging_2pt(0.2, 0.7, 1.0, 3.0, 4.0, x), abs=1e-8)


def test_interpolates_training_points(big_model, backend):
    m, _ = big_model
    mean, var = m.predict(m.train.inputs)
    y = m.train.outputs
    assert np.max(np.abs(mean - y) / np.maximum(np.abs(y), 1e-12)) <= 1e-6
    assert np.max(var) <= 1e-6 * m.sigma2


def test_fit_time(big_model):
    assert big_model[1] < 10.0


def test_reverts_to_mean_far_away(big_model):
    m, _ = big_model
    mu, v = m.predict(np.full(20, 25.0))
    assert mu == pytest.approx(m.mu, abs=1e-12)
    assert v == pytest.approx(m.sigma2 * (1 + 1 / np.sum(m._fac.rinv1)), rel=1e-9)


def test_generalizes_between_samples():
    x = sg.lhs_sample(60, 2, 11)
    m = sg.fit(sg.TrainingSet(x, _bumpy(x)))
    q = np.random.default_rng(0).random((200, 2)) * 0.8 + 0.1
    err = np.abs(m.predict(q)[0] - _bumpy(q))
    assert np.sqrt(np.mean(err**2)) < 0.05


def test_checkpoint_round_trip(big_model, tmp_path):
    m, _ = big_model
    sg.save_model(m, tmp_path / "m.json")
    back = sg.load_model(tmp_path / "m.json")
    q = np.random.default_rng(1).random((50, 20))
    a, b = m.predict(q), back.predict(q)
    assert np.max(np.abs(a[0] - b[0])) <= 1e-12
    assert np.max(np.abs(a[1] - b[1])) <= 1e-12
    assert back.factor_hash() == m.factor_hash()


def test_checkpoint_tamper_detected(tmp_path):
    x = sg.lhs_sample(8, 2, 0)
    m = sg.fit(sg.TrainingSet(x, _bumpy(x)))
    sg.save_model(m, tmp_path / "m.json")
    d = json.loads((tmp_path / "m.json").read_text())
    d["outputs"][0] += 1.0
    d["theta"][0] *= 1.5
    (tmp_path / "m.json").write_text(json.dumps(d))
    with pytest.raises(ParseError):
        sg.load_model(tmp_path / "m.json")


def test_duplicates_rejected():
    with pytest.raises(DuplicateInput):
        sg.TrainingSet(np.array([[0.1, 0.2], [0.1, 0.2]]), np.array([1.0, 2.0]))
    tr = sg.TrainingSet(np.array([[0.1, 0.2], [0.3, 0.2]]), np.array([1.0, 2.0]))
    with pytest.raises(DuplicateInput):
        tr.add([0.3, 0.2], 5.0)
    assert len(tr.add([0.5, 0.5], 3.0)) == 3 and tr.add([0.5, 0.5], 3.0).tags[-1] == "reinforcement"


def test_update_adds_sample():
    x = sg.lhs_sample(10, 3, 4)
    m = sg.fit(sg.TrainingSet(x, _bumpy(x)))
    p = np.array([0.5, 0.5, 0.5])
    m2 = sg.update(m, p, 7.0)
    assert len(m2.train) == 11
    assert m2.predict(p)[0] == pytest.approx(7.0, abs=1e-6)


def test_near_duplicate_cluster_gets_nugget():
    # nearly coincident inputs make R ill-conditioned; the nugget escalates
    x = np.array([[0.5, 0.5], [0.5 + 2e-9, 0.5], [0.1, 0.9], [0.8, 0.2]])
    m = sg._assemble(sg.TrainingSet(x, np.array([1.0, 1.0, 2.0, 3.0])), np.array([0.01, 0.01]))
    assert m.nugget >= sg.NUGGET_START
    assert np.isfinite(m.predict([0.3, 0.3])[0])


def test_functional_predict():
    x = sg.lhs_sample(5, 1, 2)
    m = sg.fit(sg.TrainingSet(x, x[:, 0] ** 2))
    assert sg.predict(m, x[0]) == m.predict(x[0])
