"""Estimator facade: parameter handling, fit artifacts, sampling."""

import numpy as np
import pytest
from sklearn.base import clone

from optistack.estimator import MultilayerDesigner
from optistack.materials import bundled_library
from optistack.structures import Structure
from optistack.training import RewardSpec, compute_reward


def tiny_designer(**overrides):
    kwargs = dict(
        materials=("MgF2", "TiO2"),
        thicknesses_nm=[60.0, 120.0, 180.0],
        max_layers=3,
        reward_spec=RewardSpec(wavelengths=np.array([500.0, 700.0, 900.0]),
                               target=np.ones(3)),
        epochs=2,
        batch_steps=12,
        learning_rate=1e-4,
        hidden=12,
        embed_dim=3,
        head_hidden=6,
        seed=0,
    )
    kwargs.update(overrides)
    return MultilayerDesigner(**kwargs)


class TestEstimatorContract:
    def test_get_params_round_trip(self):
        d = tiny_designer()
        params = d.get_params()
        assert params["max_layers"] == 3
        assert params["epochs"] == 2
        d2 = MultilayerDesigner(**params)
        assert d2.get_params() == params

    def test_set_params(self):
        d = tiny_designer()
        d.set_params(epochs=5, seed=9)
        assert d.epochs == 5
        assert d.seed == 9

    def test_clone_preserves_parameters(self):
        d = tiny_designer()
        c = clone(d)
        pd, pc = d.get_params(), c.get_params()
        assert set(pd) == set(pc)
        for key, value in pd.items():
            if key == "reward_spec":
                # deep-copied spec: compare fields, arrays elementwise
                np.testing.assert_array_equal(pc[key].wavelengths,
                                              value.wavelengths)
                np.testing.assert_array_equal(pc[key].target, value.target)
                assert pc[key].quantity == value.quantity
            else:
                assert pc[key] == value

    def test_constructor_stores_verbatim(self):
        # no validation or coercion before fit, per the estimator contract
        d = MultilayerDesigner(materials=("OnlyOne",), max_layers=-3)
        assert d.materials == ("OnlyOne",)
        assert d.max_layers == -3


class TestFit:
    def test_fit_sets_artifacts(self):
        d = tiny_designer().fit()
        assert hasattr(d, "policy_")
        assert len(d.trace_) == 2
        assert d.best_structure_ is not None
        assert 0.0 <= d.best_reward_ <= 1.0
        assert 0 <= d.best_epoch_ < 2
        assert not hasattr(d, "finetuned_structure_")

    def test_fit_returns_self_and_ignores_data(self):
        d = tiny_designer()
        assert d.fit(X=np.zeros((3, 2)), y=np.ones(3)) is d

    def test_fit_with_finetune(self):
        d = tiny_designer(finetune=True,
                          finetune_bounds_nm=(15.0, 200.0)).fit()
        assert hasattr(d, "finetuned_structure_")
        assert d.finetuned_reward_ >= d.best_reward_
        assert len(d.finetuned_structure_) == len(d.best_structure_)

    def test_fit_deterministic_in_seed(self):
        t1 = tiny_designer(seed=4).fit().trace_
        t2 = tiny_designer(seed=4).fit().trace_
        assert t1 == t2

    def test_missing_material_raises_at_fit(self):
        d = tiny_designer(materials=("MgF2", "Unobtainium"))
        with pytest.raises(ValueError, match="Unobtainium"):
            d.fit()

    def test_on_epoch_forwarded(self):
        calls = []
        tiny_designer().fit(on_epoch=lambda e, row, *rest: calls.append(e))
        assert calls == [0, 1]


class TestSampling:
    def test_sample_requires_fit(self):
        with pytest.raises(RuntimeError, match="fit"):
            tiny_designer().sample(2)

    def test_sample_returns_valid_structures(self):
        d = tiny_designer().fit()
        structures = d.sample(10, seed=1)
        assert len(structures) == 10
        for s in structures:
            assert isinstance(s, Structure)
            assert 1 <= len(s) <= 3
            for layer in s.layers:
                assert layer.material in ("MgF2", "TiO2")
                assert layer.thickness_nm in (60.0, 120.0, 180.0)

    def test_sample_deterministic_in_seed(self):
        d = tiny_designer().fit()
        a = d.sample(5, seed=3)
        b = d.sample(5, seed=3)
        assert [s.layers for s in a] == [s.layers for s in b]


class TestScoring:
    def test_score_structure_matches_compute_reward(self):
        d = tiny_designer()
        s = Structure.from_pairs([("TiO2", 120.0), ("MgF2", 60.0)])
        expect = compute_reward(s, d.reward_spec,
                                bundled_library().subset(["MgF2", "TiO2"]))
        assert d.score_structure(s) == pytest.approx(expect, abs=1e-12)

    def test_score_works_without_fit(self):
        s = Structure.from_pairs([("MgF2", 120.0)])
        assert 0.0 <= tiny_designer().score_structure(s) <= 1.0
