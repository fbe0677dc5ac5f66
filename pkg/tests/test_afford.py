import numpy as np
import pytest

from grasp.afford import AffordanceModule, make_variant
from grasp.autodiff import Tensor
from grasp.nn import params_hash

DIMS = dict(state_dim=5, goal_dim=3, action_dim=2, hidden=8)


def inputs(B=4, seed=0):
    rng = np.random.default_rng(seed)
    return (Tensor(rng.standard_normal((B, DIMS["state_dim"]))),
            Tensor(rng.standard_normal((B, DIMS["goal_dim"]))))


class TestVariants:
    @pytest.mark.parametrize("variant", ["GA", "SA", "A"])
    def test_output_shape_and_bounds(self, variant):
        mod = make_variant(variant, 3, **DIMS, seed=0)
        s, g = inputs()
        out = mod(s, g)
        assert out.shape == (4, 3, DIMS["action_dim"])
        assert np.abs(out.data).max() < 1.0  # tanh-bounded

    def test_sa_ignores_goal(self):
        mod = make_variant("SA", 2, **DIMS, seed=1)
        s, g1 = inputs(seed=0)
        _, g2 = inputs(seed=9)
        assert np.array_equal(mod(s, g1).data, mod(s, g2).data)

    def test_ga_uses_goal(self):
        mod = make_variant("GA", 2, **DIMS, seed=1)
        s, g1 = inputs(seed=0)
        _, g2 = inputs(seed=9)
        assert not np.array_equal(mod(s, g1).data, mod(s, g2).data)

    def test_a_constant_across_states(self):
        mod = make_variant("A", 4, **DIMS, seed=2)
        s, g = inputs()
        out = mod(s, g).data
        assert np.allclose(out, out[0])  # same K actions for every batch row
        assert len(mod.params()) == 1

    def test_heads_distinct_at_init(self):
        mod = make_variant("SA", 3, **DIMS, seed=3)
        s, g = inputs()
        out = mod(s, g).data
        assert not np.allclose(out[:, 0], out[:, 1])


class TestValidation:
    def test_rejects_bad_variant(self):
        with pytest.raises(ValueError, match="variant"):
            AffordanceModule("XX", 2, **DIMS)

    def test_rejects_zero_heads(self):
        with pytest.raises(ValueError, match="K"):
            AffordanceModule("GA", 0, **DIMS)

    def test_ga_requires_goal(self):
        with pytest.raises(ValueError, match="goal"):
            AffordanceModule("GA", 2, state_dim=5, goal_dim=0,
                             action_dim=2, hidden=8)


class TestFrozen:
    def test_frozen_has_no_trainable_params(self):
        mod = make_variant("GA", 4, **DIMS, seed=4, frozen=True)
        assert mod.trainable_params() == []
        assert len(mod.params()) > 0  # still saved/loaded and usable

    def test_unfrozen_trains_everything(self):
        mod = make_variant("GA", 4, **DIMS, seed=4)
        assert mod.trainable_params() == mod.params()


class TestDeterminism:
    def test_same_seed_same_params(self):
        a = make_variant("GA", 3, **DIMS, seed=7)
        b = make_variant("GA", 3, **DIMS, seed=7)
        assert params_hash(a.params()) == params_hash(b.params())

    def test_param_names_unique(self):
        mod = make_variant("GA", 3, **DIMS, seed=0)
        names = [p.name for p in mod.params()]
        assert len(names) == len(set(names))
