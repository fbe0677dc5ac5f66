"""Central finite-difference gradient checks for ops, networks and the
planner objective. Used by the test suite and the `grasp gradcheck` command."""

import numpy as np

from . import autodiff as ad
from .afford import AffordanceModule
from .autodiff import Graph, Tensor, backward
from .model import ValueEquivalentModel
from .nn import MLP
from .planner import PlannerConfig, affordance_objective


def analytic_grads(f, params):
    with Graph():
        out = f()
        backward(out, params=params)
    return [p.grad.copy() for p in params], float(out.data)


def numeric_grads(f, params, h=1e-5):
    grads = []
    for p in params:
        g = np.zeros_like(p.data)
        flat = p.data.reshape(-1)
        gflat = g.reshape(-1)
        for i in range(flat.size):
            orig = flat[i]
            flat[i] = orig + h
            with ad.no_grad():
                hi = float(f().data)
            flat[i] = orig - h
            with ad.no_grad():
                lo = float(f().data)
            flat[i] = orig
            gflat[i] = (hi - lo) / (2.0 * h)
        grads.append(g)
    return grads


def max_rel_error(f, params, h=1e-5):
    """Worst relative error between analytic and central-difference grads."""
    ana, _ = analytic_grads(f, params)
    num = numeric_grads(f, params, h=h)
    worst = 0.0
    for a, n in zip(ana, num):
        denom = max(np.linalg.norm(a), np.linalg.norm(n), 1e-8)
        worst = max(worst, float(np.linalg.norm(a - n) / denom))
    return worst


# ------------------------------------------------------------------- suite


def _op_cases(rng):
    """Scalar-valued functions exercising every differentiable primitive."""
    x = Tensor(rng.normal(size=(3, 5)), requires_grad=True, name="x")
    w = Tensor(rng.normal(size=(5, 4)), requires_grad=True, name="w")
    y = Tensor(rng.normal(size=(3, 4)), requires_grad=True, name="y")
    v = Tensor(rng.normal(size=7), requires_grad=True, name="v")

    cases = {
        "matmul": (lambda: ad.tsum(ad.square(ad.matmul(x, w))), [x, w]),
        "add": (lambda: ad.tsum(ad.square(ad.add(ad.matmul(x, w), y))), [x, w, y]),
        "mul": (lambda: ad.tsum(ad.mul(y, ad.matmul(x, w))), [x, w, y]),
        "scale": (lambda: ad.tsum(ad.scale(x, 2.5)), [x]),
        "sum": (lambda: ad.tsum(ad.square(ad.tsum(x, axis=1))), [x]),
        "mean": (lambda: ad.square(ad.tmean(ad.mul(x, x))), [x]),
        "square": (lambda: ad.tsum(ad.square(x)), [x]),
        "elu": (lambda: ad.tsum(ad.square(ad.elu(x))), [x]),
        "tanh": (lambda: ad.tsum(ad.square(ad.tanh(x))), [x]),
        "softmax": (lambda: ad.tsum(ad.mul(y, ad.softmax(ad.matmul(x, w), tau=0.7, axis=1))),
                    [x, w, y]),
        "exp": (lambda: ad.tsum(ad.texp(ad.scale(x, 0.3))), [x]),
        "log": (lambda: ad.tsum(ad.tlog(ad.add(ad.square(x), Tensor(np.ones((3, 5)))))), [x]),
        "softplus": (lambda: ad.tsum(ad.softplus(x)), [x]),
        "concat": (lambda: ad.tsum(ad.square(ad.concat([x, ad.square(x)], axis=1))), [x]),
        "slice": (lambda: ad.tsum(ad.square(ad.tslice(x, (slice(None), slice(1, 4))))), [x]),
        "reshape": (lambda: ad.tsum(ad.square(ad.reshape(x, (5, 3)))), [x]),
        "stack": (lambda: ad.tsum(ad.square(ad.stack([v, ad.square(v)], axis=0))), [v]),
        # the stopped branch must not depend on the perturbed parameter here;
        # the zero-grad contract itself is asserted in unit tests
        "stop_gradient": (lambda: ad.tsum(ad.mul(ad.stop_gradient(ad.tanh(Tensor(np.ones((3, 5))))), ad.square(x))), [x]),
    }
    return cases


def _network_cases(rng):
    mlp = MLP([5, 8, 8, 3], activation="elu", out_activation="tanh",
              rng=rng, name="net")
    x = np.asarray(rng.normal(size=(4, 5)))

    def f_mlp():
        return ad.tsum(ad.square(mlp(Tensor(x))))

    model = ValueEquivalentModel(obs_dim=6, goal_dim=3, action_dim=2,
                                 state_dim=4, hidden=8, option_mode=True, rng=rng)
    obs = rng.normal(size=(3, 6))
    g = rng.normal(size=(3, 3))
    a = rng.uniform(-1, 1, size=(3, 2))

    def f_model():
        s = model.encode(Tensor(obs))
        r, dur = model.reward(s, Tensor(g), Tensor(a))
        s2 = model.dynamics(s, Tensor(g), Tensor(a))
        v = model.value(s2, Tensor(g))
        return ad.tsum(r) + ad.tsum(v) + ad.tsum(dur)

    return {
        "mlp": (f_mlp, mlp.params()),
        "value_model": (f_model, model.params()),
    }


def _planner_cases(rng):
    cases = {}
    for option_mode in (False, True):
        for K, D in ((1, 1), (2, 2), (3, 2)):
            model = ValueEquivalentModel(obs_dim=5, goal_dim=2, action_dim=2,
                                         state_dim=4, hidden=8,
                                         option_mode=option_mode, rng=rng)
            afford = AffordanceModule("GA", K, state_dim=4, goal_dim=2,
                                      action_dim=2, hidden=8, rng=rng)
            obs = rng.normal(size=(2, 5))
            g = rng.normal(size=(2, 2))
            cfg = PlannerConfig(mode="complete", depth=D, tau=1.0, gamma=0.9)

            def f(model=model, afford=afford, obs=obs, g=g, cfg=cfg):
                obj, _ = affordance_objective(obs, g, model, afford, cfg)
                return obj

            tag = f"planner_K{K}_D{D}_{'option' if option_mode else 'primitive'}"
            cases[tag] = (f, afford.params())
    # visit-count weights through a UCT tree
    model = ValueEquivalentModel(obs_dim=5, goal_dim=2, action_dim=2,
                                 state_dim=4, hidden=8, option_mode=False, rng=rng)
    afford = AffordanceModule("GA", 3, state_dim=4, goal_dim=2,
                              action_dim=2, hidden=8, rng=rng)
    obs = rng.normal(size=(1, 5))
    g = rng.normal(size=(1, 2))
    cfg = PlannerConfig(mode="uct", depth=2, trajectories=10, gamma=0.9)

    def f_uct():
        obj, _ = affordance_objective(obs, g, model, afford, cfg,
                                      rng=np.random.default_rng(7))
        return obj

    cases["planner_uct_visitcount"] = (f_uct, afford.params())
    return cases


def run_suite(seed=0):
    """Returns {name: (max_rel_err, threshold)} for the whole gradcheck suite."""
    rng = np.random.default_rng(seed)
    results = {}
    for name, (f, params) in _op_cases(rng).items():
        results[name] = (max_rel_error(f, params), 1e-4)
    for name, (f, params) in _network_cases(rng).items():
        results[name] = (max_rel_error(f, params), 1e-4)
    for name, (f, params) in _planner_cases(rng).items():
        results[name] = (max_rel_error(f, params), 1e-3)
    return results
