"""Smoke test for the pyprevalence extension module."""

import json
import math

import pyprevalence as pp


def main():
    pos = pp.ProbabilityModel.triangular_up(0.0, 1.0)
    neg = pp.ProbabilityModel.triangular_down(0.0, 1.0)
    assert pos.family == "triangular-up"
    assert abs(pos.pdf(0.25) - 0.5) < 1e-12

    res = pp.optimize(pos, neg, 0.5)
    assert abs(res["q_hat_star"] - 0.5) < 1e-4, res["q_hat_star"]
    assert abs(res["sigma2_star"] - 1.0) < 1e-6, res["sigma2_star"]

    sol = pp.bathtub(pos, neg, 0.5, 0.5)
    assert abs(sol["p_measure"] - 0.75) < 1e-8
    assert abs(sol["n_measure"] - 0.25) < 1e-8

    beta = pp.ProbabilityModel.from_json(json.dumps(
        {"family": "beta", "params": {"a": 2.0, "b": 5.0}, "support": [0.0, 1.0]}))
    model, meta = pp.fit("beta", beta.sample(5000, 3), seed=0)
    assert meta["converged"]
    assert abs(model.params["a"] / 2.0 - 1.0) < 0.1, model.params
    assert abs(model.params["b"] / 5.0 - 1.0) < 0.1, model.params

    domain = json.dumps({"support": [0.0, 1.0], "intervals": [[0.5, 1.0]]})
    est = pp.estimate([0.2, 0.6, 0.9, 0.7], pos, neg, domain_json=domain)
    assert abs(est["q_tilde_raw"] - 1.0) < 1e-12

    scenario = {
        "models": {"positive": json.loads(pos.to_json()), "negative": json.loads(neg.to_json())},
        "q_true": 0.3, "M": 500, "T": 200, "seed": 5, "policy": "optimal-at-true-q",
    }
    rep = pp.simulate(json.dumps(scenario))
    assert rep == pp.simulate(json.dumps(scenario))
    assert math.isfinite(rep["bias_z_score"])

    try:
        pp.ProbabilityModel.beta(-1.0, 2.0, 0.0, 1.0)
    except ValueError:
        pass
    else:
        raise AssertionError("invalid parameters accepted")

    print("smoke test passed")


if __name__ == "__main__":
    main()
