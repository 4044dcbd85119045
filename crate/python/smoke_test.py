"""Smoke test for the dichotomy extension module.

Build first: pip install --no-build-isolation -e crates/python
"""

import math
import tempfile

import dichotomy


def main():
    c = dichotomy.Cocycle.diagonal([math.exp(-1.0)], [math.exp(0.5)], 20)
    assert c.dims == (1, 1)
    stable, unstable = c.transition(5, 2)
    assert abs(stable[0][0] - math.exp(-3.0)) < 1e-14
    assert abs(unstable[0][0] - math.exp(1.5)) < 1e-12
    inv = c.inverse_on_unstable(5, 2)
    assert abs(inv[0][0] - math.exp(-1.5)) < 1e-14

    b = dichotomy.BoundFamily.exponential(1.0, -1.0, 0.5, 0.1)
    assert abs(b.bound_a(4, 1) - math.exp(-3.0 + 0.1)) < 1e-14
    assert dichotomy.BoundFamily.from_json(b.to_json()).to_json() == b.to_json()

    g = dichotomy.gate_global(0.1, 0.04)
    assert abs(g["value"] - 0.4) < 1e-15 and g["passed"]
    assert not dichotomy.gate_local(0.2, 0.04)["passed"]

    assert "exponential" in dichotomy.PRESETS
    s = dichotomy.Scenario.preset("exponential")
    assert dichotomy.Scenario.from_toml(s.to_toml()).fingerprint() == s.fingerprint()
    with tempfile.TemporaryDirectory() as out:
        cert = s.certify(out=out, horizon=30)
        assert cert["exit_code"] == 0 and cert["certificate"]["admissible"]
        solved = s.solve(out=out, horizon=30)
        assert solved["exit_code"] == 0, solved["messages"]
        checked = s.verify(out=out, horizon=30)
        assert checked["exit_code"] == 0, checked["messages"]
        phi = dichotomy.Manifold.load(f"{out}/manifold.json")
        assert phi.last_time == 31
        assert len(phi.eval(1, [0.0])) == 1
        assert phi.max_lipschitz() < 1.0

    try:
        dichotomy.Scenario.preset("missing")
    except ValueError:
        pass
    else:
        raise AssertionError("unknown preset accepted")
    print("smoke test passed")


if __name__ == "__main__":
    main()
