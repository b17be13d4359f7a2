import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from deformed_ldp.errors import AtomCollision, ConfigError, UnboundedQuantile
from deformed_ldp.measure import (AtomicMeasure, QuantileSpec, discretize,
                                  load_measure, measure_from_dict)


def test_atoms_sorted_and_edge():
    nu = AtomicMeasure([(2.0, 0.25), (-1.0, 0.75)])
    assert nu.atoms() == [(-1.0, 0.75), (2.0, 0.25)]
    assert nu.support_edge == -1.0


def test_weights_must_sum_to_one():
    with pytest.raises(ConfigError):
        AtomicMeasure([(0.0, 0.5), (1.0, 0.4)])
    # within tolerance: renormalized
    nu = AtomicMeasure([(0.0, 0.5), (1.0, 0.5 + 5e-10)])
    assert math.isclose(nu.weights.sum(), 1.0, abs_tol=1e-15)


def test_rejects_nonpositive_weight():
    with pytest.raises(ConfigError):
        AtomicMeasure([(0.0, 1.0), (1.0, 0.0)])


def test_merges_near_duplicates():
    nu = AtomicMeasure([(0.0, 0.5), (1e-13, 0.5)])
    assert len(nu) == 1 and nu.weights[0] == 1.0


def test_immutable():
    nu = AtomicMeasure.dirac(0.0)
    with pytest.raises(AttributeError):
        nu.locations = np.array([1.0])
    with pytest.raises(ValueError):
        nu.locations[0] = 3.0


def test_stieltjes_and_derivative(two_atoms):
    # direct sums: 0.5/(-3+1) + 0.5/(-3-1)
    assert two_atoms.stieltjes(-3.0) == pytest.approx(-0.375, abs=1e-15)
    assert two_atoms.stieltjes_derivative(-3.0) == pytest.approx(
        -(0.5 / 4 + 0.5 / 16), abs=1e-15)
    assert two_atoms.log_potential(-3.0) == pytest.approx(
        -(0.5 * math.log(2) + 0.5 * math.log(4)), abs=1e-15)


def test_collision():
    with pytest.raises(AtomCollision):
        AtomicMeasure.dirac(1.0).stieltjes(1.0)


def test_discretize_uniform_examples():
    q = QuantileSpec.uniform(0.0, 1.0)
    assert discretize(q, 0.5, "lower").atoms() == [(0.0, 0.5), (0.5, 0.5)]
    assert discretize(q, 0.5, "upper").atoms() == [(0.5, 0.5), (1.0, 0.5)]


def test_discretize_roundtrip_on_grid():
    nu = AtomicMeasure([(0.0, 0.2), (0.5, 0.3), (1.5, 0.5)])
    for side in ("lower", "upper"):
        back = discretize(nu.quantile_table(), 0.25, side)
        assert np.allclose(back.locations, nu.locations)
        assert np.allclose(back.weights, nu.weights)


def test_unbounded_quantile():
    with pytest.raises(UnboundedQuantile):
        QuantileSpec.uniform(0.0, math.inf)
    with pytest.raises(UnboundedQuantile):
        QuantileSpec.table([(0.0, -math.inf), (1.0, 0.0)])


@settings(max_examples=60, deadline=None)
@given(a=st.floats(-3, 3), width=st.floats(0.01, 4), eps=st.floats(0.05, 1.0),
       side=st.sampled_from(["lower", "upper"]))
def test_discretized_quantile_within_eps(a, width, eps, side):
    q = QuantileSpec.uniform(a, a + width)
    d = discretize(q, eps, side).quantile_table()
    for u in np.linspace(0.0, 0.999, 97):
        diff = d.value(u) - q.value(u)
        assert abs(diff) <= eps + 1e-9
        # floor map moves mass down, ceiling map moves it up
        assert (diff <= 1e-9) if side == "lower" else (diff >= -1e-9)


def test_json_forms(tmp_path):
    p = tmp_path / "m.json"
    p.write_text('{"atoms": [[-1, 0.5], [1, 0.5]]}')
    assert load_measure(p).atoms() == [(-1.0, 0.5), (1.0, 0.5)]
    nu = measure_from_dict({"quantile": {"table": [[0, 0], [1, 1]]},
                            "eps": 0.5, "side": "upper"})
    assert nu.atoms() == [(0.5, 0.5), (1.0, 0.5)]
    with pytest.raises(ConfigError):
        measure_from_dict({"quantile": {"uniform": [0, 1]}})
    with pytest.raises(ConfigError):
        load_measure(tmp_path / "missing.json")
