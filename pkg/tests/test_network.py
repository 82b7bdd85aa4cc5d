import json
import random
from fractions import Fraction as F

import pytest
from hypothesis import given, strategies as st

from mosaicverify.network import (Network, NetworkFormatError, constant_network, halfspace_holds,
                                  random_network)

from conftest import FIXTURES


class TestLoad:
    def test_identity(self, identity_net):
        assert (identity_net.n_inputs, identity_net.n_outputs, identity_net.n_relu) == (1, 1, 0)

    def test_abs(self, abs_net):
        assert (abs_net.n_inputs, abs_net.n_outputs, abs_net.n_relu) == (1, 1, 2)

    def test_relu_last_layer(self):
        with pytest.raises(NetworkFormatError, match="last layer must be linear"):
            Network.from_json({"layers": [{"weights": [[1]], "bias": [0], "activation": "relu"}]})

    @pytest.mark.parametrize("doc", [
        "not json",
        {"layers": [{"weights": [[1, 2]], "bias": [0, 0], "activation": "linear"}]},
        {"layers": [{"weights": [[1]], "bias": [0], "activation": "tanh"}]},
        {"layers": [{"weights": [[1]], "bias": [0], "activation": "relu"},
                    {"weights": [[1, 1]], "bias": [0], "activation": "linear"}]},
        {"layers": [{"weights": [[1]], "activation": "linear"}]},
        {"nodes": []},
    ])
    def test_schema_errors(self, doc):
        with pytest.raises(NetworkFormatError):
            Network.from_json(doc if isinstance(doc, str) else json.dumps(doc))

    def test_decimals_exact(self):
        net = Network.from_json({"layers": [{"weights": [["0.1"]], "bias": [0.2], "activation": "linear"}]})
        assert net.evaluate([F(1)]) == [F(3, 10)]

    def test_json_round_trip(self):
        net = random_network([3, 5, 4, 2], seed=4)
        again = Network.from_json(json.dumps(net.to_json()))
        assert again.layers == net.layers

    def test_fixtures_load(self):
        for p in FIXTURES.glob("*.json"):
            Network.load(p)


class TestEvaluate:
    def test_abs(self, abs_net):
        assert abs_net.evaluate([F(1, 2)]) == [F(1, 2)]
        assert abs_net.evaluate([F(-2)]) == [F(2)]

    def test_identity(self, identity_net):
        assert identity_net.evaluate([F(7, 3)]) == [F(7, 3)]

    def test_arity(self, abs_net):
        with pytest.raises(ValueError):
            abs_net.evaluate([1, 2])

    def test_constant(self):
        assert constant_network(2, [-100]).evaluate([3, 4]) == [-100]


class TestPattern:
    def test_abs(self, abs_net):
        assert abs_net.pattern([F(1, 2)]) == (True, False)
        assert abs_net.pattern([F(0)]) == (True, True)

    def test_identity(self, identity_net):
        assert identity_net.pattern([F(5)]) == ()


class TestLocalAffine:
    def test_abs_active_inactive(self, abs_net):
        A, b, cell = abs_net.local_affine((True, False))
        assert (A, b) == ([[1]], [0])
        assert all(halfspace_holds(h, [F(1, 3)]) for h in cell)
        assert not all(halfspace_holds(h, [F(-1, 3)]) for h in cell)

    def test_abs_inactive_active(self, abs_net):
        A, b, cell = abs_net.local_affine((False, True))
        assert (A, b) == ([[-1]], [0])
        assert all(halfspace_holds(h, [F(-1, 3)]) for h in cell)
        assert not all(halfspace_holds(h, [F(1, 3)]) for h in cell)

    def test_identity(self, identity_net):
        A, b, cell = identity_net.local_affine(())
        assert (A, b, cell) == ([[1]], [0], [])

    def test_wrong_length(self, abs_net):
        with pytest.raises(ValueError):
            abs_net.local_affine((True,))


nets = st.builds(lambda dims, seed: random_network(dims, seed=seed),
                 st.lists(st.integers(1, 5), min_size=3, max_size=4), st.integers(0, 10 ** 6))


@given(nets, st.randoms(use_true_random=False))
def test_consistency_and_membership(net, rnd):
    for _ in range(40):
        z = [F(rnd.randint(-300, 300), 100) for _ in range(net.n_inputs)]
        pat = net.pattern(z)
        A, b, cell = net.local_affine(pat)
        omega = [sum((a * v for a, v in zip(row, z)), F(0)) + c for row, c in zip(A, b)]
        assert omega == net.evaluate(z)
        assert all(halfspace_holds(h, z) for h in cell)


def test_consistency_many_points():
    net = random_network([2, 6, 6, 2], seed=9)
    rng = random.Random(1)
    seen = set()
    for _ in range(10000):
        z = [F(rng.randint(-1000, 1000), 500) for _ in range(2)]
        pat = net.pattern(z)
        seen.add(pat)
        A, b, _ = net.local_affine(pat)
        assert [sum((a * v for a, v in zip(row, z)), F(0)) + c for row, c in zip(A, b)] == net.evaluate(z)
    assert len(seen) <= 2 ** net.n_relu
