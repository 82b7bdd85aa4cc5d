"""Feed-forward ReLU networks with exact rational weights."""
from __future__ import annotations

import json
import random
from dataclasses import dataclass
from fractions import Fraction
from typing import List, Optional, Sequence, Tuple

from ._rational import Q, frac, parse_rational

ACTIVATIONS = ("relu", "linear")


class NetworkFormatError(ValueError):
    pass


# coeffs . z  rel  rhs
HalfSpace = Tuple[Tuple[Fraction, ...], str, Fraction]


@dataclass(frozen=True)
class Layer:
    weights: Tuple[Tuple[Fraction, ...], ...]
    bias: Tuple[Fraction, ...]
    activation: str

    @property
    def n_in(self) -> int:
        return len(self.weights[0]) if self.weights else 0

    @property
    def n_out(self) -> int:
        return len(self.weights)


class Network:
    """Layers ``x <- f(W x + b)``; the last layer must be linear."""

    def __init__(self, layers: Sequence[Layer], n_inputs: Optional[int] = None):
        if not layers:
            raise NetworkFormatError("network has no layers")
        self.layers = tuple(layers)
        for k, L in enumerate(self.layers):
            if L.activation not in ACTIVATIONS:
                raise NetworkFormatError("layer %d: unsupported activation %r" % (k, L.activation))
            if len(L.bias) != L.n_out:
                raise NetworkFormatError("layer %d: bias has %d entries, expected %d"
                                         % (k, len(L.bias), L.n_out))
            if any(len(row) != L.n_in for row in L.weights):
                raise NetworkFormatError("layer %d: ragged weight matrix" % k)
            if k and L.n_in != self.layers[k - 1].n_out:
                raise NetworkFormatError("layer %d: expects %d inputs but layer %d has %d outputs"
                                         % (k, L.n_in, k - 1, self.layers[k - 1].n_out))
        if self.layers[-1].activation != "linear":
            raise NetworkFormatError("last layer must be linear")
        self.n_inputs = self.layers[0].n_in if n_inputs is None else n_inputs
        self.n_outputs = self.layers[-1].n_out
        self.n_relu = sum(L.n_out for L in self.layers if L.activation == "relu")
        # engine-typed copies for fast exact evaluation
        self._qlayers = [([[Q(w) for w in row] for row in L.weights], [Q(b) for b in L.bias],
                          L.activation == "relu") for L in self.layers]

    # I/O ------------------------------------------------------------------
    @staticmethod
    def from_json(data) -> "Network":
        if isinstance(data, (bytes, str)):
            try:
                data = json.loads(data)
            except json.JSONDecodeError as e:
                raise NetworkFormatError("invalid JSON: %s" % e) from None
        if not isinstance(data, dict) or not isinstance(data.get("layers"), list):
            raise NetworkFormatError("expected an object with a 'layers' list")
        layers = []
        for k, L in enumerate(data["layers"]):
            if not isinstance(L, dict):
                raise NetworkFormatError("layer %d is not an object" % k)
            for key in ("weights", "bias", "activation"):
                if key not in L:
                    raise NetworkFormatError("layer %d: missing %r" % (k, key))
            try:
                W = tuple(tuple(parse_rational(w) for w in row) for row in L["weights"])
                b = tuple(parse_rational(x) for x in L["bias"])
            except (TypeError, ValueError, ZeroDivisionError) as e:
                raise NetworkFormatError("layer %d: bad number (%s)" % (k, e)) from None
            if not W:
                raise NetworkFormatError("layer %d: empty weight matrix" % k)
            layers.append(Layer(W, b, L["activation"]))
        return Network(layers)

    @staticmethod
    def load(path) -> "Network":
        with open(path, "rb") as fh:
            return Network.from_json(fh.read())

    def to_json(self) -> dict:
        def num(x):
            x = frac(x)
            return x.numerator if x.denominator == 1 else "%d/%d" % (x.numerator, x.denominator)
        return {"layers": [{"weights": [[num(w) for w in row] for row in L.weights],
                            "bias": [num(b) for b in L.bias],
                            "activation": L.activation} for L in self.layers]}

    # evaluation -------------------------------------------------------------
    def _forward(self, z):
        if len(z) != self.n_inputs:
            raise ValueError("expected %d inputs, got %d" % (self.n_inputs, len(z)))
        x = [Q(v) for v in z]
        pattern = []
        for W, b, relu in self._qlayers:
            pre = [sum((w * v for w, v in zip(row, x)), bi) for row, bi in zip(W, b)]
            if relu:
                pattern.extend(p >= 0 for p in pre)
                x = [p if p >= 0 else Q(0) for p in pre]
            else:
                x = pre
        return x, pattern

    def evaluate(self, z: Sequence) -> List[Fraction]:
        """Exact forward pass."""
        return [frac(v) for v in self._forward(z)[0]]

    def evaluate_q(self, z: Sequence) -> list:
        """Forward pass returning engine numbers (no conversion)."""
        return self._forward(z)[0]

    def pattern(self, z: Sequence) -> Tuple[bool, ...]:
        """Activation pattern; a pre-activation of exactly 0 counts as active."""
        return tuple(self._forward(z)[1])

    def local_affine(self, pattern: Sequence[bool]):
        """``(A, b, cell)`` such that ``net(z) = A z + b`` for every z in ``cell``.

        ``cell`` is a list of half-spaces over the inputs: ``pre >= 0`` for
        active neurons and ``pre <= 0`` for inactive ones.
        """
        if len(pattern) != self.n_relu:
            raise ValueError("pattern has %d entries, network has %d ReLUs" % (len(pattern), self.n_relu))
        n = self.n_inputs
        A = [[Q(1) if i == j else Q(0) for j in range(n)] for i in range(n)]
        c = [Q(0)] * n
        cell: List[HalfSpace] = []
        k = 0
        for W, b, relu in self._qlayers:
            newA = []
            newc = []
            for row, bi in zip(W, b):
                ra = [sum((w * A[i][j] for i, w in enumerate(row) if w), Q(0)) for j in range(n)]
                rc = sum((w * c[i] for i, w in enumerate(row) if w), bi)
                newA.append(ra)
                newc.append(rc)
            if relu:
                for i in range(len(newA)):
                    coeffs = tuple(frac(v) for v in newA[i])
                    if pattern[k]:
                        cell.append((coeffs, ">=", frac(-newc[i])))
                    else:
                        cell.append((coeffs, "<=", frac(-newc[i])))
                        newA[i] = [Q(0)] * n
                        newc[i] = Q(0)
                    k += 1
            A, c = newA, newc
        return ([[frac(v) for v in row] for row in A], [frac(v) for v in c], cell)

    def __repr__(self):
        dims = [self.n_inputs] + [L.n_out for L in self.layers]
        return "Network(%s)" % "x".join(map(str, dims))


def halfspace_holds(h: HalfSpace, z: Sequence) -> bool:
    coeffs, rel, rhs = h
    v = sum((a * x for a, x in zip(coeffs, z)), Fraction(0))
    return {"<=": v <= rhs, ">=": v >= rhs, "<": v < rhs, ">": v > rhs, "=": v == rhs}[rel]


def constant_network(n_inputs: int, values: Sequence) -> Network:
    """A single linear layer ignoring its inputs."""
    W = tuple(tuple(Fraction(0) for _ in range(n_inputs)) for _ in values)
    return Network([Layer(W, tuple(frac(v) for v in values), "linear")])


def random_network(dims: Sequence[int], seed: int = 0, scale: Fraction = Fraction(1),
                   denominator: int = 100) -> Network:
    """Random ReLU network with rational weights ``k/denominator``.

    ``dims`` is ``[inputs, hidden..., outputs]``; weights are drawn
    uniformly from ``[-scale, scale]`` scaled by ``1/sqrt(fan_in)`` (rounded).
    """
    rng = random.Random(seed)
    layers = []
    for k in range(len(dims) - 1):
        fan_in = dims[k]
        lim = float(scale) / max(1.0, fan_in ** 0.5)
        W = tuple(tuple(Fraction(round(rng.uniform(-lim, lim) * denominator), denominator)
                        for _ in range(fan_in)) for _ in range(dims[k + 1]))
        b = tuple(Fraction(round(rng.uniform(-lim, lim) * denominator), denominator)
                  for _ in range(dims[k + 1]))
        act = "linear" if k == len(dims) - 2 else "relu"
        layers.append(Layer(W, b, act))
    return Network(layers)
