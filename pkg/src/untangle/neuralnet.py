"""Forward evaluation of plain feed-forward networks

    Phi(x) = T_L o sigma o T_{L-1} o ... o sigma o T_1 (x),   T_i(y) = W_i y + b_i

with a single componentwise activation between affine layers.  Evaluation is
double precision with a fixed accumulation order (bias, then columns left to
right), so outputs are bit-stable across runs.

Weight documents are JSON::

    {"activation": {"kind": "leaky_relu", "params": {"alpha": "0.0001"}},
     "layers": [{"rows": 3, "cols": 2, "weights": [...row-major...], "bias": [...]}]}

Entries may be JSON numbers, decimal strings, or radicals such as
``"sqrt(6)/6"`` or ``"-2*sqrt(3)/5"``.
"""
from __future__ import annotations

import json
import math
import re
from dataclasses import dataclass
from importlib import resources
from typing import Callable

import numpy as np

from .errors import DocumentError, InvalidParameters, ShapeError
from .geometry import PointCloud, as_points

_NUM = r"\d+(?:\.\d+)?"
_RADICAL = re.compile(
    rf"^(?P<sign>[+-])?(?:(?P<coef>{_NUM})\*)?sqrt\((?P<rad>{_NUM})\)(?:/(?P<den>{_NUM}))?$"
)


@dataclass(frozen=True)
class Activation:
    kind: str  # relu | leaky_relu | elu | selu
    alpha: float = 0.0
    lam: float = 1.0

    def __post_init__(self):
        if self.kind == "relu":
            return
        if self.kind == "leaky_relu":
            if not 0 < self.alpha < 1:
                raise InvalidParameters("Leaky-ReLU needs 0 < alpha < 1")
        elif self.kind == "elu":
            if not self.alpha > 0:
                raise InvalidParameters("ELU needs alpha > 0")
        elif self.kind == "selu":
            if not (self.alpha > 0 and self.lam > 0):
                raise InvalidParameters("SELU needs lambda > 0 and alpha > 0")
        else:
            raise InvalidParameters(f"unknown activation {self.kind!r}")

    def __call__(self, x):
        x = np.asarray(x, dtype=float)
        neg = x < 0
        if self.kind == "relu":
            return np.where(neg, 0.0, x)
        if self.kind == "leaky_relu":
            return np.where(neg, self.alpha * x, x)
        tail = self.alpha * np.expm1(np.where(neg, x, 0.0))
        out = np.where(neg, tail, x)
        return self.lam * out if self.kind == "selu" else out

    def to_dict(self):
        params = {}
        if self.kind in ("leaky_relu", "elu", "selu"):
            params["alpha"] = self.alpha
        if self.kind == "selu":
            params["lambda"] = self.lam
        return {"kind": self.kind, "params": params}


def ReLU():
    return Activation("relu")


def LeakyReLU(alpha):
    return Activation("leaky_relu", float(alpha))


def ELU(alpha=1.0):
    return Activation("elu", float(alpha))


def SELU(lam, alpha):
    return Activation("selu", float(alpha), float(lam))


def activation_eval(k: Activation, x):
    out = k(x)
    return float(out) if np.ndim(out) == 0 else out


@dataclass(frozen=True, eq=False)
class AffineLayer:
    weights: np.ndarray
    bias: np.ndarray

    def __post_init__(self):
        W = np.array(self.weights, dtype=float)
        b = np.array(self.bias, dtype=float).reshape(-1)
        if W.ndim != 2 or W.shape[0] != b.size:
            raise ShapeError(f"weights {W.shape} incompatible with bias of length {b.size}")
        W.flags.writeable = False
        b.flags.writeable = False
        object.__setattr__(self, "weights", W)
        object.__setattr__(self, "bias", b)

    @property
    def shape(self):
        return self.weights.shape

    def __call__(self, Y: np.ndarray) -> np.ndarray:
        W = self.weights
        out = np.broadcast_to(self.bias, (Y.shape[0], W.shape[0])).copy()
        for j in range(W.shape[1]):
            out += Y[:, j:j + 1] * W[:, j]
        return out


@dataclass(frozen=True, eq=False)
class Network:
    layers: tuple
    activation: Activation
    name: str = ""

    def __post_init__(self):
        layers = tuple(self.layers)
        if not layers:
            raise ShapeError("a network needs at least one affine layer")
        for i in range(1, len(layers)):
            if layers[i].shape[1] != layers[i - 1].shape[0]:
                raise ShapeError(
                    f"layer {i + 1} expects {layers[i].shape[1]} inputs, "
                    f"layer {i} gives {layers[i - 1].shape[0]}")
        object.__setattr__(self, "layers", layers)

    @property
    def dims(self) -> list[int]:
        return [self.layers[0].shape[1]] + [l.shape[0] for l in self.layers]

    @property
    def in_dim(self) -> int:
        return self.dims[0]

    @property
    def out_dim(self) -> int:
        return self.dims[-1]

    def __call__(self, X) -> np.ndarray:
        X = np.asarray(X, dtype=float)
        single = X.ndim == 1
        Y = X.reshape(1, -1) if single else X
        if Y.ndim != 2 or Y.shape[1] != self.in_dim:
            raise ShapeError(f"network expects inputs of dimension {self.in_dim}")
        last = len(self.layers) - 1
        for i, layer in enumerate(self.layers):
            Y = layer(Y)
            if i < last:
                Y = self.activation(Y)
        return Y[0] if single else Y

    def to_document(self) -> dict:
        return {
            "name": self.name,
            "activation": self.activation.to_dict(),
            "layers": [
                {"rows": l.shape[0], "cols": l.shape[1],
                 "weights": l.weights.reshape(-1).tolist(), "bias": l.bias.tolist()}
                for l in self.layers
            ],
        }


def network_eval(n: Network, x) -> np.ndarray:
    return n(x)


def network_width(n: Network) -> int:
    if len(n.layers) < 2:
        raise ShapeError("network has no hidden layers")
    return max(n.dims[1:-1])


def sup_error(n: Network, reference: Callable, samples: PointCloud) -> float:
    """Largest Euclidean gap between ``n`` and ``reference`` over the samples."""
    X = samples.points
    got = n(X)
    want = as_points(reference(X))
    if want.shape != got.shape:
        raise ShapeError(f"reference output {want.shape} vs network output {got.shape}")
    return float(np.linalg.norm(got - want, axis=1).max())


def parse_entry(tok) -> float:
    """Exact-as-possible float for a document entry."""
    if isinstance(tok, bool):
        raise DocumentError(f"boolean is not a weight: {tok!r}")
    if isinstance(tok, (int, float)):
        return float(tok)
    if not isinstance(tok, str):
        raise DocumentError(f"cannot parse weight entry {tok!r}")
    s = tok.replace(" ", "")
    m = _RADICAL.match(s)
    if m:
        val = math.sqrt(float(m["rad"]))
        if m["coef"]:
            val *= float(m["coef"])
        if m["den"]:
            val /= float(m["den"])
        return -val if m["sign"] == "-" else val
    try:
        val = float(s)
    except ValueError:
        raise DocumentError(f"cannot parse weight entry {tok!r}") from None
    if not math.isfinite(val):
        raise DocumentError(f"non-finite weight entry {tok!r}")
    return val


def _activation_from(doc) -> Activation:
    try:
        kind = doc["kind"]
        params = doc.get("params", {})
    except (TypeError, KeyError, AttributeError):
        raise DocumentError("malformed activation block") from None
    kind = {"leakyrelu": "leaky_relu", "leaky-relu": "leaky_relu"}.get(kind.lower(), kind.lower())
    if kind not in ("relu", "leaky_relu", "elu", "selu"):
        raise DocumentError(f"unknown activation {doc['kind']!r}")
    alpha = parse_entry(params.get("alpha", 0.0 if kind == "relu" else 1.0))
    lam = parse_entry(params.get("lambda", 1.0))
    try:
        return Activation(kind, alpha, lam)
    except InvalidParameters as exc:
        raise DocumentError(str(exc)) from None


def load_network(document) -> Network:
    """Build a :class:`Network` from a weight document (dict or JSON text)."""
    if isinstance(document, (str, bytes)):
        try:
            document = json.loads(document)
        except json.JSONDecodeError as exc:
            raise DocumentError(f"invalid JSON: {exc}") from None
    if not isinstance(document, dict) or "layers" not in document or "activation" not in document:
        raise DocumentError("weight document needs 'activation' and 'layers'")
    act = _activation_from(document["activation"])
    layers = []
    for i, spec in enumerate(document["layers"], start=1):
        try:
            rows, cols = int(spec["rows"]), int(spec["cols"])
            w = [parse_entry(t) for t in spec["weights"]]
            b = [parse_entry(t) for t in spec["bias"]]
        except (KeyError, TypeError) as exc:
            raise DocumentError(f"layer {i}: malformed ({exc})") from None
        if len(w) != rows * cols or len(b) != rows:
            raise ShapeError(f"layer {i}: expected {rows}x{cols} weights and {rows} biases")
        layers.append(AffineLayer(np.array(w).reshape(rows, cols), b))
    return Network(tuple(layers), act, str(document.get("name", "")))


def fixture_document(name: str) -> dict:
    try:
        text = resources.files("untangle.fixtures").joinpath(f"{name}.json").read_text()
    except FileNotFoundError:
        raise DocumentError(f"no built-in network named {name!r}") from None
    return json.loads(text)


def load_fixture(name: str) -> Network:
    """Built-in networks: ``toy`` (2-3-3-3-3-3-2, Leaky-ReLU 1e-4) and
    ``hopf`` (3-4-4-4-4-2, ELU 1)."""
    return load_network(fixture_document(name))
