"""Graph networks built from gated walk-count aggregation terms.

A layer forms its message matrix as a sum of gated structural terms,

    M = sum_t sigmoid(theta_t) * Op_t(H),

optionally divides row v by (deg(v) + 1), and feeds the result through a
small combine MLP with LeakyReLU units. Available structural operators:

* ``self_loop_adjacency``: (A + I) @ H, the closed-neighbourhood sum;
* ``power(k)``: A applied k times (walk counts of length k), computed
  by repeated sparse application, never materialising A^k;
* ``diag_power(m)``: row v scaled by the node's closed m-walk count
  (for m = 3, twice its triangle count).

Gates are sigmoid-squashed scalars, so each term's mixing weight lives
in (0, 1); the raw gate parameters start at 0 (weight 0.5). After the
last layer a Sum readout collapses node rows to one vector and a linear
head maps it to the output dimension; a node-level readout that skips
the pooling is available for inspection and tests.
"""

from __future__ import annotations

import json
import os
import tempfile
from dataclasses import dataclass

import numpy as np
from scipy import sparse

from . import autodiff as ad
from .errors import InputError, NumericError
from .graphs import Graph, degrees
from .walks import adjacency_counts, diag_closed_walks

__all__ = [
    "AggregationTerm",
    "self_loop_adjacency",
    "power",
    "diag_power",
    "LayerSpec",
    "ModelSpec",
    "gcn_spec",
    "gcn_l1_spec",
    "gcn_d2_spec",
    "spec_from_model_name",
    "GraphOperators",
    "Model",
    "build_model",
    "forward",
    "save_checkpoint",
    "load_checkpoint",
]

OP_SELF_LOOP = "self_loop_adjacency"
OP_POWER = "power"
OP_DIAG = "diag_power"


@dataclass(frozen=True)
class AggregationTerm:
    """One gated structural operator inside a layer.

    ``k`` is the power exponent for ``power`` terms and the closed-walk
    length for ``diag_power`` terms (odd, >= 3, so the diagonal carries
    cycle rather than degree information). ``weight_index`` selects the
    layer gate that scales this term.
    """

    op: str
    k: int = 1
    weight_index: int = 0

    def __post_init__(self) -> None:
        if self.op not in (OP_SELF_LOOP, OP_POWER, OP_DIAG):
            raise InputError(f"unknown aggregation operator {self.op!r}")
        if self.op == OP_POWER and self.k < 1:
            raise InputError(f"power exponent must be >= 1, got {self.k}")
        if self.op == OP_DIAG and (self.k < 3 or self.k % 2 == 0):
            raise InputError(f"diag_power walk length must be odd and >= 3, got {self.k}")
        if self.weight_index < 0:
            raise InputError(f"weight_index must be >= 0, got {self.weight_index}")


def self_loop_adjacency(weight_index: int = 0) -> AggregationTerm:
    return AggregationTerm(op=OP_SELF_LOOP, k=1, weight_index=weight_index)


def power(k: int, weight_index: int = 0) -> AggregationTerm:
    return AggregationTerm(op=OP_POWER, k=k, weight_index=weight_index)


def diag_power(m: int, weight_index: int = 0) -> AggregationTerm:
    return AggregationTerm(op=OP_DIAG, k=m, weight_index=weight_index)


@dataclass(frozen=True)
class LayerSpec:
    """Terms plus the combine MLP shape.

    ``mlp_depth`` 0 means identity combine (no parameters); 1 is a single
    linear map with LeakyReLU; 2 inserts a hidden layer of width
    ``mlp_hidden`` (the model's hidden width when None). Dropout, when
    enabled at training time, acts on the depth-2 hidden activations.
    """

    terms: tuple[AggregationTerm, ...]
    mlp_depth: int = 2
    mlp_hidden: int | None = None
    leaky_slope: float = 0.01
    degree_normalize: bool = False

    def __post_init__(self) -> None:
        if not self.terms:
            raise InputError("layer needs at least one aggregation term")
        if self.mlp_depth not in (0, 1, 2):
            raise InputError(f"mlp_depth must be 0, 1, or 2, got {self.mlp_depth}")
        if self.mlp_hidden is not None and self.mlp_hidden < 1:
            raise InputError(f"mlp_hidden must be >= 1, got {self.mlp_hidden}")

    def gate_count(self) -> int:
        return max(t.weight_index for t in self.terms) + 1


@dataclass(frozen=True)
class ModelSpec:
    """Layer stack, readout kind, and output dimension.

    ``readout`` is ``"sum"`` (pool rows, then a linear head unless
    ``head`` is False) or ``"node"`` (per-node outputs, no pooling).
    """

    layers: tuple[LayerSpec, ...]
    readout: str = "sum"
    output_dim: int = 1
    head: bool = True

    def __post_init__(self) -> None:
        if not self.layers:
            raise InputError("model needs at least one layer")
        if self.readout not in ("sum", "node"):
            raise InputError(f"readout must be 'sum' or 'node', got {self.readout!r}")
        if self.output_dim < 1:
            raise InputError(f"output_dim must be >= 1, got {self.output_dim}")


def gcn_spec(num_layers: int = 2, degree_normalize: bool = False) -> ModelSpec:
    """Plain closed-neighbourhood model: each layer sums over N(v) + v."""
    layer = LayerSpec(terms=(self_loop_adjacency(0),), degree_normalize=degree_normalize)
    return ModelSpec(layers=(layer,) * num_layers)


def gcn_l1_spec(num_layers: int = 1, degree_normalize: bool = False) -> ModelSpec:
    """Adds a closed-3-walk diagonal term next to the neighbourhood sum."""
    layer = LayerSpec(
        terms=(self_loop_adjacency(0), diag_power(3, 1)),
        degree_normalize=degree_normalize,
    )
    return ModelSpec(layers=(layer,) * num_layers)


def gcn_d2_spec(num_layers: int = 1, degree_normalize: bool = False) -> ModelSpec:
    """L1 terms plus a two-step walk term (A applied twice)."""
    layer = LayerSpec(
        terms=(self_loop_adjacency(0), diag_power(3, 1), power(2, 2)),
        degree_normalize=degree_normalize,
    )
    return ModelSpec(layers=(layer,) * num_layers)


def spec_from_model_name(name: str, degree_normalize: bool = False) -> ModelSpec:
    """Parse names like GCN-2L, GCN-L1-1L, GCN-D2-1L into specs."""
    parts = name.strip().upper().split("-")
    if not parts or parts[0] != "GCN" or len(parts) < 2 or not parts[-1].endswith("L"):
        raise InputError(f"unknown model name {name!r}")
    try:
        num_layers = int(parts[-1][:-1])
    except ValueError as exc:
        raise InputError(f"unknown model name {name!r}") from exc
    if num_layers < 1:
        raise InputError(f"model {name!r} needs at least one layer")
    family = "-".join(parts[1:-1])
    if family == "":
        return gcn_spec(num_layers, degree_normalize)
    if family == "L1":
        return gcn_l1_spec(num_layers, degree_normalize)
    if family == "D2":
        return gcn_d2_spec(num_layers, degree_normalize)
    raise InputError(f"unknown model name {name!r}")


class GraphOperators:
    """Cached per-graph structure matrices the aggregation terms consume.

    Gradients never flow into these; they are fixed functions of the
    graph, built once and shared by every forward pass on it.
    """

    def __init__(self, g: Graph):
        self.graph = g
        self._cache: dict = {}

    def adjacency(self):
        if "adj" not in self._cache:
            self._cache["adj"] = sparse.csr_array(
                adjacency_counts(self.graph).astype(np.float64)
            )
        return self._cache["adj"]

    def adjacency_with_loops(self):
        if "adj_loops" not in self._cache:
            self._cache["adj_loops"] = sparse.csr_array(
                adjacency_counts(self.graph, with_self_loops=True).astype(np.float64)
            )
        return self._cache["adj_loops"]

    def closed_walk_diag(self, m: int) -> np.ndarray:
        key = ("diag", m)
        if key not in self._cache:
            self._cache[key] = diag_closed_walks(self.graph, m).astype(np.float64)
        return self._cache[key]

    def inv_degree_plus_one(self) -> np.ndarray:
        if "inv_deg" not in self._cache:
            d = np.asarray(degrees(self.graph), dtype=np.float64)
            self._cache["inv_deg"] = 1.0 / (d + 1.0)
        return self._cache["inv_deg"]


class Model:
    """A spec bound to concrete parameters.

    ``params`` maps stable names (creation order is deterministic) to
    trainable tensors; freeze one by clearing its ``trainable`` flag.
    """

    def __init__(self, spec: ModelSpec, input_dim: int, hidden_dim: int,
                 params: dict[str, ad.Tensor]):
        self.spec = spec
        self.input_dim = input_dim
        self.hidden_dim = hidden_dim
        self.params = params

    def trainable(self) -> dict[str, ad.Tensor]:
        return {k: p for k, p in self.params.items() if p.trainable}

    def mlp_weight_tensors(self) -> list[ad.Tensor]:
        """Weight matrices covered by the L2 penalty (gates and biases excluded)."""
        return [p for k, p in self.params.items()
                if k.endswith(".w0") or k.endswith(".w1") or k == "head.w"]

    def param_values(self) -> dict[str, np.ndarray]:
        return {k: p.value.copy() for k, p in self.params.items()}

    def load_param_values(self, values: dict[str, np.ndarray]) -> None:
        for k, v in values.items():
            self.params[k].value = np.array(v, dtype=np.float64)


def _layer_widths(spec: ModelSpec, input_dim: int, hidden_dim: int) -> list[int]:
    widths = [input_dim]
    for layer in spec.layers:
        widths.append(hidden_dim if layer.mlp_depth > 0 else widths[-1])
    return widths


def build_model(spec: ModelSpec, input_dim: int, hidden_dim: int, seed) -> Model:
    """Create a model with fresh parameters.

    Gates start at 0 (mixing weight 0.5); linear maps draw uniformly
    from +-1/sqrt(fan_in). Parameter creation order, and therefore the
    RNG stream, is fixed by the model spec, so equal seeds give
    bit-identical models.
    """
    if input_dim < 1 or hidden_dim < 1:
        raise InputError("input_dim and hidden_dim must be >= 1")
    rng = np.random.default_rng(seed)
    params: dict[str, ad.Tensor] = {}

    def linear(wname: str, bname: str, fan_in: int, fan_out: int) -> None:
        bound = 1.0 / np.sqrt(fan_in)
        params[wname] = ad.parameter(
            rng.uniform(-bound, bound, size=(fan_in, fan_out)), name=wname)
        params[bname] = ad.parameter(
            rng.uniform(-bound, bound, size=(1, fan_out)), name=bname)

    widths = _layer_widths(spec, input_dim, hidden_dim)
    for i, layer in enumerate(spec.layers):
        for t in range(layer.gate_count()):
            params[f"layer{i}.theta{t}"] = ad.parameter(
                np.zeros((1, 1)), name=f"layer{i}.theta{t}")
        in_dim = widths[i]
        if layer.mlp_depth == 1:
            linear(f"layer{i}.w0", f"layer{i}.b0", in_dim, hidden_dim)
        elif layer.mlp_depth == 2:
            mid = layer.mlp_hidden or hidden_dim
            linear(f"layer{i}.w0", f"layer{i}.b0", in_dim, mid)
            linear(f"layer{i}.w1", f"layer{i}.b1", mid, hidden_dim)
    final_width = widths[-1]
    if spec.head:
        linear("head.w", "head.b", final_width, spec.output_dim)
    elif final_width != spec.output_dim:
        raise InputError(
            f"headless model ends with width {final_width}, expected output_dim {spec.output_dim}"
        )
    return Model(spec=spec, input_dim=input_dim, hidden_dim=hidden_dim, params=params)


def _apply_term(term: AggregationTerm, ops: GraphOperators, h: ad.Tensor) -> ad.Tensor:
    if term.op == OP_SELF_LOOP:
        return ad.struct_mul(ops.adjacency_with_loops(), h)
    if term.op == OP_POWER:
        out = h
        for _ in range(term.k):
            out = ad.struct_mul(ops.adjacency(), out)
        return out
    return ad.row_scale(h, ops.closed_walk_diag(term.k))


def forward(model: Model, ops: GraphOperators | Graph, x, *,
            training: bool = False, dropout_rate: float = 0.0,
            rng: np.random.Generator | None = None) -> ad.Tensor:
    """Run the model on one graph's node features (n x input_dim).

    In training mode dropout masks are drawn from ``rng``; in inference
    mode the pass is deterministic and repeated calls return identical
    values. Non-finite activations raise :class:`NumericError` naming
    the layer.
    """
    if isinstance(ops, Graph):
        ops = GraphOperators(ops)
    xv = np.asarray(x, dtype=np.float64)
    if xv.ndim == 1:
        xv = xv[:, None]
    if xv.shape != (ops.graph.n, model.input_dim):
        raise InputError(
            f"features must be {(ops.graph.n, model.input_dim)}, got {xv.shape}")
    if training and dropout_rate > 0.0 and rng is None:
        raise InputError("training with dropout needs an rng")
    h = ad.constant(xv, name="features")
    p = model.params
    for i, layer in enumerate(model.spec.layers):
        mixed: ad.Tensor | None = None
        for term in layer.terms:
            gate = ad.sigmoid(p[f"layer{i}.theta{term.weight_index}"])
            contrib = ad.scalar_mul(gate, _apply_term(term, ops, h))
            mixed = contrib if mixed is None else ad.add(mixed, contrib)
        assert mixed is not None
        if layer.degree_normalize:
            mixed = ad.row_scale(mixed, ops.inv_degree_plus_one())
        h = mixed
        if layer.mlp_depth >= 1:
            h = ad.add(ad.matmul(h, p[f"layer{i}.w0"]), p[f"layer{i}.b0"])
            h = ad.leaky_relu(h, layer.leaky_slope)
            if layer.mlp_depth == 2:
                if training and dropout_rate > 0.0:
                    h = ad.dropout(h, dropout_rate, rng)
                h = ad.add(ad.matmul(h, p[f"layer{i}.w1"]), p[f"layer{i}.b1"])
                h = ad.leaky_relu(h, layer.leaky_slope)
        if not np.isfinite(h.value).all():
            raise NumericError(f"layer {i} produced non-finite activations")
    if model.spec.readout == "sum":
        h = ad.row_sum(h)
    if model.spec.head:
        h = ad.add(ad.matmul(h, p["head.w"]), p["head.b"])
    if not np.isfinite(h.value).all():
        raise NumericError("output head produced non-finite values")
    return h


_CHECKPOINT_FORMAT = "walklab-model"
_CHECKPOINT_VERSION = 1


def _spec_to_dict(spec: ModelSpec) -> dict:
    return {
        "layers": [
            {
                "terms": [
                    {"op": t.op, "k": t.k, "weight_index": t.weight_index}
                    for t in layer.terms
                ],
                "mlp_depth": layer.mlp_depth,
                "mlp_hidden": layer.mlp_hidden,
                "leaky_slope": layer.leaky_slope,
                "degree_normalize": layer.degree_normalize,
            }
            for layer in spec.layers
        ],
        "readout": spec.readout,
        "output_dim": spec.output_dim,
        "head": spec.head,
    }


def _spec_from_dict(d: dict) -> ModelSpec:
    layers = tuple(
        LayerSpec(
            terms=tuple(AggregationTerm(**t) for t in layer["terms"]),
            mlp_depth=layer["mlp_depth"],
            mlp_hidden=layer["mlp_hidden"],
            leaky_slope=layer["leaky_slope"],
            degree_normalize=layer["degree_normalize"],
        )
        for layer in d["layers"]
    )
    return ModelSpec(layers=layers, readout=d["readout"],
                     output_dim=d["output_dim"], head=d["head"])


def atomic_write_text(path, text: str) -> None:
    """Write a whole file via temp-and-rename so readers never see a torn file."""
    directory = os.path.dirname(os.path.abspath(path)) or "."
    fd, tmp = tempfile.mkstemp(dir=directory, prefix=".tmp-", suffix=".part")
    try:
        with os.fdopen(fd, "w", encoding="utf-8") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def save_checkpoint(model: Model, path) -> None:
    """Serialise parameters (shape + row-major values) and spec to JSON."""
    doc = {
        "format": _CHECKPOINT_FORMAT,
        "version": _CHECKPOINT_VERSION,
        "input_dim": model.input_dim,
        "hidden_dim": model.hidden_dim,
        "spec": _spec_to_dict(model.spec),
        "params": {
            # Row-major values; json emits shortest reprs, which decode
            # back to bit-identical doubles.
            name: {
                "shape": list(p.value.shape),
                "data": p.value.reshape(-1).tolist(),
            }
            for name, p in model.params.items()
        },
    }
    atomic_write_text(path, json.dumps(doc, indent=1))


def load_checkpoint(path) -> Model:
    """Rebuild a model from :func:`save_checkpoint` output, bit-exactly."""
    with open(path, "r", encoding="utf-8") as fh:
        doc = json.load(fh)
    if doc.get("format") != _CHECKPOINT_FORMAT:
        raise InputError(f"not a model checkpoint: {path}")
    if doc.get("version") != _CHECKPOINT_VERSION:
        raise InputError(f"unsupported checkpoint version {doc.get('version')}")
    spec = _spec_from_dict(doc["spec"])
    model = build_model(spec, doc["input_dim"], doc["hidden_dim"], seed=0)
    if set(doc["params"]) != set(model.params):
        raise InputError("checkpoint parameters do not match the stored spec")
    for name, entry in doc["params"].items():
        values = np.array(entry["data"], dtype=np.float64)
        model.params[name].value = values.reshape(entry["shape"])
    return model
