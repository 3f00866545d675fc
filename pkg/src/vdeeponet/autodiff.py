"""Reverse-mode automatic differentiation over dense float64 tensors.

A computation is a DAG of immutable ``Node`` objects built with the module's
factory functions (``leaf``, ``constant``, ``add``, ``matmul`` ...).  The root
of a graph must be a scalar; ``evaluate_with_gradients`` runs one forward pass
and one reverse pass and returns the value of the root together with the exact
gradient with respect to every bound leaf.

Conventions that matter for the physics built on top:

* ``absolute`` uses subgradient 0 at the origin, so tension/compression
  energy splits stay symmetric at zero strain.
* ``sqrt`` uses subgradient 0 at the origin; the eigenvalue formulas that
  feed it are well defined under this choice at coalescing eigenvalues.
* All arithmetic is float64. Leaf bindings and constants are rejected if they
  contain NaN or Inf.

Nodes are immutable after construction; evaluation never mutates the graph,
so graphs may be shared freely across threads.
"""

from __future__ import annotations

import itertools

import numpy as np

from .errors import ArgumentError, ConfigurationError, ContractError, ShapeError

_UID = itertools.count()


def _as_array(values, what: str) -> np.ndarray:
    arr = np.asarray(values, dtype=np.float64)
    if not np.all(np.isfinite(arr)):
        raise ArgumentError(f"{what} contains non-finite values")
    return arr


def _broadcast_shape(a, b, op):
    try:
        return np.broadcast_shapes(a, b)
    except ValueError as exc:
        raise ShapeError(f"{op}: cannot broadcast {a} with {b}") from exc


def _unbroadcast(grad: np.ndarray, shape: tuple) -> np.ndarray:
    """Sum a broadcast gradient back down to the operand's shape."""
    while grad.ndim > len(shape):
        grad = grad.sum(axis=0)
    for axis, size in enumerate(shape):
        if size == 1 and grad.shape[axis] != 1:
            grad = grad.sum(axis=axis, keepdims=True)
    return grad.reshape(shape)


class Node:
    """One operation (or leaf/constant) in a differentiable graph."""

    __slots__ = ("uid", "op", "inputs", "shape", "payload")

    def __init__(self, op, inputs, shape, payload=None):
        self.uid = next(_UID)
        self.op = op
        self.inputs = tuple(inputs)
        self.shape = tuple(shape)
        self.payload = payload

    @property
    def size(self) -> int:
        return int(np.prod(self.shape, dtype=np.int64)) if self.shape else 1

    def __repr__(self):
        return f"Node({self.op}, shape={self.shape}, uid={self.uid})"


# ---------------------------------------------------------------------------
# graph construction
# ---------------------------------------------------------------------------

def leaf(name: str, shape) -> Node:
    """Differentiable input; bound by name at evaluation time."""
    return Node("leaf", (), tuple(int(s) for s in shape), payload=name)


def constant(values) -> Node:
    arr = _as_array(values, "constant")
    return Node("const", (), arr.shape, payload=arr)


def add(a: Node, b: Node) -> Node:
    return Node("add", (a, b), _broadcast_shape(a.shape, b.shape, "add"))


def subtract(a: Node, b: Node) -> Node:
    return Node("sub", (a, b), _broadcast_shape(a.shape, b.shape, "sub"))


def multiply(a: Node, b: Node) -> Node:
    return Node("mul", (a, b), _broadcast_shape(a.shape, b.shape, "mul"))


def divide(a: Node, b: Node) -> Node:
    return Node("div", (a, b), _broadcast_shape(a.shape, b.shape, "div"))


def matmul(a: Node, b: Node) -> Node:
    if len(a.shape) != 2 or len(b.shape) != 2:
        raise ShapeError(f"matmul needs 2-D operands, got {a.shape} @ {b.shape}")
    if a.shape[1] != b.shape[0]:
        raise ShapeError(f"matmul inner dimensions differ: {a.shape} @ {b.shape}")
    return Node("matmul", (a, b), (a.shape[0], b.shape[1]))


def tanh(a: Node) -> Node:
    return Node("tanh", (a,), a.shape)


def exp(a: Node) -> Node:
    return Node("exp", (a,), a.shape)


def absolute(a: Node) -> Node:
    return Node("abs", (a,), a.shape)


def square(a: Node) -> Node:
    return Node("square", (a,), a.shape)


def sqrt(a: Node) -> Node:
    return Node("sqrt", (a,), a.shape)


def reduce_sum(a: Node, axis=None) -> Node:
    if axis is None:
        return Node("sum", (a,), (), payload=None)
    shape = list(a.shape)
    shape[axis] = 1  # keepdims semantics
    return Node("sum", (a,), tuple(shape), payload=axis)


def reduce_mean(a: Node, axis=None) -> Node:
    if axis is None:
        return Node("mean", (a,), (), payload=None)
    shape = list(a.shape)
    shape[axis] = 1
    return Node("mean", (a,), tuple(shape), payload=axis)


def maximum_const(a: Node, c: float) -> Node:
    """Elementwise max(a, c) with a plain scalar constant."""
    return Node("maxc", (a,), a.shape, payload=float(c))


def scale(a: Node, c: float) -> Node:
    """Multiplication by a plain scalar constant."""
    return Node("scale", (a,), a.shape, payload=float(c))


def slice_cols(a: Node, start: int, stop: int) -> Node:
    if len(a.shape) != 2:
        raise ShapeError(f"slice_cols needs a 2-D operand, got {a.shape}")
    if not (0 <= start < stop <= a.shape[1]):
        raise ShapeError(f"slice_cols [{start}:{stop}] out of range for {a.shape}")
    return Node("slice_cols", (a,), (a.shape[0], stop - start), payload=(start, stop))


def concat_cols(nodes) -> Node:
    nodes = tuple(nodes)
    rows = {n.shape[0] for n in nodes}
    if any(len(n.shape) != 2 for n in nodes) or len(rows) != 1:
        raise ShapeError(f"concat_cols needs 2-D operands with equal rows, got "
                         f"{[n.shape for n in nodes]}")
    cols = sum(n.shape[1] for n in nodes)
    return Node("concat_cols", nodes, (rows.pop(), cols))


def repeat_rows(a: Node, reps: int) -> Node:
    """Repeat each row ``reps`` times consecutively (np.repeat on axis 0)."""
    if len(a.shape) != 2:
        raise ShapeError(f"repeat_rows needs a 2-D operand, got {a.shape}")
    if reps < 1:
        raise ArgumentError("repeat_rows needs reps >= 1")
    return Node("repeat_rows", (a,), (a.shape[0] * reps, a.shape[1]), payload=int(reps))


def channel_dot(a: Node, b: Node, channels: int) -> Node:
    """Blockwise dot product: column blocks of width ``cols/channels`` of the
    two operands are multiplied and row-summed, giving (rows, channels)."""
    if a.shape != b.shape or len(a.shape) != 2:
        raise ShapeError(f"channel_dot needs equal 2-D shapes, got "
                         f"{a.shape} and {b.shape}")
    if a.shape[1] % channels:
        raise ShapeError(f"width {a.shape[1]} is not divisible by "
                         f"{channels} channels")
    return Node("channel_dot", (a, b), (a.shape[0], channels),
                payload=int(channels))


# convenience compositions ---------------------------------------------------

def negate(a: Node) -> Node:
    return scale(a, -1.0)


def clamp01(a: Node) -> Node:
    """max(a,0) - max(a-1,0): identity on [0,1], constant outside."""
    over = maximum_const(subtract(a, constant(1.0)), 0.0)
    return subtract(maximum_const(a, 0.0), over)


# ---------------------------------------------------------------------------
# evaluation
# ---------------------------------------------------------------------------

def topo_order(root: Node) -> list:
    """Deterministic post-order of the DAG under ``root``."""
    order, seen, stack = [], set(), [(root, False)]
    while stack:
        node, expanded = stack.pop()
        if expanded:
            order.append(node)
            continue
        if node.uid in seen:
            continue
        seen.add(node.uid)
        stack.append((node, True))
        for child in reversed(node.inputs):
            if child.uid not in seen:
                stack.append((child, False))
    return order


def graph_leaves(root: Node) -> dict:
    """Map of leaf name -> declared shape for every leaf under ``root``."""
    out = {}
    for node in topo_order(root):
        if node.op == "leaf":
            out[node.payload] = node.shape
    return out


def _forward(order, bindings):
    values = {}
    for node in order:
        op = node.op
        if op == "leaf":
            name = node.payload
            if name not in bindings:
                raise ConfigurationError(f"leaf '{name}' is not bound")
            arr = _as_array(bindings[name], f"leaf '{name}'")
            if arr.shape != node.shape:
                raise ShapeError(f"leaf '{name}' bound with shape {arr.shape}, "
                                 f"declared {node.shape}")
            values[node.uid] = arr
        elif op == "const":
            values[node.uid] = node.payload
        elif op == "add":
            values[node.uid] = values[node.inputs[0].uid] + values[node.inputs[1].uid]
        elif op == "sub":
            values[node.uid] = values[node.inputs[0].uid] - values[node.inputs[1].uid]
        elif op == "mul":
            values[node.uid] = values[node.inputs[0].uid] * values[node.inputs[1].uid]
        elif op == "div":
            values[node.uid] = values[node.inputs[0].uid] / values[node.inputs[1].uid]
        elif op == "matmul":
            values[node.uid] = values[node.inputs[0].uid] @ values[node.inputs[1].uid]
        elif op == "tanh":
            values[node.uid] = np.tanh(values[node.inputs[0].uid])
        elif op == "exp":
            values[node.uid] = np.exp(values[node.inputs[0].uid])
        elif op == "abs":
            values[node.uid] = np.abs(values[node.inputs[0].uid])
        elif op == "square":
            x = values[node.inputs[0].uid]
            values[node.uid] = x * x
        elif op == "sqrt":
            values[node.uid] = np.sqrt(values[node.inputs[0].uid])
        elif op == "sum":
            values[node.uid] = np.sum(values[node.inputs[0].uid], axis=node.payload,
                                      keepdims=node.payload is not None)
        elif op == "mean":
            values[node.uid] = np.mean(values[node.inputs[0].uid], axis=node.payload,
                                       keepdims=node.payload is not None)
        elif op == "maxc":
            values[node.uid] = np.maximum(values[node.inputs[0].uid], node.payload)
        elif op == "scale":
            values[node.uid] = values[node.inputs[0].uid] * node.payload
        elif op == "slice_cols":
            start, stop = node.payload
            values[node.uid] = values[node.inputs[0].uid][:, start:stop]
        elif op == "concat_cols":
            values[node.uid] = np.concatenate(
                [values[c.uid] for c in node.inputs], axis=1)
        elif op == "repeat_rows":
            values[node.uid] = np.repeat(values[node.inputs[0].uid], node.payload,
                                         axis=0)
        elif op == "channel_dot":
            a = values[node.inputs[0].uid]
            b = values[node.inputs[1].uid]
            channels = node.payload
            prod = a * b
            values[node.uid] = prod.reshape(a.shape[0], channels, -1).sum(axis=2)
        else:  # pragma: no cover
            raise ContractError(f"unknown op '{op}'")
    return values


def _backward(order, values, root):
    adjoint = {root.uid: np.ones(root.shape, dtype=np.float64)}
    grads = {}
    for node in reversed(order):
        g = adjoint.pop(node.uid, None)
        if g is None:
            continue
        op = node.op

        def acc(child, contribution):
            contribution = _unbroadcast(np.asarray(contribution, dtype=np.float64),
                                        child.shape)
            if child.uid in adjoint:
                adjoint[child.uid] = adjoint[child.uid] + contribution
            else:
                adjoint[child.uid] = contribution

        if op == "leaf":
            name = node.payload
            grads[name] = grads.get(name, 0.0) + g
        elif op == "const":
            pass
        elif op == "add":
            acc(node.inputs[0], g)
            acc(node.inputs[1], g)
        elif op == "sub":
            acc(node.inputs[0], g)
            acc(node.inputs[1], -g)
        elif op == "mul":
            a, b = node.inputs
            acc(a, g * values[b.uid])
            acc(b, g * values[a.uid])
        elif op == "div":
            a, b = node.inputs
            bv = values[b.uid]
            acc(a, g / bv)
            acc(b, -g * values[a.uid] / (bv * bv))
        elif op == "matmul":
            a, b = node.inputs
            acc(a, g @ values[b.uid].T)
            acc(b, values[a.uid].T @ g)
        elif op == "tanh":
            y = values[node.uid]
            acc(node.inputs[0], g * (1.0 - y * y))
        elif op == "exp":
            acc(node.inputs[0], g * values[node.uid])
        elif op == "abs":
            x = values[node.inputs[0].uid]
            acc(node.inputs[0], g * np.sign(x))  # sign(0)=0: subgradient choice
        elif op == "square":
            acc(node.inputs[0], g * 2.0 * values[node.inputs[0].uid])
        elif op == "sqrt":
            y = values[node.uid]
            acc(node.inputs[0],
                g * np.where(y > 0.0, 0.5 / np.where(y > 0.0, y, 1.0), 0.0))
        elif op == "sum":
            acc(node.inputs[0], np.broadcast_to(g, node.inputs[0].shape))
        elif op == "mean":
            child = node.inputs[0]
            n = child.size if node.payload is None else child.shape[node.payload]
            acc(child, np.broadcast_to(g / n, child.shape))
        elif op == "maxc":
            x = values[node.inputs[0].uid]
            acc(node.inputs[0], g * (x > node.payload))
        elif op == "scale":
            acc(node.inputs[0], g * node.payload)
        elif op == "slice_cols":
            start, stop = node.payload
            child = node.inputs[0]
            full = np.zeros(child.shape, dtype=np.float64)
            full[:, start:stop] = g
            acc(child, full)
        elif op == "concat_cols":
            offset = 0
            for child in node.inputs:
                width = child.shape[1]
                acc(child, g[:, offset:offset + width])
                offset += width
        elif op == "repeat_rows":
            child = node.inputs[0]
            reps = node.payload
            acc(child, g.reshape(child.shape[0], reps, child.shape[1]).sum(axis=1))
        elif op == "channel_dot":
            a, b = node.inputs
            rows, width = a.shape
            g_wide = np.repeat(g, width // node.payload, axis=1)
            acc(a, g_wide * values[b.uid])
            acc(b, g_wide * values[a.uid])
        else:  # pragma: no cover
            raise ContractError(f"unknown op '{op}'")
    return grads


def evaluate(root: Node, bindings: dict) -> np.ndarray:
    """Forward evaluation of any node (not restricted to scalar roots)."""
    order = topo_order(root)
    return _forward(order, bindings)[root.uid]


def evaluate_with_gradients(root: Node, bindings: dict, aux=()):
    """Value of the scalar root plus reverse-mode gradients per bound leaf.

    Returns ``(value, grads)`` where ``grads[name]`` has the leaf's shape.
    Raises ``ContractError`` for a non-scalar root and ``ConfigurationError``
    for unbound leaves. ``aux`` nodes (which must be reachable from the root)
    are evaluated in the same forward pass; when given, a third element with
    their values is returned.
    """
    if root.size != 1:
        raise ContractError(f"graph root must be scalar, has shape {root.shape}")
    order = topo_order(root)
    values = _forward(order, bindings)
    grads = _backward(order, values, root)
    for name, shape in graph_leaves(root).items():
        if name not in grads:
            grads[name] = np.zeros(shape, dtype=np.float64)
        else:
            grads[name] = np.asarray(grads[name], dtype=np.float64).reshape(shape)
    value = float(np.asarray(values[root.uid]).reshape(()))
    if aux:
        return value, grads, [values[node.uid] for node in aux]
    return value, grads


def finite_difference_gradient(root: Node, bindings: dict, step: float) -> dict:
    """Central-difference gradient of the scalar root, component by component.

    Test oracle only: cost is two evaluations per leaf component.
    """
    if step <= 0.0:
        raise ArgumentError(f"finite-difference step must be > 0, got {step}")
    if root.size != 1:
        raise ContractError(f"graph root must be scalar, has shape {root.shape}")
    names = graph_leaves(root)
    base = {k: _as_array(v, f"leaf '{k}'") for k, v in bindings.items()}
    grads = {}
    for name in names:
        x = base[name].copy()
        g = np.zeros_like(x)
        flat_x = x.reshape(-1)
        flat_g = g.reshape(-1)
        for i in range(flat_x.size):
            keep = flat_x[i]
            flat_x[i] = keep + step
            f_plus = float(np.asarray(evaluate(root, {**base, name: x})).reshape(()))
            flat_x[i] = keep - step
            f_minus = float(np.asarray(evaluate(root, {**base, name: x})).reshape(()))
            flat_x[i] = keep
            flat_g[i] = (f_plus - f_minus) / (2.0 * step)
        grads[name] = g
    return grads
