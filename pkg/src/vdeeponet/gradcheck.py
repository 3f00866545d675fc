"""Randomized verification of reverse-mode gradients against central differences.

Each random graph mixes matrix and elementwise primitives over two or three
leaves and ends in a scalar mean. Inputs are shifted away from the kinks of
``abs``/``maximum_const`` so the finite-difference probe stays valid at the
default step.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import autodiff as ad


@dataclass(frozen=True)
class GradCheckReport:
    n_graphs: int
    max_rel_error: float
    tolerance: float

    @property
    def passed(self) -> bool:
        return self.max_rel_error < self.tolerance


def _random_graph(rng: np.random.Generator):
    r, k, c = (int(rng.integers(2, 5)) for _ in range(3))
    m1 = ad.leaf("m1", (r, k))
    m2 = ad.leaf("m2", (k, c))
    row = ad.leaf("row", (1, c))
    bindings = {
        "m1": rng.uniform(-1.0, 1.0, size=(r, k)),
        "m2": rng.uniform(-1.0, 1.0, size=(k, c)),
        "row": rng.uniform(-1.0, 1.0, size=(1, c)),
    }

    t = ad.add(ad.matmul(m1, m2), row)  # (r, c)
    side = ad.tanh(ad.matmul(m1, m2))   # shared-subgraph second operand

    # entries of tanh(t) lie in (-1, 1); the +-0.5 shift keeps kinked ops
    # at least ~0.2 away from their kink for |scale| <= 0.3
    shift = rng.choice([-0.5, 0.5], size=(r, c))

    def op_tanh(z):
        return ad.tanh(z)

    def op_exp(z):
        return ad.exp(ad.scale(ad.tanh(z), 0.5))

    def op_square(z):
        return ad.square(z)

    def op_sqrt(z):
        return ad.sqrt(ad.add(ad.square(z), ad.constant(0.1)))

    def op_abs(z):
        return ad.absolute(ad.add(ad.scale(ad.tanh(z), 0.3), ad.constant(shift)))

    def op_maxc(z):
        return ad.maximum_const(
            ad.add(ad.scale(ad.tanh(z), 0.3), ad.constant(shift)), 0.0)

    def op_add(z):
        return ad.add(z, side)

    def op_sub(z):
        return ad.subtract(z, side)

    def op_mul(z):
        return ad.multiply(z, side)

    def op_div(z):
        return ad.divide(z, ad.add(ad.square(side), ad.constant(0.5)))

    def op_slice_concat(z):
        if c < 2:
            return z
        return ad.concat_cols([ad.slice_cols(z, 0, 1), ad.slice_cols(z, 1, c)])

    def op_row_stats(z):
        return ad.subtract(z, ad.reduce_mean(z, axis=1))

    pool = [op_tanh, op_exp, op_square, op_sqrt, op_abs, op_maxc,
            op_add, op_sub, op_mul, op_div, op_slice_concat, op_row_stats]
    for idx in rng.permutation(len(pool))[: int(rng.integers(4, 7))]:
        t = pool[idx](t)
        t = ad.tanh(t)  # keep magnitudes tame between stages

    small = ad.leaf("small", (1, c))
    bindings["small"] = rng.uniform(-1.0, 1.0, size=(1, c))
    t = ad.add(t, ad.repeat_rows(small, r))
    shifted = ad.add(t, ad.constant(1.5))
    root = ad.add(ad.reduce_mean(ad.square(shifted)),
                  ad.reduce_sum(ad.reduce_mean(ad.square(shifted), axis=0)))
    # linear anchor per leaf: bounds every gradient component away from the
    # finite-difference noise floor without hiding a wrong chain rule (a bad
    # VJP still perturbs the composed path far beyond tolerance)
    for name, value in bindings.items():
        anchor = ad.reduce_sum(ad.multiply(
            ad.leaf(name, value.shape),
            ad.constant(rng.uniform(0.5, 1.0, size=value.shape))))
        root = ad.add(root, anchor)
    return root, bindings


def relative_deviation(grads: dict, reference: dict) -> float:
    worst = 0.0
    for name, ref in reference.items():
        got = grads[name]
        rel = np.abs(got - ref) / (np.abs(ref) + 1e-8)
        worst = max(worst, float(np.max(rel)))
    return worst


def run_gradient_check(seed: int = 0, n_graphs: int = 100, step: float = 1e-5,
                       tolerance: float = 1e-5,
                       inject_error: bool = False) -> GradCheckReport:
    """Compare reverse-mode gradients with central differences on random graphs.

    ``inject_error`` perturbs one reverse-mode gradient per graph; it must make
    the check fail (negative control).
    """
    rng = np.random.default_rng(seed)
    worst = 0.0
    for _ in range(n_graphs):
        root, bindings = _random_graph(rng)
        _, grads = ad.evaluate_with_gradients(root, bindings)
        if inject_error:
            name = sorted(grads)[0]
            grads[name] = grads[name] + 1.0
        fd = ad.finite_difference_gradient(root, bindings, step)
        worst = max(worst, relative_deviation(grads, fd))
    return GradCheckReport(n_graphs, worst, tolerance)
