"""Minimal feedforward policy network with a purpose-built reverse-mode tape.

The tape records exactly the operations a hedging episode needs: dense affine
layers, ReLU, the self-financing portfolio recursion and the two empirical
risk reductions (semi-L^p and CVaR). Everything is 64-bit.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

__all__ = [
    "Network",
    "AdamState",
    "Tape",
    "Node",
    "glorot_init",
    "forward",
    "grad_loss",
    "adam_step",
    "NonFiniteLossError",
]


class NonFiniteLossError(ArithmeticError):
    pass


@dataclass
class Network:
    """Affine + ReLU layers; identity output. weights[l] is (d_{l+1}, d_l)."""

    weights: list[np.ndarray]
    biases: list[np.ndarray]

    def __post_init__(self):
        if len(self.weights) != len(self.biases):
            raise ValueError("weights/biases length mismatch")
        for W, b in zip(self.weights, self.biases):
            if W.shape[0] != b.shape[0]:
                raise ValueError("bias shape inconsistent with weight matrix")
        for a, b in zip(self.weights[:-1], self.weights[1:]):
            if b.shape[1] != a.shape[0]:
                raise ValueError("layer dimension chain broken")
        for W in self.weights + self.biases:
            if not np.isfinite(W).all():
                raise ValueError("non-finite parameters")

    @property
    def dims(self) -> tuple[int, ...]:
        return (self.weights[0].shape[1],) + tuple(W.shape[0] for W in self.weights)

    @property
    def n_layers(self) -> int:
        return len(self.weights)

    def copy(self) -> "Network":
        return Network([W.copy() for W in self.weights], [b.copy() for b in self.biases])


def glorot_init(dims: tuple[int, ...], seed: int) -> Network:
    """Glorot-uniform weights, Uniform(-a, a) with a = sqrt(6/(d_in + d_out));
    zero biases."""
    if len(dims) < 2 or any(d < 1 for d in dims):
        raise ValueError("dims must chain at least input -> output")
    rng = np.random.default_rng(seed)
    weights, biases = [], []
    for d_in, d_out in zip(dims[:-1], dims[1:]):
        a = math.sqrt(6.0 / (d_in + d_out))
        weights.append(rng.uniform(-a, a, size=(d_out, d_in)))
        biases.append(np.zeros(d_out))
    return Network(weights, biases)


def forward(net: Network, x: np.ndarray) -> np.ndarray:
    """Evaluate the network on a feature vector or a (B, d0) batch."""
    x = np.asarray(x, dtype=float)
    single = x.ndim == 1
    h = x[None, :] if single else x
    if h.shape[1] != net.dims[0]:
        raise ValueError(f"feature dimension {h.shape[1]} != network input {net.dims[0]}")
    last = net.n_layers - 1
    for l, (W, b) in enumerate(zip(net.weights, net.biases)):
        h = h @ W.T + b
        if l != last:
            np.maximum(h, 0.0, out=h)
    return h[0] if single else h


# ---------------------------------------------------------------------------
# Reverse-mode tape
# ---------------------------------------------------------------------------


class Node:
    __slots__ = ("value", "parents", "grad")

    def __init__(self, value, parents=()):
        self.value = value
        self.parents = parents
        self.grad = None


class Tape:
    """Records a computation graph in creation (topological) order."""

    def __init__(self):
        self._nodes: list[Node] = []

    def _new(self, value, parents=()) -> Node:
        node = Node(value, parents)
        self._nodes.append(node)
        return node

    def leaf(self, value: np.ndarray) -> Node:
        return self._new(np.asarray(value, dtype=float))

    # -- episode ops --------------------------------------------------------

    def matmul_t(self, x: Node, w: Node) -> Node:
        """x @ w.T for x (B, d_in), w (d_out, d_in)."""
        return self._new(
            x.value @ w.value.T,
            ((x, lambda g: g @ w.value), (w, lambda g: g.T @ x.value)),
        )

    def add_bias(self, x: Node, b: Node) -> Node:
        return self._new(
            x.value + b.value,
            ((x, lambda g: g), (b, lambda g: g.sum(axis=0))),
        )

    def relu(self, x: Node) -> Node:
        # subgradient at 0 is 0
        mask = x.value > 0
        return self._new(np.where(mask, x.value, 0.0), ((x, lambda g: g * mask),))

    def network(self, params: "ParamNodes", x: Node) -> Node:
        h = x
        last = len(params.weights) - 1
        for l, (W, b) in enumerate(zip(params.weights, params.biases)):
            h = self.add_bias(self.matmul_t(h, W), b)
            if l != last:
                h = self.relu(h)
        return h

    def features(self, const_pre: np.ndarray, v: Node, v_scale: float,
                 const_post: np.ndarray) -> Node:
        """[const_pre | v * v_scale | const_post]; only v carries gradient."""
        val = np.concatenate([const_pre, v.value[:, None] * v_scale, const_post], axis=1)
        j = const_pre.shape[1]
        return self._new(val, ((v, lambda g: g[:, j] * v_scale),))

    def portfolio_update(self, v: Node, delta: Node, gains: np.ndarray, accrual: float) -> Node:
        """V' = accrual * V + sum_j delta_j * gains_j (gains are constants)."""
        val = accrual * v.value + np.einsum("ij,ij->i", delta.value, gains)
        return self._new(
            val,
            ((v, lambda g: accrual * g), (delta, lambda g: g[:, None] * gains)),
        )

    def hedging_error(self, v_terminal: Node, payoff: np.ndarray, short: bool) -> Node:
        signed = payoff if short else -payoff
        return self._new(signed - v_terminal.value, ((v_terminal, lambda g: -g),))

    # -- loss reductions ----------------------------------------------------

    def semi_lp_loss(self, pi: Node, p: float) -> Node:
        x = pi.value
        n = x.size
        pos = x > 0
        if pos.any():
            m = x[pos].max()
            value = m * (np.sum((x[pos] / m) ** p) / n) ** (1.0 / p)
        else:
            value = 0.0

        def dpi(g):
            gx = np.zeros_like(x)
            if value > 0:
                # d/dx_i = (x_i / rho)^(p-1) / n on the positive region
                gx[pos] = (x[pos] / value) ** (p - 1.0) / n
            return gx * g

        return self._new(np.float64(value), ((pi, dpi),))

    def cvar_loss(self, pi: Node, alpha: float) -> Node:
        """Empirical CVaR; the VaR term is the selected order statistic and
        gradient flows through both it and the excess terms."""
        x = pi.value
        n = x.size
        k = math.ceil(alpha * n)
        order = np.argsort(x, kind="stable")
        sel = order[k - 1]
        v = x[sel]
        excess = x - v
        tail = excess > 0
        c = 1.0 / ((1.0 - alpha) * n)
        value = v + excess[tail].sum() * c

        def dpi(g):
            gx = np.where(tail, c, 0.0)
            gx[sel] += 1.0 - tail.sum() * c
            return gx * g

        return self._new(np.float64(value), ((pi, dpi),))

    def loss(self, pi: Node, spec) -> Node:
        if spec.kind == "semi_lp":
            return self.semi_lp_loss(pi, spec.p)
        return self.cvar_loss(pi, spec.alpha)

    # -- backward -----------------------------------------------------------

    def backward(self, root: Node) -> None:
        for node in self._nodes:
            node.grad = None
        root.grad = np.ones_like(root.value)
        for node in reversed(self._nodes):
            if node.grad is None:
                continue
            for parent, vjp in node.parents:
                g = vjp(node.grad)
                parent.grad = g if parent.grad is None else parent.grad + g


@dataclass
class ParamNodes:
    weights: list[Node]
    biases: list[Node]


def param_nodes(tape: Tape, net: Network) -> ParamNodes:
    return ParamNodes(
        weights=[tape.leaf(W) for W in net.weights],
        biases=[tape.leaf(b) for b in net.biases],
    )


def grad_loss(net: Network, rollout_closure, loss_spec):
    """Gradient of the empirical risk of one minibatch episode.

    ``rollout_closure(tape, params)`` must return the hedging-error node of
    the episode. Returns (loss_value, grads) with grads shaped like the
    network (weights list then biases list).
    """
    tape = Tape()
    params = param_nodes(tape, net)
    pi = rollout_closure(tape, params)
    if not np.isfinite(pi.value).all():
        raise NonFiniteLossError("hedging errors contain non-finite entries")
    loss = tape.loss(pi, loss_spec)
    if not np.isfinite(loss.value):
        raise NonFiniteLossError(f"loss evaluated to {loss.value!r}")
    tape.backward(loss)
    gw = [W.grad if W.grad is not None else np.zeros_like(W.value) for W in params.weights]
    gb = [b.grad if b.grad is not None else np.zeros_like(b.value) for b in params.biases]
    return float(loss.value), (gw, gb)


# ---------------------------------------------------------------------------
# Adam
# ---------------------------------------------------------------------------


@dataclass
class AdamState:
    m_w: list[np.ndarray]
    v_w: list[np.ndarray]
    m_b: list[np.ndarray]
    v_b: list[np.ndarray]
    t: int = 0
    lr: float = 0.0005
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8

    @classmethod
    def init(cls, net: Network, lr: float = 0.0005, beta1: float = 0.9,
             beta2: float = 0.999, eps: float = 1e-8) -> "AdamState":
        return cls(
            m_w=[np.zeros_like(W) for W in net.weights],
            v_w=[np.zeros_like(W) for W in net.weights],
            m_b=[np.zeros_like(b) for b in net.biases],
            v_b=[np.zeros_like(b) for b in net.biases],
            lr=lr, beta1=beta1, beta2=beta2, eps=eps,
        )


def _adam_update(theta, g, m, v, state, c1, c2):
    m_new = state.beta1 * m + (1.0 - state.beta1) * g
    v_new = state.beta2 * v + (1.0 - state.beta2) * g * g
    step = state.lr * (m_new / c1) / (np.sqrt(v_new / c2) + state.eps)
    return theta - step, m_new, v_new


def adam_step(state: AdamState, net: Network, grads) -> tuple[Network, AdamState]:
    """One bias-corrected Adam update; returns fresh network and state."""
    gw, gb = grads
    t = state.t + 1
    c1 = 1.0 - state.beta1**t
    c2 = 1.0 - state.beta2**t
    new_w, new_mw, new_vw = [], [], []
    for W, g, m, v in zip(net.weights, gw, state.m_w, state.v_w):
        Wn, mn, vn = _adam_update(W, g, m, v, state, c1, c2)
        new_w.append(Wn)
        new_mw.append(mn)
        new_vw.append(vn)
    new_b, new_mb, new_vb = [], [], []
    for b, g, m, v in zip(net.biases, gb, state.m_b, state.v_b):
        bn, mn, vn = _adam_update(b, g, m, v, state, c1, c2)
        new_b.append(bn)
        new_mb.append(mn)
        new_vb.append(vn)
    net2 = Network(new_w, new_b)
    state2 = AdamState(m_w=new_mw, v_w=new_vw, m_b=new_mb, v_b=new_vb, t=t,
                       lr=state.lr, beta1=state.beta1, beta2=state.beta2, eps=state.eps)
    return net2, state2
