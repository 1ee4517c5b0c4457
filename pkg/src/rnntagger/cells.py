"""The four recurrent step functions and the softmax output layer.

Each forward step returns a tape of intermediates; the matching backward
consumes it and produces exact analytic gradients for the parameters,
the step input x_i, and the carried state (h_prev for the Elman family,
o_prev for the Jordan family).

Faithful to the update rules as given: no bias terms unless the config
flag turns them on, and the GRU candidate activation is the logistic
sigmoid by default (tanh available behind the same config).
"""

from dataclasses import dataclass

import numpy as np

from . import linalg
from .linalg import matvec, sigmoid, softmax

ELMAN = "ELMAN"
JORDAN = "JORDAN"
ELMAN_GRU = "ELMAN_GRU"
JORDAN_GRU = "JORDAN_GRU"


@dataclass
class CellConfig:
    bias: bool = False
    candidate: str = "sigmoid"  # GRU candidate activation

    def __post_init__(self):
        if self.candidate not in ("sigmoid", "tanh"):
            raise ValueError("candidate must be sigmoid or tanh, got %r" % self.candidate)


def _candidate(pre, cfg):
    if cfg.candidate == "tanh":
        return np.tanh(pre)
    return sigmoid(pre)


def _candidate_grad(c, cfg):
    if cfg.candidate == "tanh":
        return 1.0 - c * c
    return c * (1.0 - c)


def _check_tape(tape, kind):
    if tape.get("kind") != kind:
        raise ValueError("tape from %r passed to %s backward" % (tape.get("kind"), kind))


class ElmanCell:
    """h_i = Φ(U x_i + V h_{i-1}); carries its own hidden state."""

    kind = ELMAN
    carries_output = False

    @staticmethod
    def carry_dim(hidden, n_out):
        return hidden

    @staticmethod
    def param_shapes(n_in, hidden, n_out, cfg):
        shapes = {"U": (hidden, n_in), "V": (hidden, hidden)}
        if cfg.bias:
            shapes["b"] = (hidden,)
        return shapes

    @staticmethod
    def step(p, x, carry, cfg, extra=None):
        pre = matvec(p["U"], x) + matvec(p["V"], carry)
        if cfg.bias:
            pre = pre + p["b"]
        if extra is not None:
            pre = pre + extra
        h = sigmoid(pre)
        return h, {"kind": ELMAN, "x": x, "carry": carry, "h": h,
                   "has_extra": extra is not None}

    @staticmethod
    def backward(p, tape, dh, cfg, acc):
        _check_tape(tape, ELMAN)
        h = tape["h"]
        dpre = dh * h * (1.0 - h)
        acc["U"] += np.outer(dpre, tape["x"])
        acc["V"] += np.outer(dpre, tape["carry"])
        if cfg.bias:
            acc["b"] += dpre
        dx = p["U"].T @ dpre
        dcarry = p["V"].T @ dpre
        dextra = dpre if tape["has_extra"] else None
        return dx, dcarry, dextra


class JordanCell:
    """h_i = Φ(U x_i + V o_{i-1}); carries the previous output distribution."""

    kind = JORDAN
    carries_output = True

    @staticmethod
    def carry_dim(hidden, n_out):
        return n_out

    @staticmethod
    def param_shapes(n_in, hidden, n_out, cfg):
        shapes = {"U": (hidden, n_in), "V": (hidden, n_out)}
        if cfg.bias:
            shapes["b"] = (hidden,)
        return shapes

    @staticmethod
    def step(p, x, carry, cfg, extra=None):
        pre = matvec(p["U"], x) + matvec(p["V"], carry)
        if cfg.bias:
            pre = pre + p["b"]
        if extra is not None:
            pre = pre + extra
        h = sigmoid(pre)
        return h, {"kind": JORDAN, "x": x, "carry": carry, "h": h,
                   "has_extra": extra is not None}

    @staticmethod
    def backward(p, tape, dh, cfg, acc):
        _check_tape(tape, JORDAN)
        h = tape["h"]
        dpre = dh * h * (1.0 - h)
        acc["U"] += np.outer(dpre, tape["x"])
        acc["V"] += np.outer(dpre, tape["carry"])
        if cfg.bias:
            acc["b"] += dpre
        dx = p["U"].T @ dpre
        dcarry = p["V"].T @ dpre
        dextra = dpre if tape["has_extra"] else None
        return dx, dcarry, dextra


class ElmanGruCell:
    """Gated variant of the Elman cell.

    r_i = Φ(W_r x_i + U_r h_prev), z_i = Φ(W_z x_i + U_z h_prev),
    cand = act(W_h x_i + U_h (r_i * h_prev)),
    h_i = z_i * cand + (1 - z_i) * h_prev.
    """

    kind = ELMAN_GRU
    carries_output = False

    @staticmethod
    def carry_dim(hidden, n_out):
        return hidden

    @staticmethod
    def param_shapes(n_in, hidden, n_out, cfg):
        shapes = {
            "W_h": (hidden, n_in), "W_z": (hidden, n_in), "W_r": (hidden, n_in),
            "U_h": (hidden, hidden), "U_z": (hidden, hidden), "U_r": (hidden, hidden),
        }
        if cfg.bias:
            shapes.update({"b_h": (hidden,), "b_z": (hidden,), "b_r": (hidden,)})
        return shapes

    @staticmethod
    def step(p, x, carry, cfg, extra=None):
        pre_r = matvec(p["W_r"], x) + matvec(p["U_r"], carry)
        pre_z = matvec(p["W_z"], x) + matvec(p["U_z"], carry)
        if cfg.bias:
            pre_r = pre_r + p["b_r"]
            pre_z = pre_z + p["b_z"]
        r = sigmoid(pre_r)
        z = sigmoid(pre_z)
        rh = r * carry
        # the additive context term enters the candidate only, not the gates
        pre_c = matvec(p["W_h"], x) + matvec(p["U_h"], rh)
        if cfg.bias:
            pre_c = pre_c + p["b_h"]
        if extra is not None:
            pre_c = pre_c + extra
        c = _candidate(pre_c, cfg)
        h = z * c + (1.0 - z) * carry
        tape = {"kind": ELMAN_GRU, "x": x, "carry": carry, "r": r, "z": z,
                "rh": rh, "c": c, "has_extra": extra is not None}
        return h, tape

    @staticmethod
    def backward(p, tape, dh, cfg, acc):
        _check_tape(tape, ELMAN_GRU)
        x, carry = tape["x"], tape["carry"]
        r, z, c = tape["r"], tape["z"], tape["c"]

        dz = dh * (c - carry)
        dc = dh * z
        dcarry = dh * (1.0 - z)

        dpre_c = dc * _candidate_grad(c, cfg)
        acc["W_h"] += np.outer(dpre_c, x)
        acc["U_h"] += np.outer(dpre_c, tape["rh"])
        drh = p["U_h"].T @ dpre_c
        dr = drh * carry
        dcarry = dcarry + drh * r

        dpre_z = dz * z * (1.0 - z)
        acc["W_z"] += np.outer(dpre_z, x)
        acc["U_z"] += np.outer(dpre_z, carry)
        dcarry = dcarry + p["U_z"].T @ dpre_z

        dpre_r = dr * r * (1.0 - r)
        acc["W_r"] += np.outer(dpre_r, x)
        acc["U_r"] += np.outer(dpre_r, carry)
        dcarry = dcarry + p["U_r"].T @ dpre_r

        if cfg.bias:
            acc["b_h"] += dpre_c
            acc["b_z"] += dpre_z
            acc["b_r"] += dpre_r

        dx = p["W_h"].T @ dpre_c + p["W_z"].T @ dpre_z + p["W_r"].T @ dpre_r
        dextra = dpre_c if tape["has_extra"] else None
        return dx, dcarry, dextra


class JordanGruCell:
    """Gated variant of the Jordan cell.

    The previous output distribution is first mapped into hidden space,
    t = T o_prev; gates and candidate then read t where the Elman GRU
    reads h_prev, and the skip branch carries t itself:
    h_i = z_i * cand + (1 - z_i) * t.
    """

    kind = JORDAN_GRU
    carries_output = True

    @staticmethod
    def carry_dim(hidden, n_out):
        return n_out

    @staticmethod
    def param_shapes(n_in, hidden, n_out, cfg):
        shapes = {
            "W_o": (hidden, n_in), "W_z": (hidden, n_in), "W_r": (hidden, n_in),
            "U_o": (hidden, hidden), "U_z": (hidden, hidden), "U_r": (hidden, hidden),
            "T": (hidden, n_out),
        }
        if cfg.bias:
            shapes.update({"b_o": (hidden,), "b_z": (hidden,), "b_r": (hidden,)})
        return shapes

    @staticmethod
    def step(p, x, carry, cfg, extra=None):
        t = matvec(p["T"], carry)
        pre_r = matvec(p["W_r"], x) + matvec(p["U_r"], t)
        pre_z = matvec(p["W_z"], x) + matvec(p["U_z"], t)
        if cfg.bias:
            pre_r = pre_r + p["b_r"]
            pre_z = pre_z + p["b_z"]
        r = sigmoid(pre_r)
        z = sigmoid(pre_z)
        rt = r * t
        pre_c = matvec(p["W_o"], x) + matvec(p["U_o"], rt)
        if cfg.bias:
            pre_c = pre_c + p["b_o"]
        if extra is not None:
            pre_c = pre_c + extra
        c = _candidate(pre_c, cfg)
        h = z * c + (1.0 - z) * t
        tape = {"kind": JORDAN_GRU, "x": x, "carry": carry, "t": t, "r": r,
                "z": z, "rt": rt, "c": c, "has_extra": extra is not None}
        return h, tape

    @staticmethod
    def backward(p, tape, dh, cfg, acc):
        _check_tape(tape, JORDAN_GRU)
        x, t = tape["x"], tape["t"]
        r, z, c = tape["r"], tape["z"], tape["c"]

        dz = dh * (c - t)
        dc = dh * z
        dt = dh * (1.0 - z)

        dpre_c = dc * _candidate_grad(c, cfg)
        acc["W_o"] += np.outer(dpre_c, x)
        acc["U_o"] += np.outer(dpre_c, tape["rt"])
        drt = p["U_o"].T @ dpre_c
        dr = drt * t
        dt = dt + drt * r

        dpre_z = dz * z * (1.0 - z)
        acc["W_z"] += np.outer(dpre_z, x)
        acc["U_z"] += np.outer(dpre_z, t)
        dt = dt + p["U_z"].T @ dpre_z

        dpre_r = dr * r * (1.0 - r)
        acc["W_r"] += np.outer(dpre_r, x)
        acc["U_r"] += np.outer(dpre_r, t)
        dt = dt + p["U_r"].T @ dpre_r

        if cfg.bias:
            acc["b_o"] += dpre_c
            acc["b_z"] += dpre_z
            acc["b_r"] += dpre_r

        acc["T"] += np.outer(dt, tape["carry"])
        dcarry = p["T"].T @ dt
        dx = p["W_o"].T @ dpre_c + p["W_z"].T @ dpre_z + p["W_r"].T @ dpre_r
        dextra = dpre_c if tape["has_extra"] else None
        return dx, dcarry, dextra


class SoftmaxOutput:
    """o_i = softmax(W h_i); the per-position output layer."""

    kind = "SOFTMAX"

    @staticmethod
    def param_shapes(hidden, n_out, cfg):
        shapes = {"W": (n_out, hidden)}
        if cfg.bias:
            shapes["b"] = (n_out,)
        return shapes

    @staticmethod
    def step(p, h, cfg):
        logits = matvec(p["W"], h)
        if cfg.bias:
            logits = logits + p["b"]
        o = softmax(logits)
        return o, {"kind": "SOFTMAX", "h": h, "o": o}

    @staticmethod
    def backward(p, tape, do, cfg, acc):
        """Gradient through the softmax given d(loss)/d(o)."""
        _check_tape(tape, "SOFTMAX")
        o = tape["o"]
        dlogits = o * (do - np.dot(do, o))
        return SoftmaxOutput.backward_from_logits(p, tape, dlogits, cfg, acc)

    @staticmethod
    def backward_from_logits(p, tape, dlogits, cfg, acc):
        """Entry point when d(loss)/d(logits) is already known
        (softmax + nll collapses to o - onehot(y))."""
        _check_tape(tape, "SOFTMAX")
        acc["W"] += np.outer(dlogits, tape["h"])
        if cfg.bias:
            acc["b"] += dlogits
        return p["W"].T @ dlogits


CELLS = {
    ELMAN: ElmanCell,
    JORDAN: JordanCell,
    ELMAN_GRU: ElmanGruCell,
    JORDAN_GRU: JordanGruCell,
}

ELMAN_FAMILY = (ELMAN, ELMAN_GRU)
JORDAN_FAMILY = (JORDAN, JORDAN_GRU)


def cell_for(kind):
    if kind not in CELLS:
        raise ValueError("unknown cell kind: %r (expected one of %s)" % (kind, sorted(CELLS)))
    return CELLS[kind]


def init_params(shapes, rng):
    """Uniform init, radius scaled per matrix by its fan-in/fan-out;
    bias vectors start at zero."""
    params = {}
    for name in sorted(shapes):
        shape = shapes[name]
        if len(shape) == 1:
            params[name] = linalg.zeros(shape)
        else:
            radius = linalg.glorot_radius(shape[1], shape[0])
            params[name] = linalg.uniform_init(rng, shape, radius)
    return params


def zero_grads(params):
    return {k: np.zeros_like(v) for k, v in params.items()}
