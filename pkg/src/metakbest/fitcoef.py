"""Learning the beam-width curve ``K(k) = a * k**b + c``.

Two component optimizers update the coefficient vector ``X = (a, b, c)``:

* :func:`step_gradpred` follows an exponential moving average of past
  gradients (a predicted gradient), i.e. a momentum method.
* :func:`step_recurrent` feeds each coordinate's normalized gradient through
  a shared LSTM cell and reads an additive update off its hidden state. Its
  gate weights are meta-trained on a distribution of fitting tasks by
  :func:`meta_train_recurrent`.

:func:`fuse_and_train` combines the two results as ``Y = w1 * Y1 + w2 * Y2``.

The fitting objective is the (optionally layer-weighted) squared error
``sum_k w_k (a k**b + c - K*_k)**2`` against oracle targets.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from typing import Sequence

import numpy as np
import scipy.optimize

from .detect import KSchedule
from .errors import NonFinite
from .modem import Constellation

X0 = (1.0, 1.0, 1.0)
B_BOUNDS = (0.05, 4.0)


@dataclass(frozen=True)
class Coefficients:
    a: float
    b: float
    c: float

    def as_array(self) -> np.ndarray:
        return np.array([self.a, self.b, self.c], dtype=float)

    @classmethod
    def from_array(cls, v) -> "Coefficients":
        a, b, c = (float(t) for t in v)
        return cls(a, b, c)


def k_of_layer(coeffs: Coefficients, k: int) -> float:
    if k < 1:
        raise ValueError("layer index k starts at 1")
    return float(coeffs.a * np.float64(k) ** coeffs.b + coeffs.c)


def round_half_up(v: float) -> float:
    return math.floor(v + 0.5)


def build_schedule(coeffs: Coefficients, nt: int, constellation: Constellation | int) -> KSchedule:
    """Round the curve to the nearest integer (halves up) and clamp to a valid schedule."""
    if nt < 1:
        raise ValueError("nt must be positive")
    q = constellation if isinstance(constellation, int) else constellation.order
    widths = []
    for k in range(1, nt + 1):
        with np.errstate(over="ignore", invalid="ignore"):
            v = k_of_layer(coeffs, k)
        if math.isnan(v):
            v = 1.0
        elif math.isinf(v):
            v = float(q**k) if v > 0 else 1.0
        else:
            v = round_half_up(v)
        widths.append(int(max(1.0, min(v, float(q**k)))))
    return KSchedule.clamped(widths, q, (coeffs.a, coeffs.b, coeffs.c))


# --------------------------------------------------------------------------
# fitting objective


def _targets_array(targets) -> np.ndarray:
    widths = getattr(targets, "widths", targets)
    return np.asarray(widths, dtype=float)


def _layer_weights(n: int, weights) -> np.ndarray:
    if weights is None:
        return np.ones(n)
    w = np.asarray(weights, dtype=float)
    if w.shape != (n,):
        raise ValueError(f"need {n} layer weights, got shape {w.shape}")
    return w


def loss_and_grad_batch(X: np.ndarray, T: np.ndarray, W: np.ndarray):
    """Vectorized loss and gradient.

    ``X`` is ``(n, 3)``, ``T`` and ``W`` are ``(n, L)`` targets and layer
    weights. Returns ``(loss (n,), grad (n, 3))``; overflow yields inf/nan
    rather than raising.
    """
    ks = np.arange(1, T.shape[1] + 1, dtype=float)
    logk = np.log(ks)
    a, b, c = X[:, 0:1], X[:, 1:2], X[:, 2:3]
    with np.errstate(over="ignore", invalid="ignore"):
        kb = np.exp(b * logk)
        r = a * kb + c - T
        wr = 2.0 * W * r
        loss = np.sum(W * r * r, axis=1)
        grad = np.stack(
            [np.sum(wr * kb, axis=1), np.sum(wr * a * kb * logk, axis=1), np.sum(wr, axis=1)],
            axis=1,
        )
    return loss, grad


def fit_loss(coeffs: Coefficients, targets, weights=None) -> float:
    """``sum_k w_k (a k**b + c - K*_k)**2``."""
    t = _targets_array(targets)
    loss, _ = loss_and_grad_batch(coeffs.as_array()[None], t[None], _layer_weights(t.size, weights)[None])
    if not np.isfinite(loss[0]):
        raise NonFinite(f"fit loss overflowed at {coeffs}")
    return float(loss[0])


def fit_gradient(coeffs: Coefficients, targets, weights=None) -> np.ndarray:
    """Gradient of :func:`fit_loss` with respect to ``(a, b, c)``."""
    t = _targets_array(targets)
    _, grad = loss_and_grad_batch(coeffs.as_array()[None], t[None], _layer_weights(t.size, weights)[None])
    if not np.all(np.isfinite(grad)):
        raise NonFinite(f"fit gradient overflowed at {coeffs}")
    return grad[0]


def clip_coeffs(X: np.ndarray) -> np.ndarray:
    X = np.array(X, dtype=float)
    X[..., 1] = np.clip(X[..., 1], *B_BOUNDS)
    return X


# --------------------------------------------------------------------------
# component optimizer 1: predicted gradient


@dataclass(frozen=True)
class GradPredState:
    pred: np.ndarray = field(default_factory=lambda: np.zeros(3))
    step: float = 2e-3
    decay: float = 0.9

    def __post_init__(self):
        if not 0.0 <= self.decay < 1.0:
            raise ValueError("decay must lie in [0, 1)")
        if not self.step > 0:
            raise ValueError("step must be positive")


def step_gradpred(state: GradPredState, coeffs, grad):
    """One predicted-gradient step.

    ``pred' = decay * pred + (1 - decay) * grad`` and
    ``coeffs' = coeffs - step * pred'``. Works on any leading batch shape.
    """
    grad = np.asarray(grad, dtype=float)
    x = np.asarray(coeffs, dtype=float)
    pred = state.decay * state.pred + (1.0 - state.decay) * grad
    out = x - state.step * pred
    if not (np.all(np.isfinite(pred)) and np.all(np.isfinite(out))):
        raise NonFinite("predicted-gradient step diverged")
    return replace(state, pred=pred), out


# --------------------------------------------------------------------------
# component optimizer 2: coordinatewise LSTM


def _sigmoid(x):
    return 0.5 * (1.0 + np.tanh(0.5 * x))


@dataclass(frozen=True, eq=False)
class LSTMParams:
    """Meta-parameters shared by all coordinates.

    Gate pre-activations are ``W @ [u, h] + bias`` stacked as
    ``(input, forget, output, candidate)``, each of size ``hidden``. Two
    readouts of the hidden state form the update
    ``gain * (s * (w_out . h) + (w_norm . h))``: the first scales with the
    gradient's RMS ``s`` (gradient-descent-like), the second does not
    (RMSprop-like).
    """

    W: np.ndarray  # (4h, 1 + h)
    bias: np.ndarray  # (4h,)
    w_out: np.ndarray  # (h,)
    w_norm: np.ndarray  # (h,)
    gain: float

    @property
    def hidden(self) -> int:
        return self.w_out.shape[0]

    @classmethod
    def zeros(cls, hidden: int = 8) -> "LSTMParams":
        return cls(np.zeros((4 * hidden, 1 + hidden)), np.zeros(4 * hidden), np.zeros(hidden),
                   np.zeros(hidden), 0.0)

    @classmethod
    def random(cls, rng: np.random.Generator, hidden: int = 8, scale: float = 0.1,
               gain: float = -0.01) -> "LSTMParams":
        W = rng.normal(0.0, scale, (4 * hidden, 1 + hidden))
        bias = np.zeros(4 * hidden)
        bias[hidden:2 * hidden] = 1.0  # forget gate starts mostly open
        w_out = rng.normal(0.0, 1.0 / math.sqrt(hidden), hidden)
        w_norm = rng.normal(0.0, 1.0 / math.sqrt(hidden), hidden)
        return cls(W, bias, w_out, w_norm, gain)

    @classmethod
    def pass_through(cls, gain: float, hidden: int = 8, eps: float = 1e-6,
                     saturate: float = 60.0, normalized: bool = False,
                     forget: float = 0.0) -> "LSTMParams":
        """Gates that copy the normalized gradient into ``h[0]`` and read it back.

        Input and output gates saturate open, the forget gate shut; the
        candidate is ``tanh(eps * u)`` and the readout ``1/eps``, so the cell
        is linear to ``O(eps**2)``. Through ``w_out`` the update equals
        ``gain * grad`` (gradient descent); with ``normalized=True`` it goes
        through ``w_norm`` and equals ``gain * grad / s`` (RMSprop).
        A forget gate ``0 < forget < 1`` turns the cell into a momentum
        accumulator of the normalized gradients.
        """
        params = cls.zeros(hidden)
        W, bias = params.W.copy(), params.bias.copy()
        w_out, w_norm = params.w_out.copy(), params.w_norm.copy()
        bias[:hidden] = saturate
        bias[hidden:2 * hidden] = math.log(forget / (1.0 - forget)) if 0.0 < forget < 1.0 else -saturate
        bias[2 * hidden:3 * hidden] = saturate
        W[3 * hidden, 0] = eps
        (w_norm if normalized else w_out)[0] = 1.0 / eps
        return cls(W, bias, w_out, w_norm, gain)

    @classmethod
    def rmsprop_start(cls, hidden: int = 8, gain: float = -0.3) -> "LSTMParams":
        """Soft pass-through of the normalized gradient: a clipped RMSprop step
        with unsaturated gates, a trainable starting point for meta-training."""
        return cls.pass_through(gain, hidden, eps=1.0, saturate=3.0, normalized=True)

    def trainable_mask(self, w_out: bool = False) -> np.ndarray:
        """Mask over :meth:`flat` selecting the meta-trained entries.

        ``w_out`` multiplies the raw gradient scale, so tiny perturbations of
        it swing the update by orders of magnitude; it is frozen by default.
        """
        mask = np.ones(self.flat().size, dtype=bool)
        if not w_out:
            start = self.W.size + self.bias.size
            mask[start:start + self.hidden] = False
        return mask

    def flat(self) -> np.ndarray:
        return np.concatenate([self.W.ravel(), self.bias, self.w_out, self.w_norm, [self.gain]])

    @classmethod
    def from_flat(cls, v, hidden: int) -> "LSTMParams":
        v = np.asarray(v, dtype=float)
        nW = 4 * hidden * (1 + hidden)
        W = v[:nW].reshape(4 * hidden, 1 + hidden)
        bias = v[nW:nW + 4 * hidden]
        w_out = v[nW + 4 * hidden:nW + 5 * hidden]
        w_norm = v[nW + 5 * hidden:nW + 6 * hidden]
        return cls(W.copy(), bias.copy(), w_out.copy(), w_norm.copy(), float(v[nW + 6 * hidden]))


@dataclass(frozen=True, eq=False)
class RecurrentState:
    """Per-coordinate LSTM state plus the gradient normalizer.

    ``h`` and ``c`` have shape ``(..., 3, hidden)``; ``v`` is the running
    mean of squared gradients (bias-corrected by the step count ``t``).
    """

    h: np.ndarray
    c: np.ndarray
    v: np.ndarray
    t: int = 0
    beta: float = 0.9
    eps: float = 1e-8

    @classmethod
    def initial(cls, hidden: int, batch: tuple[int, ...] = ()) -> "RecurrentState":
        return cls(np.zeros((*batch, 3, hidden)), np.zeros((*batch, 3, hidden)), np.zeros((*batch, 3)))


def lstm_cell(params: LSTMParams, h, c, u):
    """Standard LSTM cell applied independently to every coordinate."""
    hd = params.hidden
    z = np.concatenate([u[..., None], h], axis=-1)
    pre = z @ params.W.T + params.bias
    i = _sigmoid(pre[..., :hd])
    f = _sigmoid(pre[..., hd:2 * hd])
    o = _sigmoid(pre[..., 2 * hd:3 * hd])
    g = np.tanh(pre[..., 3 * hd:])
    c = f * c + i * g
    h = o * np.tanh(c)
    return h, c


def step_recurrent(params: LSTMParams, state: RecurrentState, coeffs, grad):
    """One LSTM-optimizer step; returns ``(state', coeffs')``.

    The cell input is ``u = g / s`` with ``s`` the running RMS of the
    coordinate's gradient; the update is ``gain * (s * (w_out . h) + w_norm . h)``,
    which is odd in the gradient when the gates do not depend on ``u``.
    """
    g = np.asarray(grad, dtype=float)
    x = np.asarray(coeffs, dtype=float)
    t = state.t + 1
    v = state.beta * state.v + (1.0 - state.beta) * g * g
    s = np.sqrt(v / (1.0 - state.beta**t)) + state.eps
    u = g / s
    h, c = lstm_cell(params, state.h, state.c, u)
    out = x + params.gain * (s * (h @ params.w_out) + h @ params.w_norm)
    if not np.all(np.isfinite(out)):
        raise NonFinite("recurrent optimizer step diverged")
    return replace(state, h=h, c=c, v=v, t=t), out


# --------------------------------------------------------------------------
# running the optimizers


@dataclass
class FitTrace:
    coeffs: Coefficients
    losses: list[float]


def run_gradpred(targets, steps: int, weights=None, state: GradPredState | None = None,
                 x0=X0) -> FitTrace:
    """Iterate :func:`step_gradpred` from ``x0`` with ``b`` clipped after each step."""
    state = state or GradPredState()
    t = _targets_array(targets)
    w = _layer_weights(t.size, weights)
    x = clip_coeffs(np.asarray(x0, dtype=float))
    losses = []
    for _ in range(steps):
        loss, grad = loss_and_grad_batch(x[None], t[None], w[None])
        if not np.all(np.isfinite(grad)):
            raise NonFinite("fit gradient overflowed")
        losses.append(float(loss[0]))
        state, x = step_gradpred(state, x, grad[0])
        x = clip_coeffs(x)
    losses.append(float(loss_and_grad_batch(x[None], t[None], w[None])[0][0]))
    return FitTrace(Coefficients.from_array(x), losses)


def run_recurrent(params: LSTMParams, targets, steps: int, weights=None, x0=X0) -> FitTrace:
    t = _targets_array(targets)
    w = _layer_weights(t.size, weights)
    x = clip_coeffs(np.asarray(x0, dtype=float))
    state = RecurrentState.initial(params.hidden)
    losses = []
    for _ in range(steps):
        loss, grad = loss_and_grad_batch(x[None], t[None], w[None])
        if not np.all(np.isfinite(grad)):
            raise NonFinite("fit gradient overflowed")
        losses.append(float(loss[0]))
        state, x = step_recurrent(params, state, x, grad[0])
        x = clip_coeffs(x)
    losses.append(float(loss_and_grad_batch(x[None], t[None], w[None])[0][0]))
    return FitTrace(Coefficients.from_array(x), losses)


def unrolled_losses(params: LSTMParams, T: np.ndarray, W: np.ndarray, steps: int, x0=X0) -> np.ndarray:
    """Final fit loss of every task after ``steps`` recurrent steps (no raising).

    Tasks whose unroll overflows get ``inf``.
    """
    n = T.shape[0]
    x = clip_coeffs(np.broadcast_to(np.asarray(x0, dtype=float), (n, 3)))
    state = RecurrentState.initial(params.hidden, (n,))
    dead = np.zeros(n, dtype=bool)
    with np.errstate(all="ignore"):
        for _ in range(steps):
            _, grad = loss_and_grad_batch(x, T, W)
            dead |= ~np.all(np.isfinite(grad), axis=1)
            grad = np.where(dead[:, None], 0.0, grad)
            t = state.t + 1
            v = state.beta * state.v + (1.0 - state.beta) * grad * grad
            s = np.sqrt(v / (1.0 - state.beta**t)) + state.eps
            h, c = lstm_cell(params, state.h, state.c, grad / s)
            x = clip_coeffs(x + params.gain * (s * (h @ params.w_out) + h @ params.w_norm))
            dead |= ~np.all(np.isfinite(x), axis=1)
            x = np.where(dead[:, None], 0.0, x)
            state = replace(state, h=h, c=c, v=v, t=t)
        loss, _ = loss_and_grad_batch(x, T, W)
    loss[dead | ~np.isfinite(loss)] = np.inf
    return loss


def gd_losses(T: np.ndarray, W: np.ndarray, steps: int, step: float, x0=X0) -> np.ndarray:
    """Final fit loss of plain gradient descent on every task (``inf`` on overflow)."""
    n = T.shape[0]
    x = clip_coeffs(np.broadcast_to(np.asarray(x0, dtype=float), (n, 3)))
    dead = np.zeros(n, dtype=bool)
    with np.errstate(all="ignore"):
        for _ in range(steps):
            _, grad = loss_and_grad_batch(x, T, W)
            dead |= ~np.all(np.isfinite(grad), axis=1)
            x = clip_coeffs(np.where(dead[:, None], 0.0, x - step * grad))
        loss, _ = loss_and_grad_batch(x, T, W)
    loss[dead | ~np.isfinite(loss)] = np.inf
    return loss


# --------------------------------------------------------------------------
# meta-training


@dataclass(frozen=True)
class TaskSet:
    """A batch of fitting tasks: targets and layer weights, both ``(n, L)``."""

    targets: np.ndarray
    weights: np.ndarray

    @classmethod
    def from_targets(cls, target_sets: Sequence, weights=None) -> "TaskSet":
        T = np.array([_targets_array(t) for t in target_sets], dtype=float)
        W = np.broadcast_to(_layer_weights(T.shape[1], weights), T.shape).copy()
        return cls(T, W)

    def __len__(self) -> int:
        return self.targets.shape[0]


def synthetic_tasks(rng: np.random.Generator, n: int, layers: int, q: int = 16) -> TaskSet:
    """Rounded power-law targets with random shape, like oracle target sets."""
    a = rng.uniform(-6.0, 8.0, n)
    b = rng.uniform(0.3, 2.0, n)
    c = rng.uniform(1.0, 12.0, n)
    ks = np.arange(1, layers + 1, dtype=float)
    vals = np.floor(a[:, None] * ks[None, :] ** b[:, None] + c[:, None] + 0.5)
    T = np.clip(vals, 1.0, float(q * q))
    return TaskSet(T, np.ones_like(T))


@dataclass
class MetaTrainResult:
    params: LSTMParams
    history: list[float]


def meta_objective(params: LSTMParams, tasks: TaskSet, steps: int) -> float:
    """Mean final fit loss over tasks after an unrolled run (inf if any diverged)."""
    return float(np.mean(unrolled_losses(params, tasks.targets, tasks.weights, steps)))


def meta_train_recurrent(tasks: TaskSet, unroll: int, meta_steps: int, rng: np.random.Generator,
                         init: LSTMParams | None = None, directions: int = 16,
                         sigma: float = 0.02, lr: float = 0.03, batch: int | None = 64,
                         mask: np.ndarray | None = None) -> MetaTrainResult:
    """Meta-train the LSTM optimizer's parameters by antithetic random-direction
    finite differences (SPSA-style) through the unrolled optimization.

    Each meta-step draws a task minibatch and ``directions`` random unit-scale
    perturbations ``d``, estimates the gradient of ``L = mean log(1 + final
    fit loss)`` from ``(L(theta + sigma d) - L(theta - sigma d)) / (2 sigma)``
    and applies an Adam step. The log keeps a few hard tasks from dominating
    the estimate. Only entries selected by ``mask`` (default
    :meth:`LSTMParams.trainable_mask`) are perturbed and updated. The
    parameters with the lowest mean final fit loss on the full task set seen
    so far (the initial ones included) are returned.
    """
    if unroll < 1:
        raise ValueError("unroll length must be at least 1")
    params = init if init is not None else LSTMParams.random(rng)
    hidden = params.hidden
    theta = params.flat()
    mask = params.trainable_mask() if mask is None else np.asarray(mask, dtype=bool)
    best_theta = theta.copy()
    best = meta_objective(params, tasks, unroll)
    history = [best]
    m = np.zeros_like(theta)
    v = np.zeros_like(theta)
    for it in range(1, meta_steps + 1):
        if batch is not None and batch < len(tasks):
            sel = rng.choice(len(tasks), batch, replace=False)
            T, W = tasks.targets[sel], tasks.weights[sel]
        else:
            T, W = tasks.targets, tasks.weights
        g = np.zeros_like(theta)
        for _ in range(directions):
            d = rng.standard_normal(theta.shape) * mask
            lp = np.mean(np.log1p(unrolled_losses(LSTMParams.from_flat(theta + sigma * d, hidden), T, W, unroll)))
            lm = np.mean(np.log1p(unrolled_losses(LSTMParams.from_flat(theta - sigma * d, hidden), T, W, unroll)))
            if np.isfinite(lp) and np.isfinite(lm):
                g += (lp - lm) / (2.0 * sigma) * d
        g /= directions
        m = 0.9 * m + 0.1 * g
        v = 0.999 * v + 0.001 * g * g
        theta = theta - lr * (m / (1 - 0.9**it)) / (np.sqrt(v / (1 - 0.999**it)) + 1e-8)
        obj = meta_objective(LSTMParams.from_flat(theta, hidden), tasks, unroll)
        history.append(obj)
        if obj < best:
            best, best_theta = obj, theta.copy()
    return MetaTrainResult(LSTMParams.from_flat(best_theta, hidden), history)


# --------------------------------------------------------------------------
# network fusion


@dataclass(frozen=True)
class FusionWeights:
    w1: float
    w2: float


FUSION_GRID = np.arange(-50, 151) / 100.0


def _fused_losses(Y1: np.ndarray, Y2: np.ndarray, w1: np.ndarray, w2: np.ndarray, t, w) -> np.ndarray:
    X = w1[:, None] * Y1[None, :] + w2[:, None] * Y2[None, :]
    T = np.broadcast_to(t, (X.shape[0], t.size))
    W = np.broadcast_to(w, T.shape)
    loss, _ = loss_and_grad_batch(X, T, W)
    loss[~np.isfinite(loss)] = np.inf
    return loss


def fuse_and_train(Y1: Coefficients, Y2: Coefficients, targets, weights=None,
                   grid: np.ndarray = FUSION_GRID):
    """Pick ``(w1, w2)`` minimizing the fit loss of ``w1*Y1 + w2*Y2``.

    Exhaustive search over ``grid x grid`` (which contains ``(1, 0)`` and
    ``(0, 1)`` exactly), then a bounded quasi-Newton refinement that is kept
    only if it lowers the loss. Ties on the grid go to the first point in
    ``w1``-major order.
    """
    y1, y2 = Y1.as_array(), Y2.as_array()
    if not (np.all(np.isfinite(y1)) and np.all(np.isfinite(y2))):
        raise NonFinite("component outputs must be finite")
    t = _targets_array(targets)
    w = _layer_weights(t.size, weights)
    g1, g2 = np.meshgrid(grid, grid, indexing="ij")
    losses = _fused_losses(y1, y2, g1.ravel(), g2.ravel(), t, w)
    i = int(np.argmin(losses))
    best_w = np.array([g1.ravel()[i], g2.ravel()[i]])
    best = float(losses[i])

    def objective(om):
        X = om[0] * y1 + om[1] * y2
        loss, grad = loss_and_grad_batch(X[None], t[None], w[None])
        if not np.isfinite(loss[0]):
            return 1e300, np.zeros(2)
        return float(loss[0]), np.array([grad[0] @ y1, grad[0] @ y2])

    res = scipy.optimize.minimize(objective, best_w, jac=True, method="L-BFGS-B",
                                  bounds=[(grid[0], grid[-1])] * 2)
    if res.fun < best:
        best_w = np.asarray(res.x, dtype=float)
    fw = FusionWeights(float(best_w[0]), float(best_w[1]))
    return fw, Coefficients.from_array(fw.w1 * y1 + fw.w2 * y2)


# --------------------------------------------------------------------------
# full coefficient-training run


@dataclass
class CoefficientModel:
    Y1: Coefficients
    Y2: Coefficients
    fusion: FusionWeights
    Y: Coefficients
    lstm: LSTMParams
    gradpred: GradPredState
    losses: dict = field(default_factory=dict)

    def schedule(self, nt: int, q: int) -> KSchedule:
        return build_schedule(self.Y, nt, q)


def train_coefficients(train_targets, val_targets, steps: int, lstm: LSTMParams,
                       weights=None, gradpred: GradPredState | None = None) -> CoefficientModel:
    """Run both component optimizers on the training targets, then fuse on validation targets."""
    gradpred = gradpred or GradPredState()
    tr1 = run_gradpred(train_targets, steps, weights, gradpred)
    tr2 = run_recurrent(lstm, train_targets, steps, weights)
    fw, Y = fuse_and_train(tr1.coeffs, tr2.coeffs, val_targets, weights)
    losses = {
        "val_Y1": fit_loss(tr1.coeffs, val_targets, weights),
        "val_Y2": fit_loss(tr2.coeffs, val_targets, weights),
        "val_Y": fit_loss(Y, val_targets, weights),
        "train_Y1": tr1.losses[-1],
        "train_Y2": tr2.losses[-1],
    }
    return CoefficientModel(tr1.coeffs, tr2.coeffs, fw, Y, lstm, gradpred, losses)
