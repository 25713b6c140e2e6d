"""Per-antenna convolutional symbol regressors and the candidate-restricted search.

Network ``i`` maps the image assembled from ``(y, Rbar, z)`` to a soft
estimate of transmitted symbol ``x_i``. Architecture: ``l`` convolutions with
``m x m`` kernels (zero "same" padding, stride 1, ReLU), one fully connected
ReLU layer of ``m * n`` units and a 2-unit linear output (real, imaginary).
Training minimizes the mean squared symbol error with Adam.

During detection the ``K_k`` constellation points nearest to the soft
estimate of the antenna decided at layer ``k`` are the only children tried
there; the path-metric search then picks the final vector.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .channel import draw_frame, rng_stream
from .detect import KSchedule, PreprocessedProblem, _tree_search, preprocess_frame
from .errors import DimensionMismatch, NonFinite
from .modem import Constellation, nearest_points


@dataclass(frozen=True)
class SelectorHyper:
    layers: int = 4  # l
    kernel: int = 3  # m
    width: int = 32  # n; the dense layer has m * n units
    channels: int = 8

    def __post_init__(self):
        if min(self.layers, self.kernel, self.width, self.channels) < 1:
            raise ValueError("l, m, n and channels must all be positive")

    @property
    def dense(self) -> int:
        return self.kernel * self.width


@dataclass(frozen=True)
class TrainingConfig:
    batches: int = 1000
    batch_size: int = 64
    lr: float = 0.01
    decay_every: int = 250
    decay_factor: float = 0.5
    seed: int = 0
    val_size: int = 2000
    val_every: int = 50

    def __post_init__(self):
        if self.batches < 1 or self.batch_size < 1:
            raise ValueError("batches and batch_size must be positive")
        if not self.lr > 0 or not self.decay_factor > 0:
            raise ValueError("learning rate must stay positive")

    def learning_rate(self, batch: int) -> float:
        """Step-decayed rate for 0-based batch index ``batch``."""
        return self.lr * self.decay_factor ** (batch // self.decay_every)


def image_shape(nt: int, nr: int) -> tuple[int, int, int]:
    return (2, nt + 2, max(nt, nr))


def assemble_input(y, Rbar, z) -> np.ndarray:
    """``(2, Nt+2, max(Nt, Nr))`` image: rows ``0..Nt-1`` hold ``Rbar``, row
    ``Nt`` holds ``z``, row ``Nt+1`` holds ``y``; channel 0 is the real part,
    channel 1 the imaginary part; unused cells are zero. A leading batch axis
    on all three inputs is carried through.
    """
    y = np.asarray(y, dtype=np.complex128)
    Rbar = np.asarray(Rbar, dtype=np.complex128)
    z = np.asarray(z, dtype=np.complex128)
    nt = Rbar.shape[-1]
    nr = y.shape[-1]
    if Rbar.shape[-2] != nt or z.shape[-1] != nt or nr < nt:
        raise DimensionMismatch(f"inconsistent shapes y{y.shape} R{Rbar.shape} z{z.shape}")
    batch = Rbar.shape[:-2]
    img = np.zeros((*batch, nt + 2, max(nt, nr)), dtype=np.complex128)
    img[..., :nt, :nt] = Rbar
    img[..., nt, :nt] = z
    img[..., nt + 1, :nr] = y
    return np.stack([img.real, img.imag], axis=-3)


def split_input(img: np.ndarray, nt: int, nr: int):
    """Inverse of :func:`assemble_input`."""
    cimg = img[..., 0, :, :] + 1j * img[..., 1, :, :]
    return cimg[..., nt + 1, :nr], cimg[..., :nt, :nt], cimg[..., nt, :nt]


# --------------------------------------------------------------------------
# network


Params = dict  # name -> ndarray


def init_params(hyper: SelectorHyper, nt: int, nr: int, rng: np.random.Generator) -> Params:
    """He-initialized weights, zero biases."""
    cin, hh, ww = image_shape(nt, nr)
    m = hyper.kernel
    p: Params = {}
    for i in range(hyper.layers):
        fan_in = cin * m * m
        p[f"conv{i}.weight"] = rng.normal(0.0, math.sqrt(2.0 / fan_in), (hyper.channels, cin, m, m))
        p[f"conv{i}.bias"] = np.zeros(hyper.channels)
        cin = hyper.channels
    flat = cin * hh * ww
    p["fc.weight"] = rng.normal(0.0, math.sqrt(2.0 / flat), (hyper.dense, flat))
    p["fc.bias"] = np.zeros(hyper.dense)
    p["out.weight"] = rng.normal(0.0, math.sqrt(1.0 / hyper.dense), (2, hyper.dense))
    p["out.bias"] = np.zeros(2)
    return p


def _windows(x: np.ndarray, m: int) -> np.ndarray:
    """``(B, H, W, C*m*m)`` patches of a zero-padded ``(B, C, H, W)`` batch."""
    lo = (m - 1) // 2
    hi = m - 1 - lo
    xp = np.pad(x, ((0, 0), (0, 0), (lo, hi), (lo, hi)))
    win = np.lib.stride_tricks.sliding_window_view(xp, (m, m), axis=(2, 3))  # B,C,H,W,m,m
    b, c, h, w = x.shape
    return win.transpose(0, 2, 3, 1, 4, 5).reshape(b, h, w, c * m * m)


def _conv_forward(x, weight, bias):
    m = weight.shape[-1]
    cols = _windows(x, m)
    out = cols @ weight.reshape(weight.shape[0], -1).T + bias
    return out.transpose(0, 3, 1, 2), cols


def _conv_backward(dout, cols, weight, x_shape):
    cout, cin, m, _ = weight.shape
    b, _, h, w = x_shape
    d = dout.transpose(0, 2, 3, 1).reshape(-1, cout)
    dW = (d.T @ cols.reshape(-1, cin * m * m)).reshape(weight.shape)
    db = d.sum(axis=0)
    dcols = (d @ weight.reshape(cout, -1)).reshape(b, h, w, cin, m, m)
    lo = (m - 1) // 2
    dxp = np.zeros((b, cin, h + m - 1, w + m - 1))
    for di in range(m):
        for dj in range(m):
            dxp[:, :, di:di + h, dj:dj + w] += dcols[:, :, :, :, di, dj].transpose(0, 3, 1, 2)
    return dxp[:, :, lo:lo + h, lo:lo + w], dW, db


def _n_conv(p: Params) -> int:
    return sum(1 for k in p if k.endswith(".weight") and k.startswith("conv"))


def forward_batch(p: Params, x: np.ndarray, keep: bool = False):
    """Soft symbols ``(B,)`` complex for images ``x`` of shape ``(B, 2, H, W)``."""
    cache = []
    a = x
    for i in range(_n_conv(p)):
        zc, cols = _conv_forward(a, p[f"conv{i}.weight"], p[f"conv{i}.bias"])
        cache.append((cols, a.shape, zc))
        a = np.maximum(zc, 0.0)
    flat = a.reshape(a.shape[0], -1)
    zf = flat @ p["fc.weight"].T + p["fc.bias"]
    hf = np.maximum(zf, 0.0)
    out = hf @ p["out.weight"].T + p["out.bias"]
    soft = out[:, 0] + 1j * out[:, 1]
    if keep:
        return soft, (cache, a.shape, flat, zf, hf)
    return soft


def forward(p: Params, img: np.ndarray) -> complex:
    """Soft symbol for one image of shape ``(2, H, W)``."""
    img = np.asarray(img, dtype=float)
    if not (all(np.all(np.isfinite(v)) for v in p.values()) and np.all(np.isfinite(img))):
        raise NonFinite("non-finite parameters or input")
    out = complex(forward_batch(p, img[None])[0])
    if not math.isfinite(abs(out)):
        raise NonFinite("network output is not finite")
    return out


def loss_and_grads(p: Params, x: np.ndarray, target: np.ndarray):
    """Mean squared symbol error over the batch and its parameter gradients."""
    soft, (cache, a_shape, flat, zf, hf) = forward_batch(p, x, keep=True)
    bsz = x.shape[0]
    err = soft - target
    loss = float(np.mean(np.abs(err) ** 2))
    dout = np.stack([err.real, err.imag], axis=1) * (2.0 / bsz)
    g: Params = {}
    g["out.weight"] = dout.T @ hf
    g["out.bias"] = dout.sum(axis=0)
    dz = (dout @ p["out.weight"]) * (zf > 0)
    g["fc.weight"] = dz.T @ flat
    g["fc.bias"] = dz.sum(axis=0)
    da = (dz @ p["fc.weight"]).reshape(a_shape)
    for i in range(len(cache) - 1, -1, -1):
        cols, in_shape, zc = cache[i]
        da = da * (zc > 0)
        da, g[f"conv{i}.weight"], g[f"conv{i}.bias"] = _conv_backward(da, cols, p[f"conv{i}.weight"], in_shape)
    return loss, g


# --------------------------------------------------------------------------
# training


@dataclass
class SelectorSet:
    """One trained network per antenna (index 0 is antenna 1)."""

    nets: list
    hyper: SelectorHyper
    nt: int
    nr: int
    snr_db: float = math.nan
    train_loss: list = field(default_factory=list)  # per batch, averaged over antennas
    val_loss: list = field(default_factory=list)  # (batch, loss)

    def soft_symbols(self, p: PreprocessedProblem) -> np.ndarray:
        img = assemble_input(p.y, p.Rbar, p.z)[None]
        return np.array([complex(forward_batch(net, img)[0]) for net in self.nets])


def make_batch(nt: int, nr: int, c: Constellation, snr_db: float, n: int, seed: int, stream):
    """Images ``(n, 2, Nt+2, W)`` and transmitted symbols ``(n, Nt)``."""
    imgs = np.empty((n, *image_shape(nt, nr)))
    xs = np.empty((n, nt), dtype=np.complex128)
    for i in range(n):
        f = draw_frame(nt, nr, c, snr_db, rng_stream(seed, *stream, i))
        p = preprocess_frame(f, c)
        imgs[i] = assemble_input(p.y, p.Rbar, p.z)
        xs[i] = f.x
    return imgs, xs


class Adam:
    def __init__(self, params: Params, beta1: float = 0.9, beta2: float = 0.999, eps: float = 1e-8):
        self.m = {k: np.zeros_like(v) for k, v in params.items()}
        self.v = {k: np.zeros_like(v) for k, v in params.items()}
        self.t = 0
        self.b1, self.b2, self.eps = beta1, beta2, eps

    def step(self, params: Params, grads: Params, lr: float) -> None:
        self.t += 1
        c1 = 1 - self.b1**self.t
        c2 = 1 - self.b2**self.t
        for k, g in grads.items():
            self.m[k] = self.b1 * self.m[k] + (1 - self.b1) * g
            self.v[k] = self.b2 * self.v[k] + (1 - self.b2) * g * g
            params[k] -= lr * (self.m[k] / c1) / (np.sqrt(self.v[k] / c2) + self.eps)


def batch_loss(nets: Sequence[Params], imgs: np.ndarray, xs: np.ndarray) -> float:
    """Mean over antennas of each network's mean squared error."""
    return float(np.mean([np.mean(np.abs(forward_batch(net, imgs) - xs[:, i]) ** 2) for i, net in enumerate(nets)]))


def train(nt: int, nr: int, c: Constellation, snr_db: float, config: TrainingConfig = TrainingConfig(),
          hyper: SelectorHyper = SelectorHyper(), data=None) -> SelectorSet:
    """Train the ``Nt`` selector networks.

    ``data(batch_index) -> (imgs, xs)`` overrides the default generator, which
    draws fresh frames for every batch from stream ``(seed, 1, batch)``; the
    validation set comes from stream ``(seed, 2)`` and is never trained on.
    Network ``i`` is initialized from stream ``(seed, 0, i)``.
    """
    seed = config.seed
    nets = [init_params(hyper, nt, nr, rng_stream(seed, 0, i)) for i in range(nt)]
    opts = [Adam(net) for net in nets]
    if data is None:
        def data(bi):
            return make_batch(nt, nr, c, snr_db, config.batch_size, seed, (1, bi))
        val_imgs, val_xs = make_batch(nt, nr, c, snr_db, config.val_size, seed, (2,))
    else:
        val_imgs, val_xs = data(-1)
    out = SelectorSet(nets, hyper, nt, nr, snr_db)
    out.val_loss.append((0, batch_loss(nets, val_imgs, val_xs)))
    for bi in range(config.batches):
        imgs, xs = data(bi)
        lr = config.learning_rate(bi)
        losses = []
        for i, net in enumerate(nets):
            loss, grads = loss_and_grads(net, imgs, xs[:, i])
            if not math.isfinite(loss):
                raise NonFinite(f"training diverged at batch {bi}; lower the learning rate")
            opts[i].step(net, grads, lr)
            losses.append(loss)
        out.train_loss.append(float(np.mean(losses)))
        if (bi + 1) % config.val_every == 0 or bi + 1 == config.batches:
            out.val_loss.append((bi + 1, batch_loss(nets, val_imgs, val_xs)))
    return out


# --------------------------------------------------------------------------
# detection


def candidate_sets(soft: np.ndarray, c: Constellation, schedule: KSchedule) -> list[np.ndarray]:
    """Per tree layer ``k``: the ``K_k`` points nearest the soft symbol of antenna ``Nt-k+1``."""
    nt = len(schedule.widths)
    return [nearest_points(soft[nt - k], c, min(schedule.widths[k - 1], c.order)) for k in range(1, nt + 1)]


def detect_neural(p: PreprocessedProblem, selectors: SelectorSet | None, schedule: KSchedule,
                  soft_symbols=None):
    """K-best search whose layer-``k`` children are limited to ``K_k`` candidates.

    ``soft_symbols`` (antenna order) replaces the network outputs when given.
    Returns ``(xhat, stats)``.
    """
    schedule.validate(p.constellation.order)
    soft = np.asarray(soft_symbols) if soft_symbols is not None else selectors.soft_symbols(p)
    cands = candidate_sets(soft, p.constellation, schedule)
    ix, _, stats = _tree_search(p, schedule.widths, cands)
    return p.constellation.points[ix], stats
