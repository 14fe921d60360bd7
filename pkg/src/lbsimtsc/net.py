"""Trainable model: residual 1-D conv backbone, graph convolution, classifier.

Everything is float64 numpy with hand-written backward passes, so gradients
can be checked against central finite differences and runs are bit-reproducible
for a fixed seed.  Convolutions use same padding, stride 1, no bias (batch
norm follows each one).  Weight init is uniform in +-1/sqrt(fan_in); batch
norm starts at scale 1, shift 0.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .errors import FormatError, NoSupervision, NumericalDivergence, ShapeError, TruncatedFile

_CKPT_MAGIC = b"LBCK"
_CKPT_VERSION = 1


@dataclass
class TrainConfig:
    batch_size: int = 128
    epochs: int = 500
    lr: float = 1e-4
    weight_decay: float = 4e-3
    seed: int = 0

    def __post_init__(self):
        if self.batch_size % 2 != 0:
            raise ValueError("batch_size must be even (labeled/unlabeled halves)")
        if self.seed < 0:
            raise ValueError("seed must be >= 0")


def _uniform_fanin(rng: np.random.Generator, shape: tuple, fan_in: int) -> np.ndarray:
    bound = 1.0 / np.sqrt(fan_in)
    return rng.uniform(-bound, bound, size=shape)


class Conv1d:
    """Same-padding 1-D convolution over (m, L, C_in), no bias.

    Channels-last keeps the im2col window blocks contiguous, so building the
    (m*L, k*C_in) matrix is a straight copy and the matmul output needs no
    transposition.  Weight layout is (k, C_in, C_out).
    """

    def __init__(self, c_in: int, c_out: int, k: int, rng: np.random.Generator):
        self.c_in, self.c_out, self.k = c_in, c_out, k
        self.w = _uniform_fanin(rng, (k, c_in, c_out), c_in * k)
        self.gw = np.zeros_like(self.w)

    def forward(self, x: np.ndarray) -> np.ndarray:
        m, L, c_in = x.shape
        k = self.k
        pl = (k - 1) // 2
        xpad = np.pad(x, ((0, 0), (pl, k - 1 - pl), (0, 0)))
        win = np.lib.stride_tricks.sliding_window_view(xpad, k, axis=1)  # (m, L, c_in, k)
        cols = win.transpose(0, 1, 3, 2).reshape(m * L, k * c_in)
        out = cols @ self.w.reshape(k * c_in, self.c_out)
        self._cols = cols
        return out.reshape(m, L, self.c_out)

    def backward(self, gout: np.ndarray) -> np.ndarray:
        m, L, _ = gout.shape
        k = self.k
        pl = (k - 1) // 2
        G = gout.reshape(m * L, self.c_out)
        self.gw += (self._cols.T @ G).reshape(self.w.shape)
        gcols = (G @ self.w.reshape(k * self.c_in, self.c_out).T).reshape(m, L, k, self.c_in)
        gxpad = np.zeros((m, L + k - 1, self.c_in))
        for t in range(k):
            gxpad[:, t : t + L, :] += gcols[:, :, t, :]
        return gxpad[:, pl : pl + L, :]

    def tensors(self, prefix: str) -> dict:
        return {f"{prefix}.w": self.w}

    def grads(self, prefix: str) -> dict:
        return {f"{prefix}.w": self.gw}


class BatchNorm1d:
    """Per-channel batch norm over (m, L, C); biased variance throughout."""

    momentum = 0.9
    eps = 1e-5

    def __init__(self, c: int):
        self.gamma = np.ones(c)
        self.beta = np.zeros(c)
        self.running_mean = np.zeros(c)
        self.running_var = np.ones(c)
        self.ggamma = np.zeros(c)
        self.gbeta = np.zeros(c)

    def forward(self, x: np.ndarray, train: bool) -> np.ndarray:
        n = x.shape[0] * x.shape[1]
        if train:
            mu = x.mean(axis=(0, 1))
            xc = x - mu
            var = np.einsum("mlc,mlc->c", xc, xc) / n
            self.running_mean = self.momentum * self.running_mean + (1 - self.momentum) * mu
            self.running_var = self.momentum * self.running_var + (1 - self.momentum) * var
        else:
            xc = x - self.running_mean
            var = self.running_var
        inv = 1.0 / np.sqrt(var + self.eps)
        xhat = xc * inv
        self._xhat = xhat
        self._inv = inv
        self._n = n
        return self.gamma * xhat + self.beta

    def backward(self, gout: np.ndarray) -> np.ndarray:
        # train-mode statistics: gradient flows through batch mean and variance
        xhat, inv, n = self._xhat, self._inv, self._n
        gbeta = gout.sum(axis=(0, 1))
        ggamma = np.einsum("mlc,mlc->c", gout, xhat)
        self.gbeta += gbeta
        self.ggamma += ggamma
        coef = self.gamma * inv / n
        return coef * (n * gout - gbeta - xhat * ggamma)

    def tensors(self, prefix: str) -> dict:
        return {
            f"{prefix}.gamma": self.gamma,
            f"{prefix}.beta": self.beta,
            f"{prefix}.running_mean": self.running_mean,
            f"{prefix}.running_var": self.running_var,
        }

    def trainable(self, prefix: str) -> dict:
        return {f"{prefix}.gamma": self.gamma, f"{prefix}.beta": self.beta}

    def grads(self, prefix: str) -> dict:
        return {f"{prefix}.gamma": self.ggamma, f"{prefix}.beta": self.gbeta}


class ResidualBlock:
    """conv(7)+BN+ReLU, conv(5)+BN+ReLU, conv(3)+BN, shortcut add, ReLU.

    The shortcut is a kernel-1 projection conv + BN when the channel count
    changes, identity otherwise.
    """

    def __init__(self, c_in: int, c_out: int, rng: np.random.Generator):
        self.conv1 = Conv1d(c_in, c_out, 7, rng)
        self.bn1 = BatchNorm1d(c_out)
        self.conv2 = Conv1d(c_out, c_out, 5, rng)
        self.bn2 = BatchNorm1d(c_out)
        self.conv3 = Conv1d(c_out, c_out, 3, rng)
        self.bn3 = BatchNorm1d(c_out)
        if c_in != c_out:
            self.proj = Conv1d(c_in, c_out, 1, rng)
            self.bnp = BatchNorm1d(c_out)
        else:
            self.proj = None
            self.bnp = None

    def forward(self, x: np.ndarray, train: bool) -> np.ndarray:
        b1 = self.bn1.forward(self.conv1.forward(x), train)
        self._m1 = b1 > 0
        r1 = b1 * self._m1
        b2 = self.bn2.forward(self.conv2.forward(r1), train)
        self._m2 = b2 > 0
        r2 = b2 * self._m2
        b3 = self.bn3.forward(self.conv3.forward(r2), train)
        s = x if self.proj is None else self.bnp.forward(self.proj.forward(x), train)
        out = b3 + s
        self._mo = out > 0
        return out * self._mo

    def backward(self, gout: np.ndarray) -> np.ndarray:
        g = gout * self._mo
        g3 = self.conv3.backward(self.bn3.backward(g))
        g3 *= self._m2
        g2 = self.conv2.backward(self.bn2.backward(g3))
        g2 *= self._m1
        gx = self.conv1.backward(self.bn1.backward(g2))
        if self.proj is None:
            gx = gx + g
        else:
            gx = gx + self.proj.backward(self.bnp.backward(g))
        return gx

    def _parts(self, prefix):
        parts = [
            (f"{prefix}.conv1", self.conv1), (f"{prefix}.bn1", self.bn1),
            (f"{prefix}.conv2", self.conv2), (f"{prefix}.bn2", self.bn2),
            (f"{prefix}.conv3", self.conv3), (f"{prefix}.bn3", self.bn3),
        ]
        if self.proj is not None:
            parts += [(f"{prefix}.proj", self.proj), (f"{prefix}.bnp", self.bnp)]
        return parts

    def tensors(self, prefix: str) -> dict:
        out = {}
        for name, layer in self._parts(prefix):
            out.update(layer.tensors(name))
        return out

    def trainable(self, prefix: str) -> dict:
        out = {}
        for name, layer in self._parts(prefix):
            out.update(layer.trainable(name) if isinstance(layer, BatchNorm1d) else layer.tensors(name))
        return out

    def grads(self, prefix: str) -> dict:
        out = {}
        for name, layer in self._parts(prefix):
            out.update(layer.grads(name))
        return out


class GcnLayer:
    """One graph convolution: E @ Z @ W + b for row-stochastic E."""

    def __init__(self, d_in: int, d_out: int, rng: np.random.Generator):
        self.w = _uniform_fanin(rng, (d_in, d_out), d_in)
        self.b = np.zeros(d_out)
        self.gw = np.zeros_like(self.w)
        self.gb = np.zeros_like(self.b)

    def forward(self, z: np.ndarray, E: np.ndarray) -> np.ndarray:
        if z.shape[1] != self.w.shape[0]:
            raise ShapeError(f"embedding dim {z.shape[1]} != layer input {self.w.shape[0]}")
        self._agg = E @ z
        self._E = E
        return self._agg @ self.w + self.b

    def backward(self, gout: np.ndarray) -> np.ndarray:
        self.gw += self._agg.T @ gout
        self.gb += gout.sum(axis=0)
        return self._E.T @ (gout @ self.w.T)

    def tensors(self, prefix: str) -> dict:
        return {f"{prefix}.w": self.w, f"{prefix}.b": self.b}

    def grads(self, prefix: str) -> dict:
        return {f"{prefix}.w": self.gw, f"{prefix}.b": self.gb}


class Model:
    """Backbone embedding (m, 64) -> GCN layer(s) -> logits (m, C)."""

    EMBED_DIM = 64
    MIN_LENGTH = 7  # largest conv kernel

    def __init__(self, n_classes: int, n_gcn_layers: int = 1, seed: int = 0):
        if n_classes < 1:
            raise ValueError("n_classes must be >= 1")
        if n_gcn_layers < 1:
            raise ValueError("need at least one graph layer")
        rng = np.random.Generator(np.random.PCG64(np.random.SeedSequence(entropy=seed, spawn_key=(1,))))
        self.n_classes = n_classes
        self.blocks = [
            ResidualBlock(1, self.EMBED_DIM, rng),
            ResidualBlock(self.EMBED_DIM, self.EMBED_DIM, rng),
            ResidualBlock(self.EMBED_DIM, self.EMBED_DIM, rng),
        ]
        dims = [self.EMBED_DIM] * n_gcn_layers + [n_classes]
        self.gcn = [GcnLayer(dims[i], dims[i + 1], rng) for i in range(n_gcn_layers)]

    # --- forward/backward ---

    def backbone_forward(self, x: np.ndarray, train: bool) -> np.ndarray:
        """(m, L) series -> (m, 64) embeddings via blocks + global average pool."""
        if x.ndim != 2:
            raise ShapeError("expected a (m, L) batch")
        if x.shape[1] < self.MIN_LENGTH:
            raise ShapeError(f"series length {x.shape[1]} < {self.MIN_LENGTH}")
        h = np.ascontiguousarray(x, dtype=np.float64)[:, :, None]
        for blk in self.blocks:
            h = blk.forward(h, train)
        self._pool_len = h.shape[1]
        emb = h.mean(axis=1)
        if not np.all(np.isfinite(emb)):
            raise NumericalDivergence("non-finite activation in backbone")
        return emb

    def gcn_forward(self, z: np.ndarray, E: np.ndarray) -> np.ndarray:
        """Embeddings + row-stochastic graph -> logits; ReLU between layers only."""
        self._gcn_masks = []
        h = z
        for layer in self.gcn[:-1]:
            h = layer.forward(h, E)
            mask = h > 0
            self._gcn_masks.append(mask)
            h = h * mask
        h = self.gcn[-1].forward(h, E)
        if not np.all(np.isfinite(h)):
            raise NumericalDivergence("non-finite logits")
        return h

    def forward(self, x: np.ndarray, E: np.ndarray, train: bool) -> np.ndarray:
        return self.gcn_forward(self.backbone_forward(x, train), E)

    def backward(self, glogits: np.ndarray):
        g = self.gcn[-1].backward(glogits)
        for layer, mask in zip(reversed(self.gcn[:-1]), reversed(self._gcn_masks)):
            g = layer.backward(g * mask)
        # global-average-pool backward: spread evenly over the time axis
        g = np.broadcast_to(g[:, None, :] / self._pool_len, (g.shape[0], self._pool_len, g.shape[1]))
        for blk in reversed(self.blocks):
            g = blk.backward(g)

    # --- parameter access ---

    def _named_parts(self):
        parts = [(f"block{i + 1}", blk) for i, blk in enumerate(self.blocks)]
        parts += [(f"gcn{i + 1}", layer) for i, layer in enumerate(self.gcn)]
        return parts

    def state(self) -> dict:
        """All tensors (weights + batch-norm running stats), for checkpoints."""
        out = {}
        for name, part in self._named_parts():
            out.update(part.tensors(name))
        return out

    def parameters(self) -> dict:
        """Trainable tensors only."""
        out = {}
        for name, part in self._named_parts():
            out.update(part.trainable(name) if isinstance(part, ResidualBlock) else part.tensors(name))
        return out

    def gradients(self) -> dict:
        out = {}
        for name, part in self._named_parts():
            out.update(part.grads(name))
        return out

    def zero_grads(self):
        for g in self.gradients().values():
            g[...] = 0.0

    def load_state(self, tensors: dict):
        own = self.state()
        for name, arr in own.items():
            if name not in tensors:
                raise ShapeError(f"checkpoint missing tensor {name}")
            if tensors[name].shape != arr.shape:
                raise ShapeError(
                    f"tensor {name}: checkpoint shape {tensors[name].shape} != model {arr.shape}"
                )
            arr[...] = tensors[name]


def softmax_xent(logits: np.ndarray, labels: np.ndarray, labeled_mask: np.ndarray):
    """Mean cross-entropy over labeled rows.

    labels hold class ids 1..C, read only where labeled_mask is True.
    Returns (loss, probs, dloss/dlogits).
    """
    shifted = logits - logits.max(axis=1, keepdims=True)
    e = np.exp(shifted)
    probs = e / e.sum(axis=1, keepdims=True)
    rows = np.flatnonzero(labeled_mask)
    if rows.size == 0:
        raise NoSupervision("no labeled rows in batch")
    cols = np.asarray(labels)[rows] - 1
    loss = float(-np.log(probs[rows, cols]).mean())
    glogits = np.zeros_like(logits)
    glogits[rows] = probs[rows]
    glogits[rows, cols] -= 1.0
    glogits /= rows.size
    return loss, probs, glogits


@dataclass
class AdamState:
    m: dict = field(default_factory=dict)
    v: dict = field(default_factory=dict)
    t: int = 0


def adam_step(
    params: dict,
    grads: dict,
    state: AdamState,
    lr: float,
    weight_decay: float,
    beta1: float = 0.9,
    beta2: float = 0.999,
    eps: float = 1e-8,
):
    """In-place Adam with bias correction; weight decay is the classic
    loss-coupled L2 term added to the gradient."""
    state.t += 1
    t = state.t
    for name, p in params.items():
        g = grads[name] + weight_decay * p
        m = state.m.get(name)
        if m is None:
            m = state.m[name] = np.zeros_like(p)
        v = state.v.get(name)
        if v is None:
            v = state.v[name] = np.zeros_like(p)
        m *= beta1
        m += (1 - beta1) * g
        v *= beta2
        v += (1 - beta2) * g * g
        mhat = m / (1 - beta1**t)
        vhat = v / (1 - beta2**t)
        p -= lr * mhat / (np.sqrt(vhat) + eps)


# --- checkpoint file ---

def save_checkpoint(path: str | Path, tensors: dict):
    """LBCK binary: magic, version, count, then (name, dims, f64 LE data) per tensor."""
    chunks = [_CKPT_MAGIC, struct.pack("<BI", _CKPT_VERSION, len(tensors))]
    for name in sorted(tensors):
        arr = np.ascontiguousarray(tensors[name], dtype="<f8")
        enc = name.encode("utf-8")
        chunks.append(struct.pack("<H", len(enc)))
        chunks.append(enc)
        chunks.append(struct.pack("<B", arr.ndim))
        chunks.append(struct.pack(f"<{arr.ndim}I", *arr.shape))
        chunks.append(arr.tobytes())
    Path(path).write_bytes(b"".join(chunks))


def load_checkpoint(path: str | Path) -> dict:
    blob = Path(path).read_bytes()
    if len(blob) < 9:
        raise TruncatedFile(f"{path}: shorter than header")
    if blob[:4] != _CKPT_MAGIC:
        raise FormatError(f"{path}: bad magic {blob[:4]!r}")
    version, count = struct.unpack("<BI", blob[4:9])
    if version != _CKPT_VERSION:
        raise FormatError(f"{path}: unsupported version {version}")
    pos = 9
    out = {}
    try:
        for _ in range(count):
            (nlen,) = struct.unpack_from("<H", blob, pos)
            pos += 2
            name = blob[pos : pos + nlen].decode("utf-8")
            pos += nlen
            (ndim,) = struct.unpack_from("<B", blob, pos)
            pos += 1
            shape = struct.unpack_from(f"<{ndim}I", blob, pos)
            pos += 4 * ndim
            size = 8 * int(np.prod(shape, dtype=np.int64)) if ndim else 8
            if pos + size > len(blob):
                raise TruncatedFile(f"{path}: tensor {name} payload ends early")
            out[name] = np.frombuffer(blob[pos : pos + size], dtype="<f8").reshape(shape).copy()
            pos += size
    except struct.error:
        raise TruncatedFile(f"{path}: header fields end early") from None
    return out
