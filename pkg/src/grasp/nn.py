"""MLP layers, the Adam optimizer, and the binary parameter-checkpoint format."""

import struct

import numpy as np

from .autodiff import ShapeError, Tensor, linear

ACTIVATIONS = ("elu", "tanh", "none")


class NumericsError(RuntimeError):
    """Raised when a NaN shows up in gradients or losses."""


def _init_weight(rng, fan_in, fan_out):
    bound = 1.0 / np.sqrt(fan_in)
    return rng.uniform(-bound, bound, size=(fan_in, fan_out))


class MLP:
    """Fully connected stack; weights U[-1/sqrt(fan_in), 1/sqrt(fan_in)], zero biases."""

    def __init__(self, sizes, activation="elu", out_activation="none", rng=None, name="mlp"):
        if len(sizes) < 2:
            raise ValueError("mlp needs at least input and output sizes")
        if activation not in ACTIVATIONS or out_activation not in ACTIVATIONS:
            raise ValueError(f"activation must be one of {ACTIVATIONS}")
        rng = rng or np.random.default_rng()
        self.sizes = list(sizes)
        self.activation = activation
        self.out_activation = out_activation
        self.name = name
        self.weights = []
        self.biases = []
        for i, (a, b) in enumerate(zip(sizes[:-1], sizes[1:])):
            w = Tensor(_init_weight(rng, a, b), requires_grad=True, name=f"{name}.w{i}")
            bias = Tensor(np.zeros(b), requires_grad=True, name=f"{name}.b{i}")
            self.weights.append(w)
            self.biases.append(bias)

    def params(self):
        out = []
        for w, b in zip(self.weights, self.biases):
            out.append(w)
            out.append(b)
        return out

    def __call__(self, x):
        if x.data.shape[-1] != self.sizes[0]:
            raise ShapeError(
                f"{self.name}: expected input dim {self.sizes[0]}, got {x.data.shape}"
            )
        h = x
        last = len(self.weights) - 1
        for i, (w, b) in enumerate(zip(self.weights, self.biases)):
            act = self.out_activation if i == last else self.activation
            h = linear(h, w, b, act=act)
        return h


class Adam:
    """Standard Adam with bias correction; rejects NaN gradients by name."""

    def __init__(self, params, lr, beta1=0.9, beta2=0.999, eps=1e-8):
        self.params = list(params)
        self.lr = lr
        self.beta1 = beta1
        self.beta2 = beta2
        self.eps = eps
        self.t = 0
        self.m = [np.zeros_like(p.data) for p in self.params]
        self.v = [np.zeros_like(p.data) for p in self.params]

    def zero_grad(self):
        for p in self.params:
            p.grad = None

    def step(self):
        for p in self.params:
            if p.grad is not None and not np.all(np.isfinite(p.grad)):
                raise NumericsError(f"non-finite gradient in parameter {p.name!r}")
        self.t += 1
        b1t = 1.0 - self.beta1 ** self.t
        b2t = 1.0 - self.beta2 ** self.t
        for i, p in enumerate(self.params):
            g = p.grad
            if g is None:
                continue
            self.m[i] = self.beta1 * self.m[i] + (1.0 - self.beta1) * g
            self.v[i] = self.beta2 * self.v[i] + (1.0 - self.beta2) * g * g
            mhat = self.m[i] / b1t
            vhat = self.v[i] / b2t
            p.data = p.data - self.lr * mhat / (np.sqrt(vhat) + self.eps)


# ------------------------------------------------------------- checkpoints
#
# Flat binary container: magic "GRSP", version u32 LE, then per-tensor
# records of (name_len u32, name utf-8, rank u64, dims u64..., f64 LE data).

MAGIC = b"GRSP"
VERSION = 1


def save_checkpoint(path, named_arrays):
    with open(path, "wb") as f:
        f.write(MAGIC)
        f.write(struct.pack("<I", VERSION))
        for name, arr in named_arrays.items():
            # note: tobytes() below copies, so contiguity never matters, and
            # ascontiguousarray would silently promote 0-d arrays to 1-d
            data = np.asarray(arr, dtype=np.float64)
            raw = name.encode("utf-8")
            f.write(struct.pack("<I", len(raw)))
            f.write(raw)
            f.write(struct.pack("<Q", data.ndim))
            for d in data.shape:
                f.write(struct.pack("<Q", d))
            f.write(data.astype("<f8").tobytes())


def load_checkpoint(path):
    out = {}
    with open(path, "rb") as f:
        if f.read(4) != MAGIC:
            raise ValueError(f"{path}: not a GRSP checkpoint")
        (version,) = struct.unpack("<I", f.read(4))
        if version != VERSION:
            raise ValueError(f"{path}: unsupported checkpoint version {version}")
        while True:
            head = f.read(4)
            if not head:
                break
            (nlen,) = struct.unpack("<I", head)
            name = f.read(nlen).decode("utf-8")
            (rank,) = struct.unpack("<Q", f.read(8))
            shape = tuple(struct.unpack("<Q", f.read(8))[0] for _ in range(rank))
            count = int(np.prod(shape)) if shape else 1
            data = np.frombuffer(f.read(count * 8), dtype="<f8").reshape(shape)
            out[name] = np.array(data, dtype=np.float64)
    return out


def params_hash(params):
    """Stable fingerprint of a parameter list; used to assert frozen/disjoint updates."""
    import hashlib

    h = hashlib.sha256()
    for p in params:
        h.update(p.data.tobytes())
    return h.hexdigest()
