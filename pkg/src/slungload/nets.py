"""Policy and value networks with hand-written forward and backward passes.

Both heads are two-hidden-layer tanh MLPs (128 units by default). The actor
outputs a pre-squash action mean; a learned state-independent log standard
deviation lives alongside the weights. No autodiff framework is involved:
gradients are assembled analytically in the learner from the caches returned
here. All math runs in float64; checkpoints store float32.

Checkpoint layout (little endian): a 16-byte header
``magic "SLPC" | u16 version | u8 kind | u8 pad | u32 obs_dim | u32 hidden``
followed by the parameter tensors as raw float32 in the fixed order
w1,b1,w2,b2,w3,b3,log_std,v1,c1,v2,c2,v3,c3 (row major).
"""

from __future__ import annotations

import struct
from dataclasses import dataclass, fields

import numpy as np

from .errors import DimensionMismatch, FormatError

ACTION_DIM = 4
HIDDEN_DEFAULT = 128
LOG_STD_INIT = float(np.log(0.5))

_MAGIC = b"SLPC"
_VERSION = 1
_KIND_CODES = {"wp": 0, "pt": 1, "gt": 2}
_KIND_NAMES = {v: k for k, v in _KIND_CODES.items()}
_PARAM_ORDER = ("w1", "b1", "w2", "b2", "w3", "b3", "log_std",
                "v1", "c1", "v2", "c2", "v3", "c3")


@dataclass
class PolicyParams:
    """All learnable tensors of one actor-critic pair."""

    kind: str
    obs_dim: int
    hidden: int
    w1: np.ndarray
    b1: np.ndarray
    w2: np.ndarray
    b2: np.ndarray
    w3: np.ndarray
    b3: np.ndarray
    log_std: np.ndarray
    v1: np.ndarray
    c1: np.ndarray
    v2: np.ndarray
    c2: np.ndarray
    v3: np.ndarray
    c3: np.ndarray

    def arrays(self) -> dict[str, np.ndarray]:
        return {name: getattr(self, name) for name in _PARAM_ORDER}

    def copy(self) -> "PolicyParams":
        kw = {name: getattr(self, name).copy() for name in _PARAM_ORDER}
        return PolicyParams(kind=self.kind, obs_dim=self.obs_dim, hidden=self.hidden, **kw)

    def num_params(self) -> int:
        return sum(a.size for a in self.arrays().values())


def _orthogonal(rng: np.random.Generator, rows: int, cols: int, gain: float) -> np.ndarray:
    a = rng.standard_normal((max(rows, cols), min(rows, cols)))
    q, r = np.linalg.qr(a)
    q = q * np.sign(np.diag(r))  # sign fix makes the factorization unique
    if rows < cols:
        q = q.T
    return gain * q[:rows, :cols]


def init_policy(obs_dim: int, kind: str, rng: np.random.Generator,
                hidden: int = HIDDEN_DEFAULT) -> PolicyParams:
    """Orthogonal initialization; small gain on the action head."""
    if kind not in _KIND_CODES:
        raise FormatError(f"unknown scenario kind {kind!r}")
    h = int(hidden)

    def layer(n_in, n_out, gain):
        return _orthogonal(rng, n_in, n_out, gain), np.zeros(n_out)

    w1, b1 = layer(obs_dim, h, np.sqrt(2.0))
    w2, b2 = layer(h, h, np.sqrt(2.0))
    w3, b3 = layer(h, ACTION_DIM, 0.01)
    v1, c1 = layer(obs_dim, h, np.sqrt(2.0))
    v2, c2 = layer(h, h, np.sqrt(2.0))
    v3, c3 = layer(h, 1, 1.0)
    return PolicyParams(kind=kind, obs_dim=int(obs_dim), hidden=h,
                        w1=w1, b1=b1, w2=w2, b2=b2, w3=w3, b3=b3,
                        log_std=np.full(ACTION_DIM, LOG_STD_INIT),
                        v1=v1, c1=c1, v2=v2, c2=c2, v3=v3, c3=c3)


# ---------------------------------------------------------------------------
# forward / backward

def actor_forward(p: PolicyParams, obs: np.ndarray):
    """Pre-squash mean U (B, 4) plus the activation cache for backprop."""
    h1 = np.tanh(obs @ p.w1 + p.b1)
    h2 = np.tanh(h1 @ p.w2 + p.b2)
    u = h2 @ p.w3 + p.b3
    return u, (obs, h1, h2)


def actor_backward(p: PolicyParams, cache, d_u: np.ndarray) -> dict[str, np.ndarray]:
    """Gradients of a scalar loss w.r.t. actor weights given dL/dU."""
    obs, h1, h2 = cache
    g = {}
    g["w3"] = h2.T @ d_u
    g["b3"] = d_u.sum(axis=0)
    d_h2 = (d_u @ p.w3.T) * (1.0 - h2 * h2)
    g["w2"] = h1.T @ d_h2
    g["b2"] = d_h2.sum(axis=0)
    d_h1 = (d_h2 @ p.w2.T) * (1.0 - h1 * h1)
    g["w1"] = obs.T @ d_h1
    g["b1"] = d_h1.sum(axis=0)
    return g


def critic_forward(p: PolicyParams, obs: np.ndarray):
    """State values (B,) plus the activation cache for backprop."""
    h1 = np.tanh(obs @ p.v1 + p.c1)
    h2 = np.tanh(h1 @ p.v2 + p.c2)
    v = (h2 @ p.v3 + p.c3)[..., 0]
    return v, (obs, h1, h2)


def critic_backward(p: PolicyParams, cache, d_v: np.ndarray) -> dict[str, np.ndarray]:
    obs, h1, h2 = cache
    d_out = d_v[:, None]
    g = {}
    g["v3"] = h2.T @ d_out
    g["c3"] = d_out.sum(axis=0)
    d_h2 = (d_out @ p.v3.T) * (1.0 - h2 * h2)
    g["v2"] = h1.T @ d_h2
    g["c2"] = d_h2.sum(axis=0)
    d_h1 = (d_h2 @ p.v2.T) * (1.0 - h1 * h1)
    g["v1"] = obs.T @ d_h1
    g["c1"] = d_h1.sum(axis=0)
    return g


def policy_forward(params: PolicyParams, obs: np.ndarray):
    """Deterministic inference: (action mean in [-1,1], log_std, value).

    Accepts a single observation (D,) or a batch (..., D) and matches the
    input's leading shape.
    """
    o = np.asarray(obs, dtype=np.float64)
    if o.shape[-1] != params.obs_dim:
        raise DimensionMismatch(
            f"observation dim {o.shape[-1]} does not match network dim {params.obs_dim}")
    single = o.ndim == 1
    flat = o.reshape(-1, params.obs_dim)
    u, _ = actor_forward(params, flat)
    v, _ = critic_forward(params, flat)
    mean = np.tanh(u)
    if single:
        return mean[0], params.log_std.copy(), float(v[0])
    lead = o.shape[:-1]
    return mean.reshape(lead + (ACTION_DIM,)), params.log_std.copy(), v.reshape(lead)


# ---------------------------------------------------------------------------
# checkpoint i/o

_HEADER = struct.Struct("<4sHBBII")


def save_checkpoint(params: PolicyParams, path) -> None:
    """Write the float32 artifact; see the module docstring for the layout."""
    header = _HEADER.pack(_MAGIC, _VERSION, _KIND_CODES[params.kind], 0,
                          params.obs_dim, params.hidden)
    with open(path, "wb") as fh:
        fh.write(header)
        for name in _PARAM_ORDER:
            fh.write(np.ascontiguousarray(getattr(params, name), dtype="<f4").tobytes())


def _shapes(obs_dim: int, hidden: int) -> list[tuple[int, ...]]:
    h = hidden
    return [(obs_dim, h), (h,), (h, h), (h,), (h, ACTION_DIM), (ACTION_DIM,),
            (ACTION_DIM,),
            (obs_dim, h), (h,), (h, h), (h,), (h, 1), (1,)]


def load_checkpoint(path, expect_kind: str | None = None,
                    expect_obs_dim: int | None = None) -> PolicyParams:
    """Read a checkpoint back into float64 training parameters.

    Raises FormatError on a bad magic, unknown version, byte-count mismatch,
    or when the artifact does not match the expected scenario kind / obs dim.
    """
    with open(path, "rb") as fh:
        blob = fh.read()
    if len(blob) < _HEADER.size:
        raise FormatError("checkpoint file too short for its header")
    magic, version, kind_code, _, obs_dim, hidden = _HEADER.unpack_from(blob)
    if magic != _MAGIC:
        raise FormatError("not a policy checkpoint (bad magic)")
    if version != _VERSION:
        raise FormatError(f"unsupported checkpoint version {version}")
    if kind_code not in _KIND_NAMES:
        raise FormatError(f"unknown scenario kind code {kind_code}")
    kind = _KIND_NAMES[kind_code]
    if expect_kind is not None and kind != expect_kind:
        raise FormatError(f"checkpoint is for scenario {kind!r}, expected {expect_kind!r}")
    if expect_obs_dim is not None and obs_dim != expect_obs_dim:
        raise FormatError(f"checkpoint obs_dim {obs_dim}, expected {expect_obs_dim}")
    shapes = _shapes(obs_dim, hidden)
    need = sum(int(np.prod(s)) for s in shapes)
    body = blob[_HEADER.size:]
    if len(body) != 4 * need:
        raise FormatError(f"checkpoint payload has {len(body)} bytes, expected {4 * need}")
    flat = np.frombuffer(body, dtype="<f4")
    out, ofs = {}, 0
    for name, shape in zip(_PARAM_ORDER, shapes):
        size = int(np.prod(shape))
        out[name] = flat[ofs:ofs + size].reshape(shape).astype(np.float64)
        ofs += size
    return PolicyParams(kind=kind, obs_dim=int(obs_dim), hidden=int(hidden), **out)
