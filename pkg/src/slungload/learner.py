"""Clipped-surrogate policy-gradient training with hand-derived gradients.

The stochastic policy is a tanh-squashed diagonal Gaussian: the actor MLP
outputs the pre-squash mean, a learned state-independent log-std provides the
spread, samples are squashed with tanh, and the log density carries the
change-of-variables correction. The pre-squash samples are stored in the
rollout buffer, so the correction term cancels inside probability ratios but
is still reported in absolute log probabilities.

Everything is float64 numpy. Gradients are assembled analytically (see
``nets``), clipped by global norm, and applied with Adam. Advantage
estimation is GAE(lambda) with truncation-aware bootstrapping: a time-limit
cut bootstraps the value of the terminal observation while a real
termination bootstraps zero.
"""

from __future__ import annotations

import csv
import math
import os
from dataclasses import dataclass, field

import numpy as np

from .env import EnvConfig, VecEnv
from .errors import DimensionMismatch, NonFiniteLoss
from .nets import (ACTION_DIM, PolicyParams, actor_backward, actor_forward,
                   critic_backward, critic_forward, init_policy, save_checkpoint)

_HALF_LOG_2PI = 0.5 * math.log(2.0 * math.pi)
_LOG2 = math.log(2.0)


@dataclass(frozen=True)
class PpoConfig:
    total_timesteps: int = 2_000_000
    num_envs: int = 256
    rollout_steps: int = 128
    minibatch_size: int = 1024
    epochs: int = 4
    gamma: float = 0.99
    gae_lambda: float = 0.95
    clip_range: float = 0.2
    learning_rate: float = 3e-4
    entropy_coef: float = 0.003
    value_coef: float = 0.5
    max_grad_norm: float = 1.0
    normalize_advantage: bool = True
    checkpoint_every: int = 0   # iterations; 0 = final checkpoint only


# ---------------------------------------------------------------------------
# squashed-Gaussian densities

def _log_one_minus_tanh_sq(z: np.ndarray) -> np.ndarray:
    """log(1 - tanh(z)^2), evaluated without cancellation for large |z|."""
    az = np.abs(z)
    return 2.0 * (_LOG2 - az - np.log1p(np.exp(-2.0 * az)))


def _gaussian_log_prob(z: np.ndarray, mean: np.ndarray, log_std: np.ndarray) -> np.ndarray:
    t = (z - mean) / np.exp(log_std)
    return np.sum(-0.5 * t * t - log_std - _HALF_LOG_2PI, axis=-1)


def squashed_log_prob(z: np.ndarray, mean: np.ndarray, log_std: np.ndarray) -> np.ndarray:
    """Log density of action tanh(z) under the squashed Gaussian."""
    return _gaussian_log_prob(z, mean, log_std) - np.sum(_log_one_minus_tanh_sq(z), axis=-1)


def policy_entropy(log_std: np.ndarray) -> float:
    """Entropy of the pre-squash Gaussian (the term the bonus differentiates)."""
    return float(np.sum(log_std + 0.5 + _HALF_LOG_2PI))


def sample_action(params: PolicyParams, obs: np.ndarray, rng: np.random.Generator):
    """Stochastic action in [-1, 1]^4 with its log probability.

    Works for one observation (D,) or a batch (..., D).
    """
    o = np.asarray(obs, dtype=np.float64)
    single = o.ndim == 1
    flat = o.reshape(-1, params.obs_dim)
    u, _ = actor_forward(params, flat)
    z = u + np.exp(params.log_std) * rng.standard_normal(u.shape)
    logp = squashed_log_prob(z, u, params.log_std)
    action = np.tanh(z)
    if single:
        return action[0], float(logp[0])
    lead = o.shape[:-1]
    return action.reshape(lead + (ACTION_DIM,)), logp.reshape(lead)


# ---------------------------------------------------------------------------
# rollout collection

@dataclass
class RolloutBuffer:
    obs: np.ndarray        # (T, N, D)
    pre_tanh: np.ndarray   # (T, N, 4) stored Gaussian samples
    log_prob: np.ndarray   # (T, N)
    value: np.ndarray      # (T, N)
    reward: np.ndarray     # (T, N)
    done: np.ndarray       # (T, N) terminated or truncated
    use_next: np.ndarray   # (T, N) True -> bootstrap with value[t+1]
    bootstrap: np.ndarray  # (T, N) used where use_next is False
    value_end: np.ndarray  # (N,) value of the observation after the last step
    advantage: np.ndarray | None = None
    returns: np.ndarray | None = None

    @property
    def horizon(self) -> int:
        return self.obs.shape[0]

    @property
    def num_envs(self) -> int:
        return self.obs.shape[1]


@dataclass
class RolloutStats:
    episodes: int = 0
    successes: int = 0
    return_sum: float = 0.0
    speed_sum: float = 0.0
    speed_count: int = 0
    max_speed: float = 0.0

    @property
    def success_rate(self) -> float:
        return self.successes / self.episodes if self.episodes else float("nan")

    @property
    def mean_return(self) -> float:
        return self.return_sum / self.episodes if self.episodes else float("nan")

    @property
    def mean_speed(self) -> float:
        return self.speed_sum / self.speed_count if self.speed_count else 0.0


def collect_rollout(env: VecEnv, params: PolicyParams, obs: np.ndarray, steps: int,
                    rng: np.random.Generator):
    """Gather one on-policy segment from a vectorized env with auto-reset.

    Returns (buffer, next_obs, stats).
    """
    n, d = env.num_envs, env.obs_dim
    buf = RolloutBuffer(
        obs=np.empty((steps, n, d)), pre_tanh=np.empty((steps, n, ACTION_DIM)),
        log_prob=np.empty((steps, n)), value=np.empty((steps, n)),
        reward=np.empty((steps, n)), done=np.zeros((steps, n), dtype=bool),
        use_next=np.ones((steps, n), dtype=bool), bootstrap=np.zeros((steps, n)),
        value_end=np.zeros(n))
    stats = RolloutStats()
    sigma = np.exp(params.log_std)
    for t in range(steps):
        u, _ = actor_forward(params, obs)
        v, _ = critic_forward(params, obs)
        z = u + sigma * rng.standard_normal(u.shape)
        buf.obs[t] = obs
        buf.pre_tanh[t] = z
        buf.log_prob[t] = squashed_log_prob(z, u, params.log_std)
        buf.value[t] = v
        obs, rb, term, trunc, info = env.step(np.tanh(z))
        done = term | trunc
        buf.reward[t] = rb.total
        buf.done[t] = done
        buf.use_next[t] = ~done
        if np.any(done):
            buf.bootstrap[t][term] = 0.0
            cut = trunc & ~term
            if np.any(cut):
                fv, _ = critic_forward(params, info["final_observation"][cut])
                buf.bootstrap[t][cut] = fv
            stats.episodes += int(done.sum())
            stats.successes += int(info["success"][done].sum())
            stats.return_sum += float(info["episode_return"][done].sum())
        speeds = np.sqrt(np.sum(info["quad_vel"] ** 2, axis=-1))
        stats.speed_sum += float(speeds.sum())
        stats.speed_count += speeds.size
        stats.max_speed = max(stats.max_speed, float(speeds.max()))
    buf.value_end, _ = critic_forward(params, obs)
    return buf, obs, stats


def compute_gae(buf: RolloutBuffer, cfg: PpoConfig) -> None:
    """Fill advantages and returns in place (returns = advantage + value)."""
    t_max, n = buf.horizon, buf.num_envs
    adv = np.zeros((t_max, n))
    carry = np.zeros(n)
    for t in range(t_max - 1, -1, -1):
        v_after = buf.value[t + 1] if t + 1 < t_max else buf.value_end
        v_next = np.where(buf.use_next[t], v_after, buf.bootstrap[t])
        delta = buf.reward[t] + cfg.gamma * v_next - buf.value[t]
        carry = delta + cfg.gamma * cfg.gae_lambda * np.where(buf.done[t], 0.0, carry)
        adv[t] = carry
    buf.advantage = adv
    buf.returns = adv + buf.value


# ---------------------------------------------------------------------------
# optimizer

@dataclass
class AdamState:
    m: dict[str, np.ndarray]
    v: dict[str, np.ndarray]
    t: int = 0


def adam_init(params: PolicyParams) -> AdamState:
    return AdamState(m={k: np.zeros_like(a) for k, a in params.arrays().items()},
                     v={k: np.zeros_like(a) for k, a in params.arrays().items()})


def adam_step(params: PolicyParams, grads: dict[str, np.ndarray], state: AdamState,
              lr: float, beta1: float = 0.9, beta2: float = 0.999, eps: float = 1e-8) -> None:
    state.t += 1
    bc1 = 1.0 - beta1 ** state.t
    bc2 = 1.0 - beta2 ** state.t
    for key, g in grads.items():
        m = state.m[key]
        v = state.v[key]
        m *= beta1
        m += (1.0 - beta1) * g
        v *= beta2
        v += (1.0 - beta2) * g * g
        p = getattr(params, key)
        p -= lr * (m / bc1) / (np.sqrt(v / bc2) + eps)


def clip_grads(grads: dict[str, np.ndarray], max_norm: float) -> float:
    total = math.sqrt(sum(float(np.sum(g * g)) for g in grads.values()))
    if max_norm > 0 and total > max_norm:
        scale = max_norm / total
        for g in grads.values():
            g *= scale
    return total


# ---------------------------------------------------------------------------
# PPO update

def ppo_loss_and_grads(params: PolicyParams, obs: np.ndarray, pre_tanh: np.ndarray,
                       logp_old: np.ndarray, adv: np.ndarray, returns: np.ndarray,
                       cfg: PpoConfig) -> tuple[dict[str, float], dict[str, np.ndarray]]:
    """Loss terms and analytic parameter gradients for one minibatch.

    The scalar objective is ``policy_loss + value_coef * value_loss
    - entropy_coef * entropy``; the returned gradients are of that objective
    (before any norm clipping). Pure function of its inputs.
    """
    b = obs.shape[0]
    u, a_cache = actor_forward(params, obs)
    sigma = np.exp(params.log_std)
    t_norm = (pre_tanh - u) / sigma
    logp = np.sum(-0.5 * t_norm * t_norm - params.log_std - _HALF_LOG_2PI, axis=-1) \
        - np.sum(_log_one_minus_tanh_sq(pre_tanh), axis=-1)
    log_ratio = logp - logp_old
    ratio = np.exp(log_ratio)
    surr = np.minimum(ratio * adv,
                      np.clip(ratio, 1.0 - cfg.clip_range, 1.0 + cfg.clip_range) * adv)
    policy_loss = -float(surr.mean())

    v, c_cache = critic_forward(params, obs)
    v_err = v - returns
    value_loss = 0.5 * float(np.mean(v_err * v_err))
    entropy = policy_entropy(params.log_std)

    # gradient through the unclipped branch only where it is active
    active = np.where(adv >= 0.0, ratio <= 1.0 + cfg.clip_range,
                      ratio >= 1.0 - cfg.clip_range)
    d_logp = -(adv * ratio * active) / b
    d_u = d_logp[:, None] * (t_norm / sigma)  # dlogp/du = (z-u)/sigma^2
    grads = actor_backward(params, a_cache, d_u)
    g_log_std = np.sum(d_logp[:, None] * (t_norm * t_norm - 1.0), axis=0)
    g_log_std -= cfg.entropy_coef  # d(-c_ent * H)/dlog_std = -c_ent
    grads["log_std"] = g_log_std
    d_v = cfg.value_coef * v_err / b
    grads.update(critic_backward(params, c_cache, d_v))

    with np.errstate(over="ignore"):
        approx_kl = float(np.mean((ratio - 1.0) - log_ratio))
    terms = {
        "policy_loss": policy_loss,
        "value_loss": value_loss,
        "entropy": entropy,
        "loss": policy_loss + cfg.value_coef * value_loss - cfg.entropy_coef * entropy,
        "approx_kl": approx_kl,
        "clip_fraction": float(np.mean(np.abs(ratio - 1.0) > cfg.clip_range)),
    }
    return terms, grads


def ppo_update(params: PolicyParams, buf: RolloutBuffer, cfg: PpoConfig,
               opt: AdamState, rng: np.random.Generator) -> dict[str, float]:
    """Run the clipped-surrogate epochs over one buffer, updating in place.

    Returns averaged diagnostics. Raises NonFiniteLoss (with the offending
    quantities in the message) if a loss or gradient goes non-finite.
    """
    if buf.advantage is None or buf.returns is None:
        raise DimensionMismatch("compute_gae must run before ppo_update")
    t_max, n, d = buf.obs.shape
    batch = t_max * n
    obs = buf.obs.reshape(batch, d)
    z = buf.pre_tanh.reshape(batch, ACTION_DIM)
    logp_old = buf.log_prob.reshape(batch)
    adv = buf.advantage.reshape(batch)
    returns = buf.returns.reshape(batch)
    if cfg.normalize_advantage:
        adv = (adv - adv.mean()) / (adv.std() + 1e-8)

    agg = {k: 0.0 for k in ("policy_loss", "value_loss", "entropy",
                            "approx_kl", "clip_fraction", "grad_norm")}
    n_updates = 0
    for epoch in range(cfg.epochs):
        order = rng.permutation(batch)
        for start in range(0, batch, cfg.minibatch_size):
            mb = order[start:start + cfg.minibatch_size]
            terms, grads = ppo_loss_and_grads(
                params, obs[mb], z[mb], logp_old[mb], adv[mb], returns[mb], cfg)
            if not math.isfinite(terms["loss"]):
                raise NonFiniteLoss(
                    f"non-finite loss (policy={terms['policy_loss']}, "
                    f"value={terms['value_loss']}, entropy={terms['entropy']}) "
                    f"at update {n_updates}")

            norm = clip_grads(grads, cfg.max_grad_norm)
            if not math.isfinite(norm):
                raise NonFiniteLoss(f"non-finite gradient norm at update {n_updates}")
            adam_step(params, grads, opt, cfg.learning_rate)

            for key in ("policy_loss", "value_loss", "entropy", "approx_kl",
                        "clip_fraction"):
                agg[key] += terms[key]
            agg["grad_norm"] += norm
            n_updates += 1
    return {k: v / n_updates for k, v in agg.items()}


# ---------------------------------------------------------------------------
# training loop

CURVE_FIELDS = ("iteration", "timesteps", "episodes", "mean_return", "success_rate",
                "mean_speed", "max_speed", "policy_loss", "value_loss", "entropy",
                "approx_kl", "clip_fraction", "grad_norm")


@dataclass
class TrainResult:
    params: PolicyParams
    curve: list[dict]
    timesteps: int
    checkpoint_path: str | None = None
    curve_path: str | None = None


def write_curve(rows: list[dict], path) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(CURVE_FIELDS)
        for row in rows:
            writer.writerow([repr(row[k]) if isinstance(row[k], float) else row[k]
                             for k in CURVE_FIELDS])


def train(env_cfg: EnvConfig, ppo: PpoConfig, seed: int = 0, out_dir=None,
          log_fn=None) -> TrainResult:
    """Full PPO run; deterministic for a fixed seed and config.

    One master seed derives independent streams for env resets, network
    init, action sampling, and minibatch shuffling. With ``out_dir`` set the
    final checkpoint (plus periodic ones) and the training curve CSV land
    there.
    """
    root = np.random.SeedSequence(seed)
    env_ss, init_ss, sample_ss, shuffle_ss = root.spawn(4)
    env = VecEnv(env_cfg, ppo.num_envs, seed=env_ss)
    params = init_policy(env.obs_dim, env.kind, np.random.Generator(np.random.Philox(init_ss)))
    opt = adam_init(params)
    rng_sample = np.random.Generator(np.random.Philox(sample_ss))
    rng_shuffle = np.random.Generator(np.random.Philox(shuffle_ss))

    steps_per_iter = ppo.num_envs * ppo.rollout_steps
    iterations = max(1, math.ceil(ppo.total_timesteps / steps_per_iter))
    obs = env.reset()
    curve: list[dict] = []
    ckpt_path = None
    if out_dir is not None:
        os.makedirs(out_dir, exist_ok=True)
    for it in range(1, iterations + 1):
        buf, obs, roll = collect_rollout(env, params, obs, ppo.rollout_steps, rng_sample)
        compute_gae(buf, ppo)
        upd = ppo_update(params, buf, ppo, opt, rng_shuffle)
        row = {
            "iteration": it, "timesteps": it * steps_per_iter,
            "episodes": roll.episodes, "mean_return": roll.mean_return,
            "success_rate": roll.success_rate, "mean_speed": roll.mean_speed,
            "max_speed": roll.max_speed,
        }
        row.update(upd)
        curve.append(row)
        if log_fn is not None:
            log_fn(row)
        if out_dir is not None and ppo.checkpoint_every > 0 and it % ppo.checkpoint_every == 0:
            save_checkpoint(params, os.path.join(out_dir, f"checkpoint_{it:05d}.bin"))
    curve_path = None
    if out_dir is not None:
        ckpt_path = os.path.join(out_dir, "checkpoint_final.bin")
        save_checkpoint(params, ckpt_path)
        curve_path = os.path.join(out_dir, "curve.csv")
        write_curve(curve, curve_path)
    return TrainResult(params=params, curve=curve, timesteps=iterations * steps_per_iter,
                       checkpoint_path=ckpt_path, curve_path=curve_path)
