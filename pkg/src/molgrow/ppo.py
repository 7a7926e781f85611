"""Actor-critic PPO over dynamically sized action sets.

The policy trunk maps a state embedding through two tanh layers; a value
head emits a scalar state value and a query head emits a query vector of the
molecule-embedding dimension. Action logits are dot products of the query
with the candidate-product embeddings, so the same parameters score action
sets of any size. Training uses the clipped surrogate objective with
generalized advantage estimation; gradients are computed analytically in
numpy so they can be verified against finite differences.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field, asdict

import numpy as np

from .errors import (
    DimensionMismatchError,
    EmptyActionSetError,
    NonFiniteLossError,
)
from .environment import Trajectory

DEFAULT_STATE_DIM = 768
DEFAULT_HIDDEN = 256

CHECKPOINT_MAGIC = b"MOLGROW-CKPT-1\n"
_PARAM_ORDER = ("W1", "b1", "W2", "b2", "Wv", "bv", "Wq", "bq")


@dataclass
class PPOConfig:
    clip_epsilon: float = 0.2
    gae_lambda: float = 0.95
    gamma: float = 0.99
    learning_rate: float = 3e-4
    epochs_per_update: int = 4
    minibatch_size: int = 64
    entropy_coef: float = 0.01
    value_coef: float = 0.5
    buffer_episodes: int = 8

    def __post_init__(self) -> None:
        if self.clip_epsilon <= 0:
            raise ValueError("clip_epsilon must be > 0")
        if not 0.0 <= self.gae_lambda <= 1.0:
            raise ValueError("gae_lambda must be in [0, 1]")


class PolicyParams:
    """Trunk + value head + query head parameters (float64)."""

    def __init__(
        self,
        state_dim: int = DEFAULT_STATE_DIM,
        hidden: int = DEFAULT_HIDDEN,
        seed: int = 0,
    ) -> None:
        self.state_dim = state_dim
        self.hidden = hidden
        rng = np.random.default_rng(seed)
        s1 = 1.0 / np.sqrt(state_dim)
        s2 = 1.0 / np.sqrt(hidden)
        self.W1 = rng.normal(0.0, s1, (state_dim, hidden))
        self.b1 = np.zeros(hidden)
        self.W2 = rng.normal(0.0, s2, (hidden, hidden))
        self.b2 = np.zeros(hidden)
        self.Wv = rng.normal(0.0, s2, (hidden, 1))
        self.bv = np.zeros(1)
        self.Wq = rng.normal(0.0, s2, (hidden, state_dim))
        self.bq = np.zeros(state_dim)

    def arrays(self) -> dict[str, np.ndarray]:
        return {name: getattr(self, name) for name in _PARAM_ORDER}

    def copy(self) -> "PolicyParams":
        p = PolicyParams.__new__(PolicyParams)
        p.state_dim, p.hidden = self.state_dim, self.hidden
        for name in _PARAM_ORDER:
            setattr(p, name, getattr(self, name).copy())
        return p


def _forward_trunk(S: np.ndarray, params: PolicyParams):
    h1 = np.tanh(S @ params.W1 + params.b1)
    h2 = np.tanh(h1 @ params.W2 + params.b2)
    v = (h2 @ params.Wv + params.bv)[:, 0]
    Q = h2 @ params.Wq + params.bq
    return h1, h2, v, Q


def policy_forward(s: np.ndarray, params: PolicyParams) -> tuple[float, np.ndarray]:
    """Value and query vector for a single state embedding."""
    s = np.asarray(s, dtype=np.float64)
    if s.shape != (params.state_dim,):
        raise DimensionMismatchError(
            f"state has shape {s.shape}, expected ({params.state_dim},)"
        )
    _, _, v, Q = _forward_trunk(s[None, :], params)
    return float(v[0]), Q[0]


def policy_distribution(query: np.ndarray, action_embeddings: np.ndarray) -> np.ndarray:
    """Softmax over dot-product logits, max-subtraction stabilized."""
    E = np.asarray(action_embeddings, dtype=np.float64)
    if E.ndim != 2 or E.shape[0] == 0:
        raise EmptyActionSetError("action set is empty")
    q = np.asarray(query, dtype=np.float64)
    if E.shape[1] != q.shape[0]:
        raise DimensionMismatchError(
            f"action embedding dim {E.shape[1]} != query dim {q.shape[0]}"
        )
    z = E @ q
    z = z - z.max()
    p = np.exp(z)
    return p / p.sum()


def select_action(
    dist: np.ndarray, mode: str = "sample", rng: np.random.Generator | None = None
) -> tuple[int, float]:
    """Draw (sample) or argmax (greedy, lowest-index tie-break) an action."""
    dist = np.asarray(dist, dtype=np.float64)
    if mode == "greedy":
        idx = int(np.argmax(dist))
    elif mode == "sample":
        if rng is None:
            raise ValueError("sample mode requires an rng")
        u = rng.random()
        idx = int(np.searchsorted(np.cumsum(dist), u))
        idx = min(idx, dist.shape[0] - 1)
    else:
        raise ValueError(f"unknown selection mode {mode!r}")
    return idx, float(np.log(dist[idx]))


def compute_gae(
    traj: Trajectory, gamma: float, lam: float
) -> tuple[np.ndarray, np.ndarray]:
    """GAE advantages and returns; terminal bootstrap value is 0."""
    rewards = np.array([s.reward for s in traj.steps], dtype=np.float64)
    values = np.array([s.value_estimate for s in traj.steps], dtype=np.float64)
    n = len(rewards)
    next_values = np.append(values[1:], 0.0)
    deltas = rewards + gamma * next_values - values
    advantages = np.empty(n)
    acc = 0.0
    for t in range(n - 1, -1, -1):
        acc = deltas[t] + gamma * lam * acc
        advantages[t] = acc
    return advantages, advantages + values


@dataclass
class RolloutBuffer:
    trajectories: list[Trajectory] = field(default_factory=list)

    def add(self, traj: Trajectory) -> None:
        if traj.steps:
            self.trajectories.append(traj)

    def __len__(self) -> int:
        return sum(len(t.steps) for t in self.trajectories)

    def flatten(self, gamma: float, lam: float):
        """Per-step training arrays with advantages and returns attached."""
        states, actions, action_sets, old_logps, advs, rets = [], [], [], [], [], []
        for traj in self.trajectories:
            a, r = compute_gae(traj, gamma, lam)
            for step, adv, ret in zip(traj.steps, a, r):
                states.append(step.state.embedding.vector)
                actions.append(step.chosen_index)
                action_sets.append(step.action_set.embedding_matrix())
                old_logps.append(step.log_prob)
                advs.append(adv)
                rets.append(ret)
        return (
            np.asarray(states, dtype=np.float64),
            np.asarray(actions, dtype=np.int64),
            action_sets,
            np.asarray(old_logps, dtype=np.float64),
            np.asarray(advs, dtype=np.float64),
            np.asarray(rets, dtype=np.float64),
        )


@dataclass
class UpdateStats:
    surrogate_loss: float
    value_loss: float
    entropy: float
    clip_fraction: float


def loss_and_grads(
    params: PolicyParams,
    S: np.ndarray,
    actions: np.ndarray,
    action_sets: list[np.ndarray],
    old_logps: np.ndarray,
    advantages: np.ndarray,
    returns: np.ndarray,
    cfg: PPOConfig,
):
    """Total PPO loss plus analytic gradients for every parameter array.

    Loss = -mean(clipped surrogate) + value_coef * value MSE
           - entropy_coef * mean entropy.
    """
    n = S.shape[0]
    h1, h2, v, Q = _forward_trunk(S, params)
    eps = cfg.clip_epsilon

    dQ = np.zeros_like(Q)
    dv = np.zeros_like(v)
    surr_total = 0.0
    ent_total = 0.0
    clipped = 0
    for i in range(n):
        E = action_sets[i]
        z = E @ Q[i]
        z = z - z.max()
        logp = z - np.log(np.exp(z).sum())
        p = np.exp(logp)
        a = actions[i]
        ratio = np.exp(logp[a] - old_logps[i])
        surr1 = ratio * advantages[i]
        surr2 = np.clip(ratio, 1.0 - eps, 1.0 + eps) * advantages[i]
        surr_total += min(surr1, surr2)
        if surr2 < surr1:
            clipped += 1
        ent = -(p * logp).sum()
        ent_total += ent
        dz = np.zeros_like(z)
        if surr1 <= surr2:  # gradient flows through the unclipped branch
            g = -(ratio * advantages[i]) / n
            onehot = np.zeros_like(p)
            onehot[a] = 1.0
            dz += g * (onehot - p)
        # entropy bonus: d(-c_e * ent / n)/dz
        dent_dz = -p * (logp + ent)
        dz += -(cfg.entropy_coef / n) * dent_dz
        dQ[i] = E.T @ dz
    dv[:] = 2.0 * cfg.value_coef * (v - returns) / n

    value_loss = float(np.mean((v - returns) ** 2))
    surrogate_loss = float(-surr_total / n)
    entropy = float(ent_total / n)
    total = (
        surrogate_loss
        + cfg.value_coef * value_loss
        - cfg.entropy_coef * entropy
    )

    dWq = h2.T @ dQ
    dbq = dQ.sum(axis=0)
    dWv = h2.T @ dv[:, None]
    dbv = np.array([dv.sum()])
    dh2 = dQ @ params.Wq.T + dv[:, None] @ params.Wv.T
    dpre2 = dh2 * (1.0 - h2 * h2)
    dW2 = h1.T @ dpre2
    db2 = dpre2.sum(axis=0)
    dh1 = dpre2 @ params.W2.T
    dpre1 = dh1 * (1.0 - h1 * h1)
    dW1 = S.T @ dpre1
    db1 = dpre1.sum(axis=0)

    grads = {
        "W1": dW1, "b1": db1, "W2": dW2, "b2": db2,
        "Wv": dWv, "bv": dbv, "Wq": dWq, "bq": dbq,
    }
    stats = UpdateStats(
        surrogate_loss=surrogate_loss,
        value_loss=value_loss,
        entropy=entropy,
        clip_fraction=clipped / max(1, n),
    )
    return total, grads, stats


class AdamState:
    def __init__(self, params: PolicyParams):
        self.m = {k: np.zeros_like(a) for k, a in params.arrays().items()}
        self.v = {k: np.zeros_like(a) for k, a in params.arrays().items()}
        self.t = 0

    def step(self, params: PolicyParams, grads: dict, lr: float) -> None:
        b1, b2, eps = 0.9, 0.999, 1e-8
        self.t += 1
        for k, g in grads.items():
            self.m[k] = b1 * self.m[k] + (1 - b1) * g
            self.v[k] = b2 * self.v[k] + (1 - b2) * g * g
            mhat = self.m[k] / (1 - b1**self.t)
            vhat = self.v[k] / (1 - b2**self.t)
            getattr(params, k)[...] -= lr * mhat / (np.sqrt(vhat) + eps)


def ppo_update(
    buffer: RolloutBuffer,
    params: PolicyParams,
    cfg: PPOConfig,
    rng: np.random.Generator,
    adam: AdamState | None = None,
) -> tuple[PolicyParams, AdamState, UpdateStats]:
    """Run epochs of minibatch clipped-surrogate updates over the buffer.

    Advantages are normalized to zero mean / unit variance per batch. On a
    non-finite loss the update aborts with NonFiniteLossError and the input
    parameters are returned unchanged (the returned params object is a
    fresh copy; the caller's params are never mutated on failure).
    """
    if not buffer.trajectories:
        raise ValueError("empty rollout buffer")
    S, actions, action_sets, old_logps, advs, rets = buffer.flatten(
        cfg.gamma, cfg.gae_lambda
    )
    if not (
        np.isfinite(advs).all()
        and np.isfinite(rets).all()
        and np.isfinite(old_logps).all()
    ):
        raise NonFiniteLossError("non-finite values in rollout buffer")
    advs = (advs - advs.mean()) / (advs.std() + 1e-8)

    new_params = params.copy()
    adam = adam or AdamState(new_params)
    n = S.shape[0]
    stats: UpdateStats | None = None
    for _ in range(cfg.epochs_per_update):
        order = rng.permutation(n)
        for start in range(0, n, cfg.minibatch_size):
            idx = order[start : start + cfg.minibatch_size]
            total, grads, stats = loss_and_grads(
                new_params,
                S[idx],
                actions[idx],
                [action_sets[i] for i in idx],
                old_logps[idx],
                advs[idx],
                rets[idx],
                cfg,
            )
            if not np.isfinite(total):
                raise NonFiniteLossError(f"non-finite loss {total}")
            adam.step(new_params, grads, cfg.learning_rate)
    assert stats is not None
    return new_params, adam, stats


class PPOAgent:
    """Stateful convenience wrapper implementing the environment's policy
    protocol and owning the optimizer and update RNG."""

    def __init__(
        self,
        cfg: PPOConfig | None = None,
        state_dim: int = DEFAULT_STATE_DIM,
        hidden: int = DEFAULT_HIDDEN,
        seed: int = 0,
        mode: str = "sample",
    ) -> None:
        self.cfg = cfg or PPOConfig()
        self.params = PolicyParams(state_dim=state_dim, hidden=hidden, seed=seed)
        self.adam = AdamState(self.params)
        self.rng = np.random.default_rng(seed + 1)
        self.mode = mode

    def act(self, state_embedding, action_embeddings, rng) -> tuple[int, float, float]:
        value, query = policy_forward(state_embedding, self.params)
        dist = policy_distribution(query, action_embeddings)
        idx, logp = select_action(dist, self.mode, rng)
        return idx, logp, value

    def update(self, buffer: RolloutBuffer) -> UpdateStats:
        self.params, self.adam, stats = ppo_update(
            buffer, self.params, self.cfg, self.rng, self.adam
        )
        return stats

    # -- checkpointing -----------------------------------------------------

    def save_checkpoint(self, path) -> None:
        header = {
            "state_dim": self.params.state_dim,
            "hidden": self.params.hidden,
            "config": asdict(self.cfg),
            "mode": self.mode,
            "rng_state": _rng_state_to_json(self.rng),
            "shapes": {k: list(a.shape) for k, a in self.params.arrays().items()},
        }
        payload = b"".join(
            np.ascontiguousarray(self.params.arrays()[k], dtype="<f8").tobytes()
            for k in _PARAM_ORDER
        )
        with open(path, "wb") as fh:
            fh.write(CHECKPOINT_MAGIC)
            fh.write(json.dumps(header, sort_keys=True).encode() + b"\n")
            fh.write(payload)

    @classmethod
    def load_checkpoint(cls, path) -> "PPOAgent":
        with open(path, "rb") as fh:
            magic = fh.read(len(CHECKPOINT_MAGIC))
            if magic != CHECKPOINT_MAGIC:
                raise ValueError("not a checkpoint file")
            header = json.loads(fh.readline())
            payload = fh.read()
        agent = cls(
            cfg=PPOConfig(**header["config"]),
            state_dim=header["state_dim"],
            hidden=header["hidden"],
            mode=header["mode"],
        )
        off = 0
        for k in _PARAM_ORDER:
            shape = tuple(header["shapes"][k])
            size = int(np.prod(shape))
            arr = np.frombuffer(payload, dtype="<f8", count=size, offset=off)
            setattr(agent.params, k, arr.reshape(shape).copy())
            off += size * 8
        agent.rng = _rng_state_from_json(header["rng_state"])
        agent.adam = AdamState(agent.params)
        return agent


def _rng_state_to_json(rng: np.random.Generator) -> dict:
    state = rng.bit_generator.state
    return json.loads(json.dumps(state, default=int))


def _rng_state_from_json(state: dict) -> np.random.Generator:
    rng = np.random.default_rng(0)
    rng.bit_generator.state = state
    return rng
