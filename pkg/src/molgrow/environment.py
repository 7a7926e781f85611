"""Episodic molecule-growing environment.

Episodes start from a sampled fragment and run for at most ``horizon``
(default 15) steps; each step applies one reaction-template product chosen
from the dynamic action set. In terminal reward mode (default) the reward is
0 until the episode ends and the full scalarized breakdown is emitted once,
on the final molecule; dense mode scores every step. An empty action set
ends the episode early with the terminal reward on the current molecule.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .chem.engine import PurePythonEngine, default_engine
from .core import Molecule, compute_descriptors
from .encoders import EmbeddingCache, EncoderSpec, Embedding, encode_molecule, encode_molecules
from .errors import DockingFailure, EmptyPoolError
from .fragmenter import FragmentPool, sample_start
from .rewards import (
    DockingTask,
    ProteinTarget,
    RewardBreakdown,
    RewardWeights,
    ScoreCache,
    dock,
    novelty,
    scalarize,
    surrogate_dock,
)
from .templates import DEFAULT_MAX_ACTIONS, TemplateLibrary, enumerate_actions


@dataclass
class EnvConfig:
    horizon: int = 15
    gamma: float = 0.99
    reward_mode: str = "terminal"  # "terminal" | "dense"
    max_actions: int = DEFAULT_MAX_ACTIONS
    rng_seed: int = 0

    def __post_init__(self) -> None:
        if self.horizon < 1:
            raise ValueError("horizon must be >= 1")
        if not 0.0 < self.gamma <= 1.0:
            raise ValueError("gamma must be in (0, 1]")
        if self.reward_mode not in ("terminal", "dense"):
            raise ValueError(f"unknown reward_mode {self.reward_mode!r}")


@dataclass(frozen=True)
class EnvState:
    molecule: Molecule
    embedding: Embedding
    step_index: int


@dataclass
class ActionSet:
    entries: list[tuple[int, Molecule, Embedding]]

    @property
    def K(self) -> int:
        return len(self.entries)

    def embedding_matrix(self) -> np.ndarray:
        return np.stack([e.vector for _, _, e in self.entries])


@dataclass
class TrajectoryStep:
    state: EnvState
    action_set: ActionSet
    chosen_index: int
    log_prob: float
    value_estimate: float
    reward: float


@dataclass
class Trajectory:
    steps: list[TrajectoryStep] = field(default_factory=list)
    terminal_molecule: Molecule | None = None
    terminal_breakdown: RewardBreakdown | None = None
    docked_score: float | None = None


class RewardOracles:
    """Bundles the reward components behind one terminal-score call."""

    def __init__(
        self,
        reference: set[str],
        weights: RewardWeights | None = None,
        oracle: str = "surrogate",
        target: ProteinTarget | None = None,
        target_seed: int = 0,
        score_cache: ScoreCache | None = None,
        engine_command: list[str] | None = None,
        engine: PurePythonEngine | None = None,
        exhaustiveness: int = 8,
    ) -> None:
        if oracle not in ("surrogate", "docking"):
            raise ValueError(f"unknown oracle {oracle!r}")
        self.reference = reference
        self.weights = weights or RewardWeights()
        self.oracle = oracle
        self.target = target
        self.target_seed = target_seed
        self.score_cache = score_cache or ScoreCache()
        self.engine_command = engine_command
        self.engine = engine or default_engine()
        self.exhaustiveness = exhaustiveness

    def docked_score(self, m: Molecule) -> float:
        if self.oracle == "surrogate":
            return surrogate_dock(m, self.target_seed)
        task = DockingTask(
            target=self.target, ligand=m, exhaustiveness=self.exhaustiveness
        )
        try:
            return dock(task, self.score_cache, self.engine_command)
        except DockingFailure:
            return 0.0  # worst case; never aborts the episode

    def breakdown(self, m: Molecule) -> tuple[RewardBreakdown, float]:
        score = self.docked_score(m)
        d = compute_descriptors(m, self.engine)
        br = scalarize(
            affinity_component=-score,
            qed_component=d.qed,
            sa_component=d.sa,
            novelty_component=novelty(m, self.reference),
            w=self.weights,
        )
        return br, score


class MoleculeEnv:
    def __init__(
        self,
        pool: FragmentPool,
        library: TemplateLibrary,
        cfg: EnvConfig,
        oracles: RewardOracles,
        encoder_spec: EncoderSpec | None = None,
        embedding_cache: EmbeddingCache | None = None,
        engine: PurePythonEngine | None = None,
    ) -> None:
        self.pool = pool
        self.library = library
        self.cfg = cfg
        self.oracles = oracles
        self.encoder_spec = encoder_spec or EncoderSpec("stub-molecule", "molecule")
        self.cache = embedding_cache or EmbeddingCache()
        self.engine = engine or default_engine()

    def _embed(self, m: Molecule) -> Embedding:
        return encode_molecule(m, self.encoder_spec, self.cache)

    def action_set(self, m: Molecule) -> ActionSet:
        actions = enumerate_actions(m, self.library, self.engine, self.cfg.max_actions)
        products = [a.product for a in actions]
        embeddings = encode_molecules(products, self.encoder_spec, self.cache)
        return ActionSet(
            entries=[
                (a.template_id, a.product, e) for a, e in zip(actions, embeddings)
            ]
        )

    def reset(self, rng: int | np.random.Generator) -> EnvState:
        if not self.pool.fragments:
            raise EmptyPoolError("cannot reset from an empty pool")
        m = sample_start(self.pool, rng)
        return EnvState(molecule=m, embedding=self._embed(m), step_index=0)

    def step(
        self, state: EnvState, action_set: ActionSet, chosen_index: int
    ) -> tuple[EnvState, float, bool]:
        if not 0 <= chosen_index < action_set.K:
            raise IndexError(
                f"chosen_index {chosen_index} out of range [0, {action_set.K})"
            )
        _, product, product_embedding = action_set.entries[chosen_index]
        next_state = EnvState(
            molecule=product,
            embedding=product_embedding,
            step_index=state.step_index + 1,
        )
        done = next_state.step_index >= self.cfg.horizon
        if not done and self.action_set(product).K == 0:
            done = True
        if self.cfg.reward_mode == "dense":
            reward = self.oracles.breakdown(product)[0].total
        else:
            reward = self.oracles.breakdown(product)[0].total if done else 0.0
        return next_state, reward, done

    def run_episode(self, policy, rng: int | np.random.Generator) -> Trajectory:
        """Roll out one episode with the given policy.

        ``policy`` must expose ``act(state_embedding, action_embeddings, rng)
        -> (index, log_prob, value_estimate)``.
        """
        if isinstance(rng, (int, np.integer)):
            rng = np.random.default_rng(rng)
        state = self.reset(rng)
        traj = Trajectory()
        action_set = self.action_set(state.molecule)
        while action_set.K > 0 and state.step_index < self.cfg.horizon:
            idx, log_prob, value = policy.act(
                state.embedding.vector, action_set.embedding_matrix(), rng
            )
            _, product, product_embedding = action_set.entries[idx]
            next_state = EnvState(
                molecule=product,
                embedding=product_embedding,
                step_index=state.step_index + 1,
            )
            next_action_set = (
                self.action_set(product)
                if next_state.step_index < self.cfg.horizon
                else ActionSet(entries=[])
            )
            done = next_state.step_index >= self.cfg.horizon or next_action_set.K == 0
            if self.cfg.reward_mode == "dense":
                reward = self.oracles.breakdown(product)[0].total
            elif done:
                reward = None  # filled from the terminal breakdown below
            else:
                reward = 0.0
            traj.steps.append(
                TrajectoryStep(
                    state=state,
                    action_set=action_set,
                    chosen_index=idx,
                    log_prob=log_prob,
                    value_estimate=value,
                    reward=0.0 if reward is None else reward,
                )
            )
            state = next_state
            action_set = next_action_set
            if done:
                break
        traj.terminal_molecule = state.molecule
        traj.terminal_breakdown, traj.docked_score = self.oracles.breakdown(
            state.molecule
        )
        if self.cfg.reward_mode == "terminal" and traj.steps:
            traj.steps[-1].reward = traj.terminal_breakdown.total
        return traj


def discounted_return(traj: Trajectory, gamma: float) -> float:
    """Sum of gamma^t * r_t over the trajectory."""
    return float(sum(step.reward * gamma**t for t, step in enumerate(traj.steps)))
