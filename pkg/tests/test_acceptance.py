"""Acceptance gate: one test per headline guarantee of the framework.

Each test prints a single ``[ACCEPTANCE] <criterion>: PASS`` line when its
check holds (run pytest with ``-s`` to see them live). The end-to-end
criteria share one pair of identical command-line runs executed once per
session.
"""

import json
import time

import mpmath
import numpy as np
import pytest

from molgrow.cli import main
from molgrow.core import Molecule, parse_molecule
from molgrow.encoders import Embedding
from molgrow.environment import ActionSet, EnvState, Trajectory, TrajectoryStep
from molgrow.ppo import (
    PolicyParams,
    PPOConfig,
    RolloutBuffer,
    compute_gae,
    loss_and_grads,
    policy_distribution,
    policy_forward,
    ppo_update,
    select_action,
)
from molgrow.rewards import RewardWeights, scalarize
from molgrow.similarity import topk_similar
from molgrow.templates import filter_rules, parse_rule_dump

EPISODES = 5
SEED = 11


def _report(criterion: str) -> None:
    print(f"[ACCEPTANCE] {criterion}: PASS")


# -- shared end-to-end runs -----------------------------------------------------


def _pipeline(root, data_dir):
    kb = root / "kb.json"
    lib = root / "library.json"
    workspace = root / "ws"
    for argv in (
        [
            "build-kb",
            "--index", str(data_dir / "kb_index.tsv"),
            "--ligands", str(data_dir / "kb_ligands.tsv"),
            "--output", str(kb),
        ],
        [
            "build-templates",
            "--rules", str(data_dir / "rules.tsv"),
            "--output", str(lib),
        ],
        [
            "--seed", str(SEED),
            "init-target",
            "--kb", str(kb),
            "--pdb", str(data_dir / "target.pdb"),
            "--sequence", str(data_dir / "target_sequence.txt"),
            "--workspace", str(workspace),
        ],
        [
            "--seed", str(SEED),
            "run",
            "--workspace", str(workspace),
            "--library", str(lib),
            "--reference", str(data_dir / "reference.smi"),
            "--episodes", str(EPISODES),
        ],
    ):
        assert main(argv) == 0
    return workspace


@pytest.fixture(scope="module")
def e2e(tmp_path_factory, data_dir):
    start = time.monotonic()
    ws_a = _pipeline(tmp_path_factory.mktemp("run_a"), data_dir)
    elapsed = time.monotonic() - start
    ws_b = _pipeline(tmp_path_factory.mktemp("run_b"), data_dir)
    return ws_a, ws_b, elapsed


# -- criteria ---------------------------------------------------------------------


def test_end_to_end_validity_and_novelty(e2e):
    ws, _, elapsed = e2e
    report = json.loads((ws / "report.json").read_text())
    discoveries = [
        json.loads(line)
        for line in (ws / "discoveries.jsonl").read_text().splitlines()
    ]
    assert len(discoveries) >= 1
    assert report["valid"] == 1.0
    assert report["novelty"] == 1.0
    assert elapsed < 300.0
    _report(
        f"surrogate run: {len(discoveries)} discoveries, validity 1.0,"
        f" novelty 1.0, {elapsed:.0f}s"
    )


def test_reward_arithmetic():
    # worked example: components 9.3 / 0.3 / 3.0 / 1.0 total 9.38
    assert scalarize(9.3, 0.3, 3.0, 1.0).total == pytest.approx(9.38, abs=1e-12)
    rng = np.random.default_rng(99)
    for _ in range(100):
        a, q, s, n = rng.uniform(-15, 15, size=4)
        w = RewardWeights(*rng.uniform(0, 3, size=4))
        assert scalarize(a, q, s, n, w).total == w.w1 * a + w.w2 * q - w.w3 * s + w.w4 * n
    _report("reward arithmetic exact on worked example and 100 random tuples")


def test_template_filter_partition(data_dir):
    rules = parse_rule_dump(data_dir / "rules20.tsv")
    assert len(rules) == 20
    kept = {(r.lhs, r.rhs) for r in filter_rules(rules)}
    expected_accept = {
        ("[*:1][H]", "[*:1]C"),
        ("[*:1][H]", "[*:1]F"),
        ("[*:1][H]", "[*:1]O"),
        ("[*:1][H]", "[*:1]N"),
        ("[*:1][H]", "[*:1]Cl"),
        ("[*:1][H]", "[*:1]OC"),
        ("[*:1][H]", "[*:1]CC"),
        ("[*:1][H]", "[*:1]C#N"),
        ("[*:1][H]", "[*:1]N(C)C"),
        ("[*:1][H]", "[*:1]C(=O)N"),
        ("[*:1]F", "[*:1]Cl"),
        ("[*:1][H]", "[*:1]c1ccccc1"),
        ("[*:1]O", "[*:1]S"),
    }
    expected_reject = {
        ("[*:1][H]", "[*:1]CCCCCCCCCCC"),  # 11-atom variable fragment
        ("[*:1][H]", "[*:1]CCCCCCCCCCCC"),  # 12-atom variable fragment
        ("[*:1]CCCCCCCCCCCCCC", "[*:1]C"),  # 14-atom variable fragment
        ("[*:1][H]", "[*:1]CC(C)C"),  # 5-atom core
        ("[*:1]C", "[*:1]N"),  # 4-atom core
        ("[*:1][H]", "[*:1]CCCCCC"),  # variable is 60% of the parent
        ("[*:1][H]", "[*:1]CCCCC"),  # variable is 62.5% of the parent
    }
    assert kept == expected_accept
    assert {(r.lhs, r.rhs) for r in rules} - kept == expected_reject
    _report("template filter reproduces the hand-tallied 13/7 partition")


def test_dynamic_policy_softmax():
    rng = np.random.default_rng(17)
    mpmath.mp.dps = 50
    worst_sum = worst_shift = worst_oracle = 0.0
    for trial in range(1000):
        k = int(rng.integers(1, 65))
        logits = rng.uniform(-30, 30, size=k)
        # a 1-d query of 1.0 turns the embedding column into raw logits
        p = policy_distribution(np.array([1.0]), logits[:, None])
        worst_sum = max(worst_sum, abs(p.sum() - 1.0))
        shift = float(rng.uniform(-50, 50))
        p_shift = policy_distribution(np.array([1.0]), (logits + shift)[:, None])
        worst_shift = max(worst_shift, float(np.abs(p - p_shift).max()))
        exps = [mpmath.exp(mpmath.mpf(float(z))) for z in logits]
        total = mpmath.fsum(exps)
        oracle = np.array([float(e / total) for e in exps])
        worst_oracle = max(worst_oracle, float(np.abs(p - oracle).max()))
    assert worst_sum < 1e-6
    assert worst_shift < 1e-9
    assert worst_oracle < 1e-12
    _report(
        "softmax over dynamic action sets: sum dev"
        f" {worst_sum:.1e}, shift dev {worst_shift:.1e}, oracle dev {worst_oracle:.1e}"
    )


def _embedding(vec):
    vec = np.asarray(vec, dtype=np.float64)
    return Embedding(vector=vec, dim=vec.shape[0], encoder_id="t")


def _toy_step(rng, reward, k, dim):
    state = EnvState(
        molecule=Molecule("C", 1),
        embedding=_embedding(rng.standard_normal(dim)),
        step_index=0,
    )
    aset = ActionSet(
        entries=[
            (i, Molecule("C", 1), _embedding(rng.standard_normal(dim)))
            for i in range(k)
        ]
    )
    return TrajectoryStep(
        state=state,
        action_set=aset,
        chosen_index=int(rng.integers(k)),
        log_prob=-float(np.log(k)),
        value_estimate=float(rng.standard_normal()),
        reward=reward,
    )


def _toy_trajectory(rng, length, k=3, dim=6):
    return Trajectory(
        steps=[
            _toy_step(rng, float(rng.standard_normal()), k, dim)
            for _ in range(length)
        ]
    )


def test_ppo_gradients_and_gae():
    dim, hid = 6, 8
    rng = np.random.default_rng(23)
    params = PolicyParams(state_dim=dim, hidden=hid, seed=3)
    cfg = PPOConfig()
    buf = RolloutBuffer()
    buf.add(_toy_trajectory(rng, 5, k=3, dim=dim))
    S, actions, action_sets, old_logps, advs, rets = buf.flatten(
        cfg.gamma, cfg.gae_lambda
    )
    _, grads, _ = loss_and_grads(
        params, S, actions, action_sets, old_logps, advs, rets, cfg
    )
    h = 1e-6
    worst = 0.0
    for name, g in grads.items():
        arr = getattr(params, name)
        for fi in np.unique(rng.integers(arr.size, size=min(25, arr.size))):
            idx = np.unravel_index(fi, arr.shape)
            orig = arr[idx]
            arr[idx] = orig + h
            up, _, _ = loss_and_grads(
                params, S, actions, action_sets, old_logps, advs, rets, cfg
            )
            arr[idx] = orig - h
            down, _, _ = loss_and_grads(
                params, S, actions, action_sets, old_logps, advs, rets, cfg
            )
            arr[idx] = orig
            fd = (up - down) / (2 * h)
            worst = max(worst, abs(fd - g[idx]) / max(abs(fd), abs(g[idx]), 1e-8))
    assert worst < 1e-4

    worst_gae = 0.0
    for _ in range(100):
        length = int(rng.integers(1, 16))
        traj = _toy_trajectory(rng, length)
        gamma, lam = rng.uniform(0.8, 1.0), rng.uniform(0.0, 1.0)
        adv, _ = compute_gae(traj, gamma, lam)
        rewards = [s.reward for s in traj.steps]
        values = [s.value_estimate for s in traj.steps]
        next_values = values[1:] + [0.0]
        deltas = [rewards[t] + gamma * next_values[t] - values[t] for t in range(length)]
        oracle = [
            sum((gamma * lam) ** l * deltas[t + l] for l in range(length - t))
            for t in range(length)
        ]
        worst_gae = max(worst_gae, float(np.abs(adv - np.array(oracle)).max()))
    assert worst_gae < 1e-10
    _report(
        f"analytic gradients ({worst:.1e} rel err) and GAE ({worst_gae:.1e})"
        " match independent oracles"
    )


def test_learning_signal_bandit():
    dim, hid = 6, 8
    rng = np.random.default_rng(0)
    e0, e1 = rng.standard_normal(dim), rng.standard_normal(dim)
    state_vec = np.ones(dim) * 0.5
    params = PolicyParams(state_dim=dim, hidden=hid, seed=1)
    cfg = PPOConfig(learning_rate=3e-3, minibatch_size=16)
    adam = None
    update_rng = np.random.default_rng(10)
    updates_needed = None
    for update in range(200):
        buf = RolloutBuffer()
        for _ in range(16):
            v, q = policy_forward(state_vec, params)
            dist = policy_distribution(q, np.stack([e0, e1]))
            idx, logp = select_action(dist, "sample", rng)
            step = TrajectoryStep(
                state=EnvState(
                    molecule=Molecule("C", 1),
                    embedding=_embedding(state_vec),
                    step_index=0,
                ),
                action_set=ActionSet(
                    entries=[
                        (0, Molecule("C", 1), _embedding(e0)),
                        (1, Molecule("C", 1), _embedding(e1)),
                    ]
                ),
                chosen_index=idx,
                log_prob=logp,
                value_estimate=v,
                reward=1.0 if idx == 0 else 0.0,
            )
            buf.add(Trajectory(steps=[step]))
        params, adam, _ = ppo_update(buf, params, cfg, update_rng, adam)
        _, q = policy_forward(state_vec, params)
        if policy_distribution(q, np.stack([e0, e1]))[0] > 0.9:
            updates_needed = update + 1
            break
    assert updates_needed is not None and updates_needed <= 200
    _report(f"bandit reaches P(best) > 0.9 after {updates_needed} update(s)")


def test_similarity_brute_force():
    rng = np.random.default_rng(31)
    for _ in range(100):
        dim = int(rng.integers(2, 12))
        n = int(rng.integers(1, 51))
        db = {
            f"{i:04d}": _embedding(rng.standard_normal(dim)) for i in range(n)
        }
        qvec = rng.standard_normal(dim)
        k = int(rng.integers(1, n + 2))
        hits = topk_similar(_embedding(qvec), db, k)
        qn = qvec / np.linalg.norm(qvec)
        scored = sorted(
            (
                (-float(qn @ (e.vector / np.linalg.norm(e.vector))), pid)
                for pid, e in db.items()
            ),
        )[: min(k, n)]
        assert [h.pdb_id for h in hits] == [pid for _, pid in scored]
        scale = float(rng.uniform(0.01, 1000.0))
        scaled = topk_similar(_embedding(qvec * scale), db, k)
        assert [h.pdb_id for h in scaled] == [h.pdb_id for h in hits]
    _report("top-k equals brute-force cosine ranking on 100 random databases")


def test_episode_contract(e2e):
    ws, _, _ = e2e
    metadata = json.loads((ws / "run_metadata.json").read_text())
    gamma = metadata["env"]["gamma"]
    horizon = metadata["env"]["horizon"]
    assert horizon == 15 and metadata["env"]["reward_mode"] == "terminal"
    episodes: dict[int, list[dict]] = {}
    for line in (ws / "trajectories.jsonl").read_text().splitlines():
        rec = json.loads(line)
        episodes.setdefault(rec["episode"], []).append(rec)
    assert len(episodes) == EPISODES
    for steps in episodes.values():
        steps.sort(key=lambda r: r["step"])
        assert len(steps) <= 15
        assert all(s["reward"] == 0.0 for s in steps[:-1])
        ret = sum(s["reward"] * gamma ** s["step"] for s in steps)
        t_eff = len(steps) - 1
        assert ret == pytest.approx(gamma**t_eff * steps[-1]["reward"], abs=1e-12)
    _report(
        "episodes respect the 15-step horizon, terminal-only rewards, and"
        " the discounted-return identity"
    )


def test_reproducibility(e2e):
    ws_a, ws_b, _ = e2e
    for name in ("discoveries.jsonl", "checkpoint.bin"):
        assert (ws_a / name).read_bytes() == (ws_b / name).read_bytes()
    _report("identical (config, seed) runs are byte-identical")
