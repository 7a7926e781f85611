"""Command-line orchestration of the end-to-end workflow.

Subcommands::

    molgrow build-kb         ingest the protein-ligand files into a store
    molgrow build-templates  rule dump -> filtered reaction-template library
    molgrow init-target      prepare a per-target workspace (similarity
                             search, ligand retrieval, fragment pool)
    molgrow run              episodes + PPO updates -> discoveries/report
    molgrow report           re-render metrics from a discoveries file

Global flags: --seed, --config <json>, --workers N, --oracle.
Exit codes: 0 success, 2 format/missing-file, 3 empty library, 4 empty base,
5 empty pool, 6 other framework error.
"""

from __future__ import annotations

import argparse
import hashlib
import json
import sys
from dataclasses import asdict
from pathlib import Path

import numpy as np

from . import discovery as disc
from . import fragmenter, knowledge_base, similarity, templates
from .core import Molecule, parse_molecule
from .encoders import EmbeddingCache, EncoderSpec, encode_protein
from .environment import EnvConfig, MoleculeEnv, RewardOracles
from .errors import (
    EmptyBaseError,
    EmptyLibraryError,
    EmptyPoolError,
    FormatError,
    MolgrowError,
)
from .ppo import PPOAgent, PPOConfig, RolloutBuffer
from .rewards import ProteinTarget, RewardWeights, load_reference_set, prepare_receptor

EXIT_FORMAT = 2
EXIT_EMPTY_LIBRARY = 3
EXIT_EMPTY_BASE = 4
EXIT_EMPTY_POOL = 5
EXIT_OTHER = 6


def _load_config(path: str | None) -> dict:
    if not path:
        return {}
    return json.loads(Path(path).read_text())


def cmd_build_kb(args) -> int:
    kb = knowledge_base.ingest(args.index, args.ligands)
    knowledge_base.save(kb, args.output)
    print(
        f"knowledge base: {len(kb.records)} records,"
        f" {kb.skipped_ligands} ligand rows skipped -> {args.output}"
    )
    return 0


def cmd_build_templates(args) -> int:
    rules = templates.parse_rule_dump(args.rules)
    cfg = templates.FilterConfig()
    kept = templates.filter_rules(rules, cfg)
    lib = templates.build_library(kept, cfg)
    templates.save_library(lib, args.output)
    rejected = len(rules) - len(kept)
    print(
        f"templates: {len(rules)} rules parsed, {len(kept)} accepted,"
        f" {rejected} rejected -> {args.output}"
    )
    return 0


def cmd_init_target(args) -> int:
    workspace = Path(args.workspace)
    workspace.mkdir(parents=True, exist_ok=True)
    kb = knowledge_base.load(args.kb)
    sequence = Path(args.sequence).read_text().strip()

    spec = EncoderSpec("stub-protein", "protein")
    cache = EmbeddingCache(workspace / "protein_embeddings.bin")
    query = encode_protein(sequence, spec, cache)
    kb_embeddings = {
        pdb_id: encode_protein(rec.sequence, spec, cache)
        for pdb_id, rec in sorted(kb.records.items())
    }
    k = args.k
    if k > len(kb.records):
        print(f"warning: k={k} exceeds knowledge base size {len(kb.records)}; clamping")
        k = len(kb.records)
    hits = similarity.topk_similar(query, kb_embeddings, k)
    ligands = knowledge_base.collect_ligands(kb, [h.pdb_id for h in hits])
    provenance = {}
    for h in hits:
        for smi in kb.records[h.pdb_id].ligand_smiles:
            provenance.setdefault(smi, set()).add(h.pdb_id)
    pool = fragmenter.fragment_ligands(
        ligands, min_fragment_atoms=args.min_fragment_atoms, provenance_ids=provenance
    )
    fragmenter.export_pool(pool, workspace / "fragments.smi")

    (workspace / "similarity.json").write_text(
        json.dumps([{"pdb_id": h.pdb_id, "score": h.score} for h in hits], indent=1)
        + "\n"
    )
    target = ProteinTarget(
        pdb_path=args.pdb,
        sequence=sequence,
        box_center=tuple(args.box_center),
        box_size=tuple(args.box_size),
    )
    if args.converter:
        target = prepare_receptor(target, converter=args.converter.split())
    (workspace / "target.json").write_text(
        json.dumps(
            {
                "pdb_path": target.pdb_path,
                "sequence": target.sequence,
                "box_center": list(target.box_center),
                "box_size": list(target.box_size),
                "target_id": target.target_id,
                "prepared_receptor": target.prepared_receptor,
                "k": k,
            },
            indent=1,
            sort_keys=True,
        )
        + "\n"
    )
    print(f"workspace ready: {len(hits)} similar proteins, {len(pool)} fragments")
    return 0


def cmd_run(args) -> int:
    config = _load_config(args.config)
    workspace = Path(args.workspace)
    target_doc = json.loads((workspace / "target.json").read_text())
    pool = fragmenter.load_pool(workspace / "fragments.smi")
    lib = templates.load_library(args.library)
    reference = load_reference_set(args.reference)

    env_cfg = EnvConfig(**config.get("env", {}), rng_seed=args.seed)
    ppo_cfg = PPOConfig(**config.get("ppo", {}))
    weights = RewardWeights(**config.get("weights", {}))
    thresholds = disc.Thresholds(**config.get("thresholds", {}))

    target = ProteinTarget(
        pdb_path=target_doc["pdb_path"],
        sequence=target_doc["sequence"],
        box_center=tuple(target_doc["box_center"]),
        box_size=tuple(target_doc["box_size"]),
        target_id=target_doc["target_id"],
        prepared_receptor=target_doc.get("prepared_receptor"),
    )
    target_seed = int.from_bytes(
        hashlib.sha256(target.target_id.encode()).digest()[:4], "little"
    )
    oracles = RewardOracles(
        reference=reference,
        weights=weights,
        oracle=args.oracle,
        target=target,
        target_seed=target_seed,
        engine_command=args.docking_command.split() if args.docking_command else None,
    )
    env = MoleculeEnv(
        pool,
        lib,
        env_cfg,
        oracles,
        embedding_cache=EmbeddingCache(workspace / "molecule_embeddings.bin"),
    )
    agent = PPOAgent(cfg=ppo_cfg, seed=args.seed)
    collector = disc.DiscoveryCollector(thresholds=thresholds)

    traj_log = open(workspace / "trajectories.jsonl", "w")
    buffer = RolloutBuffer()
    affinities = []
    for episode in range(args.episodes):
        traj = env.run_episode(agent, np.random.default_rng(args.seed * 100003 + episode))
        buffer.add(traj)
        for t, step in enumerate(traj.steps):
            traj_log.write(
                json.dumps(
                    {
                        "episode": episode,
                        "step": t,
                        "smiles": step.state.molecule.smiles,
                        "actions": step.action_set.K,
                        "chosen": step.chosen_index,
                        "reward": step.reward,
                    },
                    sort_keys=True,
                )
                + "\n"
            )
        collector.admit(
            traj.terminal_molecule,
            traj.terminal_breakdown,
            traj.docked_score,
            episode_id=episode,
            step_found=len(traj.steps),
        )
        affinities.append(traj.docked_score)
        if len(buffer.trajectories) >= ppo_cfg.buffer_episodes:
            agent.update(buffer)
            buffer = RolloutBuffer()
    if buffer.trajectories:
        agent.update(buffer)
    traj_log.close()

    disc.write_discoveries(collector.discoveries(), workspace / "discoveries.jsonl")
    agent.save_checkpoint(workspace / "checkpoint.bin")
    row = disc.compute_metrics(
        [d.molecule for d in collector.discoveries()],
        reference,
        affinities=[d.docked_score for d in collector.discoveries()],
    )
    (workspace / "report.json").write_text(disc.report_json(row) + "\n")
    (workspace / "report.csv").write_text(disc.report_table(row))
    metadata = {
        "seed": args.seed,
        "episodes": args.episodes,
        "oracle": args.oracle,
        "env": asdict(env_cfg),
        "ppo": asdict(ppo_cfg),
        "weights": asdict(weights),
        "thresholds": asdict(thresholds),
        "library": str(args.library),
        "reference": str(args.reference),
    }
    (workspace / "run_metadata.json").write_text(
        json.dumps(metadata, indent=1, sort_keys=True) + "\n"
    )
    print(
        f"run complete: {args.episodes} episodes,"
        f" {len(collector.discoveries())} discoveries"
    )
    return 0


def cmd_report(args) -> int:
    records = disc.read_discoveries(args.discoveries)
    molecules = [
        Molecule(smiles=r["smiles"], heavy_atom_count=parse_molecule(r["smiles"]).heavy_atom_count)
        for r in records
    ]
    reference = load_reference_set(args.reference) if args.reference else set()
    affinities = [r["docked_score"] for r in records]
    row = disc.compute_metrics(molecules, reference, affinities=affinities or None)
    if args.format == "json":
        print(disc.report_json(row))
    else:
        print(disc.report_table(row), end="")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="molgrow")
    parser.add_argument("--seed", type=int, default=0)
    parser.add_argument("--config", help="JSON config file mirroring RunConfig")
    parser.add_argument("--workers", type=int, default=1,
                        help="worker-pool size cap (current execution is serial)")
    parser.add_argument("--oracle", choices=["docking", "surrogate"], default="surrogate")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("build-kb", help="ingest knowledge-base files")
    p.add_argument("--index", required=True)
    p.add_argument("--ligands", required=True)
    p.add_argument("--output", required=True)
    p.set_defaults(func=cmd_build_kb)

    p = sub.add_parser("build-templates", help="build the template library")
    p.add_argument("--rules", required=True)
    p.add_argument("--output", required=True)
    p.set_defaults(func=cmd_build_templates)

    p = sub.add_parser("init-target", help="initialize a target workspace")
    p.add_argument("--kb", required=True)
    p.add_argument("--pdb", required=True)
    p.add_argument("--sequence", required=True, help="file holding the target sequence")
    p.add_argument("--box-center", type=float, nargs=3, default=[0.0, 0.0, 0.0])
    p.add_argument("--box-size", type=float, nargs=3, default=[20.0, 20.0, 20.0])
    p.add_argument("-k", type=int, default=similarity.DEFAULT_K)
    p.add_argument("--min-fragment-atoms", type=int, default=fragmenter.DEFAULT_MIN_FRAGMENT_ATOMS)
    p.add_argument("--converter", help="receptor conversion command")
    p.add_argument("--workspace", required=True)
    p.set_defaults(func=cmd_init_target)

    p = sub.add_parser("run", help="run discovery episodes")
    p.add_argument("--workspace", required=True)
    p.add_argument("--library", required=True)
    p.add_argument("--reference", required=True)
    p.add_argument("--episodes", type=int, default=5)
    p.add_argument("--docking-command", help="external docking engine command")
    p.set_defaults(func=cmd_run)

    p = sub.add_parser("report", help="render metrics from a discoveries file")
    p.add_argument("--discoveries", required=True)
    p.add_argument("--reference")
    p.add_argument("--format", choices=["json", "table"], default="table")
    p.set_defaults(func=cmd_report)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (FormatError, FileNotFoundError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_FORMAT
    except EmptyLibraryError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_EMPTY_LIBRARY
    except EmptyBaseError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_EMPTY_BASE
    except EmptyPoolError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_EMPTY_POOL
    except MolgrowError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_OTHER


if __name__ == "__main__":
    sys.exit(main())
