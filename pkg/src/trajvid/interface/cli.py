"""Command-line harness: dataset generation, training, evaluation, ablation,
one-off generation, and the HTTP service.

Exit codes: 0 success, 1 validated-input failure, 2 internal error.
"""
from __future__ import annotations

import argparse
import dataclasses
import json
import sys
from pathlib import Path

import numpy as np

from ..config import DiTConfig, PolicyConfig, SimConfig, TrainConfig, config_hash, dataclass_from_dict
from ..errors import TrajVidError
from .runs import load_flat_config, make_run_dir, train_config_from


def _add_common(p: argparse.ArgumentParser) -> None:
    p.add_argument("--config", help="flat JSON config file")
    p.add_argument("--runs-dir", default="runs")
    p.add_argument("--seed", type=int)


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="trajvid")
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("gen-data", help="generate a scripted episode dataset")
    _add_common(p)
    p.add_argument("--count", type=int)
    p.add_argument("--out", help="dataset directory (default: inside the run dir)")
    p.add_argument("--num-objects", type=int)

    p = sub.add_parser("train-diffusion", help="train the denoiser on a dataset")
    _add_common(p)
    p.add_argument("--data", required=True)
    p.add_argument("--mode", default="TRAJ_3D_FEAT")
    p.add_argument("--steps", type=int)
    p.add_argument("--lr", type=float)
    p.add_argument("--batch-size", type=int)
    p.add_argument("--hidden-dim", type=int)
    p.add_argument("--num-blocks", type=int)
    p.add_argument("--num-heads", type=int)
    p.add_argument("--episodes", type=int, help="cap on training episodes")

    p = sub.add_parser("train-policy", help="train the two-stream policy")
    _add_common(p)
    p.add_argument("--data", required=True)
    p.add_argument("--steps", type=int)
    p.add_argument("--lr", type=float)
    p.add_argument("--batch-size", type=int)
    p.add_argument("--rgb-only", action="store_true")
    p.add_argument("--episodes", type=int)

    p = sub.add_parser("generate", help="sample one video from a checkpoint")
    _add_common(p)
    p.add_argument("--data", required=True)
    p.add_argument("--episode", required=True)
    p.add_argument("--checkpoint", required=True)
    p.add_argument("--mode", default="TRAJ_3D_FEAT")
    p.add_argument("--steps", type=int, default=20)
    p.add_argument("--guidance", type=float, default=1.0)

    p = sub.add_parser("evaluate", help="run metrics for one mode/checkpoint")
    _add_common(p)
    p.add_argument("--data", required=True)
    p.add_argument("--checkpoint", required=True)
    p.add_argument("--mode", default="TRAJ_3D_FEAT")
    p.add_argument("--episodes", type=int, default=10)
    p.add_argument("--steps", type=int, default=20)

    p = sub.add_parser("ablate", help="evaluate all six condition modes")
    _add_common(p)
    p.add_argument("--data", required=True)
    p.add_argument("--checkpoints", required=True, help="JSON mapping mode -> checkpoint path")
    p.add_argument("--episodes", type=int, default=50)
    p.add_argument("--steps", type=int, default=20)

    p = sub.add_parser("serve", help="start the HTTP service")
    _add_common(p)
    p.add_argument("--port", type=int, default=8008)
    p.add_argument("--host", default="127.0.0.1")
    p.add_argument("--data")
    p.add_argument("--checkpoints-dir")
    p.add_argument("--frontend-dir")
    p.add_argument("--queue-capacity", type=int, default=16)

    return ap


def _load_episodes(data_dir: str, cap: int | None = None):
    from ..synthworld import load_episode, load_manifest
    from ..synthworld.episodes import manifest_config

    manifest = load_manifest(data_dir)
    entries = manifest["episodes"][: cap or None]
    eps = [load_episode(Path(data_dir) / e["dir"]) for e in entries]
    return eps, manifest_config(manifest)


def cmd_gen_data(args, merged: dict) -> int:
    from ..synthworld import generate_dataset

    count = merged.get("count", 16)
    seed = merged.get("seed", 0)
    sim = SimConfig(num_objects=merged.get("num_objects", 2))
    resolved = {**merged, "count": count, "seed": seed, "sim": dataclasses.asdict(sim)}
    run = make_run_dir(args.runs_dir, resolved, label="gen-data")
    out = Path(args.out) if args.out else run / "dataset"
    manifest = generate_dataset(out, count=count, seed=seed, config=sim)
    print(json.dumps({"dataset": str(out), "count": manifest["count"],
                      "config_hash": manifest["config_hash"]}))
    return 0


def _dit_config(merged: dict) -> DiTConfig:
    keys = {k: merged[k] for k in ("hidden_dim", "num_blocks", "num_heads") if k in merged}
    return DiTConfig(**keys)


def cmd_train_diffusion(args, merged: dict) -> int:
    import torch

    from ..diffusion import prepare_episode, train
    from ..dit import Denoiser
    from ..latentcodec import DefaultCodec
    from ..trajrep import ConditionMode

    mode = ConditionMode[merged.get("mode", "TRAJ_3D_FEAT")]
    hyper = train_config_from(merged)
    dit_cfg = _dit_config(merged)
    eps, _sim = _load_episodes(args.data, merged.get("episodes"))
    codec = DefaultCodec()
    prepared = [prepare_episode(e, mode, codec) for e in eps]
    resolved = {**merged, "mode": mode.name, "dit": dataclasses.asdict(dit_cfg),
                "train": dataclasses.asdict(hyper)}
    run = make_run_dir(args.runs_dir, resolved, label=f"train-{mode.name.lower()}")
    torch.manual_seed(hyper.seed)
    model = Denoiser(dit_cfg)
    train(model, prepared, mode, hyper, out_dir=run,
          on_step=lambda s, l: print(f"step {s} loss {l:.4f}", flush=True) if s % 100 == 0 else None)
    print(json.dumps({"run": str(run), "checkpoint": str(run / "final.npz")}))
    return 0


def cmd_train_policy(args, merged: dict) -> int:
    import torch

    from ..diffusion import prepare_episode
    from ..latentcodec import DefaultCodec
    from ..policy import PolicyModel, train_policy
    from ..trajrep import ConditionMode

    hyper = train_config_from(merged)
    eps, _sim = _load_episodes(args.data, merged.get("episodes"))
    codec = DefaultCodec()
    prepared = [prepare_episode(e, ConditionMode.TRAJ_3D, codec) for e in eps]
    pcfg = PolicyConfig(
        hidden_dim=merged.get("policy_hidden_dim", 128),
        rgb_only=bool(merged.get("rgb_only", False)),
    )
    resolved = {**merged, "policy": dataclasses.asdict(pcfg), "train": dataclasses.asdict(hyper)}
    run = make_run_dir(args.runs_dir, resolved, label="train-policy")
    torch.manual_seed(hyper.seed)
    model = PolicyModel(pcfg)
    train_policy(model, prepared, hyper, out_dir=run)
    print(json.dumps({"run": str(run), "checkpoint": str(run / "policy.npz")}))
    return 0


def cmd_generate(args, merged: dict) -> int:
    from ..interface.service import ServiceContext, handle_generate

    run = make_run_dir(args.runs_dir, merged, label="generate")
    ctx = ServiceContext(run, Path(args.data), Path(args.checkpoint).parent)
    payload = {
        "mode": merged.get("mode", "TRAJ_3D_FEAT"),
        "episode_id": args.episode,
        "first_frame_png": None,
        "object_point": None,
        "object_name": None,
        "robot_point": None,
        "caption": None,
        "trajectory": None,
        "checkpoint": str(Path(args.checkpoint).name),
        "steps": args.steps,
        "guidance_scale": args.guidance,
        "seed": merged.get("seed", 0),
    }
    from ..trajrep import ConditionMode

    mode = ConditionMode[payload["mode"]]
    if mode.needs_trajectory:
        from ..synthworld import load_episode

        ep = load_episode(Path(args.data) / args.episode)
        payload["trajectory"] = json.loads(ep.traj_gt.to_json())
    result = handle_generate(payload, "cli", ctx)
    print(json.dumps({"run": str(run), **result}))
    return 0


def cmd_evaluate(args, merged: dict) -> int:
    from ..config import dataclass_from_dict as dfd
    from ..diffusion import NoiseSchedule
    from ..dit import Denoiser, load_checkpoint, restore_model
    from ..evalsuite import evaluate_mode
    from ..latentcodec import DefaultCodec
    from ..trajrep import ConditionMode

    mode = ConditionMode[merged.get("mode", "TRAJ_3D_FEAT")]
    eps, sim = _load_episodes(args.data, args.episodes)
    state, meta = load_checkpoint(args.checkpoint)
    dit_cfg = dfd(DiTConfig, meta["config"])
    model = Denoiser(dit_cfg)
    restore_model(args.checkpoint, model, dit_cfg, kind="dit")
    run = make_run_dir(args.runs_dir, {**merged, "checkpoint": args.checkpoint}, label="evaluate")
    report = evaluate_mode(
        model, eps, mode, DefaultCodec(), sim, steps=args.steps,
        seed=merged.get("seed", 0), schedule=NoiseSchedule(T=meta.get("extra", {}).get("T", 1000)),
    )
    doc = {"rows": report.rows, "aggregates": report.aggregates, "mode": mode.name}
    (run / "report.json").write_text(json.dumps(doc, indent=1))
    print(json.dumps({"run": str(run), "aggregates": report.aggregates}))
    return 0


def cmd_ablate(args, merged: dict) -> int:
    from ..config import dataclass_from_dict as dfd
    from ..dit import Denoiser, load_checkpoint, restore_model
    from ..evalsuite import format_table, run_ablation
    from ..trajrep import ConditionMode

    eps, sim = _load_episodes(args.data, args.episodes)
    mapping = json.loads(Path(args.checkpoints).read_text())
    checkpoints = {ConditionMode[k]: v for k, v in mapping.items()}

    def loader(path, mode):
        state, meta = load_checkpoint(path)
        cfg = dfd(DiTConfig, meta["config"])
        model = Denoiser(cfg)
        restore_model(path, model, cfg, kind="dit")
        return model

    run = make_run_dir(args.runs_dir, {**merged, "checkpoints": mapping}, label="ablate")
    reports, verdict = run_ablation(
        checkpoints, eps, loader, sim_config=sim, steps=args.steps,
        seed=merged.get("seed", 0), out_dir=run,
    )
    print(format_table(reports))
    print(json.dumps(verdict))
    return 0


def cmd_serve(args, merged: dict) -> int:
    import uvicorn

    from .service import create_app

    app = create_app(
        runs_dir=merged.get("runs_dir", args.runs_dir),
        data_dir=args.data or merged.get("data_dir"),
        checkpoints_dir=args.checkpoints_dir,
        queue_capacity=merged.get("queue_capacity", args.queue_capacity),
        worker_count=merged.get("worker_count", 1),
        frontend_dir=args.frontend_dir,
    )
    uvicorn.run(app, host=args.host, port=merged.get("port", args.port))
    return 0


COMMANDS = {
    "gen-data": cmd_gen_data,
    "train-diffusion": cmd_train_diffusion,
    "train-policy": cmd_train_policy,
    "generate": cmd_generate,
    "evaluate": cmd_evaluate,
    "ablate": cmd_ablate,
    "serve": cmd_serve,
}


def main(argv: list[str] | None = None) -> int:
    ap = build_parser()
    try:
        args = ap.parse_args(argv)
    except SystemExit as e:
        return 1 if e.code not in (0, None) else 0
    flag_overrides = {
        k: v for k, v in vars(args).items()
        if k not in ("command", "config", "runs_dir", "out", "data", "episode",
                     "checkpoint", "checkpoints", "checkpoints_dir", "host",
                     "frontend_dir")
        and v is not None
    }
    flag_overrides = {k.replace("-", "_"): v for k, v in flag_overrides.items()}
    try:
        merged = load_flat_config(args.config, flag_overrides)
        if merged.get("threads"):
            import torch

            torch.set_num_threads(int(merged["threads"]))
        return COMMANDS[args.command](args, merged)
    except TrajVidError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except (FileNotFoundError, json.JSONDecodeError, KeyError, ValueError) as exc:
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 1
    except Exception as exc:  # internal failure
        import traceback

        traceback.print_exc()
        return 2


if __name__ == "__main__":
    sys.exit(main())
