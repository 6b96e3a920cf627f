"""Command-line interface.

Subcommands: train, eval, finetune, photometry. Every invocation writes
its artifacts into one run directory (``--out``, or a timestamped
directory under ./runs), so a run can be archived or reproduced by
copying a single folder. Exit codes: 0 success, 1 validation problem,
2 runtime failure.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
import tempfile
import time

import numpy as np
import yaml

from .config import ConfigError, TaskConfig, load_task_config
from .finetune import FinetuneProblem, finetune
from .nn import save_checkpoint
from .photometry import load_photopic_curve, photometry_report
from .policy import RecurrentGenerator
from .structures import Structure, build_stack, load_structure, structure_to_json
from .tmm import evaluate_stack
from .training import compute_reward, train

__all__ = ["main"]

TRACE_COLUMNS = ("epoch", "mean_reward", "max_reward", "best_so_far",
                 "clip_fraction", "approx_kl")


class _Parser(argparse.ArgumentParser):
    # argparse exits with 2 on usage errors; bad arguments are a
    # validation failure under this tool's exit-code contract
    def error(self, message):
        self.print_usage(sys.stderr)
        print(f"{self.prog}: error: {message}", file=sys.stderr)
        raise SystemExit(1)


def _atomic_write(path: str, text: str) -> None:
    directory = os.path.dirname(os.path.abspath(path))
    fd, tmp = tempfile.mkstemp(dir=directory, suffix=".tmp")
    try:
        with os.fdopen(fd, "w") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def _write_json(path: str, payload) -> None:
    _atomic_write(path, json.dumps(payload, indent=2) + "\n")


def _write_trace(path: str, rows: list[dict]) -> None:
    lines = [",".join(TRACE_COLUMNS)]
    for row in rows:
        lines.append(",".join(
            (str(row[c]) if c == "epoch" else repr(float(row[c])))
            for c in TRACE_COLUMNS))
    _atomic_write(path, "\n".join(lines) + "\n")


def _run_dir(args, task_name: str, seed: int) -> str:
    if args.out:
        path = args.out
    else:
        stamp = time.strftime("%Y%m%d-%H%M%S")
        path = os.path.join("runs", f"{task_name}-seed{seed}-{stamp}")
    os.makedirs(path, exist_ok=True)
    return path


def _resolve_seed(args) -> int:
    if args.seed is not None:
        return args.seed
    return int(np.random.SeedSequence().entropy % (2 ** 31))


def _load_config(args, seed: int) -> TaskConfig:
    if not args.config:
        raise ConfigError("--config is required")
    return load_task_config(args.config, seed=seed, workers=args.workers)


def _snapshot_config(cfg: TaskConfig, out_dir: str, seed: int,
                     workers: int) -> None:
    snapshot = dict(cfg.raw)
    snapshot["resolved"] = {"seed": seed, "workers": workers,
                            "task": cfg.name}
    _atomic_write(os.path.join(out_dir, "config.yaml"),
                  yaml.safe_dump(snapshot, sort_keys=False))


def _load_structure_arg(args) -> Structure:
    if not args.structure:
        raise ConfigError("--structure is required")
    try:
        return load_structure(args.structure)
    except FileNotFoundError:
        raise ConfigError(f"structure file not found: {args.structure}")
    except (ValueError, KeyError) as exc:
        raise ConfigError(f"bad structure JSON: {exc}")


# ---------------------------------------------------------------------------
# subcommands
# ---------------------------------------------------------------------------

def cmd_train(args) -> int:
    seed = _resolve_seed(args)
    cfg = _load_config(args, seed)
    out_dir = _run_dir(args, cfg.name, seed)
    ckpt_dir = os.path.join(out_dir, "checkpoints")
    os.makedirs(ckpt_dir, exist_ok=True)
    _snapshot_config(cfg, out_dir, seed, args.workers)
    print(f"seed: {seed}")
    print(f"run directory: {out_dir}")

    rng = np.random.default_rng(seed)
    policy = RecurrentGenerator(rng, cfg.vocab, **cfg.policy_kwargs)
    interval = cfg.train.checkpoint_interval
    trace_path = os.path.join(out_dir, "trace.csv")

    def on_epoch(epoch, row, policy, optimizer, train_rng):
        rows.append(row)
        _write_trace(trace_path, rows)
        if interval and (epoch + 1) % interval == 0:
            save_checkpoint(os.path.join(ckpt_dir, f"epoch_{epoch:05d}.npz"),
                            policy.parameters(), optimizer, train_rng,
                            extra={"epoch": epoch, "config": cfg.raw})

    rows: list[dict] = []
    result = train(policy, cfg.train, cfg.reward, cfg.library,
                   on_epoch=on_epoch)
    _write_trace(trace_path, result.trace)

    save_checkpoint(os.path.join(ckpt_dir, "final.npz"),
                    policy.parameters(), None, None,
                    extra={"epochs": cfg.train.epochs, "config": cfg.raw})
    best = result.best
    if best.structure is not None:
        _atomic_write(os.path.join(out_dir, "best_design.json"),
                      structure_to_json(best.structure))
        _write_json(os.path.join(out_dir, "best_summary.json"),
                    {"reward": best.reward, "epoch": best.epoch,
                     "n_layers": len(best.structure)})
        print(f"best reward {best.reward:.4f} at epoch {best.epoch} "
              f"({len(best.structure)} layers)")
    return 0


def cmd_eval(args) -> int:
    seed = _resolve_seed(args)
    cfg = _load_config(args, seed)
    structure = _load_structure_arg(args)
    out_dir = _run_dir(args, cfg.name + "-eval", seed)

    spec = cfg.reward
    stack = build_stack(structure, cfg.library, spec.wavelengths,
                        ambient=spec.ambient, substrate=spec.substrate)
    result = evaluate_stack(stack, spec.query())

    lines = ["wavelength_nm,angle_deg,R,T,A"]
    for j, wl in enumerate(result.wavelengths):
        for k, ang in enumerate(result.angles):
            lines.append(",".join(repr(float(v)) for v in (
                wl, np.rad2deg(ang), result.R[j, k], result.T[j, k],
                result.A[j, k])))
    _atomic_write(os.path.join(out_dir, "spectrum.csv"), "\n".join(lines) + "\n")

    metrics = {
        "average_R": float(result.R.mean()),
        "average_T": float(result.T.mean()),
        "average_A": float(result.A.mean()),
        "reward": compute_reward(structure, spec, cfg.library),
        "n_layers": len(structure),
        "total_thickness_nm": structure.total_thickness_nm(),
    }
    _write_json(os.path.join(out_dir, "metrics.json"), metrics)
    print(json.dumps(metrics, indent=2))
    return 0


def cmd_finetune(args) -> int:
    seed = _resolve_seed(args)
    cfg = _load_config(args, seed)
    structure = _load_structure_arg(args)
    out_dir = _run_dir(args, cfg.name + "-finetune", seed)

    problem = FinetuneProblem(structure=structure, spec=cfg.reward,
                              library=cfg.library,
                              bounds=cfg.finetune_bounds)
    result = finetune(problem)
    _atomic_write(os.path.join(out_dir, "finetuned_design.json"),
                  structure_to_json(result.structure))
    report = {
        "reward_before": result.reward_before,
        "reward_after": result.reward_after,
        "improvement": result.reward_after - result.reward_before,
        "iterations": result.iterations,
        "improved": result.improved,
    }
    _write_json(os.path.join(out_dir, "finetune_report.json"), report)
    print(json.dumps(report, indent=2))
    return 0


def cmd_photometry(args) -> int:
    seed = _resolve_seed(args)
    cfg = _load_config(args, seed)
    if cfg.emitter is None:
        raise ConfigError("photometry requires an 'emitter' config section")
    structure = _load_structure_arg(args) if args.structure else None
    out_dir = _run_dir(args, cfg.name + "-photometry", seed)

    curve = load_photopic_curve()
    report = photometry_report(structure, cfg.library, cfg.emitter, curve)
    _write_json(os.path.join(out_dir, "photometry_report.json"), report)
    print(json.dumps(report, indent=2))
    return 0


# ---------------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="optistack",
                     description="Multilayer thin-film design by "
                                 "policy-gradient search")
    sub = parser.add_subparsers(dest="command", required=True)
    for name, func, needs_structure in (
            ("train", cmd_train, False),
            ("eval", cmd_eval, True),
            ("finetune", cmd_finetune, True),
            ("photometry", cmd_photometry, True)):
        p = sub.add_parser(name)
        p.add_argument("--config", required=False,
                       help="task config YAML")
        p.add_argument("--seed", type=int, default=None,
                       help="RNG seed (omit for a generated seed)")
        p.add_argument("--workers", type=int, default=1,
                       help="rollout worker processes")
        p.add_argument("--out", default=None, help="run directory")
        if needs_structure:
            p.add_argument("--structure", default=None,
                           help="structure JSON file")
        p.set_defaults(func=func)
    return parser


def main(argv=None) -> int:
    try:
        args = build_parser().parse_args(argv)
    except SystemExit as exc:
        return exc.code if isinstance(exc.code, int) else 1
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except KeyboardInterrupt:
        raise
    except Exception as exc:
        print(f"runtime error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
