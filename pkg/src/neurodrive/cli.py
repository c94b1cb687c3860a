"""Command-line front end.

Commands: synth, extract, eval, render. Exit codes: 0 success, 2 bad
configuration, 3 bad data. Every command writes a run manifest into its
output directory before producing artifacts.
"""

from __future__ import annotations

import argparse
import hashlib
import json
import sys
import time
from pathlib import Path

from . import __version__
from .dataset import load_manifest
from .errors import ConfigError, DataError, PipelineError
from .evaluate import ExperimentConfig, report_table, run_experiment, save_report
from .extract import (
    EXTRACT_DEFAULT_BLOCKS,
    MODALITIES,
    trial_blocks,
    write_feature_file,
)
from .embedding import DeterministicProjectionBackend, load_backend

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_DATA = 3


def config_hash(payload: dict) -> str:
    return hashlib.sha256(
        json.dumps(payload, sort_keys=True).encode("utf-8")
    ).hexdigest()


def write_run_manifest(out_dir: Path, command: str, config: dict, outputs: list[str]) -> None:
    """Record provenance before any artifact is produced."""
    out_dir.mkdir(parents=True, exist_ok=True)
    manifest = {
        "tool_version": __version__,
        "command": command,
        "config": config,
        "config_hash": config_hash(config),
        "seed": config.get("seed"),
        "input_manifest": config.get("manifest"),
        "started_unix": time.time(),
        "outputs": outputs,
    }
    with open(out_dir / "run_manifest.json", "w") as f:
        json.dump(manifest, f, sort_keys=True, indent=1)
        f.write("\n")


def cmd_synth(args) -> int:
    from .synth import SynthConfig, synth_dataset

    config = {
        "seed": args.seed,
        "subjects": args.subjects,
        "trials_per_subject": args.trials_per_subject,
        "effect": args.effect,
        "out": str(args.out),
    }
    out = Path(args.out)
    write_run_manifest(out, "synth", config, ["manifest.json", "signals/", "landmarks/"])
    synth_dataset(
        SynthConfig(
            n_subjects=args.subjects,
            trials_per_subject=args.trials_per_subject,
            effect_size=args.effect,
            seed=args.seed,
        ),
        out,
    )
    print(f"wrote dataset manifest {out / 'manifest.json'}")
    return EXIT_OK


def _backend_from_args(args):
    if getattr(args, "model_path", None):
        return load_backend({"kind": "external_model", "model_path": args.model_path})
    return DeterministicProjectionBackend(seed=args.seed)


def cmd_extract(args) -> int:
    dataset = load_manifest(args.manifest)
    out = Path(args.out)
    config = {
        "manifest": str(args.manifest),
        "modality": args.modality,
        "seed": args.seed,
        "trend": args.trend,
        "with_deep": args.with_deep,
        "render_images": args.render_images,
    }
    write_run_manifest(out, "extract", config, [f"{args.modality}/"])
    backend = _backend_from_args(args)
    mod_dir = out / args.modality
    mod_dir.mkdir(parents=True, exist_ok=True)

    missing = []
    for trial in dataset.trials:
        payload = "landmarks" if args.modality == "face" else args.modality
        if not dataset.path(trial, payload).exists():
            missing.append(trial.trial_id)
    if missing:
        print(f"missing {args.modality} payload for trials: {', '.join(missing)}", file=sys.stderr)
        return EXIT_DATA

    if args.trend:
        if args.modality != "eeg":
            raise ConfigError("--trend applies to the eeg modality only")
        from .extract import load_eeg_trial
        from .trends import slice_feature_matrix

        for trial in dataset.trials:
            m = slice_feature_matrix(load_eeg_trial(dataset, trial), backend, args.interval)
            payload = {
                "version": 1,
                "trial_id": trial.trial_id,
                "interval_s": args.interval,
                "n_steps": int(m.shape[0]),
                "width": int(m.shape[1]),
                "rows": m.ravel().tolist(),
            }
            with open(mod_dir / f"{trial.trial_id}_trend.json", "w") as f:
                json.dump(payload, f, sort_keys=True)
                f.write("\n")
        print(f"wrote {len(dataset.trials)} trend feature files to {mod_dir}")
        return EXIT_OK

    keep = set(EXTRACT_DEFAULT_BLOCKS[args.modality])
    if args.with_deep:
        keep |= {f"{args.modality}_deep"}
    for trial in dataset.trials:
        blocks = trial_blocks(dataset, trial, (args.modality,), backend, wanted=keep)
        selected = {k: v for k, v in blocks.items() if k in keep}
        write_feature_file(mod_dir / f"{trial.trial_id}_features.json", trial, args.modality, selected)
        if args.render_images:
            _render_trial_images(dataset, trial, mod_dir, args.modality)
    print(f"wrote {len(dataset.trials)} feature files to {mod_dir}")
    return EXIT_OK


def _render_trial_images(dataset, trial, out_dir: Path, modality: str) -> None:
    from .imaging import write_png

    if modality == "eeg":
        from .eeg import band_power_maps, render_topo_image
        from .extract import load_eeg_trial

        image = render_topo_image(*band_power_maps(load_eeg_trial(dataset, trial)))
        write_png(out_dir / f"{trial.trial_id}_topo.png", image.pixels)
    elif modality in ("ppg", "gsr"):
        from .peripheral import GSR_SPECTRO_FMAX_HZ, PPG_SPECTRO_FMAX_HZ, spectrogram_image
        from .signals import read_signal_csv

        fmax = PPG_SPECTRO_FMAX_HZ if modality == "ppg" else GSR_SPECTRO_FMAX_HZ
        img = spectrogram_image(read_signal_csv(dataset.path(trial, modality)), fmax)
        write_png(out_dir / f"{trial.trial_id}_{modality}_spectrogram.png", img.pixels)


def cmd_eval(args) -> int:
    dataset = load_manifest(args.manifest)
    modalities = tuple(m.strip() for m in args.modalities.split(",") if m.strip())
    cfg = ExperimentConfig(
        task=args.task,
        modalities=modalities,
        classifier=args.classifier,
        pca_dim=args.pca_dim,
        n_hidden=args.n_hidden,
        seed=args.seed,
        trend_interval_s=args.interval,
    ).validate()
    report_path = Path(args.report)
    config = {
        "manifest": str(args.manifest),
        "task": args.task,
        "modalities": list(modalities),
        "classifier": args.classifier,
        "pca_dim": args.pca_dim,
        "n_hidden": args.n_hidden,
        "seed": args.seed,
        "report": str(report_path),
    }
    write_run_manifest(report_path.parent if report_path.parent != Path("") else Path("."),
                       "eval", config, [report_path.name])
    report = run_experiment(dataset, cfg)
    save_report(report_path, report)
    print(report_table(report))
    print(f"report written to {report_path}")
    return EXIT_OK


def cmd_render(args) -> int:
    dataset = load_manifest(args.manifest)
    trial = dataset.trial(args.trial)
    out = Path(args.out)
    config = {"manifest": str(args.manifest), "trial": args.trial, "seed": 0}
    write_run_manifest(out, "render", config, [f"{args.trial}_*.png"])

    from .imaging import write_png

    rendered, warnings = [], []
    if dataset.path(trial, "eeg").exists():
        from .eeg import band_power_maps, render_topo_image
        from .extract import load_eeg_trial

        image = render_topo_image(*band_power_maps(load_eeg_trial(dataset, trial)))
        path = out / f"{trial.trial_id}_topo.png"
        write_png(path, image.pixels)
        rendered.append(path)
    else:
        warnings.append("eeg payload missing; topographic image skipped")

    from .errors import TooShortError
    from .peripheral import GSR_SPECTRO_FMAX_HZ, PPG_SPECTRO_FMAX_HZ, spectrogram_image
    from .signals import read_signal_csv

    for modality, fmax in (("ppg", PPG_SPECTRO_FMAX_HZ), ("gsr", GSR_SPECTRO_FMAX_HZ)):
        if not dataset.path(trial, modality).exists():
            warnings.append(f"{modality} payload missing; spectrogram skipped")
            continue
        try:
            img = spectrogram_image(read_signal_csv(dataset.path(trial, modality)), fmax)
        except TooShortError as exc:
            warnings.append(f"{modality} spectrogram skipped: {exc}")
            continue
        path = out / f"{trial.trial_id}_{modality}_spectrogram.png"
        write_png(path, img.pixels)
        rendered.append(path)

    for w in warnings:
        print(f"warning: {w}", file=sys.stderr)
    for p in rendered:
        print(f"wrote {p}")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="neurodrive",
        description="Multi-modal driver-state feature extraction and evaluation.",
    )
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("synth", help="generate a synthetic dataset")
    p.add_argument("--out", required=True)
    p.add_argument("--subjects", type=int, default=12)
    p.add_argument("--trials-per-subject", type=int, default=35)
    p.add_argument("--effect", type=float, default=1.0)
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(fn=cmd_synth)

    p = sub.add_parser("extract", help="write per-trial feature files")
    p.add_argument("--manifest", required=True)
    p.add_argument("--modality", required=True, choices=MODALITIES)
    p.add_argument("--out", required=True)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--trend", action="store_true",
                   help="write per-interval EEG sequence features")
    p.add_argument("--interval", type=float, default=0.25)
    p.add_argument("--with-deep", action="store_true",
                   help="include the 4096-dim image-embedding block")
    p.add_argument("--render-images", action="store_true")
    p.add_argument("--model-path", help="TorchScript embedding model (optional)")
    p.set_defaults(fn=cmd_extract)

    p = sub.add_parser("eval", help="run a LOSO experiment")
    p.add_argument("--manifest", required=True)
    p.add_argument("--task", required=True, choices=("attention", "incident"))
    p.add_argument("--modalities", required=True,
                   help="comma-separated subset of eeg,ppg,gsr,face")
    p.add_argument("--classifier", default="elm", choices=("elm", "lstm"))
    p.add_argument("--pca-dim", type=int, default=30)
    p.add_argument("--n-hidden", type=int, default=170)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--interval", type=float, default=0.25)
    p.add_argument("--report", required=True)
    p.set_defaults(fn=cmd_eval)

    p = sub.add_parser("render", help="render a trial's images")
    p.add_argument("--manifest", required=True)
    p.add_argument("--trial", required=True)
    p.add_argument("--out", required=True)
    p.set_defaults(fn=cmd_render)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.fn(args)
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (DataError, PipelineError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_DATA


if __name__ == "__main__":
    sys.exit(main())
