"""Command-line entry point: the full pipeline as subcommands.

Exit codes: 0 success, 2 usage, 3 missing input, 4 numerical failure,
1 any other toolkit error. Every run writes a provenance JSON (resolved
config + hash, seeds, input digests) next to its primary output.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from .config import load_config, write_provenance
from .errors import MissingInputError, NumericalError, WhisperMineError

EXIT_OK = 0
EXIT_USAGE = 2
EXIT_MISSING_INPUT = 3
EXIT_NUMERICAL = 4


def _add_common(p):
    p.add_argument("--config", help="INI config file (flags override it)")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="whispermine",
        description="Mine clean whispered speech from long noisy recordings.")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("featurize", help="extract RASTA-PLP features for a manifest")
    _add_common(p)
    p.add_argument("--manifest", required=True)
    p.add_argument("--features-dir", required=True)

    p = sub.add_parser("build-corpus", help="materialize SNR mixtures from clean + noise data")
    _add_common(p)
    p.add_argument("--clean-csv", required=True, help="utterance metadata (id,path,speaker,sex)")
    p.add_argument("--noise-csv", required=True, help="noise metadata (id,path,noise_type)")
    p.add_argument("--out", required=True)
    p.add_argument("--pools", default="train,val", help="which split pools to sample")
    p.add_argument("--manifest-name", default="manifest.jsonl")
    p.add_argument("--per-combo", type=int)
    p.add_argument("--snrs")
    p.add_argument("--seed", type=int)
    p.add_argument("--train-males", type=int)
    p.add_argument("--train-females", type=int)
    p.add_argument("--test-males", type=int)
    p.add_argument("--test-females", type=int)

    p = sub.add_parser("train", help="train a WAD classifier from a manifest")
    _add_common(p)
    p.add_argument("--manifest", required=True)
    p.add_argument("--model", dest="kind", choices=("svm", "mlp", "lstm"))
    p.add_argument("--out", required=True)
    p.add_argument("--features-dir")
    p.add_argument("--positive", default="whisper", help="comma-separated positive labels")
    p.add_argument("--seed", type=int)
    p.add_argument("--max-epochs", type=int)
    p.add_argument("--batch-size", type=int)
    p.add_argument("--learning-rate", type=float)
    p.add_argument("--patience", type=int)
    p.add_argument("--seq-stride", type=int)

    p = sub.add_parser("eval", help="score a model (or external predictions) on a manifest")
    _add_common(p)
    p.add_argument("--manifest", required=True)
    p.add_argument("--model")
    p.add_argument("--predictions-dir", help="external per-utterance prediction CSVs")
    p.add_argument("--report", required=True)
    p.add_argument("--features-dir")
    p.add_argument("--positive", default="whisper")

    p = sub.add_parser("detect", help="segment one recording with a trained model")
    _add_common(p)
    p.add_argument("--model", required=True)
    p.add_argument("--wav", required=True)
    p.add_argument("--out-csv", required=True)

    p = sub.add_parser("harvest-noise", help="extract confidently speech-free stretches")
    _add_common(p)
    p.add_argument("--model", required=True)
    p.add_argument("--wav", required=True)
    p.add_argument("--out-dir", required=True)
    p.add_argument("--margin-s", type=float)
    p.add_argument("--min-len-s", type=float)

    p = sub.add_parser("augment", help="mix clean whisper segments with harvested noises")
    _add_common(p)
    p.add_argument("--clean-dir", required=True, help="directory of clean whisper WAVs")
    p.add_argument("--noise-dir", required=True, help="directory of harvested noise WAVs")
    p.add_argument("--out", required=True)
    p.add_argument("--snrs")
    p.add_argument("--seed", type=int)

    p = sub.add_parser("finetune-cwad", help="fine-tune the WAD model into a CWAD model")
    _add_common(p)
    p.add_argument("--base", required=True)
    p.add_argument("--manifest", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--features-dir")
    p.add_argument("--epochs", type=int)
    p.add_argument("--learning-rate", type=float)

    p = sub.add_parser("extract-clean", help="extract clean whisper segments with a CWAD model")
    _add_common(p)
    p.add_argument("--model", required=True)
    p.add_argument("--wav", required=True)
    p.add_argument("--out-dir", required=True)

    p = sub.add_parser("serve-labeller", help="run the bulk-labelling HTTP service")
    _add_common(p)
    p.add_argument("--host")
    p.add_argument("--port", type=int)
    p.add_argument("--sessions-dir")

    return parser


def _require(path, what: str) -> Path:
    p = Path(path)
    if not p.exists():
        raise MissingInputError(f"{what} not found: {p}")
    return p


def cmd_featurize(args, cfg):
    from .pipeline import featurize_manifest

    manifest = _require(args.manifest, "manifest")
    n = featurize_manifest(manifest, args.features_dir)
    write_provenance(Path(args.features_dir) / "provenance.json", "featurize",
                     cfg, inputs=[manifest])
    print(f"featurized {n} entries into {args.features_dir}")
    return EXIT_OK


def cmd_build_corpus(args, cfg):
    from .datasets import build_noisy_corpus, read_noise_csv, read_utterance_csv, split_speakers

    for key in ("per_combo", "seed", "snrs", "train_males", "train_females",
                "test_males", "test_females"):
        if getattr(args, key, None) is not None:
            cfg.set("corpus", key, getattr(args, key))
    utts = read_utterance_csv(_require(args.clean_csv, "clean metadata"))
    noises = read_noise_csv(_require(args.noise_csv, "noise metadata"))
    seed = cfg.get("corpus", "seed")
    splits = split_speakers(
        utts, seed=seed,
        train_males=cfg.get("corpus", "train_males"),
        train_females=cfg.get("corpus", "train_females"),
        test_males=cfg.get("corpus", "test_males"),
        test_females=cfg.get("corpus", "test_females"),
        val_fraction=cfg.get("corpus", "val_fraction"))
    for u in utts:
        u.split = splits.get(u.id)
    manifest = build_noisy_corpus(
        utts, noises, args.out, snrs=cfg.snrs(),
        per_combo=cfg.get("corpus", "per_combo"), seed=seed,
        pools=tuple(args.pools.split(",")), manifest_name=args.manifest_name)
    manifest.check_speaker_disjointness()
    write_provenance(Path(args.out) / "provenance.json", "build-corpus", cfg,
                     inputs=[args.clean_csv, args.noise_csv],
                     seeds={"corpus": seed})
    print(f"wrote {len(manifest.entries)} entries to {args.out}/{args.manifest_name}")
    return EXIT_OK


def _spec_from_cfg(cfg, kind):
    from .models import ModelSpec

    return ModelSpec(
        kind=kind,
        seed=cfg.get("model", "seed"),
        learning_rate=cfg.get("model", "learning_rate"),
        batch_size=cfg.get("model", "batch_size"),
        max_epochs=cfg.get("model", "max_epochs"),
        patience=cfg.get("model", "patience"),
        seq_len=cfg.get("model", "seq_len"),
        svm_lambda=cfg.get("model", "svm_lambda"),
        svm_epochs=cfg.get("model", "svm_epochs"),
    )


def cmd_train(args, cfg):
    from .models import save_model
    from .pipeline import train_from_manifest

    for key in ("seed", "max_epochs", "batch_size", "learning_rate", "patience",
                "seq_stride"):
        if getattr(args, key, None) is not None:
            cfg.set("model", key, getattr(args, key))
    if args.kind is not None:
        cfg.set("model", "kind", args.kind)
    kind = cfg.get("model", "kind")
    manifest = _require(args.manifest, "manifest")
    spec = _spec_from_cfg(cfg, kind)
    model = train_from_manifest(
        manifest, spec, positive=tuple(args.positive.split(",")),
        features_dir=args.features_dir,
        seq_stride=cfg.get("model", "seq_stride"))
    save_model(model, args.out)
    write_provenance(Path(args.out).with_suffix(".provenance.json"), "train", cfg,
                     inputs=[manifest], seeds={"model": spec.seed})
    print(f"trained {kind} (threshold {model.threshold:.4f}) -> {args.out}")
    return EXIT_OK


def cmd_eval(args, cfg):
    from .eval import evaluate_manifest, format_report, write_report
    from .models import load_model

    manifest = _require(args.manifest, "manifest")
    model = None
    if args.model:
        model = load_model(_require(args.model, "model"))
    elif not args.predictions_dir:
        raise MissingInputError("eval needs --model or --predictions-dir")
    report = evaluate_manifest(manifest, model,
                               positive_labels=tuple(args.positive.split(",")),
                               predictions_dir=args.predictions_dir,
                               features_dir=args.features_dir)
    write_report(report, args.report)
    write_provenance(Path(args.report).with_suffix(".provenance.json"), "eval",
                     cfg, inputs=[manifest] + ([args.model] if args.model else []))
    print(format_report(report))
    return EXIT_OK


def cmd_detect(args, cfg):
    from .audio import load_wav
    from .detector import probs_to_segments, smooth_probs
    from .features import rasta_plp_features
    from .models import forward_probs, load_model

    model = load_model(_require(args.model, "model"))
    buf = load_wav(_require(args.wav, "recording"))
    probs = forward_probs(model, rasta_plp_features(buf))
    kind = "clean_whisper" if model.task == "cwad" else "whisper"
    segs = probs_to_segments(smooth_probs(probs), model.threshold, kind=kind)
    segs.write_csv(args.out_csv)
    write_provenance(Path(args.out_csv).with_suffix(".provenance.json"), "detect",
                     cfg, inputs=[args.model, args.wav])
    print(f"{len(segs.of_kind(kind))} {kind} segments "
          f"({segs.total_duration_s(kind):.1f}s) -> {args.out_csv}")
    return EXIT_OK


def cmd_harvest_noise(args, cfg):
    from .audio import load_wav
    from .detector import harvest_noise
    from .models import load_model

    for key, attr in (("harvest_margin_s", "margin_s"), ("harvest_min_s", "min_len_s")):
        if getattr(args, attr, None) is not None:
            cfg.set("detector", key, getattr(args, attr))
    model = load_model(_require(args.model, "model"))
    wav = _require(args.wav, "recording")
    seg_set, paths = harvest_noise(
        load_wav(wav), model, out_dir=args.out_dir, recording_id=Path(wav).stem,
        margin_s=cfg.get("detector", "harvest_margin_s"),
        min_len_s=cfg.get("detector", "harvest_min_s"))
    write_provenance(Path(args.out_dir) / "provenance.json", "harvest-noise", cfg,
                     inputs=[args.model, wav])
    print(f"harvested {len(paths)} noise segments "
          f"({seg_set.total_duration_s('noise'):.1f}s) -> {args.out_dir}")
    return EXIT_OK


def cmd_augment(args, cfg):
    from .detector import build_augmented_corpus

    if args.seed is not None:
        cfg.set("corpus", "seed", args.seed)
    if args.snrs is not None:
        cfg.set("corpus", "snrs", args.snrs)
    clean = sorted(Path(_require(args.clean_dir, "clean directory")).glob("*.wav"))
    noise = sorted(Path(_require(args.noise_dir, "noise directory")).glob("*.wav"))
    manifest = build_augmented_corpus(clean, noise, args.out, snrs=cfg.snrs(),
                                      seed=cfg.get("corpus", "seed"))
    write_provenance(Path(args.out) / "provenance.json", "augment", cfg,
                     inputs=clean + noise, seeds={"corpus": cfg.get("corpus", "seed")})
    print(f"wrote {len(manifest.entries)} augmented entries to {args.out}")
    return EXIT_OK


def cmd_finetune_cwad(args, cfg):
    from .detector import fine_tune_cwad
    from .models import load_model, save_model

    if args.epochs is not None:
        cfg.set("detector", "finetune_epochs", args.epochs)
    if args.learning_rate is not None:
        cfg.set("detector", "finetune_lr", args.learning_rate)
    base = load_model(_require(args.base, "base model"))
    manifest = _require(args.manifest, "manifest")
    model = fine_tune_cwad(base, manifest, features_dir=args.features_dir,
                           learning_rate=cfg.get("detector", "finetune_lr"),
                           max_epochs=cfg.get("detector", "finetune_epochs"))
    save_model(model, args.out)
    write_provenance(Path(args.out).with_suffix(".provenance.json"), "finetune-cwad",
                     cfg, inputs=[args.base, manifest])
    print(f"fine-tuned CWAD (threshold {model.threshold:.4f}) -> {args.out}")
    return EXIT_OK


def cmd_extract_clean(args, cfg):
    from .audio import load_wav
    from .detector import extract_clean_whisper
    from .models import load_model

    model = load_model(_require(args.model, "model"))
    wav = _require(args.wav, "recording")
    _, paths, summary = extract_clean_whisper(load_wav(wav), model,
                                              out_dir=args.out_dir,
                                              recording_id=Path(wav).stem)
    (Path(args.out_dir) / "summary.json").write_text(json.dumps(summary, indent=2) + "\n")
    write_provenance(Path(args.out_dir) / "provenance.json", "extract-clean", cfg,
                     inputs=[args.model, wav])
    print(f"extracted {summary['extracted_s']:.1f}s of clean whisper "
          f"in {summary['n_segments']} segments -> {args.out_dir}")
    return EXIT_OK


def cmd_serve_labeller(args, cfg):
    import uvicorn

    from .labeller.service import create_app

    for key in ("host", "port", "sessions_dir"):
        if getattr(args, key, None) is not None:
            cfg.set("labeller", key, getattr(args, key))
    app = create_app(sessions_dir=cfg.get("labeller", "sessions_dir"))
    uvicorn.run(app, host=cfg.get("labeller", "host"), port=cfg.get("labeller", "port"))
    return EXIT_OK


_COMMANDS = {
    "featurize": cmd_featurize,
    "build-corpus": cmd_build_corpus,
    "train": cmd_train,
    "eval": cmd_eval,
    "detect": cmd_detect,
    "harvest-noise": cmd_harvest_noise,
    "augment": cmd_augment,
    "finetune-cwad": cmd_finetune_cwad,
    "extract-clean": cmd_extract_clean,
    "serve-labeller": cmd_serve_labeller,
}


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        cfg = load_config(args.config)
        return _COMMANDS[args.command](args, cfg)
    except (MissingInputError, FileNotFoundError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_MISSING_INPUT
    except NumericalError as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL
    except WhisperMineError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
