"""Command-line surface.

Subcommands: synth, features, train, predict, evaluate, fuse, bow, pose.
Behaviour is controlled by a flat key=value config (defaults below);
every key can be overridden on the command line as --<key> <value>, and
every run writes the fully resolved config next to its outputs as
config.txt so the run can be reproduced exactly.

Exit codes: 0 success, 1 usage/config error, 2 data error.
"""

import argparse
import csv
import sys
from pathlib import Path

import numpy as np

from . import formats, poserule
from .errors import ConfigError, DataError
from .fusion import FusionWeights, PsoParams, fit_early_fusion, early_fuse, optimize_fusion_weights
from .learn import (
    LabeledDataset,
    SvmParams,
    TrainedModel,
    TreeParams,
    predict_scores,
    train_forest,
    train_resampled_ensemble,
    train_svm,
    train_tree,
)
from .masking import MaskConfig, mask_to_raster
from .raster import load_pnm, write_pnm
from .sequence import (
    CitySequence,
    SynthConfig,
    corpus_pair_dataset,
    decide_sequence,
    evaluate_corpus,
    extract_sequence_features,
    frame_features,
    generate_synthetic_sequence,
    pair_flood_labels,
)
from .textbow import Vocabulary, build_vocab, tokenize, vectorize
from .texture import FeatureVector

_OFFSET_DEFAULT = "1,0;0,1;1,1;1,-1"

# key -> (type, default).  Types: int, float, bool ("true"/"false"), str.
CONFIG_SPEC = {
    "seed": (int, 0),
    "mask.window": (int, 5),
    "mask.uniform_sigma_max": (float, 4.0),
    "mask.white_floor": (int, 200),
    "mask.cloud_factor": (float, 0.92),
    "mask.dark_ceiling": (int, 15),
    "mask.s_lo": (float, 0.02),
    "mask.s_hi": (float, 0.98),
    "mask.v_lo": (float, 0.08),
    "mask.v_hi": (float, 0.97),
    "mask.median_k": (int, 5),
    "mask.dilate_k": (int, 3),
    "texture.levels": (int, 16),
    "texture.offsets": (str, _OFFSET_DEFAULT),
    "tree.max_depth": (int, 8),
    "tree.min_leaf": (int, 2),
    "tree.n_trees": (int, 100),
    "tree.feature_subsample": (float, 0.0),  # 0 = sqrt rule
    "svm.lambda": (float, 1e-3),
    "svm.epochs": (int, 50),
    "ensemble.members": (int, 5),
    "ensemble.base": (str, "forest"),
    "pso.particles": (int, 20),
    "pso.iterations": (int, 100),
    "pso.inertia": (float, 0.72),
    "pso.cognitive": (float, 1.49),
    "pso.social": (float, 1.49),
    "pso.v_max": (float, 0.5),
    "pose.conf_present": (float, 0.3),
    "pose.conf_absent": (float, 0.1),
    "synth.count": (int, 8),
    "synth.size": (int, 256),
    "synth.n_frames": (int, 6),
    "synth.cloud_prob": (float, 0.3),
    "synth.vegetation_drift": (float, 12.0),
    "synth.jitter": (int, 2),
    "synth.water_v": (float, 0.25),
    "synth.water_s": (float, 0.45),
    "synth.flood_coverage": (float, 0.35),
    "aggregate.policy": (str, "any"),
    "aggregate.threshold": (float, 0.5),
    "bow.max_terms": (int, 2000),
    "bow.min_doc_freq": (int, 1),
    "bow.scheme": (str, "count"),
}


def _convert(key: str, raw: str):
    typ, _ = CONFIG_SPEC[key]
    try:
        if typ is bool:
            if raw.lower() in ("true", "1", "yes"):
                return True
            if raw.lower() in ("false", "0", "no"):
                return False
            raise ValueError(raw)
        return typ(raw)
    except ValueError:
        raise ConfigError(f"config key {key}: cannot parse {raw!r} as {typ.__name__}") from None


def parse_config_text(text: str, source: str = "<config>") -> dict:
    """key = value lines; '#' starts a comment; unknown keys rejected."""
    out = {}
    for lineno, line in enumerate(text.splitlines(), start=1):
        stripped = line.split("#", 1)[0].strip()
        if not stripped:
            continue
        if "=" not in stripped:
            raise ConfigError(f"{source}:{lineno}: expected 'key = value', got {line!r}")
        key, raw = (part.strip() for part in stripped.split("=", 1))
        if key not in CONFIG_SPEC:
            raise ConfigError(f"{source}:{lineno}: unknown config key {key!r}")
        out[key] = _convert(key, raw)
    return out


def resolve_config(config_path: str | None, overrides: list) -> dict:
    cfg = {key: default for key, (_, default) in CONFIG_SPEC.items()}
    if config_path:
        path = Path(config_path)
        if not path.exists():
            raise ConfigError(f"config file not found: {config_path}")
        cfg.update(parse_config_text(path.read_text(encoding="utf-8"), str(path)))
    i = 0
    while i < len(overrides):
        arg = overrides[i]
        if not arg.startswith("--"):
            raise ConfigError(f"unexpected argument {arg!r} (config overrides look like --key value)")
        key = arg[2:]
        if key not in CONFIG_SPEC:
            raise ConfigError(f"unknown config key {key!r}")
        if i + 1 >= len(overrides):
            raise ConfigError(f"missing value for config key {key!r}")
        cfg[key] = _convert(key, overrides[i + 1])
        i += 2
    return cfg


def _echo_value(v) -> str:
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, float):
        return repr(v)
    return str(v)


def write_config_echo(out_dir: Path, command: str, cfg: dict) -> None:
    lines = [f"# floodkit resolved config (command: {command})"]
    lines.extend(f"{key} = {_echo_value(cfg[key])}" for key in sorted(cfg))
    (out_dir / "config.txt").write_text("\n".join(lines) + "\n", encoding="utf-8")


def _mask_config(cfg: dict) -> MaskConfig:
    try:
        return MaskConfig(
            window=cfg["mask.window"],
            uniform_sigma_max=cfg["mask.uniform_sigma_max"],
            white_floor=cfg["mask.white_floor"],
            cloud_factor=cfg["mask.cloud_factor"],
            dark_ceiling=cfg["mask.dark_ceiling"],
            s_lo=cfg["mask.s_lo"],
            s_hi=cfg["mask.s_hi"],
            v_lo=cfg["mask.v_lo"],
            v_hi=cfg["mask.v_hi"],
            median_k=cfg["mask.median_k"],
            dilate_k=cfg["mask.dilate_k"],
        )
    except ValueError as exc:
        raise ConfigError(f"invalid mask configuration: {exc}") from None


def _offsets(cfg: dict):
    text = cfg["texture.offsets"]
    try:
        pairs = []
        for chunk in text.split(";"):
            dx, dy = chunk.split(",")
            pairs.append((int(dx), int(dy)))
        if not pairs:
            raise ValueError("empty")
        return tuple(pairs)
    except ValueError:
        raise ConfigError(
            f"texture.offsets must look like {_OFFSET_DEFAULT!r}, got {text!r}"
        ) from None


def _pso_params(cfg: dict) -> PsoParams:
    try:
        return PsoParams(
            particles=cfg["pso.particles"],
            iterations=cfg["pso.iterations"],
            inertia=cfg["pso.inertia"],
            cognitive=cfg["pso.cognitive"],
            social=cfg["pso.social"],
            v_max=cfg["pso.v_max"],
            seed=cfg["seed"],
        )
    except ValueError as exc:
        raise ConfigError(f"invalid PSO configuration: {exc}") from None


def _tree_params(cfg: dict) -> TreeParams:
    sub = cfg["tree.feature_subsample"]
    try:
        return TreeParams(
            max_depth=cfg["tree.max_depth"],
            min_leaf=cfg["tree.min_leaf"],
            n_trees=cfg["tree.n_trees"],
            feature_subsample=None if sub == 0.0 else sub,
            seed=cfg["seed"],
        )
    except ValueError as exc:
        raise ConfigError(f"invalid tree configuration: {exc}") from None


def _svm_params(cfg: dict) -> SvmParams:
    try:
        return SvmParams(lam=cfg["svm.lambda"], epochs=cfg["svm.epochs"], seed=cfg["seed"])
    except ValueError as exc:
        raise ConfigError(f"invalid SVM configuration: {exc}") from None


def _out_dir(args) -> Path:
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    return out


def _load_sequences(manifest_path: str) -> list:
    entries = formats.read_manifest(manifest_path)
    sequences = []
    for e in entries:
        frames = []
        for p in e.frame_paths:
            try:
                frames.append(load_pnm(Path(p).read_bytes()))
            except FileNotFoundError:
                raise DataError(f"frame file not found: {p}") from None
        try:
            sequences.append(
                CitySequence(e.city_id, frames, e.timestamps, e.label, e.onset)
            )
        except ValueError as exc:
            raise DataError(str(exc)) from None
    return sequences


def cmd_synth(args, cfg: dict) -> int:
    out = _out_dir(args)
    count = cfg["synth.count"] if args.n is None else args.n
    entries = []
    for i in range(count):
        synth_cfg = SynthConfig(
            size=cfg["synth.size"],
            n_frames=cfg["synth.n_frames"],
            flood=(i % 2 == 0),
            cloud_prob=cfg["synth.cloud_prob"],
            vegetation_drift=cfg["synth.vegetation_drift"],
            jitter=cfg["synth.jitter"],
            water_v=cfg["synth.water_v"],
            water_s=cfg["synth.water_s"],
            flood_coverage=cfg["synth.flood_coverage"],
            seed=cfg["seed"] + i,
        )
        seq = generate_synthetic_sequence(synth_cfg)
        seq_dir = out / seq.city_id
        seq_dir.mkdir(exist_ok=True)
        rel_paths = []
        for t, frame in enumerate(seq.frames):
            rel = f"{seq.city_id}/frame{t:02d}.ppm"
            (out / rel).write_bytes(write_pnm(frame))
            rel_paths.append(rel)
        entries.append(
            formats.SequenceEntry(seq.city_id, rel_paths, seq.label, seq.onset)
        )
    formats.write_manifest(out / "manifest.json", entries)
    write_config_echo(out, "synth", cfg)
    print(f"wrote {count} sequences under {out}")
    return 0


def cmd_features(args, cfg: dict) -> int:
    out = _out_dir(args)
    sequences = _load_sequences(args.manifest)
    mask_cfg = _mask_config(cfg)
    levels = cfg["texture.levels"]
    offsets = _offsets(cfg)
    all_labeled = all(pair_flood_labels(s) is not None for s in sequences)
    rows, labels, groups = [], [], []
    names = None
    for seq in sequences:
        feats = extract_sequence_features(seq, mask_cfg, levels, offsets)
        seq_labels = pair_flood_labels(seq) if all_labeled else [None] * len(feats)
        for fv, label in zip(feats, seq_labels):
            names = fv.names
            rows.append(fv.values)
            labels.append(label)
            groups.append(seq.city_id)
        if args.dump_masks:
            for t, frame in enumerate(seq.frames):
                _, mask = frame_features(frame, mask_cfg, levels, offsets)
                path = out / f"mask_{seq.city_id}_{t:02d}.pgm"
                path.write_bytes(write_pnm(mask_to_raster(mask)))
    formats.write_feature_csv(
        out / "features.csv",
        names,
        np.array(rows),
        labels=labels if all_labeled else None,
        groups=groups,
    )
    write_config_echo(out, "features", cfg)
    print(f"wrote {len(rows)} pair rows ({'labeled' if all_labeled else 'unlabeled'}) to {out / 'features.csv'}")
    return 0


def _table_to_dataset(table: formats.FeatureTable) -> LabeledDataset:
    if table.labels is None:
        raise DataError("training features must carry a 'label' column")
    return LabeledDataset(table.names, table.X, table.labels, table.groups)


def cmd_train(args, cfg: dict) -> int:
    out = _out_dir(args)
    dataset = _table_to_dataset(formats.read_feature_csv(args.features))
    kind = args.kind
    if kind == "tree":
        model = train_tree(dataset, _tree_params(cfg))
    elif kind == "forest":
        model = train_forest(dataset, _tree_params(cfg))
    elif kind == "svm":
        model = train_svm(dataset, _svm_params(cfg))
    elif kind == "ensemble":
        base = cfg["ensemble.base"]
        if base not in ("tree", "forest", "svm"):
            raise ConfigError(f"ensemble.base must be tree, forest, or svm, got {base!r}")
        params = _svm_params(cfg) if base == "svm" else _tree_params(cfg)
        model = train_resampled_ensemble(dataset, base, params, k=cfg["ensemble.members"])
    else:  # argparse keeps this unreachable
        raise ConfigError(f"unknown model kind {kind!r}")
    formats.save_document(out / "model.json", "model", {"model": model.to_document()})
    write_config_echo(out, "train", cfg)
    print(f"trained {kind} on {len(dataset)} rows -> {out / 'model.json'}")
    return 0


def _load_model(path) -> TrainedModel:
    doc = formats.load_document(path, "model")
    if "model" not in doc:
        raise DataError(f"{path}: model document is missing its 'model' payload")
    return TrainedModel.from_document(doc["model"])


def cmd_predict(args, cfg: dict) -> int:
    out = _out_dir(args)
    model = _load_model(args.model)
    table = formats.read_feature_csv(args.features)
    if tuple(table.names) != model.feature_names:
        dataset_names = set(table.names)
        model_names = set(model.feature_names)
        if dataset_names != model_names:
            raise DataError(
                f"feature columns do not match model: missing {sorted(model_names - dataset_names)}, "
                f"extra {sorted(dataset_names - model_names)}"
            )
        order = [table.names.index(n) for n in model.feature_names]
        table.X = table.X[:, order]
        table.names = model.feature_names
    scores = predict_scores(model, LabeledDataset(table.names, table.X, np.zeros(len(table.X), dtype=int)))
    formats.write_score_csv(out / "scores.csv", {"score": scores}, labels=table.labels)
    write_config_echo(out, "predict", cfg)
    print(f"wrote {scores.size} scores to {out / 'scores.csv'}")
    return 0


def cmd_evaluate(args, cfg: dict) -> int:
    out = _out_dir(args)
    sequences = _load_sequences(args.manifest)
    if any(s.label is None for s in sequences):
        raise DataError("evaluate requires every sequence in the manifest to carry a label")
    model = _load_model(args.model)
    report = evaluate_corpus(
        sequences,
        model,
        _mask_config(cfg),
        cfg["texture.levels"],
        _offsets(cfg),
        cfg["aggregate.policy"],
        cfg["aggregate.threshold"],
    )
    m = report.metrics
    lines = [
        f"sequences = {len(report.rows)}",
        f"tp = {m.tp}",
        f"fp = {m.fp}",
        f"fn = {m.fn}",
        f"tn = {m.tn}",
        f"precision = {m.precision!r}",
        f"recall = {m.recall!r}",
        f"f1 = {m.f1!r}",
    ]
    (out / "metrics.txt").write_text("\n".join(lines) + "\n", encoding="utf-8")
    with (out / "per_sequence.csv").open("w", encoding="utf-8") as fh:
        fh.write("city_id,label,decision,min_valid_fraction,scores\n")
        for row in report.rows:
            scores = ";".join(repr(s) for s in row.scores)
            fh.write(
                f"{row.city_id},{row.label},{row.decision},{row.min_valid_fraction!r},{scores}\n"
            )
    write_config_echo(out, "evaluate", cfg)
    print("\n".join(lines))
    print(f"{'city_id':<14}{'label':>6}{'decision':>9}  max_score")
    for row in report.rows:
        print(f"{row.city_id:<14}{row.label:>6}{row.decision:>9}  {max(row.scores):.3f}")
    return 0


def cmd_fuse(args, cfg: dict) -> int:
    out = _out_dir(args)
    if args.method == "early":
        if not args.features:
            raise ConfigError("fuse --method early requires at least one --features CSV")
        streams = []
        tables = []
        for path in args.features:
            table = formats.read_feature_csv(path)
            vectors = [FeatureVector(table.names, row) for row in table.X]
            if not vectors:
                raise DataError(f"{path}: no feature rows")
            streams.append((Path(path).stem, vectors))
            tables.append(table)
        n_rows = {len(t.X) for t in tables}
        if len(n_rows) != 1:
            raise DataError(f"feature streams disagree on row count: {sorted(n_rows)}")
        stats = fit_early_fusion(streams)
        fused = [
            early_fuse([FeatureVector(t.names, t.X[i]) for t in tables], stats)
            for i in range(n_rows.pop())
        ]
        payload = {
            "streams": [
                {
                    "stream_id": st.stream_id,
                    "names": list(st.names),
                    "mean": st.mean.tolist(),
                    "std": st.std.tolist(),
                }
                for st in stats.streams
            ]
        }
        formats.save_document(out / "early_stats.json", "early_fusion_stats", payload)
        formats.write_feature_csv(
            out / "fused_features.csv",
            fused[0].names,
            np.array([fv.values for fv in fused]),
            labels=tables[0].labels,
        )
        write_config_echo(out, "fuse", cfg)
        print(f"early-fused {len(streams)} streams -> {out / 'fused_features.csv'}")
        return 0

    if not args.scores:
        raise ConfigError(f"fuse --method {args.method} requires --scores CSV")
    names, streams, labels = formats.read_score_csv(args.scores)
    if streams.shape[0] == 0:
        raise DataError(f"{args.scores}: no score columns")
    if args.method == "average":
        weights = FusionWeights.uniform(streams.shape[0])
    else:  # pso
        if labels is None:
            raise DataError("fuse --method pso requires a 'label' column in the scores CSV")
        try:
            weights = optimize_fusion_weights(streams, labels, _pso_params(cfg))
        except ValueError as exc:
            raise DataError(str(exc)) from None
    fused = weights.weights @ streams
    formats.save_document(
        out / "weights.json",
        "fusion_weights",
        {"streams": list(names), "weights": weights.weights.tolist()},
    )
    formats.write_score_csv(out / "fused.csv", {"fused": fused}, labels=labels)
    write_config_echo(out, "fuse", cfg)
    print(f"fused {streams.shape[0]} streams ({args.method}) -> {out / 'fused.csv'}")
    return 0


def cmd_bow(args, cfg: dict) -> int:
    out = _out_dir(args)
    corpus_path = Path(args.corpus)
    if not corpus_path.exists():
        raise DataError(f"corpus file not found: {args.corpus}")
    docs = corpus_path.read_text(encoding="utf-8").splitlines()
    token_lists = [tokenize(line) for line in docs]
    if not token_lists:
        raise DataError(f"{args.corpus}: corpus is empty")
    labels = None
    if args.labels:
        label_lines = Path(args.labels).read_text(encoding="utf-8").split()
        if len(label_lines) != len(token_lists):
            raise DataError(
                f"{args.labels}: {len(label_lines)} labels for {len(token_lists)} documents"
            )
        labels = [int(x) for x in label_lines]
    scheme = cfg["bow.scheme"]
    if scheme not in ("count", "tfidf"):
        raise ConfigError(f"bow.scheme must be count or tfidf, got {scheme!r}")
    vocab = build_vocab(token_lists, cfg["bow.max_terms"], cfg["bow.min_doc_freq"])
    formats.save_document(out / "vocab.json", "vocabulary", vocab.to_document())
    vectors = np.array([vectorize(toks, vocab, scheme).values for toks in token_lists])
    formats.write_feature_csv(out / "vectors.csv", vocab.terms, vectors, labels=labels)
    write_config_echo(out, "bow", cfg)
    print(f"vocabulary of {len(vocab.terms)} terms over {vocab.n_docs} docs -> {out}")
    return 0


def cmd_pose(args, cfg: dict) -> int:
    out = _out_dir(args)
    try:
        rule_cfg = poserule.PoseRuleConfig(cfg["pose.conf_present"], cfg["pose.conf_absent"])
    except ValueError as exc:
        raise ConfigError(f"invalid pose configuration: {exc}") from None
    with (out / "decisions.csv").open("w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["file", "decision", "rationale"])
        for path in args.keypoints:
            if not Path(path).exists():
                raise DataError(f"keypoint file not found: {path}")
            people = poserule.load_keypoints(path)
            result = poserule.above_knee_decision(people, rule_cfg)
            rationale = " | ".join(result.rationales) if result.rationales else "no people"
            writer.writerow([Path(path).name, result.decision, rationale])
            print(f"{Path(path).name}: {result.decision} ({rationale})")
    write_config_echo(out, "pose", cfg)
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="floodkit",
        description="Flood detection in satellite sequences, classifier fusion, BoW text, pose rules.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p):
        p.add_argument("--out", required=True, help="output directory for artifacts")
        p.add_argument("--config", help="flat key=value config file")

    p = sub.add_parser("synth", help="generate a labeled synthetic corpus")
    common(p)
    p.add_argument("--n", type=int, help="number of sequences (overrides synth.count)")
    p.add_argument("--seed", type=int, help="shorthand for --seed config key", dest="seed_flag")

    p = sub.add_parser("features", help="manifest -> per-pair feature CSV")
    common(p)
    p.add_argument("--manifest", required=True)
    p.add_argument("--dump-masks", action="store_true", help="also write per-frame mask PGMs")

    p = sub.add_parser("train", help="feature CSV (+labels) -> model file")
    common(p)
    p.add_argument("--features", required=True)
    p.add_argument("--kind", choices=("tree", "forest", "svm", "ensemble"), default="forest")

    p = sub.add_parser("predict", help="model + features -> score CSV")
    common(p)
    p.add_argument("--model", required=True)
    p.add_argument("--features", required=True)

    p = sub.add_parser("evaluate", help="manifest corpus + model -> metrics report")
    common(p)
    p.add_argument("--manifest", required=True)
    p.add_argument("--model", required=True)

    p = sub.add_parser("fuse", help="combine score streams or feature streams")
    common(p)
    p.add_argument("--method", choices=("average", "pso", "early"), required=True)
    p.add_argument("--scores", help="score CSV (columns = streams, optional label)")
    p.add_argument("--features", action="append", help="feature CSV per stream (early fusion)")

    p = sub.add_parser("bow", help="corpus file -> vocabulary + vectors")
    common(p)
    p.add_argument("--corpus", required=True, help="one document per line, UTF-8")
    p.add_argument("--labels", help="optional whitespace-separated 0|1 labels, one per document")

    p = sub.add_parser("pose", help="keypoint files -> decisions CSV")
    common(p)
    p.add_argument("--keypoints", nargs="+", required=True)
    return parser


_COMMANDS = {
    "synth": cmd_synth,
    "features": cmd_features,
    "train": cmd_train,
    "predict": cmd_predict,
    "evaluate": cmd_evaluate,
    "fuse": cmd_fuse,
    "bow": cmd_bow,
    "pose": cmd_pose,
}


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args, extra = parser.parse_known_args(argv)
    except SystemExit as exc:
        return 1 if exc.code not in (0, None) else 0
    try:
        if getattr(args, "seed_flag", None) is not None:
            extra = ["--seed", str(args.seed_flag)] + extra
        cfg = resolve_config(args.config, extra)
        return _COMMANDS[args.command](args, cfg)
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except DataError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
