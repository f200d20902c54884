"""Command-line entry point.

Subcommands: ``split``, ``bench``, ``synth`` and ``export-embeddings``.
Settings resolve as built-in defaults < ``--config`` JSON < flags; the
resolved config is echoed in ``manifest.json`` next to the outputs.
Exit codes: 0 success, 1 runtime failure, 2 usage error.
"""
from __future__ import annotations

import argparse
import csv
import hashlib
import json
import logging
import os
import sys
import tempfile
from datetime import datetime, timezone
from pathlib import Path

from kglinkbench import __version__
from kglinkbench.bench import (
    LIMIT_SCOPES, BenchConfig, compare_rows, learning_curve, make_split,
)
from kglinkbench.embed import export_embeddings, train_embeddings
from kglinkbench.featclass import OPERATORS
from kglinkbench.graphcore import load_graph, restrict
from kglinkbench.seeding import derive_seed, fraction_key
from kglinkbench.split import STRATEGIES, export_split, import_split
from kglinkbench.synth import planted_partition, write_tsv

log = logging.getLogger("kglinkbench")

EXIT_OK, EXIT_RUNTIME, EXIT_USAGE = 0, 1, 2


class UsageError(Exception):
    pass


# flag dest -> path in the nested BenchConfig dict
FLAG_PATHS = {
    "mode": ("mode",),
    "seed": ("seed",),
    "operator": ("operator",),
    "fractions": ("fractions",),
    "limit_scope": ("limit_scope",),
    "relations": ("relations",),
    "threads": ("threads",),
    "dim": ("embedding", "dim"),
    "epochs": ("embedding", "epochs"),
    "lr": ("embedding", "lr0"),
    "neg_k": ("embedding", "neg_k"),
    "deterministic": ("embedding", "deterministic"),
    "clf_lr": ("classifier", "lr"),
    "clf_epochs": ("classifier", "epochs"),
    "l2_reg": ("classifier", "l2_reg"),
    "test_fraction": ("split", "test_fraction"),
    "neg_ratio": ("split", "neg_ratio_train"),
    "strategy": ("split", "strategy"),
    "filtered": ("split", "filtered"),
    "min_test": ("split", "min_test_threshold"),
}


def _float_list(text):
    try:
        return [float(x) for x in text.split(",") if x.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {text!r}")


def _str_list(text):
    return [x for x in text.split(",") if x]


def _add_split_flags(p):
    p.add_argument("--graph", required=True, help="TSV edge list (head, relation, tail)")
    p.add_argument("--config", help="JSON config file (or a previous manifest.json)")
    p.add_argument("--seed", type=int)
    p.add_argument("--test-fraction", type=float)
    p.add_argument("--neg-ratio", type=float, help="train negatives per train positive")
    p.add_argument("--strategy", choices=STRATEGIES)
    p.add_argument("--filtered", action=argparse.BooleanOptionalAction, default=None)
    p.add_argument("--min-test", type=int, help="relations with fewer triples get no test split")
    p.add_argument("--out", required=True, help="output directory")


def _add_embedding_flags(p):
    p.add_argument("--dim", type=int)
    p.add_argument("--epochs", type=int)
    p.add_argument("--lr", type=float, help="initial embedding learning rate")
    p.add_argument("--neg-k", type=int)
    p.add_argument("--deterministic", action=argparse.BooleanOptionalAction, default=None)
    p.add_argument("--threads", type=int)
    p.add_argument("--split-dir", help="reuse a split bundle written by the split command")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="kglinkbench", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=__version__)
    parser.add_argument("-v", "--verbose", action="count", default=0)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("split", help="build and export a train/test split")
    _add_split_flags(p)

    p = sub.add_parser("bench", help="run the benchmark")
    _add_split_flags(p)
    _add_embedding_flags(p)
    p.add_argument("--mode", choices=("global", "local", "both"))
    p.add_argument("--operator", choices=OPERATORS)
    p.add_argument("--fractions", type=_float_list)
    p.add_argument("--limit-scope", choices=LIMIT_SCOPES)
    p.add_argument("--relations", type=_str_list, help="comma-separated relation labels to evaluate")
    p.add_argument("--clf-lr", type=float)
    p.add_argument("--clf-epochs", type=int)
    p.add_argument("--l2-reg", type=float)

    p = sub.add_parser("synth", help="write a planted-partition graph")
    p.add_argument("--blocks", type=int, default=2)
    p.add_argument("--block-size", type=int, default=100)
    p.add_argument("--p-in", type=float, default=0.1)
    p.add_argument("--p-out", type=float, default=0.01)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True, help="output TSV path")

    p = sub.add_parser("export-embeddings", help="train and export entity embeddings")
    _add_split_flags(p)
    _add_embedding_flags(p)
    p.add_argument("--mode", choices=("global", "local"))
    p.add_argument("--relations", type=_str_list, help="relations to export in local mode")
    return parser


def resolve_config(args) -> BenchConfig:
    cfg = BenchConfig().to_dict()
    if getattr(args, "config", None):
        try:
            loaded = json.loads(Path(args.config).read_text(encoding="utf-8"))
        except (OSError, json.JSONDecodeError) as exc:
            raise UsageError(f"cannot read config {args.config}: {exc}")
        loaded = loaded.get("config", loaded)
        for key, value in loaded.items():
            if isinstance(value, dict) and isinstance(cfg.get(key), dict):
                cfg[key].update(value)
            else:
                cfg[key] = value
    for dest, path in FLAG_PATHS.items():
        value = getattr(args, dest, None)
        if value is None:
            continue
        node = cfg
        for key in path[:-1]:
            node = node[key]
        node[path[-1]] = value
    try:
        return BenchConfig.from_dict(cfg)
    except (TypeError, ValueError) as exc:
        raise UsageError(str(exc))


def file_digest(path) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 20), b""):
            h.update(chunk)
    return h.hexdigest()


def atomic_write(path, text: str):
    path = Path(path)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.")
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise
    return path


def _now():
    return datetime.now(timezone.utc).isoformat()


def write_manifest(out_dir: Path, command: str, cfg: BenchConfig | None, graph, outputs, started):
    manifest = {
        "toolkit_version": __version__,
        "command": command,
        "config": None if cfg is None else cfg.to_dict(),
        "seed": None if cfg is None else cfg.seed,
        "input": None if graph is None else {"path": str(graph), "sha256": file_digest(graph)},
        "started_at": started,
        "finished_at": _now(),
        "outputs": sorted(str(Path(p).relative_to(out_dir)) for p in outputs),
    }
    return atomic_write(out_dir / "manifest.json", json.dumps(manifest, indent=2, sort_keys=True) + "\n")


def _set_threads(n):
    import numba
    numba.set_num_threads(max(1, min(n, numba.config.NUMBA_NUM_THREADS)))


def _graph_and_split(args, cfg):
    g = load_graph(args.graph)
    if getattr(args, "split_dir", None):
        split = import_split(g, args.split_dir)
        if split.seed != cfg.seed:
            log.warning("split bundle seed %d differs from run seed %d", split.seed, cfg.seed)
    else:
        split = make_split(g, cfg)
    return g, split


def cmd_split(args, cfg: BenchConfig):
    started = _now()
    out = Path(args.out)
    g, split = _graph_and_split(args, cfg)
    outputs = export_split(g, split, out, version=__version__)
    write_manifest(out, "split", cfg, args.graph, outputs, started)
    return outputs


def _tag(f):
    return f"{f:g}"


def cmd_bench(args, cfg: BenchConfig):
    started = _now()
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    _set_threads(cfg.threads)
    g, split = _graph_and_split(args, cfg)
    modes = ("global", "local") if cfg.mode == "both" else (cfg.mode,)
    outputs = []
    curves = {m: dict(learning_curve(g, cfg, split, mode=m)) for m in modes}
    curve_rows = []
    for m in modes:
        for f, report in curves[m].items():
            stem = f"report_{m}_f{_tag(f)}"
            outputs.append(atomic_write(out / f"{stem}.json", report.to_json()))
            outputs.append(atomic_write(out / f"{stem}.csv", report.to_csv()))
            curve_rows.append({"mode": m, "fraction": repr(f), "micro_f1": repr(report.micro_f1),
                               "macro_f1": repr(report.macro_f1),
                               "n_relations": len(report.per_relation)})
    if len(modes) == 2:
        for f in cfg.fractions:
            if f in curves["global"] and f in curves["local"]:
                rows = compare_rows(curves["global"][f], curves["local"][f])
                outputs.append(_write_csv(out / f"comparison_f{_tag(f)}.csv", rows))
    if curve_rows:
        outputs.append(_write_csv(out / "curve.csv", curve_rows))
    write_manifest(out, "bench", cfg, args.graph, outputs, started)
    return outputs


def _write_csv(path, rows):
    import io
    buf = io.StringIO()
    writer = csv.DictWriter(buf, fieldnames=list(rows[0]), lineterminator="\n")
    writer.writeheader()
    writer.writerows(rows)
    return atomic_write(path, buf.getvalue())


def cmd_export_embeddings(args, cfg: BenchConfig):
    from dataclasses import replace

    started = _now()
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    _set_threads(cfg.threads)
    g, split = _graph_and_split(args, cfg)
    key = fraction_key(1.0)
    outputs = []
    extra = {"bench_config": cfg.to_dict()}
    if cfg.mode in ("global", "both"):
        sub = restrict(g, split.all_train_pos())
        ecfg = replace(cfg.embedding, seed=derive_seed(cfg.seed, "embed-global", key))
        space = train_embeddings(sub.triples, sub.n_entities, ecfg, workers=cfg.threads)
        space = space.relabel(sub.entity_map, sub.entities)
        outputs += export_embeddings(space, out / "embeddings_global.tsv", extra)
    if cfg.mode in ("local", "both"):
        wanted = cfg.relations or g.relations
        for label in wanted:
            r = g.relation_id(label)
            stream = split.train_pos[r]
            sub = restrict(g, stream) if stream else None
            if sub is None or sub.n_entities < 2:
                log.warning("relation %r: fewer than 2 training entities; not exported", label)
                continue
            ecfg = replace(cfg.embedding, seed=derive_seed(cfg.seed, "embed-local", r, key))
            space = train_embeddings(sub.triples, sub.n_entities, ecfg, workers=cfg.threads)
            space = space.relabel(sub.entity_map, sub.entities)
            outputs += export_embeddings(space, out / f"embeddings_local_r{r:04d}.tsv",
                                         {**extra, "relation": label})
    write_manifest(out, "export-embeddings", cfg, args.graph, outputs, started)
    return outputs


def cmd_synth(args):
    try:
        rows, _ = planted_partition(args.blocks, args.block_size, args.p_in, args.p_out, args.seed)
    except ValueError as exc:
        raise UsageError(str(exc))
    out = Path(args.out)
    if out.parent != Path(""):
        out.parent.mkdir(parents=True, exist_ok=True)
    write_tsv(rows, out)
    return [out]


COMMANDS = {"split": cmd_split, "bench": cmd_bench, "export-embeddings": cmd_export_embeddings}


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(
        level=logging.WARNING - 10 * min(args.verbose, 2),
        format="%(levelname)s %(name)s: %(message)s",
    )
    try:
        if args.command == "synth":
            cmd_synth(args)
            return EXIT_OK
        cfg = resolve_config(args)
    except UsageError as exc:
        print(f"{parser.prog} {args.command}: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    try:
        COMMANDS[args.command](args, cfg)
    except Exception as exc:  # noqa: BLE001 - one-line diagnostic, nonzero exit
        log.debug("failure", exc_info=True)
        msg = " ".join(str(exc).split()) or type(exc).__name__
        print(f"{parser.prog} {args.command}: {type(exc).__name__}: {msg}", file=sys.stderr)
        return EXIT_RUNTIME
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
