"""Command-line entry point.

Exit codes: 0 success, 1 runtime or input error, 2 configuration error,
3 search divergence.  Artifacts go to ``<out>/<run-name>/``.
"""
from __future__ import annotations

import argparse
import json
import os
import sys
from pathlib import Path

from .alpha import AlphaTable, genotype_to_alpha, parse_alpha
from .config import ConfigError, RunConfig
from .derive import derive_genotype, derive_indices
from .genotype import GenotypeError, Genotype, load, save
from .handcrafted import HANDCRAFTED, encode_handcrafted
from .metric import distance_statistics, matrix_to_csv, metric_M, pairwise_matrix

EXIT_OK, EXIT_ERROR, EXIT_CONFIG, EXIT_DIVERGED = 0, 1, 2, 3


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        raise ConfigError(message)


def _overrides(pairs) -> dict:
    out = {}
    for p in pairs or []:
        if "=" not in p:
            raise ConfigError(f"override {p!r} is not key=value")
        k, v = p.split("=", 1)
        out[k.strip()] = v
    return out


def _config(args, extra: dict | None = None) -> RunConfig:
    over = _overrides(getattr(args, "overrides", None))
    if getattr(args, "seed", None) is not None:
        over["seed"] = str(args.seed)
    if getattr(args, "out", None) is not None:
        over["out"] = args.out
    over.update(extra or {})
    return RunConfig.resolve(getattr(args, "config", None), over)


def _run_dir(cfg: RunConfig, command: str) -> Path:
    d = Path(cfg.out) / cfg.default_run_name(command)
    d.mkdir(parents=True, exist_ok=True)
    (d / "config.txt").write_text(cfg.to_text())
    return d


def _load_start(spec: str) -> Genotype:
    if spec in HANDCRAFTED:
        return encode_handcrafted(spec)
    if not os.path.exists(spec):
        raise ConfigError(f"start genotype {spec!r} is neither a handcrafted name nor a file")
    return load(spec)


# -- commands -----------------------------------------------------------------

def cmd_search(args) -> int:
    from .search.checkpoint import named_arrays, write_blob
    from .search.engine import metrics_csv, search

    cfg = _config(args)
    start = None
    if cfg.mode == "dartopti":
        if not cfg.start:
            raise ConfigError("dartopti mode needs start = <handcrafted name or genotype file>")
        start = _load_start(cfg.start)
    elif cfg.start:
        start = _load_start(cfg.start)
    ds = cfg.dataset()
    result = search(start, ds, cfg.search_config())
    d = _run_dir(cfg, "search")
    save(result.genotype, d / "genotype.json")
    (d / "metrics.csv").write_text(metrics_csv(result.log))
    (d / "distance.csv").write_text(result.trace.to_csv())
    st = result.state
    st.alpha.save(d / "alpha.json")
    arrays = named_arrays(st.net, "net.") + [(f"alpha.{i}", t.data)
                                             for i, t in enumerate(st.alpha.tables)]
    write_blob(d / "checkpoint.bin", arrays,
               {"mode": cfg.mode, "epochs_run": len(result.log),
                "stopped_epoch": result.stopped_epoch, "seed": cfg.seed})
    last = result.log[-1] if result.log else {}
    print(f"epochs={len(result.log)} val_top1={last.get('val_top1')} "
          f"stopped={result.stopped_epoch} out={d}")
    return EXIT_OK


def cmd_derive(args) -> int:
    if args.n < 1:
        raise ConfigError(f"n must be >= 1, got {args.n}")
    cfg = _config(args)
    src = load(args.genotype)
    idx = derive_indices(src.n_cells, args.n)
    out = derive_genotype(src, args.n)
    path = Path(args.output) if args.output else _run_dir(cfg, "derive") / "derived.genotype.json"
    save(out, path)
    print("[" + ",".join(map(str, idx)) + "]")
    return EXIT_OK


def _genotype_files(paths) -> list[Path]:
    files = []
    for p in map(Path, paths):
        if p.is_dir():
            files += sorted(f for f in p.iterdir() if f.suffix == ".json"
                            and not f.name.startswith("alpha"))
        else:
            files.append(p)
    return files


def cmd_distance(args) -> int:
    paths = [args.a] + ([args.b] if args.b else [])
    if len(paths) == 2 and not any(Path(p).is_dir() for p in paths):
        print(repr(metric_M(load(paths[0]), load(paths[1]))))
        return EXIT_OK
    files = _genotype_files(paths)
    if not files:
        raise ConfigError("no genotype files found")
    gs = [load(f) for f in files]
    text = matrix_to_csv(pairwise_matrix(gs), [f.stem for f in files])
    cfg = _config(args)
    (_run_dir(cfg, "distance") / "distance_matrix.csv").write_text(text)
    sys.stdout.write(text)
    return EXIT_OK


def cmd_stats(args) -> int:
    files = _genotype_files(args.paths)
    if len(files) < 2:
        raise ConfigError("stats needs at least two genotypes")
    gs = [load(f) for f in files]
    D = pairwise_matrix(gs)
    stats = distance_statistics(D)
    cfg = _config(args)
    d = _run_dir(cfg, "stats")
    (d / "distance_matrix.csv").write_text(matrix_to_csv(D, [f.stem for f in files]))
    (d / "stats.json").write_text(json.dumps(stats, indent=2) + "\n")
    for k, v in stats.items():
        print(f"{k}={v}")
    return EXIT_OK


def cmd_encode(args) -> int:
    if args.name not in HANDCRAFTED:
        raise ConfigError(f"unknown network {args.name!r}; choose from {', '.join(HANDCRAFTED)}")
    cfg = _config(args)
    g = encode_handcrafted(args.name)
    path = Path(args.output) if args.output else \
        _run_dir(cfg, "encode") / f"{args.name}.genotype.json"
    save(g, path)
    if args.alpha_out:
        genotype_to_alpha(g, args.hot, args.cold).save(args.alpha_out)
    print(path)
    return EXIT_OK


def cmd_parse(args) -> int:
    if args.method not in ("darts", "edge", "sparse"):
        raise ConfigError(f"unknown parse method {args.method!r}")
    if not 0 < args.threshold < 1:
        raise ConfigError(f"threshold must lie in (0, 1), got {args.threshold}")
    cfg = _config(args)
    g = parse_alpha(AlphaTable.load(args.alpha), args.method, args.threshold)
    path = Path(args.output) if args.output else _run_dir(cfg, "parse") / "genotype.json"
    save(g, path)
    print(path)
    return EXIT_OK


def cmd_gendata(args) -> int:
    from .search.data import write_raster
    cfg = _config(args)
    ds = cfg.dataset()
    path = Path(args.output) if args.output else _run_dir(cfg, "gendata") / "data.raster"
    write_raster(ds, path)
    print(path)
    return EXIT_OK


def cmd_opscore(args) -> int:
    from .search.opscore import op_score_benchmark, scores_csv
    cfg = _config(args)
    scores = op_score_benchmark(cfg.dataset(), runs=cfg.runs, epochs=cfg.epochs, seed=cfg.seed,
                                channels=cfg.channels, batch_size=cfg.batch_size,
                                workers=cfg.workers)
    text = scores_csv(scores)
    (_run_dir(cfg, "opscore") / "scores.csv").write_text(text)
    sys.stdout.write(text)
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", default=argparse.SUPPRESS, help="key = value config file")
    common.add_argument("--seed", type=int, default=argparse.SUPPRESS)
    common.add_argument("--out", default=argparse.SUPPRESS, help="output root directory")

    p = _Parser(prog="ddarts", parents=[common],
                description="Distributed differentiable architecture search toolkit.")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    s = sub.add_parser("search", parents=[common], help="run an architecture search")
    s.add_argument("overrides", nargs="*", help="config overrides as key=value")
    s.set_defaults(func=cmd_search)

    s = sub.add_parser("derive", parents=[common], help="stretch a genotype to n cells")
    s.add_argument("genotype")
    s.add_argument("n", type=int)
    s.add_argument("-o", "--output")
    s.set_defaults(func=cmd_derive)

    s = sub.add_parser("distance", parents=[common],
                       help="distance between two genotypes, or a matrix over a directory")
    s.add_argument("a")
    s.add_argument("b", nargs="?")
    s.set_defaults(func=cmd_distance)

    s = sub.add_parser("encode", parents=[common], help="write a handcrafted genotype")
    s.add_argument("name")
    s.add_argument("-o", "--output")
    s.add_argument("--alpha-out", help="also write the warm-start logits here")
    s.add_argument("--hot", type=float, default=3.0)
    s.add_argument("--cold", type=float, default=-3.0)
    s.set_defaults(func=cmd_encode)

    s = sub.add_parser("parse", parents=[common], help="discretize an alpha checkpoint")
    s.add_argument("alpha")
    s.add_argument("--method", default="edge")
    s.add_argument("--threshold", type=float, default=0.85)
    s.add_argument("-o", "--output")
    s.set_defaults(func=cmd_parse)

    s = sub.add_parser("gendata", parents=[common], help="write a synthetic raster dataset")
    s.add_argument("overrides", nargs="*")
    s.add_argument("-o", "--output")
    s.set_defaults(func=cmd_gendata)

    s = sub.add_parser("opscore", parents=[common], help="benchmark every operation")
    s.add_argument("overrides", nargs="*")
    s.set_defaults(func=cmd_opscore)

    s = sub.add_parser("stats", parents=[common], help="pairwise distance statistics")
    s.add_argument("paths", nargs="+")
    s.set_defaults(func=cmd_stats)
    return p


def main(argv=None) -> int:
    from .search.engine import SearchDivergence
    try:
        args = build_parser().parse_args(argv)
        return args.func(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except SearchDivergence as exc:
        print(f"search diverged: {exc}", file=sys.stderr)
        return EXIT_DIVERGED
    except (GenotypeError, OSError, ValueError, KeyError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_ERROR


if __name__ == "__main__":
    sys.exit(main())
