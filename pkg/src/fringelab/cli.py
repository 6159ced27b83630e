"""Command-line entry point: ``fringelab <stage> [options]``.

Exit codes: 0 success, 2 configuration error, 3 data error, 4 numeric failure.
"""
from __future__ import annotations

import argparse
import logging
import os
import sys
from pathlib import Path

from . import __version__, pipeline
from .config import ConfigError, load
from .core import FringelabError, NumericError
from .io import write_json

EXIT_OK, EXIT_CONFIG, EXIT_DATA, EXIT_NUMERIC = 0, 2, 3, 4

STAGES = ("synth", "spoof", "relight", "project", "decompose", "embed", "evaluate")


def _parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", type=Path, help="TOML experiment configuration")
    common.add_argument("--seed", type=int, help="override the configured seed")
    common.add_argument("--jobs", type=int, default=1, help="worker processes per stage (default 1)")
    common.add_argument("--out", type=Path, default=Path("out"), help="working directory holding the stage directories")

    p = argparse.ArgumentParser(prog="fringelab", description=__doc__.splitlines()[0])
    p.add_argument("--version", action="version", version=f"fringelab {__version__}")
    sub = p.add_subparsers(dest="command", required=True)
    for name in STAGES:
        sp = sub.add_parser(name, parents=[common], help=f"run the {name} stage")
        if name not in ("synth",):
            sp.add_argument("--input", type=Path, help="input stage directory (default: previous stage under --out)")
    sub.add_parser("run", parents=[common], help="synth, relight, project, decompose, embed and evaluate")
    pat = sub.add_parser("pattern", parents=[common], help="write the fringe pattern image and its spectral profile")
    pat.add_argument("--size", type=int, default=480)
    sub.add_parser("config", parents=[common], help="print the effective configuration as TOML")
    return p


def _setup_logging() -> None:
    level = os.environ.get("FRINGELAB_LOG", "WARNING").upper()
    logging.basicConfig(
        level=getattr(logging, level, logging.WARNING),
        format="%(levelname)s %(name)s: %(message)s",
        stream=sys.stderr,
    )


def _execute(args) -> None:
    cfg = load(args.config)
    if args.seed is not None:
        if args.seed < 0:
            raise ConfigError("--seed must be non-negative")
        cfg = cfg.replace(seed=args.seed)
    if args.jobs < 1:
        raise ConfigError("--jobs must be at least 1")
    root: Path = args.out
    cmd = args.command

    if cmd == "config":
        from .config import dumps

        sys.stdout.write(dumps(cfg))
        return
    if cmd == "run":
        pipeline.run_all(cfg, root, args.jobs)
        return
    if cmd == "pattern":
        from .pattern import profile_csv, spectral_profile, write_pattern_png

        comps = pipeline.components(cfg)
        root.mkdir(parents=True, exist_ok=True)
        write_pattern_png(root / "pattern.png", comps.pattern, args.size, args.size)
        img = comps.pattern.image(args.size, args.size)
        (root / "pattern_profile.csv").write_text(profile_csv(spectral_profile(img)))
        write_json(root / "pattern.json", {"pattern": comps.pattern.to_json(), "config_hash": cfg.hash})
        return

    if cmd == "synth":
        pipeline.run_synth(cfg, root / pipeline.DATASET, args.jobs)
        return
    src = getattr(args, "input", None) or pipeline.default_input(root, cmd)
    if cmd == "spoof":
        pipeline.run_spoof(cfg, src, args.jobs)
    elif cmd == "relight":
        pipeline.run_relight(cfg, src, root / pipeline.RELIT, args.jobs)
    elif cmd == "project":
        pipeline.run_project(cfg, src, root / pipeline.CAPTURES, args.jobs)
    elif cmd == "decompose":
        pipeline.run_decompose(cfg, src, root / pipeline.DECOMPOSED, args.jobs)
    elif cmd == "embed":
        pipeline.run_embed(cfg, src, root / pipeline.EMBEDDINGS, args.jobs)
    elif cmd == "evaluate":
        pipeline.run_evaluate(cfg, src, root / pipeline.REPORT)


def main(argv=None) -> int:
    _setup_logging()
    args = _parser().parse_args(argv)
    try:
        _execute(args)
    except ConfigError as exc:
        print(f"fringelab: config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except NumericError as exc:
        print(f"fringelab: numeric failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except FringelabError as exc:
        print(f"fringelab: {exc}", file=sys.stderr)
        return EXIT_DATA
    except FloatingPointError as exc:
        print(f"fringelab: numeric failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
