"""Command-line entry points: run, replay, hash, catalog-check.

Exit codes: 0 success, 1 usage error, 2 runtime error.
"""

from __future__ import annotations

import argparse
import sys
from dataclasses import replace as dc_replace

from .config import ConfigError, load_config, resolve_config_path
from .prompts import CatalogError
from .replay import ReplayTraceError, replay


class _Parser(argparse.ArgumentParser):
    """argparse exits 2 on usage errors; the contract here is 1."""

    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(1, f"{self.prog}: error: {message}\n")


def _build_parser() -> _Parser:
    parser = _Parser(prog="gazeforge", description="Gaze-driven landscape transformation engine")
    sub = parser.add_subparsers(dest="command", parser_class=_Parser)

    run_p = sub.add_parser("run", help="serve the installation engine")
    run_p.add_argument("--config", help="engine config JSON (or GAZEFORGE_CONFIG)")
    run_p.add_argument("--record", help="write a session log (JSONL) to this path")
    run_p.add_argument("--headless", action="store_true", help="run without expecting a viewer UI")
    run_p.add_argument("--seed", type=int, help="override the config seed")

    replay_p = sub.add_parser("replay", help="replay a trace deterministically")
    replay_p.add_argument("--trace", required=True, help="session log or bare gaze JSONL")
    replay_p.add_argument("--config", help="engine config JSON (or GAZEFORGE_CONFIG)")
    replay_p.add_argument("--seed", type=int, help="override the config seed")

    hash_p = sub.add_parser("hash", help="print the canonical hash of an image file")
    hash_p.add_argument("--image", required=True, help="path to a PNG (or any Pillow-readable) image")

    check_p = sub.add_parser("catalog-check", help="validate the prompt catalog")
    check_p.add_argument("--config", help="engine config JSON (or GAZEFORGE_CONFIG)")

    return parser


def _load_config_arg(parser: _Parser, path_arg: str | None):
    path = resolve_config_path(path_arg)
    if not path:
        parser.error("--config is required (or set GAZEFORGE_CONFIG)")
    return load_config(path)


def main(argv: list[str] | None = None) -> int:
    parser = _build_parser()
    args = parser.parse_args(argv)
    if not args.command:
        parser.error("a subcommand is required")

    try:
        if args.command == "run":
            return _cmd_run(parser, args)
        if args.command == "replay":
            return _cmd_replay(parser, args)
        if args.command == "hash":
            return _cmd_hash(args)
        if args.command == "catalog-check":
            return _cmd_catalog_check(parser, args)
    except (ConfigError, CatalogError, ReplayTraceError) as exc:
        print(f"gazeforge: {exc}", file=sys.stderr)
        return 2
    except OSError as exc:
        print(f"gazeforge: {exc}", file=sys.stderr)
        return 2
    return 0


def _cmd_run(parser: _Parser, args) -> int:
    from .backend import HttpBackend, MockBackend
    from .gateway import serve

    config = _load_config_arg(parser, args.config)
    if args.seed is not None:
        config = dc_replace(config, seed=args.seed)
    if config.backend == "http":
        backend = HttpBackend(
            config.backend_url,
            deadline_s=config.backend_deadline_s,
            retries=config.backend_retries,
            bearer_token=config.backend_token,
        )
    else:
        backend = MockBackend()
    serve(config, backend, record_path=args.record)
    return 0


def _cmd_replay(parser: _Parser, args) -> int:
    config = _load_config_arg(parser, args.config)
    if args.seed is not None:
        config = dc_replace(config, seed=args.seed)
    result = replay(args.trace, config)
    for line in result.stdout_lines():
        print(line)
    print(f"final state: {result.final_mode}", file=sys.stderr)
    return 0


def _cmd_hash(args) -> int:
    import numpy as np
    from PIL import Image as PILImage

    from .compositor import image_hash
    from .imaging import Image

    with PILImage.open(args.image) as im:
        arr = np.asarray(im.convert("RGB"), dtype=np.uint8)
    print(image_hash(Image(pixels=arr)))
    return 0


def _cmd_catalog_check(parser: _Parser, args) -> int:
    config = _load_config_arg(parser, args.config)
    catalog = config.load_catalog()
    print(f"destruction: {len(catalog.destruction)}")
    print(f"pristine: {len(catalog.pristine)}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
