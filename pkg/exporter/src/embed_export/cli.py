"""Command line front end.

Exit codes: 0 on success, 1 for anticipated failures (bad flags,
layout problems, unobtainable weights), 2 for anything unexpected.
"""

import argparse
import json
import logging
import sys
import traceback

from .backbones import REGISTRY, resolve
from .export import export
from .job import AUGMENTATIONS, WEIGHT_MODES, ExportError, ExportJob

__all__ = ["main"]


class _Parser(argparse.ArgumentParser):
    # route argparse's usage-and-exit-2 habit through the package error
    # type so usage mistakes exit 1 like every other anticipated failure
    def error(self, message):
        raise ExportError(f"{self.prog}: {message}")


def build_parser():
    parser = _Parser(prog="embed-export", description=__doc__)
    parser.add_argument("--backbone", required=True,
                        help="registry name, see --list-backbones")
    parser.add_argument("--input", required=True,
                        help="image tree laid out as <class>/<species>/<split>/*")
    parser.add_argument("--out", required=True, help="output directory")
    parser.add_argument("--replicas", type=int, default=1,
                        help="rows per image; replica 0 is unaugmented")
    parser.add_argument("--augment", action="append", choices=AUGMENTATIONS,
                        metavar="OP",
                        help="augmentation to draw from, repeatable; "
                             "default is all of " + ", ".join(AUGMENTATIONS))
    parser.add_argument("--seed", type=int, default=0)
    parser.add_argument("--weights", choices=WEIGHT_MODES, default="auto")
    parser.add_argument("--batch", type=int, default=8)
    parser.add_argument("--quiet", action="store_true",
                        help="suppress progress logging on stderr")
    return parser


def list_backbones():
    width = max(len(name) for name in REGISTRY)
    for name in sorted(REGISTRY):
        spec = REGISTRY[name]
        print(f"{name.ljust(width)}  {str(spec.dim).rjust(4)}  {spec.family}")
    return 0


def main(argv=None):
    argv = sys.argv[1:] if argv is None else list(argv)
    if "--list-backbones" in argv:
        return list_backbones()
    try:
        args = build_parser().parse_args(argv)
        logging.basicConfig(
            level=logging.ERROR if args.quiet else logging.INFO,
            format="%(levelname)s %(message)s",
            stream=sys.stderr,
        )
        job = ExportJob(
            backbone=args.backbone,
            input_dir=args.input,
            out_dir=args.out,
            replicas=args.replicas,
            augmentations=tuple(args.augment) if args.augment else AUGMENTATIONS,
            seed=args.seed,
            weights=args.weights,
            batch_size=args.batch,
        )
        summary = export(job)
        payload = {
            "command": "export",
            "backbone": summary.backbone,
            "dim": summary.dim,
            "weights": summary.weights,
            "images": summary.images,
            "skipped": list(summary.skipped),
            "replicas": summary.replicas,
            "rows": summary.rows,
            "resize": resolve(summary.backbone).recipe.describe(),
            "outputs": list(summary.outputs),
        }
        print(json.dumps(payload, sort_keys=True, indent=2))
        return 0
    except ExportError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except Exception as exc:  # pragma: no cover - defensive
        traceback.print_exc(file=sys.stderr)
        print(f"internal error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
