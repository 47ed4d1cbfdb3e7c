"""Command-line entry point.

Subcommands: synth (spec JSON to embeddings + manifest), train (fit a
probe head), eval (score a head or an existing score CSV), loo
(leave-one-species-out sweep), fuse (average two score CSVs).  Every
command prints a machine-readable JSON summary to standard output, writes
its artifacts into --out, and is deterministic: rerunning with the same
flags and input files reproduces every output byte for byte.

Exit codes: 0 success, 1 bad input or bad flags, 2 unexpected internal
failure.  All argparse usage errors are funnelled through the package
error type so they also exit with 1.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
import traceback

from . import io as pio
from .det import sweep_det
from .errors import PadBenchError, ValidationError
from .fusion import evaluate_fusion
from .head import TrainConfig, predict_scores, train_head
from .metrics import compute_report
from .protocol import ALL_ATTACKS, ResultRow, attach_manifest, run_benchmark
from .synth import analytic_eer, generate

__all__ = ["main"]


class _Parser(argparse.ArgumentParser):
    # argparse wants to print usage and sys.exit(2) on bad flags; route
    # that through the package error type so the exit code stays 1.
    def error(self, message):
        raise ValidationError(f"{self.prog}: {message}")


def _add_out(parser):
    parser.add_argument("--out", default=".", help="output directory")


def _add_train_flags(parser):
    parser.add_argument("--lr", type=float, default=1e-3,
                        help="SGD learning rate")
    parser.add_argument("--epochs", type=int, default=100)
    parser.add_argument("--batch", type=int, default=64,
                        help="minibatch size")
    parser.add_argument("--hidden-layers", type=int, default=0)
    parser.add_argument("--hidden-width", type=int, default=16)
    parser.add_argument("--seed", type=int, default=0)


def build_parser():
    parser = _Parser(prog="padbench",
                     description="presentation attack detection benchmark")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("synth", help="generate a synthetic embedding set")
    p.add_argument("--spec", required=True, help="generator spec JSON")
    p.add_argument("--seed", type=int, default=None,
                   help="override the seed stored in the spec")
    _add_out(p)
    p.set_defaults(func=cmd_synth)

    p = sub.add_parser("train", help="fit a probe head on the train split")
    p.add_argument("--embeddings", required=True)
    p.add_argument("--manifest", required=True)
    _add_train_flags(p)
    _add_out(p)
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("eval", help="evaluate a head or a score CSV")
    p.add_argument("--scores", help="score CSV to evaluate as-is")
    p.add_argument("--head", help="trained head JSON")
    p.add_argument("--embeddings", help="embedding file for --head")
    p.add_argument("--manifest", help="manifest for --head")
    p.add_argument("--model", default=None,
                   help="model name for the results row")
    p.add_argument("--det-scale", choices=("raw", "probit"), default="raw")
    _add_out(p)
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("loo", help="leave-one-species-out benchmark")
    p.add_argument("--embeddings", required=True)
    p.add_argument("--manifest", required=True)
    p.add_argument("--model", default="model")
    p.add_argument("--jobs", type=int, default=1)
    _add_train_flags(p)
    _add_out(p)
    p.set_defaults(func=cmd_loo)

    p = sub.add_parser("fuse", help="average two score CSVs and compare")
    p.add_argument("--scores", action="append", default=[],
                   help="score CSV; pass exactly twice")
    p.add_argument("--normalize", action="store_true",
                   help="min-max normalize each set before averaging")
    _add_out(p)
    p.set_defaults(func=cmd_fuse)
    return parser


def _outdir(args):
    os.makedirs(args.out, exist_ok=True)
    return args.out


def _emit(payload):
    print(json.dumps(payload, sort_keys=True, indent=2))


def _stem(path):
    return os.path.splitext(os.path.basename(path))[0]


def _config(args):
    return TrainConfig(
        learning_rate=args.lr,
        batch_size=args.batch,
        epochs=args.epochs,
        seed=args.seed,
        hidden_layers=args.hidden_layers,
        hidden_width=args.hidden_width,
    )


def _row_dict(row):
    d = {"model": row.model, "protocol": row.protocol,
         "held_out": row.held_out}
    if row.error:
        d["error"] = row.error
    else:
        d.update(eer=row.eer, bpcer10=row.bpcer10,
                 bpcer20=row.bpcer20, bpcer100=row.bpcer100)
    return d


def cmd_synth(args):
    spec = pio.read_synth_spec(args.spec, seed_override=args.seed)
    table, manifest = generate(spec)
    out = _outdir(args)
    comments = (f"seed: {spec.seed}",)
    pio.write_embeddings(table, os.path.join(out, "embeddings.pade"),
                         header_comments=comments)
    pio.write_manifest(manifest, os.path.join(out, "manifest.csv"),
                       header_comments=comments)
    _emit({
        "command": "synth",
        "seed": spec.seed,
        "dim": spec.dim,
        "rows": table.n_rows,
        "bona_fide": spec.n_bona_fide,
        "species": {
            name: {
                "count": sp.count,
                "d_prime": sp.d_prime,
                "analytic_eer": analytic_eer(sp.d_prime),
            }
            for name, sp in spec.species.items()
        },
        "outputs": ["embeddings.pade", "embeddings.pade.labels.csv",
                    "manifest.csv"],
    })
    return 0


def cmd_train(args):
    table = pio.read_embeddings(args.embeddings)
    manifest = pio.read_manifest(args.manifest)
    table = attach_manifest(table, manifest)
    config = _config(args)
    head = train_head(table, config)
    out = _outdir(args)
    pio.write_head(head, os.path.join(out, "head.json"), meta={
        "seed": config.seed,
        "learning_rate": config.learning_rate,
        "batch_size": config.batch_size,
        "epochs": config.epochs,
        "hidden_layers": config.hidden_layers,
        "hidden_width": config.hidden_width,
    })
    report = compute_report(predict_scores(head, table, "val"))
    payload = {
        "command": "train",
        "seed": config.seed,
        "val_report": report.to_dict(),
        "n_params": head.n_params,
        "outputs": ["head.json", "val_report.json"],
    }
    text = json.dumps(payload, sort_keys=True, indent=2) + "\n"
    with open(os.path.join(out, "val_report.json"), "w",
              encoding="utf-8") as fh:
        fh.write(text)
    print(text, end="")
    return 0


def cmd_eval(args):
    if bool(args.scores) == bool(args.head):
        raise ValidationError("pass exactly one of --scores or --head")
    out = _outdir(args)
    if args.scores:
        score_set = pio.read_scores(args.scores)
        model = args.model or _stem(args.scores)
    else:
        if not args.embeddings or not args.manifest:
            raise ValidationError("--head needs --embeddings and --manifest")
        table = pio.read_embeddings(args.embeddings)
        manifest = pio.read_manifest(args.manifest)
        table = attach_manifest(table, manifest)
        head = pio.read_head(args.head)
        score_set = predict_scores(head, table, "test")
        model = args.model or _stem(args.head)
    report = compute_report(score_set)
    curve = sweep_det(score_set.bona_fide, score_set.pooled_attacks())
    row = ResultRow(
        model=model, protocol="two-class", held_out=ALL_ATTACKS,
        eer=report.eer, bpcer10=report.bpcer10,
        bpcer20=report.bpcer20, bpcer100=report.bpcer100,
    )
    pio.write_scores(score_set, os.path.join(out, "scores.csv"))
    pio.write_results([row], os.path.join(out, "results.csv"))
    coordinates = "raw" if args.det_scale == "raw" else "normal-deviate"
    pio.write_det(curve, os.path.join(out, "det.csv"),
                  coordinates=coordinates)
    payload = {
        "command": "eval",
        "model": model,
        "report": report.to_dict(),
        "row": _row_dict(row),
        "outputs": ["scores.csv", "results.csv", "det.csv", "report.json"],
    }
    with open(os.path.join(out, "report.json"), "w", encoding="utf-8") as fh:
        fh.write(json.dumps(payload, sort_keys=True, indent=2) + "\n")
    _emit(payload)
    print(pio.render_results_table([row]), end="")
    return 0


def cmd_loo(args):
    table = pio.read_embeddings(args.embeddings)
    manifest = pio.read_manifest(args.manifest)
    config = _config(args)
    if args.jobs < 1:
        raise ValidationError("--jobs must be at least 1")
    rows = run_benchmark({args.model: table}, manifest, "loo-all-species",
                         config, jobs=args.jobs)
    out = _outdir(args)
    pio.write_results(rows, os.path.join(out, "results.csv"),
                      header_comments=(f"seed: {config.seed}",))
    _emit({
        "command": "loo",
        "seed": config.seed,
        "rows": [_row_dict(r) for r in rows],
        "outputs": ["results.csv"],
    })
    print(pio.render_results_table(rows), end="")
    return 0


def cmd_fuse(args):
    if len(args.scores) != 2:
        raise ValidationError("fuse needs exactly two --scores files")
    a = pio.read_scores(args.scores[0])
    b = pio.read_scores(args.scores[1])
    names = (_stem(args.scores[0]), _stem(args.scores[1]))
    comparison = evaluate_fusion(a, b, names=names,
                                 normalize=args.normalize)
    out = _outdir(args)
    pio.write_scores(comparison.fused, os.path.join(out, "fused_scores.csv"))
    payload = {
        "command": "fuse",
        "a": {"name": names[0], "report": comparison.report_a.to_dict()},
        "b": {"name": names[1], "report": comparison.report_b.to_dict()},
        "fused": {"name": "fused",
                  "report": comparison.report_fused.to_dict()},
        "improved": comparison.improved,
        "normalized": bool(args.normalize),
        "outputs": ["fused_scores.csv", "comparison.json"],
    }
    with open(os.path.join(out, "comparison.json"), "w",
              encoding="utf-8") as fh:
        fh.write(json.dumps(payload, sort_keys=True, indent=2) + "\n")
    _emit(payload)
    headers = ("Scores", "EER (%)", "BPCER10 (%)", "BPCER20 (%)",
               "BPCER100 (%)")
    body = [
        (name, pio.percent(rep.eer), pio.percent(rep.bpcer10),
         pio.percent(rep.bpcer20), pio.percent(rep.bpcer100))
        for name, rep in (
            (names[0], comparison.report_a),
            (names[1], comparison.report_b),
            ("fused", comparison.report_fused),
        )
    ]
    print(pio.render_table(headers, body, numeric_from=1), end="")
    return 0


def main(argv=None):
    try:
        args = build_parser().parse_args(argv)
        return args.func(args)
    except PadBenchError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except Exception as exc:  # pragma: no cover - defensive
        traceback.print_exc(file=sys.stderr)
        print(f"internal error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
