"""Compare the SGD training kernels: compiled extension vs numpy fallback.

Runs the same seeded training job through every available backend,
checks that the resulting parameters agree, and reports wall time per
epoch plus the speedup over the pure-python baseline.

    python3 benchmarks/bench_backends.py
    python3 benchmarks/bench_backends.py --rows 20000 --dim 384 --epochs 20
"""

import argparse
import time

import numpy as np

from padbench import (
    SpeciesSpec,
    SynthSpec,
    TrainConfig,
    available_backends,
    generate,
    train_head,
)


def flatten(head):
    return np.concatenate([np.concatenate([w.ravel(), b]) for w, b in head.layers])


def run(args):
    spec = SynthSpec(
        dim=args.dim,
        n_bona_fide=args.rows,
        species={"bench": SpeciesSpec(count=args.rows, d_prime=2.0)},
        seed=args.seed,
    )
    table, _ = generate(spec)
    config = TrainConfig(
        epochs=args.epochs,
        batch_size=args.batch,
        hidden_layers=args.hidden_layers,
        hidden_width=args.hidden_width,
        seed=args.seed,
    )
    n_train = int(np.count_nonzero(
        np.array([s == "train" for s in table.split])
    ))
    print(
        f"training set: {n_train} rows x {args.dim} dims, "
        f"{args.epochs} epochs, batch {args.batch}, "
        f"hidden {args.hidden_layers} x {args.hidden_width}"
    )

    results = {}
    for backend in available_backends():
        best = float("inf")
        head = None
        for _ in range(args.repeats):
            t0 = time.perf_counter()
            head = train_head(table, config, backend=backend)
            best = min(best, time.perf_counter() - t0)
        results[backend] = (best, flatten(head))
        print(
            f"  {backend:<8} {best:8.3f} s total, "
            f"{best / args.epochs * 1e3:8.2f} ms/epoch"
        )

    if "python" in results and len(results) > 1:
        base = results["python"][0]
        for backend, (elapsed, params) in results.items():
            if backend == "python":
                continue
            drift = float(
                np.max(np.abs(params - results["python"][1]))
                / max(1.0, float(np.max(np.abs(results["python"][1]))))
            )
            print(
                f"  {backend} speedup over python: {base / elapsed:.1f}x, "
                f"max relative parameter drift {drift:.2e}"
            )
            if drift > 1e-9:
                raise SystemExit(f"backends disagree: drift {drift:.2e}")


def main():
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--rows", type=int, default=5000,
                        help="presentations per class")
    parser.add_argument("--dim", type=int, default=64)
    parser.add_argument("--epochs", type=int, default=10)
    parser.add_argument("--batch", type=int, default=64)
    parser.add_argument("--hidden-layers", type=int, default=1)
    parser.add_argument("--hidden-width", type=int, default=16)
    parser.add_argument("--repeats", type=int, default=3,
                        help="take the best of this many runs")
    parser.add_argument("--seed", type=int, default=0)
    run(parser.parse_args())


if __name__ == "__main__":
    main()
