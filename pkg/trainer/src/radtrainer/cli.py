"""Command line front: gen-data, train, predict."""

from __future__ import annotations

import argparse
import json

from .config import TrainConfig
from .synth import generate_synthetic_dataset
from .train import predict, train


def main(argv: list[str] | None = None) -> int:
    parser = argparse.ArgumentParser(prog="radtrainer",
                                     description="Toy-scale multi-view multi-label trainer")
    sub = parser.add_subparsers(dest="command", required=True)

    gen = sub.add_parser("gen-data", help="write a separable synthetic dataset")
    gen.add_argument("--out", required=True)
    gen.add_argument("--n", type=int, default=200)
    gen.add_argument("--views", type=int, default=2, choices=(1, 2))
    gen.add_argument("--image-size", type=int, default=512)
    gen.add_argument("--seed", type=int, default=0)

    fit = sub.add_parser("train", help="fit a model and score the validation split")
    fit.add_argument("--manifest", required=True)
    fit.add_argument("--sheets", required=True)
    fit.add_argument("--config", default=None)
    fit.add_argument("--seed", type=int, default=0)
    fit.add_argument("--out", required=True)
    fit.add_argument("--stop-at-macro-auc", type=float, default=None)

    score = sub.add_parser("predict", help="score a manifest into a score-matrix CSV")
    score.add_argument("--artifact", required=True)
    score.add_argument("--manifest", required=True)
    score.add_argument("--out", required=True)

    args = parser.parse_args(argv)
    if args.command == "gen-data":
        manifest = generate_synthetic_dataset(args.out, n_items=args.n, views=args.views,
                                              image_size=args.image_size, seed=args.seed)
        print(json.dumps({"items": len(manifest["items"]), "views": manifest["views"]}))
    elif args.command == "train":
        config = TrainConfig.from_file(args.config) if args.config else TrainConfig()
        result = train(args.manifest, args.sheets, config, seed=args.seed,
                       out_dir=args.out, stop_at_macro_auc=args.stop_at_macro_auc)
        print(json.dumps({"summary": result["summary"],
                          "epochs_ran": len(result["history"]),
                          "final": result["history"][-1]}))
    else:
        result = predict(args.artifact, args.manifest, args.out)
        print(json.dumps(result))
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
