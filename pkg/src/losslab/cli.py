"""Command-line front end.

Subcommands:

    train      train one (loss, seed) pair from a config
    sweep      train the full loss x seed grid
    dump       write penultimate features of a saved model to a dump file
    analyze    write every analysis report enabled in the config
    calibrate  print the calibration report for one trained run
    agreement  write the agreement matrix + linkage reports
    transfer   write the coarse-label transfer probe report
    report     write one named report (accuracy or any analysis)

Every subcommand takes --config; --out overrides the config's output
directory. Errors exit nonzero naming the failing (loss, seed).
"""

from __future__ import annotations

import argparse
import json
import sys
from dataclasses import replace

from . import harness
from .agreement import AGREEMENT_VARIANTS
from .calibration import ece, fit_temperature, probs_from_logits
from .config import ANALYSES, load_config


def _experiment(args, seeds_override=True):
    config = load_config(args.config)
    if args.out is not None:
        config = replace(config, output_dir=args.out)
    if seeds_override and getattr(args, "seed", None) is not None:
        config = replace(config, seeds=(args.seed,))
    return config


def _pick_loss(config, name):
    if name is None:
        return config.losses[0]
    for pair in config.losses:
        if pair[0] == name:
            return pair
    known = tuple(n for n, _ in config.losses)
    raise ValueError(f"no loss named {name!r} in config; choose from {known}")


def cmd_train(args) -> int:
    config = _experiment(args)
    name, spec = _pick_loss(config, args.loss)
    for seed in config.seeds:
        try:
            summary = harness.run_single(config, name, spec, seed)
        except Exception as exc:
            raise harness.RunFailure(name, seed, exc) from exc
        json.dump(summary, sys.stdout, indent=2, sort_keys=True)
        print()
    return 0


def cmd_sweep(args) -> int:
    config = _experiment(args)
    for summary in harness.run_all(config, jobs=args.jobs):
        json.dump(summary, sys.stdout, indent=2, sort_keys=True)
        print()
    return 0


def cmd_dump(args) -> int:
    config = _experiment(args, seeds_override=False)
    train_batch, eval_batch = harness.load_experiment_data(config.dataset)
    batch = train_batch if args.split == "train" else eval_batch
    harness.dump_activations(args.model, batch, args.dump_out)
    print(f"wrote {args.dump_out}: {batch.n} x penultimate features")
    return 0


def cmd_analyze(args) -> int:
    config = _experiment(args, seeds_override=False)
    for path in harness.write_reports(config):
        print(path)
    return 0


def cmd_calibrate(args) -> int:
    config = _experiment(args, seeds_override=False)
    name, spec = _pick_loss(config, args.loss)
    seed = args.seed if args.seed is not None else config.seeds[0]
    d = harness.load_run_dump(config, name, seed, "eval_scores.dump")
    kind = harness.prob_kind(spec)
    pre = ece(probs_from_logits(d.data, kind), d.labels)
    temp, post = fit_temperature(d.data, d.labels, kind)
    json.dump(
        {
            "loss": name,
            "seed": seed,
            "nll": pre.nll,
            "ece": pre.ece,
            "temperature": temp,
            "nll_scaled": post.nll,
            "ece_scaled": post.ece,
        },
        sys.stdout,
        indent=2,
        sort_keys=True,
    )
    print()
    return 0


def cmd_agreement(args) -> int:
    config = _experiment(args, seeds_override=False)
    if args.variant is not None:
        config = replace(config, agreement_variant=args.variant)
    harness.reports_dir(config.output_dir).mkdir(parents=True, exist_ok=True)
    for path in harness.report_agreement(config):
        print(path)
    return 0


def cmd_transfer(args) -> int:
    config = _experiment(args, seeds_override=False)
    if args.merge is not None:
        config = replace(config, transfer_merge=args.merge)
    harness.reports_dir(config.output_dir).mkdir(parents=True, exist_ok=True)
    print(harness.report_transfer(config))
    return 0


def cmd_report(args) -> int:
    config = _experiment(args, seeds_override=False)
    harness.reports_dir(config.output_dir).mkdir(parents=True, exist_ok=True)
    if args.kind == "accuracy":
        print(harness.report_accuracy(config))
        return 0
    out = harness.REPORTERS[args.kind](config)
    for path in out if isinstance(out, tuple) else (out,):
        print(path)
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="losslab",
        description="train small MLPs under different objectives and "
        "analyze what the losses do to representations and predictions",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p):
        p.add_argument("--config", required=True, help="INI experiment config")
        p.add_argument("--out", default=None, help="override output directory")

    p = sub.add_parser("train", help="train one loss under the config")
    common(p)
    p.add_argument("--loss", default=None, help="loss name (default: first)")
    p.add_argument("--seed", type=int, default=None)
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("sweep", help="train the full loss x seed grid")
    common(p)
    p.add_argument("--jobs", type=int, default=1,
                   help="parallel (loss, seed) workers")
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("dump", help="dump penultimate features of a model")
    common(p)
    p.add_argument("--model", required=True, help="model.npz path")
    p.add_argument("--split", choices=("train", "eval"), default="eval")
    p.add_argument("--dump-out", required=True, help="output dump path")
    p.set_defaults(func=cmd_dump)

    p = sub.add_parser("analyze", help="write all enabled analysis reports")
    common(p)
    p.set_defaults(func=cmd_analyze)

    p = sub.add_parser("calibrate", help="calibration report for one run")
    common(p)
    p.add_argument("--loss", default=None)
    p.add_argument("--seed", type=int, default=None)
    p.set_defaults(func=cmd_calibrate)

    p = sub.add_parser("agreement", help="agreement matrix + linkage")
    common(p)
    p.add_argument("--variant", choices=AGREEMENT_VARIANTS, default=None)
    p.set_defaults(func=cmd_agreement)

    p = sub.add_parser("transfer", help="coarse-label transfer probe")
    common(p)
    p.add_argument("--merge", type=int, default=None,
                   help="number of coarse classes")
    p.set_defaults(func=cmd_transfer)

    p = sub.add_parser("report", help="write one named report")
    common(p)
    p.add_argument("--kind", choices=("accuracy",) + ANALYSES,
                   required=True)
    p.set_defaults(func=cmd_report)

    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except Exception as exc:  # noqa: BLE001 - CLI boundary
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
