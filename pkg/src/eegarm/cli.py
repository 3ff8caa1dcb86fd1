"""Command-line entry point: ``eegarm {collect,train,eval,run,replay,sweep}``.

Every command writes its artifacts under ``--out`` (default ``runs/<command>``)
together with a ``manifest.json``.

Exit codes: 0 ok, 2 usage, 3 config, 4 I/O or bad input file,
5 transport, 6 dataset or training failure.
"""

from __future__ import annotations

import argparse
import logging
import sys
from pathlib import Path

from eegarm import pipeline
from eegarm.config import Config, load_config
from eegarm.container import ContainerError
from eegarm.errors import ConfigError, DatasetError, LoadError, TrainingError, TransportError

EXIT_OK, EXIT_USAGE, EXIT_CONFIG, EXIT_IO, EXIT_TRANSPORT, EXIT_TRAINING = 0, 2, 3, 4, 5, 6

log = logging.getLogger("eegarm")


def _config(args) -> Config:
    overrides = {"seed": args.seed} if args.seed is not None else None
    return load_config(args.config, overrides)


def _out(args) -> Path:
    out = Path(args.out or Path("runs") / args.command)
    out.mkdir(parents=True, exist_ok=True)
    return out


def cmd_collect(args) -> int:
    cfg = _config(args)
    if args.seconds is not None:
        cfg.collect.seconds_per_action = args.seconds
    out = _out(args)
    res = pipeline.collect(cfg, out)
    print(res.dimension_lines())
    print(f"udp: {res.loss.as_dict()}")
    pipeline.write_manifest(out, "collect", cfg, outputs=list(res.files.values()),
                            extra={"udp": res.loss.as_dict()})
    return EXIT_OK


def cmd_train(args) -> int:
    cfg = _config(args)
    out = _out(args)
    summary = pipeline.train_from_dir(cfg, args.data, out)
    print((out / "dimensions.txt").read_text(), end="")
    print(f"test accuracy {summary['test_accuracy']:.4f}")
    if "ffnn_test_accuracy" in summary:
        print(f"ffnn test accuracy {summary['ffnn_test_accuracy']:.4f}")
    inputs = list(pipeline.action_files(args.data))
    pipeline.write_manifest(out, "train", cfg, inputs=inputs,
                            outputs=[out / "model.bin", out / "history.csv"])
    return EXIT_OK


def cmd_eval(args) -> int:
    cfg = _config(args)
    out = _out(args)
    rep = pipeline.evaluate_from_dir(cfg, args.model, args.data, out)
    print(rep.to_text())
    pipeline.write_manifest(out, "eval", cfg, inputs=[Path(args.model), *pipeline.action_files(args.data)],
                            outputs=[out / "report.txt", out / "report.json"])
    return EXIT_OK


def cmd_run(args) -> int:
    cfg = _config(args)
    if args.speed is not None:
        cfg.run.speed = args.speed
    out = _out(args)
    res = pipeline.run_session(cfg, args.model, out, duration=args.duration)
    print(res.rates_text())
    pipeline.write_manifest(out, "run", cfg, inputs=[Path(args.model)],
                            outputs=[out / "session.json", out / "actuator_events.jsonl"])
    return EXIT_OK


def cmd_replay(args) -> int:
    cfg = _config(args)
    out = _out(args)
    try:
        paths = pipeline.replay(args.events, out, plot=args.plot)
    except ImportError:
        print("--plot needs matplotlib: pip install 'eegarm[plot]'", file=sys.stderr)
        return EXIT_USAGE
    for name, p in paths.items():
        print(f"{name}: {p}")
    pipeline.write_manifest(out, "replay", cfg, inputs=[Path(args.events)], outputs=list(paths.values()))
    return EXIT_OK


def cmd_sweep(args) -> int:
    cfg = _config(args)
    out = _out(args)
    rows = pipeline.threshold_study(cfg, out)
    print(f"{'threshold':>10}{'handshake':>11}{'cup':>6}{'of':>5}")
    for r in rows:
        print(f"{r['threshold']:>10.2f}{r['handshake_successes']:>11d}{r['cup_successes']:>6d}{r['attempts']:>5d}")
    pipeline.write_manifest(out, "sweep", cfg, outputs=[out / "threshold_sweep.csv"])
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="YAML config file")
    common.add_argument("--seed", type=int, help="override the config seed")
    common.add_argument("--out", help="run directory for artifacts")
    common.add_argument("-v", "--verbose", action="store_true")

    p = argparse.ArgumentParser(prog="eegarm", description=__doc__.splitlines()[0])
    sub = p.add_subparsers(dest="command", required=True)

    s = sub.add_parser("collect", parents=[common], help="record labelled feature CSVs")
    s.add_argument("--seconds", type=float, help="seconds per action")
    s.set_defaults(func=cmd_collect)

    s = sub.add_parser("train", parents=[common], help="train the classifier")
    s.add_argument("data", help="directory holding the per-action CSVs")
    s.set_defaults(func=cmd_train)

    s = sub.add_parser("eval", parents=[common], help="confusion matrix and classification report")
    s.add_argument("model")
    s.add_argument("data")
    s.set_defaults(func=cmd_eval)

    s = sub.add_parser("run", parents=[common], help="live session driving the simulated arm")
    s.add_argument("model")
    s.add_argument("--duration", type=float, help="session length in seconds")
    s.add_argument("--speed", type=float, help="simulated seconds per wall second")
    s.set_defaults(func=cmd_run)

    s = sub.add_parser("replay", parents=[common], help="tables (and a plot) from an actuator event log")
    s.add_argument("events")
    s.add_argument("--plot", action="store_true", help="also write joints.png")
    s.set_defaults(func=cmd_replay)

    s = sub.add_parser("sweep", parents=[common], help="focus-metric threshold baseline")
    s.set_defaults(func=cmd_sweep)
    return p


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except TransportError as exc:
        print(f"transport error: {exc}", file=sys.stderr)
        return EXIT_TRANSPORT
    except (LoadError, ContainerError, OSError) as exc:
        print(f"i/o error: {exc}", file=sys.stderr)
        return EXIT_IO
    except (TrainingError, DatasetError) as exc:
        print(f"training error: {exc}", file=sys.stderr)
        return EXIT_TRAINING


if __name__ == "__main__":
    sys.exit(main())
