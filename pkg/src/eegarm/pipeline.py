"""End-to-end harness: collection, training, evaluation, live run, replay.

Every stage writes into a run directory together with ``manifest.json``
(inputs with hashes, seeds, library versions).
"""

from __future__ import annotations

import csv
import dataclasses
import hashlib
import json
import logging
import platform
import threading
import time
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterator, Sequence

import numpy as np
import scipy

from eegarm import __version__, dataset
from eegarm.actuator import JOINTS, Event, ProstheticArm, run_actuator
from eegarm.clock import WallClock
from eegarm.config import Config
from eegarm.dsp import ArtifactCleaner, FeatureExtractor, FeatureVector
from eegarm.errors import LoadError
from eegarm.labels import ActionLabel, BrainState
from eegarm.model import Classifier, EvalReport, evaluate, train, window_size_study
from eegarm.model.streaming import StreamClassifier
from eegarm.model.threshold import threshold_sweep
from eegarm.synth import SignalGenerator
from eegarm.transport import FrameConsumer, LossStats, ProducerStats, SerialChannel, send_action, \
    stream_producer

log = logging.getLogger(__name__)

# human-subject success rates published for the hardware prototype, shown for context only
REFERENCE_RATES = {
    "abstract": {"stayStationary": 0.91, "shakeHands": 0.85, "pickUpCup": 0.84},
    "classification_report_recall": {"stayStationary": 0.92, "shakeHands": 0.86, "pickUpCup": 0.82},
    "conclusion": {"stayStationary": 0.90, "shakeHands": 0.80, "pickUpCup": 0.80},
}
COLLECT_ORDER = (BrainState.RELAXED_HANDSHAKE, BrainState.IDLE, BrainState.CONCENTRATED_CUP)


# -- run directory bookkeeping ------------------------------------------------

def _sha256(path: Path) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for block in iter(lambda: fh.read(1 << 16), b""):
            h.update(block)
    return h.hexdigest()


def write_manifest(out_dir: Path, command: str, cfg: Config, inputs: Sequence[Path] = (),
                   outputs: Sequence[Path] = (), extra: dict | None = None) -> Path:
    manifest = {
        "command": command,
        "created": time.strftime("%Y-%m-%dT%H:%M:%S%z"),
        "seed": cfg.seed,
        "config": cfg.to_dict(),
        "inputs": {str(p): _sha256(Path(p)) for p in inputs if Path(p).is_file()},
        "outputs": {str(p): _sha256(Path(p)) for p in outputs if Path(p).is_file()},
        "versions": {"eegarm": __version__, "python": platform.python_version(),
                     "numpy": np.__version__, "scipy": scipy.__version__},
    }
    if extra:
        manifest.update(extra)
    path = out_dir / "manifest.json"
    path.write_text(json.dumps(manifest, indent=2, default=str) + "\n")
    return path


def action_files(data_dir: str | Path) -> dict[Path, ActionLabel]:
    """``{path: label}`` for the per-action CSVs in ``data_dir``; all three must exist."""
    data_dir = Path(data_dir)
    files = {data_dir / f"{label.file_stem}.csv": label for label in ActionLabel}
    missing = [str(p) for p in files if not p.is_file()]
    if missing:
        raise FileNotFoundError(f"missing action files: {missing}")
    return files


# -- feature source ---------------------------------------------------------------

def feature_stream(cfg: Config, script: Sequence[tuple[BrainState, float]], seed: int) -> Iterator[FeatureVector]:
    """Generator -> artifact cleaning -> band-power frames.

    A ``cfg.eeg.warmup`` second idle lead-in is prepended; frames that touch
    it carry no truth.
    """
    gen = SignalGenerator(cfg.profiles(), cfg.noise(), seed, cfg.eeg.rate)
    cleaner = ArtifactCleaner(cfg.eeg.rate, cfg.eeg.noise.mains_freq)
    extractor = FeatureExtractor(cfg.dsp.win_len, cfg.dsp.hop, cfg.eeg.rate)
    warm = int(round(cfg.eeg.warmup * cfg.eeg.rate))
    for chunk in gen.run_script([(BrainState.IDLE, cfg.eeg.warmup), *script], cfg.eeg.chunk):
        for fv in extractor.push(cleaner(chunk)):
            if fv.index * cfg.dsp.hop < warm:
                fv = dataclasses.replace(fv, truth=None)
            yield fv


@dataclass
class Loopback:
    """Producer thread feeding a UDP consumer on loopback, with a truth side-table.

    The truth table is harness bookkeeping for scoring; nothing on the
    receiving side uses it to decide anything.
    """

    cfg: Config
    frames: Iterator[FeatureVector]
    rate: float
    clock: object
    truth: dict = field(default_factory=dict)
    producer_stats: ProducerStats | None = None
    error: BaseException | None = None

    def __post_init__(self):
        self.consumer = FrameConsumer(self.cfg.transport.host, self.cfg.transport.port)
        self.done = threading.Event()
        self.stop = threading.Event()
        self._thread = threading.Thread(target=self._produce, name="producer", daemon=True)

    def _record(self, fv) -> None:
        self.truth[fv.index] = fv.truth

    def _produce(self) -> None:
        try:
            self.producer_stats = stream_producer(self.frames, self.consumer.endpoint, self.rate,
                                                  self.clock, stop=self.stop, on_send=self._record)
        except BaseException as exc:  # surfaced by join()
            self.error = exc
        finally:
            self.done.set()

    def start(self) -> "Loopback":
        self._thread.start()
        return self

    def join(self) -> None:
        self._thread.join()
        if self.error is not None:
            raise self.error

    def close(self) -> None:
        self.stop.set()
        self._thread.join(timeout=5)
        self.consumer.close()


# -- collect ---------------------------------------------------------------------------

@dataclass
class CollectResult:
    files: dict[ActionLabel, Path]
    rows: dict[ActionLabel, int]
    loss: LossStats
    producer: ProducerStats

    def dimension_lines(self) -> str:
        lines = [f"{'Action':<16}Original Dimension"]
        lines += [f"{lab.display_name:<16}{[self.rows[lab], 20]}" for lab in self.files]
        return "\n".join(lines)


def collect(cfg: Config, out_dir: str | Path, script: Sequence[tuple[BrainState, float]] | None = None) -> CollectResult:
    """Record labelled feature frames that crossed the UDP loopback into per-action CSVs.

    Frames are filed by the scripted state; frames whose FFT window spans a
    state change (or the warm-up) are dropped. Existing files are appended to.
    """
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    if script is None:
        script = [(s, cfg.collect.seconds_per_action) for s in COLLECT_ORDER]
    clock = WallClock(cfg.collect.speed)
    link = Loopback(cfg, feature_stream(cfg, script, cfg.seed), cfg.frame_rate, clock)
    buckets: dict[ActionLabel, list] = {lab: [] for lab in ActionLabel}
    try:
        link.start()
        idle_after_done = 0
        while idle_after_done < 3:
            frame = link.consumer.receive()
            if frame is None:
                if link.done.is_set():
                    idle_after_done += 1
                continue
            state = link.truth.get(frame.index)
            if state is not None:
                buckets[state.action].append(frame)
        link.join()
    finally:
        link.close()
    files, rows = {}, {}
    for label in (s.action for s in COLLECT_ORDER):
        path = out_dir / f"{label.file_stem}.csv"
        dataset.append_records(path, buckets[label])
        files[label] = path
        rows[label] = len(dataset.read_feature_csv(path)[0])
    return CollectResult(files, rows, link.consumer.stats, link.producer_stats)


# -- train / eval ----------------------------------------------------------------------

def train_from_dir(cfg: Config, data_dir: str | Path, out_dir: str | Path) -> dict:
    """Transformer training plus the optional FFNN comparison and window-size study."""
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    files = action_files(data_dir)
    tc = cfg.training
    data = dataset.build_split(files, cfg.dataset.win_size, cfg.dataset.test_fraction, cfg.seed)
    (out_dir / "dimensions.txt").write_text(dataset.dimension_table(data.info, data.win_size) + "\n")

    model, hist = train(data, cfg.transformer_config(), tc.epochs, tc.lr, tc.batch_size, cfg.seed)
    model.save(out_dir / "model.bin")
    (out_dir / "history.csv").write_text(hist.to_csv())
    rep = evaluate(model, data.test_X, data.test_y)
    summary = {"test_accuracy": rep.accuracy, "final_val_acc": hist.val_acc[-1],
               "train_windows": int(len(data.train_y)), "test_windows": int(len(data.test_y)),
               "files": data.info["files"]}

    if tc.compare_ffnn:
        ff, ff_hist = train(data, cfg.ffnn_config(), tc.epochs, tc.lr, tc.batch_size, cfg.seed)
        ff.save(out_dir / "ffnn_model.bin")
        with open(out_dir / "comparison.csv", "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["epoch", "transformer_train_acc", "transformer_val_acc",
                        "ffnn_train_acc", "ffnn_val_acc"])
            for a, b in zip(hist.epochs, ff_hist.epochs):
                w.writerow([a["epoch"], repr(a["train_acc"]), repr(a["val_acc"]),
                            repr(b["train_acc"]), repr(b["val_acc"])])
        summary["ffnn_test_accuracy"] = evaluate(ff, data.test_X, data.test_y).accuracy

    if tc.window_sizes:
        rows = window_size_study(files, tc.window_sizes, cfg.transformer_config(), tc.epochs, tc.lr,
                                 tc.batch_size, cfg.seed, cfg.dataset.test_fraction)
        with open(out_dir / "window_sizes.csv", "w", newline="") as fh:
            w = csv.DictWriter(fh, fieldnames=list(rows[0]))
            w.writeheader()
            w.writerows(rows)
        summary["window_sizes"] = rows

    (out_dir / "train_summary.json").write_text(json.dumps(summary, indent=2) + "\n")
    return summary


def evaluate_from_dir(cfg: Config, model_path: str | Path, data_dir: str | Path,
                      out_dir: str | Path) -> EvalReport:
    """Rebuild the model's test split (same seed, stored standardizer) and report on it."""
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    model = Classifier.load(model_path)
    data = dataset.build_split(action_files(data_dir), model.win_size, cfg.dataset.test_fraction,
                               cfg.seed, standardizer=model.standardizer)
    rep = evaluate(model, data.test_X, data.test_y)
    (out_dir / "report.txt").write_text(rep.to_text() + "\n")
    (out_dir / "report.json").write_text(json.dumps(rep.to_dict(), indent=2) + "\n")
    return rep


def threshold_study(cfg: Config, out_dir: str | Path) -> list[dict]:
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    rows = threshold_sweep(cfg.profiles(), cfg.noise(), cfg.seed)
    with open(out_dir / "threshold_sweep.csv", "w", newline="") as fh:
        w = csv.DictWriter(fh, fieldnames=list(rows[0]))
        w.writeheader()
        w.writerows(rows)
    return rows


# -- live run --------------------------------------------------------------------------

@dataclass
class RunResult:
    emissions: list[dict]
    events: list[Event]
    rates: dict[str, float]
    counts: dict[str, int]
    loss: LossStats
    stalls: int
    protocol_errors: int

    def summary(self) -> dict:
        return {"online_success": self.rates, "scored_emissions": self.counts,
                "emissions": len(self.emissions),
                "transition_emissions": sum(1 for e in self.emissions if e["truth"] is None),
                "stalls": self.stalls, "protocol_errors": self.protocol_errors,
                "udp": self.loss.as_dict(),
                "accepted": sum(1 for e in self.events if e.kind == "accept"),
                "rejected": sum(1 for e in self.events if e.kind == "reject"),
                "transitions": sum(1 for e in self.events if e.kind == "transition"),
                "reference_rates": REFERENCE_RATES}

    def rates_text(self) -> str:
        lines = [f"{'action':<16}{'online success':>16}{'emissions':>11}"]
        for name, rate in self.rates.items():
            lines.append(f"{name:<16}{rate:>16.1%}{self.counts[name]:>11d}")
        lines.append("")
        lines.append("reference (human-subject prototype, not reproduced here):")
        for source, triple in REFERENCE_RATES.items():
            lines.append(f"  {source:<30}" + "  ".join(f"{k} {v:.0%}" for k, v in triple.items()))
        return "\n".join(lines)


def score_emissions(emissions: Sequence[dict], truth: dict) -> tuple[dict, dict]:
    """Per-action fraction of emissions whose label matches the window's ground truth.

    Only windows made entirely of frames from one scripted state are scored;
    windows straddling a state change are counted separately.
    """
    hits = {lab.display_name: 0 for lab in ActionLabel}
    counts = {lab.display_name: 0 for lab in ActionLabel}
    for em in emissions:
        states = {truth.get(i) for i in range(em["first_index"], em["last_index"] + 1)}
        state = states.pop() if len(states) == 1 else None
        em["truth"] = None if state is None else int(state.action)
        if state is None:
            continue
        name = state.action.display_name
        counts[name] += 1
        hits[name] += int(em["label"] == int(state.action))
    rates = {k: (hits[k] / counts[k] if counts[k] else float("nan")) for k in hits}
    return rates, counts


def run_session(cfg: Config, model: Classifier | str | Path, out_dir: str | Path | None = None,
                duration: float | None = None) -> RunResult:
    """Generator -> UDP -> 2 s classifier -> serial bytes -> simulated arm.

    Producer, classifier and actuator run as separate threads sharing only
    the UDP socket and the serial channel.
    """
    if not isinstance(model, Classifier):
        model = Classifier.load(model)
    if duration is not None:
        cfg = dataclasses.replace(cfg, run=dataclasses.replace(cfg.run, duration=duration))
    script = cfg.run_script()
    total = cfg.eeg.warmup + sum(s for _, s in script)
    clock = WallClock(cfg.run.speed)
    channel = SerialChannel(clock, cfg.transport.serial_latency)
    link = Loopback(cfg, feature_stream(cfg, script, cfg.seed + cfg.run.seed_offset), cfg.frame_rate, clock)
    sc = StreamClassifier(model, cfg.run.cadence, cfg.frame_rate)
    arm = ProstheticArm(cfg.actuator.action_duration)
    stop_rx = threading.Event()
    stop_arm = threading.Event()
    errors: list[BaseException] = []

    def classify():
        try:
            for frame in link.consumer.frames(stop=stop_rx, heartbeat=True):
                now = clock.now()
                if frame is not None:
                    sc.push(frame, now)
                em = sc.poll(now)
                if em is not None:
                    send_action(channel, em.label)
        except BaseException as exc:
            errors.append(exc)

    def actuate():
        try:
            run_actuator(channel, clock, total + 2 * cfg.run.cadence, arm, cfg.actuator.tick_rate,
                         cfg.actuator.sample_every, stop=stop_arm)
        except BaseException as exc:
            errors.append(exc)

    threads = [threading.Thread(target=classify, name="classifier", daemon=True),
               threading.Thread(target=actuate, name="actuator", daemon=True)]
    try:
        for t in threads:
            t.start()
        link.start()
        link.join()
        clock.sleep(cfg.run.cadence)
    finally:
        stop_rx.set()
        threads[0].join(timeout=10)
        stop_arm.set()
        threads[1].join(timeout=10)
        link.close()
    if errors:
        raise errors[0]

    emissions = [em.to_dict() for em in sc.emissions]
    rates, counts = score_emissions(emissions, link.truth)
    result = RunResult(emissions, list(arm.events), rates, counts, link.consumer.stats,
                       sc.stalls, channel.protocol_errors)
    if out_dir is not None:
        out_dir = Path(out_dir)
        out_dir.mkdir(parents=True, exist_ok=True)
        with open(out_dir / "emissions.jsonl", "w") as fh:
            fh.writelines(json.dumps(e) + "\n" for e in emissions)
        with open(out_dir / "actuator_events.jsonl", "w") as fh:
            fh.writelines(e.to_json() + "\n" for e in result.events)
        (out_dir / "session.json").write_text(json.dumps(result.summary(), indent=2) + "\n")
    return result


# -- replay ----------------------------------------------------------------------------

def read_events(path: str | Path) -> list[Event]:
    events = []
    with open(path) as fh:
        for k, line in enumerate(fh, 1):
            if not line.strip():
                continue
            try:
                events.append(Event.from_json(line))
            except (ValueError, KeyError, TypeError) as exc:
                raise LoadError(path, k, f"bad event record: {exc}") from None
    return events


def replay(event_log: str | Path, out_dir: str | Path, plot: bool = False) -> dict[str, Path]:
    """Turn an actuator event log into joint-angle and transition tables (and a PNG)."""
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    events = read_events(event_log)
    joints_path = out_dir / "joints.csv"
    with open(joints_path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["t", "label", "progress", *JOINTS])
        for e in events:
            if e.kind == "sample":
                w.writerow([e.t, e.label, e.progress, *e.joints])
    trans_path = out_dir / "transitions.csv"
    with open(trans_path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["t", "kind", "label", "progress"])
        for e in events:
            if e.kind != "sample":
                w.writerow([e.t, e.kind, e.label, e.progress])
    out = {"joints": joints_path, "transitions": trans_path}
    if plot:
        out["plot"] = _plot_joints(events, out_dir / "joints.png")
    return out


def _plot_joints(events: Sequence[Event], path: Path) -> Path:
    import matplotlib
    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    samples = [e for e in events if e.kind == "sample"]
    t = [e.t for e in samples]
    fig, ax = plt.subplots(figsize=(10, 4))
    for k, name in enumerate(JOINTS):
        ax.plot(t, [e.joints[k] for e in samples], label=name)
    for e in events:
        if e.kind == "transition":
            ax.axvline(e.t, color="grey", lw=0.5, ls="--")
    ax.set_xlabel("time (s)")
    ax.set_ylabel("joint angle (deg)")
    ax.legend(loc="upper right")
    fig.tight_layout()
    fig.savefig(path, dpi=100)
    plt.close(fig)
    return path
