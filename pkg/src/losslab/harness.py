"""Config-driven experiment runner.

For each (loss, seed) pair the runner trains a fresh MLP, then persists
everything the analyses need under ``{out}/runs/{loss}/seed{N}/``:

    model.npz         trained weights (EMA shadow when enabled)
    train_log.csv     per-epoch lr / loss / accuracies
    penultimate.dump  eval-split features + labels (ActivationDump)
    eval_scores.dump  eval-split score matrix + labels
    predictions.csv   example_id, predicted_class, confidence
    run.json          loss line, seed, and final accuracies

Reports under ``{out}/reports/`` are pure views over those artifacts:
rerunning the same config reproduces every file byte for byte (no
timestamps, fixed float formatting).
"""

from __future__ import annotations

import json
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict
from pathlib import Path

import numpy as np

from .agreement import agreement_matrix, linkage_dendrogram
from .calibration import (
    ece,
    fit_temperature,
    probs_from_logits,
    top1_predictions,
)
from .config import ExperimentConfig, format_loss_line
from .data import Batch, load_csv, load_idx, make_blob_split
from .dumps import read_activation_dump, write_activation_dump
from .losses import LossSpec, eval_scores
from .mlp import (
    FinalLayer,
    MlpModel,
    forward_hidden,
    init_for_spec,
    penultimate_features,
)
from .probe import ProbeConfig, sweep_and_retrain
from .repr_analysis import (
    SEPARATION_INDEXES,
    angular_visual_hardness,
    class_separation_r2,
    linear_cka,
    singular_spectrum,
    sparsity_profile,
)
from .training import TrainConfig, train, write_log_csv

FMT = "%.10g"


class RunFailure(RuntimeError):
    """A (loss, seed) run failed; carries the failing pair."""

    def __init__(self, loss_name: str, seed: int, cause: BaseException):
        super().__init__(f"loss={loss_name} seed={seed}: {cause}")
        self.loss_name = loss_name
        self.seed = seed
        self.cause = cause


def save_model(model: MlpModel, path) -> None:
    arrays = {}
    for i, (w, b) in enumerate(zip(model.hidden_weights, model.hidden_biases)):
        arrays[f"hidden_w_{i}"] = w
        arrays[f"hidden_b_{i}"] = b
    arrays["final_w"] = model.final.weights
    arrays["final_b"] = model.final.bias
    np.savez(path, **arrays)


def load_model(path) -> MlpModel:
    with np.load(path) as z:
        n_hidden = sum(1 for k in z.files if k.startswith("hidden_w_"))
        ws = [z[f"hidden_w_{i}"] for i in range(n_hidden)]
        bs = [z[f"hidden_b_{i}"] for i in range(n_hidden)]
        final = FinalLayer(z["final_w"], z["final_b"])
    return MlpModel(ws, bs, final)


def load_experiment_data(ds) -> tuple:
    """DatasetConfig -> (train Batch, eval Batch) with a shared class count."""
    if ds.kind == "blobs":
        return make_blob_split(
            ds.per_class, ds.eval_per_class, ds.classes, ds.features,
            ds.spread, ds.seed,
        )
    loader = load_csv if ds.kind == "csv" else load_idx
    tr = loader(ds.path)
    ev = loader(ds.eval_path)
    k = max(tr.num_classes, ev.num_classes)
    return (
        Batch(tr.features, tr.labels, k),
        Batch(ev.features, ev.labels, k),
    )


def prob_kind(spec: LossSpec) -> str:
    return "sigmoid" if spec.kind == "sigmoid" else "softmax"


def run_dir(output_dir, loss_name: str, seed: int) -> Path:
    return Path(output_dir) / "runs" / loss_name / f"seed{seed}"


def reports_dir(output_dir) -> Path:
    return Path(output_dir) / "reports"


def write_predictions_csv(path, predicted, confidence) -> None:
    with open(path, "w") as fh:
        fh.write("example_id,predicted_class,confidence\n")
        for i, (p, c) in enumerate(zip(predicted, confidence)):
            fh.write(f"{i},{int(p)},{FMT % c}\n")


def read_predictions_csv(path):
    pred, conf = [], []
    with open(path) as fh:
        header = fh.readline().strip()
        if header != "example_id,predicted_class,confidence":
            raise ValueError(f"{path}: unexpected header {header!r}")
        for line in fh:
            _, p, c = line.strip().split(",")
            pred.append(int(p))
            conf.append(float(c))
    return np.asarray(pred, dtype=np.int64), np.asarray(conf)


def run_single(config: ExperimentConfig, loss_name: str, spec: LossSpec,
               seed: int) -> dict:
    """Train one (loss, seed) pair and persist its artifact directory."""
    train_batch, eval_batch = load_experiment_data(config.dataset)
    # children 0 and 1 of SeedSequence(seed) drive shuffling and dropout
    # inside train(); child 2 is reserved here for weight init
    init_rng = np.random.default_rng(np.random.SeedSequence(seed).spawn(3)[2])
    model = init_for_spec(
        train_batch.dim, config.hidden, train_batch.num_classes, spec, init_rng
    )
    tc = TrainConfig(loss=spec, seed=seed, **config.train)
    result = train(model, train_batch, tc, holdout=eval_batch)
    final_model = result.ema_model if result.ema_model is not None else result.model

    out = run_dir(config.output_dir, loss_name, seed)
    out.mkdir(parents=True, exist_ok=True)
    save_model(final_model, out / "model.npz")
    write_log_csv(result.log, out / "train_log.csv")

    feats = penultimate_features(final_model, eval_batch.features)
    write_activation_dump(out / "penultimate.dump", feats, eval_batch.labels)
    scores = eval_scores(spec, final_model.final, feats)
    write_activation_dump(out / "eval_scores.dump", scores, eval_batch.labels)

    probs = probs_from_logits(scores, prob_kind(spec)).probs
    pred = top1_predictions(scores)
    write_predictions_csv(out / "predictions.csv", pred, probs.max(axis=1))

    eval_acc = float(np.mean(pred == eval_batch.labels))
    summary = {
        "loss": loss_name,
        "loss_line": format_loss_line(spec),
        "seed": seed,
        "epochs": len(result.log),
        "final_train_acc": result.log[-1].train_acc if result.log else None,
        "eval_acc": eval_acc,
    }
    with open(out / "run.json", "w") as fh:
        json.dump(summary, fh, indent=2, sort_keys=True)
        fh.write("\n")
    return summary


def _run_single_job(args):
    config, loss_name, spec, seed = args
    try:
        return run_single(config, loss_name, spec, seed)
    except Exception as exc:  # noqa: BLE001 - wrapped with the failing pair
        raise RunFailure(loss_name, seed, exc) from exc


def run_all(config: ExperimentConfig, jobs: int = 1) -> list:
    """Train the full (loss, seed) grid; returns run summaries in grid order."""
    pairs = [
        (config, name, spec, seed)
        for name, spec in config.losses
        for seed in config.seeds
    ]
    if jobs > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            return list(pool.map(_run_single_job, pairs))
    return [_run_single_job(p) for p in pairs]


# ---------------------------------------------------------------- reports


def _runs(config):
    for name, spec in config.losses:
        for seed in config.seeds:
            yield name, spec, seed


def _run_names(config):
    return [f"{name}:seed{seed}" for name, _, seed in _runs(config)]


def load_run_dump(config, name, seed, which):
    path = run_dir(config.output_dir, name, seed) / which
    if not path.exists():
        raise FileNotFoundError(f"missing artifact {path}; run training first")
    return read_activation_dump(path)


def _mean_stderr(values) -> tuple:
    v = np.asarray(values, dtype=np.float64)
    mean = float(v.mean())
    if v.size < 2:
        return mean, None
    return mean, float(v.std(ddof=1) / np.sqrt(v.size))


def _fmt_opt(x) -> str:
    return "" if x is None else FMT % x


def _write_matrix_csv(path, names, matrix) -> None:
    with open(path, "w") as fh:
        fh.write("name," + ",".join(names) + "\n")
        for name, row in zip(names, matrix):
            fh.write(name + "," + ",".join(FMT % v for v in row) + "\n")


def report_accuracy(config) -> Path:
    """Per-loss eval accuracy, mean and standard error over seeds."""
    path = reports_dir(config.output_dir) / "accuracy.csv"
    with open(path, "w") as fh:
        fh.write("loss,mean_eval_acc,stderr,n_seeds\n")
        for name, _ in config.losses:
            accs = []
            for seed in config.seeds:
                with open(run_dir(config.output_dir, name, seed) / "run.json") as rf:
                    accs.append(json.load(rf)["eval_acc"])
            mean, se = _mean_stderr(accs)
            fh.write(f"{name},{FMT % mean},{_fmt_opt(se)},{len(accs)}\n")
    return path


def report_separation(config) -> Path:
    path = reports_dir(config.output_dir) / "separation.csv"
    with open(path, "w") as fh:
        fh.write("loss,index,mean_r2,stderr\n")
        for name, _ in config.losses:
            per_index = {ix: [] for ix in SEPARATION_INDEXES}
            for seed in config.seeds:
                d = load_run_dump(config, name, seed, "penultimate.dump")
                for ix in SEPARATION_INDEXES:
                    per_index[ix].append(
                        class_separation_r2(d.data, d.labels, ix)
                    )
            for ix in SEPARATION_INDEXES:
                mean, se = _mean_stderr(per_index[ix])
                fh.write(f"{name},{ix},{FMT % mean},{_fmt_opt(se)}\n")
    return path


def report_cka(config) -> Path:
    names = _run_names(config)
    dumps = [
        load_run_dump(config, name, seed, "penultimate.dump").data
        for name, _, seed in _runs(config)
    ]
    m = len(dumps)
    M = np.eye(m)
    for i in range(m):
        for j in range(i + 1, m):
            M[i, j] = M[j, i] = linear_cka(dumps[i], dumps[j])
    path = reports_dir(config.output_dir) / "cka.csv"
    _write_matrix_csv(path, names, M)
    return path


def report_sparsity(config) -> Path:
    """Fraction of active ReLU units per hidden layer on the eval split."""
    _, eval_batch = load_experiment_data(config.dataset)
    path = reports_dir(config.output_dir) / "sparsity.csv"
    with open(path, "w") as fh:
        fh.write("loss,seed,layer,fraction_active\n")
        for name, _, seed in _runs(config):
            model = load_model(run_dir(config.output_dir, name, seed) / "model.npz")
            acts = forward_hidden(model, eval_batch.features)[1:]
            for layer, frac in enumerate(sparsity_profile(acts)):
                fh.write(f"{name},{seed},{layer},{FMT % frac}\n")
    return path


def report_calibration(config) -> tuple:
    """calibration.json (pre/post temperature) + calibration_bins.csv."""
    rows = []
    table = {}
    for name, spec in config.losses:
        kind = prob_kind(spec)
        runs = []
        for seed in config.seeds:
            d = load_run_dump(config, name, seed, "eval_scores.dump")
            pre = ece(probs_from_logits(d.data, kind), d.labels)
            temp, post = fit_temperature(d.data, d.labels, kind)
            runs.append(
                {
                    "seed": seed,
                    "nll": pre.nll,
                    "ece": pre.ece,
                    "temperature": temp,
                    "nll_scaled": post.nll,
                    "ece_scaled": post.ece,
                }
            )
            for b in pre.bins:
                rows.append(
                    (name, seed, b.lower, b.upper, b.count,
                     b.accuracy, b.mean_confidence)
                )
        table[name] = {
            "runs": runs,
            "mean": {
                key: _mean_stderr([r[key] for r in runs])[0]
                for key in ("nll", "ece", "temperature", "nll_scaled", "ece_scaled")
            },
        }
    rdir = reports_dir(config.output_dir)
    json_path = rdir / "calibration.json"
    with open(json_path, "w") as fh:
        json.dump(table, fh, indent=2, sort_keys=True)
        fh.write("\n")
    bins_path = rdir / "calibration_bins.csv"
    with open(bins_path, "w") as fh:
        fh.write("loss,seed,lower,upper,count,accuracy,mean_confidence\n")
        for name, seed, lo, hi, count, acc, conf in rows:
            fh.write(
                f"{name},{seed},{FMT % lo},{FMT % hi},{count},"
                f"{_fmt_opt(acc)},{_fmt_opt(conf)}\n"
            )
    return json_path, bins_path


def report_agreement(config) -> tuple:
    """Agreement matrix over all runs + average-linkage merge list."""
    names = _run_names(config)
    preds = []
    labels = None
    for name, _, seed in _runs(config):
        p, _ = read_predictions_csv(
            run_dir(config.output_dir, name, seed) / "predictions.csv"
        )
        preds.append(p)
        if labels is None:
            labels = load_run_dump(config, name, seed, "penultimate.dump").labels
    mat = agreement_matrix(preds, labels, config.agreement_variant, names=names)
    rdir = reports_dir(config.output_dir)
    mat_path = rdir / f"agreement_{config.agreement_variant}.csv"
    _write_matrix_csv(mat_path, names, mat.agree)
    # cluster on disagreement; the mutual-error variant leaves NaN for
    # pairs with no shared mistakes, so linkage only runs when finite
    dist = 1.0 - mat.agree
    link_path = rdir / "linkage.csv"
    with open(link_path, "w") as fh:
        fh.write("step,id_a,id_b,distance\n")
        if np.all(np.isfinite(dist)):
            for step, (a, b, d) in enumerate(linkage_dendrogram(dist)):
                fh.write(f"{step},{int(a)},{int(b)},{FMT % d}\n")
    return mat_path, link_path


def report_avh(config) -> Path:
    path = reports_dir(config.output_dir) / "avh.csv"
    with open(path, "w") as fh:
        fh.write("loss,seed,mean_avh\n")
        for name, _, seed in _runs(config):
            model = load_model(run_dir(config.output_dir, name, seed) / "model.npz")
            d = load_run_dump(config, name, seed, "penultimate.dump")
            avh = angular_visual_hardness(model.final, d.data, d.labels)
            fh.write(f"{name},{seed},{FMT % float(avh.mean())}\n")
    return path


def report_spectra(config) -> Path:
    """Singular values of centered penultimate activations, descending."""
    path = reports_dir(config.output_dir) / "spectra.csv"
    with open(path, "w") as fh:
        fh.write("loss,seed,rank,sigma\n")
        for name, _, seed in _runs(config):
            d = load_run_dump(config, name, seed, "penultimate.dump")
            for rank, s in enumerate(singular_spectrum(d.data, "activations")):
                fh.write(f"{name},{seed},{rank},{FMT % s}\n")
    return path


def merge_labels(labels, merge: int) -> np.ndarray:
    """Coarse relabeling: class k maps to k mod merge."""
    return np.asarray(labels, dtype=np.int64) % merge


def transfer_accuracy(features, labels, merge: int, probe_config: ProbeConfig,
                      split_seed: int = 0) -> float:
    """Probe accuracy on coarse labels: per-class half train / half test."""
    y = merge_labels(labels, merge)
    rng = np.random.default_rng(split_seed)
    tr_idx, te_idx = [], []
    for k in np.unique(y):
        idx = rng.permutation(np.where(y == k)[0])
        half = idx.size // 2
        tr_idx.append(idx[:half])
        te_idx.append(idx[half:])
    tr = np.sort(np.concatenate(tr_idx))
    te = np.sort(np.concatenate(te_idx))
    X = np.asarray(features, dtype=np.float64)
    res = sweep_and_retrain(X[tr], y[tr], X[te], y[te], probe_config)
    return res.test_accuracy


def report_transfer(config) -> Path:
    probe_cfg = ProbeConfig(
        val_fraction=config.probe_val_fraction,
        tolerance=config.probe_tolerance,
        max_iterations=config.probe_max_iterations,
        seed=0,
    )
    path = reports_dir(config.output_dir) / "transfer.csv"
    with open(path, "w") as fh:
        fh.write("loss,seed,merge,probe_acc\n")
        for name, _, seed in _runs(config):
            d = load_run_dump(config, name, seed, "penultimate.dump")
            acc = transfer_accuracy(
                d.data, d.labels, config.transfer_merge, probe_cfg
            )
            fh.write(f"{name},{seed},{config.transfer_merge},{FMT % acc}\n")
    return path


REPORTERS = {
    "separation": report_separation,
    "cka": report_cka,
    "sparsity": report_sparsity,
    "calibration": report_calibration,
    "agreement": report_agreement,
    "avh": report_avh,
    "spectra": report_spectra,
    "transfer": report_transfer,
}


def write_reports(config) -> list:
    """Accuracy table plus every enabled analysis; returns written paths."""
    rdir = reports_dir(config.output_dir)
    rdir.mkdir(parents=True, exist_ok=True)
    written = [report_accuracy(config)]
    for analysis in config.analyses:
        out = REPORTERS[analysis](config)
        written.extend(out if isinstance(out, tuple) else (out,))
    meta = {
        "runs": _run_names(config),
        "losses": {name: format_loss_line(spec) for name, spec in config.losses},
        "seeds": list(config.seeds),
        "analyses": list(config.analyses),
        "agreement_variant": config.agreement_variant,
        "agreement_distance": "1 - agreement, average linkage",
        "spectra_mode": "activations",
        "transfer_merge": config.transfer_merge,
        "dataset": asdict(config.dataset),
    }
    meta_path = rdir / "metadata.json"
    with open(meta_path, "w") as fh:
        json.dump(meta, fh, indent=2, sort_keys=True)
        fh.write("\n")
    written.append(meta_path)
    return written


def run_experiment(config: ExperimentConfig, jobs: int = 1) -> dict:
    """Full pipeline: train the grid, then write reports after the barrier."""
    summaries = run_all(config, jobs=jobs)
    reports = write_reports(config)
    return {
        "runs": summaries,
        "reports": [str(p) for p in reports],
    }


def dump_activations(model_path, dataset: Batch, out_path) -> None:
    """Penultimate features + labels of a saved model on a dataset."""
    model = load_model(model_path)
    feats = penultimate_features(model, dataset.features)
    write_activation_dump(out_path, feats, dataset.labels)
