"""Experiment harness: train -> record -> evaluate -> report.

Subcommands:

- ``train``: train each ensemble member (own seed) and store its network,
  class assignment, and training-split records;
- ``record``: replay a split through trained members with plasticity off,
  K trials per example, and store the spike records;
- ``evaluate``: fit every configured decoder per member, combine across
  members with every configured combiner, and write accuracy / error-
  decomposition reports;
- ``ad-report``: summarize the per-example error-decomposition terms of an
  evaluate run;
- ``synth``: generate the two-class timing-coded synthetic dataset;
- ``validate``: lint spike-record files.

A configuration file fully determines every output byte; reports carry the
configuration digest so runs are attributable.
"""

from __future__ import annotations

import csv
import dataclasses
import json
import os
import sys
import time
from concurrent.futures import ThreadPoolExecutor

import click
import numpy as np

from .ambiguity import ad_categorical, ad_poisson
from .combine import am_combine, am_mv_combine, gm_poisson, mv_combine, ngm
from .core import WindowSpec, check_member_weights
from .decode import (
    bayes_decode,
    cfr_from_rates,
    encode_targets,
    estimate_rates,
    fit_bayes,
    fit_pv,
    hmfr_decode,
    normalize,
    pv_decode,
)
from .io import (
    ExperimentConfig,
    SerializationError,
    config_digest,
    load_config,
    load_model,
    read_idx,
    read_records,
    save_model,
    synthetic_temporal,
    write_records,
)
from .lif import build_diehl_cook
from .training import assign_classes, record_dataset, train_unsupervised

_IDX_FILES = {
    "train": ("train-images-idx3-ubyte", "train-labels-idx1-ubyte"),
    "test": ("t10k-images-idx3-ubyte", "t10k-labels-idx1-ubyte"),
}

_PROB_DECODERS = ("bayes", "norm_hmfr")
_ALL_DECODERS = ("hmfr", "norm_hmfr", "bayes", "pv", "cfr")
_ALL_COMBINERS = ("ngm", "gm", "am", "mv", "am_mv")


def _apply_overrides(cfg: ExperimentConfig, out, members, seed) -> ExperimentConfig:
    if out is not None:
        cfg = dataclasses.replace(cfg, output=dataclasses.replace(cfg.output, dir=out))
    seeds = cfg.training.seeds
    if seed is not None:
        seeds = (seed,)
    elif members is not None:
        if members > len(seeds):
            raise click.ClickException(
                f"--members {members} exceeds the {len(seeds)} configured seeds"
            )
        seeds = seeds[:members]
    cfg = dataclasses.replace(
        cfg, training=dataclasses.replace(cfg.training, seeds=seeds)
    )
    return cfg


def _load_cfg(config_path, out, members, seed) -> ExperimentConfig:
    if config_path is None:
        raise click.ClickException("--config is required")
    try:
        cfg = load_config(config_path)
    except (OSError, ValueError) as exc:
        raise click.ClickException(str(exc)) from exc
    return _apply_overrides(cfg, out, members, seed)


def _find_idx_file(directory: str, name: str) -> str:
    for candidate in (name, name + ".gz"):
        path = os.path.join(directory, candidate)
        if os.path.exists(path):
            return path
    raise click.ClickException(f"missing dataset file {name}[.gz] in {directory}")


def _load_split(cfg: ExperimentConfig, split: str, limit: int | None):
    d = cfg.dataset
    if d.kind != "idx":
        raise click.ClickException(
            "dataset.kind 'synthetic' has no image splits; use `synth` and "
            "`evaluate`, which generate records directly"
        )
    if d.dir is None:
        raise click.ClickException("dataset.dir is not set")
    images_name, labels_name = _IDX_FILES[split]
    if limit is None:
        limit = d.limit_train if split == "train" else d.limit_test
    data = read_idx(
        _find_idx_file(d.dir, images_name), _find_idx_file(d.dir, labels_name), limit
    )
    if not data:
        raise click.ClickException(f"{split} split is empty")
    images = np.stack([im.pixels for im in data]).astype(np.float64)
    labels = np.array([im.label for im in data], dtype=np.int64)
    return images, labels


def _member_dir(out_dir: str, seed: int) -> str:
    return os.path.join(out_dir, f"member-{seed:05d}")


def _build_member(cfg: ExperimentConfig, seed: int):
    return build_diehl_cook(
        cfg.network.n_input, cfg.network.n_exc,
        exc_params=cfg.lif.exc, inh_params=cfg.lif.inh,
        w_max=cfg.network.w_max, init_seed=seed,
        w_exc_inh=cfg.network.w_exc_inh, w_inh_exc=cfg.network.w_inh_exc,
        dt_ms=cfg.encode.dt_ms,
    )


def _run_members(seeds, fn, threads: int):
    """Run fn(seed) per member, collecting (seed, error-or-None)."""
    failures = []
    if threads <= 1:
        for s in seeds:
            try:
                fn(s)
            except Exception as exc:  # reported per member, run continues
                failures.append((s, exc))
                click.echo(f"member {s}: FAILED: {exc}", err=True)
    else:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            futures = {s: pool.submit(fn, s) for s in seeds}
        for s, fut in futures.items():
            exc = fut.exception()
            if exc is not None:
                failures.append((s, exc))
                click.echo(f"member {s}: FAILED: {exc}", err=True)
    return failures


@click.group()
def main() -> None:
    """Spiking-network ensemble experiment harness."""


@main.command("train")
@click.option("--config", "config_path", type=click.Path(exists=True), required=True)
@click.option("--out", type=click.Path(), default=None, help="Output directory.")
@click.option("--members", type=int, default=None, help="Use the first M seeds.")
@click.option("--seed", type=int, default=None, help="Train a single member seed.")
@click.option("--limit", type=int, default=None, help="Cap training images.")
@click.option("--threads", type=int, default=1, show_default=True)
def cmd_train(config_path, out, members, seed, limit, threads) -> None:
    """Train each ensemble member and store model, assignment, and records."""
    cfg = _load_cfg(config_path, out, members, seed)
    images, labels = _load_split(cfg, "train", limit)
    n_classes = int(labels.max()) + 1

    def run(member_seed: int) -> None:
        started = time.monotonic()
        net = _build_member(cfg, member_seed)
        train_unsupervised(net, images, cfg.stdp, cfg.encode, member_seed,
                           passes=cfg.training.passes)
        records = record_dataset(net, images, labels, cfg.encode, member_seed,
                                 trials=1, tag="train")
        pop, silent = assign_classes(records, n_classes)
        mdir = _member_dir(cfg.output.dir, member_seed)
        os.makedirs(mdir, exist_ok=True)
        save_model(os.path.join(mdir, "network.npz"), net)
        save_model(os.path.join(mdir, "population.npz"), pop)
        write_records(os.path.join(mdir, "records_train.jsonl"), records)
        elapsed = time.monotonic() - started
        click.echo(
            f"member {member_seed}: trained on {images.shape[0]} images in "
            f"{elapsed:.0f}s ({len(silent)} silent neurons)"
        )

    failures = _run_members(cfg.training.seeds, run, threads)
    if failures:
        sys.exit(1)


@main.command("record")
@click.option("--config", "config_path", type=click.Path(exists=True), required=True)
@click.option("--out", type=click.Path(), default=None)
@click.option("--members", type=int, default=None)
@click.option("--split", type=click.Choice(["train", "test"]), required=True)
@click.option("--limit", type=int, default=None, help="Cap examples.")
@click.option("--threads", type=int, default=1, show_default=True)
def cmd_record(config_path, out, members, split, limit, threads) -> None:
    """Replay a split through trained members with plasticity off."""
    cfg = _load_cfg(config_path, out, members, None)
    images, labels = _load_split(cfg, split, limit)

    def run(member_seed: int) -> None:
        mdir = _member_dir(cfg.output.dir, member_seed)
        net = load_model(os.path.join(mdir, "network.npz"))
        records = record_dataset(net, images, labels, cfg.encode, member_seed,
                                 trials=cfg.record.trials, tag=split)
        write_records(os.path.join(mdir, f"records_{split}.jsonl"), records)
        click.echo(
            f"member {member_seed}: recorded {images.shape[0]} examples x "
            f"{cfg.record.trials} trials ({split})"
        )

    failures = _run_members(cfg.training.seeds, run, threads)
    if failures:
        sys.exit(1)


def _synthetic_split_seed(base_seed: int, split: str) -> int:
    index = 0 if split == "train" else 1
    return int(np.random.SeedSequence([base_seed, index]).generate_state(1)[0])


def _member_records(cfg: ExperimentConfig, member_seed: int, split: str):
    """Load one member's records for a split.

    Synthetic datasets have no trainable network: each member draws its own
    training split (fit diversity comes from the draw) while the test split
    is shared across members, derived from the first configured seed, so the
    ensemble combines predictions about the same examples.
    """
    if cfg.dataset.kind == "synthetic":
        d = cfg.dataset
        base = member_seed if split == "train" else cfg.training.seeds[0]
        return synthetic_temporal(d.n_per_class, d.n_neurons, d.duration_ms,
                                  seed=_synthetic_split_seed(base, split))
    path = os.path.join(_member_dir(cfg.output.dir, member_seed),
                        f"records_{split}.jsonl")
    if not os.path.exists(path):
        raise click.ClickException(
            f"missing {path}; run `train` and `record --split {split}` first"
        )
    return read_records(path)


def _group_by_example(records):
    """Group trial records by example id, preserving first-seen order."""
    grouped: dict[str, list] = {}
    for rec in records:
        grouped.setdefault(rec.example_id, []).append(rec)
    labels = []
    for ex_id, recs in grouped.items():
        if recs[0].label is None:
            raise click.ClickException(f"example {ex_id} is unlabeled")
        labels.append(recs[0].label)
    return list(grouped.values()), np.array(labels, dtype=np.int64)


class _MemberEval:
    """Per-member fitted decoders and their test-split outputs.

    A decoder that cannot be fitted or run records its failure in ``errors``
    instead of aborting; the other decoders' cells still complete.
    """

    def __init__(self, cfg, train_records, test_groups, n_classes,
                 win_default, win_bayes, population=None):
        dec = cfg.decode
        n = len(test_groups)
        c = n_classes
        self.errors: dict[str, str] = {}
        self.scores: dict[str, np.ndarray] = {}
        self.pred: dict[str, np.ndarray] = {}
        self.cfr_lam = np.zeros((n, c, win_default.n_windows))
        self.cfr_votes = np.zeros((n, win_default.n_windows), dtype=np.int64)

        rates_d = [estimate_rates(trials, win_default) for trials in test_groups]
        rates_b = [estimate_rates(trials, win_bayes) for trials in test_groups]

        pop = population
        pop_error = None
        if pop is None:
            try:
                pop, _ = assign_classes(train_records, n_classes)
            except Exception as exc:
                pop_error = str(exc)
        self.pop = pop

        def run(name, fn):
            scores = np.zeros((n, c))
            pred = np.zeros(n, dtype=np.int64)
            try:
                for i in range(n):
                    scores[i], pred[i] = fn(i)
            except Exception as exc:
                self.errors[name] = str(exc)
                return
            self.scores[name] = scores
            self.pred[name] = pred

        if pop_error is not None:
            self.errors.update(hmfr=pop_error, norm_hmfr=pop_error, cfr=pop_error)
        else:
            def run_hmfr(i):
                res = hmfr_decode(rates_d[i], pop)
                return res.scores, res.predicted

            run("hmfr", run_hmfr)
            if "hmfr" in self.errors:
                self.errors["norm_hmfr"] = self.errors["hmfr"]
            else:
                def run_norm(i):
                    probs = normalize(self.scores["hmfr"][i], dec.norm)
                    return probs, int(np.argmax(probs))

                run("norm_hmfr", run_norm)

            def run_cfr(i):
                res = cfr_from_rates(rates_d[i], pop)
                self.cfr_lam[i] = res.lam_bar
                self.cfr_votes[i] = res.window_predicted
                return res.lam_bar.sum(axis=1), res.predicted

            run("cfr", run_cfr)

        def run_bayes(i):
            if i == 0:
                self.bayes = fit_bayes(train_records, win_bayes, n_classes,
                                       prior=dec.prior)
            res = bayes_decode(rates_b[i], self.bayes)
            return res.scores, res.predicted

        run("bayes", run_bayes)

        def run_pv(i):
            if i == 0:
                self.pv = fit_pv(train_records, n_classes)
            res = pv_decode(rates_d[i], self.pv)
            return res.scores, res.predicted

        run("pv", run_pv)

    def rates_for(self, decoder: str) -> np.ndarray:
        """(N, C, W) member rates for combination."""
        if decoder == "cfr":
            return self.cfr_lam
        return self.scores[decoder][:, :, None]


def _cell_compatible(decoder: str, combiner: str) -> bool:
    """Whether a (decoder, combiner) pairing is defined at all."""
    if combiner == "ngm":
        return decoder in _PROB_DECODERS
    if combiner == "gm":
        return decoder == "cfr"
    return True


def _combine_cell(decoder, combiner, members, labels, n_classes, weights,
                  win_default, r_max):
    """Ensemble predictions for one (decoder, combiner) cell.

    Returns (predictions, ad_rows) where ad_rows is None unless the cell is
    one of the guarantee combiners (ngm over probabilities, gm over rates).
    """
    n = labels.size
    preds = np.zeros(n, dtype=np.int64)
    ad_rows = None
    if combiner == "ngm":
        if decoder not in _PROB_DECODERS:
            return None, None
        q = np.stack([m.scores[decoder] for m in members])  # (M, N, C)
        ad_rows = []
        for i in range(n):
            q_bar = ngm(q[:, i, :], weights)
            preds[i] = int(np.argmax(q_bar))
            target = np.zeros(n_classes)
            target[labels[i]] = 1.0
            ad_rows.append(ad_categorical(target, q[:, i, :], weights))
        return preds, ad_rows
    if combiner == "gm":
        if decoder != "cfr":
            return None, None
        lam = np.stack([m.cfr_lam for m in members])  # (M, N, C, W)
        ad_rows = []
        for i in range(n):
            lam_bar = gm_poisson(lam[:, i], weights)
            votes = np.argmax(lam_bar, axis=0)
            preds[i] = int(np.argmax(np.bincount(votes, minlength=n_classes)))
            target = encode_targets(int(labels[i]), n_classes, r_max, win_default)
            ad_rows.append(ad_poisson(target.lam, lam[:, i], weights))
        return preds, ad_rows
    rates = np.stack([m.rates_for(decoder) for m in members])  # (M, N, C, W)
    if combiner == "am":
        for i in range(n):
            preds[i] = am_combine(rates[:, i]).predicted
        return preds, None
    if combiner == "am_mv":
        for i in range(n):
            preds[i] = am_mv_combine(rates[:, i]).predicted
        return preds, None
    if combiner == "mv":
        if decoder == "cfr":
            votes = np.stack([m.cfr_votes for m in members])  # (M, N, W)
        else:
            votes = np.stack([m.pred[decoder] for m in members])[:, :, None]
        for i in range(n):
            preds[i] = mv_combine(votes[:, i], n_classes)
        return preds, None
    raise ValueError(f"unknown combiner {combiner!r}")


@main.command("evaluate")
@click.option("--config", "config_path", type=click.Path(exists=True), required=True)
@click.option("--out", type=click.Path(), default=None)
@click.option("--members", type=int, default=None)
@click.option("--limit", type=int, default=None, help="Cap test examples.")
def cmd_evaluate(config_path, out, members, limit) -> None:
    """Fit decoders per member, combine across members, write reports."""
    started = time.monotonic()
    cfg = _load_cfg(config_path, out, members, None)
    seeds = cfg.training.seeds
    digest = config_digest(cfg)
    out_dir = cfg.output.dir
    os.makedirs(out_dir, exist_ok=True)

    decoders = [d for d in _ALL_DECODERS if d in cfg.decode.decoders]
    combiners = [c for c in _ALL_COMBINERS if c in cfg.combine.combiners]
    unknown = (set(cfg.decode.decoders) - set(_ALL_DECODERS)) | (
        set(cfg.combine.combiners) - set(_ALL_COMBINERS)
    )
    if unknown:
        raise click.ClickException(f"unknown decoder/combiner names: {sorted(unknown)}")
    if not decoders or not combiners:
        raise click.ClickException("decode.decoders and combine.combiners must be "
                                   "nonempty")

    # Load per-member data and fit.
    members_eval = []
    labels = None
    n_classes = None
    for s in seeds:
        train_recs = _member_records(cfg, s, "train")
        test_recs = _member_records(cfg, s, "test")
        if limit is not None:
            seen: dict[str, None] = {}
            kept = []
            for rec in test_recs:
                if rec.example_id not in seen and len(seen) == limit:
                    continue
                seen.setdefault(rec.example_id, None)
                kept.append(rec)
            test_recs = kept
        groups, member_labels = _group_by_example(test_recs)
        if labels is None:
            labels = member_labels
            train_labels = [r.label for r in train_recs if r.label is not None]
            n_classes = int(max(max(train_labels), labels.max())) + 1
            duration = test_recs[0].duration_ms
            win_default = WindowSpec(cfg.decode.window_ms_default, duration)
            win_bayes = WindowSpec(cfg.decode.window_ms_bayes, duration)
        elif not np.array_equal(member_labels, labels):
            raise click.ClickException(
                f"member {s}: test examples disagree with other members"
            )
        pop = None
        pop_path = os.path.join(_member_dir(out_dir, s), "population.npz")
        if cfg.dataset.kind == "idx" and os.path.exists(pop_path):
            pop = load_model(pop_path)
        members_eval.append(
            _MemberEval(cfg, train_recs, groups, n_classes, win_default,
                        win_bayes, population=pop)
        )
        click.echo(f"member {s}: fitted decoders on {len(train_recs)} train "
                   f"records, decoded {labels.size} test examples")

    weights = check_member_weights(
        None if cfg.combine.weights is None else list(cfg.combine.weights),
        len(seeds),
    )

    member_acc = {
        d: [float((m.pred[d] == labels).mean()) if d in m.pred else None
            for m in members_eval]
        for d in decoders
    }

    rows = []
    ad_out = []
    confusion_rows = []
    any_failed = False
    for d in decoders:
        accs = member_acc[d]
        acc_str = "|".join("-" if a is None else f"{a:.6f}" for a in accs)
        avg_str = ("-" if any(a is None for a in accs)
                   else f"{np.mean(accs):.6f}")
        decoder_error = next(
            (m.errors[d] for m in members_eval if d in m.errors), None
        )
        for cb in combiners:
            row = {
                "decoder": d, "combiner": cb, "status": "ok",
                "member_accuracies": acc_str,
                "avg_member_accuracy": avg_str,
                "ensemble_accuracy": "", "ensemble_error": "",
                "avg_member_error": "", "ambiguity": "", "residual_max": "",
                "error": "",
            }
            if not _cell_compatible(d, cb):
                row["status"] = "n/a"
                rows.append(row)
                continue
            if decoder_error is not None:
                row["status"] = "failed"
                row["error"] = decoder_error
                any_failed = True
                rows.append(row)
                continue
            try:
                preds, ad_rows = _combine_cell(
                    d, cb, members_eval, labels, n_classes, weights,
                    win_default, cfg.decode.r_max,
                )
            except Exception as exc:
                row["status"] = "failed"
                row["error"] = str(exc)
                any_failed = True
                rows.append(row)
                continue
            if preds is None:
                row["status"] = "n/a"
                rows.append(row)
                continue
            row["ensemble_accuracy"] = f"{float((preds == labels).mean()):.6f}"
            conf = np.zeros((n_classes, n_classes), dtype=np.int64)
            np.add.at(conf, (labels, preds), 1)
            for t in range(n_classes):
                for p in range(n_classes):
                    if conf[t, p]:
                        confusion_rows.append(
                            {"decoder": d, "combiner": cb, "true_class": t,
                             "predicted_class": p, "count": int(conf[t, p])}
                        )
            if ad_rows is not None:
                ens = np.array([r.ensemble_error for r in ad_rows])
                avg = np.array([r.avg_member_error for r in ad_rows])
                amb = np.array([r.ambiguity for r in ad_rows])
                res = np.array([r.residual for r in ad_rows])
                row["ensemble_error"] = f"{ens.mean():.9f}"
                row["avg_member_error"] = f"{avg.mean():.9f}"
                row["ambiguity"] = f"{amb.mean():.9f}"
                row["residual_max"] = f"{res.max():.3e}"
                for i, r in enumerate(ad_rows):
                    ad_out.append(
                        {"decoder": d, "combiner": cb, "example_index": i,
                         "label": int(labels[i]),
                         "ensemble_error": repr(r.ensemble_error),
                         "avg_member_error": repr(r.avg_member_error),
                         "ambiguity": repr(r.ambiguity),
                         "residual": repr(r.residual)}
                    )
            rows.append(row)

    report_path = os.path.join(out_dir, "report.csv")
    with open(report_path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.DictWriter(fh, fieldnames=list(rows[0].keys()))
        writer.writeheader()
        writer.writerows(rows)
    with open(os.path.join(out_dir, "ad_terms.csv"), "w", newline="",
              encoding="utf-8") as fh:
        names = ["decoder", "combiner", "example_index", "label",
                 "ensemble_error", "avg_member_error", "ambiguity", "residual"]
        writer = csv.DictWriter(fh, fieldnames=names)
        writer.writeheader()
        writer.writerows(ad_out)
    with open(os.path.join(out_dir, "confusion.csv"), "w", newline="",
              encoding="utf-8") as fh:
        names = ["decoder", "combiner", "true_class", "predicted_class", "count"]
        writer = csv.DictWriter(fh, fieldnames=names)
        writer.writeheader()
        writer.writerows(confusion_rows)

    wall = time.monotonic() - started
    meta = {
        "config_digest": digest,
        "seeds": list(seeds),
        "n_test_examples": int(labels.size),
        "n_classes": int(n_classes),
        "member_weights": weights.tolist(),
        "wall_time_s": round(wall, 3),
    }
    with open(os.path.join(out_dir, "run_meta.json"), "w", encoding="utf-8") as fh:
        json.dump(meta, fh, indent=2, sort_keys=True)
        fh.write("\n")

    lines = [
        f"config {digest}  members {list(seeds)}  "
        f"test examples {labels.size}  wall {wall:.1f}s",
        "",
        f"{'decoder':<10} {'combiner':<7} {'status':<7} {'members':<9} "
        f"{'ensemble':<9} {'avg err':<11} {'ambiguity':<11} {'residual':<9}",
    ]
    for row in rows:
        lines.append(
            f"{row['decoder']:<10} {row['combiner']:<7} {row['status']:<7} "
            f"{row['avg_member_accuracy']:<9} "
            f"{row['ensemble_accuracy'] if row['status'] == 'ok' else '-':<9} "
            f"{row['avg_member_error'] or '-':<11} {row['ambiguity'] or '-':<11} "
            f"{row['residual_max'] or '-':<9}"
        )
    table = "\n".join(lines)
    with open(os.path.join(out_dir, "report.txt"), "w", encoding="utf-8") as fh:
        fh.write(table)
        fh.write("\n")
    click.echo(table)
    if any_failed:
        sys.exit(1)


@main.command("ad-report")
@click.option("--out", type=click.Path(exists=True), required=True,
              help="Directory written by `evaluate`.")
def cmd_ad_report(out) -> None:
    """Summarize per-example error-decomposition terms of an evaluate run."""
    path = os.path.join(out, "ad_terms.csv")
    if not os.path.exists(path):
        raise click.ClickException(f"no ad_terms.csv in {out}")
    cells: dict[tuple, list] = {}
    with open(path, newline="", encoding="utf-8") as fh:
        for row in csv.DictReader(fh):
            cells.setdefault((row["decoder"], row["combiner"]), []).append(row)
    if not cells:
        click.echo("no decomposition rows (no guarantee-combiner cells ran)")
        return
    click.echo(f"{'decoder':<10} {'combiner':<8} {'examples':<9} {'ens err':<12} "
               f"{'avg err':<12} {'ambiguity':<12} {'max resid':<10} guarantee")
    violations = 0
    for (d, cb), rows in sorted(cells.items()):
        ens = np.array([float(r["ensemble_error"]) for r in rows])
        avg = np.array([float(r["avg_member_error"]) for r in rows])
        amb = np.array([float(r["ambiguity"]) for r in rows])
        res = np.array([float(r["residual"]) for r in rows])
        bad = int(np.sum(ens > avg + 1e-9))
        violations += bad
        click.echo(
            f"{d:<10} {cb:<8} {len(rows):<9} {ens.mean():<12.6f} "
            f"{avg.mean():<12.6f} {amb.mean():<12.6f} {res.max():<10.3e} "
            f"{'ok' if bad == 0 else f'{bad} violations'}"
        )
    if violations:
        sys.exit(1)


@main.command("synth")
@click.option("--out", type=click.Path(), required=True, help="Output record file.")
@click.option("--n-per-class", type=int, default=250, show_default=True)
@click.option("--n-neurons", type=int, default=30, show_default=True)
@click.option("--duration-ms", type=float, default=350.0, show_default=True)
@click.option("--seed", type=int, default=0, show_default=True)
def cmd_synth(out, n_per_class, n_neurons, duration_ms, seed) -> None:
    """Generate the two-class timing-coded synthetic record file."""
    records = synthetic_temporal(n_per_class, n_neurons, duration_ms, seed)
    parent = os.path.dirname(out)
    if parent:
        os.makedirs(parent, exist_ok=True)
    write_records(out, records)
    click.echo(f"wrote {len(records)} records to {out}")


@main.command("validate")
@click.argument("paths", type=click.Path(exists=True), nargs=-1, required=True)
def cmd_validate(paths) -> None:
    """Lint spike-record files; nonzero exit on the first invalid file."""
    bad = False
    for path in paths:
        try:
            records = read_records(path)
        except SerializationError as exc:
            click.echo(f"{path}: INVALID: {exc}", err=True)
            bad = True
            continue
        click.echo(f"{path}: {len(records)} records ok")
    if bad:
        sys.exit(1)


if __name__ == "__main__":
    main()
