"""End-to-end experiment orchestration and the ablation suite.

All stages write deterministic artifacts under one output directory and a
manifest records every path, seed, version, and the config hash, so two
runs with the same config are byte-identical.
"""

import csv
import hashlib
import json
import os
from dataclasses import dataclass, field

import numpy as np

from . import __version__, counterfactual, dataset, debias, kernels, metrics, model
from .errors import PipelineStageError
from .numerics import GENERATOR_NAME, derive_seeds

ABLATION_ROWS = ("full", "no_label_elim", "no_context_elim", "no_gss",
                 "rce", "all_mask", "random_mask", "no_ace", "no_vce")


@dataclass
class ExperimentConfig:
    seed: int = 42
    out_dir: str = "runs/default"
    bias_spec: dataset.BiasSpec = field(default_factory=dataset.BiasSpec)
    sizes: tuple = (2000, 400, 400)
    dims: tuple = (8, 8)
    train: model.TrainConfig = field(default_factory=model.TrainConfig)
    embed_dim: int = 16
    hidden_dim: int = 16
    fusion: str = "concat"
    search: debias.SearchConfig = field(default_factory=debias.SearchConfig)
    convention: str = metrics.DEFAULT_CONVENTION
    ablation: str = "full"
    exhaustive: bool = False

    def to_dict(self):
        return {
            "seed": self.seed,
            "out_dir": self.out_dir,
            "bias_spec": self.bias_spec.to_dict(),
            "sizes": list(self.sizes),
            "dims": list(self.dims),
            "train": {"epochs": self.train.epochs,
                      "learning_rate": self.train.learning_rate,
                      "batch_size": self.train.batch_size,
                      "seed": self.train.seed, "loss": self.train.loss},
            "model": {"embed_dim": self.embed_dim, "hidden_dim": self.hidden_dim,
                      "fusion": self.fusion},
            "search": {"interval": list(self.search.interval),
                       "coarse_step": self.search.coarse_step,
                       "fine_step": self.search.fine_step,
                       "fine_radius": self.search.fine_radius},
            "convention": self.convention,
            "ablation": self.ablation,
            "exhaustive": self.exhaustive,
        }

    @classmethod
    def from_dict(cls, d):
        cfg = cls()
        cfg.seed = d.get("seed", cfg.seed)
        cfg.out_dir = d.get("out_dir", cfg.out_dir)
        if "bias_spec" in d:
            cfg.bias_spec = dataset.BiasSpec.from_dict(d["bias_spec"])
        cfg.sizes = tuple(d.get("sizes", cfg.sizes))
        cfg.dims = tuple(d.get("dims", cfg.dims))
        if "train" in d:
            cfg.train = model.TrainConfig(**d["train"])
        m = d.get("model", {})
        cfg.embed_dim = m.get("embed_dim", cfg.embed_dim)
        cfg.hidden_dim = m.get("hidden_dim", cfg.hidden_dim)
        cfg.fusion = m.get("fusion", cfg.fusion)
        if "search" in d:
            s = dict(d["search"])
            if "interval" in s:
                s["interval"] = tuple(s["interval"])
            cfg.search = debias.SearchConfig(**s)
        cfg.convention = d.get("convention", cfg.convention)
        cfg.ablation = d.get("ablation", cfg.ablation)
        cfg.exhaustive = d.get("exhaustive", cfg.exhaustive)
        return cfg

    @classmethod
    def from_json(cls, path):
        with open(path) as fh:
            return cls.from_dict(json.load(fh))

    def config_hash(self):
        canon = json.dumps(self.to_dict(), sort_keys=True)
        return hashlib.sha256(canon.encode()).hexdigest()


def _stage(name):
    def wrap(fn):
        def inner(*args, **kwargs):
            try:
                return fn(*args, **kwargs)
            except PipelineStageError:
                raise
            except Exception as exc:
                raise PipelineStageError(name, exc) from exc
        return inner
    return wrap


def _derived_seeds(root):
    gen, train, treat, rce = derive_seeds(root, 4)
    return {"generate": gen, "train": train, "treatment": treat, "rce": rce}


def run_experiment(config):
    """Execute generate -> train -> infer -> calibrate -> debias -> report
    and return the manifest dict."""
    os.makedirs(config.out_dir, exist_ok=True)
    seeds = _derived_seeds(config.seed)
    paths = {k: os.path.join(config.out_dir, v) for k, v in {
        "corpus": "corpus.jsonl", "checkpoint": "checkpoint.json",
        "preds_valid": "preds_valid.jsonl", "preds_test": "preds_test.jsonl",
        "lambdas": "lambdas.json", "debiased": "debiased.jsonl",
        "report": "report.json", "scores": "scores.csv",
        "manifest": "manifest.json"}.items()}

    corpus = _stage("gen")(_gen)(config, seeds, paths)
    params = _stage("train")(_train)(config, corpus, paths)
    triples_valid, triples_test, test_records = _stage("infer")(_infer)(
        config, corpus, params, seeds, paths)
    result = _stage("calibrate")(_calibrate)(config, triples_valid, paths)
    debiased = _stage("debias")(_debias)(triples_test, test_records, result.pair,
                                         paths)
    report = _stage("report")(_report)(config, corpus, triples_test, debiased,
                                       paths)

    manifest = {
        "artifacts": paths,
        "config": config.to_dict(),
        "config_sha256": config.config_hash(),
        "seeds": seeds,
        "lambdas": result.pair.to_dict(),
        "validation_metric": result.best_metric,
        "rng": GENERATOR_NAME,
        "kernel_backend": kernels.backend_name(),
        "version": __version__,
        "report_summary": report["deltas"],
    }
    with open(paths["manifest"], "w") as fh:
        json.dump(manifest, fh, sort_keys=True, indent=2)
        fh.write("\n")
    return manifest


def _gen(config, seeds, paths):
    corpus = dataset.generate_corpus(config.bias_spec, config.sizes, config.dims,
                                     seeds["generate"])
    dataset.save_corpus(corpus, paths["corpus"])
    return corpus


def _train(config, corpus, paths):
    tc = config.train
    tc = model.TrainConfig(tc.epochs, tc.learning_rate, tc.batch_size,
                           tc.seed, tc.loss)
    params = model.train(corpus, tc, config.embed_dim, config.hidden_dim,
                         config.fusion)
    model.save_checkpoint(params, paths["checkpoint"])
    return params


def ablation_treatment(mode, seeds):
    """Context treatment + label-CF options for one ablation row."""
    treatment = counterfactual.ContextTreatment(seed=seeds["treatment"])
    label_cf = {}
    if mode == "all_mask":
        treatment.mask_policy = "all_mask"
    elif mode == "random_mask":
        treatment.mask_policy = "random_mask"
    elif mode == "no_ace":
        treatment.audio_policy = "keep"
    elif mode == "no_vce":
        treatment.visual_policy = "keep"
    return treatment, label_cf


def _infer(config, corpus, params, seeds, paths, mode="full"):
    treatment, label_cf_kwargs = ablation_treatment(mode, seeds)
    if mode == "rce":
        cfe = counterfactual.random_counterfactual_embeddings(
            config.embed_dim, config.dims[0], config.dims[1], seeds["rce"])
    else:
        cfe = counterfactual.compute_label_counterfactual(corpus, params)
    out = []
    for split, path_key in (("valid", "preds_valid"), ("test", "preds_test")):
        header, records = counterfactual.infer_split(
            corpus, params, split, treatment, cfe, label_cf_kwargs)
        if paths is not None:
            counterfactual.save_predictions(header, records, paths[path_key])
        out.append((debias.triples_from_records(records), records))
    (tv, _), (tt, test_records) = out
    return tv, tt, test_records


def _calibrate(config, triples_valid, paths):
    drop_zero = config.convention == "neg_vs_pos_excluding_zero"
    result = debias.ablate(config.ablation, triples_valid, config.search,
                           drop_zero_gold=drop_zero, exhaustive=config.exhaustive)
    if paths is not None:
        doc = dict(result.pair.to_dict(), metric=result.best_metric,
                   trace_cells=result.n_cells)
        if result.exhaustive_best is not None:
            doc["exhaustive_best"] = result.exhaustive_best
            doc["exhaustive_gap"] = result.exhaustive_gap
        with open(paths["lambdas"], "w") as fh:
            json.dump(doc, fh, sort_keys=True, indent=2)
            fh.write("\n")
    return result


def _debias(triples_test, test_records, pair, paths):
    scores = debias.apply_debias(triples_test, pair)
    if paths is not None:
        with open(paths["debiased"], "w") as fh:
            fh.write(json.dumps({"lambdas": pair.to_dict(), "n": len(scores)},
                                sort_keys=True) + "\n")
            for rec, s in zip(test_records, scores):
                fh.write(json.dumps({"id": rec["id"], "debiased": s,
                                     "gold": rec["gold"]}, sort_keys=True) + "\n")
    return scores


def _report(config, corpus, triples_test, debiased_scores, paths):
    golds = [t.gold for t in triples_test]
    factual = [t.factual for t in triples_test]
    vanilla = metrics.compute_report(factual, golds, config.convention)
    deb = metrics.compute_report(debiased_scores, golds, config.convention)
    report, table = metrics.compare_reports(vanilla, deb)
    report["rng"] = GENERATOR_NAME
    report["table"] = table

    cleans = [u.clean_signal for u in corpus.test]
    if all(c is not None for c in cleans):
        report["mae_vs_clean"] = {
            "vanilla": metrics.mae(factual, cleans),
            "debiased": metrics.mae(debiased_scores, cleans),
        }
    if paths is not None:
        metrics.write_report(report, paths["report"])
        with open(paths["scores"], "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(["id", "gold", "vanilla", "debiased"])
            for i, (g, v, d) in enumerate(zip(golds, factual, debiased_scores)):
                writer.writerow([i, g, v, d])
    return report


def ablation_suite(config, modes=ABLATION_ROWS):
    """One calibrated run per ablation row over a shared corpus and model."""
    os.makedirs(config.out_dir, exist_ok=True)
    seeds = _derived_seeds(config.seed)
    corpus = dataset.generate_corpus(config.bias_spec, config.sizes, config.dims,
                                     seeds["generate"])
    params = model.train(corpus, config.train, config.embed_dim,
                         config.hidden_dim, config.fusion)
    drop_zero = config.convention == "neg_vs_pos_excluding_zero"

    rows = []
    for mode in modes:
        lam_mode = mode if mode in debias.ABLATION_MODES else "full"
        tv, tt, _ = _infer(config, corpus, params, seeds, None, mode=mode)
        result = debias.ablate(lam_mode, tv, config.search,
                               drop_zero_gold=drop_zero)
        if result.best_metric is None:  # no_gss evaluates no cells
            valid_metric = metrics.weighted_f1(
                debias.apply_debias(tv, result.pair),
                [t.gold for t in tv], config.convention)
        else:
            valid_metric = result.best_metric
        test_scores = debias.apply_debias(tt, result.pair)
        test_report = metrics.compute_report(test_scores, [t.gold for t in tt],
                                             config.convention)
        rows.append({"mode": mode, "lambdas": result.pair.to_dict(),
                     "valid_f1": valid_metric,
                     "test": test_report.to_dict()})

    table = _ablation_table(rows)
    out = {"rows": rows, "table": table, "convention": config.convention,
           "rng": GENERATOR_NAME, "seeds": seeds}
    with open(os.path.join(config.out_dir, "ablation.json"), "w") as fh:
        json.dump(out, fh, sort_keys=True, indent=2)
        fh.write("\n")
    return out


def _ablation_table(rows):
    header = ("mode", "lambda_hat", "lambda_tilde", "valid_f1", "test_f1",
              "test_acc2", "test_acc7", "test_mae")
    lines = [header]
    for r in rows:
        lines.append((r["mode"], f"{r['lambdas']['lambda_hat']:+.2f}",
                      f"{r['lambdas']['lambda_tilde']:+.2f}",
                      f"{r['valid_f1']:.4f}", f"{r['test']['weighted_f1']:.4f}",
                      f"{r['test']['acc2']:.4f}", f"{r['test']['acc7']:.4f}",
                      f"{r['test']['mae']:.4f}"))
    widths = [max(len(row[c]) for row in lines) for c in range(len(header))]
    return "\n".join("  ".join(v.ljust(w) for v, w in zip(row, widths))
                     for row in lines)
