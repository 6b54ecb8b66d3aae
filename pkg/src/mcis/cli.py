"""Command-line interface.

Subcommands: gen, stats, train, infer, calibrate, debias, report, ablate,
run. ``calibrate`` and ``debias`` operate purely on prediction files so the
debiasing step can post-process any model's scores.
"""

import argparse
import json
import sys

from . import counterfactual, dataset, debias, metrics, model, pipeline
from .errors import McisError


def _write_json(doc, path):
    with open(path, "w") as fh:
        json.dump(doc, fh, sort_keys=True, indent=2)
        fh.write("\n")


def cmd_gen(args):
    if args.spec:
        with open(args.spec) as fh:
            spec_doc = json.load(fh)
    else:
        spec_doc = {}
    spec = dataset.BiasSpec.from_dict(spec_doc.get("bias_spec", spec_doc))
    sizes = tuple(spec_doc.get("sizes", [2000, 400, 400]))
    dims = tuple(spec_doc.get("dims", [8, 8]))
    corpus = dataset.generate_corpus(spec, sizes, dims, args.seed)
    dataset.save_corpus(corpus, args.out)
    print(f"wrote corpus ({sizes[0]}/{sizes[1]}/{sizes[2]}) to {args.out}")


def cmd_stats(args):
    corpus = dataset.load_corpus(args.corpus)
    report = dataset.corpus_stats(corpus)
    _write_json(report, args.out)
    print(f"wrote stats to {args.out}")


def cmd_train(args):
    corpus = dataset.load_corpus(args.corpus)
    doc = {}
    if args.config:
        with open(args.config) as fh:
            doc = json.load(fh)
    tc = model.TrainConfig(**doc.get("train", {}))
    m = doc.get("model", {})
    params = model.train(corpus, tc, m.get("embed_dim", 16),
                         m.get("hidden_dim", 16), m.get("fusion", "concat"))
    model.save_checkpoint(params, args.out)
    print(f"trained {tc.epochs} epochs, final MAE {params.final_train_mae:.4f}, "
          f"checkpoint {args.out}")


def cmd_infer(args):
    corpus = dataset.load_corpus(args.corpus)
    params = model.load_checkpoint(args.ckpt)
    treatment = counterfactual.ContextTreatment(
        mask_policy=args.mask_policy, audio_policy=args.audio_policy,
        visual_policy=args.visual_policy, random_mask_p=args.random_mask_p,
        seed=args.treatment_seed)
    header, records = counterfactual.infer_split(corpus, params, args.split,
                                                 treatment)
    counterfactual.save_predictions(header, records, args.out)
    print(f"wrote {len(records)} predictions ({args.split}) to {args.out}")


def cmd_calibrate(args):
    _, records = counterfactual.load_predictions(args.preds)
    triples = debias.triples_from_records(records)
    config = debias.SearchConfig(interval=tuple(args.interval),
                                 coarse_step=args.coarse, fine_step=args.fine)
    drop_zero = args.convention == "neg_vs_pos_excluding_zero"
    result = debias.ablate(args.ablation, triples, config,
                           drop_zero_gold=drop_zero, exhaustive=args.exhaustive)
    doc = dict(result.pair.to_dict(), metric=result.best_metric,
               trace_cells=result.n_cells)
    if result.exhaustive_best is not None:
        doc["exhaustive_best"] = result.exhaustive_best
        doc["exhaustive_gap"] = result.exhaustive_gap
    _write_json(doc, args.out)
    print(f"lambdas ({result.pair.lambda_hat}, {result.pair.lambda_tilde}) "
          f"metric {result.best_metric} -> {args.out}")


def cmd_debias(args):
    _, records = counterfactual.load_predictions(args.preds)
    with open(args.lambdas) as fh:
        doc = json.load(fh)
    pair = debias.LambdaPair(doc["lambda_hat"], doc["lambda_tilde"])
    triples = debias.triples_from_records(records)
    scores = debias.apply_debias(triples, pair)
    with open(args.out, "w") as fh:
        fh.write(json.dumps({"lambdas": pair.to_dict(), "n": len(scores)},
                            sort_keys=True) + "\n")
        for rec, s in zip(records, scores):
            fh.write(json.dumps({"id": rec.get("id"), "debiased": s,
                                 "gold": rec["gold"]}, sort_keys=True) + "\n")
    print(f"wrote {len(scores)} debiased scores to {args.out}")


def cmd_report(args):
    _, vanilla_recs = counterfactual.load_predictions(args.vanilla)
    golds = [r["gold"] for r in vanilla_recs]
    factual = [r["factual"] for r in vanilla_recs]
    # debiased file schema: {"id", "debiased", "gold"}
    with open(args.debiased) as fh:
        lines = fh.read().splitlines()
    deb_scores = [json.loads(l)["debiased"] for l in lines[1:] if l.strip()]
    vanilla = metrics.compute_report(factual, golds, args.convention)
    debiased = metrics.compute_report(deb_scores, golds, args.convention)
    report, table = metrics.compare_reports(vanilla, debiased)
    report["table"] = table
    _write_json(report, args.out)
    scores_csv = args.out.rsplit(".", 1)[0] + "_scores.csv"
    with open(scores_csv, "w") as fh:
        fh.write("id,gold,vanilla,debiased\n")
        for i, (g, v, d) in enumerate(zip(golds, factual, deb_scores)):
            fh.write(f"{i},{g},{v},{d}\n")
    print(table)
    print(f"wrote report to {args.out} and per-sample scores to {scores_csv}")


def cmd_run(args):
    config = pipeline.ExperimentConfig.from_json(args.config)
    if args.out_dir:
        config.out_dir = args.out_dir
    manifest = pipeline.run_experiment(config)
    print(f"run complete; manifest at {manifest['artifacts']['manifest']}")


def cmd_ablate(args):
    config = pipeline.ExperimentConfig.from_json(args.config)
    if args.out_dir:
        config.out_dir = args.out_dir
    out = pipeline.ablation_suite(config)
    print(out["table"])


def build_parser():
    parser = argparse.ArgumentParser(prog="mcis")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("gen", help="generate a synthetic biased corpus")
    p.add_argument("--spec", help="JSON file with bias_spec/sizes/dims")
    p.add_argument("--out", required=True)
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(fn=cmd_gen)

    p = sub.add_parser("stats", help="label/context-word distribution report")
    p.add_argument("--corpus", required=True)
    p.add_argument("--out", required=True)
    p.set_defaults(fn=cmd_stats)

    p = sub.add_parser("train", help="train the toy multimodal model")
    p.add_argument("--corpus", required=True)
    p.add_argument("--config", help="JSON with train/model sections")
    p.add_argument("--out", required=True)
    p.set_defaults(fn=cmd_train)

    p = sub.add_parser("infer", help="factual + counterfactual predictions")
    p.add_argument("--corpus", required=True)
    p.add_argument("--ckpt", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--split", default="test", choices=["train", "valid", "test"])
    p.add_argument("--mask-policy", dest="mask_policy", default="content_mask",
                   choices=list(counterfactual.MASK_POLICIES))
    p.add_argument("--audio-policy", dest="audio_policy", default="zero",
                   choices=list(counterfactual.AV_POLICIES))
    p.add_argument("--visual-policy", dest="visual_policy", default="zero",
                   choices=list(counterfactual.AV_POLICIES))
    p.add_argument("--random-mask-p", dest="random_mask_p", type=float, default=0.5)
    p.add_argument("--treatment-seed", dest="treatment_seed", type=int, default=0)
    p.set_defaults(fn=cmd_infer)

    p = sub.add_parser("calibrate", help="grid search the trade-off weights")
    p.add_argument("--preds", required=True)
    p.add_argument("--interval", nargs=2, type=float, default=[-2.0, 2.0])
    p.add_argument("--coarse", type=float, default=0.5)
    p.add_argument("--fine", type=float, default=0.1)
    p.add_argument("--exhaustive", action="store_true")
    p.add_argument("--ablation", default="full", choices=list(debias.ABLATION_MODES))
    p.add_argument("--convention", default=metrics.DEFAULT_CONVENTION,
                   choices=list(metrics.CONVENTIONS))
    p.add_argument("--out", required=True)
    p.set_defaults(fn=cmd_calibrate)

    p = sub.add_parser("debias", help="apply calibrated weights to predictions")
    p.add_argument("--preds", required=True)
    p.add_argument("--lambdas", required=True)
    p.add_argument("--out", required=True)
    p.set_defaults(fn=cmd_debias)

    p = sub.add_parser("report", help="vanilla vs debiased metric comparison")
    p.add_argument("--vanilla", required=True)
    p.add_argument("--debiased", required=True)
    p.add_argument("--convention", default=metrics.DEFAULT_CONVENTION,
                   choices=list(metrics.CONVENTIONS))
    p.add_argument("--out", required=True)
    p.set_defaults(fn=cmd_report)

    p = sub.add_parser("run", help="full pipeline from one config file")
    p.add_argument("--config", required=True)
    p.add_argument("--out-dir", dest="out_dir")
    p.set_defaults(fn=cmd_run)

    p = sub.add_parser("ablate", help="run the ablation suite")
    p.add_argument("--config", required=True)
    p.add_argument("--out-dir", dest="out_dir")
    p.set_defaults(fn=cmd_ablate)

    return parser


def main(argv=None):
    args = build_parser().parse_args(argv)
    try:
        args.fn(args)
    except (McisError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
