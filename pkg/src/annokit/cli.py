"""Command-line front door.

Subcommands compose the library into file-to-file pipelines:

    distribute  samples CSV + campaign parameters  -> plan JSON
    reliability annotations CSV                    -> report JSON
    graph       annotations CSV                    -> DOT text
    labels      annotations CSV + report JSON      -> labeled JSONL
    gold        annotations CSV                    -> gold JSONL
    train       labeled JSONL + samples CSV        -> eval JSON
    simulate    scenario JSON                      -> annotations/truth/samples CSV
    recover     scenario JSON                      -> recovery JSON (Spearman rho)

Every command is a pure function of its inputs and seed; outputs are
written atomically (temp file + rename). Exit codes: 0 success, 1
validation error, 2 usage error.
"""

from __future__ import annotations

import argparse
import csv
import dataclasses
import io
import json
import os
import sys
import tempfile

from . import core, distribution, labeling, reliability, simulator, trainer


def _write_text(path: str | None, text: str) -> None:
    if path is None:
        sys.stdout.write(text)
        return
    directory = os.path.dirname(os.path.abspath(path))
    fd, tmp = tempfile.mkstemp(dir=directory, prefix=".annokit-")
    try:
        with os.fdopen(fd, "w", encoding="utf-8") as handle:
            handle.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def _read_text(path: str) -> str:
    with open(path, "r", encoding="utf-8") as handle:
        return handle.read()


def _json_text(obj) -> str:
    return json.dumps(obj, indent=2) + "\n"


def _label_set(text: str, labels_arg: str | None) -> core.LabelSet:
    if labels_arg:
        return core.LabelSet([lab.strip() for lab in labels_arg.split(",")])
    return core.infer_label_set(text)


def _load_store(args) -> core.AnnotationStore:
    text = _read_text(args.annotations)
    label_set = _label_set(text, args.labels)
    return core.parse_annotations(text, label_set, args.max_confidence)


def _reliability_config(args) -> reliability.ReliabilityConfig:
    return reliability.ReliabilityConfig(
        intra_weight=args.intra_weight,
        mode="iterative" if args.mode == "iterative" else "single_pass",
        use_weighted_inter=args.weighted_inter,
    )


def _add_annotation_input(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("annotations", help="annotation CSV file")
    parser.add_argument("--labels", help="comma-separated ordered label names "
                        "(default: sorted unique labels from the file)")
    parser.add_argument("--max-confidence", type=int, default=core.DEFAULT_MAX_CONFIDENCE)


def _add_reliability_flags(parser: argparse.ArgumentParser, default_lambda: float) -> None:
    parser.add_argument("--lambda", dest="intra_weight", type=float, default=default_lambda,
                        help="weight on intra-annotator agreement, in [0, 1]")
    parser.add_argument("--mode", choices=("single", "iterative"), default="single",
                        help="single-pass or iterate to convergence")
    parser.add_argument("--weighted-inter", action="store_true",
                        help="weight inter-agreement by partner reliability")


def _parse_merge(pairs) -> dict[str, str]:
    mapping = {}
    for pair in pairs or []:
        if "=" not in pair:
            raise core.ValidationError(f"--merge expects from=to, got {pair!r}")
        src, dst = pair.split("=", 1)
        mapping[src.strip()] = dst.strip()
    return mapping


def _reliabilities_from_report(path: str) -> dict[str, float]:
    report = json.loads(_read_text(path))
    return {a: float(v["reliability"]) for a, v in report["annotators"].items()}


def cmd_distribute(args) -> int:
    samples = core.parse_samples(_read_text(args.samples))
    params = core.CampaignParams(
        num_annotators=args.annotators,
        time_per_annotator=args.hours,
        annotation_rate=args.rate,
        double_prop=args.double_prop,
        reanno_prop=args.reanno_prop,
        max_confidence=args.max_confidence,
    )
    plan = distribution.allocate_samples([s.sample_id for s in samples], params, args.seed)
    report = distribution.verify_plan(plan)
    payload = plan.to_dict()
    payload["audit"] = report.to_dict()
    _write_text(args.out, _json_text(payload))
    return 0


def cmd_reliability(args) -> int:
    store = _load_store(args)
    graph = reliability.build_graph(store)
    config = _reliability_config(args)
    reliability.compute_reliability(graph, config)
    _write_text(args.out, _json_text(reliability.reliability_report(graph, config)))
    return 0


def cmd_graph(args) -> int:
    store = _load_store(args)
    graph = reliability.build_graph(store)
    config = _reliability_config(args)
    reliability.compute_reliability(graph, config)
    _write_text(args.out, reliability.export_dot(graph))
    return 0


def cmd_labels(args) -> int:
    store = _load_store(args)
    mapping = _parse_merge(args.merge)
    if mapping:
        full = {lab: mapping.get(lab, lab) for lab in store.label_set}
        store = labeling.merge_labels(store, full)
    reliabilities = None
    if args.reliability:
        reliabilities = _reliabilities_from_report(args.reliability)
    labeled = labeling.label_dataset(store, reliabilities)
    _write_text(args.out, labeling.labeled_to_jsonl(labeled))
    return 0


def cmd_gold(args) -> int:
    store = _load_store(args)
    reliabilities = None
    if args.reliability:
        reliabilities = _reliabilities_from_report(args.reliability)
    gold = labeling.extract_gold_set(store, reliabilities)
    _write_text(args.out, labeling.labeled_to_jsonl(gold))
    return 0


def cmd_train(args) -> int:
    labeled = labeling.jsonl_to_labeled(_read_text(args.labeled))
    samples = core.parse_samples(_read_text(args.samples))
    label_set = core.LabelSet([lab.strip() for lab in args.labels.split(",")])
    config = trainer.TrainConfig(
        epochs=args.epochs,
        learning_rate=args.lr,
        l2=args.l2,
        seed=args.seed,
        label_mode=args.label_mode,
        weighting=args.weighting,
    )
    if config.weighting == "reliability":
        if not args.reliability:
            raise core.ValidationError("--weighting reliability requires --reliability")
        trainer.assign_weights(labeled, _reliabilities_from_report(args.reliability))

    test = [s for s in labeled if s.gold]
    train = [s for s in labeled if not s.gold]
    if not test:
        raise core.ValidationError("no gold samples available for the test split")
    if not train:
        raise core.ValidationError("no non-gold samples available for training")

    feature_config = trainer.FeatureConfig(dim=args.feature_dim)
    model = trainer.train_classifier(train, samples, label_set, config, feature_config)
    by_id = {s.sample_id: s for s in samples}
    test_samples = [by_id[s.sample_id] for s in test]
    report = trainer.evaluate_model(model, test_samples, [s.hard_label for s in test])
    payload = report.to_dict()
    payload["n_train"] = len(train)
    payload["config"] = config.to_dict()
    _write_text(args.out, _json_text(payload))
    if args.trace_out:
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(["epoch", "loss"])
        for epoch, loss in enumerate(model.loss_trace, start=1):
            writer.writerow([epoch, repr(loss)])
        _write_text(args.trace_out, buf.getvalue())
    return 0


def _load_scenario(args) -> simulator.SimScenario:
    scenario = simulator.scenario_from_json(_read_text(args.scenario))
    return dataclasses.replace(scenario, seed=args.seed)


def cmd_simulate(args) -> int:
    result = simulator.simulate_campaign(_load_scenario(args))
    _write_text(args.annotations_out, core.serialize_annotations(result.store))
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(["sample_id", "true_label"])
    for sid, label in sorted(result.ground_truth.items()):
        writer.writerow([sid, label])
    _write_text(args.truth_out, buf.getvalue())
    if args.samples_out:
        _write_text(args.samples_out, core.serialize_samples(result.samples))
    return 0


def cmd_recover(args) -> int:
    scenario = _load_scenario(args)
    result = simulator.simulate_campaign(scenario)
    graph = reliability.build_graph(result.store)
    config = _reliability_config(args)
    scores = reliability.compute_reliability(graph, config)
    rho = simulator.evaluate_recovery(scores, scenario)
    payload = {
        "spearman_rho": rho,
        "seed": scenario.seed,
        "reliability": scores,
        "config": config.to_dict(),
    }
    _write_text(args.out, _json_text(payload))
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="annokit",
        description="annotation campaign planning, annotator reliability, "
        "soft labels, and reliability-weighted training",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("distribute", help="plan a campaign over a sample pool")
    p.add_argument("samples", help="samples CSV (sample_id,claim_text,post_text)")
    p.add_argument("--annotators", type=int, required=True)
    p.add_argument("--hours", type=float, required=True,
                   help="annotation time per annotator")
    p.add_argument("--rate", type=float, required=True, help="annotations per hour")
    p.add_argument("--double-prop", type=float, required=True,
                   help="proportion of unique samples that are double-annotated")
    p.add_argument("--reanno-prop", type=float, required=True,
                   help="proportion of each single project that is re-annotated")
    p.add_argument("--max-confidence", type=int, default=core.DEFAULT_MAX_CONFIDENCE)
    p.add_argument("--seed", type=int, required=True)
    p.add_argument("--out")
    p.set_defaults(func=cmd_distribute)

    p = sub.add_parser("reliability", help="compute annotator reliability scores")
    _add_annotation_input(p)
    _add_reliability_flags(p, default_lambda=0.5)
    p.add_argument("--out")
    p.set_defaults(func=cmd_reliability)

    p = sub.add_parser("graph", help="export the annotator agreement graph as DOT")
    _add_annotation_input(p)
    _add_reliability_flags(p, default_lambda=0.0)
    p.add_argument("--out")
    p.set_defaults(func=cmd_graph)

    p = sub.add_parser("labels", help="generate soft labels from annotations")
    _add_annotation_input(p)
    p.add_argument("--reliability", help="reliability report JSON for weighted aggregation")
    p.add_argument("--merge", action="append", metavar="FROM=TO",
                   help="merge a label into another before labeling (repeatable)")
    p.add_argument("--out")
    p.set_defaults(func=cmd_labels)

    p = sub.add_parser("gold", help="extract the high-agreement gold set")
    _add_annotation_input(p)
    p.add_argument("--reliability", help="reliability report JSON for weighted aggregation")
    p.add_argument("--out")
    p.set_defaults(func=cmd_gold)

    p = sub.add_parser("train", help="train and evaluate the linear classifier")
    p.add_argument("labeled", help="labeled JSONL from the labels command")
    p.add_argument("samples", help="samples CSV with claim/post texts")
    p.add_argument("--labels", required=True,
                   help="comma-separated ordered label names matching the soft labels")
    p.add_argument("--reliability", help="reliability report JSON for sample weights")
    p.add_argument("--label-mode", choices=("hard", "soft"), default="soft")
    p.add_argument("--weighting", choices=("none", "reliability"), default="reliability")
    p.add_argument("--epochs", type=int, default=200)
    p.add_argument("--lr", type=float, default=0.5)
    p.add_argument("--l2", type=float, default=1e-4)
    p.add_argument("--feature-dim", type=int, default=trainer.FeatureConfig().dim)
    p.add_argument("--seed", type=int, required=True)
    p.add_argument("--trace-out", help="write the epoch,loss training trace CSV here")
    p.add_argument("--out")
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("simulate", help="generate a synthetic annotation campaign")
    p.add_argument("scenario", help="scenario JSON file")
    p.add_argument("--seed", type=int, required=True)
    p.add_argument("--annotations-out", required=True)
    p.add_argument("--truth-out", required=True)
    p.add_argument("--samples-out", help="also write synthesized claim/post texts")
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("recover", help="simulate, compute reliability, and report "
                       "how well it recovers true annotator accuracy")
    p.add_argument("scenario", help="scenario JSON file")
    _add_reliability_flags(p, default_lambda=0.5)
    p.add_argument("--seed", type=int, required=True)
    p.add_argument("--out")
    p.set_defaults(func=cmd_recover)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (core.ValidationError, OSError, json.JSONDecodeError, KeyError) as exc:
        print(f"annokit: error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
