"""Command-line surface tying the audit pipeline together.

Subcommands: evaluate, saliency, cf-generate, align, calibrate, heuristic.
Every command reads a dataset, runs one stage of the pipeline, and writes
deterministic JSON/CSV reports into the output directory. A key-value config
file can preload any flag; explicit flags win.

Exit codes: 0 success, 2 input error, 3 missing model capability, 4 internal
error.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path
from typing import Sequence

from .alignment import (
    AlignmentReport,
    alignment_csv,
    audit_alignment,
    calibrate,
    record_to_dict,
)
from .corpus import DatasetDescriptor, LoadResult, load_dataset
from .counterfactuals import (
    ANTONYM_TABLES,
    CFPair,
    load_manual_coref_cf,
    perturb_comparison,
    save_cf_pairs,
)
from .errors import AuditError, CapabilityError, InputError
from .gateway import ModelGateway, build_gateway, predict
from .heuristic import SELECTION_STRATEGIES, HeuristicConfig, heuristic_answer
from .metrics import evaluate_dataset, exact_match, token_f1
from .saliency import SaliencyCache, SaliencyConfig
from .synthetic import make_synthetic_corpus
from .types import RCInstance

METHOD_ALIASES = {"occlusion": "occlusion", "ig": "integrated_gradients"}

_INT_KEYS = {"seed", "ig_steps", "n_partitions"}
_FLOAT_KEYS = {"alpha"}
_KNOWN_KEYS = _INT_KEYS | _FLOAT_KEYS | {
    "dataset",
    "format",
    "context_mode",
    "model",
    "method",
    "summarizer",
    "antonyms",
    "out",
    "strategy",
    "cf_file",
}


def read_config(path: str | Path) -> dict:
    """Parse a `name = value` config file into flag defaults."""
    values: dict = {}
    config_path = Path(path)
    if not config_path.exists():
        raise InputError(f"config file not found: {config_path}")
    for line_no, raw in enumerate(config_path.read_text(encoding="utf-8").splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        key, sep, value = line.partition("=")
        key, value = key.strip().replace("-", "_"), value.strip()
        if not sep or not key or not value:
            raise InputError(f"{config_path}:{line_no}: expected `name = value`")
        if key not in _KNOWN_KEYS:
            raise InputError(f"{config_path}:{line_no}: unknown setting {key!r}")
        try:
            if key in _INT_KEYS:
                values[key] = int(value)
            elif key in _FLOAT_KEYS:
                values[key] = float(value)
            else:
                values[key] = value
        except ValueError:
            raise InputError(f"{config_path}:{line_no}: bad value for {key}: {value!r}")
    return values


def build_parser(defaults: dict | None = None) -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--dataset", required=False, help="dataset path or synthetic:<n>")
    common.add_argument("--format", default="unified",
                        help="dataset format (unified, squad_like, quoref_like, "
                             "hotpot_like, wiki2hop_like)")
    common.add_argument("--context-mode", default="paragraphs", dest="context_mode",
                        help="context reduction: supporting_facts or paragraphs")
    common.add_argument("--model", default="toy:0",
                        help="gateway spec: toy:<seed>[:<dim>], remote:<endpoint>, "
                             "scripted:<path>, oracle, frequency")
    common.add_argument("--method", default="occlusion",
                        help="saliency method: occlusion or ig")
    common.add_argument("--summarizer", default="l2", help="attribution summarizer: l1, l2, dot")
    common.add_argument("--ig-steps", type=int, default=50, dest="ig_steps",
                        help="Riemann steps for integrated gradients")
    common.add_argument("--alpha", type=float, default=0.05, help="significance level")
    common.add_argument("--antonyms", default="in_dist",
                        help="antonym table for operator swaps: in_dist or ood")
    common.add_argument("--seed", type=int, default=0, help="global random seed")
    common.add_argument("--out", default="audit_out", help="output directory")
    common.add_argument("--config", default=None, help="key-value config file; flags override")

    parser = argparse.ArgumentParser(
        prog="rcaudit",
        description="Audit whether extractive QA models answer for the right reasons.",
    )
    parser.add_argument("--config", default=None, help="key-value config file; flags override")
    sub = parser.add_subparsers(dest="command", required=True)

    commands = []
    p = sub.add_parser("evaluate", parents=[common], help="answer accuracy report")
    p.set_defaults(func=run_evaluate)
    commands.append(p)
    p = sub.add_parser("saliency", parents=[common], help="per-token attribution maps")
    p.set_defaults(func=run_saliency)
    commands.append(p)
    p = sub.add_parser("cf-generate", parents=[common],
                       help="operator-swap counterfactual pairs")
    p.set_defaults(func=run_cf_generate)
    commands.append(p)
    p = sub.add_parser("align", parents=[common], help="explanation alignment audit")
    p.add_argument("--cf-file", default=None, dest="cf_file",
                   help="hand-authored coreference counterfactual pairs (JSON lines)")
    p.set_defaults(func=run_align)
    commands.append(p)
    p = sub.add_parser("calibrate", parents=[common],
                       help="significance rate on random partitions")
    p.add_argument("--n-partitions", type=int, default=1, dest="n_partitions",
                   help="random partitions drawn per instance")
    p.set_defaults(func=run_calibrate)
    commands.append(p)
    p = sub.add_parser("heuristic", parents=[common], help="non-reading baseline answers")
    p.add_argument("--strategy", default="token_overlap",
                   help="sentence selection: " + ", ".join(SELECTION_STRATEGIES))
    p.set_defaults(func=run_heuristic)
    commands.append(p)
    if defaults:
        # subparsers re-apply their own action defaults over the main parser's
        # namespace, so config values must be installed per subcommand
        for command in commands:
            command.set_defaults(**defaults)
    return parser


def load_instances(args) -> tuple[list[RCInstance], list]:
    """Resolve --dataset into instances plus a skip report."""
    if not args.dataset:
        raise InputError("--dataset is required")
    spec = str(args.dataset)
    if spec.startswith("synthetic:"):
        try:
            n = int(spec.split(":", 1)[1])
        except ValueError:
            raise InputError(f"bad synthetic dataset spec {spec!r}")
        return make_synthetic_corpus(n, args.seed), []
    descriptor = DatasetDescriptor(
        name=Path(spec).stem, path=spec, format=args.format, context_mode=args.context_mode
    )
    result: LoadResult = load_dataset(descriptor)
    skipped = [[s.record_index, s.instance_id, s.reason] for s in result.skipped]
    return result.instances, skipped


def saliency_config(args) -> SaliencyConfig:
    method = METHOD_ALIASES.get(args.method, args.method)
    return SaliencyConfig(method=method, ig_steps=args.ig_steps, summarizer=args.summarizer)


def out_dir(args) -> Path:
    path = Path(args.out)
    path.mkdir(parents=True, exist_ok=True)
    return path


def write_json(path: Path, payload) -> None:
    path.write_text(
        json.dumps(payload, sort_keys=True, ensure_ascii=False, indent=2) + "\n",
        encoding="utf-8",
    )


def write_jsonl(path: Path, rows) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for row in rows:
            fh.write(json.dumps(row, sort_keys=True, ensure_ascii=False) + "\n")


def _skill_breakdown(predictions: dict, instances: Sequence[RCInstance]) -> dict:
    groups: dict[str, list[RCInstance]] = {}
    for inst in instances:
        groups.setdefault(inst.skill, []).append(inst)
    breakdown = {}
    for skill in sorted(groups):
        result = evaluate_dataset(predictions, groups[skill])
        breakdown[skill] = {
            "n": len(groups[skill]),
            "exact_match": result.exact_match,
            "f1": result.f1,
        }
    return breakdown


def run_evaluate(args) -> int:
    instances, skipped = load_instances(args)
    instances = sorted(instances, key=lambda i: i.id)
    out = out_dir(args)
    rows = []
    predictions: dict[str, str] = {}
    with build_gateway(args.model) as gateway:
        for inst in instances:
            output = predict(gateway, inst)
            span = output.predicted_span
            golds = [a.text for a in inst.gold_answers]
            predictions[inst.id] = span.text
            rows.append(
                {
                    "id": inst.id,
                    "prediction": span.text,
                    "span": [span.token_start, span.token_end],
                    "gold": golds,
                    "exact_match": exact_match(span.text, golds),
                    "f1": token_f1(span.text, golds),
                }
            )
        model_id = gateway.model_id
    overall = evaluate_dataset(predictions, instances)
    summary = {
        "dataset": args.dataset,
        "model_id": model_id,
        "n_instances": len(instances),
        "exact_match": overall.exact_match,
        "f1": overall.f1,
        "per_skill": _skill_breakdown(predictions, instances),
        "skipped_records": skipped,
    }
    write_jsonl(out / "predictions.jsonl", rows)
    write_json(out / "summary.json", summary)
    lines = ["model,skill,n,exact_match,f1"]
    for skill, stats in summary["per_skill"].items():
        lines.append(
            f"{model_id},{skill},{stats['n']},{stats['exact_match']:.4f},{stats['f1']:.4f}"
        )
    lines.append(f"{model_id},all,{len(instances)},{overall.exact_match:.4f},{overall.f1:.4f}")
    (out / "summary.csv").write_text("\n".join(lines) + "\n", encoding="utf-8")
    print(f"evaluate: {len(instances)} instances, em={overall.exact_match:.4f} f1={overall.f1:.4f}")
    return 0


def run_saliency(args) -> int:
    instances, _ = load_instances(args)
    config = saliency_config(args)
    out = out_dir(args)
    cache = SaliencyCache()
    with build_gateway(args.model) as gateway:
        for inst in sorted(instances, key=lambda i: i.id):
            cache.get_or_compute(gateway, inst, config)
        model_id = gateway.model_id
    cache.save(out / "saliency.jsonl")
    write_json(
        out / "saliency_summary.json",
        {
            "dataset": args.dataset,
            "model_id": model_id,
            "method": config.method,
            "summarizer": config.summarizer,
            "ig_steps": config.ig_steps,
            "config_hash": config.config_hash,
            "n_maps": len(instances),
        },
    )
    print(f"saliency: wrote {len(instances)} maps ({config.method})")
    return 0


def _comparison_pairs(
    instances: Sequence[RCInstance], table_tag: str
) -> tuple[list[CFPair], list[list]]:
    table = ANTONYM_TABLES.get(table_tag)
    if table is None:
        raise InputError(f"unknown antonym table {table_tag!r}; choose in_dist or ood")
    pairs: list[CFPair] = []
    skipped: list[list] = []
    for inst in sorted(instances, key=lambda i: i.id):
        if inst.skill != "comparison":
            skipped.append([inst.id, "not a comparison instance"])
            continue
        try:
            pairs.append(perturb_comparison(inst, table=table))
        except InputError as exc:
            skipped.append([inst.id, str(exc)])
    return pairs, skipped


def run_cf_generate(args) -> int:
    instances, _ = load_instances(args)
    pairs, skipped = _comparison_pairs(instances, args.antonyms)
    out = out_dir(args)
    save_cf_pairs(pairs, out / "cf_pairs.jsonl")
    write_json(
        out / "cf_report.json",
        {
            "dataset": args.dataset,
            "antonym_table": args.antonyms,
            "n_instances": len(instances),
            "n_pairs": len(pairs),
            "skipped": skipped,
        },
    )
    print(f"cf-generate: {len(pairs)} pairs, {len(skipped)} skipped")
    return 0


def run_align(args) -> int:
    instances, _ = load_instances(args)
    config = saliency_config(args)
    out = out_dir(args)
    cmp_instances = [i for i in instances if i.skill == "comparison"]
    cmp_pairs, cf_skipped = ([], [])
    if cmp_instances:
        cmp_pairs, cf_skipped = _comparison_pairs(cmp_instances, args.antonyms)
    coref_pairs: list[CFPair] = []
    if args.cf_file:
        coref_pairs = load_manual_coref_cf(args.cf_file, instances)

    cache_path = out / "saliency_cache.jsonl"
    cache = SaliencyCache.load(cache_path) if cache_path.exists() else SaliencyCache()
    reports: list[AlignmentReport] = []
    dataset_id = str(args.dataset)
    with build_gateway(args.model) as gateway:
        for group in (cmp_pairs, coref_pairs):
            if group:
                reports.append(
                    audit_alignment(
                        gateway, group, config, alpha=args.alpha, cache=cache,
                        dataset_id=dataset_id,
                    )
                )
        model_id = gateway.model_id
    if not reports:
        raise InputError("no counterfactual pairs to audit; need comparison "
                         "instances or --cf-file")
    cache.save(cache_path)

    records = sorted(
        (r for report in reports for r in report.records), key=lambda r: r.instance_id
    )
    write_jsonl(out / "alignment_records.jsonl", (record_to_dict(r) for r in records))
    (out / "alignment.csv").write_text(alignment_csv(reports), encoding="utf-8")
    write_json(
        out / "alignment.json",
        {
            "dataset": dataset_id,
            "model_id": model_id,
            "method": config.method,
            "alpha": args.alpha,
            "antonym_table": args.antonyms,
            "reports": [
                {
                    "reasoning_step": report.reasoning_step,
                    "score": report.score,
                    "n_records": len(report.records),
                    "n_aligned": sum(r.aligned for r in report.records),
                    "skipped": [list(s) for s in report.skipped],
                }
                for report in reports
            ],
            "cf_generation_skipped": cf_skipped,
        },
    )
    for report in reports:
        print(f"align: {report.reasoning_step} score={report.score:.4f} "
              f"({len(report.records)} pairs)")
    return 0


def run_calibrate(args) -> int:
    instances, _ = load_instances(args)
    config = saliency_config(args)
    with build_gateway(args.model) as gateway:
        report = calibrate(
            instances,
            gateway,
            config,
            n_partitions=args.n_partitions,
            seed=args.seed,
            alpha=args.alpha,
        )
        model_id = gateway.model_id
    out = out_dir(args)
    write_json(
        out / "calibration.json",
        {
            "dataset": args.dataset,
            "model_id": model_id,
            "method": config.method,
            "n_instances": len(instances),
            "n_partitions": args.n_partitions,
            "rate": report.rate,
            "n_significant": report.n_significant,
            "n_draws": report.n_draws,
            "alpha": report.alpha,
            "seed": report.seed,
            "ci_low": report.ci_low,
            "ci_high": report.ci_high,
        },
    )
    print(f"calibrate: rate={report.rate:.4f} on {report.n_draws} draws "
          f"(CI {report.ci_low:.4f}..{report.ci_high:.4f})")
    return 0


def run_heuristic(args) -> int:
    instances, _ = load_instances(args)
    config = HeuristicConfig(selection_strategy=args.strategy)
    out = out_dir(args)
    instances = sorted(instances, key=lambda i: i.id)
    predictions = {}
    rows = []
    for inst in instances:
        answer = heuristic_answer(inst, config)
        golds = [a.text for a in inst.gold_answers]
        predictions[inst.id] = answer
        rows.append(
            {
                "id": inst.id,
                "prediction": answer,
                "gold": golds,
                "exact_match": exact_match(answer, golds),
                "f1": token_f1(answer, golds),
            }
        )
    overall = evaluate_dataset(predictions, instances)
    write_jsonl(out / "heuristic_predictions.jsonl", rows)
    write_json(
        out / "heuristic_summary.json",
        {
            "dataset": args.dataset,
            "strategy": args.strategy,
            "n_instances": len(instances),
            "exact_match": overall.exact_match,
            "f1": overall.f1,
            "per_skill": _skill_breakdown(predictions, instances),
        },
    )
    print(f"heuristic[{args.strategy}]: em={overall.exact_match:.4f} f1={overall.f1:.4f}")
    return 0


def main(argv: Sequence[str] | None = None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    try:
        pre = argparse.ArgumentParser(add_help=False)
        pre.add_argument("--config", default=None)
        known, _ = pre.parse_known_args(argv)
        defaults = read_config(known.config) if known.config else None
        parser = build_parser(defaults)
        args = parser.parse_args(argv)
        return args.func(args)
    except InputError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except CapabilityError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 3
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except AuditError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 4
    except Exception as exc:  # pragma: no cover - defensive
        print(f"internal error: {exc}", file=sys.stderr)
        return 4


if __name__ == "__main__":
    sys.exit(main())
