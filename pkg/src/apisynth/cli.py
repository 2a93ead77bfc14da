"""Command-line entry point wiring every stage into two pipelines.

Exit codes: 0 success, 1 pipeline failure, 2 usage error.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path

from . import apimodel, dsel, extractor, genclient, metrics, promptgen, skdsl, synthbench, validator
from .corpus import ingest, filter_corpus, save_corpus, save_rejects
from .pipeline import (
    PipelineConfig,
    PipelineError,
    UsageError,
    derive_seed,
    run_dgen_pipeline,
    run_dsel_pipeline,
)

logger = logging.getLogger(__name__)


def _write_jsonl(rows: list[dict], path: str) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for row in rows:
            fh.write(json.dumps(row, sort_keys=True) + "\n")


def _load_corpus_with_stats(stats_path: str):
    """Rebuild a selection-ready corpus from an api_stats JSONL file."""
    from .corpus import Corpus, SftExample

    rows = extractor.load_api_stats(stats_path)
    examples = [
        SftExample(
            id=row["id"],
            instruction="",
            code="",
            api_set=set(row["apis"]),
            length_tokens=row["length_tokens"],
        )
        for row in rows
    ]
    return Corpus(examples=examples, source_name=stats_path)


def cmd_ingest(args) -> int:
    corpus, rejects = ingest(args.input, args.source)
    save_corpus(corpus, args.out)
    if args.rejects:
        save_rejects(rejects, args.rejects)
    logger.info("ingested %d examples, %d rejects", len(corpus), len(rejects))
    return 0


def cmd_filter(args) -> int:
    corpus, _ = ingest(args.input, args.source)
    kept, rejects = filter_corpus(corpus, args.max_tokens)
    save_corpus(kept, args.out)
    if args.rejects:
        save_rejects(rejects, args.rejects)
    logger.info("kept %d, rejected %d", len(kept), len(rejects))
    return 0


def cmd_extract(args) -> int:
    corpus, _ = ingest(args.input, args.source)
    catalog = apimodel.load_catalog(args.catalog) if args.catalog else None
    extractor.annotate_corpus(corpus, catalog)
    extractor.export_api_stats(corpus, args.out)
    return 0


def _parse_budget(raw: str) -> float:
    value = float(raw)
    if value <= 0:
        raise UsageError(f"budget must be positive, got {raw}")
    return value


def _run_selection(args, select_fn) -> int:
    corpus = _load_corpus_with_stats(args.input)
    config = dsel.SelectionConfig(
        n=_parse_budget(args.budget),
        buckets=args.buckets,
        tau=args.tau,
        seed=getattr(args, "seed", 0),
    )
    result = select_fn(corpus, config)
    payload = {
        "indices": result.indices,
        "api_coverage": result.api_coverage,
        "jsd": result.jsd,
        "per_iteration_gain": result.per_iteration_gain,
        "tau_exceeded": (result.jsd > config.tau) if config.tau is not None else None,
    }
    Path(args.out).write_text(json.dumps(payload, indent=2, sort_keys=True) + "\n")
    return 0


def cmd_select(args) -> int:
    return _run_selection(args, dsel.select_top_api)


def cmd_select_random(args) -> int:
    return _run_selection(args, dsel.select_random)


def cmd_synth(args) -> int:
    spec = synthbench.SynthSpec(n_cases=args.cases, n_apis=args.apis, seed=args.seed)
    corpus = synthbench.make_corpus(spec)
    save_corpus(corpus, args.out)
    if args.stats:
        extractor.export_api_stats(corpus, args.stats)
    return 0


def cmd_catalog(args) -> int:
    tutorials, _ = ingest(args.tutorials)
    catalog = apimodel.build_catalog(args.library, args.docs, tutorials, args.cap)
    apimodel.save_catalog(catalog, args.out)
    logger.info(
        "catalog: %d basic, %d advanced",
        len(catalog.basic_records()),
        len(catalog.advanced_records()),
    )
    return 0


def cmd_skeleton(args) -> int:
    skeletons = []
    for i in range(args.count):
        seed = derive_seed(args.seed, f"skeleton:{i}")
        keywords = skdsl.sample_keywords(seed, args.max_keywords)
        skeletons.append(skdsl.generate(keywords, seed))
    skdsl.save_skeletons(skeletons, args.out)
    return 0


def cmd_prompts(args) -> int:
    catalog = apimodel.load_catalog(args.catalog)
    specs = []
    for i in range(args.count):
        seed = derive_seed(args.seed, f"prompt:{args.kind}:{i}")
        skeleton_text = None
        if args.skeletons:
            kw = skdsl.sample_keywords(derive_seed(seed, "keywords"), args.max_keywords)
            skeleton_text = skdsl.generate(kw, derive_seed(seed, "skeleton")).standardized
        specs.append(
            promptgen.PromptSpec(
                library=catalog.library,
                kind=args.kind,
                apis=promptgen.sample_api_set(catalog, args.kind, args.n_apis, seed),
                skeleton=skeleton_text,
                seed=seed,
            )
        )
    promptgen.save_prompts(promptgen.build_prompt_rows(specs), args.out)
    return 0


def cmd_generate(args) -> int:
    prompts = promptgen.load_prompts(args.prompts)
    config = genclient.GenConfig(
        endpoint=args.endpoint,
        model=args.model,
        temperature=args.temperature,
        top_p=args.top_p,
        max_tokens=args.max_tokens,
        parallelism=args.parallelism,
        retries=args.retries,
    )
    records = genclient.generate_batch(prompts, config)
    _write_jsonl(genclient.records_to_rows(records), args.out)
    return 0


def cmd_validate(args) -> int:
    prompts = promptgen.load_prompts(args.prompts)
    with open(args.gen, encoding="utf-8") as fh:
        gen_rows = [json.loads(line) for line in fh if line.strip()]
    records = genclient.rows_to_records(gen_rows)
    config = validator.ValidatorConfig(threshold_t=args.t)
    report = validator.validate(records, [p["apis"] for p in prompts], config)
    Path(args.out).write_text(
        json.dumps(validator.report_to_dict(report), indent=2, sort_keys=True) + "\n"
    )
    if args.accepted:
        validator.export_accepted(report, records, args.accepted)
    return 0


def cmd_score(args) -> int:
    if args.metric == "codebleu":
        with open(args.inputs, encoding="utf-8") as fh:
            pairs = [json.loads(line) for line in fh if line.strip()]
        scores = [metrics.code_bleu(p["candidate"], p["reference"]) for p in pairs]
        payload = {"metric": "codebleu", "scores": scores, "mean": sum(scores) / len(scores)}
    elif args.metric == "passk":
        data = json.loads(Path(args.inputs).read_text())
        payload = {"metric": "passk", "value": metrics.pass_at_k(data["rows"], args.k)}
    elif args.metric in ("silhouette", "ch"):
        data = json.loads(Path(args.inputs).read_text())
        points = metrics.LabeledPoints(points=data["points"], labels=data["labels"])
        fn = metrics.silhouette if args.metric == "silhouette" else metrics.calinski_harabasz
        payload = {"metric": args.metric, "value": fn(points)}
    else:
        raise UsageError(f"unknown metric {args.metric!r}")
    Path(args.out).write_text(json.dumps(payload, indent=2, sort_keys=True) + "\n")
    return 0


def _pipeline_config(args) -> PipelineConfig:
    config = PipelineConfig.from_file(args.config) if args.config else PipelineConfig()
    for key, value in args.set or []:
        config.override(key, value)
    if args.seed is not None:
        config.override("seed", args.seed)
    if args.out_dir:
        config.override("out.dir", args.out_dir)
    return config


def cmd_pipeline_dsel(args) -> int:
    report = run_dsel_pipeline(_pipeline_config(args))
    logger.info(
        "dsel pipeline: coverage %.4f (random %.4f), jsd %.4f",
        report["api_coverage"],
        report["baseline_random"]["api_coverage"],
        report["jsd"],
    )
    return 0


def cmd_pipeline_dgen(args) -> int:
    report = run_dgen_pipeline(_pipeline_config(args))
    logger.info("dgen pipeline: %d/%d accepted", report["accepted"], report["prompts"])
    return 0


def _key_value(raw: str) -> tuple[str, str]:
    if "=" not in raw:
        raise argparse.ArgumentTypeError(f"expected key=value, got {raw!r}")
    key, _, value = raw.partition("=")
    return key.strip(), value.strip()


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="apisynth", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("ingest", help="read corpus JSONL, normalize ids")
    p.add_argument("--input", required=True)
    p.add_argument("--source", default="")
    p.add_argument("--out", required=True)
    p.add_argument("--rejects")
    p.set_defaults(fn=cmd_ingest)

    p = sub.add_parser("filter", help="drop unparsable or overlong examples")
    p.add_argument("--input", required=True)
    p.add_argument("--source", default="")
    p.add_argument("--max-tokens", type=int, required=True, dest="max_tokens")
    p.add_argument("--out", required=True)
    p.add_argument("--rejects")
    p.set_defaults(fn=cmd_filter)

    p = sub.add_parser("extract", help="export per-example API stats")
    p.add_argument("--input", required=True)
    p.add_argument("--source", default="")
    p.add_argument("--catalog")
    p.add_argument("--out", required=True)
    p.set_defaults(fn=cmd_extract)

    p = sub.add_parser("select", help="coverage-maximal subset selection")
    p.add_argument("--input", required=True, help="api_stats.jsonl")
    p.add_argument("--budget", required=True, help="fraction (0.05) or count (1234)")
    p.add_argument("--buckets", type=int, default=dsel.DEFAULT_BUCKETS)
    p.add_argument("--tau", type=float)
    p.add_argument("--out", required=True)
    p.set_defaults(fn=cmd_select)

    p = sub.add_parser("select-random", help="seeded random baseline selection")
    p.add_argument("--input", required=True)
    p.add_argument("--budget", required=True)
    p.add_argument("--buckets", type=int, default=dsel.DEFAULT_BUCKETS)
    p.add_argument("--tau", type=float)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True)
    p.set_defaults(fn=cmd_select_random)

    p = sub.add_parser("synth", help="deterministic synthetic benchmark corpus")
    p.add_argument("--cases", type=int, required=True)
    p.add_argument("--apis", type=int, required=True)
    p.add_argument("--seed", type=int, default=42)
    p.add_argument("--out", required=True)
    p.add_argument("--stats", help="also export api_stats JSONL")
    p.set_defaults(fn=cmd_synth)

    p = sub.add_parser("catalog", help="build tiered API catalog from docs + tutorials")
    p.add_argument("--library", required=True)
    p.add_argument("--docs", required=True)
    p.add_argument("--tutorials", required=True)
    p.add_argument("--cap", type=int, default=apimodel.DEFAULT_BASIC_CAP)
    p.add_argument("--out", required=True)
    p.set_defaults(fn=cmd_catalog)

    p = sub.add_parser("skeleton", help="generate standardized code skeletons")
    p.add_argument("--count", type=int, required=True)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--max-keywords", type=int, default=skdsl.DEFAULT_MAX_KEYWORDS, dest="max_keywords")
    p.add_argument("--out", required=True)
    p.set_defaults(fn=cmd_skeleton)

    p = sub.add_parser("prompts", help="sample API sets and assemble prompts")
    p.add_argument("--catalog", required=True)
    p.add_argument("--kind", choices=[promptgen.KIND_BASIC, promptgen.KIND_MIX], required=True)
    p.add_argument("--count", type=int, required=True)
    p.add_argument("--n-apis", type=int, default=promptgen.DEFAULT_APIS_PER_PROMPT, dest="n_apis")
    p.add_argument("--skeletons", action="store_true")
    p.add_argument("--max-keywords", type=int, default=skdsl.DEFAULT_MAX_KEYWORDS, dest="max_keywords")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True)
    p.set_defaults(fn=cmd_prompts)

    p = sub.add_parser("generate", help="drive a chat-completion endpoint")
    p.add_argument("--prompts", required=True)
    p.add_argument("--endpoint", required=True)
    p.add_argument("--model", required=True)
    p.add_argument("--temperature", type=float, default=0.8)
    p.add_argument("--top-p", type=float, default=1.0, dest="top_p")
    p.add_argument("--max-tokens", type=int, default=4096, dest="max_tokens")
    p.add_argument("--parallelism", type=int, default=8)
    p.add_argument("--retries", type=int, default=2)
    p.add_argument("--out", required=True)
    p.set_defaults(fn=cmd_generate)

    p = sub.add_parser("validate", help="format/length/content checks")
    p.add_argument("--gen", required=True)
    p.add_argument("--prompts", required=True)
    p.add_argument("--t", type=float, default=0.6)
    p.add_argument("--out", required=True)
    p.add_argument("--accepted", help="export accepted pairs as corpus JSONL")
    p.set_defaults(fn=cmd_validate)

    p = sub.add_parser("score", help="metrics over files")
    p.add_argument("--metric", choices=["codebleu", "passk", "silhouette", "ch"], required=True)
    p.add_argument("--inputs", required=True)
    p.add_argument("--k", type=int, default=1)
    p.add_argument("--out", required=True)
    p.set_defaults(fn=cmd_score)

    for name, fn in (("pipeline-dsel", cmd_pipeline_dsel), ("pipeline-dgen", cmd_pipeline_dgen)):
        p = sub.add_parser(name, help=f"run the full {name.split('-')[1]} pipeline")
        p.add_argument("--config", help="flat key-value config file")
        p.add_argument("--set", action="append", type=_key_value, metavar="KEY=VALUE")
        p.add_argument("--seed", type=int)
        p.add_argument("--out-dir", dest="out_dir")
        p.set_defaults(fn=fn)

    return parser


def main(argv: list[str] | None = None) -> int:
    logging.basicConfig(level=logging.INFO, format="%(levelname)s %(name)s: %(message)s")
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.fn(args)
    except UsageError as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return 2
    except (PipelineError, OSError, ValueError, apimodel.CatalogError, skdsl.SkeletonError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
