"""Pipeline orchestration and configuration.

Config files are flat key-value text with dotted section prefixes
(`dsel.buckets = 40`); CLI flags override file values, unknown keys are
rejected, and the effective config plus input hashes are echoed into every
output artifact so identical inputs reproduce identical bytes.
"""

from __future__ import annotations

import hashlib
import json
import logging
import random
from dataclasses import dataclass, field
from pathlib import Path

from . import apimodel, dsel, extractor, genclient, promptgen, skdsl, validator
from .corpus import Corpus, ingest, filter_corpus, save_corpus, save_rejects

logger = logging.getLogger(__name__)

KNOWN_KEYS = {
    "seed",
    "corpus.input",
    "corpus.source",
    "corpus.max_tokens",
    "dsel.budget",
    "dsel.buckets",
    "dsel.tau",
    "dgen.library",
    "dgen.catalog",
    "dgen.count",
    "dgen.apis_per_prompt",
    "dgen.variant",
    "dgen.skeleton",
    "dgen.max_keywords",
    "gen.endpoint",
    "gen.model",
    "gen.temperature",
    "gen.top_p",
    "gen.max_tokens",
    "gen.parallelism",
    "gen.retries",
    "validate.min_tokens",
    "validate.max_tokens",
    "validate.threshold",
    "validate.comparison",
    "out.dir",
}

VARIANTS = ("basic", "mix", "comb", "comb_both")


class UsageError(ValueError):
    """Bad flags or config; maps to exit code 2."""


class PipelineError(RuntimeError):
    """A stage failed; maps to exit code 1."""


@dataclass
class PipelineConfig:
    values: dict[str, str] = field(default_factory=dict)

    @classmethod
    def from_file(cls, path: str | Path) -> "PipelineConfig":
        values = {}
        for lineno, line in enumerate(Path(path).read_text(encoding="utf-8").split("\n")):
            stripped = line.strip()
            if not stripped or stripped.startswith("#"):
                continue
            if "=" not in stripped:
                raise UsageError(f"config line {lineno} is not `key = value`: {line!r}")
            key, _, value = stripped.partition("=")
            key = key.strip()
            if key not in KNOWN_KEYS:
                raise UsageError(f"unknown config key {key!r} (line {lineno})")
            values[key] = value.strip()
        return cls(values)

    def override(self, key: str, value) -> None:
        if key not in KNOWN_KEYS:
            raise UsageError(f"unknown config key {key!r}")
        if value is not None:
            self.values[key] = str(value)

    def get(self, key: str, default=None, cast=str):
        if key not in KNOWN_KEYS:
            raise UsageError(f"unknown config key {key!r}")
        if key not in self.values:
            return default
        raw = self.values[key]
        if cast is bool:
            return raw.lower() in ("1", "true", "yes", "on")
        return cast(raw)

    def require(self, key: str, cast=str):
        value = self.get(key, None, cast)
        if value is None:
            raise UsageError(f"config key {key!r} is required")
        return value

    def effective(self) -> dict[str, str]:
        return dict(sorted(self.values.items()))


def derive_seed(root_seed: int, stage: str) -> int:
    """Fan one root seed out per stage by name hashing."""
    digest = hashlib.sha256(f"{root_seed}:{stage}".encode("utf-8")).hexdigest()
    return int(digest[:8], 16)


def file_sha256(path: str | Path) -> str:
    return hashlib.sha256(Path(path).read_bytes()).hexdigest()


def _write_json(payload: dict, path: Path) -> None:
    path.write_text(json.dumps(payload, indent=2, sort_keys=True) + "\n", encoding="utf-8")


# ---------------------------------------------------------------------------
# Dsel pipeline: ingest -> filter -> extract -> select
# ---------------------------------------------------------------------------


def run_dsel_pipeline(config: PipelineConfig) -> dict:
    out_dir = Path(config.get("out.dir", "dsel-out"))
    out_dir.mkdir(parents=True, exist_ok=True)
    input_path = config.require("corpus.input")
    budget = config.require("dsel.budget", float)
    buckets = config.get("dsel.buckets", dsel.DEFAULT_BUCKETS, int)
    tau = config.get("dsel.tau", None, float)
    seed = config.get("seed", 0, int)

    try:
        corpus, ingest_rejects = ingest(input_path, config.get("corpus.source", ""))
    except OSError as exc:
        raise PipelineError(f"ingest: {exc}") from exc
    max_tokens = config.get("corpus.max_tokens", None, int)
    if max_tokens is not None:
        corpus, filter_rejects = filter_corpus(corpus, max_tokens)
    else:
        filter_rejects = []
    if len(corpus) == 0:
        raise PipelineError("select: no examples survived ingestion/filtering")

    extractor.annotate_corpus(corpus)
    extractor.export_api_stats(corpus, out_dir / "api_stats.jsonl")

    sel_config = dsel.SelectionConfig(n=budget, buckets=buckets, tau=tau, seed=seed)
    try:
        result = dsel.select_top_api(corpus, sel_config)
        baseline = dsel.select_random(
            corpus,
            dsel.SelectionConfig(
                n=budget, buckets=buckets, tau=tau, seed=derive_seed(seed, "random-baseline")
            ),
        )
    except ValueError as exc:
        raise PipelineError(f"select: {exc}") from exc

    chosen = set(result.indices)
    subset = Corpus(
        examples=[ex for ex in corpus if ex.id in chosen], source_name=corpus.source_name
    )
    save_corpus(subset, out_dir / "subset.jsonl")
    save_rejects(ingest_rejects + filter_rejects, out_dir / "rejects.jsonl")

    report = {
        "indices": result.indices,
        "api_coverage": result.api_coverage,
        "jsd": result.jsd,
        "per_iteration_gain": result.per_iteration_gain,
        "tau_exceeded": (result.jsd > tau) if tau is not None else None,
        "baseline_random": {
            "api_coverage": baseline.api_coverage,
            "jsd": baseline.jsd,
        },
        "config": config.effective(),
        "input_sha256": file_sha256(input_path),
    }
    _write_json(report, out_dir / "selection.json")
    return report


# ---------------------------------------------------------------------------
# Dgen pipeline: catalog -> skeletons -> prompts -> generate -> validate
# ---------------------------------------------------------------------------


def _prompt_batch(
    catalog: apimodel.ApiCatalog,
    kind: str,
    count: int,
    n_apis: int,
    use_skeleton: bool,
    max_keywords: int,
    seed: int,
    stage: str,
) -> list[promptgen.PromptSpec]:
    specs = []
    for i in range(count):
        prompt_seed = derive_seed(seed, f"{stage}:{kind}:{i}")
        skeleton_text = None
        if use_skeleton:
            kw = skdsl.sample_keywords(derive_seed(prompt_seed, "keywords"), max_keywords)
            skeleton_text = skdsl.generate(kw, derive_seed(prompt_seed, "skeleton")).standardized
        specs.append(
            promptgen.PromptSpec(
                library=catalog.library,
                kind=kind,
                apis=promptgen.sample_api_set(catalog, kind, n_apis, prompt_seed),
                skeleton=skeleton_text,
                seed=prompt_seed,
            )
        )
    return specs


def build_variant_prompts(
    catalog: apimodel.ApiCatalog,
    variant: str,
    count: int,
    n_apis: int,
    use_skeleton: bool,
    max_keywords: int,
    seed: int,
) -> list[promptgen.PromptSpec]:
    """BASIC and MIX are single batches; COMB concatenates one of each;
    COMB-BOTH draws half from a skeleton-on COMB pool and half from a
    skeleton-off one."""
    if variant == "basic":
        return _prompt_batch(
            catalog, promptgen.KIND_BASIC, count, n_apis, use_skeleton, max_keywords, seed, "basic"
        )
    if variant == "mix":
        return _prompt_batch(
            catalog, promptgen.KIND_MIX, count, n_apis, use_skeleton, max_keywords, seed, "mix"
        )
    if variant == "comb":
        half = count // 2
        return _prompt_batch(
            catalog, promptgen.KIND_BASIC, half, n_apis, use_skeleton, max_keywords, seed, "comb"
        ) + _prompt_batch(
            catalog, promptgen.KIND_MIX, count - half, n_apis, use_skeleton, max_keywords, seed, "comb"
        )
    if variant == "comb_both":
        pool_on = build_variant_prompts(
            catalog, "comb", count, n_apis, True, max_keywords, derive_seed(seed, "pool-on")
        )
        pool_off = build_variant_prompts(
            catalog, "comb", count, n_apis, False, max_keywords, derive_seed(seed, "pool-off")
        )
        half = count // 2
        rng = random.Random(derive_seed(seed, "comb-both"))
        return rng.sample(pool_on, half) + rng.sample(pool_off, count - half)
    raise UsageError(f"unknown dataset variant {variant!r}; expected one of {VARIANTS}")


def run_dgen_pipeline(config: PipelineConfig, stub_script: list[dict] | None = None) -> dict:
    out_dir = Path(config.get("out.dir", "dgen-out"))
    out_dir.mkdir(parents=True, exist_ok=True)
    catalog_path = config.require("dgen.catalog")
    try:
        catalog = apimodel.load_catalog(catalog_path)
    except (OSError, apimodel.CatalogError) as exc:
        raise PipelineError(f"catalog: {exc}") from exc

    variant = config.get("dgen.variant", "comb")
    if variant not in VARIANTS:
        raise UsageError(f"unknown dataset variant {variant!r}; expected one of {VARIANTS}")
    count = config.get("dgen.count", 100, int)
    n_apis = config.get("dgen.apis_per_prompt", promptgen.DEFAULT_APIS_PER_PROMPT, int)
    use_skeleton = config.get("dgen.skeleton", True, bool)
    max_keywords = config.get("dgen.max_keywords", skdsl.DEFAULT_MAX_KEYWORDS, int)
    seed = config.get("seed", 0, int)

    specs = build_variant_prompts(catalog, variant, count, n_apis, use_skeleton, max_keywords, seed)
    prompt_rows = promptgen.build_prompt_rows(specs)
    promptgen.save_prompts(prompt_rows, out_dir / "prompts.jsonl")

    endpoint = config.get("gen.endpoint", "stub")
    gen_kwargs = dict(
        model=config.get("gen.model", "stub-model"),
        temperature=config.get("gen.temperature", 0.8, float),
        top_p=config.get("gen.top_p", 1.0, float),
        max_tokens=config.get("gen.max_tokens", 4096, int),
        parallelism=config.get("gen.parallelism", 4, int),
        retries=config.get("gen.retries", 2, int),
    )
    try:
        if endpoint == "stub":
            with genclient.StubServer(script=stub_script) as stub:
                gen_config = genclient.GenConfig(endpoint=stub.endpoint, **gen_kwargs)
                records = genclient.generate_batch(prompt_rows, gen_config)
        else:
            gen_config = genclient.GenConfig(endpoint=endpoint, **gen_kwargs)
            records = genclient.generate_batch(prompt_rows, gen_config)
    except Exception as exc:
        raise PipelineError(f"generate: {exc}") from exc

    gen_rows = genclient.records_to_rows(records)
    with (out_dir / "gen.jsonl").open("w", encoding="utf-8") as fh:
        for row in gen_rows:
            fh.write(json.dumps(row, sort_keys=True) + "\n")

    val_config = validator.ValidatorConfig(
        min_tokens=config.get("validate.min_tokens", 32, int),
        max_tokens=config.get("validate.max_tokens", 4096, int),
        threshold_t=config.get("validate.threshold", 0.6, float),
        comparison=config.get("validate.comparison", validator.COMPARISON_AT_LEAST),
    )
    required = [row["apis"] for row in prompt_rows]
    report = validator.validate(records, required, val_config)
    accepted = validator.export_accepted(report, records, out_dir / "accepted.jsonl")

    payload = {
        "variant": variant,
        "prompts": len(prompt_rows),
        "accepted": accepted,
        "validation": validator.report_to_dict(report),
        "config": config.effective(),
        "catalog_sha256": file_sha256(catalog_path),
    }
    _write_json(payload, out_dir / "report.json")
    return payload
