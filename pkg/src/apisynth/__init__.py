"""API-coverage-guided SFT dataset selection and generation toolkit.

Two pipelines: subset selection over an existing corpus (maximize unique
API coverage under length-bucket quotas) and domain dataset generation
(tiered API catalogs, keyword-driven code skeletons, prompt assembly, LLM
batch generation, and validation), plus an evaluation metrics suite.
"""

from .corpus import Corpus, RejectRecord, SftExample, filter_corpus, ingest, tokenize
from .dsel import (
    BucketPlan,
    SelectionConfig,
    SelectionResult,
    js_divergence,
    plan_buckets,
    select_random,
    select_top_api,
)
from .extractor import (
    ApiUsage,
    cyclomatic_complexity,
    extract_api_usages,
    syntax_check,
)
from .apimodel import ApiCatalog, ApiRecord, build_catalog, load_catalog, save_catalog
from .skdsl import Skeleton, generate, sample_keywords, standardize
from .promptgen import PromptSpec, assemble_prompt, sample_api_set
from .genclient import GenConfig, GenerationRecord, StubServer, generate_batch
from .validator import ValidationReport, ValidatorConfig, pass_rate_curve, validate
from .metrics import (
    CodeBleuWeights,
    LabeledPoints,
    calinski_harabasz,
    code_bleu,
    pass_at_k,
    silhouette,
)
from .synthbench import SynthSpec, make_corpus

__version__ = "0.1.0"
