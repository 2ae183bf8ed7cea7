"""Synthetic training-data toolkit: generation recipes, mixing and packing,
diversity metrics, scaling fits, and an evaluation harness."""

from ._core import (
    Chunk,
    Corpus,
    CrossoverEstimate,
    Document,
    FlopEstimate,
    ScalingFit,
    SynthkitError,
    chunk_document,
    confidence_band,
    count_tokens,
    entity_pairs,
    extrapolate_crossover,
    fit_log_linear,
    fitted_accuracy,
    flop_estimate,
    group_similarity,
    jl_project,
    load_corpus,
    pack_texts,
    parse_answer,
    parse_entity_extraction,
    parse_qa_pairs,
    parse_strategies,
    render_mcqa_prompt,
    render_template,
    run,
    template_text,
    tokenize,
    unique_ngram_ratio,
    vendi_score,
)

__all__ = [
    "Chunk",
    "Corpus",
    "CrossoverEstimate",
    "Document",
    "FlopEstimate",
    "ScalingFit",
    "SynthkitError",
    "chunk_document",
    "confidence_band",
    "count_tokens",
    "entity_pairs",
    "extrapolate_crossover",
    "fit_log_linear",
    "fitted_accuracy",
    "flop_estimate",
    "group_similarity",
    "jl_project",
    "load_corpus",
    "pack_texts",
    "parse_answer",
    "parse_entity_extraction",
    "parse_qa_pairs",
    "parse_strategies",
    "render_mcqa_prompt",
    "render_template",
    "run",
    "template_text",
    "tokenize",
    "unique_ngram_ratio",
    "vendi_score",
]
