"""Corpus toolkit for tag-and-copy machine translation experiments.

Pipeline pieces: parallel corpus handling, diagonal-prior word alignment,
translation-table extraction, entity linking with knowledge-graph
hypernyms, entity tagging templates with detagging, and the evaluation
suite (BLEU, copy accuracy, per-POS accuracy with significance tests).
"""

__version__ = "0.1.0"

from .corpus import NormProfile, ParallelCorpus, SentencePair, read_parallel, split_holdout
from .align import AlignModel, corpus_perplexity, symmetrize, train_alignment, viterbi_align
from .lexicon import TranslationTable, build_translation_table, translate_word
from .link import EntityMention, Gazetteer, MentionBundle, SpotlightClient, project_entity_span
from .template import TagVocabulary, TemplateMethod, detag, tag_corpus
from .metrics import bleu, copy_accuracy, pos_accuracy, pos_project, significance

__all__ = [
    "AlignModel",
    "EntityMention",
    "Gazetteer",
    "MentionBundle",
    "NormProfile",
    "ParallelCorpus",
    "SentencePair",
    "SpotlightClient",
    "TagVocabulary",
    "TemplateMethod",
    "TranslationTable",
    "bleu",
    "build_translation_table",
    "copy_accuracy",
    "corpus_perplexity",
    "detag",
    "pos_accuracy",
    "pos_project",
    "project_entity_span",
    "read_parallel",
    "significance",
    "split_holdout",
    "symmetrize",
    "tag_corpus",
    "train_alignment",
    "translate_word",
    "viterbi_align",
]
