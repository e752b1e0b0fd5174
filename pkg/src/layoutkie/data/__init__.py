from .documents import Document, GoldEntity, TextBlock
from .tokenizer import Vocabulary, default_vocab
from .generator import GeneratorConfig, generate
from .transforms import rotate, transform_order
from .jsonl import read_jsonl, write_jsonl
from .featurize import DocumentFeatures, featurize, featurize_batch, class_list

__all__ = [
    "Document",
    "GoldEntity",
    "TextBlock",
    "Vocabulary",
    "default_vocab",
    "GeneratorConfig",
    "generate",
    "transform_order",
    "rotate",
    "read_jsonl",
    "write_jsonl",
    "DocumentFeatures",
    "featurize",
    "featurize_batch",
    "class_list",
]
