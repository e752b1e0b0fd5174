"""JSONL dataset serialization: one document object per line, UTF-8.

Schema: {page:{w,h}, blocks:[{id,text,quad:[x1,y1,...,x4,y4]}], order:[ids],
entities:[{class,block_ids}], links:[[head,head]]}. Unknown top-level
fields round-trip untouched. Writes go through a temp file plus rename.
"""

from __future__ import annotations

import json
import os
import tempfile

from .documents import Document, GoldEntity, SchemaError, TextBlock

__all__ = ["read_jsonl", "write_jsonl", "doc_to_record", "doc_from_record"]

REQUIRED = ("page", "blocks", "order")
KNOWN = set(REQUIRED) | {"entities", "links", "split"}


def doc_to_record(doc: Document) -> dict:
    rec = {
        "page": {"w": doc.page_w, "h": doc.page_h},
        "blocks": [
            {"id": b.block_id, "text": b.text, "quad": [float(v) for v in b.quad.reshape(-1)]}
            for b in doc.blocks
        ],
        "order": list(doc.order),
        "entities": [{"class": e.class_name, "block_ids": list(e.block_ids)} for e in doc.entities],
        "links": [list(l) for l in doc.links],
    }
    if doc.split:
        rec["split"] = doc.split
    rec.update(doc.extra)
    return rec


def doc_from_record(rec: dict) -> Document:
    for key in REQUIRED:
        if key not in rec:
            raise SchemaError(f"missing required field {key!r}")
    blocks = [TextBlock(b["id"], b["text"], _quad(b["quad"])) for b in rec["blocks"]]
    return Document(
        page_w=rec["page"]["w"],
        page_h=rec["page"]["h"],
        blocks=blocks,
        order=list(rec["order"]),
        entities=[GoldEntity(e["class"], list(e["block_ids"])) for e in rec.get("entities", [])],
        links=[tuple(l) for l in rec.get("links", [])],
        split=rec.get("split", ""),
        extra={k: v for k, v in rec.items() if k not in KNOWN},
    )


def _quad(vals):
    if len(vals) != 8:
        raise SchemaError(f"quad must hold 8 coordinates, got {len(vals)}")
    return [[vals[0], vals[1]], [vals[2], vals[3]], [vals[4], vals[5]], [vals[6], vals[7]]]


def read_jsonl(path) -> list[Document]:
    docs = []
    with open(path, encoding="utf-8") as f:
        for lineno, line in enumerate(f, start=1):
            line = line.strip()
            if not line:
                continue
            try:
                rec = json.loads(line)
            except json.JSONDecodeError as exc:
                raise SchemaError(f"{path}:{lineno}: malformed JSON: {exc}") from exc
            try:
                docs.append(doc_from_record(rec))
            except (SchemaError, KeyError, TypeError) as exc:
                raise SchemaError(f"{path}:{lineno}: {exc}") from exc
    return docs


def write_jsonl(docs, path) -> None:
    path = os.fspath(path)
    d = os.path.dirname(path) or "."
    os.makedirs(d, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=d, suffix=".tmp")
    try:
        with os.fdopen(fd, "w", encoding="utf-8") as f:
            for doc in docs:
                f.write(json.dumps(doc_to_record(doc), sort_keys=True) + "\n")
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise
