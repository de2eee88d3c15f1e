"""Bundled example models."""
from __future__ import annotations

from importlib.resources import files

from .services import KnowledgeBase

DATA = files("bpkb") / "data"


def handle_order_paths() -> dict:
    d = DATA / "handle_order"
    return {"bps": d / "ho.bps", "triples": d / "bro.dl", "ann": d / "ho.ann"}


def handle_order(budget: int | None = None, ann_text: str | None = None) -> KnowledgeBase:
    """The order-handling model with its ontology and annotations.
    ``ann_text`` replaces the bundled annotations."""
    p = handle_order_paths()
    ann = p["ann"].read_text() if ann_text is None else ann_text
    return KnowledgeBase.from_texts(p["bps"].read_text(), p["triples"].read_text(), ann, budget)


def read(name: str) -> str:
    return (DATA / name).read_text()
