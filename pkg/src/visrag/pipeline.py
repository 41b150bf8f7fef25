"""Classification pipeline: retrieve, assemble the prompt, invoke the
language model, parse the answer into taxonomy labels.

Three experiment modes: raw (question only), category (question plus the
category list), rag (question plus retrieved description blocks, no
category list, since the retrieval itself implies the label space).
Prompt wording is fixed by one versioned template file with {context},
{categories}, {question} placeholders; retrieved blocks render as
"[rank] Species: <name>. <description>" so generated answers stay
attributable to a block.
"""

from __future__ import annotations

import json
import re
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from enum import Enum
from importlib import resources
from pathlib import Path
from typing import Optional, Sequence, Tuple

from .core import RetrievalHit, Taxonomy
from .errors import MissingContext
from .llm import DEFAULT_MAX_TOKENS, LlmRequest
from .store import DEFAULT_K, StoreIndex

DEFAULT_QUESTION = "What is the species of the fish?"
DEFAULT_IN_FLIGHT = 4

# Surface form -> canonical taxonomy term; applied at parse time when the
# target exists in the active taxonomy.
SYNONYMS = {
    "mahi-mahi": "Mahi mahi",
    "mahimahi": "Mahi mahi",
    "dolphinfish": "Mahi mahi",
    "dorado": "Mahi mahi",
    "moonfish": "Opah",
    "marlin": "Billfish",
    "swordfish": "Billfish",
    "sailfish": "Billfish",
    "spearfish": "Billfish",
    "yellowfin": "Yellowfin tuna",
    "bigeye": "Bigeye tuna",
    "skipjack": "Skipjack tuna",
}


class Mode(str, Enum):
    RAW = "raw"
    CATEGORY_LIST = "category"
    RAG = "rag"


@dataclass(frozen=True)
class PromptBundle:
    mode: Mode
    question: str
    context: Tuple[str, ...] = ()
    category_list: Optional[Tuple[str, ...]] = None
    image_ref: Optional[str] = None


@dataclass(frozen=True)
class Prediction:
    raw_text: str
    category: Optional[str]
    species: Optional[str]
    mode: Mode
    hits: Tuple[RetrievalHit, ...] = ()


def load_template(path=None) -> str:
    """Load the prompt template (packaged default unless a path is given)."""
    if path is not None:
        return Path(path).read_text(encoding="utf-8")
    return (
        resources.files("visrag").joinpath("templates/prompt.txt").read_text("utf-8")
    )


def load_default_descriptions() -> dict:
    """Hand-written reference descriptions for the default taxonomy."""
    raw = resources.files("visrag").joinpath("data/descriptions.json").read_text("utf-8")
    return json.loads(raw)


def ordered_categories(taxonomy: Taxonomy) -> Tuple[str, ...]:
    """Categories sorted alphabetically with the catch-all last."""
    rest = sorted(c for c in taxonomy.categories if c != taxonomy.catch_all)
    return tuple(rest) + (taxonomy.catch_all,)


def entry_context_text(entry) -> str:
    return f"Species: {entry.species}. {entry.description}"


def assemble_prompt(
    mode: Mode,
    question: str = DEFAULT_QUESTION,
    taxonomy: Optional[Taxonomy] = None,
    hits: Sequence[RetrievalHit] = (),
    descriptions: Sequence[str] = (),
    image_ref: Optional[str] = None,
) -> PromptBundle:
    """Build the mode-appropriate bundle; rag requires at least one hit and
    keeps descriptions in retrieval rank order."""
    mode = Mode(mode)
    if mode is Mode.RAG:
        if not hits or not descriptions:
            raise MissingContext("rag mode requires at least one retrieved hit")
        if len(hits) != len(descriptions):
            raise MissingContext(
                f"{len(hits)} hits but {len(descriptions)} descriptions"
            )
        return PromptBundle(
            mode=mode,
            question=question,
            context=tuple(descriptions),
            image_ref=image_ref,
        )
    if mode is Mode.CATEGORY_LIST:
        if taxonomy is None:
            raise ValueError("category mode requires a taxonomy")
        return PromptBundle(
            mode=mode,
            question=question,
            category_list=ordered_categories(taxonomy),
            image_ref=image_ref,
        )
    return PromptBundle(mode=mode, question=question, image_ref=image_ref)


def render_prompt(bundle: PromptBundle, template: str) -> str:
    """Deterministic prompt text: context blocks in rank order, then the
    category list if any, then the question."""
    if bundle.context:
        blocks = "".join(
            f"[{rank}] {text}\n" for rank, text in enumerate(bundle.context, start=1)
        )
        context = f"Reference notes:\n{blocks}\n"
    else:
        context = ""
    if bundle.category_list:
        categories = "Possible kinds: " + ", ".join(bundle.category_list) + ".\n\n"
    else:
        categories = ""
    return template.format(
        context=context, categories=categories, question=bundle.question
    )


class AnswerParser:
    """Case-insensitive longest-match scan of generated text against the
    taxonomy lexicon: species terms first, then categories, synonyms folded
    in at their target's tier. Total: unmatched text parses to
    (None, None)."""

    def __init__(self, taxonomy: Taxonomy):
        self.taxonomy = taxonomy
        species = taxonomy.species_lexicon()
        categories = taxonomy.categories
        self._species_terms = [(sp.lower(), sp) for sp in species]
        self._category_terms = [(c.lower(), c) for c in categories]
        for surface, target in SYNONYMS.items():
            if target in species:
                self._species_terms.append((surface, target))
            elif target in categories:
                self._category_terms.append((surface, target))
        self._patterns = {
            surface: re.compile(r"\b" + re.escape(surface) + r"s?\b", re.IGNORECASE)
            for surface, _ in self._species_terms + self._category_terms
        }

    def _best_match(self, text: str, terms) -> Optional[str]:
        best = None  # (surface_len, -start, canonical)
        for surface, canonical in terms:
            m = self._patterns[surface].search(text)
            if m is None:
                continue
            key = (len(surface), -m.start())
            if (
                best is None
                or key > best[0]
                or (key == best[0] and canonical < best[1])
            ):
                best = (key, canonical)
        return best[1] if best else None

    def parse(self, raw_text: str) -> Tuple[Optional[str], Optional[str]]:
        species = self._best_match(raw_text, self._species_terms)
        if species is not None:
            return self.taxonomy.category_of(species), species
        category = self._best_match(raw_text, self._category_terms)
        if category is not None:
            return category, None
        return None, None


def parse_answer(raw_text: str, taxonomy: Taxonomy) -> Tuple[Optional[str], Optional[str]]:
    """One-shot convenience around AnswerParser; returns (category, species)
    with None marking Unresolved."""
    return AnswerParser(taxonomy).parse(raw_text)


def classify(
    index: StoreIndex,
    llm,
    query_embedding,
    image_ref: Optional[str] = None,
    mode: Mode = Mode.RAG,
    k: int = DEFAULT_K,
    taxonomy: Optional[Taxonomy] = None,
    template: Optional[str] = None,
    question: str = DEFAULT_QUESTION,
    max_tokens: int = DEFAULT_MAX_TOKENS,
    parser: Optional[AnswerParser] = None,
) -> Prediction:
    """Run one query through retrieve -> prompt -> generate -> parse."""
    mode = Mode(mode)
    taxonomy = taxonomy if taxonomy is not None else Taxonomy.default()
    template = template if template is not None else load_template()
    parser = parser if parser is not None else AnswerParser(taxonomy)
    if mode is Mode.RAG:
        hits = tuple(index.query(query_embedding, k))
        descriptions = tuple(entry_context_text(index.entry(h.entry_id)) for h in hits)
    else:
        hits = ()
        descriptions = ()
    bundle = assemble_prompt(
        mode=mode,
        question=question,
        taxonomy=taxonomy,
        hits=hits,
        descriptions=descriptions,
        image_ref=image_ref,
    )
    prompt = render_prompt(bundle, template)
    response = llm.generate(
        LlmRequest(prompt=prompt, image_ref=image_ref, max_tokens=max_tokens)
    )
    category, species = parser.parse(response.text)
    return Prediction(
        raw_text=response.text,
        category=category,
        species=species,
        mode=mode,
        hits=hits,
    )


def classify_batch(
    index: StoreIndex,
    llm,
    queries,
    mode: Mode = Mode.RAG,
    k: int = DEFAULT_K,
    taxonomy: Optional[Taxonomy] = None,
    template: Optional[str] = None,
    question: str = DEFAULT_QUESTION,
    max_tokens: int = DEFAULT_MAX_TOKENS,
    max_in_flight: int = DEFAULT_IN_FLIGHT,
):
    """Classify QuerySamples concurrently (bounded fan-out), preserving
    input order in the result list."""
    taxonomy = taxonomy if taxonomy is not None else Taxonomy.default()
    template = template if template is not None else load_template()
    parser = AnswerParser(taxonomy)

    def one(sample):
        return classify(
            index,
            llm,
            sample.embedding,
            image_ref=None,
            mode=mode,
            k=k,
            taxonomy=taxonomy,
            template=template,
            question=question,
            max_tokens=max_tokens,
            parser=parser,
        )

    with ThreadPoolExecutor(max_workers=max(1, max_in_flight)) as pool:
        return list(pool.map(one, queries))
