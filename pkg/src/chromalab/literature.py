"""Requirement analysis and article retrieval.

Turns a requirement into five search keywords, ranks a local corpus by
keyword overlap, and scores article relevance through the gateway. The
corpus is a directory with an ``index.json`` (array of
``{id, title, abstract, fulltext_path?}``) plus UTF-8 text files.
"""

import json
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from pathlib import Path
from typing import Optional, Sequence, Union

from .domain import ArticleRecord
from .errors import (
    EmptyCorpus,
    ExhaustedRetries,
    FulltextMissing,
    MalformedOutput,
    NotInCorpus,
)
from .gateway import Gateway, OutputSchema, PromptTemplate

__all__ = [
    "Corpus",
    "register_templates",
    "generate_keywords",
    "search",
    "score_relevance",
    "score_articles",
    "filter_relevant",
    "fetch_fulltext",
]

KEYWORDS_TEMPLATE = "keywords.v1"
RELEVANCE_TEMPLATE = "article_relevance.v1"

_KEYWORDS_SCHEMA = OutputSchema(
    kind="array",
    items=OutputSchema(kind="string", non_empty=True),
    min_items=5,
    max_items=5,
    distinct_ci=True,
)
_PERCENTAGE_SCHEMA = OutputSchema(kind="number", minimum=0, maximum=100)


def register_templates(gateway: Gateway) -> None:
    gateway.register_schema("keywords_list", _KEYWORDS_SCHEMA)
    gateway.register_schema("percentage", _PERCENTAGE_SCHEMA)
    gateway.register_template(PromptTemplate(
        template_id=KEYWORDS_TEMPLATE,
        body=(
            "You are planning a literature search for the following experimental "
            "requirement:\n{requirement}\n\n"
            "Reply with a JSON array of exactly five distinct search keywords covering "
            "the requirement."
        ),
        schema_id="keywords_list",
    ))
    gateway.register_template(PromptTemplate(
        template_id=RELEVANCE_TEMPLATE,
        body=(
            "Requirement:\n{requirement}\n\n"
            "Article {article_id}\nTitle: {title}\nAbstract: {abstract}\n\n"
            "How relevant is this article to the requirement? Reply with a single JSON "
            "number from 0 to 100 (a percentage)."
        ),
        schema_id="percentage",
    ))


@dataclass
class Corpus:
    """An on-disk article collection with an in-memory metadata index."""

    root: Path
    articles: dict[str, ArticleRecord]
    fulltext_paths: dict[str, Path]

    @classmethod
    def load(cls, root: Union[str, Path]) -> "Corpus":
        root = Path(root)
        with open(root / "index.json", encoding="utf-8") as fh:
            entries = json.load(fh)
        articles: dict[str, ArticleRecord] = {}
        fulltext_paths: dict[str, Path] = {}
        for entry in entries:
            aid = entry["id"]
            if aid in articles:
                raise ValueError(f"duplicate article id {aid!r} in corpus index")
            articles[aid] = ArticleRecord(id=aid, title=entry["title"], abstract=entry["abstract"])
            if entry.get("fulltext_path"):
                fulltext_paths[aid] = root / entry["fulltext_path"]
        return cls(root=root, articles=articles, fulltext_paths=fulltext_paths)

    def __len__(self) -> int:
        return len(self.articles)


def generate_keywords(gateway: Gateway, requirement: str) -> list[str]:
    """Ask the gateway for exactly five distinct search keywords."""
    if not requirement.strip():
        raise ValueError("requirement must be non-empty")
    try:
        result = gateway.complete(KEYWORDS_TEMPLATE, {"requirement": requirement})
    except ExhaustedRetries as exc:
        raise MalformedOutput(f"keyword generation never produced five keywords: {exc}") from exc
    return [str(k) for k in result.value]


def _match_score(article: ArticleRecord, keywords: Sequence[str]) -> float:
    # Normalized term overlap; a title hit counts twice an abstract hit.
    title = article.title.lower()
    abstract = article.abstract.lower()
    total = 0.0
    for kw in keywords:
        needle = kw.lower()
        if needle in title:
            total += 2.0
        elif needle in abstract:
            total += 1.0
    return total / (2.0 * len(keywords)) if keywords else 0.0


def search(corpus: Corpus, keywords: Sequence[str], k: int) -> list[ArticleRecord]:
    """Top-k articles by keyword match, ties broken by ascending id."""
    if k < 1:
        raise ValueError("k must be >= 1")
    if not corpus.articles:
        raise EmptyCorpus(f"corpus at {corpus.root} indexes no articles")
    ranked = sorted(
        corpus.articles.values(),
        key=lambda a: (-_match_score(a, keywords), a.id),
    )
    return ranked[:k]


def score_relevance(gateway: Gateway, article: ArticleRecord, requirement: str) -> float:
    """Gateway-scored relevance of an article to the requirement, in [0, 1]."""
    result = gateway.complete(RELEVANCE_TEMPLATE, {
        "requirement": requirement,
        "article_id": article.id,
        "title": article.title,
        "abstract": article.abstract,
    })
    return float(result.value) / 100.0


def score_articles(gateway: Gateway, articles: Sequence[ArticleRecord], requirement: str,
                   workers: int = 1) -> list[ArticleRecord]:
    """Score every article's relevance, optionally with concurrent workers.

    The output order matches the input order regardless of worker count.
    """
    if workers <= 1:
        return [a.with_relevance(score_relevance(gateway, a, requirement)) for a in articles]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        scores = list(pool.map(lambda a: score_relevance(gateway, a, requirement), articles))
    return [a.with_relevance(s) for a, s in zip(articles, scores)]


def filter_relevant(items: Sequence, threshold: float = 0.8) -> list:
    """Items whose relevance meets the threshold, original order preserved."""
    for item in items:
        if item.relevance is None:
            raise ValueError(f"item {item!r} carries no relevance value")
    return [item for item in items if item.relevance >= threshold]


def fetch_fulltext(corpus: Corpus, article_id: str) -> str:
    """Full text of an indexed article, verbatim."""
    if article_id not in corpus.articles:
        raise NotInCorpus(f"article {article_id!r} is not indexed")
    path: Optional[Path] = corpus.fulltext_paths.get(article_id)
    if path is None or not path.exists():
        raise FulltextMissing(f"article {article_id!r} has no fulltext file")
    return path.read_text(encoding="utf-8")
