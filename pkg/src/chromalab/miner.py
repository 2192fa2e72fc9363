"""Two-pass substance extraction, CAS validation, and candidate aggregation.

Pass 1 distills each fulltext into passages about the substances used; pass 2
structures those passages into records. Records whose CAS number fails the
registry checksum are dropped (cheap hallucination firewall) and tallied.
Cross-article aggregation folds records into one ranked candidate per CAS.
"""

import json
import re
from collections import Counter
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Sequence

from .domain import Role, SubstanceRecord, fraction9
from .errors import EmptyList
from .gateway import Gateway, OutputSchema, PromptTemplate
from .literature import Corpus, fetch_fulltext

__all__ = [
    "PassageSet",
    "CandidateList",
    "ExtractionOutcome",
    "MiningResult",
    "register_templates",
    "validate_cas",
    "extract_passages",
    "structure_records",
    "aggregate_candidates",
    "curation_digest",
    "mine_articles",
]

PASSAGES_TEMPLATE = "extract_passages.v1"
RECORDS_TEMPLATE = "structure_records.v1"

_CAS_RE = re.compile(r"^\d{2,7}-\d{2}-\d$")

_PASSAGES_SCHEMA = OutputSchema(
    kind="array",
    items=OutputSchema(kind="string", non_empty=True),
)
_RECORDS_SCHEMA = OutputSchema(
    kind="array",
    items=OutputSchema(
        kind="object",
        required=("cas", "name", "role", "purpose", "relevance"),
        properties={
            "cas": OutputSchema(kind="string", non_empty=True),
            "name": OutputSchema(kind="string", non_empty=True),
            "role": OutputSchema(kind="string", choices=tuple(r.value for r in Role)),
            "purpose": OutputSchema(kind="string", non_empty=True),
            "relevance": OutputSchema(kind="number", minimum=0, maximum=100),
        },
    ),
)


def register_templates(gateway: Gateway) -> None:
    gateway.register_schema("passages_list", _PASSAGES_SCHEMA)
    gateway.register_schema("substance_records", _RECORDS_SCHEMA)
    gateway.register_template(PromptTemplate(
        template_id=PASSAGES_TEMPLATE,
        body=(
            "Read the following article ({article_id}) and extract every passage that "
            "describes a substance used in the experiments and its role.\n\n{fulltext}\n\n"
            "Reply with a JSON array of passage strings; use an empty array if the "
            "article mentions no substances."
        ),
        schema_id="passages_list",
    ))
    gateway.register_template(PromptTemplate(
        template_id=RECORDS_TEMPLATE,
        body=(
            "Structure the following passages from article {article_id} into substance "
            "records.\n\n{passages}\n\n"
            "Reply with a JSON array of objects with fields: cas (CAS registry number), "
            "name, role (one of colorant, additive, solvent, reactor, adjuster), purpose, "
            "and relevance (0-100 score for the stated requirement)."
        ),
        schema_id="substance_records",
    ))


@dataclass(frozen=True)
class PassageSet:
    """Pass-1 output: text spans describing substances in one article."""

    article_id: str
    passages: tuple[str, ...]

    def __post_init__(self):
        object.__setattr__(self, "passages", tuple(self.passages))
        for p in self.passages:
            if not p.strip():
                raise ValueError("passages must be non-empty")


@dataclass(frozen=True)
class ExtractionOutcome:
    """Pass-2 output for one article: valid records plus the rejects tally."""

    records: tuple[SubstanceRecord, ...]
    rejects: int


@dataclass(frozen=True)
class CandidateList:
    """Aggregated candidates, sorted by relevance descending."""

    entries: tuple[SubstanceRecord, ...]
    provenance: dict[str, tuple[str, ...]] = field(default_factory=dict)

    def cas_set(self) -> set[str]:
        return {e.cas for e in self.entries}

    def __len__(self) -> int:
        return len(self.entries)

    def to_json_list(self) -> list[dict]:
        return [e.to_json_dict() for e in self.entries]

    @classmethod
    def from_json_list(cls, data: Sequence[dict]) -> "CandidateList":
        entries = tuple(SubstanceRecord.from_json_dict(d) for d in data)
        return cls(entries=entries, provenance={e.cas: e.sources for e in entries})


@dataclass(frozen=True)
class MiningResult:
    candidates: CandidateList
    articles_mined: int
    records_extracted: int
    rejects: int

    def stats(self) -> dict:
        return {
            "articles_mined": self.articles_mined,
            "records_extracted": self.records_extracted,
            "rejects": self.rejects,
            "candidates": len(self.candidates),
        }


def validate_cas(code: str) -> bool:
    """True iff ``code`` is a well-formed CAS number with a correct check digit.

    The check digit equals sum(i * d_i) mod 10 where d_1 is the rightmost
    digit before the check digit and numbering increases leftward.
    """
    if not isinstance(code, str) or not _CAS_RE.match(code):
        return False
    digits = code.replace("-", "")
    body, check = digits[:-1], int(digits[-1])
    total = sum((i + 1) * int(d) for i, d in enumerate(reversed(body)))
    return total % 10 == check


def extract_passages(gateway: Gateway, article_id: str, fulltext: str) -> PassageSet:
    """Pass 1: distill an article into substance passages (possibly none)."""
    if not fulltext.strip():
        raise ValueError("fulltext must be non-empty")
    result = gateway.complete(PASSAGES_TEMPLATE, {
        "article_id": article_id,
        "fulltext": fulltext,
    })
    return PassageSet(article_id=article_id, passages=tuple(result.value))


def structure_records(gateway: Gateway, passage_set: PassageSet) -> ExtractionOutcome:
    """Pass 2: structure passages into records, dropping invalid-CAS entries."""
    if not passage_set.passages:
        return ExtractionOutcome(records=(), rejects=0)
    result = gateway.complete(RECORDS_TEMPLATE, {
        "article_id": passage_set.article_id,
        "passages": "\n".join(passage_set.passages),
    })
    records: list[SubstanceRecord] = []
    rejects = 0
    for raw in result.value:
        if not validate_cas(raw["cas"]):
            rejects += 1
            continue
        records.append(SubstanceRecord(
            cas=raw["cas"],
            name=raw["name"],
            role=Role(raw["role"]),
            purpose=raw["purpose"],
            relevance=float(raw["relevance"]) / 100.0,
            sources=(passage_set.article_id,),
        ))
    return ExtractionOutcome(records=tuple(records), rejects=rejects)


def aggregate_candidates(records: Sequence[SubstanceRecord]) -> CandidateList:
    """Fold records into one candidate per CAS.

    Relevance is the max over contributions, purposes are de-duplicated and
    canonically sorted, the role is a majority vote with ties broken by role
    declaration order, and provenance lists every contributing article. The
    output is independent of the input record order.
    """
    by_cas: dict[str, list[SubstanceRecord]] = {}
    for rec in records:
        by_cas.setdefault(rec.cas, []).append(rec)

    entries: list[SubstanceRecord] = []
    provenance: dict[str, tuple[str, ...]] = {}
    for cas, group in by_cas.items():
        relevance = max(r.relevance for r in group)
        # Deterministic representative name: the highest-relevance record's.
        name = min((r for r in group if r.relevance == relevance), key=lambda r: r.name).name
        votes = Counter(r.role for r in group)
        top = max(votes.values())
        role = min((r for r, n in votes.items() if n == top), key=lambda r: r.rank)
        purposes = sorted({r.purpose for r in group})
        sources = tuple(sorted({s for r in group for s in r.sources}))
        entries.append(SubstanceRecord(
            cas=cas,
            name=name,
            role=role,
            purpose="; ".join(purposes),
            relevance=relevance,
            sources=sources,
        ))
        provenance[cas] = sources
    entries.sort(key=lambda e: (-e.relevance, e.cas))
    return CandidateList(entries=tuple(entries),
                         provenance={e.cas: provenance[e.cas] for e in entries})


def curation_digest(candidates: CandidateList) -> tuple[str, list[dict]]:
    """Human-readable report plus a machine-readable listing.

    Output bytes are deterministic for a fixed candidate list.
    """
    if not candidates.entries:
        raise EmptyList("no candidates to curate")
    blocks = []
    for i, e in enumerate(candidates.entries, start=1):
        blocks.append(
            f"{i}. {e.name}  [CAS {e.cas}]\n"
            f"   role: {e.role.value}   relevance: {e.relevance * 100:.0f}%\n"
            f"   purpose: {e.purpose}\n"
            f"   sources: {', '.join(e.sources)}"
        )
    header = f"Candidate reagents ({len(candidates.entries)}), by relevance:\n\n"
    listing = [
        {**e.to_json_dict(), "relevance_percent": fraction9(e.relevance * 100)}
        for e in candidates.entries
    ]
    return header + "\n\n".join(blocks) + "\n", listing


def mine_articles(gateway: Gateway, corpus: Corpus, article_ids: Sequence[str],
                  workers: int = 1) -> MiningResult:
    """Run both extraction passes over the given articles and aggregate.

    Per-article extraction is embarrassingly parallel; aggregation is a
    single fold over the results and is order-independent.
    """

    def mine_one(article_id: str) -> ExtractionOutcome:
        fulltext = fetch_fulltext(corpus, article_id)
        return structure_records(gateway, extract_passages(gateway, article_id, fulltext))

    if workers <= 1:
        outcomes = [mine_one(aid) for aid in article_ids]
    else:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            outcomes = list(pool.map(mine_one, article_ids))

    all_records = [rec for out in outcomes for rec in out.records]
    return MiningResult(
        candidates=aggregate_candidates(all_records),
        articles_mined=len(article_ids),
        records_extracted=len(all_records) + sum(o.rejects for o in outcomes),
        rejects=sum(o.rejects for o in outcomes),
    )


def dump_candidates(candidates: CandidateList) -> str:
    """Canonical JSON text for candidates.json."""
    return json.dumps(candidates.to_json_list(), indent=2) + "\n"
