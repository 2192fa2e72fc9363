"""Campaign state machine: analysis through execution with a human gate.

Drives the five stages against the literature and miner services, blocks at
the feedback gate until a selection is submitted, then runs batch rounds
against an evaluator (the virtual lab by default). Everything the campaign
learns lives in its directory:

    config.json               immutable configuration
    state.json                versioned state, written atomically
    candidates.json           full mined candidate list
    mining_stats.json         extraction tallies
    world.json                the evaluator chemistry, fixed at selection
    exchange/round_<k>.json   CAS + concentration handoff per round
    rounds/round_<k>.jsonl    one evaluation record per line
    report.json               round report, refreshed on demand

A single exclusive lock file serializes writers; state transitions are
strictly forward and resumable after a crash at any point.
"""

import fcntl
import json
import math
import os
from contextlib import contextmanager
from dataclasses import dataclass, replace
from pathlib import Path
from typing import Optional, Protocol, Sequence, Union

import numpy as np

from . import literature, miner, optimizer, virtlab
from .domain import Recipe, Role, ScoreBreakdown, quantize_recipe
from .errors import (
    EvaluatorFailure,
    NoRounds,
    NoSuchCampaign,
    CampaignLocked,
    PreconditionFailed,
    RoleConstraintViolated,
    UnknownCandidate,
)
from .gateway import Gateway, GatewayConfig, HttpChatBackend, MockBackend
from .miner import CandidateList
from .optimizer import AcquisitionConfig
from .virtlab import ReferenceScales, ScoreWeights, WorldModel

__all__ = [
    "Stage",
    "CampaignConfig",
    "CampaignState",
    "EvaluationRecord",
    "Campaign",
    "Services",
    "VirtualLabEvaluator",
    "build_services",
    "render_exchange_json",
]

STATE_FILE = "state.json"
CONFIG_FILE = "config.json"
LOCK_FILE = ".lock"


class Stage:
    ANALYSIS = "analysis"
    RETRIEVAL = "retrieval"
    MINING = "mining"
    FEEDBACK = "feedback"
    EXECUTION = "execution"
    DONE = "done"

    ORDER = (ANALYSIS, RETRIEVAL, MINING, FEEDBACK, EXECUTION, DONE)


@dataclass(frozen=True)
class CampaignConfig:
    requirement: str
    corpus_path: str
    top_k: int = 500
    article_threshold: float = 0.8
    candidate_threshold: float = 0.8
    batch_size: int = 96
    rounds: int = 5
    beta_schedule: tuple[float, ...] = (2.0, 2.0, 3.0, 3.0, 1.0)
    pool_size: int = 5000
    diversity_radius: float = 0.05
    penalty_weight: float = 1.0
    weights: ScoreWeights = ScoreWeights()
    refs: ReferenceScales = ReferenceScales()
    total_volume_ul: float = 200.0
    exchange_mode: str = "fraction"
    master_seed: int = 0
    workers: int = 1
    program_step_s: float = 60.0
    program_dt_s: float = 1.0
    world_noise_sigma: float = 0.003
    world_path: Optional[str] = None
    gateway_backend: str = "mock"
    gateway_fixture: Optional[str] = None
    gateway_base_url: Optional[str] = None
    gateway_model: Optional[str] = None
    api_key_env: str = "CHROMALAB_API_KEY"
    max_retries: int = 3

    def __post_init__(self):
        if self.batch_size < 1:
            raise ValueError("batch_size must be >= 1")
        if self.rounds < 1:
            raise ValueError("rounds must be >= 1")
        if len(self.beta_schedule) != self.rounds:
            raise ValueError(
                f"beta schedule has {len(self.beta_schedule)} entries for {self.rounds} rounds")
        if self.master_seed < 0:
            raise ValueError("master_seed must be >= 0")
        if self.exchange_mode not in ("fraction", "volume_ul"):
            raise ValueError(f"unknown exchange mode {self.exchange_mode!r}")
        object.__setattr__(self, "beta_schedule", tuple(float(b) for b in self.beta_schedule))

    def to_json_dict(self) -> dict:
        d = {
            "requirement": self.requirement,
            "corpus_path": self.corpus_path,
            "top_k": self.top_k,
            "article_threshold": self.article_threshold,
            "candidate_threshold": self.candidate_threshold,
            "batch_size": self.batch_size,
            "rounds": self.rounds,
            "beta_schedule": list(self.beta_schedule),
            "pool_size": self.pool_size,
            "diversity_radius": self.diversity_radius,
            "penalty_weight": self.penalty_weight,
            "weights": {
                "amplitude": self.weights.amplitude,
                "response_time": self.weights.response_time,
                "reversibility": self.weights.reversibility,
                "sensitivity": self.weights.sensitivity,
            },
            "refs": {
                "amplitude": self.refs.amplitude,
                "response_time_s": self.refs.response_time_s,
                "reversibility": self.refs.reversibility,
                "sensitivity": self.refs.sensitivity,
            },
            "total_volume_ul": self.total_volume_ul,
            "exchange_mode": self.exchange_mode,
            "master_seed": self.master_seed,
            "workers": self.workers,
            "program_step_s": self.program_step_s,
            "program_dt_s": self.program_dt_s,
            "world_noise_sigma": self.world_noise_sigma,
            "world_path": self.world_path,
            "gateway_backend": self.gateway_backend,
            "gateway_fixture": self.gateway_fixture,
            "gateway_base_url": self.gateway_base_url,
            "gateway_model": self.gateway_model,
            "api_key_env": self.api_key_env,
            "max_retries": self.max_retries,
        }
        return d

    @classmethod
    def from_json_dict(cls, d: dict) -> "CampaignConfig":
        kwargs = dict(d)
        if "weights" in kwargs and isinstance(kwargs["weights"], dict):
            kwargs["weights"] = ScoreWeights(**kwargs["weights"])
        if "refs" in kwargs and isinstance(kwargs["refs"], dict):
            kwargs["refs"] = ReferenceScales(**kwargs["refs"])
        if "beta_schedule" in kwargs:
            kwargs["beta_schedule"] = tuple(kwargs["beta_schedule"])
        known = set(cls.__dataclass_fields__)
        return cls(**{k: v for k, v in kwargs.items() if k in known})


@dataclass(frozen=True)
class EvaluationRecord:
    """One evaluated recipe: composition, metrics, and the final score."""

    recipe_id: str
    recipe: Recipe
    metrics: ScoreBreakdown

    @property
    def score(self) -> float:
        return self.metrics.score if self.metrics.score is not None else 0.0

    def to_json_dict(self) -> dict:
        return {
            "recipe_id": self.recipe_id,
            "recipe": self.recipe.to_json_dict(),
            "metrics": self.metrics.to_json_dict(),
        }

    @classmethod
    def from_json_dict(cls, d: dict) -> "EvaluationRecord":
        return cls(
            recipe_id=d["recipe_id"],
            recipe=quantize_recipe(Recipe.from_json_dict(d["recipe"])),
            metrics=ScoreBreakdown.from_json_dict(d["metrics"]),
        )

    def canonical(self) -> "EvaluationRecord":
        """Round-trip through the wire precision so memory matches disk."""
        return EvaluationRecord.from_json_dict(self.to_json_dict())


@dataclass(frozen=True)
class CampaignState:
    campaign_id: str
    stage: str = Stage.ANALYSIS
    version: int = 1
    keywords: tuple[str, ...] = ()
    articles: tuple[dict, ...] = ()
    candidates: Optional[CandidateList] = None
    mining_stats: Optional[dict] = None
    selection: tuple[tuple[str, str], ...] = ()
    dimension: Optional[int] = None
    rounds: tuple[tuple[EvaluationRecord, ...], ...] = ()

    def ingredient_keys(self) -> tuple[str, ...]:
        return tuple(cas for cas, _ in self.selection)

    def highlighted_candidates(self, threshold: float) -> CandidateList:
        """The presented subset: candidates at or above the relevance threshold."""
        if self.candidates is None:
            return CandidateList(entries=())
        kept = tuple(e for e in self.candidates.entries if e.relevance >= threshold)
        return CandidateList(entries=kept, provenance={e.cas: e.sources for e in kept})

    def to_json_dict(self) -> dict:
        return {
            "campaign_id": self.campaign_id,
            "stage": self.stage,
            "version": self.version,
            "keywords": list(self.keywords),
            "articles": list(self.articles),
            "candidates": None if self.candidates is None else self.candidates.to_json_list(),
            "mining_stats": self.mining_stats,
            "selection": [[cas, role] for cas, role in self.selection],
            "dimension": self.dimension,
            "rounds": [[r.to_json_dict() for r in batch] for batch in self.rounds],
        }

    @classmethod
    def from_json_dict(cls, d: dict) -> "CampaignState":
        return cls(
            campaign_id=d["campaign_id"],
            stage=d["stage"],
            version=int(d["version"]),
            keywords=tuple(d.get("keywords", ())),
            articles=tuple(d.get("articles", ())),
            candidates=None if d.get("candidates") is None
            else CandidateList.from_json_list(d["candidates"]),
            mining_stats=d.get("mining_stats"),
            selection=tuple((cas, role) for cas, role in d.get("selection", ())),
            dimension=d.get("dimension"),
            rounds=tuple(
                tuple(EvaluationRecord.from_json_dict(r) for r in batch)
                for batch in d.get("rounds", ())
            ),
        )


@dataclass
class Services:
    gateway: Gateway
    corpus: literature.Corpus


def build_services(config: CampaignConfig) -> Services:
    corpus = literature.Corpus.load(config.corpus_path)
    if config.gateway_backend == "mock":
        if not config.gateway_fixture:
            raise ValueError("mock gateway requires gateway_fixture in the config")
        backend = MockBackend.from_file(config.gateway_fixture)
    elif config.gateway_backend == "http":
        if not (config.gateway_base_url and config.gateway_model):
            raise ValueError("http gateway requires gateway_base_url and gateway_model")
        backend = HttpChatBackend(config.gateway_base_url, config.gateway_model,
                                  api_key_env=config.api_key_env)
    else:
        raise ValueError(f"unknown gateway backend {config.gateway_backend!r}")
    gateway = Gateway(backend, GatewayConfig(max_retries=config.max_retries,
                                             backend_id=config.gateway_backend))
    literature.register_templates(gateway)
    miner.register_templates(gateway)
    return Services(gateway=gateway, corpus=corpus)


class RecipeEvaluator(Protocol):
    def evaluate(self, recipe: Recipe, recipe_id: str,
                 seed: Sequence[int]) -> ScoreBreakdown: ...


class VirtualLabEvaluator:
    """Default evaluator: simulate, extract metrics, score."""

    def __init__(self, world: WorldModel, program=None,
                 weights: ScoreWeights = ScoreWeights(),
                 refs: ReferenceScales = ReferenceScales()):
        self.world = world
        self.program = program or virtlab.default_program()
        self.weights = weights
        self.refs = refs

    def evaluate(self, recipe: Recipe, recipe_id: str, seed: Sequence[int]) -> ScoreBreakdown:
        curve = virtlab.simulate_curve(recipe, self.program, self.world, seed,
                                       recipe_id=recipe_id)
        breakdown = virtlab.extract_metrics(curve, self.program)
        return breakdown.with_score(virtlab.score(breakdown, self.weights, self.refs))


def _dump_json(obj) -> str:
    return json.dumps(obj, indent=2) + "\n"


def _atomic_write(path: Path, text: str) -> None:
    tmp = path.with_name(path.name + ".tmp")
    tmp.write_text(text, encoding="utf-8")
    os.replace(tmp, path)


def _fixed_point_shares(fractions: Sequence[float], total: float,
                        decimals: int = 6) -> list[float]:
    """Round shares of ``total`` to fixed decimals, preserving the exact sum."""
    scale = 10**decimals
    units_total = round(total * scale)
    raw = [f * units_total for f in fractions]
    units = [int(math.floor(r)) for r in raw]
    leftover = units_total - sum(units)
    order = sorted(range(len(raw)), key=lambda i: (-(raw[i] - units[i]), i))
    for j in range(leftover):
        units[order[j % len(units)]] += 1
    return [u / scale for u in units]


def render_exchange_json(doc: dict) -> str:
    """Exchange document text with concentrations at exactly six decimals."""
    lines = [
        "{",
        f'  "campaign_id": {json.dumps(doc["campaign_id"])},',
        f'  "round_index": {doc["round_index"]},',
        f'  "mode": {json.dumps(doc["mode"])},',
        f'  "total": {doc["total"]:.6f},',
        '  "recipes": [',
    ]
    for ri, recipe in enumerate(doc["recipes"]):
        lines.append("    {")
        lines.append(f'      "recipe_id": {json.dumps(recipe["recipe_id"])},')
        lines.append('      "substances": [')
        subs = recipe["substances"]
        for si, sub in enumerate(subs):
            comma = "," if si < len(subs) - 1 else ""
            lines.append(
                f'        {{"cas": {json.dumps(sub["cas"])}, '
                f'"concentration": {sub["concentration"]:.6f}}}{comma}'
            )
        lines.append("      ]")
        lines.append("    }" + ("," if ri < len(doc["recipes"]) - 1 else ""))
    lines.append("  ]")
    lines.append("}")
    return "\n".join(lines) + "\n"


class Campaign:
    """Handle on a campaign directory; every method re-reads committed state."""

    def __init__(self, root: Union[str, Path]):
        self.root = Path(root)

    # -- lifecycle -------------------------------------------------------

    @classmethod
    def create(cls, root: Union[str, Path], config: CampaignConfig) -> "Campaign":
        root = Path(root)
        if (root / STATE_FILE).exists():
            raise PreconditionFailed(f"campaign already initialized at {root}")
        root.mkdir(parents=True, exist_ok=True)
        (root / "rounds").mkdir(exist_ok=True)
        (root / "exchange").mkdir(exist_ok=True)
        campaign = cls(root)
        _atomic_write(root / CONFIG_FILE, _dump_json(config.to_json_dict()))
        state = CampaignState(campaign_id=root.name)
        campaign._write_state(state)
        return campaign

    @classmethod
    def open(cls, root: Union[str, Path]) -> "Campaign":
        root = Path(root)
        if not (root / STATE_FILE).exists():
            raise NoSuchCampaign(f"no campaign at {root}")
        return cls(root)

    @property
    def campaign_id(self) -> str:
        return self.root.name

    def config(self) -> CampaignConfig:
        with open(self.root / CONFIG_FILE, encoding="utf-8") as fh:
            return CampaignConfig.from_json_dict(json.load(fh))

    def state(self) -> CampaignState:
        with open(self.root / STATE_FILE, encoding="utf-8") as fh:
            return CampaignState.from_json_dict(json.load(fh))

    def _write_state(self, state: CampaignState) -> None:
        _atomic_write(self.root / STATE_FILE, _dump_json(state.to_json_dict()))

    @contextmanager
    def _exclusive(self):
        handle = open(self.root / LOCK_FILE, "w")
        try:
            fcntl.flock(handle, fcntl.LOCK_EX | fcntl.LOCK_NB)
        except OSError:
            handle.close()
            raise CampaignLocked(f"campaign {self.campaign_id} is locked by another writer")
        try:
            yield
        finally:
            fcntl.flock(handle, fcntl.LOCK_UN)
            handle.close()

    # -- stage machine ------------------------------------------------------

    def advance(self, services: Optional[Services] = None,
                workers: Optional[int] = None,
                evaluator: Optional[RecipeEvaluator] = None) -> CampaignState:
        """Execute the current stage and commit the successor state.

        Refuses to run at the feedback gate and on finished campaigns. At the
        execution stage one round is run per call.
        """
        config = self.config()
        workers = config.workers if workers is None else workers
        with self._exclusive():
            state = self.state()
            if state.stage == Stage.FEEDBACK:
                raise PreconditionFailed(
                    "campaign is waiting for a reagent selection; submit one to continue")
            if state.stage == Stage.DONE:
                raise PreconditionFailed("campaign is complete")
            if state.stage == Stage.EXECUTION:
                return self._run_round_locked(state, config, evaluator, None)
            if services is None:
                services = build_services(config)
            if state.stage == Stage.ANALYSIS:
                new = self._run_analysis(state, config, services)
            elif state.stage == Stage.RETRIEVAL:
                new = self._run_retrieval(state, config, services, workers)
            elif state.stage == Stage.MINING:
                new = self._run_mining(state, config, services, workers)
            else:
                raise PreconditionFailed(f"unknown stage {state.stage!r}")
            self._write_state(new)
            return new

    def _run_analysis(self, state, config, services) -> CampaignState:
        keywords = literature.generate_keywords(services.gateway, config.requirement)
        return replace(state, stage=Stage.RETRIEVAL, keywords=tuple(keywords),
                       version=state.version + 1)

    def _run_retrieval(self, state, config, services, workers) -> CampaignState:
        found = literature.search(services.corpus, state.keywords, config.top_k)
        scored = literature.score_articles(services.gateway, found, config.requirement,
                                           workers=workers)
        articles = tuple(
            {
                "id": a.id,
                "title": a.title,
                "relevance": a.relevance,
                "selected": a.relevance >= config.article_threshold,
            }
            for a in scored
        )
        return replace(state, stage=Stage.MINING, articles=articles,
                       version=state.version + 1)

    def _run_mining(self, state, config, services, workers) -> CampaignState:
        ids = [a["id"] for a in state.articles if a["selected"]]
        result = miner.mine_articles(services.gateway, services.corpus, ids, workers=workers)
        _atomic_write(self.root / "candidates.json",
                      _dump_json(result.candidates.to_json_list()))
        _atomic_write(self.root / "mining_stats.json", _dump_json(result.stats()))
        return replace(state, stage=Stage.FEEDBACK, candidates=result.candidates,
                       mining_stats=result.stats(), version=state.version + 1)

    def submit_selection(self, selections: Sequence[dict]) -> CampaignState:
        """Fix the ingredient set from the human's CAS + role assignments.

        Requires at least one colorant and exactly one solvent; every CAS
        must appear in the mined candidate list.
        """
        config = self.config()
        with self._exclusive():
            state = self.state()
            if state.stage != Stage.FEEDBACK:
                raise PreconditionFailed(
                    f"selection is only accepted at the feedback gate, not {state.stage!r}")
            if not selections:
                raise RoleConstraintViolated("selection is empty")
            known = state.candidates.cas_set() if state.candidates else set()
            parsed: list[tuple[str, str]] = []
            seen = set()
            for entry in selections:
                cas, role = entry["cas"], Role(entry["role"])
                if cas not in known:
                    raise UnknownCandidate(f"{cas} is not in the mined candidate list")
                if cas in seen:
                    raise RoleConstraintViolated(f"{cas} appears twice in the selection")
                seen.add(cas)
                parsed.append((cas, role.value))
            roles = [r for _, r in parsed]
            if roles.count(Role.COLORANT.value) < 1:
                raise RoleConstraintViolated("selection needs at least one colorant")
            if roles.count(Role.SOLVENT.value) != 1:
                raise RoleConstraintViolated("selection needs exactly one solvent")

            world = self._build_world(config, [cas for cas, _ in parsed])
            _atomic_write(self.root / "world.json", _dump_json(world.to_json_dict()))
            new = replace(state, stage=Stage.EXECUTION, selection=tuple(parsed),
                          dimension=len(parsed) - 1, version=state.version + 1)
            self._write_state(new)
            return new

    def _build_world(self, config: CampaignConfig, cas_list: Sequence[str]) -> WorldModel:
        if config.world_path:
            with open(config.world_path, encoding="utf-8") as fh:
                return WorldModel.from_json_dict(json.load(fh))
        return virtlab.world_for_ingredients(cas_list, noise_sigma=config.world_noise_sigma,
                                             seed=config.master_seed)

    def _load_world(self) -> WorldModel:
        with open(self.root / "world.json", encoding="utf-8") as fh:
            return WorldModel.from_json_dict(json.load(fh))

    def _program(self, config: CampaignConfig):
        return virtlab.default_program(step_s=config.program_step_s, dt_s=config.program_dt_s)

    def _default_evaluator(self, config: CampaignConfig) -> VirtualLabEvaluator:
        return VirtualLabEvaluator(self._load_world(), program=self._program(config),
                                   weights=config.weights, refs=config.refs)

    # -- rounds ----------------------------------------------------------------

    def run_round(self, evaluator: Optional[RecipeEvaluator] = None,
                  beta_override: Optional[float] = None) -> CampaignState:
        """Propose, hand off, and evaluate one batch; resumable mid-round."""
        config = self.config()
        with self._exclusive():
            state = self.state()
            return self._run_round_locked(state, config, evaluator, beta_override)

    def _run_round_locked(self, state: CampaignState, config: CampaignConfig,
                          evaluator: Optional[RecipeEvaluator],
                          beta_override: Optional[float]) -> CampaignState:
        if state.stage != Stage.EXECUTION:
            raise PreconditionFailed(
                f"rounds run at the execution stage, not {state.stage!r}")
        k = len(state.rounds) + 1
        if k > config.rounds:
            raise PreconditionFailed(f"all {config.rounds} rounds are complete")

        batch = self._generate_batch(state, config, k, beta_override)
        exchange_path = self.root / "exchange" / f"round_{k}.json"
        if not exchange_path.exists():
            doc = self.compile_exchange_file(state, batch, k, config)
            _atomic_write(exchange_path, render_exchange_json(doc))

        if evaluator is None:
            evaluator = self._default_evaluator(config)

        jsonl_path = self.root / "rounds" / f"round_{k}.jsonl"
        records: list[EvaluationRecord] = []
        if jsonl_path.exists():
            with open(jsonl_path, encoding="utf-8") as fh:
                records = [EvaluationRecord.from_json_dict(json.loads(line))
                           for line in fh if line.strip()]
        with open(jsonl_path, "a", encoding="utf-8") as fh:
            for i in range(len(records), config.batch_size):
                recipe = batch[i]
                recipe_id = f"r{k:02d}-{i + 1:03d}"
                try:
                    breakdown = evaluator.evaluate(recipe, recipe_id, (k, i))
                except Exception as exc:
                    raise EvaluatorFailure(
                        f"round {k} failed at {recipe_id}: {exc}; "
                        "re-run the round to resume") from exc
                record = EvaluationRecord(recipe_id=recipe_id, recipe=recipe,
                                          metrics=breakdown).canonical()
                fh.write(json.dumps(record.to_json_dict()) + "\n")
                fh.flush()
                records.append(record)

        stage = Stage.DONE if k == config.rounds else Stage.EXECUTION
        new = replace(state, stage=stage, rounds=(*state.rounds, tuple(records)),
                      version=state.version + 1)
        self._write_state(new)
        return new

    def _generate_batch(self, state: CampaignState, config: CampaignConfig, k: int,
                        beta_override: Optional[float]) -> list[Recipe]:
        keys = state.ingredient_keys()
        seed = np.random.SeedSequence([config.master_seed, k])
        if k == 1 or not state.rounds:
            points = optimizer.sample_simplex(config.batch_size, len(keys), seed)
            batch = [Recipe.from_vector(keys, p) for p in points]
        else:
            history = [rec for batch_records in state.rounds for rec in batch_records]
            X = np.array([rec.recipe.to_vector(keys) for rec in history])
            y = np.array([rec.score for rec in history])
            model = optimizer.fit(X, y)
            beta = beta_override if beta_override is not None else config.beta_schedule[k - 1]
            acq = AcquisitionConfig(beta=beta, pool_size=config.pool_size,
                                    diversity_radius=config.diversity_radius,
                                    penalty_weight=config.penalty_weight)
            batch = optimizer.propose_batch(model, acq, config.batch_size, seed, keys)
        return [quantize_recipe(r) for r in batch]

    def run(self, n_rounds: Optional[int] = None,
            evaluator: Optional[RecipeEvaluator] = None,
            beta_override: Optional[float] = None) -> CampaignState:
        """Run up to n_rounds (default: all remaining)."""
        config = self.config()
        state = self.state()
        remaining = config.rounds - len(state.rounds)
        todo = remaining if n_rounds is None else min(n_rounds, remaining)
        for _ in range(todo):
            state = self.run_round(evaluator=evaluator, beta_override=beta_override)
        return state

    # -- documents ------------------------------------------------------------

    def compile_exchange_file(self, state: CampaignState, batch: Sequence[Recipe],
                              round_index: int, config: Optional[CampaignConfig] = None) -> dict:
        """CAS + concentration handoff document for one batch."""
        config = config or self.config()
        keys = state.ingredient_keys()
        total = 1.0 if config.exchange_mode == "fraction" else config.total_volume_ul
        recipes = []
        for i, recipe in enumerate(batch):
            fractions = [recipe.composition.get(cas, 0.0) for cas in keys]
            shares = _fixed_point_shares(fractions, total)
            recipes.append({
                "recipe_id": f"r{round_index:02d}-{i + 1:03d}",
                "substances": [
                    {"cas": cas, "concentration": share}
                    for cas, share in zip(keys, shares)
                ],
            })
        return {
            "campaign_id": state.campaign_id,
            "round_index": round_index,
            "mode": config.exchange_mode,
            "total": total,
            "recipes": recipes,
        }

    def report(self, refresh: bool = True) -> dict:
        """Round report: per-round score stats, compositions, best-so-far, top recipes."""
        config = self.config()
        state = self.state()
        if not state.rounds:
            raise NoRounds("no completed rounds to report on")
        doc = build_report(state, config, world=self._load_world(),
                           program=self._program(config))
        if refresh:
            _atomic_write(self.root / "report.json", _dump_json(doc))
        return doc

    def snapshot(self) -> dict:
        """Read-only progress view for polling clients."""
        config = self.config()
        state = self.state()
        current_round = len(state.rounds) + 1
        evaluated = 0
        if state.stage == Stage.EXECUTION:
            jsonl_path = self.root / "rounds" / f"round_{current_round}.jsonl"
            if jsonl_path.exists():
                with open(jsonl_path, encoding="utf-8") as fh:
                    evaluated = sum(1 for line in fh if line.strip())
        highlighted = state.highlighted_candidates(config.candidate_threshold)
        best = None
        best_series = []
        for batch in state.rounds:
            top = max((r.score for r in batch), default=0.0)
            best = top if best is None else max(best, top)
            best_series.append(best)
        return {
            "campaign_id": state.campaign_id,
            "stage": state.stage,
            "version": state.version,
            "requirement": config.requirement,
            "keywords": list(state.keywords),
            "articles_total": len(state.articles),
            "articles_selected": sum(1 for a in state.articles if a["selected"]),
            "candidates_mined": 0 if state.candidates is None else len(state.candidates),
            "candidates_highlighted": len(highlighted),
            "selection": [{"cas": cas, "role": role} for cas, role in state.selection],
            "dimension": state.dimension,
            "rounds_completed": len(state.rounds),
            "rounds_total": config.rounds,
            "batch_size": config.batch_size,
            "progress": {
                "round": current_round if state.stage == Stage.EXECUTION else len(state.rounds),
                "evaluated": evaluated,
                "batch_size": config.batch_size,
                "fraction": evaluated / config.batch_size,
            },
            "best_so_far": best_series,
        }


def build_report(state: CampaignState, config: CampaignConfig,
                 world: Optional[WorldModel] = None, program=None,
                 top_n: int = 10) -> dict:
    if not state.rounds:
        raise NoRounds("no completed rounds to report on")
    keys = state.ingredient_keys()
    rounds_out = []
    best = -math.inf
    best_series = []
    for k, batch in enumerate(state.rounds, start=1):
        scores = np.array([r.score for r in batch])
        counts, edges = np.histogram(scores, bins=20, range=(0.0, 1.0))
        comp_totals = {
            cas: float(sum(r.recipe.composition.get(cas, 0.0) for r in batch))
            for cas in keys
        }
        rounds_out.append({
            "round": k,
            "count": len(batch),
            "score_max": float(scores.max()),
            "score_median": float(np.median(scores)),
            "fraction_near_zero": float(np.mean(scores < 0.05)),
            "histogram": {
                "bin_edges": [float(e) for e in edges],
                "counts": [int(c) for c in counts],
            },
            "composition_totals": comp_totals,
        })
        best = max(best, float(scores.max()))
        best_series.append(best)

    flat = [(r, k) for k, batch in enumerate(state.rounds, start=1) for r in batch]
    flat.sort(key=lambda pair: (-pair[0].score, pair[0].recipe_id))
    top = [
        {
            "rank": i + 1,
            "round": k,
            "recipe_id": r.recipe_id,
            "score": r.score,
            "metrics": r.metrics.to_json_dict(),
            "composition": r.recipe.to_json_dict()["composition"],
        }
        for i, (r, k) in enumerate(flat[:top_n])
    ]

    doc = {
        "campaign_id": state.campaign_id,
        "rounds_completed": len(state.rounds),
        "rounds": rounds_out,
        "best_so_far": best_series,
        "top_recipes": top,
    }
    if world is not None and len(flat) >= 2:
        doc["calibration"] = _calibration_summary(world, [flat[0][0], flat[1][0]],
                                                  config.master_seed)
    return doc


def _calibration_summary(world: WorldModel, records: Sequence[EvaluationRecord],
                         master_seed: int) -> dict:
    training = [float(h) for h in np.arange(5.0, 96.0, 5.0)]
    held_out = [float(h) for h in np.arange(7.5, 93.0, 5.0)]
    pair = (records[0].recipe, records[1].recipe)
    calibration = virtlab.calibrate_array(pair, world, training, noise_seed=master_seed + 1)
    rmse = virtlab.evaluate_rmse(calibration, world, held_out, noise_seed=master_seed + 2)
    return {
        "recipes": [records[0].recipe_id, records[1].recipe_id],
        "training_grid": training,
        "eval_grid": held_out,
        "rmse_percent_rh": rmse,
    }
