"""Shared fixtures: bundled corpus paths, gateway builders, campaign factories."""

import json
import shutil
from pathlib import Path

import pytest

from chromalab import literature, miner, virtlab
from chromalab.campaign import Campaign, CampaignConfig, CampaignState, Stage
from chromalab.gateway import Gateway, GatewayConfig, MockBackend

REPO_ROOT = Path(__file__).resolve().parents[1]
FIXTURES = REPO_ROOT / "fixtures"

# The Appendix-style ground truth: the 18 reagents expected to clear the
# 80% relevance bar in the bundled fixture corpus.
TABLE_18_CAS = {
    "25233-30-1", "7646-79-9", "100-20-9", "25852-37-3", "9003-39-8", "7647-15-6",
    "141-78-6", "7732-18-5", "7647-14-5", "13462-88-9", "7718-54-9", "79-06-1",
    "79-10-7", "9003-05-8", "10043-52-4", "75-58-1", "25322-68-3", "9004-57-3",
}

REFERENCE_SELECTION = [
    {"cas": "7646-79-9", "role": "colorant"},
    {"cas": "7718-54-9", "role": "colorant"},
    {"cas": "13462-88-9", "role": "colorant"},
    {"cas": "10043-52-4", "role": "additive"},
    {"cas": "75-58-1", "role": "additive"},
    {"cas": "25322-68-3", "role": "additive"},
    {"cas": "9004-57-3", "role": "additive"},
    {"cas": "67-63-0", "role": "solvent"},
]
REFERENCE_KEYS = [entry["cas"] for entry in REFERENCE_SELECTION]


def make_gateway(script, max_retries=3, latency_s=0.0) -> Gateway:
    gateway = Gateway(MockBackend(script, latency_s=latency_s),
                      GatewayConfig(max_retries=max_retries))
    literature.register_templates(gateway)
    miner.register_templates(gateway)
    return gateway


def fixture_gateway(latency_s=0.0) -> Gateway:
    with open(FIXTURES / "gateway_responses.json", encoding="utf-8") as fh:
        return make_gateway(json.load(fh), latency_s=latency_s)


def fixture_config(**overrides) -> CampaignConfig:
    with open(FIXTURES / "campaign_config.json", encoding="utf-8") as fh:
        raw = json.load(fh)
    raw["corpus_path"] = str(FIXTURES / raw["corpus_path"])
    raw["gateway_fixture"] = str(FIXTURES / raw["gateway_fixture"])
    raw.update(overrides)
    return CampaignConfig.from_json_dict(raw)


def make_execution_campaign(root, seed, selection=None, **config_overrides) -> Campaign:
    """A campaign parked at the execution stage with a submitted selection.

    Writes the campaign files directly (the directory layout is a documented
    interface), skipping the literature stages for optimizer-focused tests.
    """
    root = Path(root)
    shutil.rmtree(root, ignore_errors=True)
    selection = selection or [(e["cas"], e["role"]) for e in REFERENCE_SELECTION]
    config = CampaignConfig(requirement="test requirement", corpus_path="unused",
                            master_seed=seed, **config_overrides)
    campaign = Campaign.create(root, config)
    state = CampaignState(
        campaign_id=root.name,
        stage=Stage.EXECUTION,
        version=2,
        selection=tuple(selection),
        dimension=len(selection) - 1,
    )
    campaign._write_state(state)
    world = virtlab.world_for_ingredients([cas for cas, _ in selection],
                                          noise_sigma=config.world_noise_sigma, seed=seed)
    (root / "world.json").write_text(json.dumps(world.to_json_dict(), indent=2) + "\n",
                                     encoding="utf-8")
    return campaign


def make_cas(n: int) -> str:
    """A syntactically valid CAS number with a correct check digit."""
    body = f"{2000 + n}{n % 100:02d}"
    total = sum((i + 1) * int(d) for i, d in enumerate(reversed(body)))
    return f"{2000 + n}-{n % 100:02d}-{total % 10}"


@pytest.fixture(scope="session")
def fixture_corpus():
    return literature.Corpus.load(FIXTURES / "corpus")


@pytest.fixture()
def gateway():
    return fixture_gateway()
