#!/usr/bin/env python3
"""Regenerate the bundled fixture corpus and gateway script.

Deterministic: running this twice produces identical bytes. The corpus holds
30 articles (24 on-topic, 6 off-topic); mining the on-topic ones yields 50
distinct reagents of which exactly 18 score at or above the 80% relevance
threshold. Two scripted records carry corrupted CAS numbers to exercise the
checksum firewall.
"""

import json
import sys
from pathlib import Path

sys.path.insert(0, str(Path(__file__).resolve().parents[1] / "src"))

from chromalab.miner import validate_cas  # noqa: E402

FIXTURES = Path(__file__).resolve().parents[1] / "fixtures"

REQUIREMENT = (
    "Develop a colorimetric sensing material whose visible color change quantifies "
    "relative humidity between 5% and 95% at room temperature."
)

KEYWORDS = [
    "colorimetric humidity sensor",
    "relative humidity indicator",
    "hygrochromic film",
    "cobalt chloride color change",
    "optical moisture detection",
]

# The 18 reagents expected to clear the 80% relevance bar, with per-article
# scripted relevances (max over articles is what aggregation keeps).
HIGH_REAGENTS = [
    ("7646-79-9", "Cobalt(II) chloride", "colorant",
     "Hygrochromic salt; shifts from blue toward pink as the film hydrates.",
     [("a001", 60), ("a007", 90), ("a013", 70)]),
    ("7718-54-9", "Nickel(II) iodide", "colorant",
     "Moisture-responsive layer with a strong low-humidity color shift.",
     [("a002", 88), ("a014", 82)]),
    ("13462-88-9", "Nickel(II) bromide", "colorant",
     "Thin-film humidity chromophore for sensing coatings.",
     [("a003", 85)]),
    ("10043-52-4", "Calcium chloride", "colorant",
     "Hygroscopic salt used to pull moisture into the sensing layer.",
     [("a004", 83), ("a016", 80)]),
    ("75-58-1", "Tetramethylammonium iodide", "additive",
     "Blended with nickel iodide films to sharpen the humidity response.",
     [("a002", 86)]),
    ("25322-68-3", "Polyethylene glycol", "additive",
     "Surfactant and plasticizer that keeps cast films uniform.",
     [("a005", 84), ("a017", 81)]),
    ("9004-57-3", "Ethyl cellulose", "additive",
     "Binder controlling the morphology of the coated substrate.",
     [("a006", 82)]),
    ("25233-30-1", "Polyaniline", "reactor",
     "Conducting polymer whose optical state tracks ambient moisture.",
     [("a008", 87)]),
    ("100-20-9", "Terephthaloyl chloride", "reactor",
     "Crosslinker for gelatin shells in moisture-sensitive capsules.",
     [("a009", 81)]),
    ("25852-37-3", "Poly(ethylene glycol) methacrylate", "additive",
     "Hydrophilic comonomer that swells the sensing matrix with humidity.",
     [("a010", 80)]),
    ("9003-39-8", "Polyvinylpyrrolidone", "additive",
     "Film-forming polymer host for humidity-sensitive dyes.",
     [("a011", 89), ("a018", 75)]),
    ("7647-15-6", "Sodium bromide", "adjuster",
     "Saturated-salt reference that fixes chamber humidity levels.",
     [("a012", 83)]),
    ("141-78-6", "Ethyl acetate", "reactor",
     "Casting vehicle used while characterizing the films' optics.",
     [("a015", 82)]),
    ("7732-18-5", "Water", "adjuster",
     "Analyte and carrier for humidity exposure testing.",
     [("a001", 95), ("a019", 85)]),
    ("7647-14-5", "Sodium chloride", "adjuster",
     "Saturated-salt humidity standard for calibration points.",
     [("a012", 84)]),
    ("79-06-1", "Acrylamide", "reactor",
     "Monomer for moisture-swellable polymer networks.",
     [("a020", 86)]),
    ("79-10-7", "Acrylic acid", "reactor",
     "Comonomer giving the network humidity-dependent swelling.",
     [("a020", 88)]),
    ("9003-05-8", "Polyacrylamide", "additive",
     "Organogel scaffold for humidity-responsive films.",
     [("a021", 81)]),
]

# 32 plausible but lower-scoring reagents (relevance < 80); isopropanol stays
# selectable as the solvent even though it misses the highlighted list.
LOW_REAGENTS = [
    ("67-63-0", "Isopropanol", "solvent",
     "General casting solvent for salts and polymer binders.", "a001", 55),
    ("64-17-5", "Ethanol", "solvent",
     "Alternative casting solvent for the dye layer.", "a003", 48),
    ("67-56-1", "Methanol", "solvent",
     "Rinse solvent during substrate preparation.", "a004", 35),
    ("9002-89-5", "Polyvinyl alcohol", "additive",
     "Hydrophilic film former for breathable coatings.", "a005", 72),
    ("9004-67-5", "Methyl cellulose", "additive",
     "Viscosity modifier for the casting slurry.", "a006", 58),
    ("9012-76-4", "Chitosan", "additive",
     "Biopolymer film with mild moisture uptake.", "a007", 66),
    ("9005-38-3", "Sodium alginate", "additive",
     "Gelling agent for aqueous film casting.", "a008", 52),
    ("9000-70-8", "Gelatin", "additive",
     "Capsule wall material for encapsulated indicators.", "a009", 70),
    ("57-13-6", "Urea", "adjuster",
     "Humectant adjusting film water activity.", "a010", 44),
    ("77-92-9", "Citric acid", "adjuster",
     "pH adjuster for dye stability.", "a011", 38),
    ("50-81-7", "Ascorbic acid", "additive",
     "Antioxidant protecting the chromophore.", "a013", 33),
    ("7447-40-7", "Potassium chloride", "adjuster",
     "Saturated-salt humidity reference point.", "a014", 61),
    ("7786-30-3", "Magnesium chloride", "adjuster",
     "Low-humidity saturated-salt standard.", "a015", 64),
    ("7646-85-7", "Zinc chloride", "adjuster",
     "Desiccant control in sealed test cells.", "a016", 41),
    ("7758-98-7", "Copper(II) sulfate", "colorant",
     "Hydration-dependent blue chromophore.", "a017", 74),
    ("7705-08-0", "Iron(III) chloride", "colorant",
     "Oxidant and color-active salt in composite films.", "a018", 47),
    ("7761-88-8", "Silver nitrate", "reactor",
     "Precursor for reflective reference patches.", "a019", 29),
    ("13463-67-7", "Titanium dioxide", "additive",
     "White scattering background for readout contrast.", "a021", 57),
    ("7631-86-9", "Silicon dioxide", "additive",
     "Porous support increasing active surface area.", "a022", 62),
    ("108-88-3", "Toluene", "solvent",
     "Solvent for hydrophobic binder trials.", "a022", 31),
    ("67-68-5", "Dimethyl sulfoxide", "solvent",
     "High-boiling solvent for polymer dissolution.", "a023", 36),
    ("68-12-2", "N,N-Dimethylformamide", "solvent",
     "Casting solvent for polyaniline layers.", "a023", 42),
    ("75-05-8", "Acetonitrile", "solvent",
     "Chromatography solvent in purity checks.", "a024", 27),
    ("67-64-1", "Acetone", "solvent",
     "Substrate degreasing before coating.", "a024", 25),
    ("56-81-5", "Glycerol", "additive",
     "Humectant plasticizer moderating response speed.", "a002", 68),
    ("151-21-3", "Sodium dodecyl sulfate", "additive",
     "Wetting agent for even film spreading.", "a003", 39),
    ("9002-93-1", "Triton X-100", "additive",
     "Nonionic surfactant improving coating wetting.", "a004", 37),
    ("9003-53-6", "Polystyrene", "additive",
     "Inert matrix in reference (insensitive) patches.", "a005", 28),
    ("9011-14-7", "Poly(methyl methacrylate)", "additive",
     "Transparent encapsulant for finished sensor dots.", "a006", 46),
    ("76-59-5", "Bromothymol blue", "colorant",
     "pH-type dye evaluated for cross-sensitivity.", "a007", 63),
    ("77-09-8", "Phenolphthalein", "colorant",
     "Indicator dye tested as an interference control.", "a008", 34),
    ("61-73-4", "Methylene blue", "colorant",
     "Stain used to visualize film porosity.", "a009", 30),
]

# Hallucinated records with corrupted CAS numbers; the checksum must drop them.
BAD_RECORDS = {
    "a001": {"cas": "1234-56-7", "name": "Cobaltous perchlorate hydrate", "role": "colorant",
             "purpose": "Claimed humidity chromophore with no valid registry entry.",
             "relevance": 77},
    "a009": {"cas": "9999-99-1", "name": "Hygrosensin", "role": "additive",
             "purpose": "Fabricated additive name produced by the model.",
             "relevance": 66},
}

OFFTOPIC_ARTICLES = [
    ("a025", "Perovskite solar cell efficiency gains from interface engineering",
     "Reports methylammonium lead iodide device efficiencies under thermal stress.", 35),
    ("a026", "Alkaloid quantification in mulberry leaf extracts by LC-MS",
     "Chromatographic separation strategies for plant alkaloid profiling.", 15),
    ("a027", "Deep learning for protein folding trajectory analysis",
     "Neural network surrogates for molecular dynamics simulations.", 10),
    ("a028", "Electrochemical impedance of lithium battery anodes",
     "Impedance spectroscopy of silicon composite anodes during cycling.", 20),
    ("a029", "Wearable strain gauges from carbon nanotube composites",
     "Piezoresistive response of stretchable conductor networks.", 45),
    ("a030", "Photocatalytic water splitting on doped titania",
     "Hydrogen evolution rates for nitrogen-doped titania photocatalysts.", 25),
]

RELEVANT_ARTICLE_SCORES = {
    "a001": 95, "a002": 92, "a003": 88, "a004": 85, "a005": 84, "a006": 83,
    "a007": 94, "a008": 87, "a009": 82, "a010": 81, "a011": 89, "a012": 86,
    "a013": 90, "a014": 85, "a015": 82, "a016": 80, "a017": 83, "a018": 81,
    "a019": 88, "a020": 91, "a021": 84, "a022": 80, "a023": 81, "a024": 80,
}


def reagents_by_article() -> dict[str, list[dict]]:
    per_article: dict[str, list[dict]] = {aid: [] for aid in RELEVANT_ARTICLE_SCORES}
    for cas, name, role, purpose, placements in HIGH_REAGENTS:
        assert validate_cas(cas), cas
        for aid, rel in placements:
            per_article[aid].append(
                {"cas": cas, "name": name, "role": role, "purpose": purpose, "relevance": rel})
    for cas, name, role, purpose, aid, rel in LOW_REAGENTS:
        assert validate_cas(cas), cas
        per_article[aid].append(
            {"cas": cas, "name": name, "role": role, "purpose": purpose, "relevance": rel})
    for aid, bad in BAD_RECORDS.items():
        assert not validate_cas(bad["cas"]), bad["cas"]
        per_article[aid].append(bad)
    return per_article


def article_title(aid: str, records: list[dict]) -> str:
    lead = records[0]["name"]
    return f"Humidity-driven colorimetric response of {lead} composite films ({aid})"


def article_abstract(records: list[dict]) -> str:
    names = ", ".join(r["name"] for r in records[:4])
    return (
        f"We study optical moisture detection with coatings based on {names}. "
        "Color change amplitude, response time, and reversibility are reported across "
        "a wide relative humidity range, and film composition is linked to sensitivity."
    )


def article_fulltext(aid: str, records: list[dict]) -> str:
    paras = [
        f"Article {aid}. Films were cast on glass slides and equilibrated in a flow cell "
        "where the relative humidity was stepped between dry and saturated conditions "
        "while a camera logged the reflected color.",
    ]
    for r in records:
        paras.append(
            f"{r['name']} (CAS {r['cas']}) served as a {r['role']} in this work. "
            f"{r['purpose']} Response curves were collected between 5% and 95% relative "
            "humidity at room temperature."
        )
    paras.append(
        "Composition ratios were varied across batches to trade off color change "
        "amplitude against recovery time; the best films recovered their dry-state "
        "color within minutes of purging with dry nitrogen."
    )
    return "\n\n".join(paras) + "\n"


def offtopic_fulltext(aid: str, title: str, abstract: str) -> str:
    return (
        f"Article {aid}. {title}.\n\n{abstract}\n\n"
        "No humidity-responsive coloration was investigated in this work.\n"
    )


def main() -> None:
    per_article = reagents_by_article()
    corpus_dir = FIXTURES / "corpus"
    texts_dir = corpus_dir / "texts"
    texts_dir.mkdir(parents=True, exist_ok=True)

    index = []
    relevance_script: dict[str, str] = {}
    passages_script: dict[str, str] = {}
    records_script: dict[str, str] = {}

    for aid in sorted(RELEVANT_ARTICLE_SCORES):
        records = per_article[aid]
        title = article_title(aid, records)
        abstract = article_abstract(records)
        fulltext = article_fulltext(aid, records)
        (texts_dir / f"{aid}.txt").write_text(fulltext, encoding="utf-8")
        index.append({"id": aid, "title": title, "abstract": abstract,
                      "fulltext_path": f"texts/{aid}.txt"})
        relevance_script[aid] = str(RELEVANT_ARTICLE_SCORES[aid])
        passages = [
            f"{r['name']} (CAS {r['cas']}) acted as a {r['role']}: {r['purpose']}"
            for r in records
        ]
        passages_script[aid] = json.dumps(passages)
        records_script[aid] = json.dumps(records)

    for aid, title, abstract, rel in OFFTOPIC_ARTICLES:
        (texts_dir / f"{aid}.txt").write_text(offtopic_fulltext(aid, title, abstract),
                                              encoding="utf-8")
        index.append({"id": aid, "title": title, "abstract": abstract,
                      "fulltext_path": f"texts/{aid}.txt"})
        relevance_script[aid] = str(rel)

    index.sort(key=lambda e: e["id"])
    (corpus_dir / "index.json").write_text(json.dumps(index, indent=2) + "\n", encoding="utf-8")

    gateway_script = {
        "keywords.v1": [json.dumps(KEYWORDS)],
        "article_relevance.v1": {"key_slot": "article_id", "responses": relevance_script},
        "extract_passages.v1": {"key_slot": "article_id", "responses": passages_script},
        "structure_records.v1": {"key_slot": "article_id", "responses": records_script},
    }
    (FIXTURES / "gateway_responses.json").write_text(
        json.dumps(gateway_script, indent=2) + "\n", encoding="utf-8")

    config = {
        "requirement": REQUIREMENT,
        "corpus_path": "corpus",
        "gateway_backend": "mock",
        "gateway_fixture": "gateway_responses.json",
        "top_k": 500,
        "article_threshold": 0.8,
        "candidate_threshold": 0.8,
        "batch_size": 96,
        "rounds": 5,
        "beta_schedule": [2.0, 2.0, 3.0, 3.0, 1.0],
        "master_seed": 7,
    }
    (FIXTURES / "campaign_config.json").write_text(
        json.dumps(config, indent=2) + "\n", encoding="utf-8")

    selection = {
        "selections": [
            {"cas": "7646-79-9", "role": "colorant"},
            {"cas": "7718-54-9", "role": "colorant"},
            {"cas": "13462-88-9", "role": "colorant"},
            {"cas": "10043-52-4", "role": "additive"},
            {"cas": "75-58-1", "role": "additive"},
            {"cas": "25322-68-3", "role": "additive"},
            {"cas": "9004-57-3", "role": "additive"},
            {"cas": "67-63-0", "role": "solvent"},
        ]
    }
    (FIXTURES / "reference_selection.json").write_text(
        json.dumps(selection, indent=2) + "\n", encoding="utf-8")

    highs = {cas for cas, *_ in HIGH_REAGENTS}
    lows = {cas for cas, *_ in LOW_REAGENTS}
    assert len(highs) == 18 and len(lows) == 32 and not highs & lows
    print(f"fixtures written to {FIXTURES}: {len(index)} articles, "
          f"{len(highs) + len(lows)} reagents ({len(highs)} above threshold)")


if __name__ == "__main__":
    main()
