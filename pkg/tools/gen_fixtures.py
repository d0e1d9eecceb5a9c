"""Regenerate the checked-in test fixtures.

Run from the repository root after an editable install:
    python3 tools/gen_fixtures.py

Produces, under tests/data/:
    synth_source/        proposal metadata + cached query responses
    synth_corpus/        a materialized corpus generated from synth_source
    selfret_source/      source where each author's only publication abstract
                         is exactly their proposal abstract (self-retrieval)
    embeddings_synth.jsonl
                         deterministic hash-encoder vectors for synth_corpus

Everything is deterministic, so reruns are byte-identical; the files are
committed and the test suite never regenerates them.
"""

import hashlib
import json
import shutil
import sys
from pathlib import Path

import numpy as np

ROOT = Path(__file__).resolve().parent.parent
DATA = ROOT / "tests" / "data"

sys.path.insert(0, str(ROOT / "src"))

from expertmatch.corpus import load_corpus, save_corpus  # noqa: E402
from expertmatch.embeddings import publication_record_id, write_embedding_file  # noqa: E402
from expertmatch.synth import AdsQuery, FixtureStore, generate_synthetic_corpus  # noqa: E402

SEED = 20260819

# --- synthetic source material -------------------------------------------

TOPICS = {
    "exoplanets": (
        "transit photometry of hot jupiters",
        "We analyze transit photometry and radial velocity measurements of "
        "short period gas giant planets orbiting bright host stars. Atmospheric "
        "transmission spectra reveal sodium absorption and thermal inversion "
        "layers, constraining cloud formation and atmospheric circulation "
        "models for strongly irradiated exoplanet atmospheres.",
    ),
    "supernovae": (
        "thermonuclear supernova progenitor channels",
        "Spectroscopic follow up of thermonuclear supernovae constrains white "
        "dwarf progenitor channels and explosion asymmetries. We combine early "
        "light curves with nebular phase spectra to measure nickel masses and "
        "ejecta velocities, testing double degenerate merger scenarios against "
        "single degenerate accretion models.",
    ),
    "agn": (
        "accretion flows around supermassive black holes",
        "Reverberation mapping of active galactic nuclei traces the broad line "
        "region geometry and supermassive black hole masses. Combining optical "
        "continuum monitoring with emission line lags, we constrain accretion "
        "disk sizes and test photoionization models of quasar spectra across "
        "a wide luminosity range.",
    ),
    "ism": (
        "molecular cloud chemistry and dust",
        "Wide field spectral line maps of nearby molecular clouds trace "
        "dense core formation, interstellar dust grain growth, and gas phase "
        "depletion of carbon bearing molecules. Comparing ammonia and "
        "continuum maps quantifies turbulence dissipation and magnetic "
        "support in filamentary star forming regions.",
    ),
    "cosmology": (
        "weak lensing constraints on dark energy",
        "Weak gravitational lensing shear correlations from deep imaging "
        "surveys constrain the growth of large scale structure and the dark "
        "energy equation of state. We calibrate photometric redshift "
        "distributions and intrinsic alignment contamination to deliver "
        "unbiased cosmological parameter posteriors.",
    ),
    "stellar": (
        "asteroseismology of evolved low mass stars",
        "Space based photometry resolves solar like oscillations in red giant "
        "stars, yielding interior rotation profiles and convective envelope "
        "depths. Mixed mode period spacings separate hydrogen shell burning "
        "from core helium burning evolutionary stages across the red giant "
        "branch and the red clump.",
    ),
    "galactic": (
        "chemical cartography of the galactic disk",
        "High resolution spectroscopy of red giants across the galactic disk "
        "maps elemental abundance gradients and radial migration signatures. "
        "Alpha element ratios for globular cluster and field populations "
        "resolve the assembly history of the thick disk and inner halo.",
    ),
}

AUTHORS = [
    "Vega, L.",
    "Okafor, C.",
    "Lindqvist, M.",
    "Santos, R.",
    "Ito, H.",
    "Marchetti, D.",
    "Nowak, A.",
    "Price, J.",
    "Reyes, P.",
]

# author -> (home topic, second topic) steers publication content
AUTHOR_TOPICS = {
    "Vega, L.": ("exoplanets", "stellar"),
    "Okafor, C.": ("supernovae", "cosmology"),
    "Lindqvist, M.": ("agn", "cosmology"),
    "Santos, R.": ("ism", "galactic"),
    "Ito, H.": ("cosmology", "agn"),
    "Marchetti, D.": ("stellar", "galactic"),
    "Nowak, A.": ("galactic", "ism"),
    "Price, J.": ("exoplanets", "ism"),
    "Reyes, P.": ("supernovae", "stellar"),
}

FACILITIES = [
    "a wide field imager", "an echelle spectrograph", "an integral field unit",
    "a submillimeter array", "a near infrared camera", "a multi object spectrograph",
]


def synth_proposals() -> list[dict]:
    """14 proposal stubs, 2 per topic, authors drawn from the shared pool."""
    rng = np.random.default_rng(SEED)
    records = []
    authors_cycle = [
        [a for a, (t1, t2) in AUTHOR_TOPICS.items() if topic in (t1, t2)]
        for topic in TOPICS
    ]
    for t_idx, (topic, (title, abstract)) in enumerate(TOPICS.items()):
        eligible = authors_cycle[t_idx]
        for variant in range(2):
            facility = FACILITIES[int(rng.integers(0, len(FACILITIES)))]
            extra = (
                f" We request {facility} to extend the sample and test the "
                f"predictions at higher signal to noise."
            )
            lead = eligible[variant % len(eligible)]
            co = AUTHORS[int(rng.integers(0, len(AUTHORS)))]
            authors = [lead] if co == lead else [lead, co]
            records.append({
                "title": f"{title} ({variant + 1})",
                "abstract": abstract + extra,
                "authors": authors,
            })
    return records


def synth_publications(author: str, rng: np.random.Generator) -> list[dict]:
    """3-5 publications biased toward the author's home topics."""
    home, second = AUTHOR_TOPICS[author]
    docs = []
    n_pubs = int(rng.integers(3, 6))
    for k in range(n_pubs):
        topic = home if rng.random() < 0.7 else second
        title, abstract = TOPICS[topic]
        year = int(rng.integers(2019, 2026))
        order = ["a colleague", author] if rng.random() < 0.35 else [author]
        docs.append({
            "title": f"{title}: study {k + 1} by {author}",
            "abstract": f"{abstract} This study emphasizes aspect {k + 1} "
                        f"of the program.",
            "year": year,
            "authors": order + [a for a in AUTHORS if a != author][:2],
        })
    return docs


def build_synth_source() -> Path:
    src = DATA / "synth_source"
    if src.exists():
        shutil.rmtree(src)
    src.mkdir(parents=True)
    (src / "proposals.json").write_text(
        json.dumps(synth_proposals(), indent=1), encoding="utf-8"
    )
    store = FixtureStore(src)
    rng = np.random.default_rng(SEED + 1)
    for author in AUTHORS:
        docs = synth_publications(author, rng)
        store.put(AdsQuery(author=author, max_rows=200), {"docs": docs})
    return src


# --- self-retrieval source -----------------------------------------------

OBJECTS = [
    "NGC 1052", "NGC 2403", "NGC 3521", "NGC 4151", "NGC 5128", "NGC 6240",
    "NGC 7331", "M 31", "M 51", "M 82", "M 87", "M 101", "IC 342", "IC 1396",
    "Arp 220", "Mrk 421", "Mrk 501", "3C 273", "Cen A", "Cyg X-1",
    "HD 189733", "HD 209458", "WASP-12", "WASP-39", "KELT-9", "TRAPPIST-1",
    "GJ 1214", "Kepler-22", "TOI-700", "LHS 3844", "Proxima Centauri",
    "Barnard 68", "L1544", "TMC-1", "Orion KL", "Sgr B2", "Sgr A*",
    "30 Doradus", "Eta Carinae", "Betelgeuse", "Vega", "Fomalhaut",
    "SN 1987A", "SN 2011fe", "Cas A", "Tycho SNR", "Crab Nebula",
    "PSR B1919+21", "Cyg A", "Abell 1689", "Abell 2744", "Coma Cluster",
    "Bullet Cluster", "Virgo Cluster", "Fornax A",
]

ANGLES = [
    "spectroscopic monitoring", "narrowband imaging", "polarimetric mapping",
    "timing analysis", "interferometric observations", "multi epoch astrometry",
]


def build_selfret_source() -> Path:
    """55 single-author proposals; the author's one publication IS the abstract."""
    src = DATA / "selfret_source"
    if src.exists():
        shutil.rmtree(src)
    src.mkdir(parents=True)
    records = []
    store = FixtureStore(src)
    for idx, obj in enumerate(OBJECTS):
        angle = ANGLES[idx % len(ANGLES)]
        author = f"Observer{idx:02d}, Q."
        abstract = (
            f"We propose {angle} of {obj} to measure its variability structure "
            f"and constrain the physical conditions of the emitting region. "
            f"Target number {idx} anchors the sample selection."
        )
        records.append({
            "title": f"{angle} of {obj}",
            "abstract": abstract,
            "authors": [author],
        })
        store.put(
            AdsQuery(author=author, max_rows=200),
            {"docs": [{
                "title": f"Prior {angle} of {obj}",
                "abstract": abstract,
                "year": 2024,
                "authors": [author],
            }]},
        )
    (src / "proposals.json").write_text(
        json.dumps(records, indent=1), encoding="utf-8"
    )
    return src


# --- deterministic hash encoder ------------------------------------------

ENCODER_DIM = 32
ENCODER_NAME = "hash-sim-32"


def hash_encode(text: str, dim: int = ENCODER_DIM) -> np.ndarray:
    """Stable bag-of-words random-projection vector; same text, same vector."""
    vec = np.zeros(dim)
    for token in text.lower().split():
        token = token.strip(".,;:()")
        if not token:
            continue
        digest = hashlib.sha256(token.encode("utf-8")).digest()
        seed = int.from_bytes(digest[:8], "little")
        vec += np.random.default_rng(seed).standard_normal(dim)
    norm = np.linalg.norm(vec)
    return vec / norm if norm > 0 else vec


def build_embeddings(corpus_dir: Path, out_path: Path) -> None:
    corpus = load_corpus(corpus_dir)
    vectors = {}
    for proposal in corpus.proposals:
        vectors[proposal.id] = hash_encode(proposal.abstract)
    for reviewer in corpus.reviewers:
        for idx, pub in enumerate(reviewer.publications):
            vectors[publication_record_id(reviewer.id, idx)] = hash_encode(pub.abstract)
    write_embedding_file(out_path, ENCODER_NAME, vectors, dim=ENCODER_DIM)


def main() -> None:
    DATA.mkdir(parents=True, exist_ok=True)
    synth_src = build_synth_source()
    print(f"wrote {synth_src}")
    selfret_src = build_selfret_source()
    print(f"wrote {selfret_src}")

    corpus = generate_synthetic_corpus(synth_src, size=10, seed=SEED)
    corpus_dir = DATA / "synth_corpus"
    if corpus_dir.exists():
        shutil.rmtree(corpus_dir)
    save_corpus(corpus, corpus_dir)
    load_corpus(corpus_dir)  # must round-trip validation
    print(f"wrote {corpus_dir} ({len(corpus.proposals)} proposals, "
          f"{len(corpus.reviewers)} reviewers)")

    emb_path = DATA / "embeddings_synth.jsonl"
    build_embeddings(corpus_dir, emb_path)
    print(f"wrote {emb_path}")


if __name__ == "__main__":
    main()
