"""Regenerate the shipped keyword vocabulary file.

Run from the repository root:
    python tools/gen_keywords.py
Writes src/expertmatch/data/keywords.json. The vocabulary groups observing
topics under nine top-level categories; entity keyword selections reference
these strings verbatim.
"""

import json
from pathlib import Path

CATEGORIES = {
    "Physical data and processes": [
        "accretion and accretion disks",
        "astroparticle physics",
        "black hole physics",
        "magnetic fields",
        "gravitational lensing",
        "gravitational waves",
        "hydrodynamics",
        "nucleosynthesis and abundances",
        "radiative transfer",
        "relativistic processes",
        "shock waves",
        "turbulence",
        "astrochemistry",
        "masers",
        "polarization",
    ],
    "Astrometry and celestial mechanics": [
        "astrometry",
        "celestial mechanics",
        "proper motions",
        "parallaxes",
        "reference systems",
        "ephemerides",
        "occultations",
        "time measurement",
    ],
    "The Sun": [
        "solar activity",
        "solar chromosphere",
        "solar corona",
        "solar flares",
        "helioseismology",
        "solar magnetic fields",
        "solar wind",
        "sunspots",
        "coronal mass ejections",
        "solar photosphere",
    ],
    "Planetary systems": [
        "exoplanet atmospheres",
        "exoplanet detection",
        "planet formation",
        "protoplanetary disks",
        "planetary dynamics",
        "comets",
        "asteroids",
        "kuiper belt objects",
        "planetary interiors",
        "habitability and biosignatures",
        "transits and radial velocities",
        "satellites of planets",
    ],
    "Stars": [
        "stellar atmospheres",
        "stellar evolution",
        "star formation",
        "binary stars",
        "brown dwarfs",
        "white dwarfs",
        "neutron stars",
        "pulsars",
        "supernovae",
        "variable stars",
        "stellar winds and outflows",
        "stellar rotation",
        "asteroseismology",
        "massive stars",
        "low mass stars",
        "stellar abundances",
        "circumstellar matter",
        "novae and cataclysmic variables",
    ],
    "Interstellar medium (ISM), nebulae": [
        "interstellar molecules",
        "interstellar dust and extinction",
        "molecular clouds",
        "hii regions",
        "planetary nebulae",
        "supernova remnants",
        "interstellar kinematics and dynamics",
        "photodissociation regions",
        "cosmic rays",
        "interstellar abundances",
    ],
    "The Galaxy": [
        "galactic center",
        "galactic bulge",
        "galactic disk",
        "galactic halo",
        "open clusters",
        "globular clusters",
        "galactic structure",
        "galactic kinematics",
        "solar neighborhood",
        "galactic stellar content",
    ],
    "Galaxies": [
        "galaxy formation",
        "galaxy evolution",
        "active galactic nuclei",
        "quasars",
        "starburst galaxies",
        "dwarf galaxies",
        "elliptical and lenticular galaxies",
        "spiral galaxies",
        "galaxy clusters",
        "galaxy interactions",
        "high redshift galaxies",
        "galaxy kinematics and dynamics",
        "intergalactic medium",
        "local group galaxies",
        "galaxy stellar populations",
        "galaxy nuclei",
    ],
    "Cosmology": [
        "cosmological parameters",
        "dark matter",
        "dark energy",
        "cosmic microwave background",
        "large scale structure",
        "reionization",
        "early universe",
        "primordial nucleosynthesis",
        "gravitational lensing surveys",
        "distance scale",
        "cosmological simulations",
    ],
}


def main() -> None:
    vocabulary = []
    categories = {}
    for category, keywords in CATEGORIES.items():
        for kw in keywords:
            if kw in categories:
                raise SystemExit(f"duplicate keyword {kw!r}")
            vocabulary.append(kw)
            categories[kw] = category
    out = Path(__file__).resolve().parent.parent / "src/expertmatch/data/keywords.json"
    out.write_text(
        json.dumps({"vocabulary": vocabulary, "categories": categories}, indent=1),
        encoding="utf-8",
    )
    print(f"wrote {len(vocabulary)} keywords in {len(CATEGORIES)} categories to {out}")


if __name__ == "__main__":
    main()
