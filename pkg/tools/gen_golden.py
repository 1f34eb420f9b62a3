#!/usr/bin/env python3
"""Regenerate the golden reference files under tests/data/.

Run from the repository root after an intentional change to the digest
construction or the image format (both require bumping the relevant
version identifiers first):

    python tools/gen_golden.py
"""

import json
from pathlib import Path

from msetfilters import codec, workload
from msetfilters.hashing import SeededHashFamily
from msetfilters.shifting import ShiftingFilter
from msetfilters.spatial import SpatialFilter

DATA = Path(__file__).resolve().parent.parent / "tests" / "data"


def gen_digests() -> None:
    family = SeededHashFamily(m=2**16, k=4, s=8, seed=0xDEADBEEF)
    elements = [b"alpha", b"beta", b"\x00\x01\x02", b"0123456789abcdef"]
    table = {}
    for element in elements:
        entry = {
            "cells": [family.cell_index(j, element) for j in range(1, 5)],
            "offsets": [family.offset(label, element) for label in range(1, 9)],
            "offsets_w1024": [
                family.offset(label, element, bound=1024) for label in range(1, 9)
            ],
        }
        table[element.hex()] = entry
    payload = {"m": 2**16, "k": 4, "s": 8, "seed": 0xDEADBEEF, "elements": table}
    (DATA / "golden_digests.json").write_text(
        json.dumps(payload, indent=1, sort_keys=True) + "\n", encoding="utf-8"
    )


def gen_images() -> None:
    dataset = workload.gen_uniform(5, 20, seed=42)
    probes = list(workload.gen_non_elements(40, 43, dataset).elements)

    shbf = ShiftingFilter(2**10, 3, 5, seed=42)
    shbf.insert_many(dataset.elements(), dataset.labels())
    shbf.seal()
    codec.write_image(DATA / "golden_shbf.msf", shbf)

    sbf = SpatialFilter(2**10, 3, 5, seed=42)
    sbf.insert_many(dataset.elements(), dataset.labels())
    sbf.seal()
    codec.write_image(DATA / "golden_sbf.msf", sbf)

    fixed_probes = dataset.elements()[:10] + probes[:10]
    results = {
        "probes": [p.hex() for p in fixed_probes],
        "shbf": [list(shbf.query(p).labels) for p in fixed_probes],
        "sbf": [sbf.query(p) for p in fixed_probes],
    }
    (DATA / "golden_queries.json").write_text(
        json.dumps(results, indent=1) + "\n", encoding="utf-8"
    )


if __name__ == "__main__":
    DATA.mkdir(parents=True, exist_ok=True)
    gen_digests()
    gen_images()
    print(f"golden files written to {DATA}")
