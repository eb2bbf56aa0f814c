#!/usr/bin/env python3
"""Regenerates the bundled datasets under data/.

The committed CSVs are canonical; this script documents how they were made
and reproduces them byte for byte (fixed seeds, fixed formatting).
"""

import json
import random
from pathlib import Path

OUT = Path(__file__).resolve().parent.parent / "data"


def write_csv(name, header, rows):
    path = OUT / f"{name}.csv"
    with path.open("w", newline="") as fh:
        fh.write(",".join(header) + "\n")
        for row in rows:
            fh.write(",".join(str(v) for v in row) + "\n")
    print(f"wrote {path} ({len(rows)} rows)")


def write_meta(name, attrs, class_name, kinds=None, missing=None):
    kinds = kinds or {}
    meta = {
        "attributes": [
            {
                "name": a,
                "kind": kinds.get(a, "categorical"),
                "missing_tokens": missing or ["?"],
            }
            for a in attrs
        ],
        "class": {"name": class_name},
    }
    path = OUT / f"{name}.meta.json"
    path.write_text(json.dumps(meta, indent=2) + "\n")
    print(f"wrote {path}")


def balance_scale():
    header = ["left_weight", "left_distance", "right_weight", "right_distance", "class"]
    rows = []
    for lw in range(1, 6):
        for ld in range(1, 6):
            for rw in range(1, 6):
                for rd in range(1, 6):
                    left, right = lw * ld, rw * rd
                    cls = "L" if left > right else ("R" if right > left else "B")
                    rows.append([lw, ld, rw, rd, cls])
    write_csv("balance_scale", header, rows)
    write_meta("balance_scale", header[:-1], "class")


def monks1():
    header = ["head", "body", "smile", "hold", "color", "tie", "class"]
    rows = []
    for a1 in range(1, 4):
        for a2 in range(1, 4):
            for a3 in range(1, 3):
                for a4 in range(1, 4):
                    for a5 in range(1, 5):
                        for a6 in range(1, 3):
                            cls = "yes" if (a1 == a2 or a5 == 1) else "no"
                            rows.append([a1, a2, a3, a4, a5, a6, cls])
    write_csv("monks1", header, rows)
    write_meta("monks1", header[:-1], "class")


LED_SEGMENTS = {
    0: (1, 1, 1, 0, 1, 1, 1),
    1: (0, 0, 1, 0, 0, 1, 0),
    2: (1, 0, 1, 1, 1, 0, 1),
    3: (1, 0, 1, 1, 0, 1, 1),
    4: (0, 1, 1, 1, 0, 1, 0),
    5: (1, 1, 0, 1, 0, 1, 1),
    6: (1, 1, 0, 1, 1, 1, 1),
    7: (1, 0, 1, 0, 0, 1, 0),
    8: (1, 1, 1, 1, 1, 1, 1),
    9: (1, 1, 1, 1, 0, 1, 1),
}


def led():
    rng = random.Random(20240601)
    header = [f"seg{i}" for i in range(1, 8)] + ["digit"]
    rows = []
    for _ in range(500):
        digit = rng.randrange(10)
        segs = [s if rng.random() >= 0.1 else 1 - s for s in LED_SEGMENTS[digit]]
        rows.append(segs + [digit])
    write_csv("led", header, rows)
    write_meta("led", header[:-1], "digit")


def xor_redundant():
    # The class is the parity of two bits (with a little label noise); three
    # perfectly correlated "vote" attributes echo a noisy copy of that parity.
    rng = random.Random(20240602)
    header = ["bit1", "bit2", "hum", "vote1", "vote2", "vote3", "class"]
    rows = []
    for _ in range(400):
        b1, b2 = rng.randrange(2), rng.randrange(2)
        parity = b1 ^ b2
        vote = parity if rng.random() >= 0.3 else 1 - parity
        hum = rng.randrange(2)
        label = parity if rng.random() >= 0.1 else 1 - parity
        rows.append([b1, b2, hum, vote, vote, vote, "odd" if label else "even"])
    write_csv("xor_redundant", header, rows)
    write_meta("xor_redundant", header[:-1], "class")


def blossom():
    rng = random.Random(20240603)
    header = ["stalk_len", "stalk_wid", "bloom_len", "bloom_wid", "kind"]
    centers = {
        "early": ((5.0, 3.4, 1.5, 0.2), 0.35),
        "mid": ((5.9, 2.8, 4.3, 1.3), 0.45),
        "late": ((6.6, 3.0, 5.5, 2.0), 0.50),
    }
    rows = []
    for kind, (mu, sd) in centers.items():
        for _ in range(50):
            vals = [f"{max(0.1, rng.gauss(m, sd)):.1f}" for m in mu]
            rows.append(vals + [kind])
    # a few missing cells, fixed positions
    for r, c in [(3, 0), (17, 2), (58, 1), (90, 3), (131, 0)]:
        rows[r][c] = "?"
    write_csv("blossom", header, rows)
    write_meta(
        "blossom",
        header[:-1],
        "kind",
        kinds={a: "numeric" for a in header[:-1]},
    )


def main():
    OUT.mkdir(exist_ok=True)
    balance_scale()
    monks1()
    led()
    xor_redundant()
    blossom()


if __name__ == "__main__":
    main()
