#!/usr/bin/env python3
"""Write a synthetic paired corpus as XEB1 files plus a manifest.

    python3 tools/make_synthetic.py out/ --items 200 --dim 32 --noise 0.05

Produces out/text.xeb, out/image.xeb and out/pairs.tsv. With --captions N
each image gets N noisy captions and the manifest is one-to-many.
"""

import argparse
import math
import random
import struct
from pathlib import Path

MAGIC = b"XEB1"
VERSION = 1
TEXT, IMAGE = 0, 1


def write_xeb(path, modality, ids, rows, dim):
    with open(path, "wb") as f:
        f.write(MAGIC)
        f.write(struct.pack("<HBBQI", VERSION, modality, 0, len(ids), dim))
        for i in ids:
            raw = i.encode("utf-8")
            f.write(struct.pack("<H", len(raw)))
            f.write(raw)
        for row in rows:
            f.write(struct.pack(f"<{dim}f", *row))


def unit(rng, dim):
    v = [rng.gauss(0.0, 1.0) for _ in range(dim)]
    n = math.sqrt(sum(x * x for x in v))
    return [x / n for x in v]


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("out", type=Path)
    ap.add_argument("--items", type=int, default=100)
    ap.add_argument("--dim", type=int, default=32)
    ap.add_argument("--captions", type=int, default=1)
    ap.add_argument("--noise", type=float, default=0.0, help="gaussian noise added to captions")
    ap.add_argument("--shift", type=float, default=0.0, help="constant offset on the text side")
    ap.add_argument("--seed", type=int, default=0)
    args = ap.parse_args()

    rng = random.Random(args.seed)
    args.out.mkdir(parents=True, exist_ok=True)
    images = [unit(rng, args.dim) for _ in range(args.items)]
    image_ids = [f"img{i}" for i in range(args.items)]
    text_ids, texts, pairs = [], [], []
    for i, img in enumerate(images):
        for c in range(args.captions):
            tid = f"cap{i}_{c}"
            text_ids.append(tid)
            texts.append([x + args.shift + args.noise * rng.gauss(0.0, 1.0) for x in img])
            pairs.append((tid, image_ids[i]))

    write_xeb(args.out / "text.xeb", TEXT, text_ids, texts, args.dim)
    write_xeb(args.out / "image.xeb", IMAGE, image_ids, images, args.dim)
    with open(args.out / "pairs.tsv", "w", encoding="utf-8") as f:
        if args.captions > 1:
            f.write("# relation: one-to-many\n")
            f.write(f"# captions_per_item: {args.captions}\n")
        for t, i in pairs:
            f.write(f"{t}\t{i}\n")


if __name__ == "__main__":
    main()
