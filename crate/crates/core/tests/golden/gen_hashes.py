# SPDX-License-Identifier: Apache-2.0
"""Regenerates hashes.json with hashlib's BLAKE2b.

Lanes are 160-bit integers {code:32, value:128} serialized big-endian; the
bucket is the 2-byte digest read little-endian.
"""
import hashlib
import json
import random

MASK160 = (1 << 160) - 1


def digest16(data: bytes) -> int:
    return int.from_bytes(hashlib.blake2b(data, digest_size=2).digest(), "little")


def lane(code: int, value: int) -> int:
    return (code << 128) | value


def compress(code, prev, nxt, shift_prev_only=False):
    if shift_prev_only:
        x = lane(code, nxt) ^ lane(code, prev >> 1)
    else:
        x = lane(code, nxt) ^ (lane(code, prev) >> 1)
    return digest16((x & MASK160).to_bytes(20, "big"))


def vectorize(lanes):
    return digest16(b"".join(lane(c, v).to_bytes(20, "big") for c, v in lanes))


def main():
    rng = random.Random(20241014)
    compress_cases = []
    fixed = [(1, 8, 0x00, 0x01), (2, 8, 0x00, 0x01), (0, 1, 0, 1), (0, 1, 1, 0), (3, 8, 0, 0xA5), (7, 3, 4, 7), (1, 128, (1 << 128) - 1, 0)]
    for code, width, prev, nxt in fixed:
        compress_cases.append((code, width, prev, nxt))
    for _ in range(60):
        width = rng.choice([1, 2, 3, 7, 8, 16, 32, 64, 100, 128])
        code = rng.randrange(1 << rng.choice([4, 16, 32]))
        compress_cases.append((code, width, rng.randrange(1 << width), rng.randrange(1 << width)))
    out = {"compress": [], "vectorize": []}
    for code, width, prev, nxt in compress_cases:
        out["compress"].append({
            "code": code,
            "width": width,
            "prev": hex(prev),
            "next": hex(nxt),
            "index": compress(code, prev, nxt),
            "index_shift_prev_only": compress(code, prev, nxt, True),
        })
    for lanes in ([(0, 1, 0), (1, 1, 0)], [(3, 8, 0x12), (4, 8, 0x34)], [(4, 8, 0x34), (3, 8, 0x12)]):
        out["vectorize"].append({
            "lanes": [{"code": c, "width": w, "value": hex(v)} for c, w, v in lanes],
            "index": vectorize([(c, v) for c, _, v in lanes]),
        })
    for n in [0, 1, 2, 3, 5, 8]:
        for _ in range(4):
            lanes = []
            for _ in range(n):
                width = rng.choice([1, 4, 8, 32, 128])
                lanes.append((rng.randrange(1 << 16), width, rng.randrange(1 << width)))
            out["vectorize"].append({
                "lanes": [{"code": c, "width": w, "value": hex(v)} for c, w, v in lanes],
                "index": vectorize([(c, v) for c, _, v in lanes]),
            })
    with open("hashes.json", "w") as f:
        json.dump(out, f, indent=1)
        f.write("\n")


if __name__ == "__main__":
    main()
