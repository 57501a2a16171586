#!/usr/bin/env python3
"""Generate include/eosedit/detail/unicode_tables.hpp from CPython's unicodedata.

The tokenizer needs four Unicode facts: general-category classes for the
splitting pattern (Letter, Number), canonical decomposition/combining-class/
composition data for NFC, and full lowercase mappings. Rather than depending
on ICU, the tables are baked into a generated header. Rerun this script when
bumping the Unicode version; the output is deterministic for a given CPython.
"""

import sys
import unicodedata

MAX_CP = 0x110000

HEADER = """// Generated by scripts/gen_unicode_tables.py (Unicode data from CPython {uver}).
// Do not edit by hand.
#pragma once

#include <cstdint>
#include <cstddef>

namespace eosedit::detail {{

struct CpRange {{
    char32_t first;
    char32_t last;
}};

struct CccEntry {{
    char32_t cp;
    uint8_t ccc;
}};

// Canonical decomposition; second == 0 means a singleton decomposition.
struct DecompEntry {{
    char32_t cp;
    char32_t first;
    char32_t second;
}};

// Primary composite keyed by (starter << 21) | combining.
struct ComposeEntry {{
    uint64_t key;
    char32_t composed;
}};

// Full lowercase mapping, up to 3 code points (0-terminated).
struct LowerEntry {{
    char32_t cp;
    char32_t lower[3];
}};
"""

FOOTER = "}  // namespace eosedit::detail\n"


def ranges_of(pred):
    out = []
    start = None
    for cp in range(MAX_CP):
        if pred(cp):
            if start is None:
                start = cp
        else:
            if start is not None:
                out.append((start, cp - 1))
                start = None
    if start is not None:
        out.append((start, MAX_CP - 1))
    return out


def emit_ranges(f, name, ranges):
    f.write(f"inline constexpr CpRange {name}[] = {{\n")
    for a, b in ranges:
        f.write(f"    {{0x{a:X}, 0x{b:X}}},\n")
    f.write("};\n")
    f.write(f"inline constexpr size_t {name}_count = {len(ranges)};\n\n")


def main(out_path):
    letter = ranges_of(lambda cp: unicodedata.category(chr(cp)).startswith("L"))
    number = ranges_of(lambda cp: unicodedata.category(chr(cp)).startswith("N"))

    ccc = []
    for cp in range(MAX_CP):
        c = unicodedata.combining(chr(cp))
        if c:
            ccc.append((cp, c))

    # Canonical decompositions only (no compatibility tags). Hangul is
    # handled algorithmically at runtime and must not appear here.
    decomp = []
    for cp in range(MAX_CP):
        if 0xAC00 <= cp <= 0xD7A3:
            continue
        d = unicodedata.decomposition(chr(cp))
        if not d or d.startswith("<"):
            continue
        parts = [int(p, 16) for p in d.split()]
        assert 1 <= len(parts) <= 2, hex(cp)
        decomp.append((cp, parts[0], parts[1] if len(parts) == 2 else 0))

    # A pair (a, b) recomposes to cp iff NFC of the decomposition round-trips.
    # This bakes in the composition-exclusion rules without needing the list.
    compose = []
    for cp, a, b in decomp:
        if b == 0:
            continue
        if unicodedata.normalize("NFC", chr(a) + chr(b)) == chr(cp):
            compose.append(((a << 21) | b, cp))
    compose.sort()

    lower = []
    for cp in range(MAX_CP):
        ch = chr(cp)
        lo = ch.lower()
        if lo != ch:
            cps = [ord(c) for c in lo]
            assert len(cps) <= 3, hex(cp)
            cps += [0] * (3 - len(cps))
            lower.append((cp, cps))

    with open(out_path, "w", encoding="utf-8") as f:
        f.write(HEADER.format(uver=unicodedata.unidata_version))

        emit_ranges(f, "kLetterRanges", letter)
        emit_ranges(f, "kNumberRanges", number)

        f.write(f"inline constexpr CccEntry kCcc[] = {{\n")
        for cp, c in ccc:
            f.write(f"    {{0x{cp:X}, {c}}},\n")
        f.write("};\n")
        f.write(f"inline constexpr size_t kCcc_count = {len(ccc)};\n\n")

        f.write(f"inline constexpr DecompEntry kDecomp[] = {{\n")
        for cp, a, b in decomp:
            f.write(f"    {{0x{cp:X}, 0x{a:X}, 0x{b:X}}},\n")
        f.write("};\n")
        f.write(f"inline constexpr size_t kDecomp_count = {len(decomp)};\n\n")

        f.write(f"inline constexpr ComposeEntry kCompose[] = {{\n")
        for key, cp in compose:
            f.write(f"    {{0x{key:X}ULL, 0x{cp:X}}},\n")
        f.write("};\n")
        f.write(f"inline constexpr size_t kCompose_count = {len(compose)};\n\n")

        f.write(f"inline constexpr LowerEntry kLower[] = {{\n")
        for cp, cps in lower:
            f.write(f"    {{0x{cp:X}, {{0x{cps[0]:X}, 0x{cps[1]:X}, 0x{cps[2]:X}}}}},\n")
        f.write("};\n")
        f.write(f"inline constexpr size_t kLower_count = {len(lower)};\n")

        f.write(FOOTER)

    print(f"wrote {out_path}: {len(letter)} letter ranges, {len(number)} number ranges, "
          f"{len(ccc)} ccc, {len(decomp)} decomp, {len(compose)} compose, {len(lower)} lower")


if __name__ == "__main__":
    main(sys.argv[1] if len(sys.argv) > 1 else "include/eosedit/detail/unicode_tables.hpp")
