#!/usr/bin/env python3
"""Independent reference implementation of the text pipeline contracts.

This script is test-side tooling: it re-implements normalization, sentence
splitting, hash embedding, percentile, the chunking strategies, and brute-force
retrieval from their documented contracts, with no shared code with the C++
library. Running it regenerates tests/fixtures/frozen.json, whose values the
C++ test suites assert against.

Usage: python3 tests/oracle/pipeline_reference.py [out.json]
"""

import json
import math
import struct
import sys
import unicodedata

# ---------------------------------------------------------------------------
# text

def normalize_text(raw: str) -> str:
    noeol = raw.replace("\r\n", "\n").replace("\r", "\n")
    return unicodedata.normalize("NFKC", noeol)


def token_estimate(text: str) -> int:
    n = len(text.encode("utf-8"))
    return max(1, (n + 3) // 4)


ASCII_WS = set(" \t\n\v\f")
TERMINATORS = set(".!?．！？")
CLOSERS = set("\"')]}’”»）」』")


def split_sentences(text: str):
    """Returns list of (start_byte, end_byte, sentence_text) over normalized text."""
    data = text
    # byte offset per char index
    spans = []
    sent_start = 0  # byte offset
    after_term = False
    has_content = False
    i = 0  # char index
    byte_pos = 0
    n = len(data)

    def char_bytes(c):
        return len(c.encode("utf-8"))

    while i < n:
        c = data[i]
        if c in ASCII_WS:
            ws_start_b = byte_pos
            run = []
            while i < n and data[i] in ASCII_WS:
                run.append(data[i])
                byte_pos += char_bytes(data[i])
                i += 1
            parabreak = "\n\n" in "".join(run)
            boundary = (after_term or (parabreak and has_content)) and i < n
            if boundary and has_content:
                spans.append((sent_start, byte_pos))
                sent_start = byte_pos
                after_term = False
                has_content = False
        else:
            if c in TERMINATORS:
                after_term = True
            elif c in CLOSERS and after_term:
                pass  # closers keep the terminated state
            else:
                after_term = False
            has_content = True
            byte_pos += char_bytes(c)
            i += 1
    if byte_pos > sent_start:
        spans.append((sent_start, byte_pos))
    raw = data.encode("utf-8")
    return [(s, e, raw[s:e].decode("utf-8")) for (s, e) in spans]


# ---------------------------------------------------------------------------
# hash embedding

FNV_OFFSET = 14695981039346656037
FNV_PRIME = 1099511628211
MASK64 = (1 << 64) - 1
DIM = 256


def fnv1a64(data: bytes) -> int:
    h = FNV_OFFSET
    for b in data:
        h ^= b
        h = (h * FNV_PRIME) & MASK64
    return h


def ascii_lower(data: bytes) -> bytes:
    return bytes(c + 32 if 0x41 <= c <= 0x5A else c for c in data)


def f32(x: float) -> float:
    return struct.unpack("<f", struct.pack("<f", x))[0]


def hash_embed(text: str):
    data = ascii_lower(normalize_text(text).encode("utf-8"))
    if len(data) < 3:
        grams = [data]
    else:
        grams = [data[k:k + 3] for k in range(len(data) - 2)]
    acc = [0.0] * DIM
    for g in grams:
        h = fnv1a64(g)
        bucket = h % DIM
        sign = 1.0 if (h >> 63) == 0 else -1.0
        acc[bucket] += sign
    ss = 0.0
    for v in acc:
        ss += v * v
    norm = math.sqrt(ss)
    if norm == 0.0:
        out = [0.0] * DIM
        out[0] = 1.0
        return out
    return [f32(v / norm) for v in acc]


def dot(a, b) -> float:
    s = 0.0
    for x, y in zip(a, b):
        s += float(x) * float(y)
    return s


def cosine_distance(a, b) -> float:
    return 1.0 - dot(a, b)


# ---------------------------------------------------------------------------
# percentile (linear interpolation between order statistics)

def percentile(values, p: float) -> float:
    assert values and 0.0 < p < 100.0
    v = sorted(values)
    r = (p / 100.0) * (len(v) - 1)
    lo = int(math.floor(r))
    frac = r - lo
    if lo + 1 >= len(v) or frac == 0.0:
        return v[lo]
    return v[lo] + frac * (v[lo + 1] - v[lo])


# ---------------------------------------------------------------------------
# chunking (all functions operate on byte spans of normalized text)

DEFAULT_DELIMS = ["\n\n", "\n", ". ", " "]


def is_ws_byte(b: int) -> bool:
    return b in (0x20, 0x09, 0x0A, 0x0B, 0x0C)


def tokens_of(raw: bytes, s: int, e: int) -> int:
    return max(1, (e - s + 3) // 4)


def fixed_spans(raw: bytes, s: int, e: int, target: int):
    tb = 4 * target
    out = []
    start = s
    while (e - start) > tb:
        nominal = start + tb
        end = nominal
        w = -1
        lo = max(nominal - 16, start)
        for cand in range(nominal - 1, lo - 1, -1):
            if is_ws_byte(raw[cand]) and cand + 1 > start:
                w = cand
                break
        if w >= 0:
            end = w + 1
        else:
            while end > start + 1 and (raw[end] & 0xC0) == 0x80:
                end -= 1
        out.append((start, end))
        start = end
    out.append((start, e))
    return out


def split_on(raw: bytes, s: int, e: int, delim: bytes):
    out = []
    start = s
    pos = raw.find(delim, s, e)
    while pos != -1:
        cut = pos + len(delim)
        if cut < e:
            out.append((start, cut))
            start = cut
        pos = raw.find(delim, cut, e)
    out.append((start, e))
    return out


def merge_greedy(spans, raw, target):
    res = []
    for sp in spans:
        if res and tokens_of(raw, res[-1][0], sp[1]) <= target:
            res[-1] = (res[-1][0], sp[1])
        else:
            res.append(sp)
    return res


def recursive_spans(raw: bytes, s: int, e: int, target: int, delims, level=0):
    if tokens_of(raw, s, e) <= target:
        return [(s, e)]
    if level >= len(delims):
        return fixed_spans(raw, s, e, target)
    parts = split_on(raw, s, e, delims[level].encode("utf-8"))
    if len(parts) == 1:
        return recursive_spans(raw, s, e, target, delims, level + 1)
    out = []
    pending = []
    for p in parts:
        if tokens_of(raw, p[0], p[1]) <= target:
            pending.append(p)
        else:
            out.extend(merge_greedy(pending, raw, target))
            pending = []
            out.extend(recursive_spans(raw, p[0], p[1], target, delims, level + 1))
    out.extend(merge_greedy(pending, raw, target))
    return out


def recursive_chunk(raw: bytes, s: int, e: int, target: int, delims):
    """Recursive split plus a final greedy cleanup that absorbs stray
    delimiter-only leftovers across recursion boundaries."""
    return merge_greedy(recursive_spans(raw, s, e, target, delims), raw, target)


def semantic_spans(text: str, window: int, pct: float, min_tokens: int,
                   max_tokens: int, target: int, delims):
    raw = text.encode("utf-8")
    sentences = split_sentences(text)
    units = []
    for u in range(0, len(sentences), window):
        group = sentences[u:u + window]
        units.append((group[0][0], group[-1][1]))
    vecs = [hash_embed(raw[a:b].decode("utf-8")) for (a, b) in units]
    dists = [cosine_distance(vecs[k], vecs[k + 1]) for k in range(len(vecs) - 1)]
    breakpoints = []
    tau = None
    if dists:
        tau = percentile(dists, pct)
        breakpoints = [k for k, d in enumerate(dists) if d > tau]
    # sentence runs between breakpoints
    spans = []
    start = 0
    for bp in breakpoints:
        end = units[bp][1]
        spans.append((start, end))
        start = end
    spans.append((start, len(raw)))
    # merge pass: undersized chunks merge forward, last merges backward
    i = 0
    while i < len(spans):
        if tokens_of(raw, spans[i][0], spans[i][1]) < min_tokens and len(spans) > 1:
            if i + 1 < len(spans):
                spans[i] = (spans[i][0], spans[i + 1][1])
                del spans[i + 1]
            else:
                spans[i - 1] = (spans[i - 1][0], spans[i][1])
                del spans[i]
                break
        else:
            i += 1
    # split pass: oversized chunks re-split recursively with target = max_tokens
    out = []
    for sp in spans:
        if tokens_of(raw, sp[0], sp[1]) > max_tokens:
            out.extend(recursive_chunk(raw, sp[0], sp[1], max_tokens, delims))
        else:
            out.append(sp)
    return out, dists, tau, breakpoints, units


# ---------------------------------------------------------------------------
# fixtures

SENTENCE_CASES = [
    "A. B.",
    "No terminator here",
    "P1.\n\nP2.",
    "Hello world! How are you? Fine.",
    'He said "Stop." Then left.',
    "One.Two",
    "e.g. example",
    "Tabs.\tNext.",
    "Multi  spaces. End",
    "Trailing. ",
    "A.\nB.",
    "Line1\nLine2",
    "Para1\n\nPara2",
    "Q? 'Yes.' End.",
    "日本。テスト",
    "全角？　はい",
    "Mr. Smith went. Home.",
    "(Nested.) After.",
    "Wait...\nOK.",
    "A!? B",
    "\n\nLeading blank",
    "End with break.\n\n",
    "CRLF.\r\nNext.",
    "Full．Width！Test？ Done.",
    "はい？」 次",
]

NFKC_CASES = [
    "a\r\nb",
    "ﬁle",
    "abc",
    "① point",
    "café bar",
    "ﬀ and ﬃ",
]

TEN_UNIT_DOC = (
    "amber basin carries quiet driftwood. "
    "basin carries quiet driftwood amber. "
    "carries quiet driftwood amber basin. "
    "quiet driftwood amber basin carries. "
    "driftwood amber basin carries quiet. "
    "zesty krypton flux jigsaw vortex whirl. "
    "krypton flux jigsaw vortex whirl zesty. "
    "flux jigsaw vortex whirl zesty krypton. "
    "jigsaw vortex whirl zesty krypton flux. "
    "vortex whirl zesty krypton flux jigsaw."
)

CORPUS_DOCS = [
    {
        "doc_id": "harbor",
        "title": "Harbor log",
        "text": "Harbor cranes lift copper beams. The tide gauge blinks amber at dusk. "
                "Ferries drift past the mooring line.",
    },
    {
        "doc_id": "orchard",
        "title": "Orchard notes",
        "text": "Orchard rows follow the ridge. Plum blossoms scatter over gravel. "
                "The cider press waits under canvas.",
    },
    {
        "doc_id": "observatory",
        "title": "Observatory journal",
        "text": "The observatory dome rotates slowly. Star charts cover the oak desk. "
                "A brass telescope tracks the comet. Cold air settles on the catwalk.",
    },
    {
        "doc_id": "bakery",
        "title": "Bakery ledger",
        "text": "Flour dust settles on the counter. The oven bricks hold steady heat. "
                "Rye loaves cool beside the window.",
    },
    {
        "doc_id": "glacier",
        "title": "Glacier survey",
        "text": "Glacier melt feeds the bright ravine. Ice cores rest in the steel locker. "
                "Survey flags mark the crevasse field.",
    },
]

SENTINELS = {
    "harbor": "The tide gauge blinks amber at dusk.",
    "orchard": "The cider press waits under canvas.",
    "observatory": "A brass telescope tracks the comet.",
    "bakery": "The oven bricks hold steady heat.",
    "glacier": "Ice cores rest in the steel locker.",
}


def main():
    out = {}

    out["nfkc"] = [{"raw": r, "normalized": normalize_text(r)} for r in NFKC_CASES]

    sent = []
    for raw in SENTENCE_CASES:
        text = normalize_text(raw)
        parts = split_sentences(text)
        assert "".join(p[2] for p in parts) == text
        sent.append({"raw": raw, "normalized": text,
                     "sentences": [p[2] for p in parts]})
    out["sentences"] = sent

    out["hash_embed"] = {}
    for probe in ["abc", "aaaa", "ab", "the quick brown fox"]:
        out["hash_embed"][probe] = hash_embed(probe)

    # ten-unit semantic fixture, window 1, percentile 95, defaults 16/512
    text = normalize_text(TEN_UNIT_DOC)
    spans, dists, tau, bps, units = semantic_spans(
        text, window=1, pct=95.0, min_tokens=16, max_tokens=512,
        target=128, delims=DEFAULT_DELIMS)
    assert len(units) == 10, len(units)
    assert bps == [4], (bps, dists, tau)  # one breakpoint, between units 5 and 6
    assert dists.index(max(dists)) == 4
    out["ten_unit"] = {
        "text": TEN_UNIT_DOC,
        "unit_spans": units,
        "distances": dists,
        "tau": tau,
        "breakpoints": bps,
        "chunk_spans": spans,
    }

    # five-doc corpus: semantic chunking with defaults, brute-force retrieval
    corpus_frozen = []
    all_chunks = []  # (chunk_id, doc_id, span, vec, text)
    for doc in CORPUS_DOCS:
        text = normalize_text(doc["text"])
        spans, dists, tau, bps, units = semantic_spans(
            text, window=1, pct=95.0, min_tokens=16, max_tokens=512,
            target=128, delims=DEFAULT_DELIMS)
        raw = text.encode("utf-8")
        chunks = []
        for k, (a, b) in enumerate(spans):
            cid = f"{doc['doc_id']}#{k}"
            ctext = raw[a:b].decode("utf-8")
            all_chunks.append((cid, doc["doc_id"], (a, b), hash_embed(ctext), ctext))
            chunks.append({"chunk_id": cid, "start": a, "end": b})
        corpus_frozen.append({"doc_id": doc["doc_id"], "chunks": chunks,
                              "distances": dists, "breakpoints": bps})
    out["fixture_corpus"] = {
        "docs": corpus_frozen,
        "total_chunks": len(all_chunks),
    }

    queries = {}
    for doc_id, sentinel in SENTINELS.items():
        qv = hash_embed(sentinel)
        scored = sorted(
            ((dot(qv, vec), cid) for (cid, d, sp, vec, t) in all_chunks),
            key=lambda sc: (-sc[0], sc[1]))
        top = scored[0]
        # the sentinel's chunk must win retrieval and contain the sentinel text
        assert top[1].startswith(doc_id + "#"), (doc_id, scored[:3])
        ctext = next(t for (cid, d, sp, vec, t) in all_chunks if cid == top[1])
        assert sentinel in ctext
        queries[doc_id] = {"query": sentinel, "top_chunk": top[1], "top_score": top[0]}
    out["sentinel_queries"] = queries

    # percentile spot values
    out["percentile"] = [
        {"values": [1, 2, 3, 4], "p": 50.0, "result": percentile([1, 2, 3, 4], 50.0)},
        {"values": [7], "p": 30.0, "result": percentile([7], 30.0)},
        {"values": [0, 10], "p": 95.0, "result": percentile([0, 10], 95.0)},
    ]

    # fixed chunking arithmetic fixtures
    no_ws = "a" * 2000
    out["fixed_no_ws_2000"] = fixed_spans(no_ws.encode(), 0, 2000, 128)
    words = ("lorem ipsum dolor sit amet consectetur adipiscing elit sed do " * 17)[:1000]
    assert len(words.encode()) == 1000
    out["fixed_words_1000"] = {
        "text": words,
        "spans": fixed_spans(words.encode(), 0, 1000, 128),
    }

    # recursive chunking trace fixture: two paragraphs, each > target
    para1 = " ".join(f"karst field {i} drains beneath the limestone shelf." for i in range(20))
    para2 = " ".join(f"signal tower {i} repeats the night beacon code." for i in range(20))
    rec_doc = para1 + "\n\n" + para2
    rtext = normalize_text(rec_doc)
    rraw = rtext.encode("utf-8")
    rspans = recursive_chunk(rraw, 0, len(rraw), 128, DEFAULT_DELIMS)
    out["recursive_two_paragraphs"] = {
        "text": rec_doc,
        "spans": rspans,
        "para1_bytes": len(para1.encode()),
    }

    path = sys.argv[1] if len(sys.argv) > 1 else "tests/fixtures/frozen.json"
    with open(path, "w", encoding="utf-8") as f:
        json.dump(out, f, indent=1, ensure_ascii=True, sort_keys=True)
        f.write("\n")
    print(f"wrote {path}")

    fixtures_dir = path.rsplit("/", 1)[0]
    with open(f"{fixtures_dir}/corpus_5docs.jsonl", "w", encoding="utf-8") as f:
        for doc in CORPUS_DOCS:
            f.write(json.dumps(doc, ensure_ascii=True, sort_keys=True) + "\n")
    with open(f"{fixtures_dir}/semantic_10unit.jsonl", "w", encoding="utf-8") as f:
        f.write(json.dumps({"doc_id": "tenunit", "title": "Ten units",
                            "text": TEN_UNIT_DOC},
                           ensure_ascii=True, sort_keys=True) + "\n")
    print(f"wrote {fixtures_dir}/corpus_5docs.jsonl and semantic_10unit.jsonl")
    print("ten_unit distances:", [round(x, 4) for x in out["ten_unit"]["distances"]])
    print("fixture corpus chunks:", len(all_chunks))


if __name__ == "__main__":
    main()
