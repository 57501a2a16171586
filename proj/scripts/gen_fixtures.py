#!/usr/bin/env python3
"""Build the small model profile and all frozen test fixtures.

Produces, under the repo root:
  assets/model-small/vocab.json            token -> id (49408 entries)
  assets/model-small/merges.txt            ranked merge rules (+ version header)
  assets/model-small/text_encoder.safetensors
  assets/model-small/runconfig.json
  tests/fixtures/token_corpus.json         frozen prompts + reference ids
  tests/fixtures/unicode_cases.json        per-layer normalization/split oracles
  tests/fixtures/encoder_fixtures.safetensors  reference hidden states
  tests/fixtures/encoder_fixtures.json     prompt manifest for the above
  tests/fixtures/rng_schedule.json         RNG cross-check vectors + schedule values

Reference implementations: transformers CLIPTokenizer (tokenizers backend)
and transformers CLIPTextModel, both instantiated locally. The vocabulary is
trained on local Python sources and rebuilt with the standard CLIP layout:
256 byte symbols, 256 end-of-word symbols, one token per merge, then
<|startoftext|> and <|endoftext|>.
"""

import glob
import json
import math
import os
import random
import sys
import unicodedata

REPO = os.path.dirname(os.path.dirname(os.path.abspath(__file__)))
ASSETS = os.path.join(REPO, "assets", "model-small")
FIXTURES = os.path.join(REPO, "tests", "fixtures")

VOCAB_SIZE = 49408
N_MERGES = VOCAB_SIZE - 512 - 2
CONTEXT_LEN = 77
SOS = "<|startoftext|>"
EOS = "<|endoftext|>"

PATTERN = r"""'s|'t|'re|'ve|'m|'ll|'d|[\p{L}]+|[\p{N}]|[^\s\p{L}\p{N}]+"""


def bytes_to_unicode():
    bs = (list(range(ord("!"), ord("~") + 1))
          + list(range(ord("\xa1"), ord("\xac") + 1))
          + list(range(ord("\xae"), ord("\xff") + 1)))
    cs = bs[:]
    n = 0
    for b in range(2**8):
        if b not in bs:
            bs.append(b)
            cs.append(2**8 + n)
            n += 1
    return dict(zip(bs, [chr(c) for c in cs]))


def train_merges():
    from tokenizers import Tokenizer, Regex, normalizers, pre_tokenizers, trainers
    from tokenizers.models import BPE

    files = []
    for root in ["/usr/local/lib/python3.10/dist-packages", "/usr/lib/python3.10"]:
        files += glob.glob(os.path.join(root, "**/*.py"), recursive=True)
    files.sort()
    texts, total = [], 0
    for path in files:
        try:
            with open(path, "r", encoding="utf-8", errors="ignore") as fh:
                s = fh.read()
        except OSError:
            continue
        s = s.replace("<|", "< |")  # keep special-token literals out of training text
        texts.append(s)
        total += len(s)
        if total > 40_000_000:
            break

    tok = Tokenizer(BPE(unk_token=None, end_of_word_suffix="</w>"))
    tok.normalizer = normalizers.Sequence(
        [normalizers.NFC(), normalizers.Replace(Regex(r"\s+"), " "), normalizers.Lowercase()])
    tok.pre_tokenizer = pre_tokenizers.Sequence([
        pre_tokenizers.Split(Regex(PATTERN), behavior="removed", invert=True),
        pre_tokenizers.ByteLevel(add_prefix_space=False, use_regex=False),
    ])
    trainer = trainers.BpeTrainer(
        vocab_size=VOCAB_SIZE - 2, min_frequency=1, show_progress=False,
        special_tokens=[], initial_alphabet=pre_tokenizers.ByteLevel.alphabet(),
        end_of_word_suffix="</w>", continuing_subword_prefix="")
    tok.train_from_iterator(texts, trainer)

    out = "/tmp/eosedit_bpe"
    os.makedirs(out, exist_ok=True)
    tok.model.save(out)
    merges = []
    with open(os.path.join(out, "merges.txt"), encoding="utf-8") as fh:
        for line in fh:
            line = line.rstrip("\n")
            if line.startswith("#version:") or not line:
                continue
            a, b = line.split(" ")
            merges.append((a, b))
    return merges


def build_artifacts(trained):
    b2u = bytes_to_unicode()
    base = list(b2u.values()) + [c + "</w>" for c in b2u.values()]
    minted = set(base) | {SOS, EOS}

    kept = []
    for a, b in trained:
        prod = a + b
        if prod in minted:
            continue
        if a not in minted or b not in minted:
            continue
        minted.add(prod)
        kept.append((a, b))
        if len(kept) == N_MERGES:
            break
    assert len(kept) == N_MERGES, f"only {len(kept)} usable merges"

    vocab = {}
    for tok in base:
        vocab[tok] = len(vocab)
    for a, b in kept:
        vocab[a + b] = len(vocab)
    vocab[SOS] = len(vocab)
    vocab[EOS] = len(vocab)
    assert len(vocab) == VOCAB_SIZE
    assert vocab[SOS] == 49406 and vocab[EOS] == 49407

    os.makedirs(ASSETS, exist_ok=True)
    with open(os.path.join(ASSETS, "vocab.json"), "w", encoding="utf-8") as fh:
        json.dump(vocab, fh, ensure_ascii=False, separators=(",", ":"))
    with open(os.path.join(ASSETS, "merges.txt"), "w", encoding="utf-8") as fh:
        fh.write("#version: 0.2\n")
        for a, b in kept:
            fh.write(f"{a} {b}\n")
    return vocab, kept


def reference_tokenizer(vocab, merges):
    from transformers.models.clip.tokenization_clip import CLIPTokenizer
    return CLIPTokenizer(vocab=vocab, merges=list(merges), model_max_length=CONTEXT_LEN)


def corpus_prompts():
    rng = random.Random(20260810)
    prompts = [
        # prompts quoted by the editing figures / protocol
        "a headshot of a woman",
        "a headshot of a man",
        "a nurse, man, glasses",
        "a dog",
        "painting",
        "a person with an eyeglass",
        "a nurse",
        "man, glasses",
        "a woman",
        "a man",
        "A woman with eyeglasses",
        "A man with mustache",
        "a person with mustache",
        "man with eyeglasses",
        "sea",
        "dressed woman",
        "dressed man",
        "eyeglasses",
        "a photo of a cat",
        "makeup",
    ]
    subjects = ["a portrait of a sailor", "an oil painting of a lighthouse", "a red vintage car",
                "a cozy cabin in the woods", "a cyberpunk street market", "an astronaut riding a horse",
                "a bowl of ramen", "a medieval castle on a cliff", "a golden retriever puppy",
                "a foggy mountain lake", "a ballerina mid-leap", "a steampunk airship",
                "a field of sunflowers", "a neon-lit alleyway", "a marble statue of a philosopher",
                "a wizard reading an ancient tome", "a tropical beach at dusk", "a snow leopard",
                "a violinist on a rooftop", "a lighthouse keeper"]
    styles = ["in watercolor", "at golden hour", "highly detailed", "in the style of impressionism",
              "studio lighting", "35mm film", "digital art", "low poly", "black and white",
              "wide angle shot", "macro photography", "volumetric lighting", "octane render",
              "with dramatic shadows", "minimalist"]
    attrs = ["blue eyes", "curly hair", "a leather jacket", "freckles", "a straw hat",
             "silver earrings", "a warm smile", "tattoos", "a scarf", "round spectacles"]
    for s in subjects:
        prompts.append(s)
        prompts.append(f"{s}, {rng.choice(styles)}")
        prompts.append(f"{s} with {rng.choice(attrs)}, {rng.choice(styles)}")
    for i in range(70):
        k = rng.randint(2, 4)
        prompts.append(", ".join(rng.sample(subjects + attrs + styles, k)))
    animals = ["dog", "cat", "fox", "owl", "horse", "whale", "sparrow", "lion",
               "rabbit", "turtle", "panda", "wolf"]
    verbs = ["sleeping", "running", "flying", "swimming", "reading a book",
             "wearing a hat", "under the rain", "at sunrise"]
    for a in animals:
        prompts.append(f"a {a} {rng.choice(verbs)}")
        prompts.append(f"a painting of a {a}, {rng.choice(styles)}")

    prompts += [
        "",
        " ",
        "\t\n  \r",
        "a",
        "Z",
        "7",
        "...",
        "?!",
        "don't",
        "we'RE    HERE, aren't we?",
        "I'll sing, you'd dance, they've gone",
        "it's 3.14159, not 22/7",
        "100 dogs & 3 cats",
        "hyphen-ated and_snake_cased words",
        "quotes 'single' \"double\"",
        "‘curly’ “quotes”",
        "café au lait",
        "café au lait",
        "naïve résumé à la carte",
        "straße und groß",
        "İstanbul and ıstanbul",
        "ΣΑΣ and final ς",
        "ſlong s and 'ſ",
        "Москва ночью",
        "日本語のテキスト",
        "一二三 123 四五",
        "한국어 텍스트",
        "שלום עולם",
        "مرحبا بالعالم",
        "mixed 日本語 and english",
        "\U0001f600\U0001f642 emoji pair",
        "rocket \U0001f680 to the \U0001f315",
        "\U0001d400\U0001d41a math bold letters",
        "roman numeral Ⅻ and fraction ½",
        "a nbsp separated",
        "em space and ideographic　space",
        "ctrlcharshere",
        "tab\tand\nnewline collapse",
        "  leading and trailing  ",
        "é́ stacked accents",
        "ọ̈ ordering of marks",
        "Hangul 가각 composed",
        "각 jamo to syllable",
        "Å angstrom sign",
        "Ω ohm sign",
        "ligature ﬁle stays",
        "fullwidth ＡＢＣ letters",
        "Ⓐ circled letter",
        "superscript x² and y³",
        "word " * 200,
        "antidisestablishmentarianism " * 12,
        "a " * 80,
        ("pneumonoultramicroscopicsilicovolcanoconiosis "
         "supercalifragilisticexpialidocious honorificabilitudinitatibus"),
    ]

    seen = set()
    out = []
    for p in prompts:
        if p not in seen:
            seen.add(p)
            out.append(p)
    assert len(out) >= 200, len(out)
    return out


def freeze_corpus(tok):
    prompts = corpus_prompts()
    enc = tok(prompts, padding="max_length", truncation=True,
              max_length=CONTEXT_LEN)["input_ids"]
    eos_id = tok.eos_token_id
    rows = []
    for p, ids in zip(prompts, enc):
        assert len(ids) == CONTEXT_LEN
        rows.append({"prompt": p, "ids": ids, "eos_index": ids.index(eos_id)})
    os.makedirs(FIXTURES, exist_ok=True)
    with open(os.path.join(FIXTURES, "token_corpus.json"), "w", encoding="utf-8") as fh:
        json.dump({"context_len": CONTEXT_LEN, "sos_id": tok.bos_token_id,
                   "eos_id": eos_id, "vocab_size": VOCAB_SIZE, "cases": rows},
                  fh, ensure_ascii=False, indent=1)
    return prompts


def freeze_unicode_cases(prompts):
    from tokenizers import Regex, normalizers, pre_tokenizers

    norm = normalizers.Sequence(
        [normalizers.NFC(), normalizers.Replace(Regex(r"\s+"), " "), normalizers.Lowercase()])
    nfc = normalizers.NFC()
    lower = normalizers.Lowercase()
    split = pre_tokenizers.Split(Regex(PATTERN), behavior="removed", invert=True)

    rng = random.Random(1234)
    extra = []
    # random strings over assigned code points, plus mark-heavy sequences
    pools = [(0x20, 0x2FF), (0x300, 0x36F), (0x370, 0x5FF), (0x3040, 0x30FF),
             (0xAC00, 0xD7A3), (0x1E00, 0x1FFF), (0x2000, 0x206F), (0x1F300, 0x1F64F)]
    for _ in range(160):
        n = rng.randint(1, 24)
        chars = []
        for _ in range(n):
            lo, hi = rng.choice(pools)
            cp = rng.randint(lo, hi)
            if unicodedata.category(chr(cp)) in ("Cn", "Cs", "Co"):
                continue
            chars.append(chr(cp))
        if chars:
            extra.append("".join(chars))
    # targeted NFC exercises
    extra += ["Å", "Å", "Å", "q̣̇", "q̣̇",
              "ḍ̇", "ḍ̇", "ཱཱི", "가", "가",
              "각", "ನ್ನ", "אָּ",
              "بَّ", "ṩs", "ẛ", "ẛ̣"]

    everything = prompts + extra
    cases = []
    for s in everything:
        cases.append({
            "raw": s,
            "nfc": nfc.normalize_str(s),
            "lower": lower.normalize_str(s),
            "normalized": norm.normalize_str(s),
            "words": [w for w, _ in split.pre_tokenize_str(norm.normalize_str(s))],
        })
    with open(os.path.join(FIXTURES, "unicode_cases.json"), "w", encoding="utf-8") as fh:
        json.dump(cases, fh, ensure_ascii=False, indent=1)


ENCODER_CFG = dict(vocab_size=VOCAB_SIZE, hidden_size=64, intermediate_size=256,
                   num_hidden_layers=4, num_attention_heads=4,
                   max_position_embeddings=CONTEXT_LEN, hidden_act="quick_gelu",
                   layer_norm_eps=1e-5, bos_token_id=49406, eos_token_id=49407)

FIXTURE_PROMPTS = [
    "a headshot of a woman",
    "a headshot of a man",
    "a nurse",
    "a dog",
    "",
    "a photo of a cat",
    "eyeglasses",
    "painting",
    "a person with an eyeglass",
    "man with eyeglasses",
    "a woman with eyeglasses",
    "sea",
]


def build_encoder(tok):
    import torch
    from safetensors.torch import save_file
    from transformers import CLIPTextConfig, CLIPTextModel

    torch.manual_seed(20260810)
    torch.set_num_threads(1)
    cfg = CLIPTextConfig(**ENCODER_CFG)
    cfg._attn_implementation = "eager"
    model = CLIPTextModel(cfg).eval()

    gen = torch.Generator().manual_seed(97)
    scales = {
        "token_embedding.weight": 0.05,
        "position_embedding.weight": 0.02,
        "q_proj.weight": 0.12, "k_proj.weight": 0.12, "v_proj.weight": 0.10,
        "out_proj.weight": 0.10, "fc1.weight": 0.08, "fc2.weight": 0.08,
    }
    with torch.no_grad():
        for name, p in sorted(model.named_parameters()):
            hit = next((v for k, v in scales.items() if name.endswith(k)), None)
            if hit is not None:
                p.copy_(torch.randn(p.shape, generator=gen) * hit)
            elif "layer_norm" in name or "final_layer_norm" in name:
                if name.endswith("weight"):
                    p.copy_(1.0 + 0.1 * torch.randn(p.shape, generator=gen))
                else:
                    p.copy_(0.05 * torch.randn(p.shape, generator=gen))
            elif name.endswith("bias"):
                p.copy_(0.02 * torch.randn(p.shape, generator=gen))
            else:
                raise RuntimeError(f"unhandled parameter {name}")

    state = {k: v.contiguous() for k, v in model.state_dict().items()}
    save_file(state, os.path.join(ASSETS, "text_encoder.safetensors"))

    ids = tok(FIXTURE_PROMPTS, padding="max_length", truncation=True,
              max_length=CONTEXT_LEN, return_tensors="pt")["input_ids"]
    import torch as _t
    with _t.no_grad():
        hidden = model(input_ids=ids).last_hidden_state.float()
    stats = hidden.abs().max().item(), hidden.std().item()
    print(f"fixture hidden: max abs {stats[0]:.3f}, std {stats[1]:.3f}")
    assert math.isfinite(stats[0])

    tensors = {f"hidden/{i}": hidden[i].contiguous() for i in range(len(FIXTURE_PROMPTS))}
    save_file(tensors, os.path.join(FIXTURES, "encoder_fixtures.safetensors"))
    with open(os.path.join(FIXTURES, "encoder_fixtures.json"), "w", encoding="utf-8") as fh:
        json.dump({"prompts": FIXTURE_PROMPTS,
                   "config": {"d_model": 64, "n_layers": 4, "n_heads": 4,
                              "context_len": CONTEXT_LEN, "vocab_size": VOCAB_SIZE,
                              "activation": "quick_gelu", "layer_norm_eps": 1e-5}},
                  fh, indent=1)


MASK64 = (1 << 64) - 1


def _rotl(x, k):
    return ((x << k) | (x >> (64 - k))) & MASK64


class SplitMix64:
    def __init__(self, seed):
        self.s = seed & MASK64

    def next(self):
        self.s = (self.s + 0x9E3779B97F4A7C15) & MASK64
        z = self.s
        z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & MASK64
        z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & MASK64
        return z ^ (z >> 31)


class Xoshiro256pp:
    def __init__(self, seed):
        sm = SplitMix64(seed)
        self.s = [sm.next() for _ in range(4)]

    def next(self):
        s = self.s
        result = (_rotl((s[0] + s[3]) & MASK64, 23) + s[0]) & MASK64
        t = (s[1] << 17) & MASK64
        s[2] ^= s[0]
        s[3] ^= s[1]
        s[1] ^= s[2]
        s[0] ^= s[3]
        s[2] ^= t
        s[3] = _rotl(s[3], 45)
        return result

    def uniform(self):
        return (self.next() >> 11) * (2.0 ** -53)

    def normal_pair(self):
        u1 = self.uniform()
        u2 = self.uniform()
        r = math.sqrt(-2.0 * math.log(1.0 - u1))
        return (r * math.cos(2.0 * math.pi * u2), r * math.sin(2.0 * math.pi * u2))


def freeze_rng_and_schedule():
    vectors = {}
    for seed in (42, 43, 7):
        gen = Xoshiro256pp(seed)
        u64 = [gen.next() for _ in range(6)]
        gen = Xoshiro256pp(seed)
        normals = []
        while len(normals) < 8:
            normals.extend(gen.normal_pair())
        vectors[str(seed)] = {"u64": [str(v) for v in u64],
                              "normals": normals[:8]}

    # scaled-linear beta schedule, 1000 train steps
    T = 1000
    b0, b1 = 0.00085, 0.012
    ac, prod = [], 1.0
    for t in range(T):
        beta = (math.sqrt(b0) + (t / (T - 1)) * (math.sqrt(b1) - math.sqrt(b0))) ** 2
        prod *= 1.0 - beta
        ac.append(prod)
    sched = {"alphas_cumprod_0": ac[0], "alphas_cumprod_499": ac[499],
             "alphas_cumprod_999": ac[999]}

    with open(os.path.join(FIXTURES, "rng_schedule.json"), "w", encoding="utf-8") as fh:
        json.dump({"xoshiro256pp": vectors, "scaled_linear": sched}, fh, indent=1)


def write_runconfig():
    cfg = {
        "vocab": "vocab.json",
        "merges": "merges.txt",
        "encoder_weights": "text_encoder.safetensors",
        "context_len": CONTEXT_LEN,
        "encoder": {"d_model": 64, "n_layers": 4, "n_heads": 4,
                    "context_len": CONTEXT_LEN, "vocab_size": VOCAB_SIZE,
                    "activation": "quick_gelu", "layer_norm_eps": 1e-5},
        "backend": "toy",
        "steps": 50,
        "cfg_scale": 1.0,
        "w": 1.0,
        "seed": 0,
        "out_dir": "out",
    }
    with open(os.path.join(ASSETS, "runconfig.json"), "w", encoding="utf-8") as fh:
        json.dump(cfg, fh, indent=1)


def main():
    print("training merges...")
    trained = train_merges()
    print(f"trained {len(trained)} merges")
    vocab, merges = build_artifacts(trained)
    print("artifacts written")

    tok = reference_tokenizer(vocab, merges)
    assert tok.bos_token_id == 49406 and tok.eos_token_id == 49407

    prompts = freeze_corpus(tok)
    print(f"corpus frozen: {len(prompts)} prompts")
    freeze_unicode_cases(prompts)
    print("unicode cases frozen")
    build_encoder(tok)
    print("encoder weights + fixtures written")
    freeze_rng_and_schedule()
    write_runconfig()
    print("done")


if __name__ == "__main__":
    sys.exit(main())
