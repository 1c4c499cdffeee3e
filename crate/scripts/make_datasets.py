#!/usr/bin/env python3
"""Build the bundled desk-scale datasets under data/.

Inputs are two wheels fetched from PyPI (no network access beyond the
package index is needed):

    pip download --no-deps -d wheels wordfreq==3.1.1 mlxtend==0.24.0
    python3 scripts/make_datasets.py wheels/wordfreq-3.1.1-py3-none-any.whl \
        wheels/mlxtend-0.24.0-py3-none-any.whl data

Language corpora are sampled sentence by sentence from the wordfreq
frequency lists (one training file and one query file per language).
MNIST is the 5000-image subset that ships with mlxtend, split 400/100
per digit into IDX train/test files.
"""

import gzip
import random
import struct
import sys
import zipfile
from pathlib import Path

LANGUAGES = ["de", "en", "es", "fr", "it", "nl", "pt", "sv"]
TRAIN_CHARS = 120_000
TEST_SENTENCES = 300
SEED = 20230221


def _mp(b, i):
    t = b[i]
    i += 1
    if t <= 0x7F:
        return t, i
    if 0x80 <= t <= 0x8F:
        return _mp_map(b, i, t & 0x0F)
    if 0x90 <= t <= 0x9F:
        return _mp_arr(b, i, t & 0x0F)
    if 0xA0 <= t <= 0xBF:
        n = t & 0x1F
        return b[i:i + n].decode(), i + n
    if t == 0xC0:
        return None, i
    if t in (0xC2, 0xC3):
        return t == 0xC3, i
    if t == 0xD9:
        n = b[i]
        return b[i + 1:i + 1 + n].decode(), i + 1 + n
    if t == 0xDA:
        n = struct.unpack(">H", b[i:i + 2])[0]
        return b[i + 2:i + 2 + n].decode(), i + 2 + n
    if t == 0xDC:
        return _mp_arr(b, i + 2, struct.unpack(">H", b[i:i + 2])[0])
    if t == 0xDD:
        return _mp_arr(b, i + 4, struct.unpack(">I", b[i:i + 4])[0])
    if t == 0xCC:
        return b[i], i + 1
    if t == 0xCD:
        return struct.unpack(">H", b[i:i + 2])[0], i + 2
    raise ValueError(f"unsupported msgpack tag {t:#x} at {i - 1}")


def _mp_arr(b, i, n):
    out = []
    for _ in range(n):
        v, i = _mp(b, i)
        out.append(v)
    return out, i


def _mp_map(b, i, n):
    out = {}
    for _ in range(n):
        k, i = _mp(b, i)
        v, i = _mp(b, i)
        out[k] = v
    return out, i


def word_table(wheel, lang):
    raw = gzip.decompress(wheel.read(f"wordfreq/data/small_{lang}.msgpack.gz"))
    buckets, _ = _mp(raw, 0)
    words, weights = [], []
    # bucket k holds words with frequency 10^(-k/100)
    for k, bucket in enumerate(buckets[1:]):
        for w in bucket:
            if w.isalpha():
                words.append(w)
                weights.append(10.0 ** (-k / 100.0))
    return words, weights


def sentence(rng, words, cum):
    n = rng.randint(8, 24)
    ws = rng.choices(words, cum_weights=cum, k=n)
    s = " ".join(ws)
    return s[0].upper() + s[1:] + "."


def build_language(wheel_path, out):
    wheel = zipfile.ZipFile(wheel_path)
    (out / "language" / "train").mkdir(parents=True, exist_ok=True)
    (out / "language" / "test").mkdir(parents=True, exist_ok=True)
    for idx, lang in enumerate(LANGUAGES):
        rng = random.Random(SEED * 31 + idx)
        words, weights = word_table(wheel, lang)
        cum = []
        acc = 0.0
        for w in weights:
            acc += w
            cum.append(acc)
        train, size = [], 0
        while size < TRAIN_CHARS:
            s = sentence(rng, words, cum)
            train.append(s)
            size += len(s) + 1
        test = [sentence(rng, words, cum) for _ in range(TEST_SENTENCES)]
        (out / "language" / "train" / f"{lang}.txt").write_text(" ".join(train) + "\n", encoding="utf-8")
        (out / "language" / "test" / f"{lang}.txt").write_text("\n".join(test) + "\n", encoding="utf-8")


def write_idx(images, labels, img_path, lab_path):
    with open(img_path, "wb") as f:
        f.write(struct.pack(">IIII", 0x00000803, len(images), 28, 28))
        for img in images:
            f.write(bytes(img))
    with open(lab_path, "wb") as f:
        f.write(struct.pack(">II", 0x00000801, len(labels)))
        f.write(bytes(labels))


def build_mnist(wheel_path, out):
    wheel = zipfile.ZipFile(wheel_path)
    rows = gzip.decompress(wheel.read("mlxtend/data/data/mnist_5k.csv.gz")).decode().splitlines()
    per_class = {}
    for row in rows:
        vals = [int(float(v)) for v in row.split(",")]
        per_class.setdefault(vals[-1], []).append(vals[:-1])
    train_x, train_y, test_x, test_y = [], [], [], []
    for label in sorted(per_class):
        imgs = per_class[label]
        for img in imgs[:400]:
            train_x.append(img)
            train_y.append(label)
        for img in imgs[400:]:
            test_x.append(img)
            test_y.append(label)
    # interleave classes so truncated loads still see every digit
    order = sorted(range(len(train_x)), key=lambda i: (i % 400, train_y[i]))
    train_x = [train_x[i] for i in order]
    train_y = [train_y[i] for i in order]
    order = sorted(range(len(test_x)), key=lambda i: (i % 100, test_y[i]))
    test_x = [test_x[i] for i in order]
    test_y = [test_y[i] for i in order]
    d = out / "mnist"
    d.mkdir(parents=True, exist_ok=True)
    write_idx(train_x, train_y, d / "train-images.idx3-ubyte", d / "train-labels.idx1-ubyte")
    write_idx(test_x, test_y, d / "test-images.idx3-ubyte", d / "test-labels.idx1-ubyte")


def main():
    if len(sys.argv) != 4:
        sys.exit(__doc__)
    out = Path(sys.argv[3])
    build_language(sys.argv[1], out)
    build_mnist(sys.argv[2], out)


if __name__ == "__main__":
    main()
