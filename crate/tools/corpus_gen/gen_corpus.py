#!/usr/bin/env python3
"""Synthetic Arabic page generator for the OCR fixture corpus.

Renders shaped Arabic text (PIL + raqm) word by word so that every word box,
line band and baseline row is known exactly, then writes:

    pages/<id>.png   8-bit grayscale page
    truth/<id>.txt   one line per visual line, words in reading order
    meta/<id>.json   line bands, baselines, word boxes, render parameters
    manifest.tsv     one row per page

Usage:
    gen_corpus.py --spec spec.json --out DIR [--seed N]

Spec keys (JSON object):
    source        "words" | "nonsense" | "list" | "rect"
    count         number of words to emit (words / nonsense)
    words         explicit word list (source == "list"); one word per page
                  when "one_per_page" is true
    context       words placed after each word on its line when one_per_page
                  is set, so the line has realistic ascenders
    sizes         point sizes, cycled per page
    dpi           render resolution
    skew          degrees, counter-clockwise positive
    noise         {"kind": "none"} | {"kind": "salt_pepper", "p": 0.01}
                  | {"kind": "blur", "sigma": 0.8}
    words_per_line, lines_per_page
    lam_alef      true keeps the lam-alef ligature, false renders lam + alef
    font          path to the font file (defaults to the bundled Naskh font)
    rect          [width, height] of the filled rectangle (source == "rect")

The "baseline" of a line is its heaviest ink row before skew (lower row on
ties); "font_baseline" is the typographic baseline the glyphs were placed on.
"""

import argparse
import json
import os
import random
import sys

from PIL import Image, ImageDraw, ImageFilter, ImageFont, features

HERE = os.path.dirname(os.path.abspath(__file__))
DEFAULT_FONT = os.path.join(HERE, "fonts", "NotoNaskhArabic-Regular.woff")
LETTERS = "ابتثجحخدذرزسشصضطظعغفقكلمنهوي"


def load_font(path, px):
    if not os.path.exists(path):
        avail = sorted(os.listdir(os.path.join(HERE, "fonts")))
        sys.exit(f"font not found: {path}; available: {', '.join(avail)}")
    return ImageFont.truetype(path, px, layout_engine=ImageFont.Layout.RAQM)


def word_stream(spec, rng):
    src = spec["source"]
    if src == "rect":
        return []
    if src == "list":
        return list(spec["words"])
    if src == "words":
        with open(os.path.join(HERE, "words_ar.txt"), encoding="utf-8") as f:
            vocab = [w.strip() for w in f if w.strip()]
        return [rng.choice(vocab) for _ in range(spec["count"])]
    if src == "nonsense":
        out = []
        for _ in range(spec["count"]):
            n = rng.randint(2, 6)
            out.append("".join(rng.choice(LETTERS) for _ in range(n)))
        return out
    sys.exit(f"unknown source {src!r}")


def render_word(font, word, feats):
    # Render into a tight canvas anchored at the right end of the baseline.
    asc, desc = font.getmetrics()
    w = int(font.getlength(word, direction="rtl", language="ar", features=feats)) + 8
    h = asc + desc + 8
    img = Image.new("L", (w, h), 255)
    d = ImageDraw.Draw(img)
    d.text((w - 4, asc + 4), word, font=font, fill=0, anchor="rs",
           direction="rtl", language="ar", features=feats)
    bbox = Image.eval(img, lambda v: 255 - v).getbbox()
    if bbox is None:
        return None
    return img, bbox, asc + 4


def render_page(words, size_pt, spec, rng):
    dpi = spec.get("dpi", 150)
    px = round(size_pt * dpi / 72.0)
    font = load_font(spec.get("font", DEFAULT_FONT), px)
    feats = None if spec.get("lam_alef", True) else ["-rlig", "-liga"]
    wpl = spec.get("words_per_line", 8)
    lines = [words[i:i + wpl] for i in range(0, len(words), wpl)]
    space = max(2, round(font.getlength(" ")))
    margin = 2 * px
    line_pitch = round(2.0 * px)
    rendered = [[render_word(font, w, feats) for w in line] for line in lines]

    width = margin * 2 + max(
        sum(r[1][2] - r[1][0] for r in line if r) + space * (len(line) - 1)
        for line in rendered)
    height = margin * 2 + line_pitch * len(lines)
    page = Image.new("L", (width, height), 255)
    meta_lines = []
    for li, (line, texts) in enumerate(zip(rendered, lines)):
        baseline = margin + li * line_pitch + round(1.1 * px)
        x = width - margin
        boxes = []
        for r, text in zip(line, texts):
            if r is None:
                continue
            img, (l, t, rr, b), base = r
            crop = img.crop((l, t, rr, b))
            left = x - (rr - l)
            top = baseline - (base - t)
            page.paste(Image.composite(crop, page.crop((left, top, x, top + (b - t))),
                                       Image.eval(crop, lambda v: 255 - v)),
                       (left, top))
            boxes.append({"text": text, "left": left, "right": x - 1,
                          "top": top, "bottom": top + (b - t) - 1})
            x = left - space
        meta_lines.append({
            "font_baseline": baseline,
            "top": min(b["top"] for b in boxes),
            "bottom": max(b["bottom"] for b in boxes),
            "words": boxes,
        })

    for line in meta_lines:
        line["baseline"] = heaviest_row(page, line["top"], line["bottom"])
    return finish_page(page, spec, rng, meta_lines, lines, size_pt, px)


def heaviest_row(page, top, bottom):
    px = page.load()
    best, best_row = -1, top
    for y in range(top, bottom + 1):
        n = sum(1 for x in range(page.width) if px[x, y] < 128)
        if n >= best:
            best, best_row = n, y
    return best_row


def render_rect(spec):
    w, h = spec["rect"]
    margin = max(w, h) // 4
    page = Image.new("L", (w + 2 * margin, h + 2 * margin), 255)
    ImageDraw.Draw(page).rectangle((margin, margin, margin + w - 1, margin + h - 1), fill=0)
    return page, {"left": margin, "top": margin, "right": margin + w - 1, "bottom": margin + h - 1}


def finish_page(page, spec, rng, meta_lines, lines, size_pt, px):
    dpi = spec.get("dpi", 150)
    skew = spec.get("skew", 0.0)
    if skew:
        page = page.rotate(skew, resample=Image.BILINEAR, expand=True, fillcolor=255)
    noise = spec.get("noise", {"kind": "none"})
    if noise["kind"] == "salt_pepper":
        px_data = page.load()
        for y in range(page.height):
            for x in range(page.width):
                if rng.random() < noise["p"]:
                    px_data[x, y] = 0 if rng.random() < 0.5 else 255
    elif noise["kind"] == "blur":
        page = page.filter(ImageFilter.GaussianBlur(noise["sigma"]))

    meta = {"size_pt": size_pt, "dpi": dpi, "px": px, "skew": skew,
            "lam_alef": spec.get("lam_alef", True), "lines": meta_lines}
    truth = "\n".join(" ".join(line) for line in lines) + "\n"
    return page, truth, meta


def main():
    if not features.check("raqm"):
        sys.exit("PIL was built without raqm; Arabic shaping unavailable")
    ap = argparse.ArgumentParser()
    ap.add_argument("--spec", required=True)
    ap.add_argument("--out", required=True)
    ap.add_argument("--seed", type=int, default=0)
    args = ap.parse_args()
    with open(args.spec, encoding="utf-8") as f:
        spec = json.load(f)
    rng = random.Random(args.seed)
    words = word_stream(spec, rng)

    for sub in ("pages", "truth", "meta"):
        os.makedirs(os.path.join(args.out, sub), exist_ok=True)
    sizes = spec.get("sizes", [14])
    if spec["source"] == "rect":
        page, rect = render_rect(spec)
        page, _, meta = finish_page(page, spec, rng, [], [], 0, 0)
        meta["rect"] = rect
        pid = f"{spec.get('prefix', 'rect')}_0000"
        page.save(os.path.join(args.out, "pages", pid + ".png"), optimize=True)
        with open(os.path.join(args.out, "truth", pid + ".txt"), "w", encoding="utf-8") as f:
            f.write("")
        with open(os.path.join(args.out, "meta", pid + ".json"), "w", encoding="utf-8") as f:
            json.dump(meta, f, ensure_ascii=False, indent=1, sort_keys=True)
        return
    if spec.get("one_per_page"):
        chunks = [[w] + list(spec.get("context", [])) for w in words]
    else:
        per_page = spec.get("words_per_line", 8) * spec.get("lines_per_page", 10)
        chunks = [words[i:i + per_page] for i in range(0, len(words), per_page)]

    rows = ["id\tsize_pt\twords"]
    for i, chunk in enumerate(chunks):
        pid = f"{spec.get('prefix', 'page')}_{i:04d}"
        page, truth, meta = render_page(chunk, sizes[i % len(sizes)], spec, rng)
        page.save(os.path.join(args.out, "pages", pid + ".png"), optimize=True)
        with open(os.path.join(args.out, "truth", pid + ".txt"), "w", encoding="utf-8") as f:
            f.write(truth)
        with open(os.path.join(args.out, "meta", pid + ".json"), "w", encoding="utf-8") as f:
            json.dump(meta, f, ensure_ascii=False, indent=1, sort_keys=True)
        rows.append(f"{pid}\t{meta['size_pt']}\t{len(chunk)}")
    with open(os.path.join(args.out, "manifest.tsv"), "w", encoding="utf-8") as f:
        f.write("\n".join(rows) + "\n")


if __name__ == "__main__":
    main()
