#!/usr/bin/env python3
"""Regenerate the bundled corpus samples under tests/data/.

Deterministic (fixed seed, stdlib RNG only), so the committed files can be
reproduced exactly.  The Chinese sample is sized so a tokenizer trained on
it can learn well over ten thousand merges without exhausting pair counts;
the English sample is a smaller base-training corpus.

Usage: python3 scripts/make_test_corpus.py
"""

from __future__ import annotations

import random
from pathlib import Path

DATA_DIR = Path(__file__).resolve().parent.parent / "tests" / "data"

# ~500 frequent simplified characters, roughly by descending frequency.
HANZI = (
    "的一是不了人我在有他这为之大来以个中上们到说国和地也子时道出而要于就下得可你年生"
    "自会那后能对着事其里所去行过家十用发天如然作方成者多日都三小军二无同么经法当起与"
    "好看学进种将还分此心前面又定见只主没公从现或把长明动性机给等第开实力平想外它间由"
    "高口代但手感少点业外相两员舍系气题接各向次笑文位老因几意东通保头颜水理化争美"
    "四应总物知界身展果西战打被比采直做件任回些目书再月明器先据场况白提期市许海话立并"
    "常提眼志流每门难她住北什色话真教形情部司己品最常万更九八转达儿结解问意建月果飞步"
    "数件亲车快乐新师山金广失取信马单王音区思很百书强花休光巴城语五节叫聂院落游父亲近"
    "远站牛羊鸟虫鱼草木水火土石田禾竹米丝瓜豆麦果蔬菜饭茶酒肉蛋奶糖盐油醋酱汤面包饼糕"
    "春夏秋冬晴雨雪风云雷电霜雾冰星空晨昏夜昼时分秒钟表历史地理科学数学物理化学生物语"
)

PUNCT = "，。、；！？"

EN_WORDS = (
    "the of and to in a is that for it as was with be by on not he this are at from his "
    "but have an they which one you were all her she there would their we him been has "
    "when who will no more if out so up said what its about than into them can only "
    "other time new some could these two may first then do any like my now over such "
    "our man me even most made after also did many off before must well back through "
    "years much where your way down should because each just those people how too good "
    "little state very make world still own see men work long here get both between "
    "life being under never day same another know while last might great old year come "
    "since against go came right used take three house whole place during without high "
    "again home young four day light country different small large next early important "
    "few public bad able water"
).split()


def _zipf_chooser(rng: random.Random, items, exponent: float):
    weights = [1.0 / (rank + 1) ** exponent for rank in range(len(items))]

    def choose():
        return rng.choices(items, weights=weights, k=1)[0]

    return choose


def make_chinese(rng: random.Random, lines: int) -> list[str]:
    chars = list(dict.fromkeys(HANZI.replace(" ", "")))
    pick_char = _zipf_chooser(rng, chars, 1.05)
    # a fixed lexicon of 1- to 3-character words, Zipf-ranked
    lexicon = []
    seen = set()
    while len(lexicon) < 1800:
        word = "".join(pick_char() for _ in range(rng.choices([1, 2, 3], [2, 6, 2])[0]))
        if word not in seen:
            seen.add(word)
            lexicon.append(word)
    pick_word = _zipf_chooser(rng, lexicon, 1.1)
    ascii_pick = _zipf_chooser(rng, EN_WORDS, 1.0)
    out = []
    for _ in range(lines):
        n_words = rng.randrange(7, 16)
        parts = []
        for w in range(n_words):
            parts.append(pick_word())
            if w != n_words - 1 and rng.random() < 0.12:
                parts.append(rng.choice(PUNCT[:2]))
        if rng.random() < 0.04:  # occasional Latin run, still mostly Chinese
            parts.insert(rng.randrange(len(parts)), " %s " % ascii_pick())
        line = "".join(parts) + rng.choice(PUNCT[1] * 3 + PUNCT)
        out.append(line)
    return out


def make_english(rng: random.Random, lines: int) -> list[str]:
    pick = _zipf_chooser(rng, EN_WORDS, 1.0)
    out = []
    for _ in range(lines):
        words = [pick() for _ in range(rng.randrange(6, 15))]
        line = " ".join(words)
        if rng.random() < 0.3:
            line += "."
        out.append(line)
    return out


def main() -> None:
    DATA_DIR.mkdir(parents=True, exist_ok=True)
    rng = random.Random(20240605)
    zh = make_chinese(rng, 5000)
    (DATA_DIR / "zh_sample.txt").write_text(
        "\n".join(zh) + "\n", encoding="utf-8", newline="\n"
    )
    en = make_english(rng, 2000)
    (DATA_DIR / "en_sample.txt").write_text(
        "\n".join(en) + "\n", encoding="utf-8", newline="\n"
    )
    print(f"wrote {len(zh)} Chinese and {len(en)} English lines to {DATA_DIR}")


if __name__ == "__main__":
    main()
