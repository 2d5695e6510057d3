#!/usr/bin/env python3
# Copyright 2026 The Originality Guard Authors.
#
# Licensed under the Apache License, Version 2.0 (the "License");
# you may not use this file except in compliance with the License.
# You may obtain a copy of the License at
#
#     http://www.apache.org/licenses/LICENSE-2.0
#
# Unless required by applicable law or agreed to in writing, software
# distributed under the License is distributed on an "AS IS" BASIS,
# WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
# See the License for the specific language governing permissions and
# limitations under the License.
"""Generates the bundled synthetic fixtures under data/.

toy500.txt holds 500 story sentences drawn from a small grammar. A fixed
pool of stock phrases recurs across sentences so that a memorizing model
has long contexts to copy, while slot words vary enough that an n-gram
model recombines them into unseen sequences.
"""

import argparse
import csv
import pathlib
import random

NAMES = """anna boris carla dimitri elena farid greta hugo irene jonas kira leon
mara nils olga pavel quinn rosa sami tara ugo vera wim xenia yusuf zora""".split()

PLACES = """the harbor|the old mill|the market square|the train station|the orchard
|the library|the river bank|the bakery|the hill road|the lighthouse|the garden
|the workshop|the school yard|the bridge|the forest path|the village hall
|the top floor|the fish stall|the bus stop|the quiet lake""".replace("\n", "").split("|")

OBJECTS = """a red kite|an old map|a tin box|a paper boat|a silver key|a wool scarf
|a small lamp|a glass jar|a blue bicycle|a broken clock|a wooden flute|a basket of pears
|a letter|a warm loaf|a pair of boots|a jar of honey|a kitten|a compass|a rope
|a violin""".replace("\n", "").split("|")

VERBS = """found|lost|carried|painted|repaired|hid|sold|bought|borrowed|dropped
|wrapped|cleaned|opened|shared|returned|traded""".replace("\n", "").split("|")

TIMES = """one rainy morning|late that evening|on a cold sunday|after the long winter
|before the sun came up|during the summer fair|on the first day of school
|when the bells rang""".replace("\n", "").split("|")

STOCK = [
    "and nobody in the whole town ever knew why",
    "as quickly as the wind could carry a leaf",
    "because the weather had turned grey and heavy",
    "while the neighbors were still fast asleep",
    "without saying a single word to anyone",
    "just as the clock struck twelve at noon",
    "so that the children would have something to laugh about",
    "even though it was far too late to matter",
    "and laughed until the tears rolled down",
    "with the same careful hands as always",
    "to keep a promise made many years ago",
    "then walked home along the narrow lane",
]

FEELINGS = """happy|tired|surprised|proud|nervous|calm|curious|grateful""".split("|")


def sentence(rng: random.Random) -> str:
    who = rng.choice(NAMES)
    other = rng.choice([n for n in NAMES if n != who])
    parts = []
    form = rng.randrange(4)
    if form == 0:
        parts += [rng.choice(TIMES), ",", who, rng.choice(VERBS), rng.choice(OBJECTS),
                  "near", rng.choice(PLACES)]
    elif form == 1:
        parts += [who, "and", other, "met at", rng.choice(PLACES), rng.choice(TIMES), "and",
                  rng.choice(VERBS), rng.choice(OBJECTS)]
    elif form == 2:
        parts += [who, "felt", rng.choice(FEELINGS), "and", rng.choice(VERBS),
                  rng.choice(OBJECTS), "for", other, "at", rng.choice(PLACES)]
    else:
        parts += [who, rng.choice(VERBS), rng.choice(OBJECTS), "from", other,
                  rng.choice(TIMES)]
    parts.append(rng.choice(STOCK))
    if rng.random() < 0.5:
        parts += [",", rng.choice(STOCK)]
    return " ".join(parts) + " ."


def write_plain(path: pathlib.Path, lines):
    path.write_text("".join(line + "\n" for line in lines), encoding="utf-8")


def write_rocstories(path: pathlib.Path, rng: random.Random, stories: int):
    with path.open("w", newline="", encoding="utf-8") as out:
        w = csv.writer(out)
        w.writerow(["storyid", "storytitle", "sentence1", "sentence2", "sentence3",
                    "sentence4", "sentence5"])
        for i in range(stories):
            sents = [sentence(rng).capitalize() for _ in range(5)]
            w.writerow([f"story-{i:05d}", f"Story {i}, part \"{i % 7}\""] + sents)


def write_aasc(path: pathlib.Path, rng: random.Random, rows: int):
    labels = ["USE", "BASIS", "COMPARE", "MOTIVATION", "EXTEND", "FUTURE"]
    write_plain(path, [f"{rng.choice(labels)}\t{sentence(rng)}" for _ in range(rows)])


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--out", default=str(pathlib.Path(__file__).resolve().parent.parent / "data"))
    ap.add_argument("--seed", type=int, default=20260501)
    ap.add_argument("--sentences", type=int, default=500)
    args = ap.parse_args()
    out = pathlib.Path(args.out)
    out.mkdir(parents=True, exist_ok=True)

    rng = random.Random(args.seed)
    write_plain(out / "toy500.txt", [sentence(rng) for _ in range(args.sentences)])
    write_rocstories(out / "rocstories_sample.csv", random.Random(args.seed + 1), 40)
    write_aasc(out / "aasc_sample.tsv", random.Random(args.seed + 2), 60)


if __name__ == "__main__":
    main()
