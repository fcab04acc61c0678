#!/usr/bin/env python3
"""Regenerates data/corpus.txt: a deterministic synthetic English-like text
corpus (~1.3 MB, plain ASCII) with a small vocabulary and Zipf-like word
frequencies. The checked-in file is the canonical dataset; this script
exists so it can be reproduced bit-for-bit (python3 scripts/make_corpus.py).
"""

import random

SUBJECTS = [
    "the engineer", "a student", "the librarian", "our neighbor", "the pilot",
    "a gardener", "the analyst", "the painter", "a courier", "the teacher",
    "the committee", "a visitor", "the musician", "our guide", "the clerk",
]
VERBS = [
    "reviewed", "described", "collected", "arranged", "measured", "repaired",
    "followed", "recorded", "compared", "delivered", "sketched", "counted",
    "archived", "labeled", "inspected",
]
OBJECTS = [
    "the old maps", "a stack of letters", "the broken clock", "petition forms",
    "the garden tools", "a box of photographs", "the weather charts",
    "several manuscripts", "the train schedules", "a bundle of receipts",
    "the survey results", "two brass keys", "the meeting notes",
    "a crate of apples", "the river samples",
]
PLACES = [
    "near the harbor", "in the archive", "behind the market", "at the station",
    "along the canal", "under the bridge", "inside the workshop",
    "by the lighthouse", "on the terrace", "across the courtyard",
]
TIMES = [
    "before dawn", "after the storm", "last spring", "on tuesday",
    "during the festival", "late in the evening", "at noon",
    "throughout the winter", "every weekend", "once a month",
]
CONNECTORS = [
    "meanwhile", "afterwards", "even so", "in the end", "for a while",
    "to everyone's surprise", "as usual", "without delay",
]


def zipf_choice(rng, items):
    # Rank-weighted choice: weight 1/(rank+1).
    weights = [1.0 / (i + 1) for i in range(len(items))]
    return rng.choices(items, weights=weights, k=1)[0]


def sentence(rng):
    s = zipf_choice(rng, SUBJECTS)
    v = zipf_choice(rng, VERBS)
    o = zipf_choice(rng, OBJECTS)
    parts = [s, v, o]
    roll = rng.random()
    if roll < 0.45:
        parts.append(zipf_choice(rng, PLACES))
    if roll > 0.3:
        parts.append(zipf_choice(rng, TIMES))
    text = " ".join(parts)
    if rng.random() < 0.18:
        text = zipf_choice(rng, CONNECTORS) + ", " + text
    if rng.random() < 0.12:
        text += ", and " + zipf_choice(rng, VERBS) + " " + \
            zipf_choice(rng, OBJECTS)
    return text[0].upper() + text[1:] + "."


def main():
    rng = random.Random(20250810)
    out = []
    size = 0
    target = 1_300_000
    while size < target:
        para = []
        for _ in range(rng.randint(3, 7)):
            para.append(sentence(rng))
        block = " ".join(para) + "\n"
        out.append(block)
        size += len(block)
    with open("data/corpus.txt", "w", encoding="ascii") as f:
        f.write("".join(out))


if __name__ == "__main__":
    main()
