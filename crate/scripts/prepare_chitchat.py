#!/usr/bin/env python3
"""Convert the Chit-Chat corpus into train/test JSONL pair files.

The corpus ships in the `chitchat_dataset` wheel (MIT licence, Perception,
Control and Cognition Lab, 2019):

    pip download chitchat_dataset==0.9.0 --no-deps
    python scripts/prepare_chitchat.py path/to/dataset.json crates/cli/tests/data

Each pair takes one speaker turn as the message and the first line of the
next turn as the reply. Conversations are split whole, so no conversation
contributes to both files.
"""

import hashlib
import json
import re
import sys
from pathlib import Path

TEST_PAIRS = 2000
TRAIN_PAIRS = 20000
MAX_TOKENS = 40

PUNCT = re.compile(r"([.,!?;:()\"])")


def clean(text):
    text = PUNCT.sub(r" \1 ", text.lower())
    return " ".join(text.split())


def pairs_of(conv):
    turns = [[clean(m["text"]) for m in turn] for turn in conv["messages"]]
    turns = [[m for m in t if m] for t in turns]
    for prev, nxt in zip(turns, turns[1:]):
        if not prev or not nxt:
            continue
        context = " ".join(prev)
        reply = nxt[0]
        if len(context.split()) > MAX_TOKENS or len(reply.split()) > MAX_TOKENS:
            continue
        yield {"context": context, "reply": reply}


def main():
    src, out = Path(sys.argv[1]), Path(sys.argv[2])
    data = json.loads(src.read_text())
    keys = sorted(data, key=lambda k: hashlib.sha256(k.encode()).hexdigest())
    test, train = [], []
    for k in keys:
        ps = list(pairs_of(data[k]))
        if len(test) < TEST_PAIRS:
            test.extend(ps)
        elif len(train) < TRAIN_PAIRS:
            train.extend(ps)
    test, train = test[:TEST_PAIRS], train[:TRAIN_PAIRS]
    out.mkdir(parents=True, exist_ok=True)
    for name, rows in (("chitchat_train.jsonl", train), ("chitchat_test.jsonl", test)):
        with open(out / name, "w", encoding="utf-8") as f:
            for r in rows:
                f.write(json.dumps(r, ensure_ascii=False) + "\n")
    print(f"train {len(train)} test {len(test)}")


if __name__ == "__main__":
    main()
