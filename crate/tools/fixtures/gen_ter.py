"""Writes crates/core/tests/fixtures/ter_cases.json from sacrebleu's TER.

The sacrebleu package is imported through its lib_ter module file so the
script also works where optional dependencies of the package are missing.
Sentences are lowercased and split on whitespace (sacrebleu's TER defaults:
case-insensitive, no normalization). With several references the fewest
edits count, divided by the mean reference length; corpus TER divides summed
edits by summed mean lengths.
"""

import importlib.util
import json
import os
import random

OUT = os.path.join(os.path.dirname(__file__), "..", "..", "crates", "core", "tests", "fixtures", "ter_cases.json")


def load_lib_ter():
    spec = importlib.util.find_spec("sacrebleu")
    path = os.path.join(os.path.dirname(spec.origin), "metrics", "lib_ter.py")
    s = importlib.util.spec_from_file_location("lib_ter", path)
    m = importlib.util.module_from_spec(s)
    s.loader.exec_module(m)
    return m


def sentence_stats(lib, hyp, refs):
    hyp = hyp.lower().split()
    best, total_len = None, 0.0
    for r in refs:
        r = r.lower().split()
        edits, ref_len = lib.translation_edit_rate(hyp, r)
        total_len += ref_len
        if best is None or edits < best:
            best = edits
    return best, total_len / len(refs)


SENTENCES = [
    ("the cat sat on the mat", ["the cat sat on the mat"]),
    ("on the mat sat the cat", ["the cat sat on the mat"]),
    ("Alan Bean was a test pilot born in Wheeler , Texas .", ["Alan Bean , born in Wheeler , Texas , was a test pilot ."]),
    ("101 Helena was discovered by James Craig Watson .", ["James Craig Watson discovered 101 Helena .", "101 Helena 's discoverer is James Craig Watson ."]),
    ("", ["a b c"]),
    ("a b c d e f g h", ["h g f e d c b a"]),
]

WORDS = "a b c d e f the of in".split()


def main():
    lib = load_lib_ter()
    rng = random.Random(1093)
    cases = list(SENTENCES)
    while len(cases) < 60:
        ref = [rng.choice(WORDS) for _ in range(rng.randint(1, 14))]
        hyp = list(ref)
        for _ in range(rng.randint(0, 4)):
            op = rng.random()
            if op < 0.3 and hyp:
                i, n = rng.randrange(len(hyp)), rng.randint(1, 3)
                block, rest = hyp[i:i + n], hyp[:i] + hyp[i + n:]
                k = rng.randint(0, len(rest))
                hyp = rest[:k] + block + rest[k:]
            elif op < 0.55 and hyp:
                hyp.pop(rng.randrange(len(hyp)))
            elif op < 0.8:
                hyp.insert(rng.randint(0, len(hyp)), rng.choice(WORDS))
            elif hyp:
                hyp[rng.randrange(len(hyp))] = rng.choice(WORDS)
        refs = [" ".join(ref)]
        if rng.random() < 0.3:
            refs.append(" ".join(rng.choice(WORDS) for _ in range(rng.randint(1, 10))))
        cases.append((" ".join(hyp), refs))
    out = []
    for hyp, refs in cases:
        edits, ref_len = sentence_stats(lib, hyp, refs)
        out.append({"prediction": hyp, "references": refs, "edits": edits, "ref_length": ref_len})
    edits = sum(c["edits"] for c in out)
    length = sum(c["ref_length"] for c in out)
    with open(OUT, "w") as f:
        json.dump({"cases": out, "corpus_ter": edits / length}, f, indent=1)
        f.write("\n")


if __name__ == "__main__":
    main()
