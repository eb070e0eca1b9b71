"""Writes crates/core/tests/fixtures/parent_cases.json.

Each case is a small corpus of (prediction, references, triples) with the
scores of parent_reference.parent. Text is lowercased and split on
whitespace before scoring, as the Rust implementation does.
"""

import json
import os
import random

from parent_reference import parent

OUT = os.path.join(os.path.dirname(__file__), "..", "..", "crates", "core", "tests", "fixtures", "parent_cases.json")

HANDWRITTEN = [
    {
        "triples": [["Aaron Turner", "genre", "Black metal"], ["Aaron Turner", "origin", "Massachusetts"]],
        "references": ["Aaron Turner is a black metal musician from Massachusetts ."],
        "prediction": "Aaron Turner is a black metal musician from Massachusetts .",
    },
    {
        "triples": [["Alfred Moore Scales", "battle", "Battle of Chancellorsville"]],
        "references": [
            "Alfred Moore Scales fought in the Battle of Chancellorsville .",
            "Alfred Moore Scales was involved in the battle of Chancellorsville .",
        ],
        "prediction": "Alfred Moore Scales took part in the Battle of Gettysburg .",
    },
    {
        "triples": [
            ["101 Helena", "discoverer", "James Craig Watson"],
            ["James Craig Watson", "deathPlace", "Madison, Wisconsin"],
        ],
        "references": ["101 Helena was discovered by James Craig Watson who died in Madison, Wisconsin ."],
        "prediction": "James Craig Watson discovered 101 Helena .",
    },
    {
        "triples": [
            ["Acharya Institute of Technology", "city", "Bangalore"],
            ["Acharya Institute of Technology", "established", "2000"],
        ],
        "references": ["The Acharya Institute of Technology in Bangalore was established in 2000 ."],
        "prediction": "the institute was founded in the year 2000 in the city of bangalore and it is great",
    },
]

WORDS = "a b c d e f g h i j k l".split()


def random_case(rng):
    examples = []
    for _ in range(rng.randint(1, 4)):
        triples = []
        seen = set()
        for _ in range(rng.randint(1, 3)):
            t = (
                " ".join(rng.choice(WORDS) for _ in range(rng.randint(1, 2))),
                rng.choice(["rel", "other"]),
                " ".join(rng.choice(WORDS) for _ in range(rng.randint(1, 3))),
            )
            if t not in seen:
                seen.add(t)
                triples.append(list(t))
        refs = [" ".join(rng.choice(WORDS) for _ in range(rng.randint(1, 9))) for _ in range(rng.randint(1, 3))]
        if rng.random() < 0.6:
            # a noisy copy of the first reference
            pred = [w if rng.random() < 0.7 else rng.choice(WORDS) for w in refs[0].split()]
            pred += [rng.choice(WORDS) for _ in range(rng.randint(0, 2))]
            pred = " ".join(pred)
        else:
            pred = " ".join(rng.choice(WORDS) for _ in range(rng.randint(1, 9)))
        examples.append({"triples": triples, "references": refs, "prediction": pred})
    return examples


def score(examples):
    preds = [e["prediction"].lower().split() for e in examples]
    refs = [[r.lower().split() for r in e["references"]] for e in examples]
    tables = [[(s.lower().split(), r.lower().split(), o.lower().split()) for s, r, o in e["triples"]] for e in examples]
    p, r, f, per = parent(preds, refs, tables)
    return {"precision": p, "recall": r, "f1": f, "per_example_f1": per}


def main():
    rng = random.Random(20170101)
    cases = [[e] for e in HANDWRITTEN]
    while len(cases) < 20:
        cases.append(random_case(rng))
    out = [{"examples": c, "expected": score(c)} for c in cases]
    with open(OUT, "w") as f:
        json.dump(out, f, indent=1)
        f.write("\n")


if __name__ == "__main__":
    main()
