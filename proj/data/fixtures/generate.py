#!/usr/bin/env python3
"""Regenerates the synthetic fixture corpus in this directory.

Each drug has a reaction word that co-occurs with it in the unlabeled
tweets; the labeled tweets mark the same words as ADR spans.
"""
import random
from pathlib import Path

OUT = Path(__file__).resolve().parent
rng = random.Random(20171016)

DRUGS = ["effexor", "cymbalta", "paxil", "humira", "lamictal"]
REACTIONS = {
    "effexor": ["dizzy"],
    "cymbalta": ["insomnia"],
    "paxil": ["nausea"],
    "humira": ["rash"],
    "lamictal": ["headache"],
}
INDICATIONS = ["depression", "anxiety", "arthritis", "seizures"]
FILLER = ["feel", "so", "today", "really", "still", "week", "started", "taking",
          "doctor", "ugh", "pill", "morning", "night", "day", "again", "new", "dose",
          "cant", "work", "sleep", "tired", "life", "bad", "good"]
STOP = ["i", "the", "is", "and", "of", "me", "my", "a", "to", "this", "it", "on"]


def filler(n):
    return [rng.choice(FILLER + STOP) for _ in range(n)]


def unlabeled_line(i):
    kind = rng.random()
    drug = rng.choice(DRUGS)
    words = filler(rng.randint(3, 7))
    if kind < 0.8:
        words.insert(rng.randint(0, len(words)), rng.choice(REACTIONS[drug]))
        words.insert(rng.randint(0, len(words)), drug.capitalize() if rng.random() < 0.3 else drug)
    elif kind < 0.9:
        other = rng.choice([d for d in DRUGS if d != drug])
        words += [drug, "and", other]
    else:
        pass  # no drug mention
    if rng.random() < 0.3:
        words.insert(0, "@user%d" % rng.randint(1, 99))
    if rng.random() < 0.2:
        words.append("http://t.co/%05d" % rng.randint(0, 99999))
    if rng.random() < 0.1:
        words.append("#meds!")
    if rng.random() < 0.05:
        words.append("\U0001F600")
    return "t%04d\t%s" % (i, " ".join(words))


def labeled_tweet():
    drug = rng.choice(DRUGS)
    rows = [(w, "O") for w in filler(rng.randint(2, 5))]
    pos = rng.randint(0, len(rows))
    reaction = [(w, "I-ADR") for w in REACTIONS[drug]]
    if rng.random() < 0.3:
        reaction.append(("again", "I-ADR"))
    rows[pos:pos] = reaction
    rows.insert(rng.randint(0, len(rows)), (drug.capitalize(), "O"))
    if rng.random() < 0.25:
        rows += [("for", "O"), (rng.choice(INDICATIONS), "I-IND")]
    if rng.random() < 0.2:
        rows.insert(0, ("@user%d" % rng.randint(1, 99), "O"))
    return rows


def write_labeled(path, n, extra=()):
    with open(path, "w") as f:
        for rows in list(extra) + [labeled_tweet() for _ in range(n)]:
            for w, t in rows:
                f.write("%s\t%s\n" % (w, t))
            f.write("\n")


PAPER_STYLE = [(w, "O") for w in "@BLENDOS Lamictal and trileptal and seroquel of course the seroquel I take in severe situations because".split()] + \
    [("weight", "I-ADR"), ("gain", "I-ADR")] + [(w, "O") for w in "is not cool".split()]

(OUT / "drugs.txt").write_text("\n".join(DRUGS) + "\n")
(OUT / "stopwords.txt").write_text("\n".join(STOP) + "\n")
(OUT / "unlabeled.tsv").write_text("\n".join(unlabeled_line(i) for i in range(400)) + "\n")
write_labeled(OUT / "train.tsv", 47, extra=[PAPER_STYLE])
write_labeled(OUT / "test.tsv", 17)

vocab = sorted(set(FILLER + INDICATIONS + DRUGS + sum(REACTIONS.values(), []) + ["weight", "gain"]))
rng.shuffle(vocab)
covered = vocab[: int(len(vocab) * 0.8)]
dim = 16
with open(OUT / "embeddings.txt", "w") as f:
    f.write("%d %d\n" % (len(covered), dim))
    for w in covered:
        f.write(w + " " + " ".join("%.6f" % rng.uniform(-0.5, 0.5) for _ in range(dim)) + "\n")
