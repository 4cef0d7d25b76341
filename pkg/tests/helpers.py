"""Shared test data builders."""

import random

# the three rows of the public corpus sample, expressed as TSV
SAMPLE_TSV = "\t".join(["Chief Complaint", "Predict", "Consensus"]) + "\n" + "\n".join(
    [
        '"been feeling bad" last 2 weeks & switched BP medications last week & '
        "worried about BP PMHx: CHF, HTN, gout, 3 strokes, DM\tN\t-",
        '"can\'t walk", reports onset at <<TIME>>. oriented x2. aortic valve replacement '
        "in <<DATE>>. wife reports episode of similar last week, hospitalized at "
        "<<HOSPITAL>> for UTI, gout - pmhx: CVA (L side residual deficits)\tY\tN",
        '"dehydration" Chest hurts, hips hurt, cramps PMH- Hip replacement, gout, '
        "missed pain clinic appt today, thinks he has a gout flair up knee and foot pain\tY\tY",
    ]
) + "\n"


_SUBJECTS = ["pt", "patient", "pt's mother", "nurse"]
_COMPLAINTS = [
    "chest pain",
    "abd pain",
    "back pain",
    "left knee pain",
    "right hip pain",
    "shortness of breath",
    "fever and chills",
    "nausea and vomiting",
    "sore throat",
    "generalized weakness",
]
_TAILS = [
    "x 2 days",
    "x 1 week",
    "since last night",
    "since this morning",
    "worse with movement",
    "after a fall",
    "denies trauma",
    "not relieved by meds",
]


def synthetic_sentences(n: int, seed: int = 0) -> list[list[str]]:
    """CC-shaped word sequences for training toy backends."""
    rng = random.Random(seed)
    sentences = []
    for _ in range(n):
        words = (
            rng.choice(_SUBJECTS).split()
            + [["reports"], ["has"], ["c/o"]][rng.randrange(3)]
            + rng.choice(_COMPLAINTS).split()
            + rng.choice(_TAILS).split()
        )
        sentences.append(words)
    return sentences
