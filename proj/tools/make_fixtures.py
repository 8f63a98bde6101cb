#!/usr/bin/env python3
"""Regenerates data/fixtures/ (deterministic)."""

import json
import random
from pathlib import Path

OUT = Path(__file__).resolve().parent.parent / "data" / "fixtures"
RNG = random.Random(20240611)

DISCIPLINES = {
    "Mathematics": "integral derivative matrix eigenvalue polynomial sequence limit topology manifold prime "
    "lattice group vector series function proof theorem inequality",
    "Physics": "momentum energy field particle wave entropy photon oscillator charge pressure velocity "
    "quantum relativity friction torque gravity current",
    "Chemistry": "molecule reaction catalyst equilibrium bond electron solvent acid oxidation enthalpy "
    "polymer crystal isotope ion titration compound kinetics",
    "Biology": "cell enzyme protein gene membrane mitochondria organism species evolution receptor "
    "neuron tissue metabolism chromosome ecosystem mutation",
    "Economics": "market demand supply price inflation elasticity monopoly equilibrium labor capital "
    "interest utility welfare tariff consumption investment",
}
LINKS = "because therefore thus hence so that when while which relates to depends on explains".split()
CUES = "theorem definition example principle equation process analysis method model evidence concept".split()

BENCHMARK_SENTENCE = (
    "A uniform rod of length two metres pivots freely about one end and is released from rest in the horizontal "
    "position so find its angular speed at the bottom"
)


def sentence(discipline, n):
    words = DISCIPLINES[discipline].split()
    out = []
    for i in range(n):
        if i % 5 == 4:
            out.append(RNG.choice(LINKS))
        elif i % 7 == 3:
            out.append(RNG.choice(CUES))
        else:
            out.append(RNG.choice(words))
    return " ".join(out).capitalize() + "."


def paragraph(discipline, words):
    parts = [f"This chapter on {discipline} develops the central ideas."]
    count = len(parts[0].split())
    while count < words:
        s = sentence(discipline, RNG.randint(9, 16))
        parts.append(s)
        count += len(s.split())
    return " ".join(parts)


def books():
    rows = []
    names = list(DISCIPLINES)
    for i in range(50):
        d = names[i % len(names)]
        rows.append({"book_id": f"book-{i // 10:02d}", "chapter_index": i % 10, "text": paragraph(d, RNG.randint(140, 260))})
    # Near-duplicate synthesized questions: two segments share their opening
    # 70 words but differ afterwards.
    shared = " ".join(rows[3]["text"].split()[:70])
    rows[8]["text"] = shared + " " + paragraph("Biology", 200)
    rows[3]["text"] = shared + " " + paragraph("Biology", 210)
    return rows


def web():
    rows = []
    names = list(DISCIPLINES)
    openers = [
        "First, we need to set up the problem. Let's check the result by substitution. ",
        "First, we need two facts. Wait, I made a mistake earlier, let me try again. To verify, substitute back. ",
        "Let's check the units. ",
        "We can work backward from the answer. First, we need the givens. Let's check each step. ",
        "First, we need the definitions. We can work backward from the goal. ",
        "",
    ]
    for i in range(30):
        d = names[(i * 2) % len(names)]
        body = paragraph(d, RNG.randint(90, 160))
        if i % 6 == 5:
            # No reasoning cues at all: filtered out.
            body = " ".join(w for w in body.split() if w.strip(".").lower() not in {"because", "therefore", "thus", "hence"})
            text = body
        else:
            text = openers[i % 5] + body
        rows.append({"id": f"web-{i:03d}", "text": text})
    # Contaminated page: a benchmark item inside the excerpt the question quotes.
    rows[7]["text"] = "In Physics, " + BENCHMARK_SENTENCE + ". First, we need the moment of inertia because " + rows[7]["text"]
    return rows


def bank():
    rows = []
    names = list(DISCIPLINES)
    lengths = [10, 25, 55, 95, 30, 60, 90, 20]
    for i in range(40):
        d = names[i % len(names)]
        n = lengths[i % len(lengths)]
        stem = f"In {d}, " + " ".join(sentence(d, 12) for _ in range(max(1, n // 12)))
        if i % 9 == 4:
            stem += " Prove that the stated relation holds."
        if i % 11 == 6:
            stem += " Which option is correct? A. the first B. the second C. neither"
        rows.append({"id": f"bank-{i:03d}", "text": stem})
    # Two questions with the same opening: their design logics collapse.
    rows[35]["text"] = rows[30]["text"] + " Explain briefly."
    return rows


def benchmarks():
    return [
        {"question": BENCHMARK_SENTENCE + " using energy conservation."},
        {"question": "Evaluate the definite integral of x squared from zero to three and state the exact value."},
        {"problem": "A gas at fixed temperature doubles its volume; by what factor does its pressure change?"},
    ]


def write(name, rows):
    with open(OUT / name, "w", encoding="utf-8") as f:
        for r in rows:
            f.write(json.dumps(r, sort_keys=True) + "\n")


def main():
    OUT.mkdir(parents=True, exist_ok=True)
    write("books.jsonl", books())
    write("web.jsonl", web())
    write("bank.jsonl", bank())
    write("physics_bench.jsonl", benchmarks())


if __name__ == "__main__":
    main()
