#!/usr/bin/env python3
"""Generates the bundled fixture knowledge base and snippet corpus.

Output (data/fixture/): facts.tsv, types.tsv, labels.tsv, schemas.tsv,
corpus.jsonl. The KB holds 40 people and 10 cities. The corpus answers
"<name> <template>" questions for wasBornIn with four templates:

  born       the birth city appears for people in group A only
  birth      an exact copy of the "born" results (overlapping template)
  birthplace the birth city appears for group B only, group A gets noise
  hometown   mostly noise; the birth city shows up late for a few people

So {born} and {birth} are individually best but redundant together, while
{birth, birthplace} covers everyone.

Run from the repository root: python3 tools/make_fixture.py
"""

import json
import os
import pathlib
import random

OUT = pathlib.Path(__file__).resolve().parent.parent / "data" / "fixture"
SEED = int(os.environ.get("FIXTURE_SEED", "11"))

CITIES = [
    "New_York_City", "Boston", "Chicago", "San_Francisco", "London",
    "Paris", "Berlin", "Toronto", "Sydney", "Dublin",
]

FIXED_PEOPLE = [
    "Marvin_Minsky", "Henry_Minsky", "Ryan_Block", "Veronica_Belmont",
    "Julia_Foster", "Ben_Fogle",
]

FIRST = [
    "Alma", "Bruno", "Celia", "Dorian", "Edith", "Felix", "Greta", "Hugo",
    "Ines", "Jasper", "Karin", "Leopold", "Mira", "Nestor", "Odile", "Pavel",
    "Quinn", "Rosalind", "Silas", "Tamsin", "Ulric", "Vera", "Wendell",
    "Ximena", "Yusuf", "Zora", "Anselm", "Beatrix", "Cyrus", "Delphine",
    "Emrys", "Fenella", "Gideon", "Hester",
]
LAST = [
    "Ashcombe", "Brightwater", "Calloway", "Dunmore", "Everleigh", "Fairbairn",
    "Galbraith", "Hollander", "Ingersoll", "Jessop", "Kettering", "Lindqvist",
    "Marchetti", "Northcote", "Oyelaran", "Pemberton", "Quarles", "Rasmussen",
    "Sandoval", "Thackeray", "Umberfield", "Vasquez", "Whitcombe", "Yardley",
    "Zielinski", "Abernathy", "Blackwood", "Crichton", "Devereux", "Ellsworth",
    "Fitzgerald", "Grimsby", "Haverford", "Iverson",
]

PROFESSIONS = [
    "physicist", "novelist", "architect", "violinist", "economist", "painter",
    "chemist", "journalist", "historian", "engineer", "photographer", "actor",
]
TOPICS = [
    "machine learning", "urban planning", "modern opera", "climate policy",
    "medieval history", "quantum computing", "public health", "jazz harmony",
]
MONTHS = [
    "January", "February", "March", "April", "May", "June", "July", "August",
    "September", "October", "November", "December",
]


def name(e):
    return e.replace("_", " ")


def article(noun):
    return ("an " if noun[0] in "aeiou" else "a ") + noun


def date(rng):
    return f"{rng.choice(MONTHS)} {rng.randint(1, 28)}, {rng.randint(1920, 1990)}"


def build_kb(rng):
    people = list(FIXED_PEOPLE)
    for first, last in zip(FIRST, LAST):
        people.append(f"{first}_{last}")
    assert len(people) == 40

    born = {
        "Marvin_Minsky": "New_York_City",
        "Henry_Minsky": "Boston",
        "Ryan_Block": "San_Francisco",
        "Veronica_Belmont": "San_Francisco",
        "Julia_Foster": "London",
        "Ben_Fogle": "London",
    }
    for p in people:
        born.setdefault(p, rng.choice(CITIES))

    died = {"Marvin_Minsky": "Boston"}
    for p in people[6:]:
        if rng.random() < 0.3:
            died[p] = rng.choice(CITIES)

    generated = people[6:]
    children = {
        "Henry_Minsky": ["Marvin_Minsky"],
        "Julia_Foster": ["Ben_Fogle"],
        generated[0]: generated[1:4],
        generated[4]: [generated[5]],
    }
    spouses = [("Ryan_Block", "Veronica_Belmont"), (generated[6], generated[7]),
               (generated[8], generated[9])]

    facts = []
    for p in people:
        facts.append((p, "wasBornIn", born[p]))
    for p, c in died.items():
        facts.append((p, "diedIn", c))
    for parent, kids in children.items():
        for k in kids:
            facts.append((parent, "hasChild", k))
    for a, b in spouses:
        facts.append((a, "isMarriedTo", b))
    types = [(p, "person") for p in people] + [(c, "city") for c in CITIES]
    labels = [
        ("Marvin Lee Minsky", "Marvin_Minsky"),
        ("Henry", "Henry_Minsky"),
        ("Minsky", "Marvin_Minsky"),
        ("Minsky", "Henry_Minsky"),
        ("NYC", "New_York_City"),
        ("New York", "New_York_City"),
        ("Veronica", "Veronica_Belmont"),
    ]
    schemas = [
        ("wasBornIn", "person", "city", ["born", "birth", "birthplace", "hometown"]),
        ("diedIn", "person", "city", ["died", "death"]),
        ("hasChild", "person", "person", ["child", "children", "kid"]),
        ("isMarriedTo", "person", "person", ["spouse", "married", "marriage"]),
    ]
    return people, born, died, facts, types, labels, schemas


def others(rng, pool, exclude, n):
    return rng.sample([x for x in pool if x not in exclude], n)


def noise_snippets(rng, person, true_city, people, count, keyword=None):
    """Snippets that never state the birth city."""
    p = name(person)
    first = p.split()[0]
    out = []
    for _ in range(count):
        d1, d2 = others(rng, CITIES, {true_city}, 2)
        other = rng.choice([x for x in people if x != person])
        kind = rng.randrange(6)
        if kind == 0:
            out.append(f"{p} gave a lecture on {rng.choice(TOPICS)} in {name(d1)} last spring ...")
        elif kind == 1:
            out.append(f"{name(other)} and {p} opened a studio together in {name(d1)} in "
                       f"{rng.randint(1960, 2010)} ...")
        elif kind == 2:
            tail = f" Public {keyword} records" if keyword and keyword != "born" else " Records"
            out.append(f"{name(other)} was born in {name(d1)}.{tail} list a family home "
                       f"near {name(d2)} ...")
        elif kind == 3:
            out.append(f"{p} - Wikipedia. {first} is {article(rng.choice(PROFESSIONS))} known for "
                       f"work on {rng.choice(TOPICS)} ...")
        elif kind == 4:
            out.append(f"{first} {rng.choice(LAST)} - profiles on {rng.choice(TOPICS)}, "
                       f"events and photos ...")
        else:
            out.append(f"Interview: {p} on {rng.choice(TOPICS)} and a recent tour of "
                       f"{name(d1)} ...")
    return out


def answer_snippets(rng, person, city, keyword, count):
    p = name(person)
    pron = rng.choice(["He", "She"])
    d1 = others(rng, CITIES, {city}, 1)[0]
    forms = [
        (f"{p} was born in {name(city)}, where {pron.lower()} attended public school ..."
         if keyword == "born" else
         f"{keyword.capitalize()} of {p}: {name(city)}. {pron} attended public school there ..."),
        f"{p} ({keyword}: {name(city)}, {date(rng)}) is {article(rng.choice(PROFESSIONS))} who "
        f"later worked in {name(d1)} ...",
        f"{p}, {'born in' if keyword == 'born' else keyword} {name(city)}, {date(rng)}, studied {rng.choice(TOPICS)} "
        f"before moving abroad ...",
    ]
    return rng.sample(forms, count)


def place(rng, answers, noise, top):
    """Interleave answer snippets into noise, answers within the first `top` ranks."""
    result = list(noise)
    for a in answers:
        result.insert(rng.randrange(0, min(top, len(result) + 1)), a)
    return result


def build_corpus(rng, people, born):
    order = [p for p in people if p != "Marvin_Minsky"]
    rng.shuffle(order)
    group_a = set(order[: int(len(order) * 0.6)]) | {"Marvin_Minsky"}

    corpus = {}
    for person in people:
        city = born[person]
        p = name(person)
        if person == "Marvin_Minsky":
            table = [
                "Marvin Lee Minsky was born in New York City, to an eye surgeon father, "
                "Henry, and to a mother, Fannie ...",
                "Marvin Minsky - A.M. Turing Award Winner, BIRTH: New York City, "
                "August 9, 1927. DEATH: Boston, January 24, 2016 ...",
            ]
            born_results = table + noise_snippets(rng, person, city, people, 9)
            birth_results = [table[1], table[0]] + born_results[2:]
        else:
            if person in group_a:
                answers = answer_snippets(rng, person, city, "born", 3)
                born_results = place(rng, answers, noise_snippets(rng, person, city, people, 10,
                                                                  "born"), 5)
            else:
                born_results = noise_snippets(rng, person, city, people, 11, "born")
            birth_results = list(born_results)

        if person in group_a:
            birthplace_results = noise_snippets(rng, person, city, people, 10, "birthplace")
        else:
            answers = answer_snippets(rng, person, city, "birthplace", 3)
            birthplace_results = place(rng, answers,
                                       noise_snippets(rng, person, city, people, 9, "birthplace"), 4)

        hometown_results = noise_snippets(rng, person, city, people, 10, "hometown")
        if rng.random() < 0.15:
            hometown_results.insert(rng.randrange(7, 10),
                                    f"{p} returned to {name(city)}, the hometown that shaped "
                                    f"{rng.choice(['his', 'her'])} early work ...")

        corpus[f"{p} born"] = born_results
        corpus[f"{p} birth"] = birth_results
        corpus[f"{p} birthplace"] = birthplace_results
        corpus[f"{p} hometown"] = hometown_results

    corpus["Ryan Block married"] = [
        "Jul 15, 2014 ... Ryan Block, formerly of Engadget and now at AOL .... More famous for "
        "being married to Veronica Belmont IMHO ...",
    ]
    corpus["Ryan Block spouse"] = [
        "Spouse(s), Veronica Belmont. Ryan Block (born June 25, 1982) is a San Francisco-based "
        "technology entrepreneur ...",
    ]
    corpus["Julia Foster child"] = [
        "Mother Love - Ben Fogle and his mother Julia Foster ... A shy and introverted child, "
        "he often felt overwhelmed ...",
    ]
    corpus["Julia Foster children"] = [
        "Children, Ben Fogle, Emily and Bill. Julia Foster (born 2 August 1943) is an English "
        "stage, screen and television actress. Born in ...",
    ]
    return corpus


def write_tsv(path, rows, header):
    with open(path, "w", encoding="utf-8") as f:
        f.write(f"# {header}\n")
        for row in rows:
            f.write("\t".join(row) + "\n")


def main():
    rng = random.Random(SEED)
    people, born, died, facts, types, labels, schemas = build_kb(rng)
    corpus = build_corpus(rng, people, born)
    OUT.mkdir(parents=True, exist_ok=True)
    write_tsv(OUT / "facts.tsv", facts, "subject\trelation\tobject")
    write_tsv(OUT / "types.tsv", types, "entity\ttype")
    write_tsv(OUT / "labels.tsv", labels, "surface form\tentity")
    write_tsv(OUT / "schemas.tsv",
              [(r, s, o, ",".join(t)) for r, s, o, t in schemas],
              "relation\tsubject_type\tobject_type\ttemplates")
    with open(OUT / "corpus.jsonl", "w", encoding="utf-8") as f:
        for question, snippets in corpus.items():
            f.write(json.dumps({"question": question, "snippets": snippets}) + "\n")


if __name__ == "__main__":
    main()
