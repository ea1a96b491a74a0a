#!/usr/bin/env python3
"""Regenerates the mini fixture: kb.tsv, schema.txt, gazetteer.tsv and
dataset.json. Deterministic; run from any directory."""

import json
import os
import random

HERE = os.path.dirname(os.path.abspath(__file__))
rng = random.Random(7)

FILMS = ["Blue Harbor", "Iron Meadow", "Silent Orbit", "Glass Canyon",
         "Paper Moon River", "Cold Lantern", "Velvet Storm", "Hollow Crown",
         "Amber Coast", "Night Ferry", "Broken Compass", "Red Orchard",
         "Winter Signal", "Salt Bridge", "Copper Sky", "Golden Tide",
         "Lost Harbor Lights", "Quiet Engine", "Marble Field", "Ash Garden"]
DIRECTORS = ["Mara Quell", "Tobias Renn", "Ilse Varga", "Owen Strand",
             "Lena Ortiz", "Ravi Mehta"]
ACTORS = ["Nora Vale", "Felix Hart", "June Okafor", "Pablo Serra",
          "Greta Lund", "Samir Haddad", "Clara Voss", "Dmitri Orlov",
          "Hana Sato", "Leo Brandt", "Maya Cole", "Ivan Petrov",
          "Elsa Berg", "Tariq Noor", "Rosa Lima", "Kurt Adler"]
CITIES = ["Port Elden", "Ravenford", "Kestrel Bay", "Oakmere", "Lindholm",
          "Saltmarsh"]


def sym(name):
    return ":" + name.replace(" ", "_")


facts = []
films = {}
people = DIRECTORS + ACTORS
heights = rng.sample(range(158, 201), len(people))
person = {}
for i, p in enumerate(people):
    person[p] = {"city": CITIES[i % len(CITIES)], "height": heights[i]}
for i, f in enumerate(FILMS):
    films[f] = {"director": DIRECTORS[i % len(DIRECTORS)],
                "stars": rng.sample(ACTORS, 2),
                "year": 1980 + (i * 7) % 20}

for f, d in films.items():
    facts.append((sym(f), "a", ":Film"))
    facts.append((sym(f), ":director", sym(d["director"])))
    for s in d["stars"]:
        facts.append((sym(f), ":starring", sym(s)))
    facts.append((sym(f), ":releaseYear", str(d["year"])))
for p, d in person.items():
    facts.append((sym(p), "a", ":Person"))
    facts.append((sym(p), ":birthPlace", sym(d["city"])))
    facts.append((sym(p), ":height", str(d["height"])))
for c in CITIES:
    facts.append((sym(c), "a", ":City"))
for a, b in [(0, 6), (1, 7), (8, 9), (10, 11)]:
    facts.append((sym(people[a]), ":spouse", sym(people[b])))

with open(os.path.join(HERE, "kb.tsv"), "w") as out:
    out.write("# Synthetic film KB for the mini fixture.\n")
    for s, p, o in facts:
        out.write(f"{s}\t{p}\t{o}\n")

with open(os.path.join(HERE, "schema.txt"), "w") as out:
    out.write("domain :director :Film\nrange :director :Person\n"
              "domain :starring :Film\nrange :starring :Person\n"
              "domain :releaseYear :Film\n"
              "domain :birthPlace :Person\nrange :birthPlace :City\n"
              "domain :height :Person\n"
              "domain :spouse :Person\nrange :spouse :Person\n"
              "disjoint :Film :Person\ndisjoint :Film :City\n"
              "disjoint :Person :City\n")

with open(os.path.join(HERE, "gazetteer.tsv"), "w") as out:
    for name in FILMS + people + CITIES:
        out.write(f"{name}\tentity\t{sym(name)}\n")
    for surface, prop in [("directed", ":director"), ("direct", ":director"),
                          ("director", ":director"),
                          ("starring", ":starring"), ("star", ":starring"),
                          ("born", ":birthPlace"),
                          ("birthplace", ":birthPlace"),
                          ("height", ":height"), ("tallest", ":height"),
                          ("released", ":releaseYear"),
                          ("married", ":spouse")]:
        out.write(f"{surface}\tproperty\t{prop}\n")
    for surface, cls in [("films", ":Film"), ("movies", ":Film"),
                         ("people", ":Person"), ("city", ":City")]:
        out.write(f"{surface}\tclass\t{cls}\n")

records = []


def add(question, sparql):
    records.append({"id": f"q{len(records):02d}", "question": question,
                    "sparql": sparql})


def pick_films(n):
    return rng.sample(FILMS, n)


# Who directed a film: { :F :director ?x }
for t, f in zip(["Who directed {f}?", "Who is the director of {f}?",
                 "Tell me who directed {f}.", "Which person directed {f}?",
                 "Name the director of {f}."], pick_films(5)):
    add(t.format(f=f), f"SELECT ?x WHERE {{ {sym(f)} :director ?x }}")

# What a director made: { ?x :director :D }
for t, d in zip(["What did {d} direct?", "What has {d} directed?",
                 "What was directed by {d}?", "Name something directed by {d}.",
                 "What works did {d} direct?"], rng.sample(DIRECTORS, 5)):
    add(t.format(d=d), f"SELECT ?x WHERE {{ ?x :director {sym(d)} }}")

# Counting: { ?x a :Film . ?x :director :D } COUNT
for t, d in zip(["How many films did {d} direct?",
                 "How many movies were directed by {d}?",
                 "Count the films directed by {d}.",
                 "How many films has {d} directed?",
                 "What is the number of films directed by {d}?"],
                rng.sample(DIRECTORS, 5)):
    add(t.format(d=d), "SELECT (COUNT(?x) AS ?c) WHERE { ?x a :Film . "
        f"?x :director {sym(d)} }}")

# Star and director: { ?x :starring :A . ?x :director :D }
for t, f in zip(["Which film starring {a} was directed by {d}?",
                 "In which film directed by {d} did {a} star?",
                 "What film stars {a} and was directed by {d}?",
                 "Name the film directed by {d} starring {a}.",
                 "Which movie directed by {d} stars {a}?"], pick_films(5)):
    a, d = films[f]["stars"][0], films[f]["director"]
    add(t.format(a=a, d=d), f"SELECT ?x WHERE {{ ?x :starring {sym(a)} . "
        f"?x :director {sym(d)} }}")

# Birthplace of a film's director: { :F :director ?y . ?y :birthPlace ?x }
for t, f in zip(["Where was the director of {f} born?",
                 "In which city was the director of {f} born?",
                 "What is the birthplace of the director of {f}?",
                 "Where is the birthplace of the director of {f}?",
                 "Which city is the birthplace of the director of {f}?"],
                pick_films(5)):
    add(t.format(f=f), f"SELECT ?x WHERE {{ {sym(f)} :director ?y . "
        "?y :birthPlace ?x }")

# Tallest person from a city: MAXATN 1
for t, c in zip(["Who is the tallest person born in {c}?",
                 "Which person born in {c} is the tallest?",
                 "Name the tallest person born in {c}.",
                 "Who is the tallest of the people born in {c}?",
                 "Who was the tallest person born in {c}?"],
                rng.sample(CITIES, 5)):
    add(t.format(c=c), f"SELECT ?x WHERE {{ ?x :birthPlace {sym(c)} . "
        "?x :height ?h } ORDER BY DESC(?h) LIMIT 1")

# Average height in a city: AVG
for t, c in zip(["What is the average height of people born in {c}?",
                 "What is the average height of persons born in {c}?",
                 "Give the average height of people born in {c}.",
                 "Tell me the average height of people born in {c}.",
                 "What was the average height of people born in {c}?"],
                rng.sample(CITIES, 5)):
    add(t.format(c=c), "SELECT (AVG(?h) AS ?a) WHERE { "
        f"?x :birthPlace {sym(c)} . ?x :height ?h }}")

# Director and release year: { ?x :director :D . ?x :releaseYear Y }
for t, f in zip(["Which film directed by {d} was released in {y}?",
                 "What film directed by {d} was released in {y}?",
                 "Name the film directed by {d} released in {y}.",
                 "Which movie directed by {d} was released in {y}?",
                 "Tell me the film directed by {d} that was released in {y}."],
                pick_films(5)):
    d, y = films[f]["director"], films[f]["year"]
    add(t.format(d=d, y=y), f"SELECT ?x WHERE {{ ?x :director {sym(d)} . "
        f"?x :releaseYear {y} }}")

with open(os.path.join(HERE, "dataset.json"), "w") as out:
    json.dump(records, out, indent=1)
    out.write("\n")
print(f"{len(facts)} facts, {len(records)} questions")
