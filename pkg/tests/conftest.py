"""Shared fixtures: mini corpora, encoders, blob data, and an adapter script."""

import sys
import textwrap

import numpy as np
import pytest

from entpat.corpus import (
    AdviceStatement,
    Corpus,
    EntityAnnotation,
    EntityClass,
    save_corpus,
)
from entpat.encoders import HashEncoder


def statement(sid, text, *entities):
    """Build an AdviceStatement from (surface, label) pairs."""
    return AdviceStatement(
        id=sid,
        text=text,
        entities=tuple(
            EntityAnnotation(surface=surface, label=label) for surface, label in entities
        ),
    )


@pytest.fixture
def hash_encoder():
    return HashEncoder(dim=64)


@pytest.fixture
def liver_corpus():
    """Small corpus with repeated, multi-word, and single-mention surfaces."""
    return Corpus.from_statements(
        [
            statement(
                "1-1",
                "Kidneys, liver, dairy are options.",
                ("liver", EntityClass.FOOD),
                ("dairy", EntityClass.FOOD),
            ),
            statement(
                "1-2",
                "beef liver or chicken can be added.",
                ("liver", EntityClass.FOOD),
            ),
            statement(
                "1-3",
                "Chicken liver will help with iron.",
                ("liver", EntityClass.FOOD),
            ),
            statement(
                "2-1",
                "A glass of red wine a day is fine.",
                ("red wine", EntityClass.FOOD),
            ),
            statement(
                "3-1", "Take ibuprofen for the pain.", ("ibuprofen", EntityClass.MED)
            ),
            statement(
                "3-2",
                "Avoid ibuprofen on an empty stomach.",
                ("ibuprofen", EntityClass.MED),
            ),
            statement(
                "4-1",
                "Ringing in the ears may signal tinnitus.",
                ("tinnitus", EntityClass.DIS),
            ),
            statement(
                "4-2",
                "Tinnitus can worsen with caffeine.",
                ("Tinnitus", EntityClass.DIS),
            ),
        ]
    )


@pytest.fixture
def liver_corpus_path(liver_corpus, tmp_path):
    path = tmp_path / "corpus.jsonl"
    save_corpus(liver_corpus, path)
    return path


@pytest.fixture
def blob_data():
    """Factory for linearly separable Gaussian blobs in the 6-class label space."""

    def make(n_per_class=20, dim=8, spread=0.4, seed=7):
        rng = np.random.default_rng(seed)
        classes = (EntityClass.FOOD, EntityClass.MED, EntityClass.DIS)
        centers = np.zeros((len(classes), dim))
        for i in range(len(classes)):
            centers[i, i] = 5.0
        X = np.vstack(
            [rng.normal(center, spread, size=(n_per_class, dim)) for center in centers]
        )
        y = [cls for cls in classes for _ in range(n_per_class)]
        return X, y

    return make


@pytest.fixture
def context_determined_corpus():
    """Unique surfaces whose class is carried entirely by the context template.

    Every FOOD surface appears only in the FOOD sentence frame and every DIS
    surface only in the DIS frame, twice each.  Surface strings themselves
    are arbitrary tokens, so a semantics-free encoder sees no class signal
    in the entity part -- only the pattern part separates the classes.
    """
    templates = {
        EntityClass.FOOD: "Eat {} with breakfast daily.",
        EntityClass.DIS: "Avoid stress to manage {} symptoms.",
    }
    statements = []
    sid = 0
    for cls, template in templates.items():
        for i in range(20):
            surface = f"{cls.value.lower()}item{i:02d}"
            for _ in range(2):
                sid += 1
                statements.append(
                    statement(f"p-{sid}", template.format(surface), (surface, cls))
                )
    return Corpus.from_statements(statements)


@pytest.fixture
def shared_surface_corpus():
    """Surfaces annotated with conflicting labels (two FOOD, one DIS each).

    Because features are computed per surface form, no model can separate
    the conflicting mentions of one surface; the best reachable score is the
    best constant class assignment per surface.
    """
    specs = [
        (EntityClass.FOOD, "Add {} to your salad."),
        (EntityClass.FOOD, "Grill {} before serving."),
        (EntityClass.DIS, "See a doctor if {} persists."),
    ]
    statements = []
    sid = 0
    for i in range(10):
        surface = f"sharedterm{i:02d}"
        for cls, template in specs:
            sid += 1
            statements.append(
                statement(f"q-{sid}", template.format(surface), (surface, cls))
            )
    return Corpus.from_statements(statements)


@pytest.fixture
def adapter_command(tmp_path):
    """Command line of a working external encoder adapter (dim 4)."""
    script = tmp_path / "adapter.py"
    script.write_text(
        textwrap.dedent(
            """\
            import json, sys

            for line in sys.stdin:
                text = json.loads(line)["text"]
                vector = [
                    len(text) / 100.0,
                    text.count("a") / 10.0,
                    text.count("e") / 10.0,
                    1.0 if text.endswith(".") else -1.0,
                ]
                print(json.dumps({"vector": vector}), flush=True)
            """
        ),
        encoding="utf-8",
    )
    return f"{sys.executable} {script}"
