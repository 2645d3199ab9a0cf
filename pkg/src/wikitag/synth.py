"""Synthetic Wikipedia-like corpora with topical clusters and shared (ambiguous) surfaces.

Entities live in clusters and mostly mention entities of their own cluster,
so in-link sets overlap within a cluster. Some surface words are shared by
entities of different clusters, with popularity skew, which makes them
ambiguous with a dominant sense. Filler text contains "noise" words that
are occasionally linked to generic pages, giving low link probability.
"""
from __future__ import annotations

import random
from dataclasses import dataclass, field

from .corpus import PageKind, RawPage

_ONSETS = "b c d f g h j k l m n p r s t v z br dr gr kr pl st tr".split()
_VOWELS = "a e i o u ai ea io ou".split()
_CODAS = ["", "", "n", "r", "s", "l", "m", "x"]


@dataclass(frozen=True)
class SynthParams:
    n_clusters: int = 12
    entities_per_cluster: int = 20
    n_shared: int = 60
    n_noise: int = 40
    n_filler: int = 120
    sentences_per_page: int = 20
    same_cluster: float = 0.85
    shared_surface_use: float = 0.75
    later_link: float = 0.08
    disamb_link: float = 0.02
    noise_link: tuple[float, float] = (0.01, 0.4)
    seed: int = 0


@dataclass
class Entity:
    page_id: int
    cluster: int
    name: str  # unique two-word name
    weight: float
    shared: str | None = None  # shared surface word, if any
    title: str = ""


@dataclass
class SynthCorpus:
    params: SynthParams
    pages: list[RawPage]
    entities: list[Entity]
    clusters: list[list[Entity]]
    cluster_names: list[str]
    fillers: list[str]
    noise: dict[str, int]  # noise word -> page id
    first_link: dict[str, float] = field(default_factory=dict)
    noise_link: dict[str, float] = field(default_factory=dict)

    def sentence(self, rng: random.Random, cluster: int, exclude: int | None = None,
                 markup: bool = False, linked: set[str] | None = None) -> str:
        """One sentence with two entity mentions; links per the corpus conventions if ``markup``."""
        words = [rng.choice(self.fillers) for _ in range(rng.randint(4, 8))]
        out: list[str] = []
        for w in words:
            if w in self.noise and markup and rng.random() < self.noise_link[w]:
                out.append(f"[[{self._noise_title(w)}|{w}]]")
            else:
                out.append(w)
        for _ in range(2):
            ent = self._pick_entity(rng, cluster, exclude)
            out.insert(rng.randint(0, len(out)), self._mention(rng, ent, markup, linked))
        text = " ".join(out)
        return text[0].upper() + text[1:] + "."

    def text(self, rng: random.Random, n_sentences: int, cluster: int | None = None) -> str:
        """Plain (markup-free) text; the topic cluster drifts every few sentences when not fixed."""
        sents = []
        c = rng.randrange(self.params.n_clusters) if cluster is None else cluster
        for i in range(n_sentences):
            if cluster is None and i and i % 5 == 0:
                c = rng.randrange(self.params.n_clusters)
            sents.append(self.sentence(rng, c))
        return " ".join(sents)

    def _noise_title(self, word: str) -> str:
        return f"{word.capitalize()} (term)"

    def _pick_entity(self, rng: random.Random, cluster: int, exclude: int | None) -> Entity:
        if rng.random() >= self.params.same_cluster:
            cluster = rng.randrange(self.params.n_clusters)
        pool = [e for e in self.clusters[cluster] if e.page_id != exclude]
        return rng.choices(pool, weights=[e.weight for e in pool])[0]

    def _mention(self, rng: random.Random, ent: Entity, markup: bool, linked: set[str] | None) -> str:
        use_shared = ent.shared is not None and rng.random() < self.params.shared_surface_use
        surface = ent.shared if use_shared else ent.name
        if not markup:
            return surface
        first = linked is not None and surface.lower() not in linked
        prob = self.first_link[surface] if first else self.params.later_link
        if rng.random() >= prob:
            return surface
        if linked is not None:
            linked.add(surface.lower())
        if use_shared and rng.random() < self.params.disamb_link:
            return f"[[{surface.capitalize()} (disambiguation)|{surface}]]"
        # links by unique name go through the redirect when the entity has a qualified title
        target = ent.name if not use_shared and ent.shared is not None else ent.title
        return f"[[{target}|{surface}]]"


def _word(rng: random.Random, syllables: int) -> str:
    w = "".join(rng.choice(_ONSETS) + rng.choice(_VOWELS) for _ in range(syllables))
    return w + rng.choice(_CODAS)


def _unique_words(rng: random.Random, n: int, syllables: tuple[int, int], taken: set[str]) -> list[str]:
    out = []
    while len(out) < n:
        w = _word(rng, rng.randint(*syllables))
        if w not in taken:
            taken.add(w)
            out.append(w)
    return out


def generate(params: SynthParams = SynthParams()) -> SynthCorpus:
    rng = random.Random(params.seed)
    taken: set[str] = set()
    fillers = _unique_words(rng, params.n_filler, (1, 2), taken)
    noise_words = fillers[:params.n_noise]
    cluster_names = [w.capitalize() for w in _unique_words(rng, params.n_clusters, (2, 3), taken)]
    shared_words = _unique_words(rng, params.n_shared, (2, 3), taken)

    next_id = 1
    entities: list[Entity] = []
    clusters: list[list[Entity]] = []
    for c in range(params.n_clusters):
        members = []
        for j in range(params.entities_per_cluster):
            first, last = _unique_words(rng, 2, (2, 3), taken)
            ent = Entity(next_id, c, f"{first.capitalize()} {last.capitalize()}", 1.0 / (j + 1) ** 0.8)
            next_id += 1
            members.append(ent)
            entities.append(ent)
        clusters.append(members)

    # each shared word goes to 2-4 entities of distinct clusters, one sense per entity
    free = {c: list(range(params.entities_per_cluster)) for c in range(params.n_clusters)}
    for c in free:
        rng.shuffle(free[c])
    for word in shared_words:
        k = rng.randint(2, 4)
        cands = [c for c in range(params.n_clusters) if free[c]]
        if len(cands) < 2:
            break
        for c in rng.sample(cands, min(k, len(cands))):
            ent = clusters[c][free[c].pop()]
            ent.shared = word
    for ent in entities:
        ent.title = f"{ent.shared.capitalize()} ({cluster_names[ent.cluster]})" if ent.shared else ent.name

    corpus = SynthCorpus(params, [], entities, clusters, cluster_names, fillers, {})
    for word in shared_words:
        corpus.first_link[word] = rng.uniform(0.4, 0.95)
    for ent in entities:
        corpus.first_link[ent.name] = rng.uniform(0.6, 0.98)
    for w in noise_words:
        corpus.noise_link[w] = rng.uniform(*params.noise_link)

    for w in noise_words:
        corpus.noise[w] = next_id
        next_id += 1

    pages: list[RawPage] = []
    for ent in entities:
        linked: set[str] = set()
        sents = [corpus.sentence(rng, ent.cluster, ent.page_id, markup=True, linked=linked)
                 for _ in range(params.sentences_per_page)]
        pages.append(RawPage(ent.page_id, ent.title, PageKind.ARTICLE, " ".join(sents)))

    for w in noise_words:
        body = " ".join(corpus.sentence(rng, rng.randrange(params.n_clusters), markup=True)
                        for _ in range(3))
        pages.append(RawPage(corpus.noise[w], corpus._noise_title(w), PageKind.ARTICLE, body))

    for ent in entities:
        if ent.shared is not None:
            pages.append(RawPage(next_id, ent.name, PageKind.REDIRECT, redirect_to=ent.title))
            next_id += 1
    by_word: dict[str, list[Entity]] = {}
    for ent in entities:
        if ent.shared:
            by_word.setdefault(ent.shared, []).append(ent)
    for word, ents in by_word.items():
        body = " ".join(f"[[{e.title}]]" for e in ents)
        pages.append(RawPage(next_id, f"{word.capitalize()} (disambiguation)", PageKind.DISAMBIGUATION, body))
        next_id += 1
    for c, members in enumerate(clusters):
        body = " ".join(f"[[{e.title}]]" for e in members)
        pages.append(RawPage(next_id, f"List of {cluster_names[c]} topics", PageKind.LIST, body))
        next_id += 1

    corpus.pages = pages
    return corpus
