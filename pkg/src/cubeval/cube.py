"""Base category of cubes: finite name sets and substitutions.

A substitution f : J -> I is stored as a total map I -> J + {0,1} that is
injective on the preimage of J.  Restriction of semantic values along f is
implemented in values.py; this module only knows about names.
"""
from __future__ import annotations

from dataclasses import dataclass, field

Bit = int  # 0 or 1


@dataclass(frozen=True, order=True)
class Name:
    index: int
    text: str = field(compare=False, default="i")

    def __repr__(self):
        return f"{self.text}#{self.index}"


_counter = 0


def fresh(text: str = "i") -> Name:
    """Globally fresh name; deterministic within a run."""
    global _counter
    _counter += 1
    return Name(_counter, text.split("#")[0])


def reset_names(start: int = 0) -> None:
    """Reset the fresh-name counter (tests and CLI reproducibility)."""
    global _counter
    _counter = start


NameSet = frozenset


def nameset(*names: Name) -> frozenset[Name]:
    return frozenset(names)


class CubeError(Exception):
    """Invalid cube-morphism construction or use."""


@dataclass(frozen=True)
class CubeMorphism:
    """f : dom -> cod, as a map cod -> dom + {0,1}."""
    dom: frozenset[Name]
    cod: frozenset[Name]
    entries: tuple[tuple[Name, Name | Bit], ...]  # sorted by source name

    def __post_init__(self):
        seen: set[Name] = set()
        srcs = set()
        for src, tgt in self.entries:
            if src not in self.cod:
                raise CubeError(f"map source {src} not in cod")
            srcs.add(src)
            if isinstance(tgt, Name):
                if tgt not in self.dom:
                    raise CubeError(f"map target {tgt} not in dom")
                if tgt in seen:
                    raise CubeError(f"not injective on names: {tgt} hit twice")
                seen.add(tgt)
            elif tgt not in (0, 1):
                raise CubeError(f"bad endpoint {tgt!r}")
        if srcs != set(self.cod):
            raise CubeError("map not total on cod")

    @property
    def mapping(self) -> dict[Name, Name | Bit]:
        return dict(self.entries)

    def __call__(self, i: Name) -> Name | Bit:
        for src, tgt in self.entries:
            if src == i:
                return tgt
        raise CubeError(f"{i} not in cod of morphism")

    def act(self, r: Name | Bit) -> Name | Bit:
        """Apply to a name or endpoint (endpoints are fixed)."""
        return r if r in (0, 1) else self(r)

    def is_identity(self) -> bool:
        return self.dom == self.cod and all(s == t for s, t in self.entries)

    def defined_on(self, names) -> bool:
        if isinstance(names, Name):
            names = (names,)
        return all(isinstance(self(i), Name) for i in names)

    def image(self, names: frozenset[Name]) -> frozenset[Name]:
        return frozenset(self(i) for i in names)

    def __repr__(self):
        parts = ", ".join(f"{s}->{t}" for s, t in self.entries)
        return f"<{parts}>"


def _make(dom, cod, mapping: dict[Name, Name | Bit]) -> CubeMorphism:
    entries = tuple(sorted(mapping.items(), key=lambda e: e[0]))
    return CubeMorphism(frozenset(dom), frozenset(cod), entries)


def identity(names: frozenset[Name]) -> CubeMorphism:
    return _make(names, names, {i: i for i in names})


def face(names: frozenset[Name], i: Name, b: Bit) -> CubeMorphism:
    """(ib) : I -> I,i  sending i to the endpoint b."""
    if i in names:
        raise CubeError(f"face: {i} already in {set(names)}")
    m: dict[Name, Name | Bit] = {j: j for j in names}
    m[i] = b
    return _make(names, names | {i}, m)


def degeneracy(names: frozenset[Name], i: Name) -> CubeMorphism:
    """deg_i : I,i -> I  induced by the inclusion I into I,i."""
    if i in names:
        raise CubeError(f"degeneracy: {i} already in {set(names)}")
    return _make(names | {i}, names, {j: j for j in names})


def compose(f: CubeMorphism, g: CubeMorphism) -> CubeMorphism:
    """fg : K -> I for f : J -> I and g : K -> J (applicative order)."""
    if f.dom != g.cod:
        raise CubeError(f"compose: dom {set(f.dom)} != cod {set(g.cod)}")
    m: dict[Name, Name | Bit] = {}
    for i in f.cod:
        t = f(i)
        m[i] = t if t in (0, 1) else g(t)
    return _make(g.dom, f.cod, m)


def minus(f: CubeMorphism, i: Name) -> CubeMorphism:
    """f - i : (dom - f(i)) -> (cod - i), like f but skipping i."""
    fi = f(i)
    if not isinstance(fi, Name):
        raise CubeError(f"minus: morphism not defined on {i}")
    m = {j: t for j, t in f.entries if j != i}
    return _make(f.dom - {fi}, f.cod - {i}, m)


def extend(f: CubeMorphism, i: Name, i2: Name) -> CubeMorphism:
    """Extend f : J -> I to J,i2 -> I,i with i going to i2 (binder descent)."""
    if i in f.cod or i2 in f.dom:
        raise CubeError("extend: name clash")
    m = dict(f.entries)
    m[i] = i2
    return _make(f.dom | {i2}, f.cod | {i}, m)


def drop(f: CubeMorphism, i: Name) -> CubeMorphism:
    """Forget the entry at i (used when f sends i to an endpoint)."""
    if isinstance(f(i), Name):
        raise CubeError(f"drop: {i} is sent to a name, use minus")
    m = {j: t for j, t in f.entries if j != i}
    return _make(f.dom, f.cod - {i}, m)


def compose_onto(sub: CubeMorphism, f: CubeMorphism) -> CubeMorphism:
    """sub;f where f.cod need only cover sub's name targets.

    Used for lazily substituted neutrals: the ambient stage of a value may be
    any superset of its support, so the strict dom/cod match of compose is
    relaxed to coverage of the names that actually occur.
    """
    m: dict[Name, Name | Bit] = {}
    for i, t in sub.entries:
        m[i] = t if t in (0, 1) else f(t)
    return _make(f.dom, sub.cod, m)


def all_morphisms(dom: frozenset[Name], cod: frozenset[Name]):
    """Enumerate every morphism dom -> cod (exhaustive law checks, tiny sets)."""
    cods = sorted(cod)
    choices: list[list[Name | Bit]] = [[0, 1, *sorted(dom)] for _ in cods]

    def rec(k: int, acc: dict[Name, Name | Bit], used: set[Name]):
        if k == len(cods):
            yield _make(dom, cod, dict(acc))
            return
        for t in choices[k]:
            if isinstance(t, Name):
                if t in used:
                    continue
                used.add(t)
                acc[cods[k]] = t
                yield from rec(k + 1, acc, used)
                used.discard(t)
            else:
                acc[cods[k]] = t
                yield from rec(k + 1, acc, used)
            acc.pop(cods[k], None)

    yield from rec(0, {}, set())
