"""Semantic domain: presheaf elements and their restriction action.

Every value is immutable.  A value is meaningful at any name set containing
its support; neutral values accumulate substitutions lazily instead of
pushing them into the spine.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Any, Optional, Protocol, runtime_checkable

from .cube import (Bit, CubeMorphism, Name, compose_onto, degeneracy, drop,
                   extend, face, fresh, identity, minus)


class SemanticError(Exception):
    """Internal invariant violation in the evaluator or Kan machinery."""


class Value:
    def support(self) -> frozenset[Name]:
        return frozenset()


@runtime_checkable
class Fam(Protocol):
    """One-argument semantic family (closure)."""

    def apply(self, v: Value) -> Value: ...

    def restrict(self, f: CubeMorphism) -> "Fam": ...

    def support(self) -> frozenset[Name]: ...


class AFibStructure:
    """Uniform tube-filling structure (acyclic fibration), Def. 2 shape.

    extend(stage, base, tube) returns a value extending the tube; `base`
    carries the extra datum for structures over a family (the cube the tube
    lies over), None for plain types.
    """

    def extend(self, stage: frozenset[Name], base: Optional[Value],
               tube: "TubeT") -> Value:
        raise NotImplementedError

    def restrict(self, f: CubeMorphism) -> "AFibStructure":
        raise NotImplementedError

    def support(self) -> frozenset[Name]:
        return frozenset()


Side = tuple[Name, Bit]
TubeT = tuple[tuple[Side, Value], ...]


def tube_get(tube: TubeT, side: Side) -> Optional[Value]:
    for s, v in tube:
        if s == side:
            return v
    return None


def tube_names(tube: TubeT) -> frozenset[Name]:
    return frozenset(s[0] for s, _ in tube)


def sort_tube(entries) -> TubeT:
    return tuple(sorted(entries, key=lambda e: (e[0][0], e[0][1])))


# ---------------------------------------------------------------------------
# canonical values


@dataclass(frozen=True)
class VU(Value):
    pass


@dataclass(frozen=True)
class VBool(Value):
    pass


@dataclass(frozen=True)
class VTrue(Value):
    pass


@dataclass(frozen=True)
class VFalse(Value):
    pass


@dataclass(frozen=True, eq=False)
class VPi(Value):
    dom: Value
    fam: Fam

    def support(self):
        return self.dom.support() | self.fam.support()


@dataclass(frozen=True, eq=False)
class VSigma(Value):
    dom: Value
    fam: Fam

    def support(self):
        return self.dom.support() | self.fam.support()


@dataclass(frozen=True, eq=False)
class VLam(Value):
    fam: Fam

    def support(self):
        return self.fam.support()


@dataclass(frozen=True, eq=False)
class VPair(Value):
    fst: Value
    snd: Value

    def support(self):
        return self.fst.support() | self.snd.support()


@dataclass(frozen=True, eq=False)
class VPathTy(Value):
    ty: Value
    left: Value
    right: Value

    def support(self):
        return self.ty.support() | self.left.support() | self.right.support()


@dataclass(frozen=True, eq=False)
class VPAbs(Value):
    name: Name
    body: Value

    def support(self):
        return self.body.support() - {self.name}


@dataclass(frozen=True, eq=False)
class VGlueTy(Value):
    """Glue type along direction `name`; a, b, t, afib live one stage below."""
    name: Name
    a: Value
    b: Value
    t: Value
    afib: AFibStructure

    def support(self):
        return (self.a.support() | self.b.support() | self.t.support()
                | self.afib.support() | {self.name})


@dataclass(frozen=True, eq=False)
class VGluePair(Value):
    """Element (u, v) of a Glue type along `name`; u one stage below."""
    name: Name
    u: Value
    v: Value

    def support(self):
        return self.u.support() | self.v.support() | {self.name}


@dataclass(frozen=True, eq=False)
class VIdTy(Value):
    ty: Value
    left: Value
    right: Value

    def support(self):
        return self.ty.support() | self.left.support() | self.right.support()


@dataclass(frozen=True, eq=False)
class VIdRefl(Value):
    point: Value

    def support(self):
        return self.point.support()


@dataclass(frozen=True, eq=False)
class VIdBox(Value):
    """Element (path, [J -> tube]) of an identity type."""
    path: Value
    tube: TubeT

    def support(self):
        s = self.path.support() | tube_names(self.tube)
        for _, v in self.tube:
            s |= v.support()
        return s


# ---------------------------------------------------------------------------
# open boxes (shared between the Kan module and formal fill values)


@dataclass(frozen=True, eq=False)
class OpenBox:
    """[J -> tube; (pname, pbit) -> lid] over the ambient name set `names`."""
    names: frozenset[Name]
    pname: Name
    pbit: Bit
    lid: Value
    tube: TubeT

    def __post_init__(self):
        if self.pname not in self.names:
            raise SemanticError("box principal direction outside stage")
        for (j, _), _v in self.tube:
            if j == self.pname or j not in self.names:
                raise SemanticError("bad tube direction")

    @property
    def tube_dirs(self) -> frozenset[Name]:
        return tube_names(self.tube)

    def dirs(self) -> frozenset[Name]:
        return self.tube_dirs | {self.pname}

    def support(self):
        s = self.lid.support() | self.dirs()
        for _, v in self.tube:
            s |= v.support()
        return s

    def side(self, j: Name, c: Bit) -> Optional[Value]:
        if (j, c) == (self.pname, self.pbit):
            return self.lid
        return tube_get(self.tube, (j, c))


class BoxRestrictionError(Exception):
    """Attempt to restrict an open box along a non-allowed substitution."""


def allowed_for(f: CubeMorphism, box: OpenBox) -> bool:
    return f.defined_on(box.dirs())


def restrict_box(box: OpenBox, f: CubeMorphism) -> OpenBox:
    """The open box mf, defined when f is allowed for m."""
    if not allowed_for(f, box):
        raise BoxRestrictionError(
            f"substitution {f} not defined on box directions {set(box.dirs())}")
    tube = sort_tube(
        (((f(j), c), restrict(v, minus(f, j))) for (j, c), v in box.tube))
    return OpenBox(f.dom, f(box.pname), box.pbit,
                   restrict(box.lid, minus(f, box.pname)), tube)


def restrict_tube(tube: TubeT, f: CubeMorphism) -> TubeT:
    if not f.defined_on(tube_names(tube)):
        raise BoxRestrictionError("substitution kills a tube direction")
    return sort_tube(
        (((f(j), c), restrict(v, minus(f, j))) for (j, c), v in tube))


# ---------------------------------------------------------------------------
# universe fillers and formal fills at neutral types


@dataclass(frozen=True, eq=False)
class VUBoxTy(Value):
    """Code for the filler of a box of codes (the universe Kan structure)."""
    box: OpenBox

    def support(self):
        return self.box.support()


@dataclass(frozen=True, eq=False)
class VUCompTy(Value):
    """Missing-lid code of a box of codes; box.pname is bound here."""
    box: OpenBox

    def support(self):
        return self.box.support() - {self.box.pname}


@dataclass(frozen=True, eq=False)
class VUBoxElem(Value):
    """Element of a VUBoxTy: compatible family over the code box's sides."""
    pname: Name
    pbit: Bit
    comps: TubeT  # keys: tube sides of the code box plus (pname, pbit)

    def support(self):
        s = frozenset({self.pname}) | tube_names(self.comps)
        for _, v in self.comps:
            s |= v.support()
        return s

    def comp_at(self, side: Side) -> Value:
        v = tube_get(self.comps, side)
        if v is None:
            raise SemanticError(f"universe box element missing side {side}")
        return v


@dataclass(frozen=True, eq=False)
class VUCompElem(Value):
    """Element of a VUCompTy; pname is bound."""
    pname: Name
    pbit: Bit
    comps: TubeT

    def support(self):
        s = tube_names(self.comps) - {self.pname}
        for _, v in self.comps:
            s |= v.support()
        return s - {self.pname}


@dataclass(frozen=True, eq=False)
class VFormalFill(Value):
    """Filler of a box at a neutral type; restricts by restricting its box."""
    ty: Value
    box: OpenBox

    def support(self):
        return self.ty.support() | self.box.support()


@dataclass(frozen=True, eq=False)
class VFormalComp(Value):
    """Missing lid of a formal fill; box.pname is bound."""
    ty: Value
    box: OpenBox

    def support(self):
        return (self.ty.support() | self.box.support()) - {self.box.pname}


# ---------------------------------------------------------------------------
# neutrals


_uid = 0


def _next_uid() -> int:
    global _uid
    _uid += 1
    return _uid


@dataclass(frozen=True)
class VarHead:
    text: str
    uid: int = field(default_factory=_next_uid)

    def __repr__(self):
        return f"{self.text}%{self.uid}"


@dataclass(frozen=True, eq=False)
class EApp:
    arg: Value


@dataclass(frozen=True, eq=False)
class EPApp:
    r: Name | Bit


@dataclass(frozen=True)
class EFst:
    pass


@dataclass(frozen=True)
class ESnd:
    pass


@dataclass(frozen=True, eq=False)
class EIdJ:
    motive: Value
    diag: Value


@dataclass(frozen=True, eq=False)
class EBoolElim:
    motive: Value
    on_true: Value
    on_false: Value


@dataclass(frozen=True)
class EUnglue:
    pass


Elim = Any


@dataclass(frozen=True, eq=False)
class VNeutral(Value):
    ty: Optional[Value]  # type at creation stage, when known
    head: VarHead
    spine: tuple[Elim, ...]
    sub: CubeMorphism  # current stage -> creation stage

    def support(self):
        return frozenset(t for _, t in self.sub.entries if isinstance(t, Name))


def neutral_var(text: str, ty: Optional[Value],
                stage: frozenset[Name]) -> VNeutral:
    return VNeutral(ty, VarHead(text), (), identity(stage))


def is_discrete(ty: Optional[Value]) -> bool:
    """Types whose paths are all constant (semantically forced)."""
    while isinstance(ty, VPathTy):
        ty = ty.ty
    return isinstance(ty, VBool)


def _elim_restrict(e: Elim, f: CubeMorphism) -> Elim:
    match e:
        case EApp(arg):
            return EApp(restrict(arg, f))
        case EPApp(r):
            return EPApp(f.act(r))
        case EIdJ(motive, diag):
            return EIdJ(restrict(motive, f), restrict(diag, f))
        case EBoolElim(motive, t, fa):
            return EBoolElim(restrict(motive, f), restrict(t, f),
                             restrict(fa, f))
        case EFst() | ESnd() | EUnglue():
            return e
    raise SemanticError(f"unknown eliminator {e!r}")


def force(n: VNeutral) -> VNeutral:
    """Push the accumulated substitution into the spine (for comparison)."""
    if n.sub.is_identity():
        return n
    f = n.sub
    ty = restrict(n.ty, f) if n.ty is not None else None
    spine = tuple(_elim_restrict(e, f) for e in n.spine)
    return VNeutral(ty, n.head, spine, identity(f.dom))


# ---------------------------------------------------------------------------
# environments


@dataclass(frozen=True, eq=False)
class Env:
    stage: frozenset[Name] = frozenset()
    vars: tuple[tuple[str, Value], ...] = ()
    dirs: tuple[tuple[str, Name | Bit], ...] = ()
    globals: Any = None  # str -> (Value, Value); shared, never restricted

    def lookup(self, x: str) -> Value:
        for k, v in reversed(self.vars):
            if k == x:
                return v
        if self.globals is not None and x in self.globals:
            return self.globals[x][0]
        raise SemanticError(f"unbound variable {x}")

    def lookup_dir(self, d: str) -> Name | Bit:
        for k, v in reversed(self.dirs):
            if k == d:
                return v
        raise SemanticError(f"unbound direction {d}")

    def bind(self, x: str, v: Value) -> "Env":
        return Env(self.stage, self.vars + ((x, v),), self.dirs, self.globals)

    def bind_dir(self, d: str, r: Name | Bit) -> "Env":
        stage = self.stage | {r} if isinstance(r, Name) else self.stage
        return Env(stage, self.vars, self.dirs + ((d, r),), self.globals)

    def at_stage(self, stage: frozenset[Name]) -> "Env":
        return Env(stage, self.vars, self.dirs, self.globals)

    def support(self):
        s = frozenset()
        for _, v in self.vars:
            s |= v.support()
        for _, r in self.dirs:
            if isinstance(r, Name):
                s |= {r}
        return s


def restrict_env(env: Env, f: CubeMorphism) -> Env:
    vars = tuple((k, restrict(v, f)) for k, v in env.vars)
    dirs = tuple((k, f.act(r) if isinstance(r, Name) else r)
                 for k, r in env.dirs)
    return Env(f.dom, vars, dirs, env.globals)


# ---------------------------------------------------------------------------
# the restriction action


def restrict(v: Value, f: CubeMorphism) -> Value:
    if f.is_identity():
        return v
    match v:
        case VU() | VBool() | VTrue() | VFalse():
            return v
        case VPi(dom, fam):
            return VPi(restrict(dom, f), fam.restrict(f))
        case VSigma(dom, fam):
            return VSigma(restrict(dom, f), fam.restrict(f))
        case VLam(fam):
            return VLam(fam.restrict(f))
        case VPair(a, b):
            return VPair(restrict(a, f), restrict(b, f))
        case VPathTy(ty, l, r):
            return VPathTy(restrict(ty, f), restrict(l, f), restrict(r, f))
        case VPAbs(i, body):
            g = drop(f, i) if i in f.cod else f
            i2 = fresh(i.text)
            return VPAbs(i2, restrict(body, extend(g, i, i2)))
        case VGlueTy(i, a, b, t, afib):
            fi = f(i)
            if fi == 0:
                return restrict(a, drop(f, i))
            if fi == 1:
                return restrict(b, drop(f, i))
            g = minus(f, i)
            return VGlueTy(fi, restrict(a, g), restrict(b, g),
                           restrict(t, g), afib.restrict(g))
        case VGluePair(i, u, w):
            fi = f(i)
            if fi == 0:
                return restrict(u, drop(f, i))
            if fi == 1:
                return restrict(w, f)
            return VGluePair(fi, restrict(u, minus(f, i)), restrict(w, f))
        case VIdTy(ty, l, r):
            return VIdTy(restrict(ty, f), restrict(l, f), restrict(r, f))
        case VIdRefl(u):
            return VIdRefl(restrict(u, f))
        case VIdBox(path, tube):
            for (j, c), u in tube:
                if f(j) == c:
                    return restrict(u, minus(f, j))
            return VIdBox(restrict(path, f), restrict_tube(tube, f))
        case VUBoxTy(box):
            return _restrict_boxlike(v, box, f,
                                     mk_fill=VUBoxTy, mk_comp=VUCompTy)
        case VUCompTy(box):
            return _restrict_complike(v, box, f, mk_comp=VUCompTy)
        case VFormalFill(ty, box):
            return _restrict_boxlike(
                v, box, f,
                mk_fill=lambda b, g: VFormalFill(restrict(ty, g), b),
                mk_comp=lambda b: VFormalComp(ty, b), pass_sub=True)
        case VFormalComp(ty, box):
            return _restrict_complike(
                v, box, f,
                mk_comp=lambda b, g2: VFormalComp(restrict(ty, g2), b),
                pass_sub=True)
        case VUBoxElem(i, a, comps):
            fi = f(i)
            if fi == a:
                return restrict(tube_get(comps, (i, a)), drop(f, i))
            if fi == 1 - a:
                return restrict(VUCompElem(i, a, comps), drop(f, i))
            for (j, c), u in comps:
                if j != i and f(j) == c:
                    return restrict(u, minus(f, j))
            return VUBoxElem(fi, a, restrict_tube(comps, f))
        case VUCompElem(i, a, comps):
            for (j, c), u in comps:
                if j != i and f(j) == c:
                    phi = _set_then(f, j, i, 1 - a)
                    return restrict(u, phi)
            i2 = fresh(i.text)
            f2 = extend(f, i, i2)
            return VUCompElem(i2, a, restrict_tube(comps, f2))
        case VNeutral(ty, head, spine, sub):
            if is_discrete(ty):
                return v  # constant presheaf: every restriction is equal
            return VNeutral(ty, head, spine, compose_onto(sub, f))
    raise SemanticError(f"restrict: unhandled value {type(v).__name__}")


def _restrict_boxlike(v, box: OpenBox, f, mk_fill, mk_comp, pass_sub=False):
    """Shared restriction for filler-shaped values (UBoxTy, FormalFill)."""
    i, a = box.pname, box.pbit
    fi = f(i)
    if fi == a:
        return restrict(box.lid, drop(f, i))
    if fi == 1 - a:
        comp = mk_comp(box)
        return restrict(comp, drop(f, i))
    for (j, c), u in box.tube:
        if f(j) == c:
            return restrict(u, minus(f, j))
    b2 = restrict_box(box, f)
    return mk_fill(b2, f) if pass_sub else mk_fill(b2)


def _restrict_complike(v, box: OpenBox, f, mk_comp, pass_sub=False):
    """Shared restriction for missing-lid values (bound principal name)."""
    i, a = box.pname, box.pbit
    for (j, c), u in box.tube:
        if f(j) == c:
            phi = _set_then(f, j, i, 1 - a)
            return restrict(u, phi)
    i2 = fresh(i.text)
    f2 = extend(f, i, i2)
    b2 = restrict_box(box, f2)
    b2 = OpenBox(b2.names, b2.pname, b2.pbit, b2.lid, b2.tube)
    return mk_comp(b2, f2) if pass_sub else mk_comp(b2)


def _set_then(f: CubeMorphism, j: Name, i: Name, b: Bit) -> CubeMorphism:
    """Morphism acting like (f - j) extended with i -> b.

    Used when a restriction hits a tube side of a missing-lid value: the
    stored component (living one stage above, with i free) is first pushed to
    the open side i := b and then follows f with j skipped.
    """
    g = minus(f, j)
    entries = dict(g.entries)
    entries[i] = b
    from .cube import _make
    return _make(g.dom, g.cod | {i}, entries)


# ---------------------------------------------------------------------------
# eliminator application on values (structural part only)


def app(fn: Value, arg: Value) -> Value:
    match fn:
        case VLam(fam):
            return fam.apply(arg)
        case VNeutral(ty, head, spine, sub):
            rty = None
            fty = _forced_ty(fn)
            if isinstance(fty, VPi):
                rty = fty.fam.apply(arg)
            return VNeutral(rty, head,
                            force(fn).spine + (EApp(arg),),
                            identity(sub.dom))
    raise SemanticError(f"application of non-function {type(fn).__name__}")


def _forced_ty(n: VNeutral) -> Optional[Value]:
    if n.ty is None:
        return None
    return restrict(n.ty, n.sub)


def proj1(p: Value) -> Value:
    match p:
        case VPair(a, _):
            return a
        case VNeutral():
            fty = _forced_ty(p)
            rty = fty.dom if isinstance(fty, VSigma) else None
            return VNeutral(rty, p.head, force(p).spine + (EFst(),),
                            identity(p.sub.dom))
    raise SemanticError("first projection of non-pair")


def proj2(p: Value) -> Value:
    match p:
        case VPair(_, b):
            return b
        case VNeutral():
            fty = _forced_ty(p)
            rty = fty.fam.apply(proj1(p)) if isinstance(fty, VSigma) else None
            return VNeutral(rty, p.head, force(p).spine + (ESnd(),),
                            identity(p.sub.dom))
    raise SemanticError("second projection of non-pair")


def path_apply(p: Value, r: Name | Bit) -> Value:
    match p:
        case VPAbs(i, body):
            if r in (0, 1):
                stage = body.support() - {i}
                return restrict(body, face(stage, i, r))
            if r == i:
                return body
            stage = body.support() - {i}
            if r in stage:
                raise SemanticError(f"path applied at non-fresh name {r}")
            return restrict(body, extend(identity(stage), i, r))
        case VNeutral():
            fty = _forced_ty(p)
            if isinstance(fty, VPathTy):
                if is_discrete(fty.ty):
                    return fty.left  # paths in a discrete type are constant
                rty = fty.ty
                if r in (0, 1):
                    return fty.left if r == 0 else fty.right
                return VNeutral(rty, p.head, force(p).spine + (EPApp(r),),
                                identity(p.sub.dom))
            return VNeutral(None, p.head, force(p).spine + (EPApp(r),),
                            identity(p.sub.dom))
    raise SemanticError(f"path application of {type(p).__name__}")


def unglue_value(g: Value) -> Value:
    match g:
        case VGluePair(_, _, v):
            return v
        case VNeutral():
            return VNeutral(None, g.head, force(g).spine + (EUnglue(),),
                            identity(g.sub.dom))
    raise SemanticError("unglue of non-glue element")
