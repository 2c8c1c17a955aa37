"""Graph-theoretic rewrite rules on graph-like diagrams.

Public rule functions validate their precondition, mutate a copy and return it,
so callers can keep the pre-state (the RL environment needs it for rewards).
The ``_inplace`` variants skip the copy and are used by the simplifier and the
extractor, which own their diagrams.

The boundary pivot follows the standard trick: rather than leaving an inserted
identity spider behind, the boundary wire of the removed spider is re-pointed
at the surviving spider with its type toggled.  This strictly decreases the
spider count, which is what makes the reduce-all loop terminate.
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import IntEnum
from itertools import combinations

from .zx_graph import (
    EdgeType,
    VertexKind,
    ZxDiagram,
    fuse_into,
    is_pauli_phase,
    is_proper_clifford_phase,
    toggled,
)


class RuleError(Exception):
    """Rewrite precondition violated; the diagram is unchanged."""


class ActionTag(IntEnum):
    # numeric order fixes the deterministic enumeration order
    LOCAL_COMP = 0
    PIVOT = 1
    BOUNDARY_PIVOT = 2
    IDENTITY_REMOVE = 3
    GADGET_FUSION = 4
    STOP = 5


@dataclass(frozen=True)
class RewriteAction:
    tag: ActionTag
    vertices: tuple[int, ...] = ()

    def __repr__(self):
        args = ",".join(str(v) for v in self.vertices)
        return f"{self.tag.name}({args})"


STOP = RewriteAction(ActionTag.STOP)


# -- helpers ---------------------------------------------------------------


def _check_interior_spider(d: ZxDiagram, v: int) -> None:
    if v not in d or d.is_boundary(v):
        raise RuleError(f"vertex {v} is not a spider")
    if not d.is_interior(v):
        raise RuleError(f"spider {v} is not interior")


def _gadget_hub_tip(d: ZxDiagram, hub: int) -> int | None:
    """If ``hub`` is a phase-gadget hub (phaseless spider with a degree-1
    Hadamard-attached tip), return the tip, else None."""
    if hub not in d or d.is_boundary(hub) or d.phase(hub) != 0:
        return None
    if d.degree(hub) < 2:
        return None
    tips = [
        w
        for w in d.neighbors(hub)
        if not d.is_boundary(w)
        and d.degree(w) == 1
        and d.edge_type(hub, w) is EdgeType.HADAMARD
    ]
    if len(tips) != 1:
        return None
    return tips[0]


def _gadgetize(d: ZxDiagram, v: int) -> None:
    """Unfuse the phase of ``v`` into a phase gadget, leaving ``v`` phaseless."""
    hub = d.add_vertex(VertexKind.Z, 0)
    tip = d.add_vertex(VertexKind.Z, d.phase(v))
    d.set_phase(v, 0)
    d.add_edge(v, hub, EdgeType.HADAMARD)
    d.add_edge(hub, tip, EdgeType.HADAMARD)


# -- local complementation -------------------------------------------------


def _local_complement_inplace(d: ZxDiagram, v: int) -> None:
    _check_interior_spider(d, v)
    if not is_proper_clifford_phase(d.phase(v)):
        raise RuleError(f"local complementation needs phase +-pi/2 at {v}")
    nbrs = d.neighbors(v)
    for w in nbrs:
        if d.is_boundary(w) or d.edge_type(v, w) is not EdgeType.HADAMARD:
            raise RuleError(f"spider {v} has a non-Hadamard or boundary wire")
    ph = d.phase(v)
    d.remove_vertex(v)
    for a, b in combinations(nbrs, 2):
        d.toggle_hadamard_edge(a, b)
    for w in nbrs:
        d.add_to_phase(w, -ph)


def local_complement(d: ZxDiagram, v: int) -> ZxDiagram:
    g = d.copy()
    _local_complement_inplace(g, v)
    return g


# -- pivot -----------------------------------------------------------------


def _pivot_core(d: ZxDiagram, u: int, v: int, v_boundary: int | None = None) -> None:
    """Pivot about the Hadamard edge (u, v); both phases must be Pauli.

    Without ``v_boundary`` both spiders are removed.  With it, ``v`` is removed
    and its boundary wire is re-pointed at ``u`` with toggled type (``u``
    becomes the new boundary spider).
    """
    nu = set(d.neighbors(u)) - {v}
    nv = set(d.neighbors(v)) - {u}
    if v_boundary is not None:
        nv.discard(v_boundary)
    nc = nu & nv
    nu -= nc
    nv -= nc
    pu, pv = d.phase(u), d.phase(v)
    for a in nu:
        for b in nv:
            d.toggle_hadamard_edge(a, b)
    for a in nu:
        for b in nc:
            d.toggle_hadamard_edge(a, b)
    for a in nv:
        for b in nc:
            d.toggle_hadamard_edge(a, b)
    for w in sorted(nu):
        d.add_to_phase(w, pv)
    for w in sorted(nv):
        d.add_to_phase(w, pu)
    for w in sorted(nc):
        d.add_to_phase(w, pu + pv + 4)
    if v_boundary is None:
        d.remove_vertex(u)
        d.remove_vertex(v)
    else:
        t = d.edge_type(v, v_boundary)
        d.remove_vertex(v)
        d.add_edge(u, v_boundary, toggled(t))


def _check_pivot_pair(d: ZxDiagram, u: int, v: int) -> None:
    if not d.has_edge(u, v) or d.edge_type(u, v) is not EdgeType.HADAMARD:
        raise RuleError(f"pivot pair ({u}, {v}) is not Hadamard-adjacent")
    if not is_pauli_phase(d.phase(u)) or not is_pauli_phase(d.phase(v)):
        raise RuleError(f"pivot pair ({u}, {v}) needs Pauli phases")


def _pivot_inplace(d: ZxDiagram, u: int, v: int) -> None:
    _check_interior_spider(d, u)
    _check_interior_spider(d, v)
    _check_pivot_pair(d, u, v)
    _pivot_core(d, u, v)


def pivot(d: ZxDiagram, u: int, v: int) -> ZxDiagram:
    g = d.copy()
    _pivot_inplace(g, u, v)
    return g


def _pivot_gadget_inplace(d: ZxDiagram, u: int, v: int) -> None:
    """Pivot with a non-Pauli partner: the non-Pauli phase of ``v`` is first
    pulled out into a phase gadget."""
    _check_interior_spider(d, u)
    _check_interior_spider(d, v)
    if not is_pauli_phase(d.phase(u)):
        raise RuleError(f"gadget pivot needs Pauli phase at {u}")
    if not d.has_edge(u, v) or d.edge_type(u, v) is not EdgeType.HADAMARD:
        raise RuleError(f"pivot pair ({u}, {v}) is not Hadamard-adjacent")
    if not is_pauli_phase(d.phase(v)):
        _gadgetize(d, v)
    _pivot_core(d, u, v)


def _boundary_pivot_inplace(d: ZxDiagram, u: int, v: int) -> None:
    _check_interior_spider(d, u)
    if not is_pauli_phase(d.phase(u)):
        raise RuleError(f"boundary pivot needs Pauli phase at {u}")
    if v not in d or d.is_boundary(v):
        raise RuleError(f"vertex {v} is not a spider")
    if not d.has_edge(u, v) or d.edge_type(u, v) is not EdgeType.HADAMARD:
        raise RuleError(f"pivot pair ({u}, {v}) is not Hadamard-adjacent")
    bs = d.boundary_neighbors(v)
    if len(bs) != 1:
        raise RuleError(f"spider {v} has no (unique) boundary neighbor")
    if not is_pauli_phase(d.phase(v)):
        _gadgetize(d, v)
    _pivot_core(d, u, v, v_boundary=bs[0])


def boundary_pivot(d: ZxDiagram, u: int, v: int) -> ZxDiagram:
    g = d.copy()
    _boundary_pivot_inplace(g, u, v)
    return g


# -- identity removal ------------------------------------------------------


def _identity_remove_inplace(d: ZxDiagram, v: int) -> None:
    _check_interior_spider(d, v)
    if d.phase(v) != 0 or d.degree(v) != 2 or d.has_edge(v, v):
        raise RuleError(f"spider {v} is not a phaseless degree-2 spider")
    a, b = d.neighbors(v)
    t = (
        EdgeType.SIMPLE
        if d.edge_type(v, a) == d.edge_type(v, b)
        else EdgeType.HADAMARD
    )
    d.remove_vertex(v)
    _connect_resolving(d, a, b, t)


def _connect_resolving(d: ZxDiagram, a: int, b: int, t: EdgeType) -> None:
    """Connect a and b with a wire of type ``t``, restoring graph-like form:
    Hadamard pairs cancel, Simple spider-spider wires fuse."""
    a_spider = not d.is_boundary(a)
    b_spider = not d.is_boundary(b)
    if t is EdgeType.HADAMARD and a_spider and b_spider:
        d.toggle_hadamard_edge(a, b)
        return
    if t is EdgeType.SIMPLE and a_spider and b_spider:
        if d.has_edge(a, b):
            # existing Hadamard wire becomes a self-loop on fusion: pi flip
            d.remove_edge(a, b)
            d.add_to_phase(a, 4)
        d.add_edge(a, b, EdgeType.SIMPLE)
        fuse_into(d, a, b)
        # fusion may have merged two boundary legs onto one spider
        bs = d.boundary_neighbors(a)
        for extra in bs[1:]:
            tb = d.edge_type(a, extra)
            d.remove_edge(a, extra)
            mid = d.add_vertex(VertexKind.Z, 0)
            d.add_edge(extra, mid, toggled(tb))
            d.add_edge(mid, a, EdgeType.HADAMARD)
        return
    # at least one boundary endpoint: just rewire (Hadamard boundary wires are
    # tolerated outside strict form)
    d.add_edge(a, b, t)


def identity_remove(d: ZxDiagram, v: int) -> ZxDiagram:
    g = d.copy()
    _identity_remove_inplace(g, v)
    return g


# -- gadget fusion ---------------------------------------------------------


def _gadget_fusion_inplace(d: ZxDiagram, h1: int, h2: int) -> None:
    t1 = _gadget_hub_tip(d, h1)
    t2 = _gadget_hub_tip(d, h2)
    if t1 is None or t2 is None or h1 == h2:
        raise RuleError(f"({h1}, {h2}) are not distinct phase-gadget hubs")
    s1 = set(d.neighbors(h1)) - {t1}
    s2 = set(d.neighbors(h2)) - {t2}
    if s1 != s2:
        raise RuleError(f"gadget hubs {h1}, {h2} have different neighbor sets")
    d.add_to_phase(t1, d.phase(t2))
    d.remove_vertex(t2)
    d.remove_vertex(h2)


def gadget_fusion(d: ZxDiagram, h1: int, h2: int) -> ZxDiagram:
    g = d.copy()
    _gadget_fusion_inplace(g, h1, h2)
    return g


# -- action plumbing -------------------------------------------------------

_INPLACE = {
    ActionTag.LOCAL_COMP: _local_complement_inplace,
    ActionTag.PIVOT: _pivot_inplace,
    ActionTag.BOUNDARY_PIVOT: _boundary_pivot_inplace,
    ActionTag.IDENTITY_REMOVE: _identity_remove_inplace,
    ActionTag.GADGET_FUSION: _gadget_fusion_inplace,
}


def apply_action_inplace(d: ZxDiagram, action: RewriteAction) -> None:
    if action.tag is ActionTag.STOP:
        return
    _INPLACE[action.tag](d, *action.vertices)


def apply_action(d: ZxDiagram, action: RewriteAction) -> ZxDiagram:
    g = d.copy()
    apply_action_inplace(g, action)
    return g


def action_is_valid(d: ZxDiagram, action: RewriteAction) -> bool:
    if action.tag is ActionTag.STOP:
        return True
    try:
        _INPLACE[action.tag](d.copy(), *action.vertices)
    except RuleError:
        return False
    return True


def enumerate_actions(d: ZxDiagram, include_gadgets: bool = False) -> list[RewriteAction]:
    """All feasible rewrites on ``d`` in a deterministic order, ending in STOP."""
    actions: list[RewriteAction] = []
    interior = [v for v in d.spiders() if d.is_interior(v)]
    interior_set = set(interior)
    for v in interior:
        if is_proper_clifford_phase(d.phase(v)):
            actions.append(RewriteAction(ActionTag.LOCAL_COMP, (v,)))
    for u in interior:
        if not is_pauli_phase(d.phase(u)):
            continue
        for v in d.neighbors(u):
            if u < v and v in interior_set and is_pauli_phase(d.phase(v)):
                if d.edge_type(u, v) is EdgeType.HADAMARD:
                    actions.append(RewriteAction(ActionTag.PIVOT, (u, v)))
    for u in interior:
        if not is_pauli_phase(d.phase(u)):
            continue
        for v in d.neighbors(u):
            if d.edge_type(u, v) is not EdgeType.HADAMARD:
                continue
            if not d.is_boundary(v) and len(d.boundary_neighbors(v)) == 1:
                actions.append(RewriteAction(ActionTag.BOUNDARY_PIVOT, (u, v)))
    for v in interior:
        if d.phase(v) == 0 and d.degree(v) == 2 and not d.has_edge(v, v):
            actions.append(RewriteAction(ActionTag.IDENTITY_REMOVE, (v,)))
    if include_gadgets:
        by_targets: dict[frozenset[int], list[int]] = {}
        for hub in d.spiders():
            tip = _gadget_hub_tip(d, hub)
            if tip is not None:
                key = frozenset(set(d.neighbors(hub)) - {tip})
                by_targets.setdefault(key, []).append(hub)
        for hubs in by_targets.values():
            for h1, h2 in combinations(sorted(hubs), 2):
                actions.append(RewriteAction(ActionTag.GADGET_FUSION, (h1, h2)))
    actions.sort(key=lambda a: (a.tag, a.vertices))
    actions.append(STOP)
    return actions
