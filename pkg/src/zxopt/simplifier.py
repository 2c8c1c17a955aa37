"""Terminating apply-all baseline.

Repeats: identity removal + fusion, then every applicable local complementation,
then every applicable pivot (plus gadget pivots and gadget fusion when enabled),
until nothing changes; boundary pivots are then applied and the whole loop is
re-entered, since a boundary pivot can re-enable interior rules.  On a pure
Clifford diagram this removes every interior spider.

Candidates are processed in ascending vertex-id order and re-validated before
each application, so the baseline is reproducible; ``shuffle_rng`` restores the
run-to-run variance of an unordered strategy.
"""

from __future__ import annotations

import random

from .rewrite_rules import (
    RuleError,
    _boundary_pivot_inplace,
    _gadget_fusion_inplace,
    _gadget_hub_tip,
    _identity_remove_inplace,
    _local_complement_inplace,
    _pivot_gadget_inplace,
    _pivot_inplace,
)
from .zx_graph import (
    EdgeType,
    ZxDiagram,
    is_pauli_phase,
    is_proper_clifford_phase,
    to_graph_like,
)


def _maybe_shuffle(items: list, rng: random.Random | None) -> list:
    if rng is not None:
        rng.shuffle(items)
    return items


def _identity_pass(g: ZxDiagram, rng) -> bool:
    changed = False
    for v in _maybe_shuffle(g.spiders(), rng):
        if v not in g:
            continue
        if g.degree(v) == 0:
            g.remove_vertex(v)  # isolated scalar
            changed = True
            continue
        try:
            _identity_remove_inplace(g, v)
            changed = True
        except RuleError:
            pass
    return changed


def _lcomp_pass(g: ZxDiagram, rng) -> bool:
    changed = False
    for v in _maybe_shuffle(g.spiders(), rng):
        if v not in g or not g.is_interior(v):
            continue
        if not is_proper_clifford_phase(g.phase(v)):
            continue
        try:
            _local_complement_inplace(g, v)
            changed = True
        except RuleError:
            pass
    return changed


def _is_gadget_part(g: ZxDiagram, v: int) -> bool:
    """Hub or tip of a phase gadget; pivots skip these to preserve gadget
    structure (the termination measure counts gadgets separately)."""
    if _gadget_hub_tip(g, v) is not None:
        return True
    if g.degree(v) == 1:
        (w,) = g.neighbors(v)
        if _gadget_hub_tip(g, w) == v:
            return True
    return False


def _pivot_pass(g: ZxDiagram, rng, gadgets: bool) -> bool:
    changed = False
    pairs = [
        (u, v)
        for u, v, t in g.edges()
        if t is EdgeType.HADAMARD and not g.is_boundary(u) and not g.is_boundary(v)
    ]
    for u, v in _maybe_shuffle(pairs, rng):
        if u not in g or v not in g or not g.has_edge(u, v):
            continue
        if not g.is_interior(u) or not g.is_interior(v):
            continue
        if gadgets and (_is_gadget_part(g, u) or _is_gadget_part(g, v)):
            continue
        pu, pv = is_pauli_phase(g.phase(u)), is_pauli_phase(g.phase(v))
        try:
            if pu and pv:
                _pivot_inplace(g, u, v)
                changed = True
            elif gadgets and pu:
                _pivot_gadget_inplace(g, u, v)
                changed = True
            elif gadgets and pv:
                _pivot_gadget_inplace(g, v, u)
                changed = True
        except RuleError:
            pass
    return changed


def _gadget_normalize_pass(g: ZxDiagram) -> bool:
    """Absorb a pi phase sitting on a gadget hub by negating the tip phase
    (exact up to global phase).  Pivots add pi to common neighbors, so hubs
    routinely pick one up; without this fix the hub stops looking like a hub
    and gadget pivots oscillate."""
    changed = False
    for v in g.spiders():
        if g.phase(v) != 4 or not g.is_interior(v) or g.degree(v) < 2:
            continue
        if any(g.edge_type(v, w) is not EdgeType.HADAMARD for w in g.neighbors(v)):
            continue
        tips = [
            w
            for w in g.neighbors(v)
            if not g.is_boundary(w) and g.degree(w) == 1
        ]
        if len(tips) != 1:
            continue
        g.set_phase(v, 0)
        g.set_phase(tips[0], -g.phase(tips[0]))
        changed = True
    return changed


def _gadget_fusion_pass(g: ZxDiagram, rng) -> bool:
    changed = False
    by_targets: dict[frozenset[int], list[int]] = {}
    for hub in g.spiders():
        tip = _gadget_hub_tip(g, hub)
        if tip is not None:
            key = frozenset(set(g.neighbors(hub)) - {tip})
            by_targets.setdefault(key, []).append(hub)
    for hubs in by_targets.values():
        keep = hubs[0]
        for other in hubs[1:]:
            try:
                _gadget_fusion_inplace(g, keep, other)
                changed = True
            except RuleError:
                pass
    return changed


def _boundary_pivot_pass(g: ZxDiagram, rng) -> bool:
    changed = False
    for u in _maybe_shuffle(g.spiders(), rng):
        if u not in g or not g.is_interior(u) or not is_pauli_phase(g.phase(u)):
            continue
        if _is_gadget_part(g, u):
            continue
        for v in g.neighbors(u):
            if g.is_boundary(v) or g.edge_type(u, v) is not EdgeType.HADAMARD:
                continue
            if len(g.boundary_neighbors(v)) != 1:
                continue
            try:
                _boundary_pivot_inplace(g, u, v)
                changed = True
                break
            except RuleError:
                pass
    return changed


def reduce_all(d: ZxDiagram, gadgets: bool = False,
               shuffle_seed: int | None = None) -> ZxDiagram:
    """Run the full simplification loop to a fixed point and return the result."""
    g = to_graph_like(d)
    rng = random.Random(shuffle_seed) if shuffle_seed is not None else None
    for _ in range(10 * d.num_vertices() + 1000):  # safety bound, never hit
        changed = True
        while changed:
            changed = False
            changed |= _identity_pass(g, rng)
            changed |= _lcomp_pass(g, rng)
            if gadgets:
                changed |= _gadget_normalize_pass(g)
            changed |= _pivot_pass(g, rng, gadgets)
            if gadgets:
                changed |= _gadget_fusion_pass(g, rng)
        if not _boundary_pivot_pass(g, rng):
            return g
    raise RuntimeError("reduce_all failed to reach a fixed point")


def num_interior_spiders(d: ZxDiagram) -> int:
    return len(d.interior_spiders())
