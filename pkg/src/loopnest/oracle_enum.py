"""Brute-force census of small loop configurations on triangulations.

Maps are glued from polygons: one or two rooted boundary faces and T
triangles.  Half-edge h runs from vertex(h); phi(h) is the next half-edge
around the face on its left, iota the edge involution and sigma = phi o iota
the vertex rotation.

Rooted maps are produced by an exploration gluing: the lowest unmatched
half-edge is matched either with another open half-edge already present or
with side 0 of a fresh triangle (or a chosen side of the second boundary).
Each rooted map comes out exactly once.  Branches whose partial surface has
positive genus are cut.
"""

import os
from dataclasses import dataclass
from fractions import Fraction

from .series_core import monomial


class OracleBudgetError(ValueError):
    pass


MAX_EDGES = 8


def edge_budget():
    """Largest admissible edge count; LOOPNEST_BUDGET overrides the default."""
    raw = os.environ.get("LOOPNEST_BUDGET")
    return int(raw) if raw else MAX_EDGES


@dataclass(frozen=True)
class Map:
    phi: tuple
    iota: tuple
    face_of: tuple      # face index per half-edge
    faces: tuple        # tuple of (kind, half-edges in phi order); kind 'b1', 'b2', 't'

    @property
    def n_half(self):
        return len(self.phi)

    def sigma(self):
        return tuple(self.phi[self.iota[h]] for h in range(len(self.phi)))

    def vertices(self):
        sig = self.sigma()
        vid = [-1] * len(sig)
        nv = 0
        for h in range(len(sig)):
            if vid[h] < 0:
                x = h
                while vid[x] < 0:
                    vid[x] = nv
                    x = sig[x]
                nv += 1
        return vid, nv

    def n_vertices(self):
        return self.vertices()[1]

    def n_triangles(self):
        return sum(1 for kind, _ in self.faces if kind == "t")


VERTEX_MAP = Map((), (), (), ())


def _genus_ok(phi, iota, nh):
    """Partial surface of the glued polygons has genus zero."""
    # corners: corner h is the start of side h
    parent = list(range(nh))

    def find(x):
        while parent[x] != x:
            parent[x] = parent[parent[x]]
            x = parent[x]
        return x

    glued = 0
    for h in range(nh):
        j = iota[h]
        if j is not None and h < j:
            glued += 1
            # start(h) ~ end(j) = start(phi j); end(h) ~ start(j)
            for a, b in ((h, phi[j]), (phi[h], j)):
                ra, rb = find(a), find(b)
                if ra != rb:
                    parent[ra] = rb
    nv = sum(1 for x in range(nh) if find(x) == x)
    free = [h for h in range(nh) if iota[h] is None]
    ne = glued + len(free)
    nf = len(set(_face_ids(phi, nh)))
    seen = set()
    nb = 0
    for h in free:
        if h in seen:
            continue
        nb += 1
        x = h
        while x not in seen:
            seen.add(x)
            y = phi[x]
            while iota[y] is not None:
                y = phi[iota[y]]
            x = y
    chi = nv - ne + nf
    return 2 - nb - chi == 0


def _face_ids(phi, nh):
    fid = [-1] * nh
    c = 0
    for h in range(nh):
        if fid[h] < 0:
            x = h
            while fid[x] < 0:
                fid[x] = c
                x = phi[x]
            c += 1
    return fid


def enumerate_rooted_maps(l1, T, l2=None, max_edges=None):
    """All rooted planar maps with a root boundary of perimeter l1, T triangles
    and optionally a second rooted boundary of perimeter l2."""
    total = l1 + 3 * T + (l2 or 0)
    if total % 2:
        return []
    if max_edges is None:
        max_edges = edge_budget()
    if total // 2 > max_edges:
        raise OracleBudgetError("more than %d edges" % max_edges)
    if l2 is None and l1 == 0:
        return [VERTEX_MAP] if T == 0 else []
    if l1 < 1 or (l2 is not None and l2 < 1):
        return []
    out = []
    phi = list(range(1, l1)) + [0]
    face_of = [0] * l1
    faces = [("b1", tuple(range(l1)))]
    iota = [None] * l1

    def add_face(kind, size):
        base = len(phi)
        for i in range(size):
            phi.append(base + (i + 1) % size)
            face_of.append(len(faces))
            iota.append(None)
        faces.append((kind, tuple(range(base, base + size))))
        return base

    def drop_face(size):
        for _ in range(size):
            phi.pop()
            face_of.pop()
            iota.pop()
        faces.pop()

    def rec(t_left, b2_left):
        try:
            h = iota.index(None)
        except ValueError:
            if t_left == 0 and not b2_left:
                out.append(Map(tuple(phi), tuple(iota), tuple(face_of), tuple(faces)))
            return
        nh = len(phi)
        for j in range(h + 1, nh):
            if iota[j] is None:
                iota[h], iota[j] = j, h
                if _genus_ok(phi, iota, nh):
                    rec(t_left, b2_left)
                iota[h] = iota[j] = None
        if t_left:
            base = add_face("t", 3)
            iota[h], iota[base] = base, h
            if _genus_ok(phi, iota, len(phi)):
                rec(t_left - 1, b2_left)
            iota[h] = None
            drop_face(3)
        if b2_left:
            base = add_face("b2", l2)
            for r in range(l2):
                j = base + r
                iota[h], iota[j] = j, h
                if _genus_ok(phi, iota, len(phi)):
                    rec(t_left, False)
                iota[h] = iota[j] = None
            drop_face(l2)

    rec(T, l2 is not None)
    return out


def canonical_code(m):
    """BFS relabelling from half-edge 0 (and the b2 root); returns a code that
    identifies the rooted map up to isomorphism."""
    if m.n_half == 0:
        return ()
    order = {0: 0}
    queue = [0]
    # the second boundary root is a distinguished half-edge
    roots = [0]
    for kind, hs in m.faces:
        if kind == "b2":
            roots.append(hs[0])
    i = 0
    pending = roots[1:]
    while i < len(queue) or pending:
        if i == len(queue):
            r = pending.pop(0)
            if r not in order:
                order[r] = len(order)
                queue.append(r)
            continue
        h = queue[i]
        i += 1
        for nxt in (m.phi[h], m.iota[h]):
            if nxt not in order:
                order[nxt] = len(order)
                queue.append(nxt)
    inv = sorted(order, key=order.get)
    phi = tuple(order[m.phi[h]] for h in inv)
    iota = tuple(order[m.iota[h]] for h in inv)
    kinds = tuple(m.faces[m.face_of[h]][0] for h in inv)
    b2root = order[roots[1]] if len(roots) > 1 else -1
    return (phi, iota, kinds, b2root)


def relabel_canonical(m):
    """The map with half-edges renamed in canonical BFS order."""
    if m.n_half == 0:
        return m
    phi, iota, kinds, b2root = canonical_code(m)
    nh = len(phi)
    fid = _face_ids(phi, nh)
    faces = {}
    for h in range(nh):
        faces.setdefault(fid[h], None)
    face_list = []
    remap = {}
    for h in range(nh):
        f = fid[h]
        if f in remap:
            continue
        start = h
        if kinds[h] == "b1":
            start = 0
        elif kinds[h] == "b2":
            start = b2root
        cyc = [start]
        x = phi[start]
        while x != start:
            cyc.append(x)
            x = phi[x]
        remap[f] = len(face_list)
        face_list.append((kinds[h], tuple(cyc)))
    face_of = tuple(remap[fid[h]] for h in range(nh))
    return Map(phi, iota, face_of, tuple(face_list))


def labeled_gluing_count(l1, T, l2=None):
    """Planar gluings of labelled triangles (all matchings), for double counting."""
    sizes = [l1] + [3] * T + ([l2] if l2 else [])
    phi = []
    base = 0
    for s in sizes:
        phi += [base + (i + 1) % s for i in range(s)]
        base += s
    nh = len(phi)
    if nh % 2 or nh > 2 * edge_budget():
        raise OracleBudgetError("too many half-edges for brute force")
    nfaces = len(sizes)
    count = 0
    iota = [None] * nh

    def rec():
        nonlocal count
        try:
            h = iota.index(None)
        except ValueError:
            if _connected(phi, iota, nh):
                sig = [phi[iota[x]] for x in range(nh)]
                nv = _cycles(sig)
                if nv - nh // 2 + nfaces == 2:
                    count += 1
            return
        for j in range(h + 1, nh):
            if iota[j] is None:
                iota[h], iota[j] = j, h
                rec()
                iota[h] = iota[j] = None

    rec()
    return count


def _cycles(perm):
    seen = [False] * len(perm)
    c = 0
    for h in range(len(perm)):
        if not seen[h]:
            c += 1
            x = h
            while not seen[x]:
                seen[x] = True
                x = perm[x]
    return c


def _connected(phi, iota, nh):
    seen = {0}
    stack = [0]
    while stack:
        h = stack.pop()
        for x in (phi[h], iota[h]):
            if x not in seen:
                seen.add(x)
                stack.append(x)
    return len(seen) == nh


# ---------------------------------------------------------------- loops

@dataclass(frozen=True)
class Loop:
    crossed: tuple      # half-edges crossed (both sides of each crossed edge)
    triangles: tuple    # visited triangles in order
    turns: tuple        # +1 / -1 per visit
    bends: int          # cyclically adjacent equal turns


def loop_overlays(m):
    """Every configuration of disjoint simple loops on the triangles of m."""
    tri = [hs for kind, hs in m.faces if kind == "t"]
    choices = []
    for hs in tri:
        opts = [()]
        for a in range(3):
            for b in range(a + 1, 3):
                opts.append((hs[a], hs[b]))
        choices.append(opts)
    # triangle index per half-edge, -1 on the boundaries
    tri_of = [-1] * m.n_half
    for i, hs in enumerate(tri):
        for h in hs:
            tri_of[h] = i
    out = []
    crossed = {}

    def consistent(i):
        # a side is crossed iff its partner is, once both triangles are decided
        for h in tri[i]:
            j = tri_of[m.iota[h]]
            if j <= i and (h in crossed) != (m.iota[h] in crossed):
                return False
        return True

    def rec(i):
        if i == len(tri):
            if all(m.iota[h] in crossed for h in crossed):
                out.append(_loops_of(m, dict(crossed)))
            return
        for pair in choices[i]:
            for h in pair:
                crossed[h] = pair
            if consistent(i):
                rec(i + 1)
            for h in pair:
                del crossed[h]

    rec(0)
    return out


def _loops_of(m, crossed):
    """Split crossed sides into loops; crossed maps side -> pair of its triangle."""
    seen = set()
    loops = []
    for start in sorted(crossed):
        if start in seen:
            continue
        # walk: enter a triangle through side a, leave through the other side b
        a = start
        sides, tris, turns = [], [], []
        while True:
            pair = crossed[a]
            b = pair[1] if pair[0] == a else pair[0]
            seen.add(a)
            seen.add(b)
            sides += [a, b]
            tris.append(m.face_of[a])
            turns.append(1 if m.phi[a] == b else -1)
            a = m.iota[b]
            if a == start:
                break
        k = len(turns)
        bends = sum(1 for i in range(k) if turns[i] == turns[(i + 1) % k])
        loops.append(Loop(tuple(sides), tuple(tris), tuple(turns), bends))
    return loops


def _components_without(m, vid, nv, removed):
    parent = list(range(nv))

    def find(x):
        while parent[x] != x:
            parent[x] = parent[parent[x]]
            x = parent[x]
        return x

    for h in range(m.n_half):
        j = m.iota[h]
        if h < j and h not in removed:
            a, b = find(vid[h]), find(vid[j])
            if a != b:
                parent[a] = b
    return find


def _separates(m, vid, nv, loop, target_vertex):
    find = _components_without(m, vid, nv, set(loop.crossed))
    return find(vid[0]) != find(target_vertex)


def configuration_weight(m, loops, mark=None):
    """Monomial key and count of one configuration.

    mark is a vertex index (pointed disks) or 'b2' (cylinders) or None.
    """
    vid, nv = m.vertices()
    t = m.n_triangles()
    t1 = sum(len(lp.triangles) for lp in loops)
    bends = sum(lp.bends for lp in loops)
    p = 0
    if mark is not None:
        if mark == "b2":
            target = next(vid[hs[0]] for kind, hs in m.faces if kind == "b2")
        else:
            target = mark
        p = sum(1 for lp in loops if _separates(m, vid, nv, lp, target))
    return monomial(u=nv, s=p, n=len(loops), g=t - t1, h=t1, alpha=bends)


def _add(poly, key, c=1):
    poly[key] = poly.get(key, 0) + c


def sector_census(kind, l1, T, l2=None):
    """Census of one sector: T triangles, boundary l1 (and l2 for cylinders)."""
    if kind not in ("disk", "pointed", "cylinder"):
        raise ValueError("unknown kind %r" % kind)
    if kind == "cylinder" and l2 is None:
        raise ValueError("cylinders need l2")
    if kind != "cylinder":
        l2 = None
    out = {}
    if l2 is None and l1 == 0:
        if T == 0:
            _add(out, monomial(u=1))
        return out
    for m in enumerate_rooted_maps(l1, T, l2, max_edges=edge_budget()):
        overlays = loop_overlays(m)
        if kind == "pointed":
            _, nv = m.vertices()
            for loops in overlays:
                for v in range(nv):
                    _add(out, configuration_weight(m, loops, mark=v))
        else:
            mark = "b2" if kind == "cylinder" else None
            for loops in overlays:
                _add(out, configuration_weight(m, loops, mark=mark))
    return out


def weighted_census(kind, l1, max_edges=None, l2=None):
    """Generating polynomial of all configurations in a sector.

    kind: 'disk', 'pointed' or 'cylinder'.  Returns {key: integer count}
    summed over all triangle numbers with at most max_edges edges.
    """
    if max_edges is None:
        max_edges = edge_budget()
    if max_edges > edge_budget():
        raise OracleBudgetError("max_edges above %d" % edge_budget())
    if kind == "cylinder" and l2 is None:
        raise ValueError("cylinders need l2")
    extra = l2 if kind == "cylinder" else 0
    if kind != "cylinder" and l1 == 0:
        return sector_census(kind, 0, 0)
    out = {}
    T = 0
    while l1 + extra + 3 * T <= 2 * max_edges:
        if (l1 + extra + 3 * T) % 2 == 0:
            for k, c in sector_census(kind, l1, T, l2).items():
                _add(out, k, c)
        T += 1
    return out


def depth_law(census, V):
    """Normalised law of the s-exponent at fixed u^V after substituting numbers
    is left to the caller; here the census must already be numeric in n,g,h,alpha."""
    from .series_core import degree
    by_p = {}
    for k, c in census.items():
        if degree(k, "u") == V:
            p = degree(k, "s")
            by_p[p] = by_p.get(p, 0) + c
    total = sum(by_p.values())
    if not total:
        return []
    return [Fraction(by_p.get(p, 0)) / total for p in range(max(by_p) + 1)]
