"""Seeded generators for random diagrams, arrows, lifts, and operators.

Everything takes an explicit numpy Generator so runs are reproducible; the
constructions bake in the structural constraints (grading opposition on
edges, the real-structure relation on edge and u data) by projection, so
the outputs are valid by construction at float precision.
"""

from __future__ import annotations

import numpy as np

from .algebra import AlgebraElement, AlgebraProfile, frob
from .bratteli import BratteliArrow
from .differential import UniversalOneForm
from .krajewski import (
    KOSignature,
    KrajewskiDiagram,
    Vertex,
    epsilon_factor,
    extract_edges,
    realize,
    validate,
)
from .lifting import DiagramLift, PhiHMap


def rng_from_seed(seed) -> np.random.Generator:
    return np.random.default_rng(seed)


def random_complex(rng, shape, scale=1.0):
    return scale * (rng.standard_normal(shape) + 1j * rng.standard_normal(shape)) / np.sqrt(2)


def random_hermitian(rng, n, scale=1.0):
    m = random_complex(rng, (n, n), scale)
    return (m + m.conj().T) / 2


def random_unitary(rng, n):
    q, r = np.linalg.qr(random_complex(rng, (n, n)))
    return q * (np.diag(r) / np.abs(np.diag(r)))


def random_vector(rng, n, scale=1.0):
    return random_complex(rng, (n,), scale)


def random_element(rng, profile: AlgebraProfile, scale=1.0) -> AlgebraElement:
    return AlgebraElement(profile, [random_complex(rng, (n, n), scale) for n in profile.dims])


def random_hermitian_element(rng, profile: AlgebraProfile, scale=1.0) -> AlgebraElement:
    return AlgebraElement(profile, [random_hermitian(rng, n, scale) for n in profile.dims])


def random_unitary_element(rng, profile: AlgebraProfile) -> AlgebraElement:
    return AlgebraElement(profile, [random_unitary(rng, n) for n in profile.dims])


def random_one_form(rng, profile: AlgebraProfile, n_terms=2, scale=1.0) -> UniversalOneForm:
    terms = tuple(
        (random_element(rng, profile, scale), random_element(rng, profile, scale))
        for _ in range(n_terms)
    )
    return UniversalOneForm(profile, terms)


def random_hermitian_form(rng, profile, n_terms=2, scale=1.0) -> UniversalOneForm:
    """A one-form with Hermitian representation: omega + omega*."""
    w = random_one_form(rng, profile, n_terms, scale)
    return w + w.adjoint()


def random_profile(rng, r_max=3, n_max=2) -> AlgebraProfile:
    r = int(rng.integers(1, r_max + 1))
    return AlgebraProfile(tuple(int(rng.integers(1, n_max + 1)) for _ in range(r)))


def random_even_vector(rng, t, scale=1.0):
    """A state vector, projected to ker(gamma - 1) when the grading is present."""
    if t.gamma is not None and np.trace(np.eye(t.dim) + t.gamma).real < 0.5:
        raise RuntimeError("even subspace ker(gamma - 1) is trivial")
    for _ in range(100):
        v = random_vector(rng, t.dim, scale)
        if t.gamma is not None:
            v = (v + t.gamma @ v) / 2
        nrm = np.linalg.norm(v)
        if nrm > 1e-6:
            return v * (scale / nrm)
    raise RuntimeError("could not draw a nonzero even vector")


# ---------------------------------------------------------------------------
# diagrams


def random_diagram(rng, d, profile=None, max_fiber=2, edge_prob=0.6,
                   requirements=(), ensure_vertex=True, ensure_edge=False) -> KrajewskiDiagram:
    """A valid random diagram in KO-dimension d.

    requirements is an iterable of (i, j, s) triples guaranteeing that the
    fiber over (n_i, n_j) contains a vertex with grading s (s None in the
    odd case).  Edge decorations are drawn blockwise in the forced factor
    form and then projected onto Hermiticity and the real-structure
    relation, so the result always validates.
    """
    ko = KOSignature.from_dim(d)
    if profile is None:
        profile = random_profile(rng)
    r = profile.r

    # requirements carry multiplicity: one entry per needed vertex
    req = {}
    for (i, j, s) in requirements:
        if i <= j:
            req.setdefault((i, j), []).append(s)
        else:
            sflip = ko.eps_pp * s if (ko.even and s is not None) else s
            req.setdefault((j, i), []).append(sflip)

    sizes = {}
    for i in range(1, r + 1):
        for j in range(i, r + 1):
            base = int(rng.integers(0, max_fiber + 1))
            need = req.get((i, j), [])
            plus = sum(1 for s in need if s == 1)
            minus = sum(1 for s in need if s == -1)
            if i == j:
                if d in (2, 6):
                    cnt = max(base, 2 * max(plus, minus, 1 if need else 0))
                elif d == 4:
                    cnt = max(base, 2 * ((plus + 1) // 2 + (minus + 1) // 2))
                elif d in (3, 5):
                    cnt = max(base, 2 * ((len(need) + 1) // 2))
                else:
                    cnt = max(base, len(need))
                if d in (2, 3, 4, 5, 6):
                    cnt += cnt % 2
            else:
                cnt = max(base, len(need))
            sizes[(i, j)] = cnt

    if ensure_vertex and all(c == 0 for c in sizes.values()):
        sizes[(1, 1)] = 2 if d in (2, 3, 4, 5, 6) else 1

    vertices, jim = {}, {}
    for (i, j) in sorted(sizes):
        cnt = sizes[(i, j)]
        if cnt == 0:
            continue
        need = sorted((s for s in req.get((i, j), []) if s is not None), reverse=True)
        if i < j:
            if ko.even:
                s_list = list(need)
                while len(s_list) < cnt:
                    s_list.append(int(rng.choice([1, -1])))
            else:
                s_list = [None] * cnt
            for p in range(1, cnt + 1):
                s = s_list[p - 1]
                sj = ko.eps_pp * s if s is not None else None
                vertices[(i, p, j)] = Vertex(i, p, j, s=s)
                vertices[(j, p, i)] = Vertex(j, p, i, s=sj)
                jim[(i, p, j)] = (j, p, i)
                jim[(j, p, i)] = (i, p, j)
        elif d in (0, 1, 7):
            if d == 0:
                s_list = list(need)
                while len(s_list) < cnt:
                    s_list.append(int(rng.choice([1, -1])))
            else:
                s_list = [None] * cnt
            for p in range(1, cnt + 1):
                vertices[(i, p, i)] = Vertex(i, p, i, s=s_list[p - 1])
                jim[(i, p, i)] = (i, p, i)
        else:
            # paired diagonal fibers; chi = 0 on the first of each pair
            if d in (2, 6):
                pair_s = [(-1, 1)] * (cnt // 2)
            elif d == 4:
                plus = sum(1 for s in need if s == 1)
                minus = sum(1 for s in need if s == -1)
                pair_s = [(1, 1)] * ((plus + 1) // 2) + [(-1, -1)] * ((minus + 1) // 2)
                while len(pair_s) < cnt // 2:
                    sv = int(rng.choice([1, -1]))
                    pair_s.append((sv, sv))
            else:
                pair_s = [(None, None)] * (cnt // 2)
            for a in range(cnt // 2):
                s1, s2 = pair_s[a]
                v1, v2 = (i, 2 * a + 1, i), (i, 2 * a + 2, i)
                vertices[v1] = Vertex(*v1, s=s1, chi=0)
                vertices[v2] = Vertex(*v2, s=s2, chi=1)
                jim[v1], jim[v2] = v2, v1

    skeleton = KrajewskiDiagram(profile, ko, vertices, jim, [])
    t0 = realize(skeleton)
    layout = t0.layout

    def admissible_pairs():
        out = []
        for v1 in skeleton.sorted_vids():
            for v2 in skeleton.sorted_vids():
                i1, _p1, j1 = v1
                i2, _p2, j2 = v2
                if i1 != i2 and j1 != j2:
                    continue
                if ko.even and vertices[v2].s != -vertices[v1].s:
                    continue
                out.append((v1, v2))
        return out

    pairs = admissible_pairs()
    edges = []
    attempts = 0
    while True:
        attempts += 1
        D = np.zeros((layout.total_dim, layout.total_dim), dtype=complex)
        for (v1, v2) in pairs:
            if rng.random() > edge_prob:
                continue
            i1, _p1, j1 = v1
            i2, _p2, j2 = v2
            n_i1, n_j1 = profile.dim(i1), profile.dim(j1)
            n_i2, n_j2 = profile.dim(i2), profile.dim(j2)
            if i1 == i2 and j1 != j2:
                blk = np.kron(np.eye(n_i1), random_complex(rng, (n_j2, n_j1)))
            elif j1 == j2 and i1 != i2:
                blk = np.kron(random_complex(rng, (n_i2, n_i1)), np.eye(n_j1))
            else:
                # both coordinates match: first order leaves D_L (x) 1 + 1 (x) D_R
                blk = np.kron(random_complex(rng, (n_i1, n_i1)), np.eye(n_j1)) + np.kron(
                    np.eye(n_i1), random_complex(rng, (n_j1, n_j1))
                )
            D[layout.block(v2).sl, layout.block(v1).sl] = blk
        D = (D + D.conj().T) / 2
        D = (D + ko.eps_p * (t0.K @ np.conj(D) @ t0.K.conj().T)) / 2
        edges = extract_edges(profile, layout, D, 1e-12, 1e-8)
        if edges or not (ensure_edge and pairs) or attempts > 20:
            break

    diag = KrajewskiDiagram(profile, ko, vertices, jim, edges)
    rep = validate(diag, 1e-9)
    if not rep.ok:
        raise RuntimeError("generator produced an invalid diagram:\n" + str(rep))
    return diag


def random_arrow(rng, source: AlgebraProfile, s_max=2, alpha_max=2, n0_max=2) -> BratteliArrow:
    r = source.r
    s = int(rng.integers(1, s_max + 1))
    while True:
        alpha = rng.integers(0, alpha_max + 1, size=(s, r))
        if all(alpha[:, i].sum() > 0 for i in range(r)):
            break
    n0 = rng.integers(0, n0_max + 1, size=s)
    dims = []
    for k in range(s):
        m_k = int(n0[k] + alpha[k] @ np.array(source.dims))
        if m_k == 0:
            n0[k] = 1
            m_k = 1
        dims.append(m_k)
    return BratteliArrow(source, AlgebraProfile(tuple(dims)), tuple(map(tuple, alpha)), tuple(int(x) for x in n0))


def random_compatible_target(rng, source: KrajewskiDiagram, arrow: BratteliArrow,
                             max_fiber=2, edge_prob=0.5, ensure_edge=False) -> KrajewskiDiagram:
    """A random target diagram able to receive every source vertex.

    One target vertex is demanded per source vertex (with matching grading),
    so a lift with uniform group support can make phi_H one-to-one.
    """
    req = []
    for v in source.sorted_vids():
        i, _p, j = v
        k = next(kk for kk in range(1, arrow.target.r + 1) if arrow.mult(kk, i) > 0)
        l = next(ll for ll in range(1, arrow.target.r + 1) if arrow.mult(ll, j) > 0)
        req.append((k, l, source.vertex(v).s))
        if (k, l) == (l, k) and source.d in (0, 1, 7) and i == j:
            # jim-fixed target vertices carry a hermiticity constraint on u;
            # demand one more for the halved free dimension
            req.append((k, l, source.vertex(v).s))
    return random_diagram(
        rng, source.d, profile=arrow.target, max_fiber=max_fiber,
        edge_prob=edge_prob, requirements=req, ensure_edge=ensure_edge,
    )


# ---------------------------------------------------------------------------
# lifts and compatible operator pairs


def _source_groups(source: KrajewskiDiagram):
    """Source vertices grouped by fiber and grading; the Gram matrix of a
    lift is block diagonal over these groups."""
    groups = {}
    for v in source.sorted_vids():
        s = source.vertex(v).s
        groups.setdefault((v[0], v[2], s), []).append(v)
    return groups


def random_lift(rng, source: KrajewskiDiagram, arrow: BratteliArrow, target: KrajewskiDiagram,
                include_prob=0.7, ensure_cover=True, scale=1.0) -> DiagramLift:
    """A lift respecting the grading and the real-structure relation.

    u is drawn on one representative per (jim_A, jim_B) orbit and the
    partner entry is set to (eps_A(v)/eps_B(w)) u(v,w)*; jim-fixed pairs
    are projected onto the constraint.  Support is uniform over each
    (fiber, grading) group of source vertices; with ensure_cover enough
    target vertices are selected for the group Gram matrix to be generically
    nonsingular, so phi_H is one-to-one almost surely.
    """
    dA, dB = source.d, target.d
    groups = _source_groups(source)

    support = {}
    handled = set()
    for key in sorted(groups, key=str):
        if key in handled:
            continue
        vids = groups[key]
        v0 = vids[0]
        partner_key = next(k for k, g in groups.items() if source.jim[v0] in g)
        handled.update({key, partner_key})
        self_paired = partner_key == key
        admissible = []
        for w in target.sorted_vids():
            if arrow.mult(w[0], v0[0]) == 0 or arrow.mult(w[2], v0[2]) == 0:
                continue
            if source.ko.even and source.vertex(v0).s != target.vertex(w).s:
                continue
            admissible.append(w)
        sel = {w for w in admissible if rng.random() < include_prob}
        if ensure_cover:
            # conservative capacity: the jim constraint can halve the free
            # dimension when the group is its own partner
            def capacity(ws):
                c = sum(arrow.mult(w[0], v0[0]) * arrow.mult(w[2], v0[2]) for w in ws)
                return c // 2 if self_paired else c
            for w in admissible:
                if capacity(sel) >= len(vids):
                    break
                sel.add(w)
            if capacity(sel) < len(vids) and not (self_paired and capacity(sel) * 2 >= len(vids)):
                if sum(arrow.mult(w[0], v0[0]) * arrow.mult(w[2], v0[2]) for w in admissible) < len(vids):
                    raise RuntimeError(f"target cannot make phi_H one-to-one on group {key}")
                sel = set(admissible)
        if self_paired:
            sel |= {target.jim[w] for w in sel}
        support[key] = sorted(sel)
        support[partner_key] = sorted({target.jim[w] for w in sel})

    pairs = []
    for key, vids in sorted(groups.items(), key=lambda kv: str(kv[0])):
        for v in vids:
            for w in support[key]:
                pairs.append((v, w))

    orbit_of = {}
    for (v, w) in pairs:
        partner = (source.jim[v], target.jim[w])
        orbit_of[(v, w)] = min((v, w), partner)

    u = {}
    for (v, w) in sorted(set(orbit_of.values())):
        ratio = epsilon_factor(source.vertex(v), dA) / epsilon_factor(target.vertex(w), dB)
        m = random_complex(rng, (arrow.mult(w[0], v[0]), arrow.mult(w[2], v[2])), scale)
        partner = (source.jim[v], target.jim[w])
        if partner == (v, w):
            m = (m + ratio * m.conj().T) / 2
            if frob(m) < 1e-9:
                # degenerate projection; add a fixed point of u -> ratio u*
                m = m + (np.eye(m.shape[0]) if ratio > 0 else 1j * np.eye(m.shape[0]))
            u[(v, w)] = m
        else:
            u[(v, w)] = m
            u[partner] = ratio * m.conj().T
    return DiagramLift(arrow, source, target, u)


def random_strong_pair(rng, phiH: PhiHMap, scale=1.0, hermitian=False):
    """(A, B) strong phi-compatible: B = M A M* plus an arbitrary complement block."""
    if not phiH.normalized:
        raise ValueError("strong pairs are built over a normalized phi_H")
    M = phiH.matrix
    nA, nB = M.shape[1], M.shape[0]
    A = random_hermitian(rng, nA, scale) if hermitian else random_complex(rng, (nA, nA), scale)
    C = random_hermitian(rng, nB, scale) if hermitian else random_complex(rng, (nB, nB), scale)
    P = phiH.projector()
    comp = np.eye(nB) - P
    B = M @ A @ M.conj().T + comp @ C @ comp
    return A, B


def weaken_pair(rng, phiH: PhiHMap, B, scale=1.0):
    """Add a nonzero perp <- range block: stays weakly compatible, breaks strong."""
    M = phiH.matrix
    P = phiH.projector()
    comp = np.eye(M.shape[0]) - P
    E = random_complex(rng, (M.shape[0], M.shape[0]), scale)
    off = comp @ E @ P
    if frob(off) < 1e-9:
        raise RuntimeError("degenerate weakening block")
    return B + off
