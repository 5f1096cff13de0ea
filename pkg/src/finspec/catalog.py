"""Minimal hand-built diagrams, one per KO-dimension, with nonzero Dirac data.

The sign constraints leave little room at small size:

  d=0: two jim-fixed diagonal vertices s=+-1, one real edge between them;
  d=1: two jim-fixed diagonal vertices, D forced anti-real (pure imaginary);
  d=2: two chi-pairs, the in-pair edge is forced to vanish so the edge
       joins the pairs crosswise;
  d=3: one chi-pair with equal real self-loops;
  d=4: two chi-pairs of opposite grading, crosswise edge;
  d=5: one chi-pair with opposite real self-loops;
  d=6: one chi-pair with a real edge inside the pair;
  d=7: a single vertex with a real self-loop.
"""

from __future__ import annotations

from .algebra import AlgebraProfile
from .krajewski import Edge, KOSignature, KrajewskiDiagram, Vertex


def minimal_diagram(d: int, t: float = 1.0) -> KrajewskiDiagram:
    """The smallest diagram over A = C in KO-dimension d whose D is nonzero."""
    profile = AlgebraProfile((1,))
    ko = KOSignature.from_dim(d)
    V = lambda p, s=None, chi=None: Vertex(1, p, 1, s=s, chi=chi)
    vid = lambda p: (1, p, 1)

    if d == 0:
        vertices = {vid(1): V(1, s=1), vid(2): V(2, s=-1)}
        jim = {vid(1): vid(1), vid(2): vid(2)}
        edges = [Edge(vid(1), vid(2), "general", [[t]])]
    elif d == 1:
        vertices = {vid(1): V(1), vid(2): V(2)}
        jim = {vid(1): vid(1), vid(2): vid(2)}
        edges = [Edge(vid(1), vid(2), "general", [[1j * t]])]
    elif d == 2:
        vertices = {
            vid(1): V(1, s=-1, chi=0), vid(2): V(2, s=1, chi=1),
            vid(3): V(3, s=-1, chi=0), vid(4): V(4, s=1, chi=1),
        }
        jim = {vid(1): vid(2), vid(2): vid(1), vid(3): vid(4), vid(4): vid(3)}
        edges = [Edge(vid(1), vid(4), "general", [[t]])]
    elif d == 3:
        vertices = {vid(1): V(1, chi=0), vid(2): V(2, chi=1)}
        jim = {vid(1): vid(2), vid(2): vid(1)}
        edges = [Edge(vid(1), vid(1), "general", [[t]])]
    elif d == 4:
        vertices = {
            vid(1): V(1, s=1, chi=0), vid(2): V(2, s=1, chi=1),
            vid(3): V(3, s=-1, chi=0), vid(4): V(4, s=-1, chi=1),
        }
        jim = {vid(1): vid(2), vid(2): vid(1), vid(3): vid(4), vid(4): vid(3)}
        edges = [Edge(vid(1), vid(3), "general", [[t]])]
    elif d == 5:
        vertices = {vid(1): V(1, chi=0), vid(2): V(2, chi=1)}
        jim = {vid(1): vid(2), vid(2): vid(1)}
        edges = [Edge(vid(1), vid(1), "general", [[t]])]
    elif d == 6:
        vertices = {vid(1): V(1, s=1, chi=0), vid(2): V(2, s=-1, chi=1)}
        jim = {vid(1): vid(2), vid(2): vid(1)}
        edges = [Edge(vid(1), vid(2), "general", [[t]])]
    elif d == 7:
        vertices = {vid(1): V(1)}
        jim = {vid(1): vid(1)}
        edges = [Edge(vid(1), vid(1), "general", [[t]])]
    else:
        raise ValueError("d must be 0..7")
    return KrajewskiDiagram(profile, ko, vertices, jim, edges)
