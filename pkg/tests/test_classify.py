import numpy as np
import pytest

from finspec.algebra import AlgebraProfile
from finspec.catalog import minimal_diagram
from finspec.krajewski import (
    KOSignature,
    KrajewskiDiagram,
    Vertex,
    classify,
    detect_ko,
    realize,
    verify_axioms,
)
from finspec.sampling import random_diagram, rng_from_seed


def diagram_invariants(diag):
    """Relabeling-independent fingerprint: multiplicities, decorations, edge data."""
    mus = {k: len(v) for k, v in diag.fibers().items()}
    s_multi = sorted((v[0], v[2], diag.vertex(v).s) for v in diag.sorted_vids())
    chi_multi = sorted((v[0], v[2], diag.vertex(v).chi) for v in diag.sorted_vids())
    svs = sorted(
        (e.src[0], e.src[2], e.dst[0], e.dst[2],
         tuple(np.round(np.linalg.svd(e.op, compute_uv=False), 8)))
        for e in diag.edges
    )
    return mus, s_multi, chi_multi, svs


def assert_witness(t, diag2, W, tol=1e-9):
    t2 = realize(diag2)
    assert np.allclose(t2.D, W.conj().T @ t.D @ W, atol=tol)
    assert np.allclose(t2.K, W.conj().T @ t.K @ np.conj(W), atol=tol)
    if t.gamma is not None:
        assert np.allclose(t2.gamma, W.conj().T @ t.gamma @ W, atol=tol)
    assert np.allclose(W.conj().T @ W, np.eye(t.dim), atol=tol)


def test_classify_trivial_triple():
    prof = AlgebraProfile((1,))
    v = (1, 1, 1)
    diag = KrajewskiDiagram(prof, KOSignature.from_dim(0), {v: Vertex(1, 1, 1, s=1)}, {v: v}, [])
    t = realize(diag)
    diag2, W = classify(t)
    assert diag2.mu(1, 1) == 1
    assert not diag2.edges
    assert_witness(t, diag2, W)


@pytest.mark.parametrize("d", [0, 1, 2, 3, 4, 5, 6, 7])
def test_classify_minimal_diagrams(d):
    t = realize(minimal_diagram(d, 0.8))
    diag2, W = classify(t)
    assert_witness(t, diag2, W)
    assert detect_ko(realize(diag2)) == {d}


@pytest.mark.parametrize("d", [0, 1, 2, 6, 7])
def test_classify_random_round_trip(d):
    rng = rng_from_seed(500 + d)
    for _ in range(8):
        diag = random_diagram(rng, d, max_fiber=2, edge_prob=0.7, ensure_edge=True)
        t = realize(diag)
        diag2, W = classify(t, 1e-10)
        assert_witness(t, diag2, W)
        inv1, inv2 = diagram_invariants(diag), diagram_invariants(diag2)
        assert inv1[0] == inv2[0]      # multiplicities
        assert inv1[1] == inv2[1]      # s multiset
        assert inv1[2] == inv2[2]      # chi multiset
        assert inv1[3] == inv2[3]      # edge singular values
        assert detect_ko(realize(diag2)) == detect_ko(t)


@pytest.mark.parametrize("d", [3, 4, 5])
def test_classify_quaternionic_dimensions(d):
    # J^2 = -1 on diagonal fibers forces even multiplicity, and the paired
    # basis construction recovers it
    rng = rng_from_seed(900 + d)
    for _ in range(4):
        diag = random_diagram(rng, d, max_fiber=2, edge_prob=0.6, ensure_edge=True)
        t = realize(diag)
        diag2, W = classify(t, 1e-10)
        assert_witness(t, diag2, W)
        for (i, j), fiber in diag2.fibers().items():
            if i == j:
                assert len(fiber) % 2 == 0


def test_classify_reports_even_diagonal_multiplicity():
    # a d=5 triple has J^2 = -1; its diagonal fiber multiplicity comes out even
    t = realize(minimal_diagram(5, 1.1))
    diag2, _ = classify(t)
    assert diag2.mu(1, 1) == 2


def test_classify_witness_conjugated_input():
    # classification undoes a generic fiber-mixing unitary
    rng = rng_from_seed(77)
    diag = random_diagram(rng, 6, max_fiber=2, edge_prob=0.8, ensure_edge=True)
    t = realize(diag)
    # conjugate by a block unitary mixing each fiber (middle factor only)
    from finspec.krajewski import RealSpectralTriple
    from finspec.sampling import random_unitary

    n = t.dim
    Q = np.zeros((n, n), dtype=complex)
    for (i, j), fiber in sorted(diag.fibers().items()):
        U = random_unitary(rng, len(fiber))
        for a, va in enumerate(fiber):
            ba = t.layout.block(va)
            for b, vb in enumerate(fiber):
                bb = t.layout.block(vb)
                Q[ba.sl, bb.sl] = U[a, b] * np.eye(ba.length)
    tc = RealSpectralTriple(
        t.profile, t.ko, t.layout,
        Q.conj().T @ t.D @ Q, Q.conj().T @ t.K @ np.conj(Q), Q.conj().T @ t.gamma @ Q,
    )
    assert verify_axioms(tc, 1e-10).ok
    diag2, W = classify(tc, 1e-9)
    assert_witness(tc, diag2, W, tol=1e-8)
    assert diagram_invariants(diag2)[0] == diagram_invariants(diag)[0]
