import numpy as np
import pytest

from finspec.algebra import AlgebraElement, AlgebraProfile
from finspec.bratteli import BratteliArrow, apply_phi, compose, lift_unitary, phi_component, unit_defect
from finspec.sampling import random_element, random_unitary_element, rng_from_seed


def arrow_1_2():
    # C -> M2, one copy plus a defect slot
    return BratteliArrow(AlgebraProfile((1,)), AlgebraProfile((2,)), ((1,),), (1,))


def test_arrow_invariants():
    with pytest.raises(ValueError):
        BratteliArrow(AlgebraProfile((1,)), AlgebraProfile((2,)), ((1,),), (0,))  # m_k mismatch
    with pytest.raises(ValueError):
        # column of zeros: not one-to-one
        BratteliArrow(AlgebraProfile((1, 1)), AlgebraProfile((2,)), ((2, 0),), (0,))


def test_apply_phi_block_layout():
    arrow = BratteliArrow(AlgebraProfile((1, 2)), AlgebraProfile((3,)), ((1, 1),), (0,))
    rng = rng_from_seed(0)
    lam = 2.5 - 1j
    b = random_element(rng, AlgebraProfile((2,)))
    a = AlgebraElement(arrow.source, [[[lam]], b.block(1)])
    out = apply_phi(arrow, a).block(1)
    expected = np.zeros((3, 3), dtype=complex)
    expected[0, 0] = lam
    expected[1:, 1:] = b.block(1)
    assert np.allclose(out, expected)


def test_apply_phi_defect_zero():
    arrow = arrow_1_2()
    a = AlgebraElement(arrow.source, [[[3.0]]])
    assert np.allclose(apply_phi(arrow, a).block(1), np.diag([3.0, 0.0]))


def test_apply_phi_homomorphism():
    rng = rng_from_seed(1)
    arrow = BratteliArrow(AlgebraProfile((1, 2)), AlgebraProfile((4, 2)), ((2, 1), (0, 1)), (0, 0))
    a, ap = random_element(rng, arrow.source), random_element(rng, arrow.source)
    lhs = apply_phi(arrow, a @ ap)
    rhs = apply_phi(arrow, a) @ apply_phi(arrow, ap)
    assert (lhs - rhs).norm() <= 1e-13
    assert (apply_phi(arrow, a.adjoint()) - apply_phi(arrow, a).adjoint()).norm() <= 1e-13


def test_phi_component_slot_placement():
    arrow = BratteliArrow(AlgebraProfile((1,)), AlgebraProfile((2,)), ((2,),), (0,))
    lam = 1.5j
    out = phi_component(arrow, 1, 1, 2, [[lam]])
    assert np.allclose(out, np.diag([0, lam]))
    full = phi_component(arrow, 1, 1, None, [[lam]])
    assert np.allclose(full, lam * np.eye(2))


def test_phi_component_zero_multiplicity():
    arrow = BratteliArrow(AlgebraProfile((1, 1)), AlgebraProfile((1, 1)), ((1, 0), (0, 1)), (0, 0))
    assert np.allclose(phi_component(arrow, 1, 2, None, [[4.0]]), np.zeros((1, 1)))
    with pytest.raises(ValueError):
        phi_component(arrow, 1, 2, 1, [[4.0]])


def test_phi_component_orthogonality():
    rng = rng_from_seed(2)
    arrow = BratteliArrow(AlgebraProfile((1, 2)), AlgebraProfile((4, 2)), ((2, 1), (0, 1)), (0, 0))
    a1 = random_element(rng, AlgebraProfile((1,))).block(1)
    a2 = random_element(rng, AlgebraProfile((2,))).block(1)
    p1 = phi_component(arrow, 1, 1, None, a1)
    p2 = phi_component(arrow, 1, 2, None, a2)
    assert np.linalg.norm(p1 @ p2) <= 1e-13
    assert np.linalg.norm(p2 @ p1) <= 1e-13
    # the slot components sum to the band map
    s = sum(phi_component(arrow, 1, 1, k, a1) for k in (1, 2))
    assert np.allclose(s, p1)
    # and the band maps assemble the full block: phi_k = sum_i phi_k^i o pr_i
    a = random_element(rng, arrow.source)
    assembled = sum(
        phi_component(arrow, 1, i, None, a.block(i)) for i in (1, 2)
    )
    assert np.allclose(assembled, apply_phi(arrow, a).block(1), atol=1e-14)


def test_unit_defect():
    arrow = arrow_1_2()
    p = unit_defect(arrow)
    assert np.allclose(p.block(1), np.diag([0.0, 1.0]))
    assert (p @ p - p).norm() <= 1e-15
    assert (p.adjoint() - p).norm() <= 1e-15
    rng = rng_from_seed(3)
    arrow2 = BratteliArrow(AlgebraProfile((1, 2)), AlgebraProfile((4, 3)), ((2, 1), (1, 1)), (0, 0))
    assert unit_defect(arrow2).norm() == 0.0      # no defects, p vanishes
    one_t = AlgebraElement.identity(arrow2.target)
    assert (apply_phi(arrow2, AlgebraElement.identity(arrow2.source)) + unit_defect(arrow2) - one_t).norm() == 0.0
    a = random_element(rng, arrow2.source)
    p2 = unit_defect(arrow2)
    assert (p2 @ apply_phi(arrow2, a)).norm() <= 1e-13
    assert (apply_phi(arrow2, a) @ p2).norm() <= 1e-13


def test_lift_unitary():
    arrow = arrow_1_2()
    one = AlgebraElement.identity(arrow.source)
    assert lift_unitary(arrow, one).allclose(AlgebraElement.identity(arrow.target), 1e-15)
    theta = 0.37
    u = AlgebraElement(arrow.source, [[[np.exp(1j * theta)]]])
    assert np.allclose(lift_unitary(arrow, u).block(1), np.diag([np.exp(1j * theta), 1.0]))
    rng = rng_from_seed(4)
    arrow2 = BratteliArrow(AlgebraProfile((2, 1)), AlgebraProfile((5, 2)), ((2, 1), (0, 1)), (0, 1))
    uu = random_unitary_element(rng, arrow2.source)
    assert lift_unitary(arrow2, uu).is_unitary(1e-12)
    with pytest.raises(ValueError):
        lift_unitary(arrow, AlgebraElement(arrow.source, [[[2.0]]]))


def test_compose_coherence_aligned():
    # when the nested slots stay sorted by source block the normal forms agree exactly
    rng = rng_from_seed(5)
    first = BratteliArrow(AlgebraProfile((1, 2)), AlgebraProfile((4, 2)), ((2, 1), (0, 1)), (0, 0))
    second = BratteliArrow(AlgebraProfile((4, 2)), AlgebraProfile((7,)), ((1, 1),), (1,))
    comp = compose(second, first)
    assert comp.source == first.source and comp.target == second.target
    a = random_element(rng, first.source)
    lhs = apply_phi(comp, a)
    rhs = apply_phi(second, apply_phi(first, a))
    assert (lhs - rhs).norm() <= 1e-13


def slot_intertwiner(second, first, comp):
    """Permutations P_q with phi2(phi1(a)) = P phi_comp(a) P* blockwise.

    Independent slot bookkeeping: both layouts list where every copy of a_i
    (and every zero row) sits; matching copies in order gives the
    permutation.
    """
    perms = []
    dims = first.source.dims
    r = first.source.r
    for q in range(1, second.target.r + 1):
        m_q = second.target.dim(q)
        comp_rows = []
        for i in range(1, r + 1):
            for copy in range(comp.mult(q, i)):
                comp_rows.append(("a", i, copy, dims[i - 1]))
        comp_rows.append(("z", 0, 0, comp.n0[q - 1]))
        nested_rows = []
        counters = {i: 0 for i in range(1, r + 1)}
        zrows = 0
        for l in range(1, second.source.r + 1):
            for _copy2 in range(second.mult(q, l)):
                for i in range(1, r + 1):
                    for _copy1 in range(first.mult(l, i)):
                        nested_rows.append(("a", i, counters[i], dims[i - 1]))
                        counters[i] += 1
                zrows += first.n0[l - 1]
        zrows += second.n0[q - 1]
        nested_rows.append(("z", 0, 0, zrows))
        # offsets per (kind, i, copy)
        def offsets(rows):
            out, pos = {}, 0
            for kind, i, copy, length in rows:
                if length:
                    out.setdefault((kind, i, copy), []).append((pos, length))
                pos += length
            return out, pos

        comp_off, total = offsets(comp_rows)
        nested_off, total2 = offsets(nested_rows)
        assert total == total2 == m_q
        P = np.zeros((m_q, m_q))
        zsrc = [p for (pos, length) in comp_off.get(("z", 0, 0), []) for p in range(pos, pos + length)]
        zdst = [p for (pos, length) in nested_off.get(("z", 0, 0), []) for p in range(pos, pos + length)]
        for key, placements in comp_off.items():
            if key[0] == "z":
                continue
            (cpos, length) = placements[0]
            (npos, _l2) = nested_off[key][0]
            for x in range(length):
                P[npos + x, cpos + x] = 1.0
        for zs, zd in zip(zsrc, zdst):
            P[zd, zs] = 1.0
        perms.append(P)
    return perms


def test_compose_coherence_up_to_slot_permutation():
    # interleaving copies break literal equality; a fixed permutation of
    # slots (independent of the element) intertwines the two homomorphisms
    rng = rng_from_seed(6)
    first = BratteliArrow(AlgebraProfile((1, 2)), AlgebraProfile((3, 2)), ((1, 1), (0, 1)), (0, 0))
    second = BratteliArrow(AlgebraProfile((3, 2)), AlgebraProfile((8,)), ((2, 1),), (0,))
    comp = compose(second, first)
    perms = slot_intertwiner(second, first, comp)
    for _ in range(5):
        a = random_element(rng, first.source)
        nested = apply_phi(second, apply_phi(first, a))
        direct = apply_phi(comp, a)
        for k in range(1, comp.target.r + 1):
            P = perms[k - 1]
            assert np.linalg.norm(nested.block(k) - P @ direct.block(k) @ P.T) <= 1e-13
