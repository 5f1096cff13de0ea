"""Finite spectral action, flat-background bosonic Lagrangian, fermionic pairing.

Everything here is the algebraic remnant of an almost-commutative geometry
on a flat four-manifold with constant fields: four Hermitian flavor-space
fields B_mu and one Phi, with

    F_{mu nu} = i [B_mu, B_nu],        D_mu Phi = i [B_mu, Phi],

    L_B   = f(0)/(24 pi^2) tr(F_{mu nu} F^{mu nu}),
    L_phi = -2 f_2 Lambda^2/(4 pi^2) tr(Phi^2)
            + f(0)/(8 pi^2) tr(Phi^4)
            + f(0)/(8 pi^2) tr((D_mu Phi)(D^mu Phi)),

per unit volume.  Across a normalized lift each trace of phi-compatible
factors splits into an inherited part, equal to the corresponding source
trace, plus terms with non-inherited components (TNIC).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .algebra import DEFAULT_TOL, as_matrix, frob
from .differential import UniversalOneForm, fluctuate, represent
from .krajewski import RealSpectralTriple
from .lifting import DiagramLift, LiftError, build_phiH, compat_check


@dataclass(frozen=True)
class CutoffFunction:
    """Even positive cutoff f with moments f(0) and f_2 = int_0^inf f(x) x dx.

    The gaussian preset is f(x) = exp(-x^2 / width^2), with f(0) = 1 and
    f_2 = width^2 / 2 in closed form.  For the polynomial kind
    f(x) = sum c_k x^{2k} the moment integral diverges, so f_2 must be
    supplied explicitly; this kind exists to make polynomial spectral
    actions exact.
    """

    kind: str
    coeffs: tuple = ()
    width: float = 1.0
    f2_explicit: float | None = None

    def __post_init__(self):
        if self.kind not in ("gaussian", "polynomial"):
            raise ValueError(f"unknown cutoff kind {self.kind!r}")
        if self.kind == "polynomial" and self.f2_explicit is None:
            raise ValueError("polynomial cutoffs need an explicit f2")
        if self.kind == "gaussian" and self.width <= 0:
            raise ValueError("gaussian width must be positive")

    @classmethod
    def gaussian(cls, width: float = 1.0):
        return cls("gaussian", (), width, None)

    @classmethod
    def polynomial(cls, coeffs, f2: float):
        return cls("polynomial", tuple(float(c) for c in coeffs), 1.0, float(f2))

    def __call__(self, x):
        x = np.asarray(x, dtype=float)
        if self.kind == "gaussian":
            return np.exp(-((x / self.width) ** 2))
        out = np.zeros_like(x)
        for k, c in enumerate(self.coeffs):
            out = out + c * x ** (2 * k)
        return out

    @property
    def f0(self) -> float:
        return float(self(0.0))

    @property
    def f2(self) -> float:
        if self.kind == "gaussian":
            return self.width**2 / 2.0
        return float(self.f2_explicit)


@dataclass
class GaugeConfiguration:
    """Four constant Hermitian fields B_mu and a Hermitian Phi on H."""

    B: tuple
    Phi: np.ndarray

    def __post_init__(self):
        B = tuple(as_matrix(b) for b in self.B)
        if len(B) != 4:
            raise ValueError("expected four B_mu fields")
        self.B = B
        self.Phi = as_matrix(self.Phi)

    def hermiticity_residual(self) -> float:
        res = max(frob(b - b.conj().T) for b in self.B)
        return max(res, frob(self.Phi - self.Phi.conj().T))

    @classmethod
    def from_forms(cls, t: RealSpectralTriple, vector_forms, higgs_form: UniversalOneForm,
                   tol: float = DEFAULT_TOL):
        """B_mu = A_mu - J A_mu J^-1 and Phi = D + phi + J phi J^-1 from one-forms."""
        if len(vector_forms) != 4:
            raise ValueError("expected four vector one-forms")
        Bs = []
        for w in vector_forms:
            A = represent(w, t)
            if frob(A - A.conj().T) > tol:
                raise ValueError("vector potential representation is not Hermitian")
            Bs.append(A - t.conjugate_by_J(A))
        phi = represent(higgs_form, t)
        if frob(phi - phi.conj().T) > tol:
            raise ValueError("scalar potential representation is not Hermitian")
        Phi = t.D + phi + t.conjugate_by_J(phi)
        return cls(tuple(Bs), Phi)


@dataclass
class ActionTerm:
    name: str
    full: float
    inherited: float | None = None
    tnic: float | None = None
    a_value: float | None = None

    def as_dict(self):
        return {
            "term": self.name,
            "full": self.full,
            "inherited": self.inherited,
            "tnic": self.tnic,
            "a_value": self.a_value,
        }


@dataclass
class ActionReport:
    terms: list = field(default_factory=list)
    spectral: dict = field(default_factory=dict)
    compat: dict = field(default_factory=dict)

    def term(self, name) -> ActionTerm:
        for t in self.terms:
            if t.name == name:
                return t
        raise KeyError(name)

    @property
    def total(self) -> float:
        return sum(t.full for t in self.terms if t.name != "total")

    def as_dict(self):
        return {
            "terms": [t.as_dict() for t in self.terms],
            "spectral": dict(self.spectral),
            "compat": {k: v.as_dict() for k, v in self.compat.items()},
        }

    def __str__(self):
        lines = [f"{'term':<10} {'full':>14} {'inherited':>14} {'tnic':>14} {'A-side':>14}"]
        for t in self.terms:
            fmt = lambda x: f"{x:>14.6e}" if x is not None else " " * 14
            lines.append(f"{t.name:<10} {t.full:>14.6e} {fmt(t.inherited)} {fmt(t.tnic)} {fmt(t.a_value)}")
        for k, v in self.spectral.items():
            lines.append(f"spectral action [{k}] = {v:.6e}")
        return "\n".join(lines)


def _real_trace(m, what, tol):
    v = complex(np.trace(m))
    if abs(v.imag) > max(tol, 1e-9) * (1.0 + abs(v)):
        raise ValueError(f"{what} has a non-real trace ({v})")
    return v.real


def spectral_action(t: RealSpectralTriple, omega: UniversalOneForm, f: CutoffFunction,
                    Lambda: float, tol: float = DEFAULT_TOL) -> float:
    """Tr f(D_omega / Lambda), exact at finite dimension."""
    if Lambda <= 0:
        raise ValueError("Lambda must be positive")
    D = fluctuate(t, omega, tol)
    eigs = np.linalg.eigvalsh(D)
    return float(np.sum(f(eigs / Lambda)))


def bosonic_lagrangian(cfg: GaugeConfiguration, f: CutoffFunction, Lambda: float,
                       tol: float = DEFAULT_TOL) -> ActionReport:
    """Per-term values of the flat constant-field Lagrangian."""
    res = cfg.hermiticity_residual()
    if res > tol:
        raise ValueError(f"configuration is not Hermitian (residual {res:.3e})")
    B, Phi = cfg.B, cfg.Phi
    f0, f2 = f.f0, f.f2

    trF2 = 0.0
    for mu in range(4):
        for nu in range(4):
            F = 1j * (B[mu] @ B[nu] - B[nu] @ B[mu])
            trF2 += _real_trace(F @ F, "tr(F F)", tol)
    lB = f0 / (24 * math.pi**2) * trF2

    trPhi2 = _real_trace(Phi @ Phi, "tr(Phi^2)", tol)
    trPhi4 = _real_trace(Phi @ Phi @ Phi @ Phi, "tr(Phi^4)", tol)
    trDPhi2 = 0.0
    for mu in range(4):
        DPhi = 1j * (B[mu] @ Phi - Phi @ B[mu])
        trDPhi2 += _real_trace(DPhi @ DPhi, "tr((D Phi)^2)", tol)

    lPhi2 = -2 * f2 * Lambda**2 / (4 * math.pi**2) * trPhi2
    lPhi4 = f0 / (8 * math.pi**2) * trPhi4
    lDPhi2 = f0 / (8 * math.pi**2) * trDPhi2

    rep = ActionReport()
    rep.terms = [
        ActionTerm("trF2", lB),
        ActionTerm("trPhi2", lPhi2),
        ActionTerm("trPhi4", lPhi4),
        ActionTerm("trDPhi2", lDPhi2),
    ]
    return rep


def fermionic_pairing(t: RealSpectralTriple, omega: UniversalOneForm, psi, psi_p,
                      tol: float = DEFAULT_TOL) -> complex:
    """The bilinear value <J psi, D_omega psi'>.

    In the even case both arguments must lie in ker(gamma - 1).  Grassmann
    statistics are not modelled: the value is the raw bilinear form.
    """
    psi = np.asarray(psi, dtype=complex)
    psi_p = np.asarray(psi_p, dtype=complex)
    if t.gamma is not None:
        for name, v in (("psi", psi), ("psi'", psi_p)):
            if np.linalg.norm(t.gamma @ v - v) > max(tol, 1e-9) * (1 + np.linalg.norm(v)):
                raise ValueError(f"{name} is not in the even subspace ker(gamma - 1)")
    D = fluctuate(t, omega, tol)
    return complex(np.vdot(t.apply_J(psi), D @ psi_p))


def fermionic_symmetry_defect(t, omega, psi, psi_p, tol: float = DEFAULT_TOL):
    """(|A(psi,psi') - A(psi',psi)|, |A(psi,psi') + A(psi',psi)|) for the form A."""
    a = fermionic_pairing(t, omega, psi, psi_p, tol)
    b = fermionic_pairing(t, omega, psi_p, psi, tol)
    return abs(a - b), abs(a + b)


def compare_actions(lift: DiagramLift, tA: RealSpectralTriple, tB: RealSpectralTriple,
                    omega_A: UniversalOneForm, omega_B: UniversalOneForm,
                    f: CutoffFunction, Lambda: float, cfgs=None, fermions=None,
                    tol: float = DEFAULT_TOL) -> ActionReport:
    """Split every Lagrangian term of the target side into inherited + TNIC.

    The inherited value of each traced monomial is computed with every factor
    replaced by its pullback phi_H* X phi_H and must equal the source-side
    value within tol; TNIC = full - inherited by definition.  Operator pairs
    must be weakly phi-compatible, and fermions phi-compatible (psi_B -
    phi_H psi_A orthogonal to the range).
    """
    if not lift.normalized:
        raise LiftError("compare_actions needs a normalized lift")
    phiH = build_phiH(lift)
    M = phiH.matrix
    P = phiH.projector()

    if cfgs is None:
        cfg_A = GaugeConfiguration(tuple(np.zeros_like(tA.D) for _ in range(4)),
                                   fluctuate(tA, omega_A, tol))
        cfg_B = GaugeConfiguration(tuple(np.zeros_like(tB.D) for _ in range(4)),
                                   fluctuate(tB, omega_B, tol))
    else:
        cfg_A, cfg_B = cfgs

    rep = ActionReport()
    failures = []
    for mu in range(4):
        c = compat_check(cfg_A.B[mu], cfg_B.B[mu], phiH, tol)
        rep.compat[f"B_{mu}"] = c
        if not c.weak:
            failures.append(f"B_{mu}")
    c = compat_check(cfg_A.Phi, cfg_B.Phi, phiH, tol)
    rep.compat["Phi"] = c
    if not c.weak:
        failures.append("Phi")
    if failures:
        raise LiftError(f"operators not phi-compatible: {', '.join(failures)}")

    pull = lambda X: M.conj().T @ X @ M
    cfg_inh = GaugeConfiguration(tuple(pull(b) for b in cfg_B.B), pull(cfg_B.Phi))

    full = bosonic_lagrangian(cfg_B, f, Lambda, tol)
    inh = bosonic_lagrangian(cfg_inh, f, Lambda, tol)
    aside = bosonic_lagrangian(cfg_A, f, Lambda, tol)
    for tf, ti, ta in zip(full.terms, inh.terms, aside.terms):
        rep.terms.append(ActionTerm(tf.name, tf.full, ti.full, tf.full - ti.full, ta.full))
        if abs(ti.full - ta.full) > max(tol, tol * abs(ta.full)):
            raise LiftError(
                f"inherited trace mismatch on {tf.name}: {ti.full} vs source {ta.full}"
            )

    rep.spectral["A"] = spectral_action(tA, omega_A, f, Lambda, tol)
    rep.spectral["B"] = spectral_action(tB, omega_B, f, Lambda, tol)

    if fermions is not None:
        psi_A, psi_B = (np.asarray(v, dtype=complex) for v in fermions)
        mismatch = np.linalg.norm(P @ (psi_B - M @ psi_A))
        if mismatch > max(tol, 1e-9) * (1 + np.linalg.norm(psi_B)):
            raise LiftError(f"fermion pair is not phi-compatible (residual {mismatch:.3e})")
        DB = fluctuate(tB, omega_B, tol)
        full_f = fermionic_pairing(tB, omega_B, psi_B, psi_B, tol)
        chi = M @ psi_A
        inh_f = complex(np.vdot(tB.apply_J(chi), P @ DB @ P @ chi))
        a_f = fermionic_pairing(tA, omega_A, psi_A, psi_A, tol)
        rep.terms.append(ActionTerm("fermionic", full_f.real, inh_f.real,
                                    (full_f - inh_f).real, a_f.real))
        rep.spectral["fermionic_full"] = full_f
        rep.spectral["fermionic_inherited"] = inh_f
        rep.spectral["fermionic_A"] = a_f
        if abs(inh_f - a_f) > max(tol, tol * abs(a_f)):
            raise LiftError(f"fermionic comparison violated: {inh_f} vs {a_f}")
    return rep
