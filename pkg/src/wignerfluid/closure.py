"""Quantum closure of the moment hierarchy at the heat-flux level.

The fourth moment R is obtained from the linearized evolution equations of
the fourth and fifth moments about a homogeneous, static, heat-flux-free
equilibrium with pressure P0, keeping the hbar^2 terms only and setting
the sixth moment to zero:

    dS_ijklm/dt = -(q hbar^2 / 12 m^3) * sum over the five indices a of
                  E_a * W_(remaining four)
    dR_ijkl/dt  = -(q hbar^2 / 12 m^3) * sum over the four indices a of
                  eps_anm W_(remaining three, n) B_m  -  d_m S_ijklm

where W_abcd = P0_ab d_cd + P0_cd d_ab + P0_ac d_bd + P0_bd d_ac
+ P0_ad d_bc + P0_bc d_ad runs over the six ways of giving one index pair to
P0 and the other to the second derivative.

For plane waves exp(i k.r - i omega t) the harmonic solution is
S = rate_S / (-i omega), then R = rate_R / (-i omega) with B = k x E / omega.
For k along z, transverse E and gyrotropic P0 this equals the closed form

    R_ijkl = -(q hbar^2 / 4 m^3 omega^2)
             (P0_im d_jkl + P0_jm d_kli + P0_km d_lij + P0_lm d_ijk) E_m.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import csvio
from .params import PhysicalSetup
from .tensors import SymTensor

__all__ = [
    "ClosureContext",
    "ClosureResult",
    "levi_civita",
    "pairing_tensor",
    "s_moment_rate",
    "r_moment_rate",
    "s_moment_harmonic",
    "r_closure_from_recipe",
    "r_closure_closed_form",
    "random_transverse_context",
    "closure_sweep",
]


def levi_civita() -> np.ndarray:
    eps = np.zeros((3, 3, 3))
    eps[0, 1, 2] = eps[1, 2, 0] = eps[2, 0, 1] = 1.0
    eps[0, 2, 1] = eps[2, 1, 0] = eps[1, 0, 2] = -1.0
    return eps


@dataclass(frozen=True)
class ClosureContext:
    k: np.ndarray
    omega: complex
    P0: np.ndarray
    E_amp: np.ndarray
    setup: PhysicalSetup

    def __post_init__(self):
        object.__setattr__(self, "k", np.asarray(self.k, dtype=float).reshape(3))
        P0 = self.P0.to_dense() if isinstance(self.P0, SymTensor) else np.asarray(self.P0, dtype=float)
        if P0.shape != (3, 3) or not np.allclose(P0, P0.T, rtol=0, atol=1e-14 * max(1.0, np.abs(P0).max())):
            raise ValueError("P0 must be a symmetric 3x3 tensor")
        object.__setattr__(self, "P0", P0)
        object.__setattr__(self, "E_amp", np.asarray(self.E_amp, dtype=complex).reshape(3))
        if self.omega == 0:
            raise ValueError("omega = 0 makes the harmonic solve singular")

    @property
    def prefactor(self) -> float:
        s = self.setup
        return s.q_charge * s.hbar**2 / (12.0 * s.mass**3)

    def magnetic_amplitude(self) -> np.ndarray:
        """Faraday's law for plane waves: B = k x E / omega."""
        return np.cross(self.k, self.E_amp) / self.omega


@dataclass
class ClosureResult:
    R: SymTensor
    S: SymTensor
    closed_form: SymTensor
    residual: float


def _second_derivative(k) -> np.ndarray:
    ik = 1j * np.asarray(k, dtype=float)
    return np.outer(ik, ik)


def pairing_tensor(P0, D) -> np.ndarray:
    """W_abcd: the six P0-pair / D-pair assignments of four indices."""
    e = np.einsum
    return (e("ab,cd->abcd", P0, D) + e("cd,ab->abcd", P0, D)
            + e("ac,bd->abcd", P0, D) + e("bd,ac->abcd", P0, D)
            + e("ad,bc->abcd", P0, D) + e("bc,ad->abcd", P0, D))


def s_moment_rate(k, P0, E, setup: PhysicalSetup) -> np.ndarray:
    """Dense dS/dt for plane-wave amplitudes (d -> i k)."""
    W = pairing_tensor(np.asarray(P0, dtype=float), _second_derivative(k))
    E = np.asarray(E, dtype=complex)
    e = np.einsum
    total = (e("ijkl,m->ijklm", W, E) + e("jklm,i->ijklm", W, E)
             + e("klmi,j->ijklm", W, E) + e("lmij,k->ijklm", W, E)
             + e("mijk,l->ijklm", W, E))
    return -(setup.q_charge * setup.hbar**2 / (12.0 * setup.mass**3)) * total


def r_moment_rate(k, P0, B, S, setup: PhysicalSetup) -> np.ndarray:
    """Dense dR/dt: magnetic hbar^2 source minus the divergence of S (d -> i k)."""
    W = pairing_tensor(np.asarray(P0, dtype=float), _second_derivative(k))
    eps = levi_civita()
    B = np.asarray(B, dtype=complex)
    e = np.einsum
    # V[a, b, c, d] = eps_anm W_bcdn B_m
    V = e("anm,bcdn,m->abcd", eps, W, B)
    mag = (V + e("jikl->ijkl", V) + e("kijl->ijkl", V) + e("lijk->ijkl", V))
    div_S = e("m,ijklm->ijkl", 1j * np.asarray(k, dtype=float), S)
    return -(setup.q_charge * setup.hbar**2 / (12.0 * setup.mass**3)) * mag - div_S


def s_moment_harmonic(ctx: ClosureContext) -> SymTensor:
    rate = s_moment_rate(ctx.k, ctx.P0, ctx.E_amp, ctx.setup)
    return SymTensor.from_dense_rank(rate / (-1j * ctx.omega), 5)


def r_closure_closed_form(ctx: ClosureContext) -> SymTensor:
    ik = 1j * ctx.k
    D3 = np.einsum("a,b,c->abc", ik, ik, ik)
    PE = ctx.P0 @ ctx.E_amp
    e = np.einsum
    total = (e("i,jkl->ijkl", PE, D3) + e("j,kli->ijkl", PE, D3)
             + e("k,lij->ijkl", PE, D3) + e("l,ijk->ijkl", PE, D3))
    s = ctx.setup
    coef = -s.q_charge * s.hbar**2 / (4.0 * s.mass**3 * ctx.omega**2)
    return SymTensor.from_dense_rank(coef * total, 4)


def _rel_dev(a: SymTensor, b: SymTensor) -> float:
    scale = max(np.abs(b.components).max(), np.abs(a.components).max())
    if scale == 0:
        return 0.0
    return float(np.abs(a.components - b.components).max() / scale)


def r_closure_from_recipe(ctx: ClosureContext) -> ClosureResult:
    """Fourth moment from the S and R equations with B eliminated by Faraday's law."""
    S = s_moment_harmonic(ctx)
    rate = r_moment_rate(ctx.k, ctx.P0, ctx.magnetic_amplitude(), S.to_dense(), ctx.setup)
    R = SymTensor.from_dense_rank(rate / (-1j * ctx.omega), 4)
    closed = r_closure_closed_form(ctx)
    return ClosureResult(R=R, S=S, closed_form=closed, residual=_rel_dev(R, closed))


def export_closure_csv(tensor: SymTensor, path=None) -> str:
    if not np.iscomplexobj(tensor.components):
        tensor = SymTensor(tensor.rank, tensor.components.astype(complex))
    return tensor.to_csv(path)


def random_transverse_context(rng: np.random.Generator, setup: PhysicalSetup) -> ClosureContext:
    """k along z, E in the xy plane, gyrotropic P0, real omega."""
    k = rng.uniform(0.05, 3.0)
    E = np.array([rng.normal() + 1j * rng.normal(), rng.normal() + 1j * rng.normal(), 0.0])
    p_perp, p_par = rng.uniform(0.1, 3.0, size=2)
    omega = rng.uniform(0.5, 5.0) * rng.choice([-1.0, 1.0])
    return ClosureContext(np.array([0.0, 0.0, k]), omega, np.diag([p_perp, p_perp, p_par]), E, setup)


def closure_sweep(seed: int, count: int = 50, setup: PhysicalSetup | None = None) -> list[float]:
    rng = np.random.default_rng(seed)
    setup = setup or PhysicalSetup()
    out = []
    for _ in range(count):
        s = PhysicalSetup(n0=setup.n0, q_charge=setup.q_charge, mass=setup.mass,
                          hbar=rng.uniform(0.1, 3.0), c_light=setup.c_light, eps0=setup.eps0)
        out.append(r_closure_from_recipe(random_transverse_context(rng, s)).residual)
    return out


__all__.append("export_closure_csv")
