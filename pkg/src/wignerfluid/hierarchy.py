"""Moment hierarchy on a periodic z grid and its transverse linearization.

Profiles depend on z only, so every gradient is a 3-slot array whose x and y
slots vanish; all vector and tensor components are kept. The convective
forms D/Dt = d/dt + u.grad are moved to the right-hand side, giving plain
time derivatives.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import csvio, spectral
from .params import EquilibriumPressure, PhysicalSetup
from .tensors import _AXES, SymTensor, canonical_indices

__all__ = [
    "FluidState1D",
    "FieldProfiles",
    "HierarchyRates",
    "TransverseLinearSystem",
    "eval_hierarchy_rhs",
    "build_transverse_system",
    "transverse_labels",
    "export_profiles_csv",
]

RESOLUTION_TOL = 1e-10


def _sym(t, rank):
    if isinstance(t, SymTensor):
        if t.rank != rank:
            raise ValueError(f"expected a rank-{rank} tensor profile")
        return t
    return SymTensor.from_dense_rank(np.asarray(t, dtype=float), rank)


@dataclass
class FluidState1D:
    """Moment profiles on a uniform periodic grid ``z`` of period ``length``.

    ``u`` has shape (Nz, 3); ``P`` and ``Q`` are batched symmetric tensors
    (dense arrays are accepted and symmetrized).
    """

    z: np.ndarray
    n: np.ndarray
    u: np.ndarray
    P: SymTensor
    Q: SymTensor
    length: float

    def __post_init__(self):
        self.z = np.asarray(self.z, dtype=float)
        nz = self.z.size
        self.n = np.asarray(self.n, dtype=float).reshape(nz)
        self.u = np.asarray(self.u, dtype=float).reshape(nz, 3)
        self.P = _sym(self.P, 2)
        self.Q = _sym(self.Q, 3)
        if self.P.batch_shape != (nz,) or self.Q.batch_shape != (nz,):
            raise ValueError("tensor profiles must live on the z grid")
        if not np.allclose(np.diff(self.z), self.length / nz, rtol=1e-9, atol=0):
            raise ValueError("z grid must be uniform with spacing length/Nz")

    @classmethod
    def homogeneous(cls, nz: int, length: float, n0: float, P0, u0=(0.0, 0.0, 0.0)) -> "FluidState1D":
        z = np.arange(nz) * length / nz
        P0 = np.asarray(P0, dtype=float)
        return cls(z, np.full(nz, n0), np.tile(np.asarray(u0, float), (nz, 1)),
                   SymTensor.from_dense_rank(np.broadcast_to(P0, (nz, 3, 3)), 2),
                   SymTensor.zeros(3, (nz,)), length)


@dataclass
class FieldProfiles:
    """External E and B, each of shape (Nz, 3)."""

    E: np.ndarray
    B: np.ndarray
    length: float
    solenoidal_tol: float = 1e-9

    def __post_init__(self):
        self.E = np.atleast_2d(np.asarray(self.E, dtype=float))
        self.B = np.atleast_2d(np.asarray(self.B, dtype=float))
        if self.E.shape != self.B.shape or self.E.shape[1] != 3:
            raise ValueError("E and B must both have shape (Nz, 3)")
        dbz = spectral.derivative(self.B[:, 2], self.length)
        scale = max(np.abs(self.B).max(), 1.0) * self.B.shape[0] / self.length
        if np.abs(dbz).max() > self.solenoidal_tol * scale:
            raise ValueError("B_z must be uniform along z (div B = 0)")

    @classmethod
    def zero(cls, nz: int, length: float) -> "FieldProfiles":
        return cls(np.zeros((nz, 3)), np.zeros((nz, 3)), length)


@dataclass
class HierarchyRates:
    dn: np.ndarray
    du: np.ndarray
    dP: SymTensor
    dQ: SymTensor

    def max_abs(self) -> float:
        return float(max(np.abs(self.dn).max(), np.abs(self.du).max(),
                         np.abs(self.dP.components).max(), np.abs(self.dQ.components).max()))


def _levi() -> np.ndarray:
    eps = np.zeros((3, 3, 3))
    for a, b, c in ((0, 1, 2), (1, 2, 0), (2, 0, 1)):
        eps[a, b, c], eps[a, c, b] = 1.0, -1.0
    return eps


EPS = _levi()
DELTA = np.eye(3)


class _Grad:
    """Gradient that inserts a derivative axis right after the grid axis."""

    def __init__(self, length: float):
        self.length = length

    def __call__(self, f):
        f = np.asarray(f)
        out = np.zeros(f.shape[:1] + (3,) + f.shape[1:], dtype=f.dtype)
        out[:, 2] = spectral.derivative(f, self.length, axis=0)
        return out


def _check_resolved(arrays, names):
    for arr, name in zip(arrays, names):
        if spectral.tail_fraction(np.asarray(arr), axis=0) > RESOLUTION_TOL:
            raise ValueError(f"profile {name} is not spectrally resolved")


def eval_hierarchy_rhs(state: FluidState1D, fields: FieldProfiles, setup: PhysicalSetup,
                       R=None, quantum: bool = True) -> HierarchyRates:
    """Time derivatives of n, u, P and Q.

    ``R`` is the fourth-moment profile (dense (Nz,3,3,3,3) or SymTensor);
    None means zero. ``quantum=False`` drops every hbar^2 group, which must
    coincide with setting hbar = 0.
    """
    nz = state.z.size
    if fields.E.shape[0] != nz:
        raise ValueError("fields and state use different grids")
    if not np.isclose(fields.length, state.length, rtol=1e-12):
        raise ValueError("fields and state use different periods")
    if np.any(state.n <= 0):
        raise ValueError("density must be positive everywhere")
    P = state.P.to_dense()
    Q = state.Q.to_dense()
    Rd = np.zeros((nz,) + (3,) * 4) if R is None else _sym(R, 4).to_dense()
    n, u, E, B = state.n, state.u, fields.E, fields.B
    _check_resolved((n, u, P, Q, Rd, E, B), ("n", "u", "P", "Q", "R", "E", "B"))

    m, q = setup.mass, setup.q_charge
    g = _Grad(state.length)
    e = np.einsum
    gn, gu, gP, gQ = g(n), g(u), g(P), g(Q)      # index order: (z, deriv, ...)
    div_u = e("zii->z", gu)
    adv = lambda gf: e("zr,zr...->z...", u, gf)  # noqa: E731

    # continuity
    dn = -adv(gn) - n * div_u

    # momentum
    divP = e("zjij->zi", gP)
    du = -adv(gu) - divP / (m * n)[:, None] + (q / m) * (E + np.cross(u, B))

    # pressure
    dP = (-adv(gP) - e("zik,zkj->zij", P, gu) - e("zjk,zki->zij", P, gu)
          - P * div_u[:, None, None]
          + (q / m) * e("imn,zjm,zn->zij", EPS, P, B)
          + (q / m) * e("jmn,zim,zn->zij", EPS, P, B)
          - e("zkijk->zij", gQ))

    # heat flux, classical part
    gR = g(Rd)
    divP_r = e("zrkr->zk", gP)
    dQ = (-adv(gQ)
          - e("zijr,zrk->zijk", Q, gu) - e("zjkr,zri->zijk", Q, gu) - e("zkir,zrj->zijk", Q, gu)
          - Q * div_u[:, None, None, None]
          - e("zrijkr->zijk", gR)
          + (e("zij,zk->zijk", P, divP_r) + e("zjk,zi->zijk", P, divP_r)
             + e("zki,zj->zijk", P, divP_r)) / (m * n)[:, None, None, None]
          + (q / m) * (e("irs,zrjk,zs->zijk", EPS, Q, B) + e("jrs,zrki,zs->zijk", EPS, Q, B)
                       + e("krs,zrij,zs->zijk", EPS, Q, B)))

    if quantum and setup.hbar != 0:
        h2 = setup.hbar**2
        gB = g(B)                                  # (z, l, k) = d_l B_k
        # pressure: eps_ikl d_l (n d_j B_k) + (i <-> j)
        flux = g(n[:, None, None] * gB)            # (z, l, j, k) = d_l (n d_j B_k)
        t = e("ikl,zljk->zij", EPS, flux)
        dP = dP + (q * h2 / (12 * m**2)) * (t + e("zij->zji", t))

        nn = n[:, None, None, None]
        ggE = g(g(E))                              # (z, a, b, k) = d_a d_b E_k
        hessE = ggE + e("zjki->zijk", ggE) + e("zkij->zijk", ggE)
        gB2 = g(e("zk,zk->z", B, B))
        dB2 = e("ij,zk->zijk", DELTA, gB2) + e("jk,zi->zijk", DELTA, gB2) + e("ki,zj->zijk", DELTA, gB2)
        ggB = g(gB)                                # (z, a, b, k) = d_a d_b B_k
        ucross = e("imn,zm,zabn->ziab", EPS, u, ggB)   # (u x d_a d_b B)_i
        uxB = ucross + e("zjki->zijk", ucross) + e("zkij->zijk", ucross)
        # eps_irs d_j B_r d_s u_k  ->  (z, i, j, k)
        T = e("irs,zjr,zsk->zijk", EPS, gB, gu)
        bu = (T + e("zikj->zijk", T)                   # eps_i: (j,k) + (k,j)
              + e("zjki->zijk", T) + e("zjik->zijk", T)  # eps_j: (k,i) + (i,k)
              + e("zkij->zijk", T) + e("zkji->zijk", T))  # eps_k: (i,j) + (j,i)
        BB = g(e("zj,zk->zjk", B, B))              # (z, i, j, k) = d_i (B_j B_k)
        dBB = BB + e("zjki->zijk", BB) + e("zkij->zijk", BB)
        dQ = dQ + nn * ((-q * h2 / (12 * m**2)) * hessE
                        + (q**2 * h2 / (12 * m**3)) * dB2
                        - (q * h2 / (12 * m**2)) * uxB
                        + (q * h2 / (12 * m**2)) * bu
                        - (q**2 * h2 / (12 * m**3)) * dBB)

    return HierarchyRates(dn, du, SymTensor.from_dense_rank(dP, 2), SymTensor.from_dense_rank(dQ, 3))


# ---------------------------------------------------------------------------
# linearized transverse system

BASE_LABELS = ("u_x", "P_xz", "Q_xzz", "E_x", "B_y")
CLOSURE_LABELS = BASE_LABELS + ("R_xzzz", "S_xzzzz")


def transverse_labels(closure: bool) -> tuple[str, ...]:
    return CLOSURE_LABELS if closure else BASE_LABELS


@dataclass
class TransverseLinearSystem:
    """dX/dt = M X for amplitudes X exp(i k z); an eigenvalue lam gives omega = i lam."""

    k: float
    labels: tuple
    matrix: np.ndarray
    closure: bool
    setup: PhysicalSetup = field(repr=False, default=None)

    def eigenvalues(self) -> np.ndarray:
        return np.linalg.eigvals(self.matrix)

    def frequencies(self) -> np.ndarray:
        return 1j * self.eigenvalues()

    def physical_frequencies(self, rel_floor: float = 1e-6) -> np.ndarray:
        """Frequencies with the trivially zero modes removed."""
        w = self.frequencies()
        floor = rel_floor * (self.setup.omega_p if self.setup is not None else 1.0)
        return w[np.abs(w) > floor]

    def to_csv(self, path=None) -> str:
        rows = []
        for i, ri in enumerate(self.labels):
            for j, cj in enumerate(self.labels):
                v = self.matrix[i, j]
                rows.append((ri, cj, v.real, v.imag))
        return csvio.write(path, ["row", "col", "re", "im"], rows)


def build_transverse_system(k: float, setup: PhysicalSetup, eq: EquilibriumPressure,
                            closure: bool = True) -> TransverseLinearSystem:
    """Linear system for x-polarized transverse waves along z.

    With the closure on, the fourth moment is carried by the augmented
    amplitudes R_xzzz and S_xzzzz, whose hbar^2 evolution reproduces the
    harmonic closure for any frequency. Without it R is zero.
    """
    if k < 0:
        raise ValueError("k must be non-negative")
    m, q, n0, h2 = setup.mass, setup.q_charge, setup.n0, setup.hbar**2
    pp, pz = eq.p_perp, eq.p_par
    ik = 1j * k
    labels = transverse_labels(closure)
    idx = {name: i for i, name in enumerate(labels)}
    M = np.zeros((len(labels), len(labels)), dtype=complex)

    def put(row, col, val):
        M[idx[row], idx[col]] += val

    put("u_x", "P_xz", -ik / (m * n0))
    put("u_x", "E_x", q / m)

    put("P_xz", "u_x", -ik * pz)
    put("P_xz", "B_y", (q / m) * (pp - pz) - q * h2 * n0 * k**2 / (12 * m**2))
    put("P_xz", "Q_xzz", -ik)

    put("Q_xzz", "P_xz", ik * pz / (m * n0))
    put("Q_xzz", "E_x", q * h2 * n0 * k**2 / (12 * m**2))

    put("E_x", "B_y", -ik * setup.c_light**2)
    put("E_x", "u_x", -q * n0 / setup.eps0)
    put("B_y", "E_x", -ik)

    if closure:
        pref = q * h2 / (12 * m**3)
        put("Q_xzz", "R_xzzz", -ik)
        put("R_xzzz", "B_y", -pref * (6 * pz - 3 * pp) * k**2)
        put("R_xzzz", "S_xzzzz", -ik)
        put("S_xzzzz", "E_x", 6 * pref * pz * k**2)

    return TransverseLinearSystem(k=float(k), labels=labels, matrix=M, closure=closure, setup=setup)


# ---------------------------------------------------------------------------
# export

def _component_rows(z, name, arr, rank):
    if rank == 0:
        for zi, v in zip(z, arr):
            yield (zi, name, "scalar", v)
        return
    if rank == 1:
        for c in range(3):
            for zi, v in zip(z, arr[:, c]):
                yield (zi, name, _AXES[c], v)
        return
    for pos, idx in enumerate(canonical_indices(rank)):
        label = "".join(_AXES[i] for i in idx)
        for zi, v in zip(z, arr.components[:, pos]):
            yield (zi, name, label, v)


def export_profiles_csv(z, profiles: dict, path=None) -> str:
    """Write named profiles as ``z,field,component,value`` rows.

    Values may be scalar arrays (Nz,), vectors (Nz, 3) or batched SymTensors.
    """
    rows = []
    for name, arr in profiles.items():
        if isinstance(arr, SymTensor):
            rows.extend(_component_rows(z, name, arr, arr.rank))
        else:
            arr = np.asarray(arr)
            rows.extend(_component_rows(z, name, arr, arr.ndim - 1))
    return csvio.write(path, ["z", "field", "component", "value"], rows)


def state_profiles(state: FluidState1D) -> dict:
    return {"n": state.n, "u": state.u, "P": state.P, "Q": state.Q}


def rate_profiles(rates: HierarchyRates) -> dict:
    return {"dn": rates.dn, "du": rates.du, "dP": rates.dP, "dQ": rates.dQ}


__all__ += ["state_profiles", "rate_profiles"]


# ---------------------------------------------------------------------------
# finite-difference consistency

def _transverse_state(z, length, n0, P0, X, k, eps):
    """Equilibrium plus eps * Re(X exp(ikz)) on the transverse amplitudes."""
    import itertools

    nz = z.size
    wave = lambda a: eps * np.real(a * np.exp(1j * k * z))  # noqa: E731
    u = np.zeros((nz, 3))
    u[:, 0] = wave(X[0])
    P = np.broadcast_to(P0, (nz, 3, 3)).copy()
    P[:, 0, 2] += wave(X[1])
    P[:, 2, 0] = P[:, 0, 2]
    Q = np.zeros((nz, 3, 3, 3))
    for idx in set(itertools.permutations((0, 2, 2))):
        Q[(slice(None),) + idx] = wave(X[2])
    E = np.zeros((nz, 3))
    B = np.zeros((nz, 3))
    E[:, 0] = wave(X[3])
    B[:, 1] = wave(X[4])
    R = np.zeros((nz,) + (3,) * 4)
    if len(X) > 5:
        for idx in set(itertools.permutations((0, 2, 2, 2))):
            R[(slice(None),) + idx] = wave(X[5])
    state = FluidState1D(z, np.full(nz, n0), u, P, Q, length)
    return state, FieldProfiles(E, B, length), SymTensor.from_dense_rank(R, 4, symmetric=True)


def linearization_errors(setup: PhysicalSetup, eq: EquilibriumPressure, eps_values=(1e-3, 5e-4, 2.5e-4),
                         directions: int = 20, seed: int = 0, closure: bool = True,
                         nz: int = 64, length: float = 2 * np.pi, mode: int = 2) -> np.ndarray:
    """Worst relative mismatch between finite-difference rates and the linear action.

    For each random transverse direction X the full right-hand side at
    equilibrium + eps X, divided by eps, is compared over every component
    with its first-order prediction: M X on (u_x, P_xz, Q_xzz), the slaved
    heat-flux rates dQ_xxx = 3 P_perp ik P_xz / (m n0) and
    dQ_xyy = P_perp ik P_xz / (m n0), and zero elsewhere. Returns an array
    of shape (len(eps_values),).
    """
    rng = np.random.default_rng(seed)
    k = 2 * np.pi * mode / length
    z = np.arange(nz) * length / nz
    system = build_transverse_system(k, setup, eq, closure)
    P0 = eq.tensor()
    base = eval_hierarchy_rhs(*_transverse_state(z, length, setup.n0, P0, np.zeros(len(system.labels)), k, 0.0)[:2],
                              setup)
    worst = np.zeros(len(eps_values))
    wave = lambda a: np.real(a * np.exp(1j * k * z))  # noqa: E731
    for _ in range(directions):
        X = rng.normal(size=len(system.labels)) + 1j * rng.normal(size=len(system.labels))
        MX = system.matrix @ X
        slaved = 1j * k * eq.p_perp * X[1] / (setup.mass * setup.n0)
        pred_u = np.zeros((nz, 3))
        pred_u[:, 0] = wave(MX[0])
        pred_P = np.zeros((nz, 3, 3))
        pred_P[:, 0, 2] = pred_P[:, 2, 0] = wave(MX[1])
        pred_Q = SymTensor.zeros(3, (nz,))
        pred_Q.components[:, pred_Q.position((0, 2, 2))] = wave(MX[2])
        pred_Q.components[:, pred_Q.position((0, 0, 0))] = wave(3 * slaved)
        pred_Q.components[:, pred_Q.position((0, 1, 1))] = wave(slaved)
        pred_P = SymTensor.from_dense_rank(pred_P, 2, symmetric=True)
        scale = np.abs(MX[:3]).max()
        for i, eps in enumerate(eps_values):
            state, fields, R = _transverse_state(z, length, setup.n0, P0, X, k, eps)
            r = eval_hierarchy_rhs(state, fields, setup, R=R if closure else None)
            err = max(np.abs((r.dn - base.dn) / eps).max(),
                      np.abs((r.du - base.du) / eps - pred_u).max(),
                      np.abs((r.dP.components - base.dP.components) / eps - pred_P.components).max(),
                      np.abs((r.dQ.components - base.dQ.components) / eps - pred_Q.components).max())
            worst[i] = max(worst[i], err / scale)
    return worst


__all__.append("linearization_errors")


def eigen_consistency(ks, setup: PhysicalSetup, eq: EquilibriumPressure, closure: bool = True):
    """Check the linear system's frequencies against the fluid cubic.

    With the closure the full cubic is used, without it the cubic with the
    hbar^2 term removed. Returns (worst normalized cubic residual over all
    nonzero frequencies, worst relative gap between the largest real
    frequency and the cubic's electromagnetic root).
    """
    from .dispersion import cubic_residual, fluid_dispersion_roots

    worst_res = worst_em = 0.0
    for k in np.atleast_1d(ks):
        system = build_transverse_system(float(k), setup, eq, closure)
        w = system.physical_frequencies()
        if w.size:
            worst_res = max(worst_res, float(cubic_residual(w**2, k, setup, eq, quantum=closure).max()))
        em = fluid_dispersion_roots(float(k), setup, eq, quantum=closure).omega
        worst_em = max(worst_em, abs(np.abs(w.real).max() - em) / em)
    return worst_res, worst_em


__all__.append("eigen_consistency")
