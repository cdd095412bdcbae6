"""Finite-lattice Hamiltonians, compact localized states and time evolution.

Sites are indexed (m, n, s) with cell coordinates 0 <= m < M, 0 <= n < N and
sublattice s in {A=0, B=1, C=2}; the flat index is (m*N + n)*3 + s. A model
coupling (from_sub -> to_sub, (dm, dn), z) contributes

    H[(m, n, to_sub), (m + dm, n + dn, from_sub)] += z

for every cell (m, n): with periodic boundary the target cell wraps modulo
(M, N), with open boundary out-of-range targets are dropped.
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass

import numpy as np
from scipy import sparse
from scipy.linalg import expm
from scipy.optimize import linear_sum_assignment

from .bloch import (bloch_entries, flat_band_energy, flat_band_residual,
                    is_chiral_phase, order_bands)
from .models import A, B, C, LIEB_OFFSETS

DENSE_BUDGET = 3000  # largest Hamiltonian dimension the dense paths accept

CLS_CONDITION_TOL = 1e-12
CLS_RESIDUAL_TOL = 1e-12


@dataclass(frozen=True, eq=False)
class RealLattice:
    """Sparse Hamiltonian of `model` on an M x N cell grid."""

    model: object
    M: int
    N: int
    boundary: str
    matrix: sparse.csr_matrix

    @property
    def num_sites(self):
        return 3 * self.M * self.N

    def site_index(self, m, n, s):
        if not (0 <= m < self.M and 0 <= n < self.N and 0 <= s < 3):
            raise ValueError(f"site ({m}, {n}, {s}) outside {self.M}x{self.N} lattice")
        return (m * self.N + n) * 3 + s

    def site_at(self, index):
        cell, s = divmod(int(index), 3)
        m, n = divmod(cell, self.N)
        return m, n, s


def assemble(model, M, N, boundary="open"):
    """Build the real-space Hamiltonian.

    boundary : "open" drops couplings leaving the grid, "periodic" wraps them
    (requires M, N >= 2 so a wrapped bond cannot alias onto its own cell twice).
    """
    M, N = int(M), int(N)
    if boundary not in ("open", "periodic"):
        raise ValueError(f"boundary must be 'open' or 'periodic', got {boundary!r}")
    if M < 1 or N < 1:
        raise ValueError(f"lattice must have at least one cell, got {M}x{N}")
    if boundary == "periodic" and (M < 2 or N < 2):
        raise ValueError("periodic boundary needs M, N >= 2")

    dim = 3 * M * N
    rows, cols, vals = [], [], []

    def index(m, n, s):
        return (m * N + n) * 3 + s

    for c in model.couplings:
        dm, dn = c.cell_offset
        for m in range(M):
            for n in range(N):
                mm, nn = m + dm, n + dn
                if boundary == "periodic":
                    mm %= M
                    nn %= N
                elif not (0 <= mm < M and 0 <= nn < N):
                    continue
                rows.append(index(m, n, c.to_sublattice))
                cols.append(index(mm, nn, c.from_sublattice))
                vals.append(c.amplitude)
    for s, v in enumerate(model.onsite):
        if v == 0:
            continue
        for m in range(M):
            for n in range(N):
                rows.append(index(m, n, s))
                cols.append(index(m, n, s))
                vals.append(complex(v))

    H = sparse.coo_matrix((vals, (rows, cols)), shape=(dim, dim), dtype=complex)
    return RealLattice(model=model, M=M, N=N, boundary=boundary, matrix=H.tocsr())


def spectrum_realspace(lattice):
    """All eigenvalues of the finite Hamiltonian, (Re, Im)-sorted.

    Dense solve; refuses dimensions above 3000 rather than silently thrash.
    """
    dim = lattice.num_sites
    if dim > DENSE_BUDGET:
        raise ValueError(f"dense spectrum limited to dimension {DENSE_BUDGET}, got {dim}")
    E = np.linalg.eigvals(lattice.matrix.toarray())
    E, _ = order_bands(E.reshape(1, -1))
    return E[0]


def fourier_consistency(model, M, N):
    """Max distance between the periodic-lattice spectrum and the union of
    Bloch eigenvalues over the allowed momenta 2*pi*j/M, 2*pi*l/N.

    The two multisets are matched by minimum-cost assignment; the returned
    value is the largest matched distance.
    """
    lattice = assemble(model, M, N, boundary="periodic")
    real_E = spectrum_realspace(lattice)
    kxs = 2.0 * math.pi * np.arange(M) / M
    kys = 2.0 * math.pi * np.arange(N) / N
    KX, KY = np.meshgrid(kxs, kys, indexing="ij")
    bloch_E = np.linalg.eigvals(bloch_entries(model, KX, KY)).ravel()
    cost = np.abs(real_E[:, None] - bloch_E[None, :])
    rows, cols = linear_sum_assignment(cost)
    return float(cost[rows, cols].max())


# ---------------------------------------------------------------------------
# Compact localized states
# ---------------------------------------------------------------------------

@dataclass(frozen=True, eq=False)
class CLSState:
    """Eigenvector supported on a fixed handful of sites.

    amplitudes : dense state vector over the whole lattice
    support    : flat indices of the (potentially) nonzero entries
    energy     : eigenvalue the state was built for
    residual   : |H psi - E psi| / |psi| measured on the assembled matrix
    """

    amplitudes: np.ndarray
    support: tuple
    energy: complex
    residual: float
    cells: tuple


def _verify_cls(lattice, psi, energy, tol):
    residual = float(np.linalg.norm(lattice.matrix @ psi - energy * psi)
                     / np.linalg.norm(psi))
    if residual > tol:
        raise ValueError(f"candidate state misses eigen-residual tolerance: "
                         f"{residual:.3e} > {tol:.1e}")
    return residual


def make_cls_single(model, cell, lattice, tol=CLS_RESIDUAL_TOL):
    """Single-cell compact state (-1, 0, 1) at `cell`, energy -J cos(phi).

    Requires the balanced-dimer condition |gamma - J sin(phi)| <= 1e-12; the
    construction then works for every hub-form model, either boundary and any
    cell, because the B rows see A and C with equal weights and cancel.
    """
    params = model.params
    if not model.b_offsets:
        raise ValueError(
            f"{model.name!r} couples B to A and C through different offset sets; "
            "its flat-band eigenvector is momentum-dependent and not compact")
    if flat_band_residual(params) > CLS_CONDITION_TOL:
        raise ValueError(
            f"single-cell compact state needs gamma = J sin(phi); "
            f"gamma = {params.gamma}, J sin(phi) = {params.J * math.sin(params.phi)}")
    m, n = (int(v) for v in cell)
    ia = lattice.site_index(m, n, A)
    ic = lattice.site_index(m, n, C)
    psi = np.zeros(lattice.num_sites, dtype=complex)
    psi[ia] = -1.0
    psi[ic] = 1.0
    energy = complex(flat_band_energy(params))
    residual = _verify_cls(lattice, psi, energy, tol)
    return CLSState(amplitudes=psi, support=(ia, ic), energy=energy,
                    residual=residual, cells=((m, n),))


def cls_partner_cells(lattice, cell):
    m, n = cell
    if lattice.boundary == "periodic":
        return ((m + 1) % lattice.M, n), (m, (n + 1) % lattice.N)
    return (m + 1, n), (m, n + 1)


def make_cls_three(model, corner_cells, lattice, tol=CLS_RESIDUAL_TOL):
    """Three-cell compact state at a chiral phase (cos(phi) = 0), energy 0.

    corner_cells must be (c, c + x, c + y) for some cell c, in any order of
    the two shifted cells (periodic wrapping allowed). Amplitudes: -1 on all
    three A sites, +1 on all three C sites, i (J sin(phi) - gamma)/kappa on
    the B site of the corner cell c, zero on the other B sites. At gamma = J
    the B amplitude closes to zero and the state degenerates to three
    single-cell states.
    """
    params = model.params
    if not is_chiral_phase(params.phi):
        raise ValueError(
            f"three-cell compact state exists only at chiral phases "
            f"(cos phi = 0); got phi = {params.phi}")
    if model.has_bb_coupling:
        raise ValueError(f"{model.name!r} couples B sites directly; the three-cell "
                         "construction does not close on it")
    if tuple(sorted(model.b_offsets)) != tuple(sorted(LIEB_OFFSETS)):
        raise ValueError(
            f"three-cell construction requires B-row offsets {sorted(LIEB_OFFSETS)}, "
            f"got {sorted(model.b_offsets)}")

    cells = [tuple(int(v) for v in c) for c in corner_cells]
    if len(cells) != 3:
        raise ValueError(f"need exactly three cells, got {len(cells)}")
    c1 = cells[0]
    expected = set(cls_partner_cells(lattice, c1))
    if set(cells[1:]) != expected:
        raise ValueError(
            f"cells {cells[1:]} are not the (+x, +y) neighbours of {c1}; "
            f"expected {sorted(expected)}")

    sigma = 1.0 if abs(params.phi - 0.5 * math.pi) < math.pi / 2 else -1.0
    psi_b1 = complex(0.0, (params.J * sigma - params.gamma) / params.kappa)

    psi = np.zeros(lattice.num_sites, dtype=complex)
    support = []
    for cell in cells:
        ia = lattice.site_index(cell[0], cell[1], A)
        ic = lattice.site_index(cell[0], cell[1], C)
        psi[ia] = -1.0
        psi[ic] = 1.0
        support.extend((ia, ic))
    ib = lattice.site_index(c1[0], c1[1], B)
    psi[ib] = psi_b1
    support.append(ib)

    energy = 0.0 + 0.0j
    residual = _verify_cls(lattice, psi, energy, tol)
    return CLSState(amplitudes=psi, support=tuple(sorted(support)), energy=energy,
                    residual=residual, cells=tuple(cells))


# ---------------------------------------------------------------------------
# Time evolution
# ---------------------------------------------------------------------------

@dataclass(frozen=True, eq=False)
class EvolutionTrace:
    """Per-site intensities |psi_i(t)|^2 on a uniform time grid.

    intensities has shape (num_steps + 1, num_sites); total_norm is the
    squared norm at each time, recorded rather than renormalized away so
    gain/loss growth stays visible.
    """

    times: np.ndarray
    intensities: np.ndarray
    total_norm: np.ndarray
    final_state: np.ndarray
    dt: float


def evolve(lattice, psi0, t_end, dt=None):
    """Propagate psi0 under exp(-i H t), sampling every dt.

    One scaling-and-squaring matrix exponential of -i H dt is computed and
    reapplied, which stays valid at exceptional points where an
    eigendecomposition would be defective. Raises FloatingPointError the
    first time an amplitude overflows to non-finite (strong gain does this
    eventually; the trace is not silently renormalized).
    """
    if dt is None:
        dt = 0.01 / lattice.model.params.kappa
    dt = float(dt)
    if dt <= 0 or not math.isfinite(dt):
        raise ValueError(f"dt must be positive and finite, got {dt}")
    t_end = float(t_end)
    if t_end < 0:
        raise ValueError(f"t_end must be non-negative, got {t_end}")
    dim = lattice.num_sites
    if dim > DENSE_BUDGET:
        raise ValueError(f"dense propagator limited to dimension {DENSE_BUDGET}, got {dim}")
    psi = np.asarray(psi0, dtype=complex).reshape(-1)
    if psi.shape != (dim,):
        raise ValueError(f"state length {psi.shape[0]} does not match {dim} sites")

    steps = int(round(t_end / dt))
    U = expm(-1j * dt * lattice.matrix.toarray())

    times = np.arange(steps + 1) * dt
    intensities = np.empty((steps + 1, dim), dtype=float)
    total_norm = np.empty(steps + 1, dtype=float)
    with np.errstate(over="ignore", invalid="ignore"):
        for step in range(steps + 1):
            if step > 0:
                psi = U @ psi
            intensities[step] = np.abs(psi) ** 2
            total_norm[step] = float(np.sum(intensities[step]))
            if not (np.all(np.isfinite(psi)) and np.all(np.isfinite(intensities[step]))):
                raise FloatingPointError(
                    f"state amplitudes overflowed at t = {times[step]:.6g} "
                    f"(step {step}); gain has outrun double precision")
    return EvolutionTrace(times=times, intensities=intensities,
                          total_norm=total_norm, final_state=psi, dt=dt)


def export_trace_csv(trace, lattice, fileobj):
    """Write `t,site_m,site_n,sublattice,intensity` rows, sites in index order."""
    fmt = lambda x: format(float(x), ".17g")
    fileobj.write("t,site_m,site_n,sublattice,intensity\n")
    sites = [lattice.site_at(i) for i in range(lattice.num_sites)]
    for step, t in enumerate(trace.times):
        ts = fmt(t)
        row = trace.intensities[step]
        for i, (m, n, s) in enumerate(sites):
            fileobj.write(f"{ts},{m},{n},{s},{fmt(row[i])}\n")


def state_to_json(psi):
    from .models import render_json
    return render_json({"state": [[v.real, v.imag] for v in np.asarray(psi).ravel()]})


def state_from_json(text):
    data = json.loads(text)
    if isinstance(data, dict):
        data = data["state"]
    return np.array([complex(re, im) for re, im in data], dtype=complex)
