"""Bloch matrices, characteristic cubics and closed-form band solvers.

For the hub-form models the Bloch matrix at k = (kx, ky) is

        [ -i gamma        kappa L*(k)    J e^{-i phi} ]
        [ kappa L(k)      0              kappa L(k)   ]
        [ J e^{+i phi}    kappa L*(k)    +i gamma     ]

with L(k) = sum over offsets of e^{i k . delta}. The matrix is traceless, so
its characteristic polynomial is the depressed cubic E^3 + p E + q with

    p = -(2 kappa^2 s_k + J^2 - gamma^2),      s_k = |L(k)|^2
    q = -2 kappa^2 s_k J cos(phi)

once gamma = J sin(phi) restores real coefficients. Roots are then obtained
exactly by the trigonometric / Cardano formulas; a numerical eigensolver path
covers every other model (nonzero trace, complex coefficients).
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .models import A, B, C

TWO_PI = 2.0 * math.pi

#: permutation exchanging A and C; time-reversal acts as R conj(H(k)) R = H(-k)
SUBLATTICE_EXCHANGE = np.array([[0, 0, 1], [0, 1, 0], [1, 0, 0]], dtype=float)

#: signed exchange; chiral symmetry acts as S H(k) S = -H(k)
SIGNED_EXCHANGE = np.array([[0, 0, 1], [0, -1, 0], [1, 0, 0]], dtype=float)

TRACE_TOL = 1e-12


def wrap_momentum(kx, ky=None):
    """Wrap momentum components into [-pi, pi). Accepts scalars or arrays."""
    if ky is None:
        kx, ky = kx
    wx = (np.asarray(kx) + math.pi) % TWO_PI - math.pi
    wy = (np.asarray(ky) + math.pi) % TWO_PI - math.pi
    if np.ndim(wx) == 0 and np.ndim(wy) == 0:
        return float(wx), float(wy)
    return wx, wy


@dataclass(frozen=True)
class Momentum:
    """Bloch momentum, components wrapped to [-pi, pi)."""

    kx: float
    ky: float

    def __post_init__(self):
        wx, wy = wrap_momentum(self.kx, self.ky)
        object.__setattr__(self, "kx", wx)
        object.__setattr__(self, "ky", wy)

    def __iter__(self):
        return iter((self.kx, self.ky))


def _unpack_k(k):
    kx, ky = k
    return float(kx), float(ky)


def structure_factor(offsets, kx, ky):
    """L(k) = sum_j e^{i (kx*dm_j + ky*dn_j)}; kx, ky may be arrays."""
    kx = np.asarray(kx, dtype=float)
    ky = np.asarray(ky, dtype=float)
    total = np.zeros(np.broadcast(kx, ky).shape, dtype=complex)
    for dm, dn in offsets:
        total = total + np.exp(1j * (kx * dm + ky * dn))
    if total.ndim == 0:
        return complex(total)
    return total


def s_k(kx, ky, offsets=((0, 0), (0, 1), (1, 0))):
    """Squared structure-factor magnitude |L(k)|^2.

    For the default three offsets this equals
    2 cos(kx - ky) + 2 cos kx + 2 cos ky + 3, ranging over [0, 9]: maximum 9
    at (0, 0), value 1 at the saddles (pi, pi), (0, pi), (pi, 0), and zeros at
    +/- (2 pi/3, -2 pi/3).
    """
    lam = structure_factor(offsets, kx, ky)
    out = np.abs(np.asarray(lam)) ** 2
    if out.ndim == 0:
        return float(out)
    return out


@dataclass(frozen=True, eq=False)
class BlochMatrix:
    """3x3 Bloch Hamiltonian at a single momentum."""

    entries: np.ndarray
    momentum: Momentum

    def __post_init__(self):
        e = np.asarray(self.entries, dtype=complex)
        if e.shape != (3, 3):
            raise ValueError(f"Bloch matrix must be 3x3, got {e.shape}")
        object.__setattr__(self, "entries", e)


def bloch_entries(model, kx, ky):
    """Stacked Bloch matrices for arrays kx, ky (shape broadcast + (3, 3))."""
    kx = np.asarray(kx, dtype=float)
    ky = np.asarray(ky, dtype=float)
    shape = np.broadcast(kx, ky).shape
    H = np.zeros(shape + (3, 3), dtype=complex)
    for c in model.couplings:
        dm, dn = c.cell_offset
        phase = np.exp(1j * (kx * dm + ky * dn))
        H[..., c.to_sublattice, c.from_sublattice] += c.amplitude * phase
    for s in range(model.num_sublattices):
        H[..., s, s] += model.onsite[s]
    return H


def build_bloch(model, k):
    """Bloch matrix of `model` at momentum `k` (pair or Momentum)."""
    kx, ky = _unpack_k(k)
    return BlochMatrix(entries=bloch_entries(model, kx, ky), momentum=Momentum(kx, ky))


@dataclass(frozen=True)
class CubicCoeffs:
    """Depressed cubic E^3 + p E + q (valid only for traceless Bloch matrices)."""

    p: complex
    q: complex

    @property
    def is_real(self):
        scale = max(1.0, abs(self.p), abs(self.q))
        return abs(self.p.imag) <= 1e-12 * scale and abs(self.q.imag) <= 1e-12 * scale


def char_poly_coeffs(H):
    """Coefficients (trace, c1, c0) of det(E - H) = E^3 - tr*E^2 + c1*E - c0.

    Works on stacked matrices of shape (..., 3, 3).
    """
    H = np.asarray(H, dtype=complex)
    tr = np.trace(H, axis1=-2, axis2=-1)
    tr2 = np.trace(H @ H, axis1=-2, axis2=-1)
    c1 = 0.5 * (tr * tr - tr2)
    a, b, c = H[..., 0, 0], H[..., 0, 1], H[..., 0, 2]
    d, e, f = H[..., 1, 0], H[..., 1, 1], H[..., 1, 2]
    g, h, i = H[..., 2, 0], H[..., 2, 1], H[..., 2, 2]
    c0 = a * (e * i - f * h) - b * (d * i - f * g) + c * (d * h - e * g)
    return tr, c1, c0


def characteristic(model, k):
    """Depressed-cubic coefficients of the Bloch matrix at momentum k.

    Raises ValueError when the matrix has a nonzero trace (threshold 1e-12
    relative to the entry scale); such models need the numerical solver.
    """
    kx, ky = _unpack_k(k)
    H = bloch_entries(model, kx, ky)
    tr, c1, c0 = char_poly_coeffs(H)
    scale = max(1.0, float(np.max(np.abs(H))))
    if abs(tr) > TRACE_TOL * scale:
        raise ValueError(
            f"Bloch matrix of {model.name!r} has nonzero trace {tr:.3e}; "
            "the depressed-cubic form does not apply")
    return CubicCoeffs(p=complex(c1), q=complex(-c0))


def _roots_depressed_real(p, q):
    """All real-coefficient depressed cubic roots, vectorized.

    p, q : float arrays of identical shape. Returns complex array
    shape + (3,), unordered. Uses the trigonometric formula for three real
    roots (Cardano radicand q^2/4 + p^3/27 < 0) and the Cardano/with-conjugate
    pair branch otherwise.
    """
    p = np.asarray(p, dtype=float)
    q = np.asarray(q, dtype=float)
    shape = np.broadcast(p, q).shape
    scalar_input = shape == ()
    if scalar_input:
        shape = (1,)
    p = np.broadcast_to(p, shape).copy()
    q = np.broadcast_to(q, shape).copy()
    roots = np.empty(shape + (3,), dtype=complex)

    radicand = 0.25 * q * q + p * p * p / 27.0
    trig = radicand <= 0  # three real roots (p <= 0 necessarily)

    # trigonometric branch
    pt, qt = p[trig], q[trig]
    amp = 2.0 * np.sqrt(np.maximum(-pt / 3.0, 0.0))
    # cos(3 theta) = 3 q / (p * amp); amp = 0 only when p = q = 0 (triple root)
    with np.errstate(divide="ignore", invalid="ignore"):
        cos3t = np.where(amp > 0, 3.0 * qt / (pt * amp), 0.0)
    theta = np.arccos(np.clip(cos3t, -1.0, 1.0)) / 3.0
    for j in range(3):
        roots[trig, j] = amp * np.cos(theta - TWO_PI * j / 3.0)

    # one real root plus a conjugate pair
    pc, qc = p[~trig], q[~trig]
    rc = radicand[~trig]
    t = -0.5 * qc
    d = np.sqrt(np.maximum(rc, 0.0))
    w = np.where(t >= 0, t + d, t - d)  # avoid cancellation picking the small branch
    u = np.cbrt(w)
    with np.errstate(divide="ignore", invalid="ignore"):
        v = np.where(u != 0, -pc / (3.0 * u), 0.0)
    real_root = u + v
    re_pair = -0.5 * real_root
    im_pair = 0.5 * math.sqrt(3.0) * (u - v)
    roots[~trig, 0] = real_root
    roots[~trig, 1] = re_pair + 1j * im_pair
    roots[~trig, 2] = re_pair - 1j * im_pair
    if scalar_input:
        return roots[0]
    return roots


def order_bands(energies, eigenvectors=None):
    """Sort 3 energies (last axis) ascending by real part, then imaginary part."""
    energies = np.asarray(energies, dtype=complex)
    order = np.lexsort((energies.imag, energies.real))
    sorted_E = np.take_along_axis(energies, order, axis=-1)
    if eigenvectors is None:
        return sorted_E, None
    vecs = np.take_along_axis(np.asarray(eigenvectors), order[..., None, :], axis=-1)
    return sorted_E, vecs


@dataclass(frozen=True, eq=False)
class BandSet:
    """Three band energies at one momentum, ascending by (Re, Im).

    eigenvectors, when present, holds unit-norm column vectors aligned with
    the energy ordering.
    """

    energies: np.ndarray
    eigenvectors: np.ndarray = None

    def __post_init__(self):
        e = np.asarray(self.energies, dtype=complex)
        if e.shape != (3,):
            raise ValueError("BandSet holds exactly three energies")
        object.__setattr__(self, "energies", e)


def solve_bands_exact(coeffs):
    """Closed-form roots of a real depressed cubic as a BandSet.

    Raises ValueError when the coefficients carry imaginary parts beyond
    rounding dust (relative 1e-12); use solve_bands_numeric then.
    """
    if not coeffs.is_real:
        raise ValueError(
            f"cubic coefficients are not real (p={coeffs.p}, q={coeffs.q}); "
            "closed-form solver requires the balanced gain/loss condition")
    roots = _roots_depressed_real(coeffs.p.real, coeffs.q.real)
    energies, _ = order_bands(roots)
    return BandSet(energies=energies)


def solve_bands_numeric(H, with_vectors=True):
    """Eigen-decomposition of a Bloch matrix (BlochMatrix or 3x3 array)."""
    entries = H.entries if isinstance(H, BlochMatrix) else np.asarray(H, dtype=complex)
    if with_vectors:
        E, V = np.linalg.eig(entries)
        E, V = order_bands(E, V)
        V = V / np.linalg.norm(V, axis=0, keepdims=True)
        return BandSet(energies=E, eigenvectors=V)
    E, _ = order_bands(np.linalg.eigvals(entries))
    return BandSet(energies=E)


def characteristic_residual(band_set, coeffs):
    """max_j |E_j^3 + p E_j + q|, the defining residual of the band energies."""
    E = band_set.energies
    return float(np.max(np.abs(E ** 3 + coeffs.p * E + coeffs.q)))


# ---------------------------------------------------------------------------
# Flat-band condition and symmetry checks
# ---------------------------------------------------------------------------

CHIRAL_PHASE_TOL = 1e-12


def is_chiral_phase(phi):
    """True when phi is an odd multiple of pi/2 (cos phi = 0) within 1e-12."""
    r = phi % math.pi
    return abs(r - 0.5 * math.pi) < CHIRAL_PHASE_TOL


def flat_band_residual(params):
    """|gamma - J sin(phi)|, zero exactly on the flat-band manifold."""
    return abs(params.gamma - params.J * math.sin(params.phi))


def flat_band_energy(params):
    """Flat-band energy -J cos(phi), snapped to exactly 0 at chiral phases."""
    if is_chiral_phase(params.phi):
        return 0.0
    return -params.J * math.cos(params.phi)


def time_reversal_residual(model, k_samples):
    """max over samples of |R conj(H(k)) R - H(-k)| (entrywise absolute)."""
    R = SUBLATTICE_EXCHANGE
    worst = 0.0
    for k in k_samples:
        kx, ky = _unpack_k(k)
        Hk = bloch_entries(model, kx, ky)
        Hmk = bloch_entries(model, -kx, -ky)
        worst = max(worst, float(np.max(np.abs(R @ np.conj(Hk) @ R - Hmk))))
    return worst


def chiral_residual(model, k_samples):
    """max over samples of |S H(k) S + H(k)| with the signed exchange S."""
    S = SIGNED_EXCHANGE
    worst = 0.0
    for k in k_samples:
        kx, ky = _unpack_k(k)
        Hk = bloch_entries(model, kx, ky)
        worst = max(worst, float(np.max(np.abs(S @ Hk @ S + Hk))))
    return worst


def check_time_reversal(model, k_samples, tol=1e-12):
    return time_reversal_residual(model, k_samples) < tol


def check_chiral(model, k_samples, tol=1e-12):
    return chiral_residual(model, k_samples) < tol
