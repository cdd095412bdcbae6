"""Brillouin-zone scans, flat-band detection and band-intersection taxonomy.

The intersection classifier works on the discriminant of the depressed cubic
restricted to the flat-band manifold gamma = J sin(phi). With
r = J^2 cos^2(phi) / kappa^2 and the structure-factor weight w(k) = |L(k)|^2,
band degeneracies sit exactly on the level set w(k) = r, which for the
three-offset lattice family (w in [0, 9]) gives the taxonomy

    r > 9        : no intersection anywhere        (Separated)
    r = 9        : single touching point at (0,0)  (IsolatedEP)
    1 < r < 9    : one closed ring around (0,0)    (SingleEPRing)
    0 < r < 1    : two closed rings                (DoubleEPRing)
    cos(phi) = 0 : chiral limit, point/ring pair   (ChiralDegeneratePair)

The ring count is measured from the scanned grid (connected components of the
detected level set under periodic 4-connectivity), never assumed from r.
"""
from __future__ import annotations

import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np
from scipy import ndimage
from scipy.optimize import brentq, minimize

from .bloch import (Momentum, bloch_entries, char_poly_coeffs, flat_band_energy,
                    flat_band_residual, is_chiral_phase, order_bands,
                    _roots_depressed_real, s_k, wrap_momentum, TRACE_TOL)

TWO_PI = 2.0 * math.pi

KIND_SEPARATED = "Separated"
KIND_ISOLATED_EP = "IsolatedEP"
KIND_SINGLE_RING = "SingleEPRing"
KIND_DOUBLE_RING = "DoubleEPRing"
KIND_CHIRAL_PAIR = "ChiralDegeneratePair"

VERDICT_EP = "EP"
VERDICT_DP = "DP"
VERDICT_NONE = "NonDegenerate"

FLAT_MANIFOLD_TOL = 1e-9


@dataclass(frozen=True)
class BZGrid:
    """Uniform momentum grid: nx x ny points 2*pi*j/n wrapped into [-pi, pi).

    Both axes contain k = 0 exactly; nx, ny must be at least 8 so the level
    sets the classifier looks for cannot slip between grid lines entirely.
    """

    nx: int = 64
    ny: int = 64

    def __post_init__(self):
        if self.nx < 8 or self.ny < 8:
            raise ValueError(f"grid must be at least 8x8, got {self.nx}x{self.ny}")

    def axis(self, n):
        return np.sort((TWO_PI * np.arange(n) / n + math.pi) % TWO_PI - math.pi)

    @property
    def kx(self):
        return self.axis(self.nx)

    @property
    def ky(self):
        return self.axis(self.ny)

    def mesh(self):
        return np.meshgrid(self.kx, self.ky, indexing="ij")


@dataclass(frozen=True, eq=False)
class BandSurfaces:
    """Band energies over a BZGrid, shape (nx, ny, 3), (Re, Im)-sorted per point."""

    grid: BZGrid
    energies: np.ndarray
    eigenvectors: np.ndarray = None


def _solve_rows(H, exact, pq=None):
    if exact:
        p, q = pq
        roots = _roots_depressed_real(p, q)
        E, _ = order_bands(roots)
        return E
    E, _ = order_bands(np.linalg.eigvals(H))
    return E


def scan(model, grid, workers=None, with_vectors=False):
    """Band energies of `model` over `grid`.

    Uses the closed-form depressed-cubic solver whenever the Bloch matrices
    are traceless with real cubic coefficients across the whole grid (all
    balanced gain/loss hub models qualify), and the dense eigensolver
    otherwise. Results are identical, and byte-identical across `workers`
    settings; workers only splits the grid into row chunks.
    """
    KX, KY = grid.mesh()
    H = bloch_entries(model, KX, KY)
    scale = max(1.0, float(np.max(np.abs(H))))

    exact = False
    pq = None
    if not with_vectors:
        tr, c1, c0 = char_poly_coeffs(H)
        p, q = c1, -c0
        traceless = float(np.max(np.abs(tr))) <= TRACE_TOL * scale
        real_pq = (float(np.max(np.abs(p.imag))) <= 1e-12 * scale ** 2
                   and float(np.max(np.abs(q.imag))) <= 1e-12 * scale ** 3)
        if traceless and real_pq:
            exact = True
            pq = (p.real, q.real)

    if with_vectors:
        E, V = np.linalg.eig(H)
        E, V = order_bands(E, V)
        V = V / np.linalg.norm(V, axis=-2, keepdims=True)
        return BandSurfaces(grid=grid, energies=E, eigenvectors=V)

    if workers is None:
        workers = os.cpu_count() or 1
    workers = max(1, min(int(workers), grid.nx))

    if workers == 1:
        energies = _solve_rows(H, exact, pq)
        return BandSurfaces(grid=grid, energies=energies)

    energies = np.empty((grid.nx, grid.ny, 3), dtype=complex)
    bounds = np.linspace(0, grid.nx, workers + 1, dtype=int)
    chunks = [(int(a), int(b)) for a, b in zip(bounds[:-1], bounds[1:]) if b > a]

    def run(ab):
        a, b = ab
        sub_pq = (pq[0][a:b], pq[1][a:b]) if exact else None
        return a, b, _solve_rows(H[a:b], exact, sub_pq)

    with ThreadPoolExecutor(max_workers=workers) as pool:
        for a, b, E in pool.map(run, chunks):
            energies[a:b] = E
    return BandSurfaces(grid=grid, energies=energies)


@dataclass(frozen=True)
class FlatBandReport:
    """Grid-wide flatness verdict against the candidate energy.

    candidate          : -J cos(phi), snapped to 0 at chiral phases
    max_deviation      : max over k of min over bands |E - candidate|
    condition_residual : |gamma - J sin(phi)|
    is_flat            : max_deviation <= tol_flat
    """

    candidate: float
    max_deviation: float
    condition_residual: float
    is_flat: bool
    tol_flat: float


def flatness(model, grid=None, tol_flat=1e-9, surfaces=None):
    """Measure how far the nearest band stays from the flat-band candidate.

    A chiral phase (cos phi = 0) keeps the candidate at 0 regardless of gamma,
    so the report can come back flat even when gamma != J sin(phi).
    """
    if surfaces is None:
        surfaces = scan(model, grid or BZGrid())
    candidate = flat_band_energy(model.params)
    dev = np.min(np.abs(surfaces.energies - candidate), axis=-1)
    max_dev = float(np.max(dev))
    residual = flat_band_residual(model.params)
    return FlatBandReport(candidate=candidate, max_deviation=max_dev,
                          condition_residual=residual, is_flat=max_dev <= tol_flat,
                          tol_flat=tol_flat)


def discriminant(kappa, J, phi, s):
    """Cubic discriminant on the flat-band manifold, as a function of the
    structure-factor weight s:

        27 kappa^4 J^2 s^2 cos^2(phi) - (2 kappa^2 s + J^2 cos^2(phi))^3

    It factors as -(J^2 cos^2 phi - kappa^2 s)^2 (J^2 cos^2 phi + 8 kappa^2 s),
    hence never positive; zeros mark band degeneracies at s = J^2 cos^2(phi)
    / kappa^2. Accepts array s.
    """
    s = np.asarray(s, dtype=float)
    c2 = math.cos(phi) ** 2
    k2 = kappa * kappa
    out = 27.0 * k2 * k2 * J * J * s * s * c2 - (2.0 * k2 * s + J * J * c2) ** 3
    if out.ndim == 0:
        return float(out)
    return out


# ---------------------------------------------------------------------------
# Degeneracy probing
# ---------------------------------------------------------------------------

@dataclass(frozen=True, eq=False)
class DegeneracyProbe:
    """Local eigenstructure diagnosis at one momentum.

    verdict is "EP" when the two closest eigenvalues are within tol_E and the
    eigenvector matrix condition number exceeds cond_EP (eigenvectors
    coalesce), "DP" when they are within tol_E but the eigenvectors stay
    independent, and "NonDegenerate" otherwise.
    """

    momentum: Momentum
    verdict: str
    min_gap: float
    pair_energy: complex
    third_energy: complex
    condition_number: float
    energies: np.ndarray
    tol_E: float
    cond_EP: float


def probe_degeneracy(model, k, tol_E=None, cond_EP=1e3):
    kx, ky = (float(v) for v in k)
    H = bloch_entries(model, kx, ky)
    E, V = np.linalg.eig(H)
    E, V = order_bands(E, V)
    pairs = ((0, 1), (0, 2), (1, 2))
    gaps = [abs(E[i] - E[j]) for i, j in pairs]
    best = int(np.argmin(gaps))
    i, j = pairs[best]
    third = ({0, 1, 2} - {i, j}).pop()
    pair_energy = 0.5 * (E[i] + E[j])
    if tol_E is None:
        tol_E = 1e-6 * max(1.0, abs(pair_energy))
    cond = float(np.linalg.cond(V))
    if gaps[best] >= tol_E:
        verdict = VERDICT_NONE
    elif cond > cond_EP:
        verdict = VERDICT_EP
    else:
        verdict = VERDICT_DP
    return DegeneracyProbe(momentum=Momentum(kx, ky), verdict=verdict,
                           min_gap=float(gaps[best]), pair_energy=complex(pair_energy),
                           third_energy=complex(E[third]), condition_number=cond,
                           energies=E, tol_E=float(tol_E), cond_EP=float(cond_EP))


# ---------------------------------------------------------------------------
# Level-set extraction on the periodic grid
# ---------------------------------------------------------------------------

def _sign_change_mask(W, level):
    """Mark both endpoints of every grid edge where W - level changes sign.

    Tolerance-free: a transversal level curve always separates neighbouring
    grid values, and marking both endpoints keeps the marked set 4-connected
    along the curve.
    """
    f = W - level
    mask = np.zeros(W.shape, dtype=bool)
    for ax in (0, 1):
        g = np.roll(f, -1, axis=ax)
        cross = (f * g < 0) | ((f == 0) & (g != 0)) | ((f != 0) & (g == 0))
        mask |= cross
        mask |= np.roll(cross, 1, axis=ax)
    mask |= f == 0
    return mask


def _periodic_components(mask):
    """Connected components under periodic 4-connectivity.

    Returns (count, labels, canon) where labels comes from scipy.ndimage and
    canon maps each raw label to the canonical label of its wrapped component.
    """
    structure = np.array([[0, 1, 0], [1, 1, 1], [0, 1, 0]])
    labels, n = ndimage.label(mask, structure=structure)
    if n == 0:
        return 0, labels, {}
    parent = list(range(n + 1))

    def find(x):
        while parent[x] != x:
            parent[x] = parent[parent[x]]
            x = parent[x]
        return x

    def union(x, y):
        rx, ry = find(x), find(y)
        if rx != ry:
            parent[max(rx, ry)] = min(rx, ry)

    for a, b in zip(labels[0, :], labels[-1, :]):
        if a and b:
            union(int(a), int(b))
    for a, b in zip(labels[:, 0], labels[:, -1]):
        if a and b:
            union(int(a), int(b))
    canon = {lbl: find(lbl) for lbl in range(1, n + 1)}
    return len(set(canon.values())), labels, canon


def _edge_crossing_loci(W, level, grid, offsets):
    """Refined level-set points: one brentq root per sign-changing grid edge."""
    kxs, kys = grid.kx, grid.ky
    hx, hy = TWO_PI / grid.nx, TWO_PI / grid.ny
    f = W - level
    loci = []
    for axis, h in ((0, hx), (1, hy)):
        g = np.roll(f, -1, axis=axis)
        cross = f * g < 0
        for i, j in zip(*np.nonzero(cross)):
            k0x, k0y = float(kxs[i]), float(kys[j])
            if axis == 0:
                fn = lambda t: s_k(k0x + t, k0y, offsets) - level
            else:
                fn = lambda t: s_k(k0x, k0y + t, offsets) - level
            fa, fb = fn(0.0), fn(h)
            if fa == 0.0:
                t = 0.0
            elif fb == 0.0 or fa * fb > 0.0:
                # the crossing coincides with an endpoint to machine precision
                # (grid point on the level set); recomputation can flip its sign
                t = h
            else:
                t = brentq(fn, 0.0, h)
            kx, ky = (k0x + t, k0y) if axis == 0 else (k0x, k0y + t)
            loci.append(wrap_momentum(kx, ky))
    # grid points sitting exactly on the level set
    for i, j in zip(*np.nonzero(f == 0)):
        loci.append((float(kxs[i]), float(kys[j])))
    loci.sort()
    return loci


def _extremum_components(W, grid, mode, band):
    """One representative grid index per connected component of the
    near-extremal set {|W - extremum| <= band}, wrapped components merged."""
    ref = float(W.min()) if mode == "min" else float(W.max())
    mask = (W <= ref + band) if mode == "min" else (W >= ref - band)
    n, labels, canon = _periodic_components(mask)
    best = {}
    for i, j in zip(*np.nonzero(mask)):
        root = canon[int(labels[i, j])]
        v = float(W[i, j])
        cur = best.get(root)
        better = cur is None or (v < cur[0] if mode == "min" else v > cur[0])
        if better:
            best[root] = (v, int(i), int(j))
    seeds = [(i, j) for _, i, j in (best[r] for r in sorted(best))]
    return n, seeds


def _refine_extremum(grid, offsets, i, j, mode):
    k0 = np.array([grid.kx[i], grid.ky[j]])
    sign = 1.0 if mode == "min" else -1.0
    fun = lambda k: sign * s_k(k[0], k[1], offsets)
    val0 = fun(k0)
    res = minimize(fun, k0, method="Nelder-Mead",
                   options={"xatol": 1e-12, "fatol": 1e-24, "maxiter": 2000})
    k = res.x if res.fun <= val0 else k0
    return wrap_momentum(float(k[0]), float(k[1]))


def _per_cell_band(W):
    """Largest value change across one grid cell, the natural level resolution."""
    d = 0.0
    for ax in (0, 1):
        d = max(d, float(np.max(np.abs(np.roll(W, -1, axis=ax) - W))))
    return d


def _level_loci(W, level, grid, offsets, level_tol=None):
    """Count components of the level set {w = level} and return refined loci.

    Default detection marks sign-changing grid edges (tolerance-free). Passing
    a numeric level_tol switches to the thresholded set {|w - level| < tol}.
    Level sets smaller than one grid cell are recovered by descending to the
    nearby extremum and root-solving outward from it.
    """
    if level_tol is None:
        mask = _sign_change_mask(W, level)
    else:
        mask = np.abs(W - level) < level_tol
    if mask.any():
        n, _, _ = _periodic_components(mask)
        loci = _edge_crossing_loci(W, level, grid, offsets)
        return n, [Momentum(kx, ky) for kx, ky in loci]

    # sub-cell level set: only possible right above an extremum of w
    band = _per_cell_band(W)
    wmin = float(W.min())
    if not (wmin - band <= level <= wmin + band):
        return 0, []
    n, seeds = _extremum_components(W, grid, "min", band)
    loci = []
    found = 0
    hx = TWO_PI / grid.nx
    for i, j in seeds:
        km = _refine_extremum(grid, offsets, i, j, "min")
        w0 = s_k(km[0], km[1], offsets)
        if abs(w0 - level) <= 1e-9 * max(1.0, abs(level)):
            loci.append(Momentum(*km))
            found += 1
            continue
        if w0 > level:
            continue
        fn = lambda t: s_k(km[0] + t, km[1], offsets) - level
        hi = None
        for cand in (0.25 * hx, 0.5 * hx, hx, 2 * hx):
            if fn(cand) > 0:
                hi = cand
                break
        if hi is None:
            continue
        t = brentq(fn, 0.0, hi)
        loci.append(Momentum(*wrap_momentum(km[0] + t, km[1])))
        found += 1
    return found, loci


# ---------------------------------------------------------------------------
# Intersection taxonomy
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class IntersectionClassification:
    """Band-intersection verdict on the flat-band manifold.

    kind  : one of Separated / IsolatedEP / SingleEPRing / DoubleEPRing /
            ChiralDegeneratePair
    ratio : J^2 cos^2(phi) / kappa^2, the level the degeneracies live on
    level : structure-factor weight of the reported loci (equals ratio off the
            chiral limit; (gamma^2 - J^2)/(2 kappa^2) on it)
    loci  : refined degeneracy momenta, sorted by (kx, ky)
    """

    kind: str
    ratio: float
    level: float
    loci: tuple
    tolerances: dict


def classify(model, grid=None, tol_r=1e-9, level_tol=None, tol_E=None, cond_EP=1e3):
    """Classify the band-intersection geometry of a flat-band model.

    Preconditions: the model must be of the hub form (single structure factor
    for the B row, no B-B coupling) and satisfy gamma = J sin(phi) unless
    cos(phi) = 0, where the flat band is symmetry-protected for any gamma.
    """
    params = model.params
    if not model.b_offsets or model.has_bb_coupling:
        raise ValueError(
            f"classification is defined for hub-form models without B-B bonds; "
            f"{model.name!r} is outside that family")
    chiral = is_chiral_phase(params.phi) or params.J == 0.0
    residual = flat_band_residual(params)
    if not chiral and residual > FLAT_MANIFOLD_TOL * max(1.0, abs(params.gamma), params.J):
        raise ValueError(
            f"gamma = {params.gamma} is off the flat-band manifold "
            f"(J sin phi = {params.J * math.sin(params.phi)}); "
            "the intersection taxonomy is undefined there")

    grid = grid or BZGrid()
    offsets = model.b_offsets
    KX, KY = grid.mesh()
    W = s_k(KX, KY, offsets)
    wmax = float(len(offsets)) ** 2
    r = (params.J * math.cos(params.phi)) ** 2 / params.kappa ** 2
    tolerances = {"tol_r": tol_r, "level_tol": level_tol, "tol_E": tol_E,
                  "cond_EP": cond_EP, "flat_residual_tol": FLAT_MANIFOLD_TOL}

    if chiral:
        level = (params.gamma ** 2 - params.J ** 2) / (2.0 * params.kappa ** 2)
        if level < -tol_r * max(1.0, abs(level)):
            return IntersectionClassification(KIND_CHIRAL_PAIR, r, level, (), tolerances)
        n, loci = _level_loci(W, level, grid, offsets, level_tol)
        return IntersectionClassification(KIND_CHIRAL_PAIR, r, level,
                                          tuple(loci), tolerances)

    if abs(r - wmax) <= tol_r * max(1.0, wmax):
        band = _per_cell_band(W)
        _, seeds = _extremum_components(W, grid, "max", band)
        loci = []
        for i, j in seeds:
            if abs(W[i, j] - wmax) <= 1e-12 * wmax:
                loci.append(Momentum(float(grid.kx[i]), float(grid.ky[j])))
            else:
                loci.append(Momentum(*_refine_extremum(grid, offsets, i, j, "max")))
        loci.sort(key=lambda m: (m.kx, m.ky))
        return IntersectionClassification(KIND_ISOLATED_EP, r, r, tuple(loci), tolerances)

    if r > wmax:
        return IntersectionClassification(KIND_SEPARATED, r, r, (), tolerances)

    n, loci = _level_loci(W, r, grid, offsets, level_tol)
    if n == 0:
        return IntersectionClassification(KIND_SEPARATED, r, r, (), tolerances)
    if n == 1:
        kind = KIND_SINGLE_RING
    elif n == 2:
        kind = KIND_DOUBLE_RING
    else:
        raise ValueError(
            f"level set w = {r:.6g} has {n} components on the {grid.nx}x{grid.ny} "
            "grid; the ring taxonomy covers one or two")
    return IntersectionClassification(kind, r, r, tuple(loci), tolerances)


def classification_to_dict(cls):
    return {
        "kind": cls.kind,
        "ratio": cls.ratio,
        "level": cls.level,
        "loci": [[m.kx, m.ky] for m in cls.loci],
        "tolerances": dict(cls.tolerances),
    }


# ---------------------------------------------------------------------------
# Exports
# ---------------------------------------------------------------------------

def export_band_csv(surfaces, fileobj):
    """Write `kx,ky,band_index,re_E,im_E` rows in row-major grid order."""
    kxs, kys = surfaces.grid.kx, surfaces.grid.ky
    E = surfaces.energies
    fileobj.write("kx,ky,band_index,re_E,im_E\n")
    fmt = lambda x: format(float(x), ".17g")
    for i in range(surfaces.grid.nx):
        for j in range(surfaces.grid.ny):
            for b in range(3):
                fileobj.write(f"{fmt(kxs[i])},{fmt(kys[j])},{b},"
                              f"{fmt(E[i, j, b].real)},{fmt(E[i, j, b].imag)}\n")
