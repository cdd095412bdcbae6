import io
import json
import math

import numpy as np
import pytest

from nhflatband import (Params, lieb_original, lieb_extended, tasaki, dice,
                        kagome_modified, assemble, spectrum_realspace,
                        fourier_consistency, make_cls_single, make_cls_three,
                        cls_partner_cells, evolve, export_trace_csv,
                        state_to_json, state_from_json)
from nhflatband.models import A, B, C


def flat_params(kappa=1.0, J=3.0, phi=math.pi / 3):
    return Params(kappa=kappa, J=J, phi=phi, gamma=J * math.sin(phi))


def chiral_params(kappa=1.0, J=1.0, gamma=0.25, phi=math.pi / 2):
    return Params(kappa=kappa, J=J, phi=phi, gamma=gamma)


# ---------------------------------------------------------------------------
# assembly
# ---------------------------------------------------------------------------

def test_single_cell_open_matrix_is_the_bloch_matrix_at_zero_hopping():
    # with one open cell only the (0,0)-offset couplings survive
    kappa, J, phi = 1.5, 3.0, math.pi / 3
    gamma = J * math.sin(phi)
    model = lieb_extended(Params(kappa=kappa, J=J, phi=phi, gamma=gamma))
    H = assemble(model, 1, 1, boundary="open").matrix.toarray()
    expect = np.array([
        [-1j * gamma, kappa, J * np.exp(-1j * phi)],
        [kappa, 0.0, kappa],
        [J * np.exp(1j * phi), kappa, 1j * gamma],
    ])
    assert np.max(np.abs(H - expect)) == 0.0


def test_site_index_round_trip_and_bounds():
    lattice = assemble(lieb_extended(flat_params()), 3, 4)
    assert lattice.num_sites == 36
    for m in range(3):
        for n in range(4):
            for s in range(3):
                idx = lattice.site_index(m, n, s)
                assert lattice.site_at(idx) == (m, n, s)
    with pytest.raises(ValueError):
        lattice.site_index(3, 0, 0)
    with pytest.raises(ValueError):
        lattice.site_index(0, 4, 0)
    with pytest.raises(ValueError):
        lattice.site_index(0, 0, 3)


def test_reciprocal_model_assembles_hermitian():
    # gamma = 0 and a real dimer phase leave every coupling reciprocal
    model = lieb_extended(Params(kappa=1.0, J=2.0, phi=0.0, gamma=0.0))
    for boundary in ("open", "periodic"):
        H = assemble(model, 3, 3, boundary=boundary).matrix.toarray()
        assert np.max(np.abs(H - H.conj().T)) == 0.0
    H = assemble(lieb_original(Params(kappa=1.3)), 4, 3).matrix.toarray()
    assert np.max(np.abs(H - H.conj().T)) == 0.0


def test_assemble_validation():
    model = lieb_extended(flat_params())
    with pytest.raises(ValueError, match="boundary"):
        assemble(model, 2, 2, boundary="twisted")
    with pytest.raises(ValueError, match="at least one cell"):
        assemble(model, 0, 2)
    with pytest.raises(ValueError, match="periodic"):
        assemble(model, 1, 5, boundary="periodic")


def test_open_boundary_drops_edge_couplings():
    model = lieb_extended(flat_params())
    open_H = assemble(model, 2, 2, boundary="open").matrix
    periodic_H = assemble(model, 2, 2, boundary="periodic").matrix
    assert open_H.nnz < periodic_H.nnz


# ---------------------------------------------------------------------------
# spectra
# ---------------------------------------------------------------------------

def test_spectrum_sorted_and_sized():
    lattice = assemble(lieb_extended(flat_params()), 3, 3, boundary="periodic")
    E = spectrum_realspace(lattice)
    assert E.shape == (27,)
    key = np.lexsort((E.imag, E.real))
    assert np.array_equal(key, np.arange(27))


def test_spectrum_budget():
    lattice = assemble(lieb_extended(flat_params()), 34, 34)
    with pytest.raises(ValueError, match="3000"):
        spectrum_realspace(lattice)


def test_fourier_consistency_all_models():
    rng = np.random.default_rng(23)
    ctors = (lieb_original, lieb_extended, tasaki, dice, kagome_modified)
    for ctor in ctors:
        params = Params(kappa=rng.uniform(0.5, 2.0), J=rng.uniform(0.0, 5.0),
                        phi=rng.uniform(0.0, 2 * math.pi),
                        gamma=rng.uniform(-2.0, 2.0))
        dist = fourier_consistency(ctor(params), 3, 3)
        assert dist < 1e-8, f"{ctor.__name__}: {dist:.3e}"


def test_fourier_consistency_rectangular():
    dist = fourier_consistency(lieb_extended(flat_params()), 2, 4)
    assert dist < 1e-8


def test_flat_band_macroscopic_degeneracy():
    # every allowed momentum contributes one flat eigenvalue
    model = lieb_extended(flat_params(J=3.0))
    lattice = assemble(model, 4, 4, boundary="periodic")
    E = spectrum_realspace(lattice)
    flat = -3.0 * math.cos(math.pi / 3)
    count = int(np.sum(np.abs(E - flat) < 1e-8))
    assert count >= 16


# ---------------------------------------------------------------------------
# compact localized states: single cell
# ---------------------------------------------------------------------------

def test_cls_single_interior_and_corner():
    model = lieb_extended(flat_params(J=3.0))
    for boundary in ("open", "periodic"):
        lattice = assemble(model, 4, 4, boundary=boundary)
        for cell in ((1, 1), (0, 0), (3, 3)):
            state = make_cls_single(model, cell, lattice)
            assert state.residual <= 1e-12
            assert state.energy == complex(-3.0 * math.cos(math.pi / 3))
            ia = lattice.site_index(cell[0], cell[1], A)
            ic = lattice.site_index(cell[0], cell[1], C)
            assert state.amplitudes[ia] == -1.0
            assert state.amplitudes[ic] == 1.0
            assert state.support == (ia, ic)
            off = np.delete(state.amplitudes, [ia, ic])
            assert np.all(off == 0)


def test_cls_single_other_hub_geometries():
    for ctor in (tasaki, dice, kagome_modified):
        model = ctor(flat_params(J=2.0, phi=1.1))
        lattice = assemble(model, 4, 4, boundary="periodic")
        state = make_cls_single(model, (2, 1), lattice)
        assert state.residual <= 1e-12


def test_cls_single_requires_balanced_dimer():
    # chiral protection keeps the band flat, but the single-cell state itself
    # still needs gamma = J sin(phi)
    model = lieb_extended(chiral_params())
    lattice = assemble(model, 4, 4)
    with pytest.raises(ValueError, match="gamma = J sin"):
        make_cls_single(model, (1, 1), lattice)


def test_cls_single_rejects_original_lattice():
    model = lieb_original(Params(kappa=1.0))
    lattice = assemble(model, 4, 4)
    with pytest.raises(ValueError, match="not compact"):
        make_cls_single(model, (1, 1), lattice)


# ---------------------------------------------------------------------------
# compact localized states: three cells
# ---------------------------------------------------------------------------

def test_cls_three_hub_amplitude_exact():
    model = lieb_extended(chiral_params(J=1.0, gamma=0.25))
    lattice = assemble(model, 4, 4)
    cells = ((1, 1), (2, 1), (1, 2))
    state = make_cls_three(model, cells, lattice)
    ib = lattice.site_index(1, 1, B)
    assert state.amplitudes[ib] == 0.75j
    assert state.energy == 0.0
    assert state.residual <= 1e-12
    assert state.cells == cells
    assert len(state.support) == 7


def test_cls_three_accepts_shifted_cells_in_any_order():
    model = lieb_extended(chiral_params())
    lattice = assemble(model, 4, 4)
    state = make_cls_three(model, ((1, 1), (1, 2), (2, 1)), lattice)
    assert state.residual <= 1e-12


def test_cls_three_closes_to_zero_hub_weight_at_gamma_equals_J():
    model = lieb_extended(chiral_params(J=1.0, gamma=1.0))
    lattice = assemble(model, 4, 4)
    state = make_cls_three(model, ((0, 0), (1, 0), (0, 1)), lattice)
    ib = lattice.site_index(0, 0, B)
    assert state.amplitudes[ib] == 0.0
    assert state.residual <= 1e-12


def test_cls_three_opposite_chiral_branch():
    # phi = 3 pi / 2 flips the sign in the hub amplitude
    model = lieb_extended(Params(kappa=1.0, J=1.0, phi=3 * math.pi / 2, gamma=0.25))
    lattice = assemble(model, 4, 4)
    state = make_cls_three(model, ((1, 1), (2, 1), (1, 2)), lattice)
    ib = lattice.site_index(1, 1, B)
    assert state.amplitudes[ib] == -1.25j
    assert state.residual <= 1e-12


def test_cls_three_periodic_wrap():
    model = lieb_extended(chiral_params())
    lattice = assemble(model, 3, 3, boundary="periodic")
    corner = (2, 2)
    partners = cls_partner_cells(lattice, corner)
    assert set(partners) == {(0, 2), (2, 0)}
    state = make_cls_three(model, (corner,) + partners, lattice)
    assert state.residual <= 1e-12


def test_cls_three_rejects_bad_inputs():
    lattice4 = assemble(lieb_extended(chiral_params()), 4, 4)
    with pytest.raises(ValueError, match="neighbours"):
        make_cls_three(lieb_extended(chiral_params()), ((1, 1), (2, 2), (1, 2)),
                       lattice4)
    with pytest.raises(ValueError, match="exactly three"):
        make_cls_three(lieb_extended(chiral_params()), ((1, 1), (2, 1)), lattice4)
    non_chiral = lieb_extended(flat_params(J=1.0))
    lattice = assemble(non_chiral, 4, 4)
    with pytest.raises(ValueError, match="chiral"):
        make_cls_three(non_chiral, ((1, 1), (2, 1), (1, 2)), lattice)
    bb = tasaki(chiral_params())
    lattice = assemble(bb, 4, 4)
    with pytest.raises(ValueError, match="B sites directly"):
        make_cls_three(bb, ((1, 1), (2, 1), (1, 2)), lattice)
    five = dice(chiral_params())
    lattice = assemble(five, 4, 4)
    with pytest.raises(ValueError, match="offsets"):
        make_cls_three(five, ((1, 1), (2, 1), (1, 2)), lattice)


# ---------------------------------------------------------------------------
# time evolution
# ---------------------------------------------------------------------------

def test_evolve_keeps_cls_stationary():
    model = lieb_extended(chiral_params(J=1.0, gamma=0.25))
    lattice = assemble(model, 6, 6)
    state = make_cls_three(model, ((2, 2), (3, 2), (2, 3)), lattice)
    trace = evolve(lattice, state.amplitudes, t_end=10.0)
    drift = float(np.max(np.abs(trace.intensities - trace.intensities[0])))
    assert drift < 1e-8


def test_evolve_single_cell_cls_stationary_intensity():
    model = lieb_extended(flat_params(J=3.0))
    lattice = assemble(model, 5, 5)
    state = make_cls_single(model, (2, 2), lattice)
    trace = evolve(lattice, state.amplitudes, t_end=5.0)
    drift = float(np.max(np.abs(trace.intensities - trace.intensities[0])))
    assert drift < 1e-8


def test_evolve_conserves_norm_for_hermitian_model():
    model = lieb_original(Params(kappa=1.0))
    lattice = assemble(model, 4, 4)
    rng = np.random.default_rng(5)
    psi0 = rng.normal(size=48) + 1j * rng.normal(size=48)
    psi0 /= np.linalg.norm(psi0)
    trace = evolve(lattice, psi0, t_end=5.0)
    assert np.max(np.abs(trace.total_norm - 1.0)) < 1e-10


def test_evolve_single_site_spreads():
    model = lieb_extended(chiral_params(J=1.0, gamma=0.25))
    lattice = assemble(model, 6, 6)
    psi0 = np.zeros(lattice.num_sites, dtype=complex)
    start = lattice.site_index(3, 3, B)
    psi0[start] = 1.0
    trace = evolve(lattice, psi0, t_end=5.0)
    off_site = trace.intensities[-1].sum() - trace.intensities[-1][start]
    assert off_site > 1e-3


def test_evolve_overflow_raises():
    model = lieb_extended(Params(kappa=1.0, J=0.0, gamma=10.0))
    lattice = assemble(model, 2, 2, boundary="periodic")
    psi0 = np.zeros(lattice.num_sites, dtype=complex)
    psi0[lattice.site_index(0, 0, A)] = 1.0
    with pytest.raises(FloatingPointError, match="overflowed at t ="):
        evolve(lattice, psi0, t_end=200.0, dt=0.1)


def test_evolve_defaults_and_validation():
    model = lieb_extended(flat_params(kappa=2.0))
    lattice = assemble(model, 2, 2)
    psi0 = np.zeros(lattice.num_sites, dtype=complex)
    psi0[0] = 1.0
    trace = evolve(lattice, psi0, t_end=0.1)
    assert trace.dt == 0.005
    assert trace.times[0] == 0.0
    assert trace.intensities.shape == (len(trace.times), lattice.num_sites)
    with pytest.raises(ValueError, match="dt"):
        evolve(lattice, psi0, t_end=1.0, dt=0.0)
    with pytest.raises(ValueError, match="t_end"):
        evolve(lattice, psi0, t_end=-1.0)
    with pytest.raises(ValueError, match="length"):
        evolve(lattice, psi0[:-1], t_end=1.0)


# ---------------------------------------------------------------------------
# exports
# ---------------------------------------------------------------------------

def test_export_trace_csv_format():
    model = lieb_extended(flat_params())
    lattice = assemble(model, 2, 2)
    state = make_cls_single(model, (0, 0), lattice)
    trace = evolve(lattice, state.amplitudes, t_end=0.05, dt=0.01)
    buf = io.StringIO()
    export_trace_csv(trace, lattice, buf)
    lines = buf.getvalue().splitlines()
    assert lines[0] == "t,site_m,site_n,sublattice,intensity"
    assert len(lines) == 1 + 6 * lattice.num_sites
    t, m, n, s, inten = lines[1].split(",")
    assert (t, m, n, s) == ("0", "0", "0", "0")
    assert float(inten) == 1.0


def test_state_json_round_trip():
    rng = np.random.default_rng(9)
    psi = rng.normal(size=12) + 1j * rng.normal(size=12)
    text = state_to_json(psi)
    back = state_from_json(text)
    assert np.array_equal(psi, back)
    parsed = json.loads(text)
    assert set(parsed) == {"state"}
    bare = state_from_json(json.dumps([[1.0, 0.5], [0.0, -2.0]]))
    assert np.array_equal(bare, np.array([1.0 + 0.5j, -2.0j]))
