"""Flat bands and exceptional points in three-sublattice non-Hermitian lattices.

Modules
-------
models    : lattice descriptions (couplings, on-site terms, parameter sets)
bloch     : Bloch matrices, depressed-cubic band solvers, symmetry checks
bands     : Brillouin-zone scans, flatness reports, intersection taxonomy
realspace : finite lattices, compact localized states, time evolution
cli       : command-line front end (`nhflatband --help`)
"""

from .models import (Params, Coupling, LatticeModel, lieb_original,
                     lieb_extended, tasaki, dice, kagome_modified,
                     make_generic, build_model, model_to_json, model_from_json,
                     BUILTIN_MODELS)
from .bloch import (Momentum, BlochMatrix, CubicCoeffs, BandSet, build_bloch,
                    characteristic, solve_bands_exact, solve_bands_numeric,
                    s_k, structure_factor, wrap_momentum, flat_band_residual,
                    flat_band_energy, is_chiral_phase, check_time_reversal,
                    check_chiral, time_reversal_residual, chiral_residual)
from .bands import (BZGrid, BandSurfaces, FlatBandReport, DegeneracyProbe,
                    IntersectionClassification, scan, flatness, discriminant,
                    probe_degeneracy, classify, export_band_csv,
                    classification_to_dict)
from .realspace import (RealLattice, CLSState, EvolutionTrace, assemble,
                        spectrum_realspace, fourier_consistency,
                        make_cls_single, make_cls_three, cls_partner_cells,
                        evolve, export_trace_csv, state_to_json,
                        state_from_json)

__version__ = "0.1.0"
