"""Lattice model zoo: three-sublattice tight-binding models on a square cell grid.

Every model is a declarative, immutable description: a list of directed
couplings (complex amplitude, integer cell offset) plus per-sublattice on-site
potentials. Sublattices are indexed A=0, B=1, C=2. A coupling entry
(from_sub -> to_sub, offset (dm, dn), amplitude z) stands for the term

    z * (to site at cell (m, n))^dagger (from site at cell (m+dm, n+dn))

summed over all cells. Hermitian-conjugate partners are stored explicitly, so
nonreciprocal pairs (J e^{i phi} one way, J e^{-i phi} the other) are
representable.
"""
from __future__ import annotations

import cmath
import json
import math
from dataclasses import dataclass, field

A, B, C = 0, 1, 2
SUBLATTICE_NAMES = ("A", "B", "C")

# B-site neighbour offsets shared by the extended Lieb family
LIEB_OFFSETS = ((0, 0), (0, 1), (1, 0))
# dice hub offsets: union of the two three-bond fans around the hub site
DICE_OFFSETS = ((0, 0), (1, 0), (0, 1), (1, 1), (1, -1))
TASAKI_BB_OFFSETS = ((1, 0), (-1, 0), (0, 1), (0, -1))

TWO_PI = 2.0 * math.pi


@dataclass(frozen=True)
class Params:
    """Model parameters.

    kappa : reciprocal coupling strength (energy units), must be positive.
    J     : dimer coupling amplitude between A and C, non-negative.
    phi   : synthetic flux phase on the A-C dimer, normalized to [0, 2*pi).
    gamma : gain/loss rate (+gamma loss on A, gain on C). May be negative,
            which swaps the gain and loss roles; the balanced-dimer flat-band
            condition gamma = J*sin(phi) requires this for phi in (pi, 2*pi).
    """

    kappa: float = 1.0
    J: float = 0.0
    phi: float = 0.0
    gamma: float = 0.0

    def __post_init__(self):
        for name in ("kappa", "J", "phi", "gamma"):
            v = float(getattr(self, name))
            if not math.isfinite(v):
                raise ValueError(f"{name} must be finite, got {v!r}")
            object.__setattr__(self, name, v)
        if self.kappa <= 0:
            raise ValueError(f"kappa must be > 0 (isolated cells are not a lattice), got {self.kappa}")
        if self.J < 0:
            raise ValueError(f"J must be >= 0, got {self.J}")
        phi = self.phi % TWO_PI
        # x % (2*pi) can round up to 2*pi itself for tiny negative x
        if phi >= TWO_PI:
            phi -= TWO_PI
        object.__setattr__(self, "phi", phi)


@dataclass(frozen=True)
class Coupling:
    """Directed hopping term: amplitude * to^dagger(cell) from(cell + offset)."""

    from_sublattice: int
    to_sublattice: int
    cell_offset: tuple
    amplitude: complex

    def __post_init__(self):
        if self.from_sublattice not in (A, B, C) or self.to_sublattice not in (A, B, C):
            raise ValueError("sublattice indices must be 0, 1 or 2")
        dm, dn = self.cell_offset
        object.__setattr__(self, "cell_offset", (int(dm), int(dn)))
        object.__setattr__(self, "amplitude", complex(self.amplitude))


@dataclass(frozen=True)
class LatticeModel:
    """Immutable lattice description consumed by the Bloch and real-space builders."""

    name: str
    couplings: tuple
    onsite: tuple
    params: Params
    num_sublattices: int = 3
    b_offsets: tuple = ()  # B-row neighbour offsets, () when not of the hub form

    def __post_init__(self):
        object.__setattr__(self, "couplings", tuple(self.couplings))
        object.__setattr__(self, "onsite", tuple(complex(v) for v in self.onsite))
        object.__setattr__(self, "b_offsets", tuple((int(a), int(b)) for a, b in self.b_offsets))
        if len(self.onsite) != self.num_sublattices:
            raise ValueError("onsite length must match num_sublattices")

    def couplings_into(self, to_sub):
        return tuple(c for c in self.couplings if c.to_sublattice == to_sub)

    @property
    def has_bb_coupling(self):
        return any(c.from_sublattice == B and c.to_sublattice == B for c in self.couplings)


def _hub_couplings(offsets, kappa):
    """B<->A and B<->C bonds of strength kappa at the given offsets, both directions."""
    out = []
    for sub in (A, C):
        for dm, dn in offsets:
            out.append(Coupling(sub, B, (dm, dn), kappa))
            out.append(Coupling(B, sub, (-dm, -dn), kappa))
    return out


def _dimer_couplings(params):
    """Nonreciprocal in-cell A<->C pair: J e^{+i phi} for A->C, J e^{-i phi} back."""
    if params.J == 0:
        return []
    fwd = params.J * cmath.exp(1j * params.phi)
    return [Coupling(A, C, (0, 0), fwd), Coupling(C, A, (0, 0), fwd.conjugate())]


def _onsite(params):
    return (-1j * params.gamma, 0.0 + 0.0j, 1j * params.gamma)


def make_generic(structure_factor_offsets, params, name="generic"):
    """Model with B coupled identically (amplitude kappa) to A and C at the
    given cell offsets, the in-cell nonreciprocal A<->C dimer and balanced
    gain/loss on-site terms.

    The Bloch matrix of any such model admits the eigenvector (-1, 0, 1) with
    eigenvalue -J*cos(phi) whenever gamma = J*sin(phi): the B row cancels
    because both structure factors are equal, and the A/C rows reduce to the
    dimer balance condition.

    Parameters
    ----------
    structure_factor_offsets : iterable of (dm, dn) integer pairs, non-empty,
        duplicates rejected.
    params : Params
    """
    offsets = tuple((int(dm), int(dn)) for dm, dn in structure_factor_offsets)
    if not offsets:
        raise ValueError("offsets must be non-empty")
    if len(set(offsets)) != len(offsets):
        raise ValueError(f"duplicate offsets: {offsets}")
    couplings = _hub_couplings(offsets, params.kappa) + _dimer_couplings(params)
    return LatticeModel(name=name, couplings=couplings, onsite=_onsite(params),
                        params=params, b_offsets=offsets)


def lieb_original(params):
    """Nearest-neighbour Lieb lattice (Hermitian reference; J and gamma forced to 0).

    B couples to A only along the second lattice direction (offsets (0,0) and
    (0,1), structure factor 1 + e^{i ky}) and to C only along the first
    (offsets (0,0) and (1,0), structure factor 1 + e^{i kx}). Bands are
    {0, +/- kappa*sqrt(2 cos kx + 2 cos ky + 4)}; the zero band's eigenvector
    carries the momentum-dependent amplitude -(1 + e^{i kx})/(1 + e^{i ky}).
    """
    params = Params(kappa=params.kappa, J=0.0, phi=params.phi, gamma=0.0)
    couplings = []
    for sub, offs in ((A, ((0, 0), (0, 1))), (C, ((0, 0), (1, 0)))):
        for dm, dn in offs:
            couplings.append(Coupling(sub, B, (dm, dn), params.kappa))
            couplings.append(Coupling(B, sub, (-dm, -dn), params.kappa))
    return LatticeModel(name="lieb_original", couplings=couplings,
                        onsite=_onsite(params), params=params)


def lieb_extended(params):
    """Lieb lattice with equalized B-row couplings plus the gain/loss dimer.

    B couples with amplitude kappa to A and to C at offsets
    {(0,0), (0,1), (1,0)}, so both Bloch structure factors equal
    1 + e^{i kx} + e^{i ky}; A<->C carries J e^{+/- i phi} in-cell and the
    on-site terms are -i gamma on A, +i gamma on C.
    """
    return make_generic(LIEB_OFFSETS, params, name="lieb_extended")


def tasaki(params):
    """Decorated square lattice: lieb_extended plus reciprocal B-B bonds of
    amplitude kappa to the four nearest B neighbours.

    The B-B Bloch entry is 2*kappa*(cos kx + cos ky), which is real, so the
    (-1, 0, 1) flat-band state and its energy are unchanged.
    """
    base = lieb_extended(params)
    bb = [Coupling(B, B, off, params.kappa) for off in TASAKI_BB_OFFSETS]
    return LatticeModel(name="tasaki", couplings=tuple(base.couplings) + tuple(bb),
                        onsite=base.onsite, params=params, b_offsets=base.b_offsets)


def dice(params):
    """Dice lattice with equalized hub couplings.

    The hub (B) originally reaches one rim sublattice through three bonds and
    the other through a different fan of three; equalizing adds the missing
    bonds so both rim sublattices see the same five-offset structure factor.
    The offset set is exported in the model JSON so spectra are reproducible.
    """
    return make_generic(DICE_OFFSETS, params, name="dice")


def kagome_modified(params):
    """Kagome-derived model: corner couplings removed, hub couplings equalized.

    After dropping the direct A-C kappa bonds and equalizing the two hub fans,
    the structure factor reduces to the three-offset 1 + e^{i kx} + e^{i ky};
    the Bloch matrix coincides with lieb_extended while the model keeps its
    own identity for serialization.
    """
    return make_generic(LIEB_OFFSETS, params, name="kagome_modified")


BUILTIN_MODELS = {
    "lieb_original": lieb_original,
    "lieb_extended": lieb_extended,
    "tasaki": tasaki,
    "dice": dice,
    "kagome_modified": kagome_modified,
}


def build_model(name, params):
    """Look up a builtin constructor by name (hyphens and underscores both accepted)."""
    key = name.replace("-", "_")
    try:
        ctor = BUILTIN_MODELS[key]
    except KeyError:
        raise ValueError(f"unknown model {name!r}; choose from {sorted(BUILTIN_MODELS)}") from None
    return ctor(params)


# ---------------------------------------------------------------------------
# JSON serialization: lossless at 17 significant digits
# ---------------------------------------------------------------------------

def _fmt(x):
    x = float(x)
    if x == 0.0:
        x = 0.0  # normalize -0.0 so the rendering round-trips through JSON
    return format(x, ".17g")


def _render(obj):
    if isinstance(obj, float):
        return _fmt(obj)
    if isinstance(obj, bool):
        return "true" if obj else "false"
    if isinstance(obj, int):
        return str(obj)
    if obj is None:
        return "null"
    if isinstance(obj, str):
        return json.dumps(obj)
    if isinstance(obj, dict):
        items = (f"{json.dumps(k)}: {_render(v)}" for k, v in obj.items())
        return "{" + ", ".join(items) + "}"
    if isinstance(obj, (list, tuple)):
        return "[" + ", ".join(_render(v) for v in obj) + "]"
    raise TypeError(f"cannot render {type(obj)!r}")


def render_json(obj):
    """Serialize dict/list trees with floats at 17 significant digits."""
    return _render(obj)


def model_to_dict(model):
    return {
        "name": model.name,
        "params": {"kappa": model.params.kappa, "J": model.params.J,
                   "phi": model.params.phi, "gamma": model.params.gamma},
        "onsite": [[v.real, v.imag] for v in model.onsite],
        "couplings": [
            {"from": c.from_sublattice, "to": c.to_sublattice,
             "offset": [c.cell_offset[0], c.cell_offset[1]],
             "amp": [c.amplitude.real, c.amplitude.imag]}
            for c in model.couplings
        ],
        "b_offsets": [list(o) for o in model.b_offsets],
    }


def model_to_json(model):
    return render_json(model_to_dict(model))


def model_from_dict(data):
    params = Params(**data["params"])
    couplings = [
        Coupling(int(c["from"]), int(c["to"]),
                 (int(c["offset"][0]), int(c["offset"][1])),
                 complex(c["amp"][0], c["amp"][1]))
        for c in data["couplings"]
    ]
    onsite = tuple(complex(re, im) for re, im in data["onsite"])
    b_offsets = tuple((int(a), int(b)) for a, b in data.get("b_offsets", ()))
    return LatticeModel(name=str(data["name"]), couplings=couplings, onsite=onsite,
                        params=params, b_offsets=b_offsets)


def model_from_json(text):
    return model_from_dict(json.loads(text))
