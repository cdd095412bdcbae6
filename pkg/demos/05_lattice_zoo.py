"""The five built-in lattices side by side.

Prints each model's coupling inventory, checks the momentum-space/real-space
consistency oracle, and overlays the band structures at the shared flat-band
point (kappa=1, J=3, phi=pi/3, gamma=J sin phi). The three hub-form models
with equal B-row offsets (extended Lieb, dice, modified kagome) plus the
B-B-decorated Tasaki lattice all pin a band at -1.5; the dimer-free original
lattice keeps its Hermitian zero band instead.
"""
import math
import os

import numpy as np
import matplotlib
matplotlib.use("Agg")
import matplotlib.pyplot as plt

from nhflatband import (Params, BUILTIN_MODELS, build_bloch,
                        solve_bands_numeric, fourier_consistency, flatness,
                        BZGrid, model_to_json)

OUT = os.path.join(os.path.dirname(__file__), "output")
os.makedirs(OUT, exist_ok=True)

J, phi = 3.0, math.pi / 3
params = Params(kappa=1.0, J=J, phi=phi, gamma=J * math.sin(phi))

# -------------------------------
# Inventory and consistency oracle
# -------------------------------
print(f"{'model':<16s} {'couplings':>9s} {'B offsets':>9s} {'B-B':>4s} "
      f"{'oracle 3x3':>11s}")
models = {}
for name, ctor in BUILTIN_MODELS.items():
    model = ctor(params)
    models[name] = model
    dist = fourier_consistency(model, 3, 3)
    print(f"{name:<16s} {len(model.couplings):>9d} "
          f"{len(model.b_offsets):>9d} {str(model.has_bb_coupling):>4s} "
          f"{dist:>11.2e}")

# the dimer-free model silently drops J and gamma (it has no dimer to
# carry them), so its params differ from the request
print(f"\nnote: lieb_original forces J = "
      f"{models['lieb_original'].params.J:g}, gamma = "
      f"{models['lieb_original'].params.gamma:g} (Hermitian reference)")

# -------------------------------
# Flat-band generalization at the shared parameter point
# -------------------------------
grid = BZGrid(64, 64)
print(f"\nflatness at kappa=1, J=3, phi=pi/3, gamma=J sin(phi) "
      f"(candidate -1.5):")
for name in ("lieb_extended", "tasaki", "dice", "kagome_modified"):
    rep = flatness(models[name], grid)
    print(f"  {name:<16s}: deviation {rep.max_deviation:.3e} "
          f"is_flat={rep.is_flat}")

# -------------------------------
# Bands along the path for all five
# -------------------------------
GAMMA_PT = (0.0, 0.0)
X = (math.pi, 0.0)
M = (math.pi, math.pi)
K = (2 * math.pi / 3, -2 * math.pi / 3)


def k_path(corners, per_leg=100):
    pts, ticks = [], [0]
    for (x0, y0), (x1, y1) in zip(corners[:-1], corners[1:]):
        t = np.linspace(0, 1, per_leg, endpoint=False)
        pts.extend(zip(x0 + t * (x1 - x0), y0 + t * (y1 - y0)))
        ticks.append(len(pts))
    pts.append(corners[-1])
    return np.array(pts), ticks


pts, ticks = k_path([GAMMA_PT, X, M, GAMMA_PT, K])
labels = ["G", "X", "M", "G", "K"]

fig, axes = plt.subplots(1, 5, figsize=(16, 3.6), sharey=False)
for ax, (name, model) in zip(axes, models.items()):
    E = np.array([solve_bands_numeric(build_bloch(model, k)).energies
                  for k in pts])
    for b in range(3):
        ax.plot(np.arange(len(pts)), E[:, b].real, lw=1.1)
    ax.axhline(-1.5 if name != "lieb_original" else 0.0,
               color="red", ls=":", lw=0.8)
    ax.set_xticks(ticks)
    ax.set_xticklabels(labels)
    ax.set_title(name, fontsize=9)
axes[0].set_ylabel("Re E")
fig.suptitle("band structures at the shared flat-band point "
             "(red dotted: the pinned band)")
fig.tight_layout()
path = os.path.join(OUT, "05_lattice_zoo.png")
fig.savefig(path, dpi=160)
print(f"wrote {path}")

# -------------------------------
# Serialized form (what --model-file consumes)
# -------------------------------
blob = model_to_json(models["dice"])
path = os.path.join(OUT, "05_dice_model.json")
with open(path, "w") as fh:
    fh.write(blob + "\n")
print(f"wrote {path} ({len(blob)} bytes; see README for the schema)")
