"""Where the flat band touches the dispersive ones, and what kind of
degeneracy lives there.

On the flat manifold the touching set is the level set s_k = J^2 cos^2(phi)
/ kappa^2 of the structure-factor weight. Sweeping J through the geometry
changes the answer: no touching, an isolated point at the zone centre, one
ring, or two rings. Probes at the loci tell exceptional points (defective,
huge eigenvector condition number) from diabolic ones (Hermitian-style).
"""
import math
import os

import numpy as np
import matplotlib
matplotlib.use("Agg")
import matplotlib.pyplot as plt

from nhflatband import (Params, lieb_extended, BZGrid, classify,
                        probe_degeneracy, discriminant, s_k)

OUT = os.path.join(os.path.dirname(__file__), "output")
os.makedirs(OUT, exist_ok=True)

grid = BZGrid(128, 128)
phi = math.pi / 3


def flat(J):
    return lieb_extended(Params(kappa=1.0, J=J, phi=phi,
                                gamma=J * math.sin(phi)))


# -------------------------------
# The four regimes of the taxonomy
# -------------------------------
KX, KY = grid.mesh()
W = s_k(KX, KY)

fig, axes = plt.subplots(1, 4, figsize=(15, 3.8))
for ax, J in zip(axes, (8.0, 6.0, 4.0, 1.0)):
    cls = classify(flat(J), grid)
    pc = ax.pcolormesh(KX, KY, W, shading="auto", cmap="cividis")
    if cls.loci:
        xs = [m.kx for m in cls.loci]
        ys = [m.ky for m in cls.loci]
        ax.plot(xs, ys, ".", color="red", ms=2)
    ax.set_title(f"J={J:g}: {cls.kind}\nratio={cls.ratio:.3g}", fontsize=9)
    ax.set_xlabel("kx")
    print(f"J={J:4.1f}: kind={cls.kind:<20s} ratio={cls.ratio:7.3f} "
          f"loci={len(cls.loci)}")
axes[0].set_ylabel("ky")
fig.colorbar(pc, ax=axes, shrink=0.85, label="s_k")
path = os.path.join(OUT, "03_taxonomy.png")
fig.savefig(path, dpi=160)
print(f"wrote {path}")

# -------------------------------
# Probe the loci: EP vs DP
# -------------------------------
print("\nprobes on the J=4 ring (every ~30th locus):")
model = flat(4.0)
cls = classify(model, grid)
conds, gaps = [], []
for m in cls.loci:
    p = probe_degeneracy(model, m)
    conds.append(p.condition_number)
    gaps.append(p.min_gap)
step = max(1, len(cls.loci) // 8)
for m, c, g in list(zip(cls.loci, conds, gaps))[::step]:
    p = probe_degeneracy(model, m)
    print(f"  k=({m.kx:+.3f},{m.ky:+.3f}) verdict={p.verdict} "
          f"gap={g:.2e} cond={c:.2e} pair E={p.pair_energy.real:+.6f}")
print(f"all {len(cls.loci)} ring loci: min cond = {min(conds):.2e} "
      f"(EP threshold 1e3), max gap = {max(gaps):.2e}")

# Hermitian contrast: J = 0, gamma = 0 has diabolic touchings at s_k = 0
herm = lieb_extended(Params(kappa=1.0, J=0.0, gamma=0.0))
cls_h = classify(herm, grid)
print("\nHermitian limit J=0, gamma=0:")
for m in cls_h.loci:
    p = probe_degeneracy(herm, m)
    print(f"  k=({m.kx:+.3f},{m.ky:+.3f}) verdict={p.verdict} "
          f"gap={p.min_gap:.2e} cond={p.condition_number:.2e}")

fig, ax = plt.subplots(figsize=(6, 4))
ax.semilogy(range(len(conds)), conds, ".", ms=3)
ax.axhline(1e3, color="red", ls="--", lw=0.8, label="EP threshold")
ax.set_xlabel("locus index along the J=4 ring")
ax.set_ylabel("eigenvector condition number")
ax.set_title("every ring locus is defective")
ax.legend()
fig.tight_layout()
path = os.path.join(OUT, "03_ring_condition.png")
fig.savefig(path, dpi=160)
print(f"wrote {path}")

# -------------------------------
# The discriminant picture
# -------------------------------
# Delta(s) <= 0 everywhere on the manifold, touching zero exactly on the
# degeneracy level s = J^2 cos^2(phi) / kappa^2
s = np.linspace(0.0, 9.0, 400)
fig, ax = plt.subplots(figsize=(7, 4))
for J in (8.0, 6.0, 4.0, 1.0):
    d = discriminant(1.0, J, phi, s)
    level = (J * math.cos(phi)) ** 2
    ax.plot(s, -d, lw=1.2, label=f"J={J:g} (zero at s={level:g})")
    i0 = int(np.argmin(np.abs(s - level)))
    print(f"J={J:4.1f}: discriminant at the degeneracy level s={level:5.2f} "
          f"-> {discriminant(1.0, J, phi, level):+.3e}")
ax.set_yscale("symlog", linthresh=1e-6)
ax.set_xlabel("structure-factor weight s")
ax.set_ylabel("-Delta(s)  (symlog)")
ax.set_title("cubic discriminant: nonpositive, zero on the touching level")
ax.legend(fontsize=8)
fig.tight_layout()
path = os.path.join(OUT, "03_discriminant.png")
fig.savefig(path, dpi=160)
print(f"wrote {path}")
