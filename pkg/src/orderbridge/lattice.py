"""Two-layer triangular lattice with periodic boundaries.

Sites live on two stacked triangular layers indexed (layer, i, j) with
in-plane integer coordinates taken along the primitive vectors
a1 = (1, 0) and a2 = (1/2, sqrt(3)/2). Flattened index is
s = layer*rows*cols + i*cols + j. Interactions are organized into
symmetry-closed displacement orbits: in-plane distance shells and two
cross-layer shells (the vertical pair and the cross-layer distance-1
ring). Shell order mirrors increasing pair distance.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

# half sets: one displacement per unordered in-plane pair orbit instance
_INPLANE_SHELLS = {
    1: ((1, 0), (0, 1), (1, -1)),                    # d = 1
    2: ((1, 1), (2, -1), (1, -2)),                   # d = sqrt(3)
    3: ((2, 0), (0, 2), (2, -2)),                    # d = 2
    4: ((2, 1), (1, 2), (3, -1), (3, -2), (2, -3), (1, -3)),  # d = sqrt(7)
    5: ((3, 0), (0, 3), (3, -3)),                    # d = 3
    6: ((2, 2), (4, -2), (2, -4)),                   # d = 2*sqrt(3)
}
# cross-layer shells: all displacements (each pair has one endpoint per layer,
# counted from layer-0 anchors)
_CROSS_SHELLS = {
    1: ((0, 0),),
    2: ((1, 0), (-1, 0), (0, 1), (0, -1), (1, -1), (-1, 1)),
}

A1 = np.array([1.0, 0.0])
A2 = np.array([0.5, np.sqrt(3.0) / 2.0])


@dataclass(frozen=True)
class PairShell:
    """One symmetry orbit of site pairs."""

    name: str                 # "in1".."in6", "x1", "x2"
    pairs: np.ndarray         # (n, 2) int site indices, each unordered pair once
    per_site: float           # orbit instances per lattice site

    def __len__(self) -> int:
        return len(self.pairs)


@dataclass
class Lattice:
    rows: int
    cols: int
    n_sites: int = field(init=False)
    shells: dict = field(init=False)

    def __post_init__(self):
        if self.rows < 4 or self.cols < 4 or self.rows % 4 or self.cols % 4:
            raise ValueError("rows and cols must be multiples of 4 (supercell tiling)")
        self.n_sites = 2 * self.rows * self.cols
        self.shells = self._build_shells()

    # --- indexing -------------------------------------------------------
    def site(self, layer: int, i: int, j: int) -> int:
        return layer * self.rows * self.cols + (i % self.rows) * self.cols + (j % self.cols)

    def coords(self, s: int) -> tuple[int, int, int]:
        per = self.rows * self.cols
        layer, r = divmod(s, per)
        i, j = divmod(r, self.cols)
        return layer, i, j

    def positions(self) -> np.ndarray:
        """Cartesian in-plane positions, layer 1 offset by (a1+a2)/3."""
        out = np.zeros((self.n_sites, 2))
        off = (A1 + A2) / 3.0
        for s in range(self.n_sites):
            layer, i, j = self.coords(s)
            out[s] = i * A1 + j * A2 + (off if layer else 0.0)
        return out

    @property
    def n_supercells(self) -> int:
        return self.n_sites // 32

    def supercell_positions(self) -> np.ndarray:
        """Map site -> position index in the 32-site reference supercell."""
        out = np.zeros(self.n_sites, dtype=np.int64)
        for s in range(self.n_sites):
            layer, i, j = self.coords(s)
            out[s] = layer * 16 + (i % 4) * 4 + (j % 4)
        return out

    # --- neighbor structure --------------------------------------------
    def _build_shells(self) -> dict:
        shells = {}
        for k, disps in _INPLANE_SHELLS.items():
            pairs = []
            for layer in range(2):
                for i in range(self.rows):
                    for j in range(self.cols):
                        a = self.site(layer, i, j)
                        for (di, dj) in disps:
                            pairs.append((a, self.site(layer, i + di, j + dj)))
            shells[f"in{k}"] = PairShell(f"in{k}", np.array(pairs, dtype=np.int64),
                                         per_site=len(disps))
        for k, disps in _CROSS_SHELLS.items():
            pairs = []
            for i in range(self.rows):
                for j in range(self.cols):
                    a = self.site(0, i, j)
                    for (di, dj) in disps:
                        pairs.append((a, self.site(1, i + di, j + dj)))
            shells[f"x{k}"] = PairShell(f"x{k}", np.array(pairs, dtype=np.int64),
                                        per_site=len(disps) / 2.0)
        return shells

    def neighbor_table(self, shell_names: tuple[str, ...]) -> tuple[np.ndarray, np.ndarray]:
        """Full per-site neighbor array over the named shells.

        Returns (nbrs, shell_id): nbrs[s] lists every site sharing a pair
        with s in any requested shell (both directions), shell_id gives the
        shell index each column came from. Column count is constant per
        site because the orbit structure is site-transitive.
        """
        lists = [[] for _ in range(self.n_sites)]
        ids = [[] for _ in range(self.n_sites)]
        for idx, name in enumerate(shell_names):
            for a, b in self.shells[name].pairs:
                lists[a].append(b)
                ids[a].append(idx)
                lists[b].append(a)
                ids[b].append(idx)
        width = len(lists[0])
        if any(len(l) != width for l in lists):
            raise AssertionError("neighbor table is ragged; orbit construction broken")
        return (np.array(lists, dtype=np.int64), np.array(ids, dtype=np.int64))


def zigzag_occupancy(lat: Lattice, rotation: int = 0, shift: int = 0) -> np.ndarray:
    """Ground-state decoration tiled over the lattice.

    Width-2 stripes along the (a1+a2) direction with complementary
    stacking: layer 0 occupies stripe phases {shift, shift+1}, layer 1 the
    other two. rotation in {0,1,2} selects the stripe family produced by
    0/120/240-degree rotations: stripe phase functions are i-j, i+2j and
    2i+3j mod 4.
    """
    forms = ((1, -1), (1, 2), (2, 3))
    fa, fb = forms[rotation % 3]
    occ = np.zeros(lat.n_sites, dtype=np.float64)
    for s in range(lat.n_sites):
        layer, i, j = lat.coords(s)
        c = (fa * i + fb * j - shift) % 4
        if (layer == 0 and c in (0, 1)) or (layer == 1 and c in (2, 3)):
            occ[s] = 1.0
    return occ
