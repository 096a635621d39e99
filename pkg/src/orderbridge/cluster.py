"""Cluster expansion on the two-layer triangular lattice.

Formation energy per site is a linear model over orbit-averaged
correlation functions: E(sigma) = sum_a V_a * phi_a(sigma) with
phi_a in [0, 1] the mean occupancy product over every instance of
orbit a. Cluster orbits are generated from prototype offset sets by
applying the full point group (12 in-plane operations times layer
exchange), so orbit members are symmetry-equivalent by construction.

The shipped reference Hamiltonian uses five pair orbits (in-plane
shells 1-3, the vertical cross-layer pair and the cross-layer
distance-1 ring) with a point term that pins both end members to zero
formation energy. Couplings are tuned so the width-2 zig-zag stripe
decoration is the certified ground state at half filling and the
order-disorder transition sits between 330 and 340 K.
"""
from __future__ import annotations

import json
from dataclasses import dataclass

import numpy as np

from .lattice import Lattice, A1, A2

# in-plane point group: integer matrices for the 12 operations of the
# hexagonal system, generated by the 60-degree rotation and a mirror
_R6 = np.array([[0, -1], [1, 1]])
_MIR = np.array([[0, 1], [1, 0]])


def _point_group() -> list[np.ndarray]:
    ops = []
    r = np.eye(2, dtype=int)
    for _ in range(6):
        ops.append(r.copy())
        ops.append(r @ _MIR)
        r = r @ _R6
    # dedup, preserving order
    seen, out = set(), []
    for m in ops:
        key = tuple(m.ravel())
        if key not in seen:
            seen.add(key)
            out.append(m)
    assert len(out) == 12
    return out


_POINT_OPS = _point_group()

# reference pair couplings, eV per bond
REFERENCE_COUPLINGS = {
    "in1": 0.084,
    "in2": 0.0168,
    "in3": 0.0336,
    "x1": 0.042,
    "x2": -0.0252,
}

# prototype offset sets for multi-site candidate orbits, (layer, i, j)
_TRIPLET_PROTOS = {
    "t_up": ((0, 0, 0), (0, 1, 0), (0, 0, 1)),            # unit triangle
    "t_iso": ((0, 0, 0), (0, 1, 0), (0, 1, 1)),           # sides 1, 1, sqrt3
    "t_far": ((0, 0, 0), (0, 1, 1), (0, 2, -1)),          # sides sqrt3 each
    "t_x": ((0, 0, 0), (1, 0, 0), (0, 1, 0)),             # vertical + in-plane edge
}
_QUAD_PROTOS = {
    "q_rhomb": ((0, 0, 0), (0, 1, 0), (0, 0, 1), (0, 1, 1)),  # two fused unit triangles
}


def _canonical(offsets: tuple) -> tuple:
    """Translate so the lexicographic minimum sits at the origin; sort."""
    arr = sorted(offsets)
    l0, i0, j0 = arr[0]
    moved = sorted((l, i - i0, j - j0) for (l, i, j) in arr)
    # layer exchange cosets are folded here too: prefer the image whose
    # first site is on layer 0
    flipped = sorted((1 - l, i, j) for (l, i, j) in moved)
    f0 = flipped[0]
    flipped = sorted((l, i - f0[1], j - f0[2]) for (l, i, j) in flipped)
    return min(tuple(moved), tuple(flipped))


def cluster_orbit(offsets: tuple) -> list[tuple]:
    """All point-group images of an offset set, canonicalized and deduped."""
    out = set()
    for m in _POINT_OPS:
        img = tuple((l, m[0, 0] * i + m[0, 1] * j, m[1, 0] * i + m[1, 1] * j)
                    for (l, i, j) in offsets)
        out.add(_canonical(img))
        out.add(_canonical(tuple((1 - l, i, j) for (l, i, j) in img)))
    return sorted(out)


@dataclass
class Orbit:
    name: str
    size: int                 # sites per cluster
    instances: np.ndarray     # (n, size) site indices, each site set once
    per_site: float

    def __len__(self) -> int:
        return len(self.instances)


def _pair_orbit(lat: Lattice, name: str) -> Orbit:
    shell = lat.shells[name]
    return Orbit(name, 2, shell.pairs, shell.per_site)


def _multi_orbit(lat: Lattice, name: str, proto: tuple) -> Orbit:
    members = cluster_orbit(proto)
    sets = set()
    for layer_anchor in range(2):
        for i in range(lat.rows):
            for j in range(lat.cols):
                for mem in members:
                    sites = tuple(sorted(
                        lat.site(layer_anchor ^ dl, i + di, j + dj)
                        for (dl, di, dj) in mem))
                    sets.add(sites)
    inst = np.array(sorted(sets), dtype=np.int64)
    return Orbit(name, len(proto), inst, len(inst) / lat.n_sites)


def build_orbit(lat: Lattice, name: str) -> Orbit:
    if name in lat.shells:
        return _pair_orbit(lat, name)
    if name in _TRIPLET_PROTOS:
        return _multi_orbit(lat, name, _TRIPLET_PROTOS[name])
    if name in _QUAD_PROTOS:
        return _multi_orbit(lat, name, _QUAD_PROTOS[name])
    raise KeyError(f"unknown orbit {name!r}")


def candidate_orbit_names() -> tuple[str, ...]:
    """Basis-selection candidate pool: pairs to the 6th in-plane shell,
    both cross-layer shells, triplets to the 2nd shell, the compact
    quadruplet."""
    return ("in1", "in2", "in3", "in4", "in5", "in6", "x1", "x2",
            "t_up", "t_iso", "t_far", "t_x", "q_rhomb")


@dataclass
class ClusterExpansion:
    """Orbit basis with fitted interaction values.

    The basis always starts with the constant and point terms; named
    orbits follow. Energies are eV per site (one site per formula unit).
    """

    lattice: Lattice
    orbit_names: tuple[str, ...]
    eci: np.ndarray

    def __post_init__(self):
        self._orbits = [build_orbit(self.lattice, n) for n in self.orbit_names]
        if len(self.eci) != 2 + len(self.orbit_names):
            raise ValueError("eci length must be 2 + number of orbits")
        self.eci = np.asarray(self.eci, dtype=np.float64)

    @property
    def orbits(self) -> list[Orbit]:
        return self._orbits

    def correlations(self, occ: np.ndarray) -> np.ndarray:
        """phi vector: [1, x, orbit products...], every entry in [0, 1]."""
        occ = np.asarray(occ, dtype=np.float64)
        if occ.shape != (self.lattice.n_sites,):
            raise ValueError("occupancy shape mismatch")
        if np.any((occ != 0.0) & (occ != 1.0)):
            raise ValueError("occupancies must be 0/1")
        phi = np.empty(2 + len(self._orbits))
        phi[0] = 1.0
        phi[1] = occ.mean()
        for k, orb in enumerate(self._orbits):
            prod = occ[orb.instances[:, 0]]
            for c in range(1, orb.size):
                prod = prod * occ[orb.instances[:, c]]
            phi[2 + k] = prod.mean()
        return phi

    def energy(self, occ: np.ndarray) -> float:
        """Formation energy per site, eV."""
        return float(self.correlations(occ) @ self.eci)

    # --- serialization --------------------------------------------------
    def to_json(self) -> str:
        return json.dumps({
            "rows": self.lattice.rows,
            "cols": self.lattice.cols,
            "orbit_names": list(self.orbit_names),
            "eci": self.eci.tolist(),
        }, indent=2)

    @classmethod
    def from_json(cls, text: str) -> "ClusterExpansion":
        d = json.loads(text)
        return cls(Lattice(d["rows"], d["cols"]), tuple(d["orbit_names"]),
                   np.array(d["eci"]))


def reference_model(lat: Lattice) -> ClusterExpansion:
    """The shipped pair Hamiltonian with zero formation energy at both
    end members."""
    names = tuple(REFERENCE_COUPLINGS)
    v_pairs = []
    for n in names:
        per_site = lat.shells[n].per_site
        v_pairs.append(REFERENCE_COUPLINGS[n] * per_site)
    v_point = -sum(v_pairs)
    eci = np.array([0.0, v_point] + v_pairs)
    return ClusterExpansion(lat, names, eci)


def formation_energy(e_total: float, x: float, e_ref_full: float,
                     e_ref_empty: float) -> float:
    """Re-reference a total energy against the end-member line."""
    if not 0.0 <= x <= 1.0:
        raise ValueError("composition out of [0, 1]")
    return e_total - x * e_ref_full - (1.0 - x) * e_ref_empty
