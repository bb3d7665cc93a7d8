"""Oriented simplicial complexes for tetrahedralized boxes.

Every simplex is stored as the ascending tuple of its global vertex indices and
that order is its reference orientation. Simplex tables are sorted
lexicographically, so numbering is deterministic and repeated builds are
bit-identical.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace
from itertools import combinations, permutations
from typing import Callable

import numpy as np
import scipy.sparse as sp

PLANE_TOL = 1e-12

# Local sub-simplices of a sorted tetrahedron / triangle, lexicographic order.
TET_EDGES = np.array(list(combinations(range(4), 2)), dtype=np.int64)
TET_FACES = np.array(list(combinations(range(4), 3)), dtype=np.int64)
TRI_EDGES = np.array(list(combinations(range(3), 2)), dtype=np.int64)

Predicate = Callable[[np.ndarray], np.ndarray]


class MeshError(ValueError):
    """Invalid mesh construction arguments or boundary specification."""


def simplex_keys(table: np.ndarray, n_vertices: int) -> np.ndarray:
    """Encode sorted vertex tuples as integers preserving lexicographic order."""
    table = np.asarray(table, dtype=np.int64)
    if table.shape[1] > 1 and float(n_vertices) ** table.shape[1] >= 2.0**62:
        raise MeshError("mesh too large for int64 simplex keys")
    keys = np.zeros(table.shape[0], dtype=np.int64)
    for col in range(table.shape[1]):
        keys = keys * n_vertices + table[:, col]
    return keys


def _lookup(table: np.ndarray, queries: np.ndarray, n_vertices: int) -> np.ndarray:
    keys = simplex_keys(table, n_vertices)
    qkeys = simplex_keys(queries.reshape(-1, table.shape[1]), n_vertices)
    idx = np.searchsorted(keys, qkeys)
    idx = np.minimum(idx, len(keys) - 1)
    if not np.array_equal(keys[idx], qkeys):
        raise MeshError("sub-simplex missing from simplex table")
    return idx.reshape(queries.shape[:-1])


def _unique_rows(rows: np.ndarray) -> np.ndarray:
    rows = np.sort(rows, axis=1)
    return np.unique(rows, axis=0)


@dataclass(frozen=True)
class SimplicialComplex:
    """Tetrahedral mesh with its full simplex tables and boundary data.

    Attributes
    ----------
    vertices : (V, 3) float array
    simplices : tuple of 4 int arrays; ``simplices[k]`` has shape (N_k, k+1)
    tet_edges, tet_faces, face_edges : global indices of local sub-simplices
    boundary_facets : indices into ``simplices[2]`` of faces on the boundary
    facet_tets : owning tetrahedron of each boundary facet
    facet_gamma : 1 or 2 per boundary facet (0 until classified)
    boundary_simplices : per degree k <= 2, sorted indices of k-simplices on the boundary
    boundary_gamma : per degree k <= 2, the 1/2 tag of each boundary simplex
    """

    vertices: np.ndarray
    simplices: tuple
    tet_edges: np.ndarray
    tet_faces: np.ndarray
    face_edges: np.ndarray
    boundary_facets: np.ndarray
    facet_tets: np.ndarray
    facet_gamma: np.ndarray
    boundary_simplices: tuple
    boundary_gamma: tuple
    lengths: tuple = field(default=(1.0, 1.0, 1.0))

    @property
    def n_vertices(self) -> int:
        return self.vertices.shape[0]

    def count(self, k: int) -> int:
        return self.simplices[k].shape[0]

    @property
    def counts(self) -> tuple:
        return tuple(self.count(k) for k in range(4))

    def euler_characteristic(self) -> int:
        v, e, f, t = self.counts
        return v - e + f - t

    @property
    def is_classified(self) -> bool:
        return bool(np.all(self.facet_gamma > 0))

    def dof_map(self, k: int) -> np.ndarray:
        """Global k-simplex indices of the local k-simplices of each tet."""
        if k == 0:
            return self.simplices[3]
        if k == 1:
            return self.tet_edges
        if k == 2:
            return self.tet_faces
        if k == 3:
            return np.arange(self.count(3), dtype=np.int64)[:, None]
        raise MeshError(f"form degree {k} out of range 0..3")

    def facet_subsimplices(self, k: int) -> np.ndarray:
        """Global indices of the k-sub-simplices of every boundary facet."""
        faces = self.boundary_facets
        if k == 0:
            return self.simplices[2][faces]
        if k == 1:
            return self.face_edges[faces]
        if k == 2:
            return faces[:, None]
        raise MeshError(f"facet sub-simplex degree {k} out of range 0..2")

    def gamma_simplices(self, k: int, gamma: int) -> np.ndarray:
        """k-simplices tagged ``gamma`` under the Gamma_1-first tie-break."""
        return self.boundary_simplices[k][self.boundary_gamma[k] == gamma]

    def closure(self, k: int, gamma: int) -> np.ndarray:
        """Sorted k-simplices that are sub-simplices of some facet tagged ``gamma``."""
        mask = self.facet_gamma == gamma
        return np.unique(self.facet_subsimplices(k)[mask].ravel())


def build_box_mesh(lengths=(1.0, 1.0, 1.0), cells_per_side=(1, 1, 1)) -> SimplicialComplex:
    """Structured box mesh with the Freudenthal (Kuhn) 6-tet split of each cube.

    Each cube is cut into the 6 tetrahedra that share its main diagonal: one
    per monotone lattice path from the lowest to the highest corner.
    """
    lengths = tuple(float(x) for x in lengths)
    cells = tuple(int(c) for c in cells_per_side)
    if len(lengths) != 3 or len(cells) != 3:
        raise MeshError("lengths and cells_per_side must have three entries")
    if min(lengths) <= 0.0 or not all(np.isfinite(lengths)):
        raise MeshError(f"box lengths must be positive, got {lengths}")
    if min(cells) < 1:
        raise MeshError(f"cells per side must be >= 1, got {cells}")
    nx, ny, nz = cells

    gx, gy, gz = (np.linspace(0.0, lengths[i], cells[i] + 1) for i in range(3))
    zz, yy, xx = np.meshgrid(gz, gy, gx, indexing="ij")
    vertices = np.column_stack([xx.ravel(), yy.ravel(), zz.ravel()])

    stride = np.array([1, nx + 1, (nx + 1) * (ny + 1)], dtype=np.int64)
    iz, iy, ix = np.meshgrid(np.arange(nz), np.arange(ny), np.arange(nx), indexing="ij")
    corners = (ix.ravel() * stride[0] + iy.ravel() * stride[1] + iz.ravel() * stride[2])
    tets = []
    for perm in permutations(range(3)):
        steps = np.cumsum(stride[list(perm)])
        tets.append(np.column_stack([corners] + [corners + s for s in steps]))
    tets = np.vstack(tets)
    # Paths increase the vertex index at every step, so rows are already sorted.
    return complex_from_tets(vertices, tets, lengths)


def complex_from_tets(vertices, tets, lengths=(1.0, 1.0, 1.0)) -> SimplicialComplex:
    """Complex generated by tetrahedra given as rows of ascending vertex indices."""
    vertices = np.asarray(vertices, dtype=float)
    tets = np.asarray(tets, dtype=np.int64)
    if tets.ndim != 2 or tets.shape[1] != 4 or np.any(np.diff(tets, axis=1) <= 0):
        raise MeshError("tetrahedra must be rows of 4 strictly ascending vertex indices")
    tets = tets[np.lexsort(tets.T[::-1])]
    n_vertices = vertices.shape[0]
    edges = _unique_rows(tets[:, TET_EDGES].reshape(-1, 2))
    faces = _unique_rows(tets[:, TET_FACES].reshape(-1, 3))
    verts = np.arange(n_vertices, dtype=np.int64)[:, None]

    tet_edges = _lookup(edges, tets[:, TET_EDGES], n_vertices)
    tet_faces = _lookup(faces, tets[:, TET_FACES], n_vertices)
    face_edges = _lookup(edges, faces[:, TRI_EDGES], n_vertices)

    owners = np.bincount(tet_faces.ravel(), minlength=faces.shape[0])
    if owners.max() > 2:
        raise MeshError("non-manifold face shared by more than two tets")
    boundary_facets = np.flatnonzero(owners == 1)
    flat_tet = np.repeat(np.arange(tets.shape[0]), 4)
    first_owner = np.full(faces.shape[0], -1, dtype=np.int64)
    first_owner[tet_faces.ravel()[::-1]] = flat_tet[::-1]
    facet_tets = first_owner[boundary_facets]

    bd = [np.unique(faces[boundary_facets].ravel()),
          np.unique(face_edges[boundary_facets].ravel()),
          boundary_facets.copy()]
    return SimplicialComplex(
        vertices=vertices,
        simplices=(verts, edges, faces, tets),
        tet_edges=tet_edges,
        tet_faces=tet_faces,
        face_edges=face_edges,
        boundary_facets=boundary_facets,
        facet_tets=facet_tets,
        facet_gamma=np.zeros(boundary_facets.shape[0], dtype=np.int8),
        boundary_simplices=tuple(bd),
        boundary_gamma=tuple(np.zeros(b.shape[0], dtype=np.int8) for b in bd),
        lengths=tuple(lengths),
    )


def incidence(complex: SimplicialComplex, k: int) -> sp.csr_matrix:
    """Coboundary matrix d^k with rows (k+1)-simplices and columns k-simplices.

    Entry (i, j) is (-1)^m when simplex j is simplex i with its m-th vertex
    deleted, and zero otherwise.
    """
    if k not in (0, 1, 2):
        raise MeshError(f"incidence degree must be 0, 1 or 2, got {k}")
    upper = complex.simplices[k + 1]
    lower = complex.simplices[k]
    rows, cols, vals = [], [], []
    for m in range(k + 2):
        facet = np.delete(upper, m, axis=1)
        cols.append(_lookup(lower, facet, complex.n_vertices))
        rows.append(np.arange(upper.shape[0]))
        vals.append(np.full(upper.shape[0], -1 if m % 2 else 1, dtype=np.int64))
    mat = sp.coo_matrix(
        (np.concatenate(vals), (np.concatenate(rows), np.concatenate(cols))),
        shape=(upper.shape[0], lower.shape[0]),
    )
    return mat.tocsr()


def plane_predicate(planes, tol: float = PLANE_TOL) -> Predicate:
    """Membership test for a union of axis-aligned planes given as (axis, value)."""
    planes = [(int(a), float(v)) for a, v in planes]

    def predicate(points: np.ndarray) -> np.ndarray:
        points = np.atleast_2d(points)
        hit = np.zeros(points.shape[0], dtype=bool)
        for axis, value in planes:
            hit |= np.abs(points[:, axis] - value) <= tol
        return hit

    return predicate


def box_gamma_predicates(lengths) -> tuple:
    """Gamma_1 = lower faces {x=0, y=0, z=0}; Gamma_2 = upper faces of the box."""
    lower = plane_predicate([(a, 0.0) for a in range(3)])
    upper = plane_predicate([(a, lengths[a]) for a in range(3)])
    return lower, upper


def classify_boundary(complex: SimplicialComplex, gamma1_predicate: Predicate | None,
                      gamma2_predicate: Predicate | None) -> SimplicialComplex:
    """Tag boundary facets and lower-dimensional boundary simplices with Gamma_1/Gamma_2.

    Facets are tagged from their barycenters; Gamma_1 wins if both predicates
    accept. A boundary vertex or edge is Gamma_1 when it belongs to any
    Gamma_1 facet and Gamma_2 otherwise. ``None`` stands for the empty set.
    """
    faces = complex.simplices[2][complex.boundary_facets]
    centers = complex.vertices[faces].mean(axis=1)
    empty = np.zeros(centers.shape[0], dtype=bool)
    in1 = np.asarray(gamma1_predicate(centers), dtype=bool) if gamma1_predicate else empty
    in2 = np.asarray(gamma2_predicate(centers), dtype=bool) if gamma2_predicate else empty
    uncovered = ~(in1 | in2)
    if uncovered.any():
        raise MeshError(f"{int(uncovered.sum())} boundary facets belong to neither Gamma_1 nor Gamma_2")
    facet_gamma = np.where(in1, 1, 2).astype(np.int8)

    tagged = replace(complex, facet_gamma=facet_gamma)
    gammas = []
    for k in range(3):
        on1 = np.isin(complex.boundary_simplices[k], tagged.closure(k, 1))
        gammas.append(np.where(on1, 1, 2).astype(np.int8))
    return replace(tagged, boundary_gamma=tuple(gammas))


def benchmark_box_mesh(n: int) -> SimplicialComplex:
    """Box [0,1]x[0,1/2]x[0,1/2] with n cells per side and the lower/upper face split."""
    lengths = (1.0, 0.5, 0.5)
    complex = build_box_mesh(lengths, (n, n, n))
    return classify_boundary(complex, *box_gamma_predicates(lengths))


def write_mesh_dump(complex: SimplicialComplex, path) -> None:
    """Plain-text dump: vertices, then one sorted simplex per line for each degree."""
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(f"vertices {complex.n_vertices}\n")
        for x, y, z in complex.vertices:
            fh.write(f"{x!r} {y!r} {z!r}\n")
        for k in range(1, 4):
            table = complex.simplices[k]
            fh.write(f"simplices {k} {table.shape[0]}\n")
            for row in table:
                fh.write(" ".join(str(int(v)) for v in row) + "\n")
        if complex.is_classified:
            fh.write(f"boundary_facets {complex.boundary_facets.shape[0]}\n")
            for face, gamma in zip(complex.boundary_facets, complex.facet_gamma):
                fh.write(f"{int(face)} {int(gamma)}\n")
