"""Lowest-order Whitney forms and the mimetic matrices built from them.

Forms are handled through their vector-calculus proxies: scalars for 0- and
3-forms, vectors for 1- and 2-forms. In three dimensions every wedge pairing
of complementary degrees reduces to a pointwise product or dot product of
proxies, so mass and duality matrices share one Gram-assembly routine.

No Hodge star is ever assembled. The duality matrices L^k pair primal and dual
fields directly.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
import scipy.io
import scipy.sparse as sp

from . import _kernels
from .mesh import TRI_EDGES, SimplicialComplex, incidence
from .quadrature import segment_rule, tet_rule, triangle_rule

DIM = 3
PAIRING_DEGREE = 2  # products of affine proxies are quadratic
DOF_DEGREE = 10
ERROR_DEGREE = 6

_EPS = np.zeros((3, 3, 3))  # Levi-Civita symbol
_EPS[0, 1, 2] = _EPS[1, 2, 0] = _EPS[2, 0, 1] = 1.0
_EPS[0, 2, 1] = _EPS[2, 1, 0] = _EPS[1, 0, 2] = -1.0


@dataclass(frozen=True)
class TetGeometry:
    grads: np.ndarray
    volumes: np.ndarray
    orientation: np.ndarray


def tet_geometry(complex: SimplicialComplex) -> TetGeometry:
    grads, vol, orient = _kernels.tet_geometry(complex.vertices, complex.simplices[3])
    return TetGeometry(grads, vol, orient)


def _check_degree(k, lo=0, hi=DIM):
    if not isinstance(k, (int, np.integer)) or not lo <= k <= hi:
        raise ValueError(f"form degree {k} out of range {lo}..{hi}")


def _coefficient_array(coefficient, n_tet):
    coef = np.broadcast_to(np.asarray(coefficient, dtype=float), (n_tet,))
    if not np.all(np.isfinite(coef)) or np.any(coef <= 0.0):
        raise ValueError("material coefficient must be strictly positive")
    return coef


def _scatter(complex, k_row, k_col, local, shape):
    rows = complex.dof_map(k_row)
    cols = complex.dof_map(k_col)
    nr, nc = rows.shape[1], cols.shape[1]
    ii = np.repeat(rows, nc, axis=1).ravel()
    jj = np.tile(cols, (1, nr)).ravel()
    mat = sp.coo_matrix((local.ravel(), (ii, jj)), shape=shape)
    return mat.tocsr()


def whitney_at(complex: SimplicialComplex, k: int, bary, geometry: TetGeometry | None = None):
    """Proxies of all local Whitney k-forms at barycentric points of every tet."""
    geometry = geometry or tet_geometry(complex)
    return _kernels.whitney_values(k, bary, geometry.grads, geometry.volumes, geometry.orientation)


def assemble_pairing(complex: SimplicialComplex, k_row: int, k_col: int, coefficient=1.0,
                     geometry: TetGeometry | None = None) -> sp.csr_matrix:
    """Matrix of integrals of (proxy of phi_i^{k_row}) . (proxy of phi_j^{k_col}).

    With k_row == k_col this is the L2 inner product; with k_row + k_col == 3 it
    is the wedge pairing, since every complementary wedge in 3D is a dot product
    of proxies times the volume form.
    """
    geometry = geometry or tet_geometry(complex)
    bary, weights = tet_rule(PAIRING_DEGREE)
    coef = _coefficient_array(coefficient, complex.count(3))
    a = whitney_at(complex, k_row, bary, geometry)
    b = a if k_col == k_row else whitney_at(complex, k_col, bary, geometry)
    local = _kernels.element_gram(a, b, weights, geometry.volumes, coef)
    return _scatter(complex, k_row, k_col, local, (complex.count(k_row), complex.count(k_col)))


def assemble_mass(complex: SimplicialComplex, k: int, coefficient=1.0,
                  geometry: TetGeometry | None = None) -> sp.csr_matrix:
    """Weighted mass matrix M^k_c with entries <phi_i, c phi_j>."""
    _check_degree(k)
    return assemble_pairing(complex, k, k, coefficient, geometry)


def assemble_duality(complex: SimplicialComplex, k: int,
                     geometry: TetGeometry | None = None) -> sp.csr_matrix:
    """Duality matrix L^k (N_{3-k} x N_k) with entries int phi_i^{3-k} ^ phi_j^k."""
    _check_degree(k)
    return assemble_pairing(complex, DIM - k, k, 1.0, geometry)


def assemble_derivative(complex: SimplicialComplex, k: int, mass=None) -> sp.csr_matrix:
    """D^k = M^{k+1} d^k."""
    _check_degree(k, 0, DIM - 1)
    mass = assemble_mass(complex, k + 1) if mass is None else mass
    return (mass @ incidence(complex, k)).tocsr()


def assemble_G(complex: SimplicialComplex, k: int, duality=None) -> sp.csr_matrix:
    """G^k = L^{k+1} d^k, the pairing of (n-k-1)-forms with d of k-forms."""
    _check_degree(k, 0, DIM - 1)
    duality = assemble_duality(complex, k + 1) if duality is None else duality
    return (duality @ incidence(complex, k)).tocsr()


def assemble_derivative_pairing(complex: SimplicialComplex, k_row: int, k: int,
                                geometry: TetGeometry | None = None) -> sp.csr_matrix:
    """Integrals of phi_i^{k_row} . d(phi_j^k) computed from derivative proxies.

    With k_row = k+1 this gives D^k and with k_row = n-k-1 it gives G^k,
    without going through the incidence matrix.
    """
    _check_degree(k, 0, DIM - 1)
    geometry = geometry or tet_geometry(complex)
    bary, weights = tet_rule(PAIRING_DEGREE)
    a = whitney_at(complex, k_row, bary, geometry)
    dphi = _kernels.whitney_derivative(k, geometry.grads)
    b = np.broadcast_to(dphi[:, None], (dphi.shape[0], bary.shape[0]) + dphi.shape[1:])
    local = _kernels.element_gram(a, b, weights, geometry.volumes)
    return _scatter(complex, k_row, k, local, (complex.count(k_row), complex.count(k)))


# ---------------------------------------------------------------- boundary

def assemble_trace(complex: SimplicialComplex, k: int) -> sp.csr_matrix:
    """0/1 selector T^k from global k-DOFs to boundary k-DOFs (sorted boundary order)."""
    _check_degree(k, 0, DIM - 1)
    cols = complex.boundary_simplices[k]
    n_bd = cols.shape[0]
    return sp.csr_matrix((np.ones(n_bd), (np.arange(n_bd), cols)), shape=(n_bd, complex.count(k)))


@dataclass(frozen=True)
class FacetGeometry:
    """Per boundary facet: area, outward unit normal, surface barycentric gradients,
    and the sign relating the sorted vertex orientation to the outward one."""

    area: np.ndarray
    normal: np.ndarray
    surface_grads: np.ndarray
    orientation: np.ndarray


def facet_geometry(complex: SimplicialComplex) -> FacetGeometry:
    faces = complex.simplices[2][complex.boundary_facets]
    x = complex.vertices[faces]
    e1 = x[:, 1] - x[:, 0]
    e2 = x[:, 2] - x[:, 0]
    cross = np.cross(e1, e2)
    norm = np.linalg.norm(cross, axis=1)
    tets = complex.simplices[3][complex.facet_tets]
    opposite = tets.sum(axis=1) - faces.sum(axis=1)
    inward = np.einsum("fa,fa->f", cross, complex.vertices[opposite] - x[:, 0]) > 0.0
    orientation = np.where(inward, -1.0, 1.0)
    normal = orientation[:, None] * cross / norm[:, None]

    jac = np.stack([e1, e2], axis=2)  # (F, 3, 2)
    gram = np.einsum("fai,faj->fij", jac, jac)
    pinv = np.einsum("fai,fij->faj", jac, np.linalg.inv(gram))  # columns grad l1, grad l2
    surface_grads = np.empty((faces.shape[0], 3, 3))
    surface_grads[:, 1] = pinv[:, :, 0]
    surface_grads[:, 2] = pinv[:, :, 1]
    surface_grads[:, 0] = -surface_grads[:, 1] - surface_grads[:, 2]
    return FacetGeometry(0.5 * norm, normal, surface_grads, orientation)


def _trace_values(k, bary, geom: FacetGeometry):
    """Traces of the Whitney k-forms on each facet at barycentric points.

    k=0: scalar; k=1: tangential proxy vector; k=2: density w.r.t. the outward
    area form (constant +-1/area).
    """
    n_f, nq = geom.area.shape[0], bary.shape[0]
    if k == 0:
        return np.broadcast_to(bary[None, :, :, None], (n_f, nq, 3, 1))
    if k == 1:
        i, j = TRI_EDGES[:, 0], TRI_EDGES[:, 1]
        g = geom.surface_grads
        return bary[None, :, i, None] * g[:, None, j, :] - bary[None, :, j, None] * g[:, None, i, :]
    if k == 2:
        dens = (geom.orientation / geom.area)[:, None, None, None]
        return np.broadcast_to(dens, (n_f, nq, 1, 1))
    raise ValueError(f"no trace of {k}-forms on a surface")


def _boundary_positions(complex, k):
    sub = complex.facet_subsimplices(k)
    return np.searchsorted(complex.boundary_simplices[k], sub)


def assemble_boundary_wedge(complex: SimplicialComplex, k: int, gamma: int | None = None,
                            geom: FacetGeometry | None = None) -> sp.csr_matrix:
    """Boundary wedge matrix Psi^k (N^bd_{n-k-1} x N^bd_k).

    Entry (l, m) is the integral over the boundary, oriented by the outward
    normal, of psi_l^{n-k-1} ^ psi_m^k. With ``gamma`` given, only facets
    tagged Gamma_1 or Gamma_2 contribute.
    """
    _check_degree(k, 0, DIM - 1)
    geom = geom or facet_geometry(complex)
    k_row = DIM - 1 - k
    bary, weights = triangle_rule(PAIRING_DEGREE)
    a = _trace_values(k_row, bary, geom)
    b = _trace_values(k, bary, geom)
    if k_row == 1:  # (u x v) . n for two tangential 1-form proxies
        local = np.einsum("q,fqia,fqjb,abc,fc->fij", weights, a, b, _EPS, geom.normal)
    else:
        local = np.einsum("q,fqic,fqjc->fij", weights, a, b)
    local = local * geom.area[:, None, None]
    if gamma is not None:
        local = local * (complex.facet_gamma == gamma)[:, None, None]
    rows = _boundary_positions(complex, k_row)
    cols = _boundary_positions(complex, k)
    nr, nc = rows.shape[1], cols.shape[1]
    ii = np.repeat(rows, nc, axis=1).ravel()
    jj = np.tile(cols, (1, nr)).ravel()
    shape = (complex.boundary_simplices[k_row].shape[0], complex.boundary_simplices[k].shape[0])
    return sp.coo_matrix((local.ravel(), (ii, jj)), shape=shape).tocsr()



def assemble_control(complex: SimplicialComplex, k: int, gamma: int | None = None,
                     psi=None) -> sp.csr_matrix:
    """Boundary control matrix B^k = (T^{n-k-1})^T Psi^k (N_{n-k-1} x N^bd_k)."""
    _check_degree(k, 0, DIM - 1)
    psi = assemble_boundary_wedge(complex, k, gamma) if psi is None else psi
    return (assemble_trace(complex, DIM - 1 - k).T @ psi).tocsr()


# ---------------------------------------------------------------- operator set

@dataclass
class OperatorSet:
    """All unweighted mimetic matrices of one mesh, indexed by form degree."""

    complex: SimplicialComplex
    mass: dict = field(default_factory=dict)
    duality: dict = field(default_factory=dict)
    incidence: dict = field(default_factory=dict)
    derivative: dict = field(default_factory=dict)
    dual_derivative: dict = field(default_factory=dict)
    trace: dict = field(default_factory=dict)
    boundary_wedge: dict = field(default_factory=dict)
    control: dict = field(default_factory=dict)
    geometry: TetGeometry | None = None
    facets: FacetGeometry | None = None

    def weighted_mass(self, k: int, coefficient) -> sp.csr_matrix:
        """M^k_c; constants rescale the cached matrix, per-tet arrays reassemble."""
        if np.ndim(coefficient) == 0:
            _coefficient_array(coefficient, 1)
            return (float(coefficient) * self.mass[k]).tocsr()
        return assemble_mass(self.complex, k, coefficient, self.geometry)

    def boundary_wedge_on(self, k: int, gamma: int) -> sp.csr_matrix:
        """Psi^k restricted to the facets of one boundary part."""
        return assemble_boundary_wedge(self.complex, k, gamma, self.facets)

    def matrices(self):
        """Iterate over (name, matrix) for every stored operator."""
        for label, table in (("M", self.mass), ("L", self.duality), ("d", self.incidence),
                             ("D", self.derivative), ("G", self.dual_derivative),
                             ("T", self.trace), ("Psi", self.boundary_wedge),
                             ("B", self.control)):
            for k in sorted(table):
                yield f"{label}{k}", table[k]


def build_operators(complex: SimplicialComplex) -> OperatorSet:
    geometry = tet_geometry(complex)
    ops = OperatorSet(complex=complex, geometry=geometry)
    for k in range(DIM + 1):
        ops.mass[k] = assemble_mass(complex, k, 1.0, geometry)
        ops.duality[k] = assemble_duality(complex, k, geometry)
    for k in range(DIM):
        ops.incidence[k] = incidence(complex, k)
        ops.derivative[k] = (ops.mass[k + 1] @ ops.incidence[k]).tocsr()
        ops.dual_derivative[k] = (ops.duality[k + 1] @ ops.incidence[k]).tocsr()
    ops.facets = facet_geometry(complex)
    for k in range(DIM):
        ops.trace[k] = assemble_trace(complex, k)
        ops.boundary_wedge[k] = assemble_boundary_wedge(complex, k, None, ops.facets)
    for k in range(DIM):
        ops.control[k] = (ops.trace[DIM - 1 - k].T @ ops.boundary_wedge[k]).tocsr()
    return ops


def write_matrix_market(ops: OperatorSet, directory) -> list:
    """Dump every operator as ``<name>.mtx`` (coordinate format)."""
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    written = []
    for name, mat in ops.matrices():
        path = directory / f"{name}.mtx"
        scipy.io.mmwrite(str(path), sp.coo_matrix(mat), precision=17)
        written.append(path)
    return written


# ---------------------------------------------------------------- interpolation

def interpolate(complex: SimplicialComplex, k: int, proxy, degree: int = DOF_DEGREE,
                geometry: TetGeometry | None = None) -> np.ndarray:
    """Canonical Whitney DOFs of a smooth form given by its proxy.

    ``proxy(points)`` maps (N, 3) points to (N,) scalars or (N, 3) vectors. DOFs
    are vertex values, edge circulations, face fluxes (sorted-vertex normal) and
    cell integrals (sorted-vertex orientation).
    """
    _check_degree(k)
    x = complex.vertices
    if k == 0:
        return np.asarray(proxy(x), dtype=float).reshape(-1)
    simplices = complex.simplices[k]
    corners = x[simplices]  # (N, k+1, 3)
    if k == 1:
        bary, w = segment_rule(degree)
    elif k == 2:
        bary, w = triangle_rule(degree)
    else:
        bary, w = tet_rule(degree)
    pts = np.einsum("qi,nia->nqa", bary, corners)
    vals = np.asarray(proxy(pts.reshape(-1, 3)), dtype=float)
    if k == 1:
        vals = vals.reshape(pts.shape)
        tangent = corners[:, 1] - corners[:, 0]
        return np.einsum("q,nqa,na->n", w, vals, tangent)
    if k == 2:
        vals = vals.reshape(pts.shape)
        area_vec = 0.5 * np.cross(corners[:, 1] - corners[:, 0], corners[:, 2] - corners[:, 0])
        return np.einsum("q,nqa,na->n", w, vals, area_vec)
    geometry = geometry or tet_geometry(complex)
    vals = vals.reshape(pts.shape[:2])
    return geometry.orientation * geometry.volumes * (vals @ w)


def evaluate(complex: SimplicialComplex, k: int, coefficients, bary,
             geometry: TetGeometry | None = None) -> np.ndarray:
    """Proxy of the discrete form at barycentric points of every tet, shape (T, nq, comps)."""
    values = whitney_at(complex, k, bary, geometry)
    local = np.asarray(coefficients)[complex.dof_map(k)]
    return np.einsum("tqic,ti->tqc", values, local)


def quadrature_points(complex: SimplicialComplex, bary) -> np.ndarray:
    """Physical coordinates of barycentric points in every tet, shape (T, nq, 3)."""
    return np.einsum("qi,tia->tqa", bary, complex.vertices[complex.simplices[3]])


def l2_norm(complex: SimplicialComplex, k: int, coefficients, reference=None,
            degree: int = ERROR_DEGREE, geometry: TetGeometry | None = None) -> float:
    """L2 norm of (discrete form - reference proxy), by degree-``degree`` quadrature."""
    geometry = geometry or tet_geometry(complex)
    bary, w = tet_rule(degree)
    vals = evaluate(complex, k, coefficients, bary, geometry)
    if reference is not None:
        pts = quadrature_points(complex, bary)
        ref = np.asarray(reference(pts.reshape(-1, 3)), dtype=float).reshape(vals.shape)
        vals = vals - ref
    sq = np.einsum("q,tqc,tqc->t", w, vals, vals) * geometry.volumes
    return float(np.sqrt(sq.sum()))
