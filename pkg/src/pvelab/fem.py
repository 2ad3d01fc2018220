"""Meshes and piecewise-linear finite element assembly.

Model domains are the unit interval (dim=1) and the unit square (dim=2,
uniform right-triangle mesh).  Pressure uses continuous P1 on all nodes
(natural boundary condition, zero-mean constraint handled downstream);
each displacement component uses continuous P1 with homogeneous Dirichlet
rows eliminated.  Displacement coefficient vectors therefore carry interior
degrees of freedom only; ``embed_displacement`` re-inserts the boundary
zeros when a full nodal vector is needed.

The coupling form G[i, j] = (grad psi_j, phi_i) is scattered from the same
element quadrature as the divergence form Ddiv[i, j] = (div phi_j, psi_i),
which makes the discrete integration-by-parts identity G = -Ddiv^T hold
entrywise and exactly.
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum
from typing import Callable

import numpy as np
import scipy.sparse as sp

from .errors import InvalidResolution, SpaceMismatch
from .params import PhysParams

ZERO_MEAN_REL_TOL = 1e-12


class Space(Enum):
    PRESSURE_ZERO_MEAN = "PressureZeroMean"
    DISPLACEMENT = "Displacement"


@dataclass(frozen=True)
class Mesh:
    """Conforming simplicial mesh on the unit interval or unit square."""

    dim: int
    n: int
    nodes: np.ndarray         # (n_nodes, dim)
    elements: np.ndarray      # (n_elems, dim+1) connectivity
    boundary_nodes: np.ndarray
    h: float

    @property
    def n_nodes(self) -> int:
        return self.nodes.shape[0]

    @property
    def interior_nodes(self) -> np.ndarray:
        mask = np.ones(self.n_nodes, dtype=bool)
        mask[self.boundary_nodes] = False
        return np.nonzero(mask)[0]


def build_mesh(dim: int, n: int) -> Mesh:
    """Uniform mesh with ``n`` subdivisions per side.

    dim=1: n elements on (0,1); dim=2: 2*n^2 right triangles on the unit
    square (each cell split along the diagonal from (i+1,j) to (i,j+1)).
    """
    if n < 2:
        raise InvalidResolution(f"need n >= 2 subdivisions, got {n}")
    if dim == 1:
        nodes = np.linspace(0.0, 1.0, n + 1).reshape(-1, 1)
        elements = np.column_stack([np.arange(n), np.arange(1, n + 1)])
        boundary = np.array([0, n])
        h = 1.0 / n
    elif dim == 2:
        xs = np.linspace(0.0, 1.0, n + 1)
        X, Y = np.meshgrid(xs, xs, indexing="xy")
        nodes = np.column_stack([X.ravel(), Y.ravel()])

        def idx(i, j):
            return i + j * (n + 1)

        tris = []
        for j in range(n):
            for i in range(n):
                a, b = idx(i, j), idx(i + 1, j)
                c, d = idx(i + 1, j + 1), idx(i, j + 1)
                tris.append((a, b, d))
                tris.append((b, c, d))
        elements = np.array(tris, dtype=int)
        onb = (
            (nodes[:, 0] == 0.0) | (nodes[:, 0] == 1.0)
            | (nodes[:, 1] == 0.0) | (nodes[:, 1] == 1.0)
        )
        boundary = np.nonzero(onb)[0]
        h = np.sqrt(2.0) / n  # longest triangle edge
    else:
        raise InvalidResolution(f"dim must be 1 or 2, got {dim}")
    return Mesh(dim=dim, n=n, nodes=nodes, elements=elements,
                boundary_nodes=boundary, h=h)


@dataclass
class OperatorBundle:
    """Assembled bilinear forms for one mesh and parameter set.

    Displacement matrices are restricted to interior degrees of freedom
    (component-major layout in 2D: all x-components, then all y-components).
    Pressure matrices act on all nodes.
    """

    mesh: Mesh
    params: PhysParams
    Ke: sp.csr_matrix        # elastic stiffness e(u, v)
    Ap: sp.csr_matrix        # pressure stiffness a(p, q) = (kappa grad p, grad q)
    Mp: sp.csr_matrix        # pressure mass
    Mu: sp.csr_matrix        # displacement (vector) mass
    G: sp.csr_matrix         # (grad p, v), interior rows   == -Ddiv^T
    Ddiv: sp.csr_matrix      # (div u, q), interior columns
    Kdivdiv: sp.csr_matrix   # (div u, div v)
    meanvec: np.ndarray      # pressure-space representer of f -> integral(f)
    disp_index: np.ndarray   # interior node indices (per scalar component)

    @property
    def n_pressure(self) -> int:
        return self.Mp.shape[0]

    @property
    def n_displacement(self) -> int:
        return self.Ke.shape[0]

    @property
    def domain_measure(self) -> float:
        return float(self.meanvec.sum())


def _assemble_1d(mesh: Mesh, params: PhysParams):
    n = mesh.n
    h = mesh.h
    nn = n + 1
    # Element matrices for P1 on an interval of length h.
    m_loc = (h / 6.0) * np.array([[2.0, 1.0], [1.0, 2.0]])
    k_loc = (1.0 / h) * np.array([[1.0, -1.0], [-1.0, 1.0]])
    # d_loc[a, b] = integral( psi_a * dphi_b/dx )
    d_loc = 0.5 * np.array([[-1.0, 1.0], [-1.0, 1.0]])

    rows, cols = [], []
    mv, kv, dv = [], [], []
    for e in range(n):
        conn = (e, e + 1)
        for a in range(2):
            for b in range(2):
                rows.append(conn[a])
                cols.append(conn[b])
                mv.append(m_loc[a, b])
                kv.append(k_loc[a, b])
                dv.append(d_loc[a, b])
    shape = (nn, nn)
    M = sp.csr_matrix((mv, (rows, cols)), shape=shape)
    K = sp.csr_matrix((kv, (rows, cols)), shape=shape)
    D = sp.csr_matrix((dv, (rows, cols)), shape=shape)
    return M, K, D


def _assemble_2d(mesh: Mesh, params: PhysParams):
    """Scalar mass/stiffness plus gradient tables for the triangle mesh."""
    nodes, elems = mesh.nodes, mesh.elements
    ne = elems.shape[0]
    p = nodes[elems]  # (ne, 3, 2)
    v1 = p[:, 1] - p[:, 0]
    v2 = p[:, 2] - p[:, 0]
    area = 0.5 * np.abs(v1[:, 0] * v2[:, 1] - v1[:, 1] * v2[:, 0])
    # Barycentric gradients: grad lambda_l, l = 0,1,2.
    g = np.empty((ne, 3, 2))
    for l in range(3):
        pl1 = p[:, (l + 1) % 3]
        pl2 = p[:, (l + 2) % 3]
        g[:, l, 0] = pl1[:, 1] - pl2[:, 1]
        g[:, l, 1] = pl2[:, 0] - pl1[:, 0]
    g /= (2.0 * area)[:, None, None]

    m_ref = np.array([[2.0, 1.0, 1.0], [1.0, 2.0, 1.0], [1.0, 1.0, 2.0]]) / 12.0
    rows = np.repeat(elems, 3, axis=1).ravel()
    cols = np.tile(elems, (1, 3)).ravel()
    m_vals = (area[:, None, None] * m_ref[None]).ravel()
    k_vals = (area[:, None, None] * np.einsum("eld,emd->elm", g, g)).ravel()
    nn = mesh.n_nodes
    M = sp.csr_matrix((m_vals, (rows, cols)), shape=(nn, nn))
    K = sp.csr_matrix((k_vals, (rows, cols)), shape=(nn, nn))
    return M, K, g, area


def assemble_forms(mesh: Mesh, params: PhysParams) -> OperatorBundle:
    """Assemble every discrete bilinear form used by the solvers."""
    interior = mesh.interior_nodes
    nn = mesh.n_nodes

    if mesh.dim == 1:
        M, K, D = _assemble_1d(mesh, params)
        Mp = M
        Ap = params.kappa * K
        Ke_full = params.lame_p_wave * K
        Ke = Ke_full[interior][:, interior].tocsr()
        Mu = M[interior][:, interior].tocsr()
        # Ddiv rows: all pressure nodes; columns: interior displacement dofs.
        Ddiv = D[:, interior].tocsr()
        Kdivdiv = K[interior][:, interior].tocsr()
        disp_index = interior
    else:
        M, K, g, area = _assemble_2d(mesh, params)
        Mp = M
        Ap = params.kappa * K
        elems = mesh.elements
        ne = elems.shape[0]
        lam, mu = params.lambda_e, params.mu

        # Vector-P1 element blocks over components (alpha_c, beta_c in {x,y}).
        # e(phi_{l,a}, phi_{m,b}) = 2 mu eps:eps + lam div*div, per element.
        gx, gy = g[:, :, 0], g[:, :, 1]
        e_blk = np.empty((ne, 2, 3, 2, 3))
        exx = 2 * mu * (np.einsum("el,em->elm", gx, gx)
                        + 0.5 * np.einsum("el,em->elm", gy, gy))
        eyy = 2 * mu * (np.einsum("el,em->elm", gy, gy)
                        + 0.5 * np.einsum("el,em->elm", gx, gx))
        exy = mu * np.einsum("el,em->elm", gy, gx)  # eps(u_x):eps(v_y) part
        e_blk[:, 0, :, 0, :] = exx + lam * np.einsum("el,em->elm", gx, gx)
        e_blk[:, 1, :, 1, :] = eyy + lam * np.einsum("el,em->elm", gy, gy)
        e_blk[:, 0, :, 1, :] = exy + lam * np.einsum("el,em->elm", gx, gy)
        e_blk[:, 1, :, 0, :] = np.swapaxes(e_blk[:, 0, :, 1, :], 1, 2)
        e_blk *= area[:, None, None, None, None]

        gc = np.stack([gx, gy], axis=1)  # (ne, comp, 3)
        dd_blk = np.einsum("eal,ebm->ealbm", gc, gc) * area[:, None, None, None, None]

        # Scatter with component-major global dof index: comp*nn + node.
        rows = (np.arange(2)[None, :, None, None, None] * nn
                + elems[:, None, :, None, None])
        cols = (np.arange(2)[None, None, None, :, None] * nn
                + elems[:, None, None, None, :])
        rows = np.broadcast_to(rows, e_blk.shape).ravel()
        cols = np.broadcast_to(cols, e_blk.shape).ravel()
        Ke_full = sp.csr_matrix((e_blk.ravel(), (rows, cols)), shape=(2 * nn, 2 * nn))
        Kdd_full = sp.csr_matrix((dd_blk.ravel(), (rows, cols)), shape=(2 * nn, 2 * nn))

        # Ddiv[i, (b,m)] = (div phi_{m,b}, psi_i) = g_{m,b} * area/3 per element.
        d_rows = np.broadcast_to(elems[:, :, None, None], (ne, 3, 2, 3)).ravel()
        d_cols = (np.arange(2)[None, None, :, None] * nn
                  + elems[:, None, None, :])
        d_cols = np.broadcast_to(d_cols, (ne, 3, 2, 3)).ravel()
        d_vals = np.broadcast_to((gc * (area / 3.0)[:, None, None])[:, None, :, :],
                                 (ne, 3, 2, 3)).ravel()
        Ddiv_full = sp.csr_matrix((d_vals, (d_rows, d_cols)), shape=(nn, 2 * nn))

        disp_index = np.concatenate([interior, nn + interior])
        Ke = Ke_full[disp_index][:, disp_index].tocsr()
        Kdivdiv = Kdd_full[disp_index][:, disp_index].tocsr()
        Ddiv = Ddiv_full[:, disp_index].tocsr()
        Mu = sp.block_diag(
            [M[interior][:, interior], M[interior][:, interior]]
        ).tocsr()

    G = (-Ddiv.T).tocsr()
    meanvec = np.asarray(Mp @ np.ones(nn))
    return OperatorBundle(
        mesh=mesh, params=params, Ke=Ke.tocsr(), Ap=Ap.tocsr(), Mp=Mp.tocsr(),
        Mu=Mu.tocsr(), G=G, Ddiv=Ddiv.tocsr(), Kdivdiv=Kdivdiv.tocsr(),
        meanvec=meanvec, disp_index=np.asarray(disp_index),
    )


@dataclass
class FieldVec:
    """Coefficient vector tagged with its function space."""

    coeffs: np.ndarray
    space: Space
    mesh: Mesh

    def copy(self) -> "FieldVec":
        return FieldVec(self.coeffs.copy(), self.space, self.mesh)

    def check(self, bundle: OperatorBundle) -> None:
        if self.space is Space.PRESSURE_ZERO_MEAN:
            nrm = np.linalg.norm(self.coeffs)
            if nrm > 0 and abs(bundle.meanvec @ self.coeffs) > ZERO_MEAN_REL_TOL * nrm:
                raise SpaceMismatch("pressure field is not zero-mean")


def remove_mean(bundle: OperatorBundle, coeffs: np.ndarray) -> np.ndarray:
    """Subtract the mass-weighted mean (constant mode) from a pressure vector."""
    m = (bundle.meanvec @ coeffs) / bundle.domain_measure
    return coeffs - m


def project_function(
    bundle: OperatorBundle,
    f: Callable[..., float] | np.ndarray,
    space: Space,
) -> FieldVec:
    """Nodal interpolation of ``f`` into the requested space.

    ``f`` is called with unpacked node coordinates (f(x) in 1D, f(x, y) in
    2D) or may be a nodal value array.  Pressure fields get their
    mass-weighted mean removed; displacement fields are sampled on interior
    nodes only (the Dirichlet boundary values are identically zero).  For a
    2D displacement, ``f`` must return a pair (fx, fy).
    """
    mesh = bundle.mesh
    if space is Space.PRESSURE_ZERO_MEAN:
        if callable(f):
            vals = np.array([f(*xy) for xy in mesh.nodes], dtype=float)
        else:
            vals = np.asarray(f, dtype=float)
        vals = remove_mean(bundle, vals)
        return FieldVec(vals, space, mesh)
    if space is Space.DISPLACEMENT:
        pts = mesh.nodes[mesh.interior_nodes]
        if callable(f):
            sampled = [f(*xy) for xy in pts]
            if mesh.dim == 1:
                vals = np.array(sampled, dtype=float)
            else:
                arr = np.asarray(sampled, dtype=float)
                vals = np.concatenate([arr[:, 0], arr[:, 1]])
        else:
            vals = np.asarray(f, dtype=float)
        return FieldVec(vals, space, mesh)
    raise SpaceMismatch(f"unknown space {space}")


def embed_displacement(bundle: OperatorBundle, coeffs: np.ndarray) -> np.ndarray:
    """Expand interior displacement dofs to full nodal vectors (zeros on the boundary)."""
    nn = bundle.mesh.n_nodes
    full = np.zeros(bundle.mesh.dim * nn)
    full[bundle.disp_index] = coeffs
    return full


def norm(bundle: OperatorBundle, v: FieldVec, which: str) -> float:
    """Quadratic-form norm of a field: L2, Vnorm (pressure) or Enorm (displacement)."""
    c = v.coeffs
    if which == "L2":
        M = bundle.Mp if v.space is Space.PRESSURE_ZERO_MEAN else bundle.Mu
        return float(np.sqrt(max(c @ (M @ c), 0.0)))
    if which == "Vnorm":
        if v.space is not Space.PRESSURE_ZERO_MEAN:
            raise SpaceMismatch("Vnorm is defined for pressure fields")
        return float(np.sqrt(max(c @ (bundle.Ap @ c), 0.0)))
    if which == "Enorm":
        if v.space is not Space.DISPLACEMENT:
            raise SpaceMismatch("Enorm is defined for displacement fields")
        return float(np.sqrt(max(c @ (bundle.Ke @ c), 0.0)))
    raise SpaceMismatch(f"unknown norm {which!r}")
