"""Discrete actions of the solution operators built from the assembled forms.

The central object is ``Operators``, a cache-carrying handle over one
``OperatorBundle``.  It exposes:

* ``elastic_solve``       -- inverse elastic stiffness (Dirichlet solve),
* ``pressure_to_dilation``-- the nonlocal zeroth-order map
                             p -> -div(elastic_solve(grad p)),
* ``apply_content_operator`` / ``solve_content_operator``
                          -- c0*I + alpha^2 * (pressure-to-dilation),
* ``apply_damping``       -- pressure stiffness plus scaled content operator,
* ``apply_q_generator``   -- stiffness composed with the inverse of
                             (alpha^2 * dilation + delta1 * stiffness).

Every application is pure: handles never mutate the bundle, and repeated
application to the same input returns identical output up to solver
tolerance.

Equal-order P1-P1 gives the discrete dilation operator a small spurious
kernel beyond constants (in 1D exactly the checkerboard mode).  Inversions
with c0 = 0 therefore deflate that kernel: the right-hand side is projected
onto the numerical range and the kernel content is reported alongside the
solution.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.linalg as dla
import scipy.sparse.linalg as spla

from .errors import (
    DenseModeUnavailable,
    InvalidRegime,
    SolveFailure,
)
from .fem import OperatorBundle, remove_mean
from .params import PhysParams

KERNEL_CUTOFF = 1e-10  # relative eigenvalue cutoff separating kernel from range


@dataclass
class SolverConfig:
    inner_tol: float = 1e-10
    outer_tol: float = 1e-9
    max_iter: int = 5000
    dense_threshold: int = 512


@dataclass
class OperatorPropertyReport:
    symmetry_defect: float
    min_dilation_ritz: float
    min_content_ritz: float
    min_dilation_singular: float
    kernel_dim: int
    coercivity_const: float
    content_solve_residual: float
    content_condition: float
    dilation_eigenvalues: np.ndarray


class Operators:
    """Matrix-free operator handle with cached factorizations.

    Dense-mode helpers (kernel bases, dense Gram matrices, modal bases) are
    only available while the pressure dimension stays at or below
    ``config.dense_threshold``.
    """

    def __init__(
        self,
        bundle: OperatorBundle,
        params: PhysParams | None = None,
        config: SolverConfig | None = None,
    ):
        self.bundle = bundle
        self.params = params if params is not None else bundle.params
        self.config = config or SolverConfig()
        self._cache: dict = {}

    # -- factorizations -----------------------------------------------------

    @property
    def _ke_lu(self):
        if "ke_lu" not in self._cache:
            self._cache["ke_lu"] = spla.splu(self.bundle.Ke.tocsc())
        return self._cache["ke_lu"]

    @property
    def _mp_lu(self):
        if "mp_lu" not in self._cache:
            self._cache["mp_lu"] = spla.splu(self.bundle.Mp.tocsc())
        return self._cache["mp_lu"]

    def _require_dense(self, what: str) -> None:
        n = self.bundle.n_pressure
        if n > self.config.dense_threshold:
            raise DenseModeUnavailable(
                f"{what} needs dense mode: pressure dimension {n} exceeds "
                f"threshold {self.config.dense_threshold}"
            )

    # -- elastic solve ------------------------------------------------------

    def elastic_solve(self, load: np.ndarray) -> np.ndarray:
        """Solve Ke w = load for a displacement-dual load vector."""
        w = self._ke_lu.solve(load)
        nrm = np.linalg.norm(load)
        if nrm > 0:
            res = np.linalg.norm(self.bundle.Ke @ w - load) / nrm
            if res > self.config.inner_tol:
                raise SolveFailure(f"elastic solve residual {res:.3e}")
        return w

    # -- dilation / content operators ----------------------------------------

    def dilation_gram(self, p: np.ndarray) -> np.ndarray:
        """Apply the Gram form Ddiv Ke^-1 Ddiv^T (dual representation of the dilation map)."""
        return self.bundle.Ddiv @ self.elastic_solve(self.bundle.Ddiv.T @ p)

    def pressure_to_dilation(self, p: np.ndarray) -> np.ndarray:
        """Map a zero-mean pressure vector through -div(elastic_solve(grad .))."""
        dual = -self.bundle.Ddiv @ self.elastic_solve(self.bundle.G @ p)
        return remove_mean(self.bundle, self._mp_lu.solve(dual))

    def apply_content_operator(self, p: np.ndarray) -> np.ndarray:
        """c0*p + alpha^2 * dilation(p), in the pressure space."""
        pr = self.params
        return pr.c0 * p + pr.alpha**2 * self.pressure_to_dilation(p)

    def content_gram(self, p: np.ndarray) -> np.ndarray:
        """Dual representation c0*Mp p + alpha^2 * (Ddiv Ke^-1 Ddiv^T) p."""
        pr = self.params
        return pr.c0 * (self.bundle.Mp @ p) + pr.alpha**2 * self.dilation_gram(p)

    # -- dense helpers ------------------------------------------------------

    def dense_dilation_gram(self) -> np.ndarray:
        """Dense Ddiv Ke^-1 Ddiv^T; cached."""
        if "kb" not in self._cache:
            self._require_dense("dense dilation Gram matrix")
            rhs = self.bundle.Ddiv.T.toarray()
            X = self._ke_lu.solve(rhs)
            self._cache["kb"] = self.bundle.Ddiv @ X
        return self._cache["kb"]

    def dense_dilation_matrix(self) -> np.ndarray:
        """Dense matrix of the pressure-to-dilation map (zero-mean output)."""
        if "bdense" not in self._cache:
            kb = self.dense_dilation_gram()
            B = self._mp_lu.solve(kb)
            ones = np.ones(B.shape[0])
            means = (self.bundle.meanvec @ B) / self.bundle.domain_measure
            self._cache["bdense"] = B - np.outer(ones, means)
        return self._cache["bdense"]

    def dilation_kernel(self) -> np.ndarray:
        """Orthonormal basis of the spurious kernel of the dilation Gram matrix.

        Contains the constant vector plus any equal-order instability modes
        (the checkerboard in 1D).
        """
        if "kernel" not in self._cache:
            self._require_dense("dilation kernel basis")
            kb = self.dense_dilation_gram()
            w, Q = dla.eigh(0.5 * (kb + kb.T))
            cut = KERNEL_CUTOFF * max(w.max(), 1.0e-300)
            self._cache["kernel"] = Q[:, w <= cut]
            self._cache["kb_eig"] = (w, Q)
        return self._cache["kernel"]

    def modal_basis(self) -> tuple[np.ndarray, np.ndarray]:
        """Mp-orthonormal zero-mean basis diagonalizing the pressure stiffness.

        Returns (V, a) with V^T Mp V = I, V^T Ap V = diag(a), a > 0, and the
        constant mode removed.
        """
        if "vbasis" not in self._cache:
            self._require_dense("modal basis")
            w, Q = dla.eigh(self.bundle.Ap.toarray(), self.bundle.Mp.toarray())
            # First generalized eigenvalue is the constant mode at zero.
            if not w[0] < 1e-8 * max(w[1], 1.0):
                raise SolveFailure("pressure stiffness kernel not resolved")
            self._cache["vbasis"] = (Q[:, 1:], w[1:])
        return self._cache["vbasis"]

    # -- content solves -----------------------------------------------------

    def solve_content_operator(
        self, d: np.ndarray, return_defect: bool = False
    ):
        """Solve (c0*I + alpha^2*dilation) x = d on the zero-mean space.

        With c0 = 0 the discrete operator is singular on the spurious
        kernel; the right-hand side is deflated onto the range and the
        relative kernel content is reported as ``defect``.

        Returns ``x`` or ``(x, defect)``.
        """
        pr = self.params
        b = self.bundle.Mp @ d
        defect = 0.0
        n = self.bundle.n_pressure
        if pr.c0 > 0:
            if n <= self.config.dense_threshold:
                key = ("content_cho", pr.c0, pr.alpha)
                if key not in self._cache:
                    A = pr.c0 * self.bundle.Mp.toarray() + pr.alpha**2 * self.dense_dilation_gram()
                    self._cache[key] = dla.cho_factor(0.5 * (A + A.T))
                x = dla.cho_solve(self._cache[key], b)
            else:
                x = self._cg(self.content_gram, b)
        else:
            self._require_dense("content solve with c0 = 0")
            Z = self.dilation_kernel()
            coeff = Z.T @ b
            nb = np.linalg.norm(b)
            defect = float(np.linalg.norm(coeff) / nb) if nb > 0 else 0.0
            b_range = b - Z @ coeff
            w, Q = self._cache["kb_eig"]
            cut = KERNEL_CUTOFF * max(w.max(), 1.0e-300)
            inv = np.where(w > cut, 1.0 / np.where(w > cut, w, 1.0), 0.0)
            x = Q @ (inv * (Q.T @ b_range)) / pr.alpha**2
        x = remove_mean(self.bundle, x)
        # Residual against the (possibly deflated) right-hand side.
        res_vec = self.content_gram(x) - b
        if pr.c0 == 0:
            Z = self.dilation_kernel()
            res_vec = res_vec - Z @ (Z.T @ res_vec)
        nb = np.linalg.norm(b)
        if nb > 0 and np.linalg.norm(res_vec) / nb > self.config.outer_tol:
            raise SolveFailure(
                f"content solve residual {np.linalg.norm(res_vec)/nb:.3e}"
            )
        if return_defect:
            return x, defect
        return x

    def _cg(self, op, b: np.ndarray) -> np.ndarray:
        """Plain conjugate gradients on a SPD matrix-free operator."""
        x = np.zeros_like(b)
        r = b - op(x)
        p = r.copy()
        rs = r @ r
        nb = np.linalg.norm(b)
        tol2 = (self.config.inner_tol * nb) ** 2
        for _ in range(self.config.max_iter):
            if rs <= tol2:
                return x
            Ap = op(p)
            alpha = rs / (p @ Ap)
            x += alpha * p
            r -= alpha * Ap
            rs_new = r @ r
            p = r + (rs_new / rs) * p
            rs = rs_new
        if rs <= (10 * self.config.inner_tol * nb) ** 2:
            return x
        raise SolveFailure(f"CG stalled at residual {np.sqrt(rs)/nb:.3e}")

    # -- damping and q-generator ---------------------------------------------

    def apply_damping(self, p: np.ndarray) -> np.ndarray:
        """Dual vector of (stiffness + delta1^-1 * content) applied to p."""
        pr = self.params
        if pr.delta1 <= 0:
            raise InvalidRegime("damping operator needs delta1 > 0")
        return self.bundle.Ap @ p + self.content_gram(p) / pr.delta1

    def apply_q_generator(self, q: np.ndarray) -> np.ndarray:
        """Apply stiffness composed with (alpha^2*dilation + delta1*stiffness)^-1."""
        pr = self.params
        if pr.delta1 <= 0:
            raise InvalidRegime("q-form generator needs delta1 > 0")
        if pr.c0 != 0:
            raise InvalidRegime("q-form generator is the c0 = 0 reduction")
        b = self.bundle.Mp @ q
        n = self.bundle.n_pressure
        if n <= self.config.dense_threshold:
            key = "qgen_cho"
            if key not in self._cache:
                A = (pr.alpha**2 * self.dense_dilation_gram()
                     + pr.delta1 * self.bundle.Ap.toarray())
                # PD on the zero-mean subspace only; pin the constant mode.
                mv = self.bundle.meanvec
                A = A + np.outer(mv, mv) / self.bundle.domain_measure
                self._cache[key] = dla.cho_factor(0.5 * (A + A.T))
            x = dla.cho_solve(self._cache[key], b)
        else:
            mv = self.bundle.meanvec
            meas = self.bundle.domain_measure

            def op(v):
                return (pr.alpha**2 * self.dilation_gram(v)
                        + pr.delta1 * (self.bundle.Ap @ v)
                        + mv * ((mv @ v) / meas))

            x = self._cg(op, b)
        x = remove_mean(self.bundle, x)
        return remove_mean(self.bundle, self._mp_lu.solve(self.bundle.Ap @ x))

    # -- property verification ----------------------------------------------

    def check_properties(self) -> OperatorPropertyReport:
        """Dense verification of symmetry, monotonicity and coercivity."""
        self._require_dense("operator property check")
        kb = self.dense_dilation_gram()
        sym = float(
            np.abs(kb - kb.T).max() / max(np.abs(kb).max(), 1.0e-300)
        )
        V, a = self.modal_basis()
        Bhat = V.T @ (0.5 * (kb + kb.T)) @ V
        Bhat = 0.5 * (Bhat + Bhat.T)
        beig = dla.eigvalsh(Bhat)
        pr = self.params
        chat = pr.c0 * np.eye(len(a)) + pr.alpha**2 * Bhat
        ceig = dla.eigvalsh(chat)
        coer = dla.eigvalsh(2.0 * np.diag(a) + chat, np.diag(a))
        kern = self.dilation_kernel()

        rng = np.random.default_rng(20240901)
        d = remove_mean(self.bundle, rng.standard_normal(self.bundle.n_pressure))
        if pr.c0 == 0:
            # Keep the probe inside the numerical range.
            d = remove_mean(self.bundle, self.apply_content_operator(d))
        x = self.solve_content_operator(d)
        res = self.apply_content_operator(x) - d
        resid = float(np.linalg.norm(res) / np.linalg.norm(d))

        return OperatorPropertyReport(
            symmetry_defect=sym,
            min_dilation_ritz=float(beig.min()),
            min_content_ritz=float(ceig.min()),
            min_dilation_singular=float(np.abs(beig).min()),
            kernel_dim=int(kern.shape[1]),
            coercivity_const=float(coer.min()),
            content_solve_residual=resid,
            content_condition=float(ceig.max() / max(ceig.min(), 1.0e-300)),
            dilation_eigenvalues=beig,
        )
