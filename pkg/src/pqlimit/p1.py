"""Piecewise-linear (P1) calculus on the lattice triangulation.

Every active lattice cell is split along its SW-NE diagonal into a lower
triangle (SW, SE, NE) and an upper triangle (SW, NE, NW).  On each triangle
the gradient of the nodal interpolant is a difference quotient of two node
pairs, so the gradient operator is a pair of index arrays rather than a
general sparse matrix.
"""

from __future__ import annotations

import numpy as np
import scipy.sparse as sp


class P1Mesh:
    def __init__(self, domain):
        nx, ny = domain.nx, domain.ny
        self.h = domain.h
        self.n = domain.n
        jj, ii = np.nonzero(domain.cell_active)
        sw = jj * nx + ii
        se = sw + 1
        nw = sw + nx
        ne = nw + 1
        # lower: gx = (SE - SW)/h, gy = (NE - SE)/h
        # upper: gx = (NE - NW)/h, gy = (NW - SW)/h
        self.ix1 = np.concatenate([se, ne])
        self.ix0 = np.concatenate([sw, nw])
        self.iy1 = np.concatenate([ne, nw])
        self.iy0 = np.concatenate([se, sw])
        self.tri = np.concatenate([np.column_stack([sw, se, ne]), np.column_stack([sw, ne, nw])])
        self.ntri = self.tri.shape[0]
        self.area = 0.5 * self.h * self.h
        self._D = None

    def grad(self, u):
        """Per-triangle gradient components ``(gx, gy)``."""
        inv = 1.0 / self.h
        gx = (u[self.ix1] - u[self.ix0]) * inv
        gy = (u[self.iy1] - u[self.iy0]) * inv
        return gx, gy

    def div_t(self, fx, fy):
        """Adjoint of :meth:`grad`: nodal vector ``sum_T f_T . grad(phi_i)``."""
        inv = 1.0 / self.h
        n = self.n
        out = np.bincount(self.ix1, fx, n)
        out -= np.bincount(self.ix0, fx, n)
        out += np.bincount(self.iy1, fy, n)
        out -= np.bincount(self.iy0, fy, n)
        out *= inv
        return out

    @property
    def D(self):
        """Sparse gradient operators ``(Dx, Dy)`` of shape ``(ntri, n)``."""
        if self._D is None:
            m = self.ntri
            rows = np.concatenate([np.arange(m), np.arange(m)])
            vals = np.concatenate([np.full(m, 1.0 / self.h), np.full(m, -1.0 / self.h)])
            Dx = sp.csr_matrix((vals, (rows, np.concatenate([self.ix1, self.ix0]))), shape=(m, self.n))
            Dy = sp.csr_matrix((vals, (rows, np.concatenate([self.iy1, self.iy0]))), shape=(m, self.n))
            self._D = (Dx, Dy)
        return self._D

    def weighted_stiffness(self, cxx, cxy, cyy):
        """Assemble ``sum_T area * grad(phi_i)^T C_T grad(phi_j)`` as CSR."""
        Dx, Dy = self.D
        a = self.area
        K = Dx.T @ sp.diags(a * cxx) @ Dx + Dy.T @ sp.diags(a * cyy) @ Dy
        if cxy is not None:
            C = Dx.T @ sp.diags(a * cxy) @ Dy
            K = K + C + C.T
        return K.tocsr()

    def stiffness(self):
        one = np.ones(self.ntri)
        return self.weighted_stiffness(one, None, one)
