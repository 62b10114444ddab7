"""Operator-splitting solver for convex QPs with box and second-order
cone constraints.

    minimize   (1/2) x'Px + q'x
    subject to Ax = b
               lb <= x[box_idx] <= ub
               || (G_i x)[1:] || <= (G_i x)[0]   for each cone block i

The equality constraints are folded into the x-update's KKT system, so
they hold to machine precision at every iterate; cones and boxes are
enforced by projection on the splitting variable.  The KKT factorization
is cached, which makes repeated solves of the same structure (load
updates between grid steps) cheap.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
import scipy.linalg


@dataclass
class ConeSpec:
    """Static problem structure; numeric data that varies between solves
    (b, box bounds) is passed to solve()."""
    n: int
    P: np.ndarray | None
    q: np.ndarray
    A: np.ndarray
    box_idx: np.ndarray
    cones: list[np.ndarray] = field(default_factory=list)


@dataclass
class ConeResult:
    x: np.ndarray
    status: str          # 'optimal' | 'max_iter'
    iterations: int
    primal_residual: float
    dual_residual: float
    eq_dual: np.ndarray


def _project_soc(y: np.ndarray) -> np.ndarray:
    t, w = y[0], y[1:]
    nw = float(np.linalg.norm(w))
    if nw <= t:
        return y
    if nw <= -t:
        return np.zeros_like(y)
    tau = (t + nw) / 2.0
    out = np.empty_like(y)
    out[0] = tau
    out[1:] = w * (tau / nw)
    return out


class ConeSolver:
    """ADMM with over-relaxation and residual-balancing penalty updates."""

    def __init__(self, spec: ConeSpec, rho: float = 1.0, alpha: float = 1.6):
        self.spec = spec
        self.alpha = alpha
        n = spec.n
        rows = [np.eye(n)[spec.box_idx]] if len(spec.box_idx) else []
        self._box_rows = len(spec.box_idx)
        self._cone_slices = []
        r = self._box_rows
        for G in spec.cones:
            rows.append(G)
            self._cone_slices.append(slice(r, r + G.shape[0]))
            r += G.shape[0]
        self.M = np.vstack(rows) if rows else np.zeros((0, n))
        dims = {G.shape[0] for G in spec.cones}
        self._uniform_cone_dim = dims.pop() if len(dims) == 1 else None
        # objective scaling keeps the x-update balanced against ADMM's
        # quadratic penalty regardless of cost magnitudes
        scale = max(1.0, float(np.max(np.abs(spec.q))) if spec.q.size else 1.0)
        if spec.P is not None and spec.P.size:
            scale = max(scale, float(np.max(np.abs(spec.P))))
        self.obj_scale = 1.0 / scale
        self._set_rho(rho)
        self.z = np.zeros(self.M.shape[0])
        self.u = np.zeros(self.M.shape[0])

    def _set_rho(self, rho: float) -> None:
        self.rho = rho
        spec = self.spec
        n, m = spec.n, spec.A.shape[0]
        H = rho * (self.M.T @ self.M)
        if spec.P is not None:
            H = H + self.obj_scale * spec.P
        kkt = np.zeros((n + m, n + m))
        kkt[:n, :n] = H
        kkt[:n, n:] = spec.A.T
        kkt[n:, :n] = spec.A
        # tiny regularization keeps the factorization stable when A has
        # dependent rows
        kkt[n:, n:] = -1e-12 * np.eye(m)
        self._lu = scipy.linalg.lu_factor(kkt)

    def _project(self, y: np.ndarray, lb: np.ndarray, ub: np.ndarray) -> np.ndarray:
        out = y.copy()
        if self._box_rows:
            np.clip(y[:self._box_rows], lb, ub, out=out[:self._box_rows])
        if not self._cone_slices:
            return out
        d = self._uniform_cone_dim
        if d is None:
            for sl in self._cone_slices:
                out[sl] = _project_soc(y[sl])
            return out
        # all cones share one dimension: project them as a batch
        block = y[self._box_rows:].reshape(-1, d)
        t = block[:, 0]
        w = block[:, 1:]
        nw = np.sqrt(np.einsum("ij,ij->i", w, w))
        proj = block.copy()
        zero = nw <= -t
        proj[zero] = 0.0
        boundary = (~zero) & (nw > t)
        if boundary.any():
            tau = (t[boundary] + nw[boundary]) / 2.0
            proj[boundary, 0] = tau
            proj[boundary, 1:] = w[boundary] * (tau / nw[boundary])[:, None]
        out[self._box_rows:] = proj.reshape(-1)
        return out

    def solve(self, b: np.ndarray, lb: np.ndarray, ub: np.ndarray,
              max_iter: int = 20000, eps: float = 1e-9,
              warm: bool = True) -> ConeResult:
        spec = self.spec
        n, m = spec.n, spec.A.shape[0]
        q = self.obj_scale * spec.q
        if not warm:
            self.z[:] = 0.0
            self.u[:] = 0.0
        z, u = self.z, self.u
        rhs = np.empty(n + m)
        rhs[n:] = b
        x = np.zeros(n)
        nu = np.zeros(m)
        r_prim = r_dual = np.inf
        it = 0
        check_every = 25
        for it in range(1, max_iter + 1):
            rhs[:n] = self.rho * (self.M.T @ (z - u)) - q
            sol = scipy.linalg.lu_solve(self._lu, rhs)
            x, nu = sol[:n], sol[n:]
            mx = self.M @ x
            mx_rel = self.alpha * mx + (1.0 - self.alpha) * z
            z_old = z.copy()
            z = self._project(mx_rel + u, lb, ub)
            u = u + mx_rel - z
            if it % check_every == 0 or it == max_iter:
                r_prim = float(np.max(np.abs(mx - z))) if z.size else 0.0
                r_dual = self.rho * float(np.max(np.abs(self.M.T @ (z - z_old)))) \
                    if z.size else 0.0
                if r_prim < eps and r_dual < eps:
                    break
                # square-root residual balancing (u is the scaled dual, so
                # it rescales by the inverse rho ratio)
                if it % 100 == 0 and r_prim > 0 and r_dual > 0:
                    ratio = r_prim / r_dual
                    if ratio > 5.0 or ratio < 0.2:
                        factor = float(np.clip(np.sqrt(ratio), 0.1, 10.0))
                        new_rho = float(np.clip(self.rho * factor, 1e-6, 1e6))
                        if new_rho != self.rho:
                            u = u * (self.rho / new_rho)
                            self._set_rho(new_rho)
        self.z, self.u = z, u
        status = "optimal" if (r_prim < eps and r_dual < eps) else "max_iter"
        return ConeResult(x=x, status=status, iterations=it,
                          primal_residual=r_prim, dual_residual=r_dual,
                          eq_dual=-nu / self.obj_scale)
