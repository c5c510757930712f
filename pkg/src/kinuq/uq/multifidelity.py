"""Bi-/tri-fidelity collocation: greedy point selection on cheap snapshots,
projection-coefficient transfer to the expensive model.

Offline, the cheap solver runs on a candidate set; K "important" parameter
points are chosen by greedily maximising the distance of each candidate
snapshot to the span of those already selected (pivoted Cholesky on the
snapshot Gram matrix), and the expensive solver runs only at those points.
Online, a new parameter's cheap solution is projected onto the selected
cheap snapshots and the same coefficients recombine the stored expensive
snapshots.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from ..errors import ConfigError

PIVOT_TOL = 1e-12   # relative rank cutoff for the greedy factorisation


def select_points(low_snaps: np.ndarray, k: int, weight: float = 1.0):
    """Greedy selection of k snapshot indices by pivoted Cholesky.

    low_snaps has one snapshot per row.  Returns (indices, rank_report);
    rank_report is None unless the set's numerical rank stopped selection
    early, in which case the truncated pivot list is returned with a note.
    """
    snaps = np.asarray(low_snaps, dtype=float)
    n = snaps.shape[0]
    if k < 1 or k > n:
        raise ConfigError(f"k={k} outside 1..{n}")
    gram = snaps @ snaps.T * weight
    d = np.diag(gram).copy()
    tol = PIVOT_TOL * float(d.max())
    low = np.zeros((n, k))
    order = []
    for j in range(k):
        piv = int(np.argmax(d))       # argmax takes the lowest index on ties
        if d[piv] <= tol:
            report = f"numerical rank {j} reached before k={k}"
            return np.array(order, dtype=int), report
        order.append(piv)
        col = (gram[:, piv] - low[:, :j] @ low[piv, :j]) / np.sqrt(d[piv])
        low[:, j] = col
        d = d - col**2
        d[piv] = 0.0
    return np.array(order, dtype=int), None


@dataclass
class SnapshotBasis:
    """Selected collocation points with their cheap and expensive snapshots."""

    candidates: np.ndarray        # (N, dim) parameter points
    selected: np.ndarray          # (K,) indices into candidates
    proj_snaps: np.ndarray        # (K, dof) snapshots of the projection solver
    high_snaps: np.ndarray        # (K, dof_high) expensive snapshots
    weight: float                 # inner-product weight (dx of the field grid)
    ridge: float
    n_cells: int                  # for splitting concatenated fields
    rank_report: str | None = None
    warnings: list = field(default_factory=list)
    _chol: np.ndarray | None = None

    def gram(self) -> np.ndarray:
        return self.proj_snaps @ self.proj_snaps.T * self.weight


def build_basis(candidates, proj_snaps, k: int, weight: float, n_cells: int,
                ridge: float | None = None) -> SnapshotBasis:
    """Select k points from the candidate snapshots; high_snaps are filled by
    the caller after running the expensive model at basis.selected."""
    sel, report = select_points(proj_snaps, k, weight)
    chosen = np.asarray(proj_snaps, dtype=float)[sel]
    gram = chosen @ chosen.T * weight
    if ridge is None:
        ridge = 1e-10 * np.trace(gram) / max(len(sel), 1)
    basis = SnapshotBasis(
        candidates=np.asarray(candidates),
        selected=sel,
        proj_snaps=chosen,
        high_snaps=np.empty((len(sel), 0)),
        weight=weight,
        ridge=ridge,
        n_cells=n_cells,
        rank_report=report,
    )
    cond = np.linalg.cond(gram + ridge * np.eye(len(sel)))
    if cond > 1e12:
        basis.warnings.append(f"selected Gram condition {cond:.2e} beyond ridge repair")
    return basis


def fidelity_coeffs(basis: SnapshotBasis, u_low: np.ndarray) -> np.ndarray:
    """Projection coefficients of a cheap solution onto the selected cheap
    snapshots: solve (G + ridge I) c = <u_low, snapshots>."""
    u_low = np.asarray(u_low, dtype=float).ravel()
    if u_low.size != basis.proj_snaps.shape[1]:
        raise ConfigError(
            f"solution length {u_low.size} != snapshot dof {basis.proj_snaps.shape[1]}")
    g = basis.proj_snaps @ u_low * basis.weight
    a = basis.gram() + basis.ridge * np.eye(len(basis.selected))
    return np.linalg.solve(a, g)


def multifidelity_eval(basis: SnapshotBasis, u_low: np.ndarray):
    """Expensive-model surrogate at a new point: same coefficients, expensive
    snapshots.  Returns (fields dict, coefficients)."""
    c = fidelity_coeffs(basis, u_low)
    vec = c @ basis.high_snaps
    return split_fields(vec, basis.n_cells), c


def concat_fields(fields: dict) -> np.ndarray:
    """[rho | ux | uy | temp] layout used for snapshot vectors."""
    return np.concatenate([fields[q] for q in ("rho", "ux", "uy", "temp")])


def split_fields(vec: np.ndarray, n_cells: int) -> dict:
    if vec.size != 4 * n_cells:
        raise ConfigError(f"vector length {vec.size} != 4*{n_cells}")
    parts = vec.reshape(4, n_cells)
    return {"rho": parts[0], "ux": parts[1], "uy": parts[2], "temp": parts[3]}
