"""
Uniform Dirichlet grids on an interval and the discrete norms used throughout
the laboratory: H^-1, H0, H1, H2, the b-weighted H1 norm, and the space-time
norms X^k, C^k, Y^k of adapted fields.
"""

from dataclasses import dataclass
from enum import Enum
from functools import lru_cache
import numpy as np
from scipy.linalg import solve_banded

from .errors import GuardError

WEIGHTED_H1_CONVENTION = (
    "forward differences over the n_x+1 cell edges (boundary values zero), "
    "b sampled at edge midpoints"
)


class NormKind(Enum):
    HMINUS1 = "Hminus1"
    H0 = "H0"
    H1 = "H1"
    H2 = "H2"
    WEIGHTED_H1 = "WeightedH1"

    @classmethod
    def from_order(cls, k):
        """Map a Sobolev order k in {-1, 0, 1, 2} to the matching kind"""
        orders = {-1: cls.HMINUS1, 0: cls.H0, 1: cls.H1, 2: cls.H2}
        if k not in orders:
            raise GuardError(f"Sobolev order must be one of -1, 0, 1, 2, got {k}")
        return orders[k]


@dataclass(frozen=True)
class Grid:
    """Uniform mesh with n_x interior nodes on (x_lo, x_hi)"""
    x_lo: float
    x_hi: float
    n_x: int

    @property
    def h(self):
        return (self.x_hi - self.x_lo) / (self.n_x + 1)

    @property
    def nodes(self):
        """Interior nodes x_j = x_lo + j*h, j = 1..n_x"""
        return self.x_lo + self.h * np.arange(1, self.n_x + 1)

    @property
    def edges(self):
        """Edge midpoints x_{j+1/2}, j = 0..n_x (n_x + 1 values)"""
        return self.x_lo + self.h * (np.arange(self.n_x + 1) + 0.5)

    @property
    def nodes_with_boundary(self):
        return self.x_lo + self.h * np.arange(self.n_x + 2)

    def check_vector(self, v):
        """Return v as a float array of shape (..., n_x) or raise GuardError"""
        v = np.asarray(v, dtype=float)
        if v.ndim == 0 or v.shape[-1] != self.n_x:
            raise GuardError(
                f"Grid vector has trailing length {v.shape[-1] if v.ndim else 0}, expected n_x = {self.n_x}"
            )
        return v


def build_grid(x_lo, x_hi, n_x):
    """
    Build a uniform Dirichlet grid.

    Args:
        x_lo (float): Left end point
        x_hi (float): Right end point
        n_x (int): Number of interior points

    Returns:
        Grid: The grid
    """
    if int(n_x) != n_x or n_x < 2:
        raise GuardError(f"Grid needs at least 2 interior points, got n_x = {n_x}")
    if not np.isfinite(x_lo) or not np.isfinite(x_hi) or not x_lo < x_hi:
        raise GuardError(f"Degenerate interval ({x_lo}, {x_hi}): need x_lo < x_hi")
    return Grid(float(x_lo), float(x_hi), int(n_x))


def _padded(grid, v):
    # Attach the zero Dirichlet values at both ends of the last axis
    pad = [(0, 0)] * (v.ndim - 1) + [(1, 1)]
    return np.pad(v, pad)


def h0_squared(grid, v):
    v = grid.check_vector(v)
    return grid.h * np.sum(v * v, axis=-1)


def h1_seminorm_squared(grid, v):
    v = grid.check_vector(v)
    d = np.diff(_padded(grid, v), axis=-1) / grid.h
    return grid.h * np.sum(d * d, axis=-1)


def h2_seminorm_squared(grid, v):
    v = grid.check_vector(v)
    d2 = np.diff(_padded(grid, v), n=2, axis=-1) / grid.h ** 2
    return grid.h * np.sum(d2 * d2, axis=-1)


@lru_cache(maxsize=32)
def _laplacian_bands(n_x, h):
    # Banded storage of -Delta_h for scipy.linalg.solve_banded
    ab = np.zeros((3, n_x))
    ab[0, 1:] = -1.0 / h ** 2
    ab[1, :] = 2.0 / h ** 2
    ab[2, :-1] = -1.0 / h ** 2
    ab.setflags(write=False)
    return ab


def hminus1_squared(grid, v):
    """h * v^T (-Delta_h)^{-1} v for one vector or a stack of row vectors"""
    v = grid.check_vector(v)
    rows = np.atleast_2d(v).reshape(-1, grid.n_x)
    z = solve_banded((1, 1), _laplacian_bands(grid.n_x, grid.h), rows.T)
    values = grid.h * np.sum(rows.T * z, axis=0)
    return values.reshape(v.shape[:-1]) if v.ndim > 1 else float(values[0])


def squared_norm(grid, v, k):
    """Squared H^k norm of v (or of each row of a stack) for k in {-1, 0, 1, 2}"""
    if k not in (-1, 0, 1, 2):
        raise GuardError(f"Sobolev order must be one of -1, 0, 1, 2, got {k}")
    if k == -1:
        return hminus1_squared(grid, v)
    total = h0_squared(grid, v)
    if k >= 1:
        total = total + h1_seminorm_squared(grid, v)
    if k >= 2:
        total = total + h2_seminorm_squared(grid, v)
    return total


def discrete_norm(grid, v, kind):
    """
    Discrete Sobolev norm of a grid vector.

    Args:
        grid (Grid): Grid the vector lives on
        v (array): Interior nodal values
        kind (NormKind): Which norm

    Returns:
        float: The norm
    """
    if kind is NormKind.WEIGHTED_H1:
        raise GuardError("The weighted H1 norm needs b samples: use weighted_h1_norm")
    order = {NormKind.HMINUS1: -1, NormKind.H0: 0, NormKind.H1: 1, NormKind.H2: 2}[kind]
    return float(np.sqrt(max(float(squared_norm(grid, v, order)), 0.0)))


def h1_seminorm(grid, v):
    return float(np.sqrt(h1_seminorm_squared(grid, v)))


def inner(grid, u, v):
    """Discrete H0 inner product h * sum(u v), row-wise for stacks"""
    u = grid.check_vector(u)
    v = grid.check_vector(v)
    return grid.h * np.sum(u * v, axis=-1)


def edge_weights(grid, b_values):
    """Return b at the n_x + 1 edge midpoints; nodal samples are averaged onto edges"""
    b = np.asarray(b_values, dtype=float)
    if b.ndim == 0:
        b = np.full(grid.n_x + 1, float(b))
    elif b.shape[-1] == grid.n_x:
        # Boundary edges reuse the nearest nodal sample
        padded = np.concatenate([b[..., :1], b, b[..., -1:]], axis=-1)
        b = 0.5 * (padded[..., 1:] + padded[..., :-1])
    elif b.shape[-1] != grid.n_x + 1:
        raise GuardError(
            f"b samples must have length n_x = {grid.n_x} or n_x + 1 = {grid.n_x + 1}, got {b.shape[-1]}"
        )
    if np.any(b <= 0):
        raise GuardError(f"Weighted H1 norm needs b > 0, found min sample {float(np.min(b)):.3e}")
    return b


def weighted_h1_squared(grid, v, b_values):
    v = grid.check_vector(v)
    b = edge_weights(grid, b_values)
    d = np.diff(_padded(grid, v), axis=-1) / grid.h
    return grid.h * np.sum(b * d * d, axis=-1)


def weighted_h1_norm(grid, v, b_values):
    """
    b-weighted H1 seminorm (h * sum_e b_e (Dv)_e^2)^(1/2), see WEIGHTED_H1_CONVENTION.

    Args:
        grid (Grid): Grid
        v (array): Interior nodal values
        b_values (array or float): b at the edges (n_x + 1), at the nodes (n_x) or a constant

    Returns:
        float: The weighted seminorm
    """
    return float(np.sqrt(weighted_h1_squared(grid, v, b_values)))


def level_expectations(field, k, start=None, end=None):
    """E[||field_j||^2_{H^k}] for each level j of the window, in level order"""
    grid = field.grid
    first = field.start_level if start is None else start
    last = field.end_level if end is None else end
    return np.array([
        float(np.mean(squared_norm(grid, field.levels[j], k))) for j in range(first, last + 1)
    ])


def spacetime_norm(field, kind, k, start=None, end=None):
    """
    Space-time norm of an adapted field.

    Args:
        field (AdaptedField): Field on a tree and grid
        kind (str): 'X', 'C' or 'Y'
        k (int): Sobolev order in {-1, 0, 1, 2} (for 'Y' the C part uses k - 1)
        start (int): First level of the window (defaults to the field's start level)
        end (int): Last level of the window (defaults to M)

    Returns:
        float: The norm
    """
    kind = str(kind).upper().rstrip("^K")
    first = field.start_level if start is None else start
    last = field.end_level if end is None else end
    if kind == "X":
        if last <= first:
            return 0.0
        values = level_expectations(field, k, first, last - 1)
        return float(np.sqrt(field.tree.dt * np.sum(values)))
    if kind == "C":
        values = level_expectations(field, k, first, last)
        return float(np.sqrt(np.max(values)))
    if kind == "Y":
        if k - 1 < -1:
            raise GuardError(f"Y^k needs k >= 0, got {k}")
        return spacetime_norm(field, "X", k, first, last) + spacetime_norm(field, "C", k - 1, first, last)
    raise GuardError(f"Unknown space-time norm kind {kind!r}: expected X, C or Y")


def terminal_norm(grid, values, k):
    """Z^k norm (E ||values||^2_{H^k})^(1/2) of a level slice"""
    return float(np.sqrt(np.mean(squared_norm(grid, np.atleast_2d(values), k))))
