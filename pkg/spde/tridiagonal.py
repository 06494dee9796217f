"""
Batched tridiagonal matrices: one n_x by n_x matrix per tree node, stored as
three bands of shape (S, n_x) with lower[:, 0] = 0 and upper[:, -1] = 0.
"""

import numpy as np

from .errors import GuardError, SingularStepError

PIVOT_TOLERANCE = 1e-14


class TridiagonalStack:
    """S tridiagonal matrices: row j reads lower[j] v[j-1] + diag[j] v[j] + upper[j] v[j+1]"""

    def __init__(self, lower, diag, upper):
        diag = np.asarray(diag, dtype=float)
        if diag.ndim != 2:
            raise GuardError(f"Bands must have shape (S, n_x), got {diag.shape}")
        self.lower = np.array(np.broadcast_to(lower, diag.shape), dtype=float)
        self.diag = np.array(diag, dtype=float)
        self.upper = np.array(np.broadcast_to(upper, diag.shape), dtype=float)
        self.lower[:, 0] = 0.0
        self.upper[:, -1] = 0.0

    @property
    def size(self):
        return self.diag.shape[0]

    @property
    def n_x(self):
        return self.diag.shape[1]

    @classmethod
    def identity(cls, size, n_x):
        zeros = np.zeros((size, n_x))
        return cls(zeros, np.ones((size, n_x)), zeros)

    @classmethod
    def diagonal(cls, values):
        values = np.asarray(values, dtype=float)
        zeros = np.zeros_like(values)
        return cls(zeros, values, zeros)

    def __add__(self, other):
        return TridiagonalStack(self.lower + other.lower, self.diag + other.diag, self.upper + other.upper)

    def __sub__(self, other):
        return TridiagonalStack(self.lower - other.lower, self.diag - other.diag, self.upper - other.upper)

    def scaled(self, factor):
        return TridiagonalStack(factor * self.lower, factor * self.diag, factor * self.upper)

    def transpose(self):
        """Exact transpose: the bands are moved, never recomputed"""
        lower = np.zeros_like(self.lower)
        upper = np.zeros_like(self.upper)
        lower[:, 1:] = self.upper[:, :-1]
        upper[:, :-1] = self.lower[:, 1:]
        return TridiagonalStack(lower, self.diag.copy(), upper)

    @property
    def T(self):
        return self.transpose()

    def matvec(self, v):
        """Apply every matrix to the matching row of v, shape (S, n_x)"""
        v = np.asarray(v, dtype=float)
        out = self.diag * v
        out[:, 1:] += self.lower[:, 1:] * v[:, :-1]
        out[:, :-1] += self.upper[:, :-1] * v[:, 1:]
        return out

    def implicit_step(self, dt, shift=0.0):
        """I - dt (A - shift I) for the stored A"""
        return TridiagonalStack(-dt * self.lower, 1.0 - dt * (self.diag - shift), -dt * self.upper)

    def select(self, node):
        """The single matrix of one node, as a stack of size one"""
        return TridiagonalStack(self.lower[node:node + 1], self.diag[node:node + 1], self.upper[node:node + 1])

    def to_dense(self, node=0):
        matrix = np.diag(self.diag[node])
        matrix += np.diag(self.lower[node, 1:], -1)
        matrix += np.diag(self.upper[node, :-1], 1)
        return matrix

    def to_banded(self, node=0):
        """Band storage for scipy.linalg.solve_banded with (l, u) = (1, 1)"""
        ab = np.zeros((3, self.n_x))
        ab[0, 1:] = self.upper[node, :-1]
        ab[1, :] = self.diag[node]
        ab[2, :-1] = self.lower[node, 1:]
        return ab

    def max_row_sum(self):
        """max over nodes of the infinity norm"""
        return float(np.max(np.abs(self.lower) + np.abs(self.diag) + np.abs(self.upper)))

    def factorize(self, level=None):
        return ThomasFactors(self, level)


class ThomasFactors:
    """Forward-elimination factors of a TridiagonalStack, reusable for many right-hand sides"""

    def __init__(self, stack, level=None):
        size, n = stack.diag.shape
        self.lower = stack.lower
        self.pivots = np.empty((size, n))
        self.ratios = np.zeros((size, n))
        scale = np.abs(stack.lower) + np.abs(stack.diag) + np.abs(stack.upper)
        pivot = stack.diag[:, 0].copy()
        for j in range(n):
            if j > 0:
                pivot = stack.diag[:, j] - stack.lower[:, j] * self.ratios[:, j - 1]
            bad = np.abs(pivot) <= PIVOT_TOLERANCE * np.maximum(scale[:, j], 1.0)
            if np.any(bad):
                node = int(np.argmax(bad))
                raise SingularStepError(level, node, float(pivot[node]))
            self.pivots[:, j] = pivot
            if j < n - 1:
                self.ratios[:, j] = stack.upper[:, j] / pivot

    def solve(self, rhs):
        """Solve every system of the stack for the matching row of rhs, shape (S, n_x)"""
        rhs = np.asarray(rhs, dtype=float)
        n = rhs.shape[1]
        forward = np.empty_like(rhs)
        forward[:, 0] = rhs[:, 0] / self.pivots[:, 0]
        for j in range(1, n):
            forward[:, j] = (rhs[:, j] - self.lower[:, j] * forward[:, j - 1]) / self.pivots[:, j]
        solution = np.empty_like(rhs)
        solution[:, -1] = forward[:, -1]
        for j in range(n - 2, -1, -1):
            solution[:, j] = forward[:, j] - self.ratios[:, j] * solution[:, j + 1]
        return solution
