"""
Finite noise tree for an N-dimensional Wiener process with +-sqrt(dt)
increments, plus the adapted-field containers and the exact tree operations
(conditional expectation, Ito integral, martingale representation).

Node indexing: the children of node v at level k are v * 2^N + c for
c = 0..2^N - 1, and component i of the increment into child c is
+sqrt(dt) when bit i of c is set, -sqrt(dt) otherwise. Every level is a flat
array of shape (2^(N k), n_x).
"""

import logging
from dataclasses import dataclass
import numpy as np
from scipy import sparse

from .errors import GuardError

# Configure logging
logging.basicConfig(level=logging.INFO, format='%(asctime)s - %(name)s - %(levelname)s - %(message)s')
logger = logging.getLogger(__name__)

MAX_TREE_EXPONENT = 24


class NoiseTree:
    """Full 2^N-ary tree of depth M on [0, T]"""

    def __init__(self, N, M, T):
        self.N = int(N)
        self.M = int(M)
        self.T = float(T)
        self.branching = 2 ** self.N
        self.dt = self.T / self.M
        self.sqrt_dt = float(np.sqrt(self.dt))
        children = np.arange(self.branching)
        bits = (children[:, None] >> np.arange(self.N)[None, :]) & 1
        self.signs = np.where(bits == 1, 1.0, -1.0)
        self.signs.setflags(write=False)
        self._wiener = {0: np.zeros((1, self.N))}
        self._scatter = {}

    def __repr__(self):
        return f"NoiseTree(N={self.N}, M={self.M}, T={self.T})"

    def check_level(self, k, lowest=0, highest=None):
        highest = self.M if highest is None else highest
        if int(k) != k or not lowest <= k <= highest:
            raise GuardError(f"Level {k} out of range [{lowest}, {highest}]")
        return int(k)

    def level_size(self, k):
        k = self.check_level(k)
        return self.branching ** k

    @property
    def total_nodes(self):
        return sum(self.branching ** k for k in range(self.M + 1))

    def time(self, k):
        return self.check_level(k) * self.dt

    @property
    def times(self):
        return np.arange(self.M + 1) * self.dt

    def probabilities(self, k):
        n_k = self.level_size(k)
        return np.full(n_k, 1.0 / n_k)

    def increments(self, k):
        """Increments w(t_k) - w(t_{k-1}) into every level-k node, shape (n_k, N)"""
        k = self.check_level(k, lowest=1)
        return np.tile(self.sqrt_dt * self.signs, (self.branching ** (k - 1), 1))

    def wiener(self, k):
        """w(t_k) at every level-k node, shape (n_k, N)"""
        k = self.check_level(k)
        if k not in self._wiener:
            previous = self.wiener(k - 1)
            self._wiener[k] = np.repeat(previous, self.branching, axis=0) + self.increments(k)
        return self._wiener[k]

    def words(self, k):
        """Increment signs along the path of every level-k node, shape (n_k, N, k)"""
        k = self.check_level(k)
        nodes = np.arange(self.branching ** k)
        words = np.empty((nodes.size, self.N, k))
        for m in range(k):
            digit = (nodes >> (self.N * (k - 1 - m))) & (self.branching - 1)
            words[:, :, m] = self.signs[digit]
        return words

    def parents(self, k):
        k = self.check_level(k, lowest=1)
        return np.arange(self.branching ** k) // self.branching

    def view(self, k):
        return LevelView(self, self.check_level(k))

    def scatter_operator(self, k, i=None):
        """
        Sparse edge map from level k to level k + 1.

        Args:
            k (int): Parent level, 0..M-1
            i (int): Noise component; None copies the parent value to every child

        Returns:
            scipy.sparse.csr_matrix: Matrix of shape (n_{k+1}, n_k)
        """
        k = self.check_level(k, highest=self.M - 1)
        key = (k, i)
        if key not in self._scatter:
            if i is None:
                column = np.ones((self.branching, 1))
            else:
                column = (self.sqrt_dt * self.signs[:, i])[:, None]
            self._scatter[key] = sparse.kron(
                sparse.identity(self.branching ** k, format="csr"),
                sparse.csr_matrix(column),
                format="csr",
            )
        return self._scatter[key]


@dataclass(frozen=True)
class LevelView:
    """What a coefficient field may depend on at level k: time and the path up to t_k"""
    tree: NoiseTree
    level: int

    @property
    def t(self):
        return self.level * self.tree.dt

    @property
    def size(self):
        return self.tree.branching ** self.level

    @property
    def w(self):
        return self.tree.wiener(self.level)

    def words(self):
        return self.tree.words(self.level)


def build_tree(N, M, T):
    """
    Build a noise tree after checking the memory guard.

    Args:
        N (int): Number of Wiener components, 1..3
        M (int): Number of time steps
        T (float): Horizon

    Returns:
        NoiseTree: The tree
    """
    if int(N) != N or N not in (1, 2, 3):
        raise GuardError(f"Noise dimension N must be 1, 2 or 3, got {N}")
    if int(M) != M or M < 1:
        raise GuardError(f"Number of time steps M must be at least 1, got {M}")
    if N * M > MAX_TREE_EXPONENT:
        raise GuardError(
            f"Tree too large: N*M = {N * M} exceeds {MAX_TREE_EXPONENT} (2^(N*M) leaves)"
        )
    if not np.isfinite(T) or T <= 0:
        raise GuardError(f"Horizon T must be positive, got {T}")
    tree = NoiseTree(N, M, T)
    logger.debug(f"Built {tree} with {tree.total_nodes} nodes")
    return tree


class AdaptedField:
    """Grid vectors indexed by (level, node) on the window start_level..end_level"""

    def __init__(self, tree, grid, levels, start_level=0, end_level=None):
        self.tree = tree
        self.grid = grid
        self.start_level = tree.check_level(start_level)
        self.end_level = tree.check_level(tree.M if end_level is None else end_level)
        if self.end_level < self.start_level:
            raise GuardError(f"Empty window [{start_level}, {end_level}]")
        if len(levels) != tree.M + 1:
            raise GuardError(f"Expected {tree.M + 1} level slots, got {len(levels)}")
        self.levels = list(levels)
        for k in range(self.start_level, self.end_level + 1):
            shape = (tree.branching ** k, grid.n_x)
            value = np.asarray(self.levels[k], dtype=float)
            if value.shape != shape:
                raise GuardError(f"Level {k} has shape {value.shape}, expected {shape}")
            self.levels[k] = value

    @classmethod
    def zeros(cls, tree, grid, start_level=0, end_level=None):
        end = tree.M if end_level is None else end_level
        levels = [None] * (tree.M + 1)
        for k in range(start_level, end + 1):
            levels[k] = np.zeros((tree.branching ** k, grid.n_x))
        return cls(tree, grid, levels, start_level, end)

    @classmethod
    def from_function(cls, tree, grid, fn, start_level=0, end_level=None):
        """Sample fn(x, view) -> array broadcastable to (n_k, n_x) on every level of the window"""
        end = tree.M if end_level is None else end_level
        levels = [None] * (tree.M + 1)
        x = grid.nodes
        for k in range(start_level, end + 1):
            shape = (tree.branching ** k, grid.n_x)
            levels[k] = np.array(np.broadcast_to(np.asarray(fn(x, tree.view(k)), dtype=float), shape))
        return cls(tree, grid, levels, start_level, end)

    @classmethod
    def random(cls, tree, grid, rng, start_level=0, end_level=None, scale=1.0):
        """Independent standard normal values at every (level, node, grid point)"""
        end = tree.M if end_level is None else end_level
        levels = [None] * (tree.M + 1)
        for k in range(start_level, end + 1):
            levels[k] = scale * rng.standard_normal((tree.branching ** k, grid.n_x))
        return cls(tree, grid, levels, start_level, end)

    def __getitem__(self, k):
        k = self.tree.check_level(k, self.start_level, self.end_level)
        return self.levels[k]

    def __setitem__(self, k, value):
        k = self.tree.check_level(k, self.start_level, self.end_level)
        value = np.asarray(value, dtype=float)
        if value.shape != self.levels[k].shape:
            raise GuardError(f"Level {k} has shape {self.levels[k].shape}, got {value.shape}")
        self.levels[k] = value

    def window(self, start_level, end_level):
        """Copy of the field restricted to [start_level, end_level]"""
        self.tree.check_level(start_level, self.start_level, self.end_level)
        self.tree.check_level(end_level, start_level, self.end_level)
        levels = [None] * (self.tree.M + 1)
        for k in range(start_level, end_level + 1):
            levels[k] = self.levels[k].copy()
        return AdaptedField(self.tree, self.grid, levels, start_level, end_level)

    def copy(self):
        return self.window(self.start_level, self.end_level)

    def _combine(self, other, op):
        if not isinstance(other, AdaptedField):
            return NotImplemented
        if (other.start_level, other.end_level) != (self.start_level, self.end_level):
            raise GuardError("Adapted fields live on different windows")
        levels = [None] * (self.tree.M + 1)
        for k in range(self.start_level, self.end_level + 1):
            levels[k] = op(self.levels[k], other.levels[k])
        return AdaptedField(self.tree, self.grid, levels, self.start_level, self.end_level)

    def __add__(self, other):
        return self._combine(other, np.add)

    def __sub__(self, other):
        return self._combine(other, np.subtract)

    def __mul__(self, scalar):
        levels = [None if value is None else scalar * value for value in self.levels]
        return AdaptedField(self.tree, self.grid, levels, self.start_level, self.end_level)

    __rmul__ = __mul__

    def __neg__(self):
        return self * -1.0

    def inner(self, other, start=None, end=None):
        """X0 inner product: sum over levels start..end-1 of dt * E<u_k, v_k>_H0"""
        first = self.start_level if start is None else start
        last = self.end_level if end is None else end
        total = 0.0
        for k in range(first, last):
            total += self.tree.dt * float(np.mean(self.grid.h * np.sum(self[k] * other[k], axis=1)))
        return total

    def max_abs(self):
        return max(float(np.max(np.abs(self.levels[k]))) for k in range(self.start_level, self.end_level + 1))

    def max_abs_difference(self, other, start=None, end=None):
        first = max(self.start_level, other.start_level) if start is None else start
        last = min(self.end_level, other.end_level) if end is None else end
        return max(float(np.max(np.abs(self[k] - other[k]))) for k in range(first, last + 1))

    def terminal(self):
        return TerminalVariable(self.tree, self.grid, self.levels[self.end_level].copy(), self.end_level)


class TerminalVariable:
    """One grid vector per node of a single level (by default the leaves, level M)"""

    def __init__(self, tree, grid, values, level=None):
        self.tree = tree
        self.grid = grid
        self.level = tree.check_level(tree.M if level is None else level)
        shape = (tree.branching ** self.level, grid.n_x)
        values = np.asarray(values, dtype=float)
        if values.shape == (grid.n_x,):
            values = np.tile(values, (shape[0], 1))
        if values.shape != shape:
            raise GuardError(f"Terminal values have shape {values.shape}, expected {shape}")
        self.values = values

    @classmethod
    def zeros(cls, tree, grid, level=None):
        level = tree.M if level is None else level
        return cls(tree, grid, np.zeros((tree.branching ** level, grid.n_x)), level)

    @classmethod
    def from_function(cls, tree, grid, fn, level=None):
        level = tree.M if level is None else level
        shape = (tree.branching ** level, grid.n_x)
        values = np.broadcast_to(np.asarray(fn(grid.nodes, tree.view(level)), dtype=float), shape)
        return cls(tree, grid, np.array(values), level)

    @classmethod
    def random(cls, tree, grid, rng, level=None, scale=1.0):
        level = tree.M if level is None else level
        return cls(tree, grid, scale * rng.standard_normal((tree.branching ** level, grid.n_x)), level)

    def inner(self, other):
        """Z0 inner product E<X, Y>_H0"""
        other_values = other.values if isinstance(other, TerminalVariable) else np.asarray(other)
        return float(np.mean(self.grid.h * np.sum(self.values * other_values, axis=1)))

    def __add__(self, other):
        return TerminalVariable(self.tree, self.grid, self.values + other.values, self.level)

    def __mul__(self, scalar):
        return TerminalVariable(self.tree, self.grid, scalar * self.values, self.level)

    __rmul__ = __mul__


def conditional_expectation(tree, values, k):
    """
    E[values | F_{t_k}] for a slice given at level k + 1.

    Args:
        tree (NoiseTree): Tree
        values (array): Slice of shape (n_{k+1}, ...)
        k (int): Target level, 0..M-1

    Returns:
        array: Slice of shape (n_k, ...)
    """
    k = tree.check_level(k, highest=tree.M - 1)
    values = np.asarray(values, dtype=float)
    n_k = tree.branching ** k
    if values.shape[0] != n_k * tree.branching:
        raise GuardError(f"Slice has {values.shape[0]} nodes, level {k + 1} has {n_k * tree.branching}")
    return values.reshape((n_k, tree.branching) + values.shape[1:]).mean(axis=1)


def project_increment(tree, values, k):
    """
    Split a level-(k+1) slice over each level-k node into mean, increment loadings and residual.

    Returns:
        tuple: (mean (n_k, ...), gamma (N, n_k, ...), residual (n_{k+1}, ...)) with
            values = mean + sum_i gamma_i dw_i + residual on every child and the residual
            orthogonal to 1 and to every dw_i under the child distribution
    """
    k = tree.check_level(k, highest=tree.M - 1)
    values = np.asarray(values, dtype=float)
    n_k = tree.branching ** k
    rest = values.shape[1:]
    children = values.reshape((n_k, tree.branching) + rest)
    mean = children.mean(axis=1)
    expand = (1, tree.branching) + (1,) * len(rest)
    gamma = np.empty((tree.N, n_k) + rest)
    fitted = np.broadcast_to(mean[:, None], children.shape).copy()
    for i in range(tree.N):
        sign = tree.signs[:, i].reshape(expand)
        # E[X dw_i | v] / dt with dw_i = sign * sqrt(dt)
        gamma[i] = (children * sign).mean(axis=1) / tree.sqrt_dt
        fitted += gamma[i][:, None] * (tree.sqrt_dt * sign)
    residual = (children - fitted).reshape(values.shape)
    return mean, gamma, residual


def ito_integral(integrand, j, t):
    """
    Path sums of integrand(level m ancestor) * dw_j over m < t, at every level-t node.

    Args:
        integrand (AdaptedField): Integrand defined on levels 0..t-1
        j (int): Noise component (0-based)
        t (int): Level at which the integral is evaluated

    Returns:
        array: Slice of shape (n_t, n_x)
    """
    tree = integrand.tree
    if not 0 <= j < tree.N:
        raise GuardError(f"Noise component {j} out of range for N = {tree.N}")
    t = tree.check_level(t)
    total = np.zeros((1, integrand.grid.n_x))
    for m in range(t):
        increment = tree.increments(m + 1)[:, j][:, None]
        total = np.repeat(total, tree.branching, axis=0) + np.repeat(integrand[m], tree.branching, axis=0) * increment
    return total


@dataclass
class MartingaleRepresentation:
    """X = mean + sum_i int gamma_i dw_i + path sum of residuals, exactly"""
    mean: np.ndarray
    gamma: list
    residual: AdaptedField

    def reconstruct(self):
        tree = self.residual.tree
        total = np.tile(self.mean, (tree.branching ** tree.M, 1))
        for i, gamma in enumerate(self.gamma):
            total = total + ito_integral(gamma, i, tree.M)
        path_sum = np.zeros((1, self.mean.shape[0]))
        for k in range(1, tree.M + 1):
            path_sum = np.repeat(path_sum, tree.branching, axis=0) + self.residual[k]
        return total + path_sum


def martingale_representation(X):
    """
    Exact martingale representation of a terminal variable on the tree.

    Args:
        X (TerminalVariable): Values at the leaves

    Returns:
        MartingaleRepresentation: mean, loadings gamma_i (levels 0..M-1) and the
            orthogonal residual (levels 1..M, level 0 zero)
    """
    tree, grid = X.tree, X.grid
    if X.level != tree.M:
        raise GuardError(f"Martingale representation needs leaf values, got level {X.level}")
    gamma = [AdaptedField.zeros(tree, grid) for _ in range(tree.N)]
    residual = AdaptedField.zeros(tree, grid)
    current = X.values
    for k in range(tree.M - 1, -1, -1):
        mean, loadings, rest = project_increment(tree, current, k)
        for i in range(tree.N):
            gamma[i][k] = loadings[i]
        residual[k + 1] = rest
        current = mean
    return MartingaleRepresentation(mean=current[0].copy(), gamma=gamma, residual=residual)


class PathView:
    """Level view of a single deterministic path w = 0, used by the single-path solvers"""

    def __init__(self, N, level, t):
        self.N = N
        self.level = level
        self.t = t
        self.size = 1
        self.w = np.zeros((1, N))

    def words(self):
        return np.zeros((1, self.N, self.level))
