"""
Coefficient fields b, f, lambda, beta_i, beta_bar_i and the coercivity
certificates built on them.

A field is a callable fn(x, view) where x has shape (m, n) and view is the
LevelView of the time level being sampled; it returns an array broadcastable
to (n_k, m) + trailing shape, with trailing shapes
b: (n, n), f: (n,), lam: (), beta: (N, n), beta_bar: (N,).
"""

import logging
import re
from dataclasses import dataclass, field
from typing import Callable, Optional
import numpy as np

from .errors import ConfigurationError, GuardError, NonSymmetricError
from .noise_tree import NoiseTree

# Configure logging
logging.basicConfig(level=logging.INFO, format='%(asctime)s - %(name)s - %(levelname)s - %(message)s')
logger = logging.getLogger(__name__)

SYMMETRY_TOLERANCE = 1e-12
BOUNDARY_RTOL = 1e-12
FIELD_NAMES = ("b", "f", "lam", "beta", "beta_bar")


@dataclass
class CoefficientSet:
    """Sampled coefficient fields plus optional closed-form x-derivatives (n = 1)"""
    name: str
    n: int
    N: int
    b: Callable
    f: Callable
    lam: Callable
    beta: Callable
    beta_bar: Callable
    db_dx: Optional[Callable] = None
    df_dx: Optional[Callable] = None
    dbeta_dx: Optional[Callable] = None
    parameters: dict = field(default_factory=dict)

    def tail(self, name):
        return {
            "b": (self.n, self.n),
            "f": (self.n,),
            "lam": (),
            "beta": (self.N, self.n),
            "beta_bar": (self.N,),
        }[name]

    def evaluate(self, name, x, view):
        """
        Sample one field at the points x for every node of a level.

        Args:
            name (str): One of b, f, lam, beta, beta_bar
            x (array): Points, shape (m, n) or (m,) when n = 1
            view (LevelView): Level being sampled

        Returns:
            array: Shape (n_k, m) + trailing shape of the field
        """
        x = self._points(x)
        fn = getattr(self, name)
        out = np.asarray(fn(x, view), dtype=float)
        return np.broadcast_to(out, (view.size, x.shape[0]) + self.tail(name))

    def derivative(self, name, x, view, step):
        """x-derivative of b, f or beta (n = 1): closed form when given, else centred differences"""
        self.require_scalar_space()
        closed = {"b": self.db_dx, "f": self.df_dx, "beta": self.dbeta_dx}[name]
        x = self._points(x)
        if closed is not None:
            out = np.asarray(closed(x, view), dtype=float)
            return np.broadcast_to(out, (view.size, x.shape[0]) + self.tail(name))
        return (self.evaluate(name, x + step, view) - self.evaluate(name, x - step, view)) / (2.0 * step)

    @property
    def derivative_source(self):
        closed = [self.db_dx, self.df_dx, self.dbeta_dx]
        if all(fn is not None for fn in closed):
            return "closed form"
        if any(fn is not None for fn in closed):
            return "mixed: closed form where given, centred differences with step h/2 otherwise"
        return "centred differences with step h/2"

    def require_scalar_space(self):
        if self.n != 1:
            raise GuardError(f"The PDE solver needs spatial dimension n = 1, preset {self.name!r} has n = {self.n}")

    def _points(self, x):
        x = np.asarray(x, dtype=float)
        if x.ndim == 1:
            x = x[:, None]
        if x.shape[-1] != self.n:
            raise GuardError(f"Sample points have dimension {x.shape[-1]}, coefficients have n = {self.n}")
        return x

    def perturbed(self, delta, eps):
        """Coefficients self + eps * delta, field by field"""
        if (delta.n, delta.N) != (self.n, self.N):
            raise GuardError("Perturbation has different (n, N) than the base coefficients")

        def combine(base, extra):
            if base is None or extra is None:
                return None
            return lambda x, view: np.asarray(base(x, view), dtype=float) + eps * np.asarray(extra(x, view), dtype=float)

        return CoefficientSet(
            name=f"{self.name}+{eps:g}*{delta.name}",
            n=self.n,
            N=self.N,
            b=combine(self.b, delta.b),
            f=combine(self.f, delta.f),
            lam=combine(self.lam, delta.lam),
            beta=combine(self.beta, delta.beta),
            beta_bar=combine(self.beta_bar, delta.beta_bar),
            db_dx=combine(self.db_dx, delta.db_dx),
            df_dx=combine(self.df_dx, delta.df_dx),
            dbeta_dx=combine(self.dbeta_dx, delta.dbeta_dx),
            parameters={**self.parameters, "perturbation": delta.name, "epsilon": eps},
        )

    def parameter_set(self, grid, tree):
        """Sup norms of all fields and their x-derivatives over the samples, plus the margins"""
        summary = {name: 0.0 for name in FIELD_NAMES}
        derivatives = {"db_dx": 0.0, "df_dx": 0.0, "dbeta_dx": 0.0}
        x = grid.nodes_with_boundary
        for k in range(tree.M + 1):
            view = tree.view(k)
            for name in FIELD_NAMES:
                summary[name] = max(summary[name], float(np.max(np.abs(self.evaluate(name, x, view)), initial=0.0)))
            if self.n == 1:
                for name in ("b", "f", "beta"):
                    value = self.derivative(name, x, view, 0.5 * grid.h)
                    key = f"d{name}_dx"
                    derivatives[key] = max(derivatives[key], float(np.max(np.abs(value), initial=0.0)))
        report = certify(self, grid, tree)
        result = {f"sup_{name}": value for name, value in summary.items()}
        result.update({f"sup_{name}": value for name, value in derivatives.items()})
        result["derivative_source"] = self.derivative_source
        result["delta"] = report.margin_standard
        result["delta_1"] = report.margin_strengthened
        return result


# ---------------------------------------------------------------------------
# Builders


def _scalar_field(value, extra_dims):
    """Wrap a constant or a callable g(x_1d, view) as a field with extra_dims trailing unit axes"""
    if callable(value):
        def fn(x, view):
            out = np.asarray(value(x[:, 0], view), dtype=float)
            return out.reshape(out.shape + (1,) * extra_dims)
    else:
        constant = np.full((1,) * extra_dims, float(value))

        def fn(x, view):
            return constant
    return fn


def _component_field(values, trailing_unit):
    """Stack N scalar components into the trailing axis (plus a unit axis for beta)"""
    parts = [_scalar_field(value, 0) for value in values]

    def fn(x, view):
        arrays = np.broadcast_arrays(*[np.asarray(part(x, view), dtype=float) for part in parts])
        stacked = np.stack(arrays, axis=-1)
        return stacked[..., None] if trailing_unit else stacked
    return fn


def scalar_set(name, N, b, f=0.0, lam=0.0, beta=None, beta_bar=None,
               db_dx=None, df_dx=None, dbeta_dx=None, parameters=None):
    """
    Coefficients for n = 1 from constants or callables g(x, view) with x of shape (m,).

    Args:
        name (str): Preset name
        N (int): Noise dimension
        b, f, lam: Constants or callables
        beta, beta_bar (list): N constants or callables each (default zero)
        db_dx, df_dx: Closed-form derivatives (constants or callables), optional
        dbeta_dx (list): Closed-form derivatives of the beta_i, optional
        parameters (dict): Preset parameters recorded in reports

    Returns:
        CoefficientSet: The coefficient set
    """
    beta = [0.0] * N if beta is None else list(beta)
    beta_bar = [0.0] * N if beta_bar is None else list(beta_bar)
    if len(beta) != N or len(beta_bar) != N:
        raise GuardError(f"Preset {name!r} needs {N} beta and beta_bar components")
    return CoefficientSet(
        name=name,
        n=1,
        N=N,
        b=_scalar_field(b, 2),
        f=_scalar_field(f, 1),
        lam=_scalar_field(lam, 0),
        beta=_component_field(beta, True),
        beta_bar=_component_field(beta_bar, False),
        db_dx=None if db_dx is None else _scalar_field(db_dx, 2),
        df_dx=None if df_dx is None else _scalar_field(df_dx, 1),
        dbeta_dx=None if dbeta_dx is None else _component_field(dbeta_dx, True),
        parameters=dict(parameters or {}),
    )


def constant_set(name, b, beta, f=None, lam=0.0, beta_bar=None, parameters=None):
    """Coefficients constant in (x, t, omega) for any n; used by the condition checkers"""
    b = np.atleast_2d(np.asarray(b, dtype=float))
    beta = np.atleast_2d(np.asarray(beta, dtype=float))
    n = b.shape[0]
    N = beta.shape[0]
    if b.shape != (n, n) or beta.shape[1] != n:
        raise GuardError(f"Constant coefficients need b of shape (n, n) and beta of shape (N, n), got {b.shape} and {beta.shape}")
    f = np.zeros(n) if f is None else np.asarray(f, dtype=float)
    beta_bar = np.zeros(N) if beta_bar is None else np.asarray(beta_bar, dtype=float)
    zero_derivatives = {"db_dx": None, "df_dx": None, "dbeta_dx": None}
    if n == 1:
        zero_derivatives = {
            "db_dx": lambda x, view: np.zeros((1, 1)),
            "df_dx": lambda x, view: np.zeros(1),
            "dbeta_dx": lambda x, view: np.zeros((N, 1)),
        }
    return CoefficientSet(
        name=name, n=n, N=N,
        b=lambda x, view: b,
        f=lambda x, view: f,
        lam=lambda x, view: np.asarray(float(lam)),
        beta=lambda x, view: beta,
        beta_bar=lambda x, view: beta_bar,
        parameters=dict(parameters or {}),
        **zero_derivatives,
    )


# ---------------------------------------------------------------------------
# Coercivity certificates


@dataclass
class ConditionReport:
    """Margins of the standard, strengthened and N0 coercivity forms with their argmin samples"""
    margin_standard: float
    margin_strengthened: float
    margin_N0: Optional[float] = None
    N0: Optional[int] = None
    locations: dict = field(default_factory=dict)

    @property
    def standard_holds(self):
        return self.margin_standard > 0

    @property
    def strengthened_holds(self):
        return self.margin_strengthened > 0

    def to_records(self):
        records = []
        for name in ("standard", "strengthened", "N0"):
            margin = getattr(self, f"margin_{name}")
            if margin is None:
                continue
            location = self.locations.get(name, {})
            records.append({
                "condition": name,
                "margin": margin,
                "holds": margin > 0,
                "x": " ".join(f"{value:.17g}" for value in location.get("x", ())),
                "t": location.get("t", float("nan")),
                "level": location.get("level", -1),
                "node": location.get("node", -1),
            })
        return records


def standard_matrices(b, beta):
    """b - 1/2 sum_i beta_i beta_i^T for samples b (S, n, n), beta (S, N, n)"""
    return b - 0.5 * np.einsum("sin,sim->snm", beta, beta)


def strengthened_matrices(b, beta):
    """I_N (x) b - 1/2 beta beta^T with beta stacked to length N n, shape (S, N n, N n)"""
    samples, N, n = beta.shape
    blocks = np.zeros((samples, N * n, N * n))
    for i in range(N):
        blocks[:, i * n:(i + 1) * n, i * n:(i + 1) * n] = b
    stacked = beta.reshape(samples, N * n)
    return blocks - 0.5 * stacked[:, :, None] * stacked[:, None, :]


def criterion_matrices(b, beta, N0):
    """b - (N0/2) beta_i beta_i^T for i < N0, shape (S, N0, n, n)"""
    leading = beta[:, :N0, :]
    return b[:, None, :, :] - 0.5 * N0 * leading[:, :, :, None] * leading[:, :, None, :]


def smallest_eigenvalues(matrices):
    """Smallest eigenvalue of each symmetric matrix in a batch"""
    return np.linalg.eigvalsh(matrices)[..., 0]


def sample_points(coeffs, grid=None, points_per_axis=5):
    """Spatial sample points: every grid node incl. boundary for n = 1, a lattice for n >= 2"""
    if coeffs.n == 1:
        if grid is None:
            return np.linspace(0.0, 1.0, 2 * points_per_axis + 1)[:, None]
        return grid.nodes_with_boundary[:, None]
    x_lo, x_hi = (0.0, 1.0) if grid is None else (grid.x_lo, grid.x_hi)
    axis = np.linspace(x_lo, x_hi, points_per_axis)
    mesh = np.meshgrid(*([axis] * coeffs.n), indexing="ij")
    return np.stack([m.ravel() for m in mesh], axis=-1)


def _sample_levels(coeffs, tree):
    if tree is None:
        tree = NoiseTree(coeffs.N, 1, 1.0)
        return tree, [0]
    if tree.N != coeffs.N:
        raise GuardError(f"Coefficients have N = {coeffs.N}, tree has N = {tree.N}")
    return tree, list(range(tree.M + 1))


def _location(x, view, flat_index, m):
    node, point = divmod(int(flat_index), m)
    return {"x": tuple(float(v) for v in x[point]), "t": view.t, "level": view.level, "node": node}


def certify(coeffs, grid=None, tree=None, N0=None, points_per_axis=5):
    """
    Compute every coercivity margin over the samples (grid x levels x nodes).

    Args:
        coeffs (CoefficientSet): Coefficients
        grid (Grid): Spatial sampling grid (n = 1) or bounding interval (n >= 2)
        tree (NoiseTree): Tree whose levels and nodes are sampled; None samples t = 0, w = 0
        N0 (int): Optional N0 for the N0-criterion
        points_per_axis (int): Lattice resolution for n >= 2

    Returns:
        ConditionReport: Margins and argmin locations
    """
    if N0 is not None:
        if not 1 <= N0 <= coeffs.N:
            raise GuardError(f"N0 must lie in 1..N = {coeffs.N}, got {N0}")
    x = sample_points(coeffs, grid, points_per_axis)
    tree, levels = _sample_levels(coeffs, tree)
    best = {"standard": (np.inf, None), "strengthened": (np.inf, None), "N0": (np.inf, None)}
    m = x.shape[0]
    for k in levels:
        view = tree.view(k)
        b = coeffs.evaluate("b", x, view).reshape(-1, coeffs.n, coeffs.n)
        beta = coeffs.evaluate("beta", x, view).reshape(-1, coeffs.N, coeffs.n)
        asymmetry = np.max(np.abs(b - np.swapaxes(b, 1, 2)), axis=(1, 2))
        if np.max(asymmetry) > SYMMETRY_TOLERANCE:
            index = int(np.argmax(asymmetry))
            raise NonSymmetricError(float(asymmetry[index]), _location(x, view, index, m))
        candidates = {
            "standard": smallest_eigenvalues(standard_matrices(b, beta)),
            "strengthened": smallest_eigenvalues(strengthened_matrices(b, beta)),
        }
        if N0 is not None:
            if np.any(beta[:, N0:, :] != 0.0):
                raise GuardError(f"N0-criterion needs beta_i = 0 for i > N0 = {N0}")
            candidates["N0"] = np.min(smallest_eigenvalues(criterion_matrices(b, beta, N0)), axis=1)
        for name, values in candidates.items():
            index = int(np.argmin(values))
            if values[index] < best[name][0]:
                best[name] = (float(values[index]), _location(x, view, index, m))
    locations = {name: location for name, (_, location) in best.items() if location is not None}
    report = ConditionReport(
        margin_standard=best["standard"][0],
        margin_strengthened=best["strengthened"][0],
        margin_N0=best["N0"][0] if N0 is not None else None,
        N0=N0,
        locations=locations,
    )
    logger.debug(
        f"Margins for {coeffs.name}: standard {report.margin_standard:.6g}, "
        f"strengthened {report.margin_strengthened:.6g}"
    )
    return report


def check_coercivity(coeffs, grid=None, tree=None):
    """Minimum over samples of the smallest eigenvalue of b - 1/2 sum_i beta_i beta_i^T"""
    return certify(coeffs, grid, tree).margin_standard


def check_strengthened_coercivity(coeffs, grid=None, tree=None):
    """Minimum over samples of the smallest eigenvalue of I_N (x) b - 1/2 beta beta^T"""
    return certify(coeffs, grid, tree).margin_strengthened


def check_criterion_N0(coeffs, N0, grid=None, tree=None):
    """Minimum over samples and i <= N0 of the smallest eigenvalue of b - (N0/2) beta_i beta_i^T"""
    return certify(coeffs, grid, tree, N0=N0).margin_N0


def boundary_beta_max(coeffs, grid, tree):
    """Largest |beta_i| at the two boundary points over all levels and nodes"""
    x = np.array([[grid.x_lo], [grid.x_hi]])
    return max(
        float(np.max(np.abs(coeffs.evaluate("beta", x, tree.view(k))), initial=0.0))
        for k in range(tree.M + 1)
    )


def beta_vanishes_on_boundary(coeffs, grid, tree, rtol=BOUNDARY_RTOL):
    """
    Whether every beta_i is zero at both boundary points up to rounding.

    Floating-point evaluation of a profile like sin(pi x) at x = 1 leaves a
    residue of order 1e-16, so the boundary values are compared with rtol
    times the largest |beta| over the grid nodes.
    """
    boundary = boundary_beta_max(coeffs, grid, tree)
    x = grid.nodes_with_boundary[:, None]
    interior = max(
        float(np.max(np.abs(coeffs.evaluate("beta", x, tree.view(k))), initial=0.0))
        for k in range(tree.M + 1)
    )
    return boundary <= rtol * interior


# ---------------------------------------------------------------------------
# Presets


def _heat(N):
    return scalar_set("heat", N, b=1.0, db_dx=0.0, df_dx=0.0, dbeta_dx=[0.0] * N)


def _transport(N, amplitude=0.6, beta_bar=0.1, name="transport"):
    # beta_i vanishes at x = 0 and x = 1
    weight = amplitude / np.sqrt(N)

    def component(i):
        return lambda x, view: weight * np.sin((i + 1) * np.pi * x)

    def slope(i):
        return lambda x, view: weight * (i + 1) * np.pi * np.cos((i + 1) * np.pi * x)

    return scalar_set(
        name, N, b=1.0,
        beta=[component(i) for i in range(N)],
        beta_bar=[beta_bar] * N,
        db_dx=0.0, df_dx=0.0,
        dbeta_dx=[slope(i) for i in range(N)],
        parameters={"amplitude": amplitude, "beta_bar": beta_bar},
    )


def _near_degenerate(N, amplitude=1.38, beta_bar=0.0):
    return _transport(N, amplitude=amplitude, beta_bar=beta_bar, name="near_degenerate")


def _driftful(N, scale=1.0):
    # b, lam and beta_bar depend on the path through w_1(t_k)
    def b(x, view):
        return 1.0 + 0.5 * x + 0.2 * np.tanh(view.w[:, :1]) * x * (1.0 - x)

    def db_dx(x, view):
        return 0.5 + 0.2 * np.tanh(view.w[:, :1]) * (1.0 - 2.0 * x)

    def lam(x, view):
        return -0.5 + 0.25 * np.sin(view.w[:, :1]) + 0.0 * x

    def component(i):
        return lambda x, view: scale * 0.5 / np.sqrt(N) * np.sin(np.pi * x) * (1.0 + 0.1 * np.cos(view.w[:, i:i + 1]))

    def slope(i):
        return lambda x, view: scale * 0.5 / np.sqrt(N) * np.pi * np.cos(np.pi * x) * (1.0 + 0.1 * np.cos(view.w[:, i:i + 1]))

    def mean_rate(i):
        return lambda x, view: 0.2 * np.cos(view.w[:, i:i + 1]) + 0.0 * x

    return scalar_set(
        "driftful", N,
        b=b,
        f=lambda x, view: 0.4 * np.cos(np.pi * x),
        lam=lam,
        beta=[component(i) for i in range(N)],
        beta_bar=[mean_rate(i) for i in range(N)],
        db_dx=db_dx,
        df_dx=lambda x, view: -0.4 * np.pi * np.sin(np.pi * x),
        dbeta_dx=[slope(i) for i in range(N)],
        parameters={"scale": scale},
    )


def _example1(N):
    if N != 2:
        raise GuardError(f"Preset 'example1' is defined for N = 2, got N = {N}")
    return constant_set("example1", b=0.51 * np.eye(2), beta=np.eye(2))


def _random(N, seed=0):
    rng = np.random.default_rng(seed)
    b0 = rng.uniform(1.0, 2.0)
    b1, b2 = rng.uniform(-0.2, 0.2, size=2)
    f1 = rng.uniform(-0.5, 0.5)
    lam0 = rng.uniform(-1.0, 0.5)
    raw = rng.normal(size=N)
    weights = rng.uniform(0.2, 1.0) * raw / np.linalg.norm(raw)
    rates = rng.uniform(-0.3, 0.3, size=N)

    def component(i):
        return lambda x, view: weights[i] * np.sin(np.pi * x)

    def slope(i):
        return lambda x, view: weights[i] * np.pi * np.cos(np.pi * x)

    return scalar_set(
        f"random({seed})", N,
        b=lambda x, view: b0 + b1 * np.sin(np.pi * x) + b2 * np.cos(2 * np.pi * x),
        f=lambda x, view: f1 * np.sin(2 * np.pi * x),
        lam=lam0,
        beta=[component(i) for i in range(N)],
        beta_bar=list(rates),
        db_dx=lambda x, view: b1 * np.pi * np.cos(np.pi * x) - 2 * np.pi * b2 * np.sin(2 * np.pi * x),
        df_dx=lambda x, view: 2 * np.pi * f1 * np.cos(2 * np.pi * x),
        dbeta_dx=[slope(i) for i in range(N)],
        parameters={"seed": seed},
    )


def random_constant_set(rng, n, N, N0=None, beta_scale=None):
    """Random constant coefficients for property suites: b SPD, beta_i = 0 for i >= N0"""
    a = rng.normal(size=(n, n))
    b = a @ a.T / n + rng.uniform(0.05, 1.0) * np.eye(n)
    scale = rng.uniform(0.1, 1.5) if beta_scale is None else beta_scale
    beta = scale * rng.normal(size=(N, n))
    if N0 is not None:
        beta[N0:, :] = 0.0
    return constant_set(f"random_constant(n={n}, N={N})", b=0.5 * (b + b.T), beta=beta)


PRESETS = {
    "heat": (_heat, "b = 1, every other field zero"),
    "transport": (_transport, "b = 1, beta_i = a sin((i+1) pi x)/sqrt(N), constant beta_bar"),
    "heat_transport": (_transport, "alias of transport"),
    "near_degenerate": (_near_degenerate, "transport with amplitude 1.38: margins close to zero"),
    "driftful": (_driftful, "path-dependent b, lam, beta_bar with nonzero drift f"),
    "example1": (_example1, "n = 2, N = 2, b = 0.51 I, beta_i = e_i (condition checkers only)"),
    "random": (_random, "smooth random coefficients drawn from random(seed)"),
}


def _delta_smooth(N):
    def unit(i):
        return lambda x, view: np.sin(np.pi * x)

    def unit_slope(i):
        return lambda x, view: np.pi * np.cos(np.pi * x)

    return scalar_set(
        "smooth", N,
        b=lambda x, view: np.cos(np.pi * x),
        f=lambda x, view: np.sin(2 * np.pi * x),
        lam=lambda x, view: x * (1.0 - x),
        beta=[unit(i) for i in range(N)],
        beta_bar=[1.0] * N,
        db_dx=lambda x, view: -np.pi * np.sin(np.pi * x),
        df_dx=lambda x, view: 2 * np.pi * np.cos(2 * np.pi * x),
        dbeta_dx=[unit_slope(i) for i in range(N)],
    )


def _delta_zero(N):
    zero = scalar_set("none", N, b=0.0, db_dx=0.0, df_dx=0.0, dbeta_dx=[0.0] * N)
    return zero


PERTURBATIONS = {
    "smooth": _delta_smooth,
    "coefficients": _delta_smooth,
    "xi_only": _delta_zero,
    "data": _delta_zero,
}


def parse_preset_name(text):
    """'random(7)' -> ('random', {'seed': 7}); 'heat' -> ('heat', {})"""
    match = re.fullmatch(r"\s*([A-Za-z_][A-Za-z0-9_]*)\s*(?:\(\s*(-?\d+)\s*\))?\s*", str(text))
    if not match:
        raise ConfigurationError(f"Invalid coefficient preset {text!r}")
    name, seed = match.groups()
    return name, ({} if seed is None else {"seed": int(seed)})


def get_preset(text, N, **params):
    """
    Look up a coefficient preset by name.

    Args:
        text (str): Preset name, e.g. 'heat', 'transport' or 'random(7)'
        N (int): Noise dimension
        **params: Preset parameters (amplitude, beta_bar, scale, seed)

    Returns:
        CoefficientSet: The coefficients
    """
    name, parsed = parse_preset_name(text)
    if name not in PRESETS:
        raise ConfigurationError(f"Unknown coefficient preset {name!r}; known presets: {', '.join(sorted(PRESETS))}")
    builder = PRESETS[name][0]
    options = {**parsed, **params}
    try:
        return builder(N, **options)
    except TypeError as e:
        raise ConfigurationError(f"Invalid parameters {options} for preset {name!r}: {str(e)}")


def get_perturbation(name, N):
    if name not in PERTURBATIONS:
        raise ConfigurationError(f"Unknown perturbation preset {name!r}; known: {', '.join(sorted(PERTURBATIONS))}")
    return PERTURBATIONS[name](N)
