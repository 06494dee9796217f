import configparser
import os
import logging
from dataclasses import dataclass, field, asdict

from spde.coefficients import get_preset
from spde.errors import ConfigurationError, GuardError
from spde.grid_norms import build_grid
from spde.noise_tree import build_tree

# Configure logging
logging.basicConfig(level=logging.INFO, format='%(asctime)s - %(name)s - %(levelname)s - %(message)s')
logger = logging.getLogger(__name__)

OUTPUT_DIR_ENV = "SPDE_LAB_OUTPUT_DIR"
SOLVER_ROUTES = ("adjoint", "dp", "neumann")
KNOWN_SECTIONS = ("experiment", "grid", "tree", "coefficients", "solver", "output")
EXPERIMENT_KEYS = ("name", "seed", "n_trials")


@dataclass
class RunConfig:
    """Everything a run needs: experiment, grid, tree, coefficients, solver and output settings"""
    experiment: str
    x_lo: float = 0.0
    x_hi: float = 1.0
    n_x: int = 32
    N: int = 1
    M: int = 8
    T: float = 1.0
    preset: str = "heat"
    preset_params: dict = field(default_factory=dict)
    solver: str = "adjoint"
    k_policy: str = "auto"
    tol: float = 1e-8
    max_iter: int = 50
    seed: int = 7
    n_trials: int = 20
    output_dir: str = "results"
    detailed_report: bool = False
    options: dict = field(default_factory=dict)
    source: str = ""

    def validate(self):
        """
        Check every setting and build grid, tree and coefficients once so guard
        messages surface before an experiment starts.

        Raises:
            ConfigurationError: Unknown experiment, route or policy, bad tolerances
            GuardError: Grid, tree or preset guards
        """
        from experiments import EXPERIMENTS

        if self.experiment not in EXPERIMENTS:
            raise ConfigurationError(
                f"Unknown experiment {self.experiment!r}; known experiments: {', '.join(EXPERIMENTS)}"
            )
        if self.solver not in SOLVER_ROUTES:
            raise ConfigurationError(f"Unknown solver route {self.solver!r}; expected one of {', '.join(SOLVER_ROUTES)}")
        if self.k_policy != "auto":
            try:
                value = float(self.k_policy)
            except ValueError:
                raise ConfigurationError(f"k_policy must be 'auto' or a number, got {self.k_policy!r}")
            if value < 0:
                raise ConfigurationError(f"k_policy must be non-negative, got {value}")
        if self.tol <= 0:
            raise ConfigurationError(f"Tolerance must be positive, got {self.tol}")
        if self.max_iter < 1:
            raise ConfigurationError(f"max_iter must be at least 1, got {self.max_iter}")
        if self.n_trials < 1:
            raise ConfigurationError(f"n_trials must be at least 1, got {self.n_trials}")
        self.build_grid()
        self.build_tree()
        self.build_coefficients()
        return self

    def build_grid(self, n_x=None):
        return build_grid(self.x_lo, self.x_hi, self.n_x if n_x is None else n_x)

    def build_tree(self, N=None, M=None, T=None):
        return build_tree(
            self.N if N is None else N,
            self.M if M is None else M,
            self.T if T is None else T,
        )

    def build_coefficients(self, N=None, preset=None):
        return get_preset(self.preset if preset is None else preset, self.N if N is None else N, **self.preset_params)

    @property
    def K(self):
        """Fixed damping K, or None for the automatic policy"""
        return None if self.k_policy == "auto" else float(self.k_policy)

    def option(self, key, default=None):
        return self.options.get(key, default)

    def option_float(self, key, default):
        return self._convert(key, default, float)

    def option_int(self, key, default):
        return self._convert(key, default, int)

    def option_bool(self, key, default):
        value = self.options.get(key)
        if value is None:
            return default
        if isinstance(value, bool):
            return value
        text = str(value).strip().lower()
        if text in ("1", "true", "yes", "on"):
            return True
        if text in ("0", "false", "no", "off"):
            return False
        raise ConfigurationError(f"Option {key!r} must be a boolean, got {value!r}")

    def option_list(self, key, default, cast=float):
        """Comma-separated option parsed with cast; default is used when the key is absent"""
        value = self.options.get(key)
        if value is None:
            return list(default)
        if isinstance(value, (list, tuple)):
            return [cast(item) for item in value]
        try:
            return [cast(item.strip()) for item in str(value).split(",") if item.strip()]
        except ValueError:
            raise ConfigurationError(f"Option {key!r} has an invalid entry: {value!r}")

    def _convert(self, key, default, cast):
        value = self.options.get(key)
        if value is None:
            return default
        try:
            return cast(value)
        except (TypeError, ValueError):
            raise ConfigurationError(f"Option {key!r} must be {cast.__name__}, got {value!r}")

    def to_parameters(self):
        """Flat parameter dictionary recorded in every report"""
        params = asdict(self)
        params.pop("options")
        params.pop("preset_params")
        params.pop("source")
        for key, value in sorted(self.preset_params.items()):
            params[f"preset.{key}"] = value
        for key, value in sorted(self.options.items()):
            params[f"option.{key}"] = value
        return params


def _number(parser, section, key, cast, default):
    if not parser.has_option(section, key):
        return default
    raw = parser.get(section, key)
    try:
        return cast(raw)
    except ValueError:
        raise ConfigurationError(f"[{section}] {key} must be {cast.__name__}, got {raw!r}")


def _preset_value(raw):
    for cast in (int, float):
        try:
            return cast(raw)
        except ValueError:
            pass
    return raw


def load_config(path):
    """
    Read a run configuration from an INI file.

    Args:
        path (str): Path of the config file

    Returns:
        RunConfig: The validated configuration
    """
    parser = configparser.ConfigParser()
    try:
        with open(path, encoding="utf-8") as handle:
            parser.read_file(handle)
    except OSError as e:
        raise ConfigurationError(f"Cannot read config {path}: {str(e)}")
    except configparser.Error as e:
        raise ConfigurationError(f"Malformed config {path}: {str(e)}")

    unknown = [section for section in parser.sections() if section not in KNOWN_SECTIONS]
    if unknown:
        raise ConfigurationError(f"Unknown config sections: {', '.join(unknown)}")
    if not parser.has_option("experiment", "name"):
        raise ConfigurationError(f"Config {path} has no [experiment] name")

    defaults = RunConfig(experiment="")
    options = {}
    if parser.has_section("experiment"):
        for key, value in parser.items("experiment"):
            if key not in EXPERIMENT_KEYS:
                options[key] = value
    preset_params = {}
    if parser.has_section("coefficients"):
        for key, value in parser.items("coefficients"):
            if key != "preset":
                preset_params[key] = _preset_value(value)

    config = RunConfig(
        experiment=parser.get("experiment", "name").strip(),
        x_lo=_number(parser, "grid", "x_lo", float, defaults.x_lo),
        x_hi=_number(parser, "grid", "x_hi", float, defaults.x_hi),
        n_x=_number(parser, "grid", "n_x", int, defaults.n_x),
        N=_number(parser, "tree", "N", int, defaults.N),
        M=_number(parser, "tree", "M", int, defaults.M),
        T=_number(parser, "tree", "T", float, defaults.T),
        preset=parser.get("coefficients", "preset", fallback=defaults.preset).strip(),
        preset_params=preset_params,
        solver=parser.get("solver", "route", fallback=defaults.solver).strip(),
        k_policy=parser.get("solver", "k_policy", fallback=defaults.k_policy).strip(),
        tol=_number(parser, "solver", "tol", float, defaults.tol),
        max_iter=_number(parser, "solver", "max_iter", int, defaults.max_iter),
        seed=_number(parser, "experiment", "seed", int, defaults.seed),
        n_trials=_number(parser, "experiment", "n_trials", int, defaults.n_trials),
        output_dir=parser.get("output", "directory", fallback=defaults.output_dir).strip(),
        detailed_report=parser.getboolean("output", "detailed_report", fallback=False),
        options=options,
        source=str(path),
    )
    override = os.environ.get(OUTPUT_DIR_ENV)
    if override:
        logger.info(f"Output directory overridden by {OUTPUT_DIR_ENV}: {override}")
        config.output_dir = override
    return config.validate()
