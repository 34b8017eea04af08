import os

from dotenv import load_dotenv
from pydantic import ValidationError

from models.pydantic_classes import RunConfig
from src.utils.errors import ConfigurationError

load_dotenv()

# Logs
LOG_DIRECTORY = os.getenv("ZETA_LAB_LOG_DIR", os.path.join("data", "logs"))
LOG_LEVEL = os.getenv("ZETA_LAB_LOG_LEVEL", "INFO")

# Artifacts
OUTPUT_DIRECTORY = os.getenv("ZETA_LAB_OUTPUT_DIR", os.path.join("data", "runs"))
CACHE_DIRECTORY = os.getenv("ZETA_LAB_CACHE_DIR", os.path.join("data", "cache"))
THREADS = int(os.getenv("ZETA_LAB_THREADS", str(os.cpu_count() or 1)))

# Primes
PRIME_LIMIT_MAX = 10**9
PRIME_LIMIT_DEFAULT = 10**8
SIEVE_SEGMENT = 2**22
# prime_zeta_tail switches to direct summation below this fraction of P(s)
PRIME_TAIL_RELATIVE_FLOOR = 1e-10
PRIME_TAIL_DIRECT_SPAN = 10**7

# Quadrature
PERIODIC_ABS_TOL = 1e-13
PERIODIC_MIN_NODES = 16
PERIODIC_MAX_NODES = 2**16
ADAPTIVE_ABS_TOL = 1e-11
SEMI_INFINITE_ABS_TOL = 1e-10
SEMI_INFINITE_CUTOFF = 1e-16

# Moments
MOMENT_PRIME_CUTOFF = 10**6
MOMENT_TAIL_ORDER = 6
MOMENT_Z_MAX = 1e3
PRIME_FACTOR_Z_MAX = 1e4
CHARFUN_TRUNCATION_CONSTANT = 10.0
PHI_RAND_Y_DEFAULT = 10**4
LOG_SERIES_BELOW = 1e-4

# Saddle
SADDLE_KAPPA_MAX = 1e3
SADDLE_DAMPING = 0.8
SADDLE_MAX_REJECTED = 3
SADDLE_MAX_ITERATIONS = 60

# Zeta evaluation
EM_BERNOULLI_TERMS = 8
EM_MIN_TERMS = 20
ZETA_T_MAX = 1e7
ZETA_TOL = 1e-12
ARG_INITIAL_STEP = 0.25
ARG_MAX_LEVELS = 20
NEAR_ZERO_THRESHOLD = 1e-10

# Random model
MODEL_TRUNCATION_SD = 1e-3
MODEL_PRIME_CAP = 2 * 10**4
MC_CHUNK = 2**14

# Empirical
AUTO_FULL_ZETA_BELOW = 1e4
EXCLUDED_WARNING_FRACTION = 0.01
MAX_EXCLUDED_FRACTION = 0.05
MIN_RETAINED_FRACTION = 0.5
DIRICHLET_ENVELOPE_CONSTANT = 10.0
EMPIRICAL_CHUNK = 512

# Discrepancy
DISCREPANCY_GRID_DEFAULT = 64
DISCREPANCY_STAT_CONSTANT = 2.0

# a-points
WINDING_BLOCK_HEIGHT = 100.0
WINDING_MAX_LEVELS = 25
WINDING_INITIAL_MESH = 64
WINDING_STEP = 0.1
ON_CONTOUR_THRESHOLD = 1e-9
ON_CONTOUR_RETRIES = 5
ON_CONTOUR_SHIFT = 1e-3
ROOT_TOLERANCE = 1e-10
ROOT_MAX_DEPTH = 12
LITTLEWOOD_STEP = 0.01
DENSITY_MODEL_SAMPLES = 10**7

# Facade
CONSTANTS_FIT_TAUS = (1.5, 2.0, 2.5, 3.0)


def read_key_value_file(path: str) -> dict:
    """
    Parse a plain key=value config file.

    Blank lines and lines starting with '#' are skipped. Values stay strings;
    RunConfig validation converts them. A T_list value is a comma separated list.

    Args:
        path (str): Path of the config file.

    Returns:
        dict: Raw key/value pairs.

    Raises:
        ConfigurationError: If the file cannot be read or a line has no '='.
    """
    try:
        with open(path, "r", encoding="utf-8") as handle:
            lines = handle.readlines()
    except OSError as e:
        raise ConfigurationError(f"cannot read config file {path}: {e}", "cli", "load_config") from e

    values = {}
    for number, line in enumerate(lines, start=1):
        line = line.strip()
        if not line or line.startswith("#"):
            continue
        if "=" not in line:
            raise ConfigurationError(f"{path}:{number}: expected key=value", "cli", "load_config")
        key, value = line.split("=", 1)
        values[key.strip()] = value.strip()
    if "T_list" in values:
        values["T_list"] = [item.strip() for item in values["T_list"].split(",") if item.strip()]
    return values


def load_run_config(path: str = None, overrides: dict = None) -> RunConfig:
    """
    Build a validated RunConfig from defaults, an optional key=value file and flag overrides.

    Precedence is defaults < file < overrides. ZETA_LAB_OUTPUT_DIR replaces the default
    output directory and THREADS the default worker count.

    Args:
        path (str, optional): key=value config file.
        overrides (dict, optional): Values coming from CLI flags; None entries are ignored.

    Returns:
        RunConfig: The validated configuration.

    Raises:
        ConfigurationError: Unknown keys or values outside their ranges.
    """
    values = {"output_dir": OUTPUT_DIRECTORY, "threads": THREADS}
    if path:
        values.update(read_key_value_file(path))
    values.update({k: v for k, v in (overrides or {}).items() if v is not None})

    try:
        return RunConfig(**values)
    except ValidationError as e:
        problems = []
        for error in e.errors():
            key = ".".join(str(part) for part in error["loc"]) or "config"
            field = RunConfig.model_fields.get(str(error["loc"][0])) if error["loc"] else None
            constraint = f" ({field.description})" if field is not None and field.description else ""
            problems.append(f"{key}: {error['msg']}{constraint}")
        raise ConfigurationError("; ".join(problems), "cli", "load_config") from e
