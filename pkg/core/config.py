import os
from pathlib import Path

from dotenv import load_dotenv

# Load .env from the repository root
_env_path = Path(__file__).resolve().parent.parent / ".env"
load_dotenv(_env_path)

ENV_PREFIX: str = "KRYLOV_"
TOOL_NAME: str = "krylov-sphere"
TOOL_VERSION: str = "0.1.0"


def env_value(name: str) -> str | None:
    """Return the KRYLOV_-prefixed override for a flag name such as 't-max', or None."""
    return os.getenv(f"{ENV_PREFIX}{name.upper().replace('-', '_')}")


# Operator space
DIM_MAX: int            = int(os.getenv("KRYLOV_DIM_MAX", "64"))
HERMITICITY_RTOL: float = float(os.getenv("KRYLOV_HERMITICITY_RTOL", "1e-12"))

# Lanczos
TERM_TOL: float = float(os.getenv("KRYLOV_TERM_TOL", "1e-12"))

# Chain dynamics
RTOL: float                = float(os.getenv("KRYLOV_RTOL", "1e-10"))
ATOL: float                = float(os.getenv("KRYLOV_ATOL", "1e-12"))
NORM_TOL: float            = float(os.getenv("KRYLOV_NORM_TOL", "1e-9"))
TAIL_TOL: float            = float(os.getenv("KRYLOV_TAIL_TOL", "1e-12"))
TRUNCATION_CAP: int        = int(os.getenv("KRYLOV_TRUNCATION_CAP", "20000"))
SPECTRAL_DENSE_MAX: int    = int(os.getenv("KRYLOV_SPECTRAL_DENSE_MAX", "3000"))

# Geometry and bounds
EPS_OCCUPATION: float   = float(os.getenv("KRYLOV_EPS_OCCUPATION", "1e-12"))
AMPLITUDE_FLOOR: float  = float(os.getenv("KRYLOV_AMPLITUDE_FLOOR", "1e-14"))

# Verification runner
VERIFY_WORKERS: int = int(os.getenv("KRYLOV_VERIFY_WORKERS", "4"))

# Model zoo
MODEL_MAX_LEVELS: int = int(os.getenv("KRYLOV_MODEL_MAX_LEVELS", "1000000"))
