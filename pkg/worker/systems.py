import numpy as np
from pydantic import BaseModel, ConfigDict

from adapters.base import ModelSpec
from adapters.registry import get_adapter, model_chain
from bounds.invariants import RATIO_CEILING
from core.config import TAIL_TOL, TERM_TOL
from core.errors import InputError
from core.logger import logger
from krylov.dynamics import AmplitudeTrajectory, evolve_spectral
from krylov.lanczos import LanczosChain, build_chain
from operators.hamiltonian import HermitianMatrix, OperatorState, random_hermitian, random_traceless_hermitian
from operators.liouvillian import Liouvillian

# semi-infinite families run to a fixed horizon that keeps the truncated chain desk-sized
MODEL_SWEEP: list[tuple[str, dict, float]] = [
    ("qubit_z",               {"family": "qubit_z", "omega": 1.0},                  10.0),
    ("qubit_transverse_1_1",  {"family": "qubit_transverse", "omega": 1.0, "h": 1.0}, 10.0),
    ("qubit_transverse_2_05", {"family": "qubit_transverse", "omega": 2.0, "h": 0.5}, 10.0),
    ("qubit_transverse_03_17", {"family": "qubit_transverse", "omega": 0.3, "h": 1.7}, 10.0),
    ("constant_b",            {"family": "constant_b", "b": 1.0},                    10.0),
    ("meixner",               {"family": "meixner", "alpha": 1.0, "eta": 2.0},        2.0),
    ("coherent",              {"family": "coherent", "alpha": 1.0},                   6.0),
]


class VerifySystem(BaseModel):
    """A system under test: a dense Hamiltonian with a seed, or a model family."""

    model_config = ConfigDict(arbitrary_types_allowed=True, frozen=True)

    name: str
    model: ModelSpec | None = None
    hamiltonian: HermitianMatrix | None = None
    seed: OperatorState | None = None
    horizon: float = 10.0
    scaled: bool = False  # horizon measured in units of 1 / b_1
    ratio_ceiling: float | None = RATIO_CEILING

    @property
    def dense(self) -> bool:
        return self.hamiltonian is not None


class SystemContext(BaseModel):
    """A prepared system: its chain and the exact trajectory every check starts from."""

    model_config = ConfigDict(arbitrary_types_allowed=True, frozen=True)

    system: VerifySystem
    chain: LanczosChain
    liouvillian: Liouvillian | None = None
    times: np.ndarray
    spectral: AmplitudeTrajectory
    term_tol: float = TERM_TOL
    inject_bug: str | None = None


def model_system(name: str, spec: ModelSpec, horizon: float) -> VerifySystem:
    adapter = get_adapter(spec.family)
    hamiltonian = adapter.hamiltonian(spec)
    return VerifySystem(
        name=name,
        model=spec,
        hamiltonian=hamiltonian,
        seed=adapter.seed(spec) if hamiltonian is not None else None,
        horizon=horizon,
    )


def random_system(index: int, rng: np.random.Generator, horizon: float) -> VerifySystem:
    dim = int(rng.integers(2, 9))
    return VerifySystem(
        name=f"random_{index}_d{dim}",
        hamiltonian=random_hermitian(dim, rng),
        seed=random_traceless_hermitian(dim, rng),
        horizon=horizon,
        scaled=True,
        ratio_ceiling=None,
    )


def default_sweep(random_systems: int, seed: int, t_max: float = 10.0) -> list[VerifySystem]:
    systems = [model_system(name, ModelSpec(**params), horizon) for name, params, horizon in MODEL_SWEEP]
    rng = np.random.default_rng(seed)
    systems += [random_system(i, rng, t_max) for i in range(random_systems)]
    return systems


def prepare_system(
    system: VerifySystem,
    samples: int,
    term_tol: float = TERM_TOL,
    tail_tol: float = TAIL_TOL,
    inject_bug: str | None = None,
) -> SystemContext:
    liouvillian = None
    if system.dense:
        if system.seed is None:
            raise InputError(f"system '{system.name}' has a Hamiltonian but no seed operator")
        liouvillian = Liouvillian(hamiltonian=system.hamiltonian)
        chain = build_chain(liouvillian, system.seed, term_tol=term_tol)
    elif system.model is not None:
        chain = model_chain(system.model, system.horizon, tail_tol)
    else:
        raise InputError(f"system '{system.name}' has neither a Hamiltonian nor a model")

    horizon = system.horizon / chain.b1 if system.scaled and chain.b1 > 0 else system.horizon
    times = np.linspace(0.0, horizon, samples)
    logger.debug(f"[verify] prepared {system.name}: D={chain.dim_krylov} horizon={horizon:.6g}")
    return SystemContext(
        system=system,
        chain=chain,
        liouvillian=liouvillian,
        times=times,
        spectral=evolve_spectral(chain, times),
        term_tol=term_tol,
        inject_bug=inject_bug,
    )
