from datetime import datetime
from typing import Callable, Literal

import numpy as np
from pydantic import BaseModel, Field

from adapters.registry import get_adapter, model_coefficients
from bounds.invariants import (
    InvariantSpec,
    bounds_report,
    build_commuting_invariant,
    krylov_complexity,
    moment_conservation,
)
from bounds.light_cone import tail_envelope_check
from core.errors import InvariantViolation
from geometry.hall import hall_check
from geometry.sphere import arc_length, geometry_report, krylov_speed
from krylov.dynamics import HoppingMatrix, evolve_ode
from krylov.lanczos import build_chain
from operators.liouvillian import Liouvillian, heisenberg_oracle
from worker.systems import SystemContext

Status = Literal["PASS", "FAIL", "ERROR", "SKIP"]

ALL_CHECKS: tuple[str, ...] = ("speed", "geometry", "hall", "bounds", "invariants", "moments", "chain", "oracle")
AGREEMENT_TOL: float = 1e-8
ARC_RTOL: float = 1e-8
CLOSURE_ATOL: float = 1e-10
CANONICAL_MAX_DIM: int = 256
ORACLE_SAMPLES: int = 5
SPEED_RTOL: float = 1e-8  # integrated trajectories; spectral ones are held to 1e-9 in geometry


class CheckResult(BaseModel):
    check: str
    system: str
    status: Status
    detail: str = ""
    metrics: dict[str, float] = Field(default_factory=dict)
    timestamp: str = Field(default_factory=lambda: datetime.now().strftime("%Y-%m-%d %H:%M:%S"))


class Skip(Exception):
    """Raised by a check that does not apply to the system."""


def _require(condition: bool, invariant: str, detail: str) -> None:
    if not condition:
        raise InvariantViolation(invariant, detail)


def check_speed(ctx: SystemContext) -> dict[str, float]:
    """Constant speed, norm conservation and ODE/spectral agreement."""
    chain = ctx.chain
    hopping = None
    if ctx.inject_bug == "hopping_sign":
        hopping = HoppingMatrix(coefficients=chain.coefficients, lower_sign=-1)
    ode = evolve_ode(chain, ctx.times, hopping=hopping)
    b1 = chain.b1
    speed_dev = float(np.max(np.abs(krylov_speed(ode) - b1)))
    agreement = float(np.max(np.abs(ode.phi - ctx.spectral.phi)))
    metrics = {
        "speed_deviation": speed_dev,
        "norm_drift": float(ode.norm_drift.max()),
        "method_agreement": agreement,
    }
    _require(speed_dev <= SPEED_RTOL * b1, "constant_speed", f"max |v_K - b_1| = {speed_dev:.3e}, b_1 = {b1:.6g}")
    ode.assert_invariants()
    ctx.spectral.assert_invariants()
    _require(agreement <= AGREEMENT_TOL, "method_agreement", f"ode vs spectral max |dphi| = {agreement:.3e}")
    return metrics


def check_geometry(ctx: SystemContext) -> dict[str, float]:
    traj, chain = ctx.spectral, ctx.chain
    if chain.b1 <= 0:
        raise Skip("stationary operator")
    report = geometry_report(traj, chain)
    report.assert_invariants()
    t0, t1 = float(traj.times[0]), float(traj.times[-1])
    length = arc_length(traj, t0, t1)
    expected = chain.b1 * (t1 - t0)
    _require(abs(length - expected) <= ARC_RTOL * expected, "arc_length", f"{length:.12g} vs b_1 T = {expected:.12g}")
    residual0 = float(report.geodesic_residual_series[0])
    _require(
        abs(residual0 - chain.b1 * chain.b(2)) <= 1e-10 * max(1.0, chain.b1 * chain.b(2)),
        "geodesic_residual_t0",
        f"residual at t=0 is {residual0:.12g}, expected b_1 b_2 = {chain.b1 * chain.b(2):.12g}",
    )
    if report.geodesic_chain:
        worst = float(report.geodesic_residual_series.max())
        _require(worst <= 1e-10 * max(1.0, chain.b1**2), "geodesic", f"geodesic chain residual {worst:.3e}")
    return {
        "arc_length": length,
        "curvature": report.curvature_closed_form,
        "torsion": report.torsion_closed_form if report.torsion_defined else float("nan"),
        "min_bound_margin": float(report.bound_margin_series.min()),
    }


def check_hall(ctx: SystemContext) -> dict[str, float]:
    if ctx.chain.b1 <= 0:
        raise Skip("stationary operator")
    report = hall_check(ctx.spectral, ctx.chain)
    report.assert_invariants()
    return {
        "product_deviation": report.max_product_deviation,
        "classical_part_norm": report.classical_part_norm,
        "raw_vs_closed_gap": report.raw_vs_closed_gap,
    }


def check_bounds(ctx: SystemContext) -> dict[str, float]:
    report = bounds_report(ctx.spectral, ctx.chain)
    report.assert_invariants(ratio_ceiling=ctx.system.ratio_ceiling)
    tail = tail_envelope_check(ctx.spectral, ctx.chain)
    return {
        "tail_margin_min": report.tail_margin_min,
        "growth_rate_margin": report.growth_rate_margin,
        "max_complexity_ratio": float(report.complexity_ratio_series.max()),
        "decay_constant": tail.decay_constant,
        "v_op": report.v_op,
    }


def check_invariants(ctx: SystemContext) -> dict[str, float]:
    traj, chain = ctx.spectral, ctx.chain
    metrics: dict[str, float] = {}
    specs = [
        InvariantSpec(kind="polynomial", coefficients=[0.0, -1.0]),
        InvariantSpec(kind="identity"),
    ]
    if 1 < chain.dim_krylov <= CANONICAL_MAX_DIM:
        blocks = chain.dim_krylov // 2
        specs.append(InvariantSpec(kind="canonical", coefficients=[float(k + 1) for k in range(blocks)]))
    for spec in specs:
        invariant = build_commuting_invariant(chain, spec, traj)
        _require(invariant.commutes, f"commutator_{spec.kind}", f"||[A, I]|| = {invariant.commutator_norm:.3e}")
        invariant.assert_invariants()
        metrics[f"{spec.kind}_drift"] = invariant.drift

    diagonal = build_commuting_invariant(chain, InvariantSpec(kind="diagonal"), traj)
    complexity = krylov_complexity(traj).complexity
    gap = float(np.max(np.abs(diagonal.value_series - complexity)))
    _require(gap <= 1e-12 * max(1.0, complexity.max()), "complexity_operator", f"diag(n) vs C(t) gap {gap:.3e}")
    return metrics


def check_moments(ctx: SystemContext) -> dict[str, float]:
    metrics = {}
    for moment in moment_conservation(ctx.spectral, ctx.chain):
        moment.assert_invariants()
        metrics[f"order_{moment.order}"] = moment.drift
    return metrics


def check_chain(ctx: SystemContext) -> dict[str, float]:
    """Lanczos diagnostics, the d^2 - d + 1 cap, b_1^2 = <K_0|L^2|K_0>, linear scaling and model closure."""
    if ctx.liouvillian is None:
        raise Skip("no dense Hamiltonian")
    chain, L, system = ctx.chain, ctx.liouvillian, ctx.system
    chain.assert_invariants()
    d = L.dim
    _require(chain.dim_krylov <= d * d - d + 1, "dimension_cap", f"D={chain.dim_krylov} > {d * d - d + 1}")

    k0 = chain.basis[0]
    image = L.commutator(k0)
    second_moment = float(np.vdot(image, image).real)
    _require(
        abs(second_moment - chain.b1**2) <= 1e-10 * max(1.0, chain.b1**2),
        "second_moment",
        f"<K_0|L^2|K_0> = {second_moment:.12g} vs b_1^2 = {chain.b1**2:.12g}",
    )

    scaled = build_chain(Liouvillian(hamiltonian=L.hamiltonian.scaled(2.0)), system.seed, term_tol=ctx.term_tol)
    if scaled.dim_krylov == chain.dim_krylov:
        gap = float(np.max(np.abs(scaled.coefficients - 2.0 * chain.coefficients), initial=0.0))
        _require(gap <= 1e-10 * max(1.0, 2.0 * chain.coefficients.max(initial=0.0)), "scaling", f"gap {gap:.3e}")
    else:
        raise InvariantViolation("scaling", f"D changed from {chain.dim_krylov} to {scaled.dim_krylov} under H -> 2H")

    metrics = {"D": float(chain.dim_krylov), "ortho_residual": chain.ortho_residual,
               "tridiag_residual": chain.tridiag_residual}
    if system.model is not None:
        expected = np.array([model_coefficients(system.model, n) for n in range(1, chain.dim_krylov)])
        b_gap = float(np.max(np.abs(chain.coefficients - expected), initial=0.0))
        _require(b_gap <= CLOSURE_ATOL, "model_coefficients", f"pipeline b differs from the family rule by {b_gap:.3e}")
        adapter = get_adapter(system.model.family)
        closed = np.array([adapter.signed_amplitudes(system.model, t) for t in ctx.times])
        amp_gap = float(np.max(np.abs(closed - ctx.spectral.phi)))
        _require(amp_gap <= AGREEMENT_TOL, "model_amplitudes", f"closed form vs evolution gap {amp_gap:.3e}")
        metrics["amplitude_gap"] = amp_gap
    return metrics


def check_oracle(ctx: SystemContext) -> dict[str, float]:
    """Heisenberg evolution of the seed projected on the Krylov basis reproduces the spectral amplitudes."""
    if ctx.liouvillian is None or ctx.chain.basis is None:
        raise Skip("no dense Hamiltonian")
    chain, L = ctx.chain, ctx.liouvillian
    seed = ctx.system.seed.normalized()
    picks = np.unique(np.linspace(0, ctx.times.size - 1, ORACLE_SAMPLES).astype(int))
    phase = np.array([1.0, 1.0j, -1.0, -1.0j])[np.arange(chain.dim_krylov) % 4]
    worst = 0.0
    for idx in picks:
        evolved = heisenberg_oracle(L, seed, float(ctx.times[idx])).entries
        overlaps = np.array([np.vdot(k, evolved) for k in chain.basis])
        projected = phase * overlaps  # i^n (K_n|O(t)) = φ_n
        worst = max(worst, float(np.max(np.abs(projected - ctx.spectral.phi[idx]))))
    _require(worst <= AGREEMENT_TOL, "oracle_equivalence", f"max |projected - phi| = {worst:.3e}")
    return {"oracle_gap": worst}


CHECK_REGISTRY: dict[str, Callable[[SystemContext], dict[str, float]]] = {
    "speed":      check_speed,
    "geometry":   check_geometry,
    "hall":       check_hall,
    "bounds":     check_bounds,
    "invariants": check_invariants,
    "moments":    check_moments,
    "chain":      check_chain,
    "oracle":     check_oracle,
}


def run_check(name: str, ctx: SystemContext) -> CheckResult:
    """Run one registered check. Invariant failures are FAIL, anything else raised is ERROR."""
    system = ctx.system.name
    try:
        metrics = CHECK_REGISTRY[name](ctx)
    except Skip as skip:
        return CheckResult(check=name, system=system, status="SKIP", detail=str(skip))
    except InvariantViolation as exc:
        return CheckResult(check=name, system=system, status="FAIL", detail=str(exc))
    return CheckResult(check=name, system=system, status="PASS", metrics=metrics)
