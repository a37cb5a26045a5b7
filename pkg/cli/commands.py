import asyncio
from pathlib import Path

import numpy as np

from adapters.base import ModelSpec, load_model_spec
from adapters.registry import get_adapter, model_amplitudes, model_chain, model_coefficients, model_peak_prediction
from bounds.invariants import RATIO_CEILING, bounds_report
from bounds.light_cone import tail_envelope_check
from cli.run_config import RunConfig
from core.errors import InputError, KrylovError
from core.logger import logger
from exporters.files import config_hash, ensure_output_dir, write_csv, write_json
from geometry.hall import hall_check
from geometry.sphere import angular_steps, geometry_report
from krylov.dynamics import AmplitudeTrajectory, evolve_ode, evolve_spectral
from krylov.lanczos import LanczosChain, build_chain, chain_to_dict
from operators.hamiltonian import HermitianMatrix, load_hamiltonian, load_operator
from operators.liouvillian import Liouvillian
from worker.systems import VerifySystem, default_sweep, model_system
from worker.tasks import exit_code_for, run_checks, summarize


class _Run:
    """Per-command state: resolved config, output directory and its hash."""

    def __init__(self, config: RunConfig) -> None:
        self.config = config
        self.out = ensure_output_dir(config.out)
        # the output location does not change any result
        self.digest = config_hash(config.model_dump(mode="json", exclude={"out"}))

    def json(self, name: str, payload: dict) -> Path:
        path = write_json(self.out / name, payload, self.digest)
        logger.info(f"[cli] wrote {path}")
        return path

    def csv(self, name: str, header: list[str], columns: list[np.ndarray]) -> Path:
        path = write_csv(self.out / name, header, columns, self.digest)
        logger.info(f"[cli] wrote {path}")
        return path


def _model_spec(config: RunConfig) -> ModelSpec | None:
    return None if config.model is None else load_model_spec(config.model)


def _dense_inputs(config: RunConfig) -> tuple[HermitianMatrix, Liouvillian]:
    hamiltonian = load_hamiltonian(config.hamiltonian)
    return hamiltonian, Liouvillian(hamiltonian=hamiltonian)


def _resolve_chain(config: RunConfig, horizon: float) -> tuple[LanczosChain, dict]:
    """Chain from a Hamiltonian plus seed, or from a model family truncated for the horizon."""
    spec = _model_spec(config)
    if spec is not None:
        chain = model_chain(spec, horizon, config.tail_tol)
        source = {"model": spec.model_dump(exclude_none=True)}
        if get_adapter(spec.family).semi_infinite:
            source["truncation_levels"] = chain.dim_krylov
        return chain, source
    if config.hamiltonian is None:
        raise InputError("no input: pass --config with a 'hamiltonian' or a 'model' entry")
    if config.seed_operator is None:
        raise InputError("a Hamiltonian input needs a seed operator (seed_operator)")
    _, liouvillian = _dense_inputs(config)
    chain = build_chain(liouvillian, load_operator(config.seed_operator), term_tol=config.term_tol)
    return chain, {"hilbert_dim": liouvillian.dim}


def _trajectory(config: RunConfig) -> tuple[LanczosChain, dict, AmplitudeTrajectory]:
    times = config.time_grid()
    horizon = float(times[-1]) if times.size else config.t_max
    chain, source = _resolve_chain(config, horizon)
    return chain, source, evolve_spectral(chain, times)


def _phi_header(dim: int) -> list[str]:
    return ["t"] + [f"phi_{n}" for n in range(dim)]


def cmd_lanczos(config: RunConfig) -> int:
    run = _Run(config)
    chain, source = _resolve_chain(config, config.t_max)
    run.json("chain.json", {**chain_to_dict(chain, dump_basis=config.dump_basis), **source})
    logger.info(f"[lanczos] D={chain.dim_krylov} termination={chain.termination}")
    return 0


def cmd_evolve(config: RunConfig) -> int:
    run = _Run(config)
    chain, source, spectral = _trajectory(config)
    ode = evolve_ode(chain, spectral.times, rtol=config.rtol, atol=config.atol)
    speed = np.sqrt(np.sum(ode.dphi**2, axis=1))
    diagnostics = {
        **source,
        "D": chain.dim_krylov,
        "b1": chain.b1,
        "termination": chain.termination,
        "max_speed_deviation": float(np.max(np.abs(speed - chain.b1))),
        "norm_drift_ode": float(ode.norm_drift.max()),
        "norm_drift_spectral": float(spectral.norm_drift.max()),
        "method_agreement": float(np.max(np.abs(ode.phi - spectral.phi))),
        "flags": chain.flags,
    }
    run.csv("trajectory.csv", _phi_header(spectral.dim), [spectral.times, *spectral.phi.T])
    run.json("diagnostics.json", diagnostics)
    ode.assert_invariants()
    spectral.assert_invariants()
    return 0


def cmd_geometry(config: RunConfig) -> int:
    run = _Run(config)
    chain, source, traj = _trajectory(config)
    report = geometry_report(traj, chain)
    summary = {
        **source,
        "b1": chain.b1,
        "arc_length": report.arc_length,
        "curvature": report.curvature_closed_form,
        "torsion": report.torsion_closed_form,
        "geodesic_chain": report.geodesic_chain,
        "angular_steps": angular_steps(chain),
        "max_clip": report.max_clip,
        "min_return_margin": float(report.bound_margin_series.min(initial=np.inf)),
        "flags": chain.flags + report.flags,
    }
    hall = None
    if chain.b1 > 0:
        hall = hall_check(traj, chain)
        summary.update(
            hall_max_product_deviation=hall.max_product_deviation,
            hall_classical_part_norm=hall.classical_part_norm,
            hall_raw_vs_closed_gap=hall.raw_vs_closed_gap,
            hall_skipped_levels=hall.skipped_levels,
        )
    run.json("geometry.json", summary)
    run.csv(
        "geometry.csv",
        ["t", "speed", "curvature", "torsion", "acceleration_sq", "geodesic_residual"],
        [
            report.times,
            report.speed_series,
            report.curvature_series,
            report.torsion_series,
            report.acceleration_sq_series,
            report.geodesic_residual_series,
        ],
    )
    if report.bound_times.size:
        run.csv(
            "return_amplitude.csv",
            ["t", "theta", "b1_t", "margin"],
            [report.bound_times, report.theta_series, chain.b1 * report.bound_times, report.bound_margin_series],
        )
    if chain.b1 > 0:
        report.assert_invariants()
        hall.assert_invariants()
    return 0


def cmd_bounds(config: RunConfig) -> int:
    run = _Run(config)
    chain, source, traj = _trajectory(config)
    spec = _model_spec(config)
    front_source = get_adapter(spec.family).coefficient_rule(spec) if spec is not None else chain
    report = bounds_report(traj, chain, front_source)
    tail = tail_envelope_check(traj, chain)
    run.json("bounds.json", {
        **source,
        "v_op": report.v_op,
        "tail_margin_min": report.tail_margin_min,
        "growth_rate_margin": report.growth_rate_margin,
        "decay_constant": tail.decay_constant,
        "max_complexity_ratio": float(np.max(report.complexity_ratio_series, initial=0.0)),
        "ratio_flagged": bool(np.any(report.ratio_flagged)),
    })
    run.csv(
        "bounds.csv",
        ["t", "complexity", "complexity_spread", "complexity_rate", "growth_rate_margin",
         "front_geometric", "front_peak", "complexity_front_ratio"],
        [
            report.times,
            report.complexity_series,
            report.complexity_variance,
            report.complexity_rate,
            report.growth_rate_margin_series,
            report.front_geometric,
            report.front_peak,
            report.complexity_ratio_series,
        ],
    )
    if config.envelope_grid:
        t_grid, n_grid = np.meshgrid(tail.times, np.arange(traj.dim), indexing="ij")
        with np.errstate(divide="ignore"):
            log_phi = np.log(np.abs(traj.phi[traj.times > 0]))
        run.csv(
            "envelope.csv",
            ["t", "n", "log_abs_phi", "log_envelope", "margin"],
            [t_grid.ravel(), n_grid.ravel(), log_phi.ravel(), tail.log_envelope.ravel(), tail.margin.ravel()],
        )
    report.assert_invariants(ratio_ceiling=RATIO_CEILING if spec is not None else None)
    return 0


def cmd_model(config: RunConfig) -> int:
    run = _Run(config)
    spec = _model_spec(config)
    if spec is None:
        raise InputError("the model command needs a 'model' entry")
    times = config.time_grid()
    rows = [model_amplitudes(spec, float(t), config.tail_tol) for t in times]
    width = max(row.size for row in rows)
    table = np.zeros((times.size, width))
    for i, row in enumerate(rows):
        table[i, : row.size] = row

    t_last = float(times[-1])
    try:
        peak = model_peak_prediction(spec, t_last).model_dump()
    except InputError as exc:
        logger.info(f"[models] no peak prediction for {spec.family}: {exc}")
        peak = None
    levels = min(width, 64)
    run.json("model.json", {
        "model": spec.model_dump(exclude_none=True),
        "coefficients": [model_coefficients(spec, n) for n in range(1, levels + 1)],
        "levels": width,
        "peak_prediction": peak,
        "observed_peak": int(np.argmax(table[-1])),
        "t": t_last,
    })
    run.csv("amplitudes.csv", ["t"] + [f"abs_phi_{n}" for n in range(width)], [times, *table.T])
    return 0


def _verify_systems(config: RunConfig) -> list[VerifySystem]:
    spec = _model_spec(config)
    if spec is not None:
        return [model_system(spec.family, spec, config.t_max)]
    if config.hamiltonian is not None:
        if config.seed_operator is None:
            raise InputError("a Hamiltonian input needs a seed operator (seed_operator)")
        hamiltonian, _ = _dense_inputs(config)
        return [VerifySystem(
            name="input",
            hamiltonian=hamiltonian,
            seed=load_operator(config.seed_operator),
            horizon=config.t_max,
            ratio_ceiling=None,
        )]
    return default_sweep(config.random_systems, config.seed, config.t_max)


def cmd_verify(config: RunConfig) -> int:
    run = _Run(config)
    if not config.checks:
        logger.info("[verify] empty check list, nothing to do")
        run.json("verify.json", {"results": [], "summary": summarize([]), "exit_code": 0})
        return 0
    systems = _verify_systems(config)
    results = asyncio.run(run_checks(
        systems,
        config.checks,
        samples=config.samples,
        term_tol=config.term_tol,
        tail_tol=config.tail_tol,
        inject_bug=config.inject_bug,
    ))
    code = exit_code_for(results)
    run.json("verify.json", {
        "results": [r.model_dump(exclude={"timestamp"}) for r in results],
        "summary": summarize(results),
        "exit_code": code,
    })
    counts = summarize(results)
    logger.info(f"[verify] {counts['PASS']} passed, {counts['FAIL']} failed, "
                f"{counts['ERROR']} errored, {counts['SKIP']} skipped")
    return code


COMMANDS = {
    "lanczos":  cmd_lanczos,
    "evolve":   cmd_evolve,
    "geometry": cmd_geometry,
    "bounds":   cmd_bounds,
    "model":    cmd_model,
    "verify":   cmd_verify,
}


def run_command(name: str, config: RunConfig) -> int:
    command = COMMANDS.get(name)
    if command is None:
        raise KrylovError(f"unknown command '{name}'")
    return command(config)
