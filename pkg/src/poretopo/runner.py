"""Batch drivers: the optimization loop and fixed-design analyses.

One optimization iteration runs: filter -> thickness map -> incremental
equilibrium solve -> pore metrics and objective at the end state -> adjoint
and total sensitivity -> volume constraint -> MMA update.  Histories are
recorded before each update, so the convergence CSV has exactly one row per
optimizer iteration.
"""
from __future__ import annotations

import logging
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import exports, metrics as pm, mma
from .config import RunConfig
from .errors import DesignMismatchError, NonConvergenceError
from .fem import EquilibriumState, FemModel
from .mesh import Mesh, build_mesh
from .sensitivity import DesignField, adjoint_solve, total_sensitivity, volume_constraint

_log = logging.getLogger(__name__)


@dataclass
class RunOutputs:
    mesh: Mesh
    zeta: np.ndarray
    zeta_phys: np.ndarray
    thickness: np.ndarray
    history: list[tuple] = field(default_factory=list)
    hd_rows: list[tuple] = field(default_factory=list)
    final_state: EquilibriumState | None = None
    final_objective: float = np.nan
    volume_ratio: float = np.nan
    constraint: float = np.nan
    mma_dual: float = np.nan

    def final_hd(self, pore_id: int = 0) -> float:
        rows = [r for r in self.hd_rows if r[2] == pore_id]
        return rows[-1][5]

    def initial_hd(self, pore_id: int = 0) -> float:
        rows = [r for r in self.hd_rows if r[2] == pore_id]
        return rows[0][5]


def _setup(config: RunConfig, threads: int):
    mesh = build_mesh(config.domain)
    model = FemModel(
        mesh,
        config.material,
        newton_tol_scale=config.solver.newton_tol_scale,
        max_newton_iter=config.solver.max_newton_iterations,
        max_cutbacks=config.solver.max_cutbacks,
        threads=threads,
    )
    design = DesignField(mesh, config.design)
    return mesh, model, design


def _hd_rows(mesh: Mesh, config: RunConfig, trajectory: list[EquilibriumState]):
    rows = []
    for step, state in enumerate(trajectory):
        stretch = state.load_factor * config.domain.stretch
        mets = pm.mesh_pore_metrics(mesh, state.u, check_intersection=False)
        for pore_id, m in enumerate(mets):
            rows.append((step, stretch, pore_id, m.area, m.perimeter,
                         m.hydraulic_diameter))
    return rows


def _dump_states(out_dir: Path, trajectory: list[EquilibriumState]) -> None:
    for step, state in enumerate(trajectory):
        exports.write_displacement_csv(out_dir / f"state_{step:03d}.csv", state.u)


def run_optimization(
    config: RunConfig,
    out_dir: str | Path | None = None,
    threads: int = 1,
) -> RunOutputs:
    """Full optimization run; persists outputs when out_dir is given."""
    if not config.domain.pores:
        raise DesignMismatchError("optimization requires at least one pore")
    mesh, model, design = _setup(config, threads)
    targets = np.asarray(config.targets)
    weights = np.asarray(config.weights)

    zeta = np.full(mesh.n_elements, config.initial_value)
    state = mma.MmaState.initial(zeta)
    opts = mma.MmaOptions(move=config.optimizer.move_limit)

    history = []
    f_init = None
    zeta_phys = design.filtered(zeta)
    thickness = design.thickness(zeta_phys)
    g = vratio = np.nan

    for it in range(1, config.optimizer.iterations + 1):
        zeta_phys = design.filtered(zeta)
        thickness = design.thickness(zeta_phys)
        try:
            trajectory = model.incremental_solve(
                thickness, config.solver.load_steps, record_all=False
            )
        except NonConvergenceError as exc:
            raise NonConvergenceError(
                f"iteration {it}: equilibrium solve failed ({exc}); "
                f"last good load factor {exc.last_good_load_factor:.4g}",
                exc.last_good_load_factor,
            ) from None
        final = trajectory[-1]

        mets = pm.mesh_pore_metrics(mesh, final.u)
        f0 = pm.objective(mets, targets, weights)
        df0_du = pm.objective_gradient(mesh, mets, targets, weights)
        g, vratio, dg = volume_constraint(mesh, design, zeta_phys)
        if not (np.isfinite(f0) and np.isfinite(g)):
            raise NonConvergenceError(
                f"iteration {it}: non-finite objective or constraint"
            )
        if f_init is None:
            f_init = f0 if f0 != 0 else 1.0
        history.append((it, f0, f0 / f_init, vratio))
        _log.info(
            "iter %3d  f0=%.6e  f0/f_init=%.4f  V/Vmax=%.4f", it, f0,
            f0 / f_init, vratio,
        )

        lam = adjoint_solve(mesh, final, df0_du)
        df0_dz = total_sensitivity(model, design, final, zeta_phys, lam, thickness)
        if not np.all(np.isfinite(df0_dz)):
            raise NonConvergenceError(f"iteration {it}: non-finite sensitivities")

        state.x = zeta
        state = mma.mma_update(state, df0_dz, g, dg, opts)
        zeta = state.x

    # Final design: evaluate once more for reporting and the HD curve.
    zeta_phys = design.filtered(zeta)
    thickness = design.thickness(zeta_phys)
    trajectory = model.incremental_solve(
        thickness, config.solver.load_steps, record_all=True
    )
    final = trajectory[-1]
    mets = pm.mesh_pore_metrics(mesh, final.u, check_intersection=True)
    f0 = pm.objective(mets, targets, weights)
    g, vratio, _ = volume_constraint(mesh, design, zeta_phys)

    outputs = RunOutputs(
        mesh=mesh,
        zeta=zeta,
        zeta_phys=zeta_phys,
        thickness=thickness,
        history=history,
        hd_rows=_hd_rows(mesh, config, trajectory),
        final_state=final,
        final_objective=f0,
        volume_ratio=vratio,
        constraint=g,
        mma_dual=state.dual,
    )
    if out_dir is not None:
        persist(outputs, config, Path(out_dir))
        if config.solver.dump_states:
            _dump_states(Path(out_dir), trajectory)
    return outputs


def run_analysis(
    config: RunConfig,
    zeta: np.ndarray,
    out_dir: str | Path | None = None,
    threads: int = 1,
) -> RunOutputs:
    """Incremental solve of a fixed design; reports the HD-vs-stretch curve."""
    mesh, model, design = _setup(config, threads)
    zeta = np.asarray(zeta, dtype=float)
    if zeta.shape != (mesh.n_elements,):
        raise DesignMismatchError(
            f"design field has {zeta.size} values but the mesh has "
            f"{mesh.n_elements} elements"
        )
    zeta_phys = design.filtered(zeta)
    thickness = design.thickness(zeta_phys)
    trajectory = model.incremental_solve(
        thickness, config.solver.load_steps, record_all=True
    )
    final = trajectory[-1]
    g, vratio, _ = volume_constraint(mesh, design, zeta_phys)
    outputs = RunOutputs(
        mesh=mesh,
        zeta=zeta,
        zeta_phys=zeta_phys,
        thickness=thickness,
        hd_rows=_hd_rows(mesh, config, trajectory),
        final_state=final,
        volume_ratio=vratio,
        constraint=g,
    )
    if config.domain.pores:
        mets = pm.mesh_pore_metrics(mesh, final.u, check_intersection=True)
        outputs.final_objective = pm.objective(
            mets, np.asarray(config.targets), np.asarray(config.weights)
        )
    if out_dir is not None:
        persist(outputs, config, Path(out_dir), with_convergence=False)
        if config.solver.dump_states:
            _dump_states(Path(out_dir), trajectory)
    return outputs


def run_flat_sheet(
    config: RunConfig,
    out_dir: str | Path | None = None,
    threads: int = 1,
) -> RunOutputs:
    """Uniform minimum-thickness sheet baseline (zeta = 0 everywhere)."""
    mesh = build_mesh(config.domain)
    return run_analysis(config, np.zeros(mesh.n_elements), out_dir, threads)


def persist(
    outputs: RunOutputs,
    config: RunConfig,
    out_dir: Path,
    with_convergence: bool = True,
) -> None:
    out_dir.mkdir(parents=True, exist_ok=True)
    if with_convergence:
        exports.write_convergence_csv(out_dir / "convergence.csv", outputs.history)
    exports.write_hd_csv(out_dir / "hd_curve.csv", outputs.hd_rows)
    exports.write_design_csv(
        out_dir / "design.csv", outputs.zeta, outputs.zeta_phys, outputs.thickness
    )
    exports.write_vtk(
        out_dir / "design.vtk",
        outputs.mesh,
        {
            "zeta_filtered": outputs.zeta_phys,
            "thickness_mm": outputs.thickness,
        },
    )
    if outputs.final_state is not None:
        exports.write_deformed_nodes_csv(
            out_dir / "deformed_nodes.csv", outputs.mesh, outputs.final_state.u
        )
