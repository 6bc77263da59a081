import asyncio
import logging
from typing import Any, Dict, List, Optional, TypedDict

from langgraph.graph import END, StateGraph

from .cellproblem import CellSolution, solve_cell_problem
from .convergence import build_convergence_report, build_epsilon_entry
from .geometry import build_reference_cell
from .kernels import KernelSet, build_builtin_kernels
from .models import ConvergenceReport, RunConfig
from .solvers import HomogenizedCoefficients, Trajectory, build_homogenized_coefficients, run_macro, run_micro
from .source import BoundarySource

logger = logging.getLogger(__name__)

COMPARED_SPECIES = 4


class ConvergenceState(TypedDict, total=False):
    """LangGraph state for one homogenization convergence study."""
    config: RunConfig
    threads: int
    kernels: KernelSet
    cell: CellSolution
    coeffs: HomogenizedCoefficients
    macro: Trajectory
    micro: List[Trajectory]
    report: ConvergenceReport
    current_step: str


class ConvergenceWorkflow:
    """Cell problem, homogenized run, micro runs over epsilon, then the report."""

    def __init__(self, threads: int = 1):
        self.threads = max(1, threads)
        self.workflow = self._build_workflow()

    def _build_workflow(self):
        """Build the linear LangGraph pipeline."""
        workflow = StateGraph(ConvergenceState)

        workflow.add_node("cell_problem", self._cell_problem_node)
        workflow.add_node("macro_run", self._macro_run_node)
        workflow.add_node("micro_runs", self._micro_runs_node)
        workflow.add_node("convergence_report", self._report_node)

        workflow.set_entry_point("cell_problem")
        workflow.add_edge("cell_problem", "macro_run")
        workflow.add_edge("macro_run", "micro_runs")
        workflow.add_edge("micro_runs", "convergence_report")
        workflow.add_edge("convergence_report", END)

        return workflow.compile()

    async def _cell_problem_node(self, state: ConvergenceState) -> Dict[str, Any]:
        config = state["config"]
        cell = build_reference_cell(config.dim, config.radius, config.m_cell)
        solution = await asyncio.to_thread(
            solve_cell_problem, cell, config.radius, config.tol, config.max_iter, state["threads"],
        )
        return {"cell": solution, "current_step": "cell_problem"}

    async def _macro_run_node(self, state: ConvergenceState) -> Dict[str, Any]:
        config = state["config"]
        coeffs = build_homogenized_coefficients(state["cell"], BoundarySource(config.psi))
        macro = await asyncio.to_thread(run_macro, config, coeffs, state["threads"], state["kernels"])
        return {"coeffs": coeffs, "macro": macro, "current_step": "macro_run"}

    async def _micro_runs_node(self, state: ConvergenceState) -> Dict[str, Any]:
        """Run the epsilon sequence concurrently, bounded by the thread budget."""
        config = state["config"]
        semaphore = asyncio.Semaphore(state["threads"])

        async def one(eps: float) -> Trajectory:
            async with semaphore:
                logger.info("Starting micro run eps=%g", eps)
                return await asyncio.to_thread(run_micro, config, eps, 1, state["kernels"])

        runs = await asyncio.gather(*(one(eps) for eps in config.epsilons))
        # Coarse to fine, independent of completion order
        runs = sorted(runs, key=lambda traj: -traj.epsilon)
        return {"micro": runs, "current_step": "micro_runs"}

    async def _report_node(self, state: ConvergenceState) -> Dict[str, Any]:
        config = state["config"]
        kernels = state["kernels"]
        cell = state["cell"]
        species = list(range(1, min(COMPARED_SPECIES, config.n_max) + 1))
        entries = [
            build_epsilon_entry(
                micro, state["macro"], kernels, species, config.U1, config.linf_headroom,
                cell=cell if config.corrector_error else None,
            )
            for micro in state["micro"]
        ]
        report = build_convergence_report(
            entries,
            species,
            dim=config.dim,
            radius=config.radius,
            m_cell=config.m_cell,
            n_max=config.n_max,
            T=config.T,
            theta=cell.theta,
            A=cell.A,
        )
        return {"report": report, "current_step": "convergence_report"}

    async def run(self, config: RunConfig, kernels: Optional[KernelSet] = None) -> ConvergenceState:
        """Execute the whole study and return the final state."""
        initial_state = ConvergenceState(
            config=config,
            threads=self.threads,
            kernels=kernels or build_builtin_kernels(config.kernel, config.n_max),
            current_step="start",
        )
        return await self.workflow.ainvoke(initial_state)

    def get_workflow_visualization(self) -> str:
        """Text representation of the pipeline."""
        return f"""
Homogenization convergence study (threads={self.threads})

        START
          ↓
    CELL PROBLEM         periodic correctors on Y*, effective A and theta
          ↓
    MACRO RUN            homogenized system on the unperforated domain
          ↓
    MICRO RUNS           perforated domain, one run per epsilon (concurrent)
          ↓
    CONVERGENCE REPORT   cell-averaged errors, duality, audits, L-inf monitor
          ↓
         END
        """
