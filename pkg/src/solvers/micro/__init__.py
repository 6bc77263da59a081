from .solver import MicroSolver, build_micro_solver, domain_spec, init_state, run_micro

__all__ = ["MicroSolver", "build_micro_solver", "domain_spec", "init_state", "run_micro"]
