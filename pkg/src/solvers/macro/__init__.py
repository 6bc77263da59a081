from .solver import HomogenizedCoefficients, MacroSolver, build_homogenized_coefficients, run_macro

__all__ = ["HomogenizedCoefficients", "MacroSolver", "build_homogenized_coefficients", "run_macro"]
