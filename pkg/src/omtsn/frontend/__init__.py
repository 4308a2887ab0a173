"""Surface syntax, instance generators, verification and benchmarking."""

from .bench import COLUMNS, BenchConfig, config_matrix, run_bench, strip_timing
from .driver import Outcome, build_problem, solve_instance
from .instances import FAMILIES, Instance, Objective, from_script, generate_instances, instance_text, to_script
from .parser import (FrontendError, ParseError, Script, SortError, UnknownSymbolError, parse,
                     print_formula, print_script)
from .verify import Refuted, Verified, mutants, objective_values, verify

__all__ = ["COLUMNS", "BenchConfig", "config_matrix", "run_bench", "strip_timing", "Outcome",
           "build_problem", "solve_instance", "FAMILIES", "Instance", "Objective", "from_script",
           "generate_instances", "instance_text", "to_script", "FrontendError", "ParseError",
           "Script", "SortError", "UnknownSymbolError", "parse", "print_formula", "print_script",
           "Refuted", "Verified", "mutants", "objective_values", "verify"]
