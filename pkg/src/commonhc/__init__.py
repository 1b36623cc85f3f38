"""Common hypercyclic vectors for operator families: schedules, stage
geometry, polynomial chains, function spaces, certified constructions,
weighted translation and homothety checks, and an experiment harness."""

from .constructions import (Certificate, ConstructionBundle, Query, Refusal, build_holo_hyperbolic,
                            build_holo_parabolic, build_lp_hyperbolic, build_lp_parabolic, build_shift_vector,
                            certify, dumps_bundle, loads_bundle)
from .errors import (ConfigError, ConstructionError, DomainError, FitError, GeometryError, HCError, QuadratureError,
                     ScheduleError)
from .schedules import DENSITY, DESK, density_witness, gen_add_schedule, gen_mult_schedule

__version__ = "0.1.0"

__all__ = [
    "Certificate", "ConstructionBundle", "Query", "Refusal", "build_holo_hyperbolic", "build_holo_parabolic",
    "build_lp_hyperbolic", "build_lp_parabolic", "build_shift_vector", "certify", "dumps_bundle", "loads_bundle",
    "ConfigError", "ConstructionError", "DomainError", "FitError", "GeometryError", "HCError", "QuadratureError",
    "ScheduleError", "DENSITY", "DESK", "density_witness", "gen_add_schedule", "gen_mult_schedule",
]
