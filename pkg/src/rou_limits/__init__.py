"""Large deviations, most likely paths, loss rates and CLT variances for
Ornstein-Uhlenbeck processes reflected at 0 or at 0 and d, with a
counter-seeded Monte Carlo engine to check them."""

__version__ = "0.1.0"

from .model import (Boundary, DiscretePath, ModelParams, NumericalError, QueryParams,
                    ReflectedTriple, ValidationError, validate)
from .reflection import SkorokhodSolution, reflect_one_sided, reflect_two_sided
from .simulate import Scheme, SimConfig, simulate, simulate_batch, simulate_free, simulate_reflected
from .variational import (Regime, Variant, decay_rate, empirical_decay_rate, most_likely_path,
                          rate_functional, zeroth_order_path)
from .stationary import LossStatistics, lemma7_h, loss_statistics, stationary_density, weight_W
from .cumulant import CumulantCurve, cumulant_curve, loss_ld_rate, psi_of_theta, shoot_h_prime_at_d
from .estimate import CltReport, clt_check, qv_ergodic_check, tail_probability

__all__ = [
    "Boundary", "DiscretePath", "ModelParams", "NumericalError", "QueryParams",
    "ReflectedTriple", "ValidationError", "validate",
    "SkorokhodSolution", "reflect_one_sided", "reflect_two_sided",
    "Scheme", "SimConfig", "simulate", "simulate_batch", "simulate_free", "simulate_reflected",
    "Regime", "Variant", "decay_rate", "empirical_decay_rate", "most_likely_path",
    "rate_functional", "zeroth_order_path",
    "LossStatistics", "lemma7_h", "loss_statistics", "stationary_density", "weight_W",
    "CumulantCurve", "cumulant_curve", "loss_ld_rate", "psi_of_theta", "shoot_h_prime_at_d",
    "CltReport", "clt_check", "qv_ergodic_check", "tail_probability",
]
