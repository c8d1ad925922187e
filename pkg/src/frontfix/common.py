from __future__ import annotations
import typing as T
import logging

import numpy as np


class InvalidParams(ValueError):
    pass


class OutOfRange(ValueError):
    pass


class ConfigError(ValueError):
    pass


class InvalidProbability(ValueError):
    pass


class SingularDenominator(ZeroDivisionError):
    """the Psi ODE right-hand side is too close to its singularity, use the series instead"""


class IntegrationFailure(RuntimeError):
    pass


class NonConvergence(RuntimeError):
    pass


class NonpositiveRho(ArithmeticError):
    pass


class NotDiagonallyDominant(ArithmeticError):
    pass


class NoExerciseRegion(LookupError):
    pass


def check_positive(name: str, value: float, *, strict: bool = True) -> float:
    value = float(value)
    if not np.isfinite(value):
        raise InvalidParams(f"{name} must be finite, got {value}")
    if strict and value <= 0:
        raise InvalidParams(f"{name} must be > 0, got {value}")
    if not strict and value < 0:
        raise InvalidParams(f"{name} must be >= 0, got {value}")

    return value


def check_count(name: str, value: int, minimum: int = 1) -> int:
    if isinstance(value, float) and not value.is_integer():
        raise InvalidParams(f"{name} must be an integer, got {value}")
    value = int(value)
    if value < minimum:
        raise InvalidParams(f"{name} must be >= {minimum}, got {value}")

    return value


def fmt(x: float) -> str:
    """shortest decimal text that round-trips a double (17 significant digits at most)"""
    s = repr(float(x))
    if s.endswith(".0"):
        s = s[:-2]
    return s


def check_monotone(values: np.ndarray, tol: float = 0.0, name: str = "values") -> int:
    """count adjacent pairs that decrease by more than tol"""
    values = np.asarray(values, dtype=float)
    bad = int(np.count_nonzero(np.diff(values) < -tol))
    if bad:
        logging.debug(f"{name}: {bad} decreasing adjacent pairs beyond {tol}")

    return bad


def as_vector(x: T.Any, name: str = "vector", minlen: int = 1) -> np.ndarray:
    v = np.asarray(x, dtype=float)
    if v.ndim != 1:
        raise ValueError(f"{name} must be 1-D, got shape {v.shape}")
    if v.size < minlen:
        raise ValueError(f"{name} needs at least {minlen} entries, got {v.size}")

    return v
