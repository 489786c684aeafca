"""Pinned worked examples with closed-form or series oracles."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable

import numpy as np

from .config import ProblemConfig, parse_config

__all__ = ["CatalogEntry", "CATALOG", "get_entry"]


@dataclass(frozen=True)
class CatalogEntry:
    name: str
    description: str
    config_text: str
    # oracle(grid, x, report) -> (passed, detail); x is None when no solution exists
    oracle: Callable
    expected_exit: int = 0

    def config(self) -> ProblemConfig:
        return parse_config(self.config_text)


def _max_error_vs(exact, tol, label):
    def oracle(grid, x, report):
        err = float(np.max(np.abs(x - exact(grid.coords))))
        return err <= tol, f"max error vs {label} = {err:.3e} (tol {tol:g})"

    return oracle


def _value_at_corner(value, tol, label):
    def oracle(grid, x, report):
        got = float(x[-1, 0])
        err = abs(got - value)
        return err <= tol, f"x at upper corner = {got:.10f}, {label} = {value:.10f}, error {err:.3e} (tol {tol:g})"

    return oracle


def _certificate_fails_with(q_expected, tol):
    def oracle(grid, x, report):
        q = report.certificate.q
        ok = x is None and not report.certificate.passed and abs(q - q_expected) <= tol
        return ok, f"certificate q = {q:.12g} (expected failure at q = {q_expected:g})"

    return oracle


BESSEL_11 = sum(1 / math.factorial(k) ** 2 for k in range(12))
PANTOGRAPH_1 = sum(2.0 ** (-k * (k - 1) / 2) / math.factorial(k) for k in range(20))

_ENTRIES = [
    CatalogEntry(
        "fredholm_separable",
        "x(t) = t + 1/2 int_0^1 t s x(s) ds; exact (6/5) t",
        """
kind = "fredholm"
domain = [[0.0, 1.0, 201]]
forcing = "t"
kernel = "t*s*x/2"
lipschitz = "t*s/2"
""",
        _max_error_vs(lambda c: 1.2 * c, 1e-4, "6t/5"),
    ),
    CatalogEntry(
        "fredholm_noncontractive",
        "kernel 3 x on the full relation with the uniform weight; certificate q = 3 fails",
        """
kind = "fredholm"
domain = [[0.0, 1.0, 201]]
forcing = "1"
kernel = "3*x"
lipschitz = "3"
weight = "uniform"
""",
        _certificate_fails_with(3.0, 1e-9),
        expected_exit=2,
    ),
    CatalogEntry(
        "fredholm_product",
        "x(t) = t + 5/2 int_0^1 t s x(s) ds with a product-modulus weight; exact 6t",
        """
kind = "fredholm"
domain = [[0.0, 1.0, 401]]
forcing = "t"
kernel = "2.5*t*s*x"
lipschitz = "2.5*t*s"
weight = "product"
lipschitz_factors = ["2.5*t", "t"]
""",
        _max_error_vs(lambda c: 6.0 * c, 1e-3, "6t"),
    ),
    CatalogEntry(
        "fredholm_system",
        "linear system x = f + int A x with A = diag(1/3, 1/2), f = (1, 1); exact (3/2, 2)",
        """
kind = "fredholm"
m = 2
domain = [[0.0, 1.0, 101]]
forcing = ["1", "1"]
kernel = ["x1/3", "x2/2"]
lipschitz = "0.5"
""",
        _max_error_vs(lambda c: np.array([1.5, 2.0]), 1e-9, "(3/2, 2)"),
    ),
    CatalogEntry(
        "volterra_exp",
        "x(t) = 1 + int_0^t x(s) ds; exact exp(t)",
        """
kind = "volterra"
domain = [[0.0, 1.0, 401]]
forcing = "1"
kernel = "x"
lipschitz = "1"
""",
        _max_error_vs(lambda c: np.exp(c), 5e-4, "exp(t)"),
    ),
    CatalogEntry(
        "volterra_renormed",
        "x(t) = 1 + int_0^t 3 x(s) ds under the weight exp(3t); exact exp(3t)",
        """
kind = "volterra"
domain = [[0.0, 1.0, 401]]
forcing = "1"
kernel = "3*x"
lipschitz = "3"
weight = "exponential"
weight_rate = "3"
""",
        _max_error_vs(lambda c: np.exp(3 * c), 2e-3, "exp(3t)"),
    ),
    CatalogEntry(
        "ode_cauchy",
        "x' = 3x, x(0) = 1 as a one-dimensional Cauchy problem; exact exp(3t)",
        """
kind = "cauchy"
domain = [[0.0, 1.0, 401]]
F = "3*x"
lipschitz = "3"
boundary = "1"
""",
        _max_error_vs(lambda c: np.exp(3 * c), 2e-3, "exp(3t)"),
    ),
    CatalogEntry(
        "cauchy_bessel",
        "d1 d2 x = x on [0,1]^2 with x = 1 on the axes; x(1,1) = sum 1/(k!)^2",
        """
kind = "cauchy"
domain = [[0.0, 1.0, 101], [0.0, 1.0, 101]]
F = "x"
lipschitz = "1"
boundary = "1"
""",
        _value_at_corner(BESSEL_11, 5e-3, "series"),
    ),
    CatalogEntry(
        "pantograph",
        "x(t) = 1 + int_0^t x(s/2) ds; x(1) = sum 2^(-k(k-1)/2)/k!",
        """
kind = "retarded"
domain = [[0.0, 1.0, 401]]
forcing = "1"
kernel = "x"
lipschitz = ["1"]
substitutions = [["s/2"]]
""",
        _value_at_corner(PANTOGRAPH_1, 2e-3, "series"),
    ),
    CatalogEntry(
        "presic_halving",
        "f(t) = t + f(t/2)/2; exact 4t/3",
        """
kind = "presic"
domain = [[0.0, 1.0, 401]]
F = "t + x/2"
lipschitz = ["0.5"]
substitutions = [["t/2"]]
""",
        _max_error_vs(lambda c: 4 * c / 3, 1e-4, "4t/3"),
    ),
    CatalogEntry(
        "presic_two_subs",
        "f(t) = t + f(t/2)/4 + f(t/3)/4; exact 24t/19",
        """
kind = "presic"
domain = [[0.0, 1.0, 401]]
F = "t + x1/4 + x2/4"
lipschitz = ["0.25", "0.25"]
substitutions = [["t/2"], ["t/3"]]
""",
        _max_error_vs(lambda c: 24 * c / 19, 1e-9, "24t/19"),
    ),
]

CATALOG = {e.name: e for e in _ENTRIES}


def get_entry(name: str) -> CatalogEntry:
    try:
        return CATALOG[name]
    except KeyError:
        raise KeyError(name) from None
