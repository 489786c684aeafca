"""Problem configuration files for the command line.

Configs are flat TOML documents; expressions are quoted strings in the
:mod:`bielecki.exprlang` grammar.  See ``README.md`` for the key reference.
"""

from __future__ import annotations

import sys
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib

from .exprlang import ExprError, Var, declared_variables, evaluate, parse
from .errors import BieleckiError
from .grid import Grid, Relation, relation_full, relation_volterra, trapezoid_measure, uniform_grid
from .renorm import Modulus, Weight, exponential_weight
from .solver import IntegralProblem, PresicProblem, Retardation, SolverConfig

__all__ = ["ConfigError", "ProblemConfig", "load_config", "parse_config"]

KINDS = ("fredholm", "volterra", "retarded", "presic", "cauchy")
WEIGHT_MODES = ("auto", "uniform", "exponential", "expression", "product")
_DEFAULT_RELATION = {"fredholm": "full", "volterra": "volterra", "retarded": "volterra", "cauchy": "volterra"}
_DEFAULT_WEIGHT = {"fredholm": "uniform", "volterra": "auto", "retarded": "auto", "presic": "uniform", "cauchy": "auto"}
_KNOWN_KEYS = {
    "kind", "relation", "domain", "m", "forcing", "kernel", "F", "lipschitz", "substitutions",
    "boundary", "weight", "weight_expr", "weight_rate", "lipschitz_factors", "tol", "max_iter",
    "margin", "interpolation", "initial_guess", "description",
}


class ConfigError(BieleckiError, ValueError):
    """Missing or malformed configuration entries (CLI exit code 3)."""


def _as_list(v):
    return list(v) if isinstance(v, (list, tuple)) else [v]


@dataclass
class ProblemConfig:
    kind: str | None
    domain: list
    relation: str | None = None
    m: int = 1
    forcing: list | None = None
    kernel: list | None = None
    F: list | None = None
    lipschitz: list | None = None
    substitutions: list = field(default_factory=list)
    boundary: list | None = None
    weight: str | None = None
    weight_expr: str | None = None
    weight_rate: str | None = None
    lipschitz_factors: list | None = None
    tol: float = 1e-10
    max_iter: int = 10_000
    margin: float = 1e-6
    interpolation: str = "multilinear"
    initial_guess: str = "forcing"
    description: str = ""

    @property
    def n(self) -> int:
        return len(self.domain)

    @property
    def relation_kind(self) -> str:
        if self.relation is not None:
            return self.relation
        if self.kind is None:
            raise ConfigError("either 'kind' or 'relation' must be given")
        if self.kind == "presic":
            return "full"
        return _DEFAULT_RELATION[self.kind]

    @property
    def weight_mode(self) -> str:
        return self.weight or _DEFAULT_WEIGHT.get(self.kind, "uniform")

    def solver_config(self) -> SolverConfig:
        try:
            return SolverConfig(
                tol=self.tol,
                max_iter=self.max_iter,
                margin=self.margin,
                interpolation=self.interpolation,
                initial_guess=self.initial_guess,
            )
        except ValueError as exc:
            raise ConfigError(str(exc)) from exc

    # building blocks ----------------------------------------------------

    def grid(self) -> Grid:
        return uniform_grid([(a, b) for a, b, _ in self.domain], [n for _, _, n in self.domain])

    def relation_for(self, grid: Grid) -> Relation:
        kind = self.relation_kind
        if kind == "full":
            return relation_full(grid)
        return relation_volterra(grid)

    def with_nodes(self, nodes) -> "ProblemConfig":
        nodes = list(nodes)
        if len(nodes) == 1 and self.n > 1:
            nodes = nodes * self.n
        if len(nodes) != self.n:
            raise ConfigError(f"--grid gives {len(nodes)} node counts for a {self.n}-D domain")
        cfg = ProblemConfig(**{**self.__dict__})
        cfg.domain = [[a, b, int(k)] for (a, b, _), k in zip(self.domain, nodes)]
        _check_domain(cfg.domain, cfg.kind)
        return cfg


def _check_domain(domain, kind):
    if not isinstance(domain, list) or not domain:
        raise ConfigError("'domain' must be a list of [lower, upper, nodes] triples")
    for k, axis in enumerate(domain):
        if not isinstance(axis, (list, tuple)) or len(axis) != 3:
            raise ConfigError(f"domain axis {k} must be [lower, upper, nodes]")
        a, b, n = axis
        if not (isinstance(n, int) and n >= 1):
            raise ConfigError(f"domain axis {k}: node count must be a positive integer")
        if kind is not None and kind != "presic" and n < 2:
            raise ConfigError(f"domain axis {k}: solves need at least 2 nodes per axis")
        if not float(a) < float(b):
            raise ConfigError(f"domain axis {k}: lower bound must be below upper bound")


def parse_config(text: str) -> ProblemConfig:
    try:
        data = tomllib.loads(text)
    except tomllib.TOMLDecodeError as exc:
        raise ConfigError(f"config is not valid TOML: {exc}") from exc
    unknown = set(data) - _KNOWN_KEYS
    if unknown:
        raise ConfigError(f"unknown config keys: {', '.join(sorted(unknown))}")
    kind = data.get("kind")
    if kind is not None and kind not in KINDS:
        raise ConfigError(f"kind must be one of {', '.join(KINDS)}")
    if "domain" not in data:
        raise ConfigError("missing required key 'domain'")
    domain = data["domain"]
    _check_domain(domain, kind)
    cfg = ProblemConfig(kind=kind, domain=[list(a) for a in domain])
    for key in ("relation", "weight", "weight_expr", "weight_rate", "interpolation", "initial_guess", "description"):
        if key in data:
            setattr(cfg, key, data[key])
    for key in ("forcing", "kernel", "F", "lipschitz", "boundary", "lipschitz_factors"):
        if key in data:
            setattr(cfg, key, [str(v) for v in _as_list(data[key])])
    if "substitutions" in data:
        cfg.substitutions = [[str(c) for c in _as_list(s)] for s in data["substitutions"]]
    for key, typ in (("m", int), ("max_iter", int), ("tol", float), ("margin", float)):
        if key in data:
            try:
                setattr(cfg, key, typ(data[key]))
            except (TypeError, ValueError) as exc:
                raise ConfigError(f"{key} must be a number") from exc
    if cfg.relation is not None and cfg.relation not in ("full", "volterra"):
        raise ConfigError("relation must be 'full' or 'volterra'")
    if cfg.weight is not None and cfg.weight not in WEIGHT_MODES:
        raise ConfigError(f"weight must be one of {', '.join(WEIGHT_MODES)}")
    _check_required(cfg)
    return cfg


def _check_required(cfg: ProblemConfig):
    need = {
        "fredholm": ("forcing", "kernel", "lipschitz"),
        "volterra": ("forcing", "kernel", "lipschitz"),
        "retarded": ("forcing", "kernel", "lipschitz", "substitutions"),
        "presic": ("F", "lipschitz", "substitutions"),
        "cauchy": ("F", "lipschitz", "boundary"),
    }.get(cfg.kind, ())
    for key in need:
        if not getattr(cfg, key):
            raise ConfigError(f"kind '{cfg.kind}' requires '{key}'")
    if cfg.kind == "cauchy" and cfg.forcing:
        raise ConfigError("cauchy problems take 'boundary', not 'forcing'")
    for key in ("forcing", "kernel", "F", "boundary"):
        v = getattr(cfg, key)
        if v is not None and len(v) != cfg.m:
            raise ConfigError(f"'{key}' needs {cfg.m} component expression(s), got {len(v)}")
    for k, sub in enumerate(cfg.substitutions):
        if len(sub) != cfg.n:
            raise ConfigError(f"substitution {k + 1} needs {cfg.n} coordinate expression(s)")
    if cfg.kind in ("retarded", "presic"):
        if len(cfg.substitutions) > 1 and cfg.m != 1:
            raise ConfigError("several substitutions are supported for m = 1 only")
        if len(cfg.lipschitz) != len(cfg.substitutions):
            raise ConfigError("give one lipschitz expression per substitution")
    elif cfg.lipschitz is not None and len(cfg.lipschitz) != 1:
        raise ConfigError("'lipschitz' must be a single expression")
    if cfg.weight_mode == "expression" and not cfg.weight_expr:
        raise ConfigError("weight = 'expression' requires 'weight_expr'")
    if cfg.weight_mode == "product" and (not cfg.lipschitz_factors or len(cfg.lipschitz_factors) != 2):
        raise ConfigError("weight = 'product' requires lipschitz_factors = [L1(t), L2(t)]")


def load_config(path) -> ProblemConfig:
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    return parse_config(text)


# expression compilation -------------------------------------------------


def _compile(text, names, what):
    try:
        return parse(text, names)
    except ExprError as exc:
        raise ConfigError(f"{what}: {exc}") from exc


def _variables(expr) -> set:
    out = set()
    stack = [expr]
    while stack:
        e = stack.pop()
        if isinstance(e, Var):
            out.add(e.name)
        for attr in ("operand", "left", "right"):
            if hasattr(e, attr):
                stack.append(getattr(e, attr))
        if hasattr(e, "args"):
            stack.extend(e.args)
    return out


def _bind(n, t=None, s=None, xs=None, x_names=None):
    ctx = {}
    if t is not None:
        for i in range(n):
            ctx[f"t{i + 1}"] = t[:, i]
        if n == 1:
            ctx["t"] = t[:, 0]
    if s is not None:
        for i in range(n):
            ctx[f"s{i + 1}"] = s[:, i]
        if n == 1:
            ctx["s"] = s[:, 0]
    if xs is not None:
        ctx.update(zip(x_names, xs))
        if len(x_names) == 1:
            ctx["x"] = xs[0]
    return ctx


def _evaluate_components(exprs, ctx, P, what):
    cols = []
    for e in exprs:
        try:
            v = evaluate(e, ctx)
        except ExprError as exc:
            raise ConfigError(f"{what}: {exc}") from exc
        cols.append(np.broadcast_to(np.asarray(v, dtype=float), (P,)))
    return np.column_stack(cols)


def _x_columns(xs, k, m):
    """Split kernel arguments into scalar columns named x1.."""
    if k > 1:
        return [a[:, 0] for a in xs]
    return [xs[0][:, c] for c in range(m)]


@dataclass
class CompiledProblem:
    config: ProblemConfig
    grid: Grid
    problem: object
    weight: object
    solver_config: SolverConfig


def _pointwise(exprs, grid, what):
    return _evaluate_components(exprs, _bind(grid.dimension, t=grid.coords), grid.size, what)


def _modulus(text, grid, what, n):
    expr = _compile(text, declared_variables(n, with_s=True), what)
    used = _variables(expr)
    t_names = {f"t{i}" for i in range(1, n + 1)} | {"t"}
    s_names = {f"s{i}" for i in range(1, n + 1)} | {"s"}
    uses_t, uses_s = bool(used & t_names), bool(used & s_names)
    coords = grid.coords
    if not uses_t and not uses_s:
        c = _evaluate_components([expr], {}, 1, what)[0, 0]
        if c < 0:
            raise ConfigError(f"{what} must be nonnegative")
        return Modulus.constant(c)
    if uses_s and not uses_t:
        vals = _evaluate_components([expr], _bind(n, s=coords), grid.size, what)[:, 0]
        _nonneg(vals, what)
        return Modulus.of_s(vals)
    if uses_t and not uses_s:
        vals = _evaluate_components([expr], _bind(n, t=coords), grid.size, what)[:, 0]
        _nonneg(vals, what)
        return Modulus.of_t(vals)

    def fn(t, s):
        return _evaluate_components([expr], _bind(n, t=t, s=s), t.shape[0], what)[:, 0]

    return Modulus.pairwise(fn)


def _nonneg(vals, what):
    if np.any(vals < 0):
        raise ConfigError(f"{what} must be nonnegative")


def _substitution_fn(sub, names, n, what, var):
    exprs = [_compile(c, names, what) for c in sub]

    def phi(points):
        ctx = _bind(n, t=points) if var == "t" else _bind(n, s=points)
        return _evaluate_components(exprs, ctx, points.shape[0], what)

    return phi


def _weight_for(cfg, grid, relation, measure, problem_modulus):
    mode = cfg.weight_mode
    if mode in ("auto", "uniform"):
        return mode
    if mode == "expression":
        expr = _compile(cfg.weight_expr, declared_variables(grid.dimension), "weight_expr")
        ell = _pointwise([expr], grid, "weight_expr")[:, 0]
        if np.any(ell <= 0):
            raise ConfigError("weight_expr must be positive on the grid")
        return Weight(grid, ell)
    if mode == "exponential":
        if grid.dimension != 1:
            raise ConfigError("weight = 'exponential' needs a 1-D domain")
        text = cfg.weight_rate or (cfg.lipschitz[0] if cfg.lipschitz else None)
        if text is None:
            raise ConfigError("weight = 'exponential' needs 'weight_rate'")
        expr = _compile(text, declared_variables(1, with_s=True), "weight_rate")
        coords = grid.coords
        rate = _evaluate_components([expr], _bind(1, t=coords, s=coords), grid.size, "weight_rate")[:, 0]
        _nonneg(rate, "weight_rate")
        return exponential_weight(grid, rate)
    raise ConfigError(f"weight mode {mode!r} is not available here")


def compile_config(cfg: ProblemConfig) -> CompiledProblem:
    """Turn a config into a solvable problem object plus weight choice."""
    if cfg.kind is None:
        raise ConfigError("this command needs a problem 'kind'")
    grid = cfg.grid()
    n, m = grid.dimension, cfg.m
    t_names = declared_variables(n)
    if cfg.kind == "cauchy":
        from .cauchy import CauchyProblem

        if cfg.relation not in (None, "volterra"):
            raise ConfigError("cauchy problems use the Volterra relation")
        F_exprs = [_compile(e, declared_variables(n, m, with_x=True), "F") for e in cfg.F]
        x_names = [f"x{c + 1}" for c in range(m)]
        L_vals = _pointwise([_compile(cfg.lipschitz[0], t_names, "lipschitz")], grid, "lipschitz")[:, 0]
        _nonneg(L_vals, "lipschitz")
        b_exprs = [_compile(e, t_names, "boundary") for e in cfg.boundary]

        def F(t, x):
            return _evaluate_components(F_exprs, _bind(n, t=t, xs=[x[:, c] for c in range(m)], x_names=x_names), t.shape[0], "F")

        def boundary(points):
            return _evaluate_components(b_exprs, _bind(n, t=points), points.shape[0], "boundary")

        try:
            problem = CauchyProblem(grid, F, L_vals, boundary, m=m)
        except (BieleckiError, ValueError) as exc:
            raise ConfigError(str(exc)) from exc
        return CompiledProblem(cfg, grid, problem, "auto", cfg.solver_config())

    k = len(cfg.substitutions)
    x_count = k if k > 1 else m
    x_names = [f"x{c + 1}" for c in range(x_count)]

    if cfg.kind == "presic":
        F_exprs = [_compile(e, declared_variables(n, m, with_x=True, x_count=x_count), "F") for e in cfg.F]
        phis = [_substitution_fn(s, t_names, n, f"substitution {i + 1}", "t") for i, s in enumerate(cfg.substitutions)]
        moduli = [
            _pointwise([_compile(L, t_names, f"lipschitz {i + 1}")], grid, f"lipschitz {i + 1}")[:, 0]
            for i, L in enumerate(cfg.lipschitz)
        ]
        for i, L in enumerate(moduli):
            _nonneg(L, f"lipschitz {i + 1}")

        def F(t, *xs):
            cols = _x_columns(xs, k, m)
            return _evaluate_components(F_exprs, _bind(n, t=t, xs=cols, x_names=x_names), t.shape[0], "F")

        relation = cfg.relation_for(grid) if cfg.relation is not None else None
        problem = PresicProblem(grid, F, phis, moduli, m=m, relation=relation)
        weight = cfg.weight_mode
        if weight == "auto":
            raise ConfigError("presic problems take weight 'uniform', 'expression' or 'exponential'")
        if weight not in ("uniform",):
            weight = _weight_for(cfg, grid, None, None, None)
        return CompiledProblem(cfg, grid, problem, weight, cfg.solver_config())

    measure = trapezoid_measure(grid)
    relation = cfg.relation_for(grid)
    forcing = _pointwise([_compile(e, t_names, "forcing") for e in cfg.forcing], grid, "forcing")
    kernel_names = declared_variables(n, m, with_s=True, with_x=True, x_count=x_count)
    K_exprs = [_compile(e, kernel_names, "kernel") for e in cfg.kernel]
    used = set().union(*(_variables(e) for e in K_exprs))
    uses_t = bool(used & ({f"t{i}" for i in range(1, n + 1)} | {"t"}))

    def kernel(t, s, *xs):
        cols = _x_columns(xs, max(k, 1), m)
        return _evaluate_components(K_exprs, _bind(n, t=t, s=s, xs=cols, x_names=x_names), s.shape[0], "kernel")

    retardations = ()
    lipschitz = 0.0
    if cfg.kind == "retarded":
        s_names = declared_variables(n, with_s=True) - t_names
        retardations = tuple(
            Retardation(
                _substitution_fn(sub, s_names, n, f"substitution {i + 1}", "s"),
                _modulus(L, grid, f"lipschitz {i + 1}", n),
            )
            for i, (sub, L) in enumerate(zip(cfg.substitutions, cfg.lipschitz))
        )
    else:
        if cfg.substitutions:
            raise ConfigError("substitutions are only used by kinds 'retarded' and 'presic'")
        lipschitz = _modulus(cfg.lipschitz[0], grid, "lipschitz", n)

    if cfg.weight_mode == "product":
        from .renorm import product_weight_f2

        if relation.kind != "full":
            raise ConfigError("weight = 'product' applies to the full (Fredholm) relation")
        L1, L2 = (_pointwise([_compile(e, t_names, "lipschitz_factors")], grid, "lipschitz_factors")[:, 0] for e in cfg.lipschitz_factors)
        try:
            construction = product_weight_f2(L1, L2, measure, margin=cfg.margin)
        except BieleckiError as exc:
            raise ConfigError(str(exc)) from exc
        lipschitz = construction.modulus
        weight = construction.weight
    else:
        weight = _weight_for(cfg, grid, relation, measure, lipschitz)

    problem = IntegralProblem(
        grid=grid,
        measure=measure,
        relation=relation,
        forcing=forcing,
        kernel=kernel,
        lipschitz=lipschitz,
        retardations=retardations,
        kernel_uses_t=uses_t,
    )
    return CompiledProblem(cfg, grid, problem, weight, cfg.solver_config())
