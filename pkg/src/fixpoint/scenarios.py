"""Scenario configs and the end-to-end runs behind the command line.

Config files are flat ``key = value`` text, one key per line, ``#`` starts
a comment.  Keys match the long CLI flags (``grid-n`` or ``grid_n``).
"""

from __future__ import annotations

import math
import os
import tempfile
from dataclasses import dataclass, field, fields, replace
from typing import Optional

import numpy as np

from . import expr
from .diagnostics import (
    ResidualChainReport,
    egoroff_split,
    indicator_densities,
    verify_residual_chain,
    zolezzi_check,
)
from .errors import CertificationError, InvalidArgument, PreconditionViolation
from .grid import NODE, GridFunction, MeasureGrid, discrete_lipschitz, make_uniform_grid
from .operators import (
    BoxSet,
    CertificateReport,
    certify_strong_nonexpansive,
    from_expression,
    pin_preserving_translate,
    translate_problem,
)
from .solver import (
    FIXED_POINT_FOUND,
    NOT_IN_SET,
    DampingSchedule,
    SolvePath,
    aitken_limit,
    approx_fixed_point_path,
    extract_pointwise_limit,
    picard_path,
    resolvent,
)

CSV_HEADER = "step,lambda,residual_sup,residual_l1,inner_iters"


def _default_seed() -> int:
    return int(os.environ.get("FIXPOINT_SEED", "0"))


@dataclass
class ScenarioConfig:
    domain: tuple = (0.0, 1.0)
    grid_n: int = 64
    grid_kind: str = "interior"
    operator: str = "cos(u)"
    lower: str = "-1"
    upper: str = "1"
    pins: tuple = ()
    schedule: str = "geometric"
    steps: int = 20
    inner_tol: float = 1e-10
    pointwise_tol: float = 1e-6
    samples: int = 1000
    seed: int = field(default_factory=_default_seed)
    out: Optional[str] = None
    plot: Optional[str] = None
    epsilon: float = 0.01
    tail: int = 5
    lam: float = 0.9

    def validate(self) -> "ScenarioConfig":
        a, b = self.domain
        if not a < b:
            raise InvalidArgument(f"domain must satisfy a < b, got {self.domain}")
        if self.grid_n < 2:
            raise InvalidArgument("grid-n must be at least 2")
        for name in ("inner_tol", "pointwise_tol", "epsilon"):
            if not getattr(self, name) > 0:
                raise InvalidArgument(f"{name.replace('_', '-')} must be positive")
        expr.parse(self.operator)
        for name in ("lower", "upper"):
            if expr.uses_variable(expr.parse(str(getattr(self, name))), "u"):
                raise InvalidArgument(f"{name} bound may depend on x only")
        return self


def parse_pin(text: str) -> tuple:
    idx, sep, val = text.partition("=")
    if not sep:
        raise InvalidArgument(f"pin must look like idx=value, got {text!r}")
    return int(idx), float(val)


_CONVERTERS = {
    "domain": lambda s: tuple(float(v) for v in s.split(",")),
    "grid_n": int,
    "steps": int,
    "samples": int,
    "seed": int,
    "tail": int,
    "inner_tol": float,
    "pointwise_tol": float,
    "epsilon": float,
    "lam": float,
    "lambda": float,
}


def coerce(key: str, value):
    key = key.strip().replace("-", "_")
    if key == "lambda":
        key = "lam"
    if key in ("pin", "pins"):
        if isinstance(value, str):
            value = [p for p in value.replace(";", ",").split(",") if p.strip()]
        return "pins", tuple(parse_pin(p) if isinstance(p, str) else tuple(p) for p in value)
    names = {f.name for f in fields(ScenarioConfig)}
    if key not in names:
        raise InvalidArgument(f"unknown config key {key!r}")
    if isinstance(value, str) and key in _CONVERTERS:
        value = _CONVERTERS[key](value)
    return key, value


def read_config(path: str) -> dict:
    """Parse a key=value config file into a dict of typed overrides."""
    out: dict = {}
    with open(path, encoding="utf-8") as fh:
        for lineno, raw in enumerate(fh, 1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            key, sep, value = line.partition("=")
            if not sep:
                raise InvalidArgument(f"{path}:{lineno}: expected key = value")
            key, value = coerce(key, value.strip())
            if key == "pins":
                out["pins"] = out.get("pins", ()) + value
            else:
                out[key] = value
    return out


def make_config(file: Optional[str] = None, **overrides) -> ScenarioConfig:
    """Defaults, then the config file, then explicit overrides (None skipped)."""
    values = read_config(file) if file else {}
    for k, v in overrides.items():
        if v is None:
            continue
        k, v = coerce(k, v)
        values[k] = v
    return ScenarioConfig(**values).validate()


def _bound_function(text, g: MeasureGrid) -> GridFunction:
    node = expr.parse(str(text))
    vals = np.broadcast_to(expr.evaluate(node, g.atoms, 0.0), g.atoms.shape)
    return GridFunction(g, vals)


def build_problem(config: ScenarioConfig):
    """(grid, operator, set) for a config."""
    g = make_uniform_grid(*config.domain, config.grid_n, config.grid_kind)
    T = from_expression(config.operator)
    K = BoxSet(_bound_function(config.lower, g), _bound_function(config.upper, g), config.pins)
    return g, T, K


def build_schedule(config: ScenarioConfig) -> DampingSchedule:
    spec = config.schedule
    if spec == "geometric":
        return DampingSchedule.geometric(config.steps)
    if spec == "harmonic":
        return DampingSchedule.harmonic(config.steps)
    if spec.startswith("list:"):
        return DampingSchedule.explicit(float(v) for v in spec[5:].split(","))
    raise InvalidArgument(f"unknown schedule {spec!r}")


# -- output ------------------------------------------------------------------


def fmt(v: float) -> str:
    return format(float(v), ".17g")


def atomic_write(path: str, text: str) -> None:
    """Write via a temp file in the target directory, then rename."""
    directory = os.path.dirname(os.path.abspath(path))
    os.makedirs(directory, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=directory, prefix=".tmp-", suffix=".part")
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def path_csv(path: SolvePath, first_step: int = 1) -> str:
    lines = [CSV_HEADER]
    for i, s in enumerate(path.steps):
        lines.append(
            ",".join(
                [str(i + first_step), fmt(s.lam), fmt(s.residual_sup), fmt(s.residual_l1), str(s.inner_iterations)]
            )
        )
    return "\n".join(lines) + "\n"


def columns_text(names, columns) -> str:
    lines = ["# " + " ".join(names)]
    for row in zip(*columns):
        lines.append(" ".join(fmt(v) for v in row))
    return "\n".join(lines) + "\n"


@dataclass
class RunArtifacts:
    status: str
    summary: str
    path: SolvePath
    csv_text: str
    csv_path: Optional[str] = None
    plot_path: Optional[str] = None
    limit: Optional[GridFunction] = None
    certificate: Optional[CertificateReport] = None
    chain: Optional[ResidualChainReport] = None
    final_residual: float = math.nan
    details: dict = field(default_factory=dict)


def _emit(artifacts: RunArtifacts, out: Optional[str], plot: Optional[str], plot_text: str):
    if out:
        atomic_write(out, artifacts.csv_text)
        artifacts.csv_path = out
    if plot:
        atomic_write(plot, plot_text)
        artifacts.plot_path = plot


# -- commands ----------------------------------------------------------------


def run_certify_command(config: ScenarioConfig) -> CertificateReport:
    g, T, K = build_problem(config)
    return certify_strong_nonexpansive(T, K, g, config.samples, config.seed)


def _prepare(config: ScenarioConfig):
    """Certify, then translate when 0 is not in K.  Returns the pieces the
    pipeline-style commands share."""
    g, T, K = build_problem(config)
    cert = certify_strong_nonexpansive(T, K, g, config.samples, config.seed)
    if not cert.passed:
        raise CertificationError(f"operator {T.description!r} refused: {cert}", cert)
    shift = g.zeros()
    Tw, Kw = T, K
    if not K.contains_zero():
        v = pin_preserving_translate(K)
        if v is None:
            raise PreconditionViolation(
                "the zero function is not in K and no pin-preserving translate of K "
                "contains it (a pin with nonzero value forbids u = 0), so the damped "
                "resolvent u = lam*T(u) is not a self-map of K"
            )
        Kw, Tw = translate_problem(K, T, v)
        shift = v
    return g, T, K, cert, Tw, Kw, shift


def run_pipeline_command(config: ScenarioConfig) -> RunArtifacts:
    """Certify, translate if needed, follow the damped path, extract and check
    the limit, and write the step CSV."""
    g, T, K, cert, Tw, Kw, shift = _prepare(config)
    schedule = build_schedule(config)
    path = approx_fixed_point_path(Tw, Kw, g, schedule, config.inner_tol, config.pointwise_tol)
    tail = min(config.tail, len(path))
    chain = None
    if path.steps:
        limit_w, osc = extract_pointwise_limit(path, g, tail)
        chain = verify_residual_chain(Tw, path, limit_w, g, config.epsilon, tail)
    else:
        osc = math.nan
    limit = path.limit + shift if path.limit is not None else None
    final = path.steps[-1].residual_sup if path.steps else math.nan
    summary = "\n".join(
        [
            f"operator: {T.description}",
            f"certificate: {cert}",
            f"translated by nearest-to-zero member: {'yes' if shift.values.any() else 'no'}",
            f"schedule: {schedule.tag}, {len(schedule)} steps",
            f"status: {path.status}" + (f" ({path.message})" if path.message else ""),
            f"final residual_sup: {fmt(final)}",
            f"tail oscillation (last {tail}): {fmt(osc)}",
            f"limit range: [{fmt(limit.values.min())}, {fmt(limit.values.max())}]" if limit else "limit: none",
            str(chain) if chain else "residual chain: not evaluated",
        ]
    )
    art = RunArtifacts(
        path.status, summary, path, path_csv(path), limit=limit, certificate=cert,
        chain=chain, final_residual=final, details={"oscillation": osc, "shift": shift},
    )
    plot_text = ""
    if config.plot and limit is not None:
        picks = sorted({0, len(path) // 2, len(path) - 1})
        cols = [g.atoms, limit.values] + [(path.steps[i].u + shift).values for i in picks]
        names = ["x", "limit"] + [f"u_{i + 1}" for i in picks]
        plot_text = columns_text(names, cols)
    _emit(art, config.out, config.plot, plot_text)
    return art


def run_solve_command(config: ScenarioConfig):
    """One damped resolvent solve at ``config.lam``; returns (result, artifacts text)."""
    g, T, K, cert, Tw, Kw, shift = _prepare(config)
    res = resolvent(Tw, config.lam, Kw, g, tol=config.inner_tol)
    sol = res.solution + shift
    text = "x,u\n" + "".join(f"{fmt(x)},{fmt(v)}\n" for x, v in zip(g.atoms, sol.values))
    if config.out:
        atomic_write(config.out, text)
    return res, sol, text


def _example41_problem(grid_n: int, kind: str = NODE):
    if kind != NODE:
        raise InvalidArgument(
            "the pinned set needs endpoint atoms for u(0)=0 and u(1)=1: use a node grid"
        )
    g = make_uniform_grid(0.0, 1.0, grid_n, NODE)
    K = BoxSet.box(g, 0.0, 1.0, pins=[(0, 0.0), (g.size - 1, 1.0)])
    T = from_expression("x*u")
    return g, T, K


def example41_limit(grid_n: int, picard_steps: int):
    """Picard path from u_0(x) = x and its Aitken-extrapolated pointwise limit."""
    g, T, K = _example41_problem(grid_n)
    path = picard_path(T, g.function(lambda x: x), picard_steps)
    return g, T, K, path, aitken_limit(path.iterates)


def run_example41(
    grid_n: int = 64,
    picard_steps: int = 200,
    out: Optional[str] = None,
    plot: Optional[str] = None,
    kind: str = NODE,
    samples: int = 1000,
    seed: int = 0,
    epsilon: float = 0.1,
) -> RunArtifacts:
    """The pinned set {u(0)=0, u(1)=1, 0<=u<=1} with T(u)(x) = x*u(x).

    T is pointwise nonexpansive on the set, yet has no continuous fixed
    point there.  The run certifies T, shows the damped resolvent cannot be
    set up, follows the raw Picard iterates x**(k+1) and measures how the
    grid limit (0 except at x = 1) loses equicontinuity under refinement.
    """
    g, T, K = _example41_problem(grid_n, kind)
    cert = certify_strong_nonexpansive(T, K, g, samples, seed)

    zero_in_set = K.contains_zero()
    translate = pin_preserving_translate(K)
    try:
        resolvent(T, 0.5, K, g)
        precondition = "resolvent precondition satisfied"
    except PreconditionViolation as exc:
        precondition = f"resolvent precondition fails: {exc}"
    if translate is None:
        precondition += "; no pin-preserving translate of K contains 0 (pin u(1)=1)"

    _, _, _, path, limit = example41_limit(grid_n, picard_steps)
    _, _, _, _, limit_fine = example41_limit(2 * grid_n, picard_steps)
    lip = discrete_lipschitz(limit)
    lip_fine = discrete_lipschitz(limit_fine)
    ratio = lip_fine / lip if lip > 0 else math.inf
    # an equicontinuous family keeps its Lipschitz constant under refinement
    equicontinuity_violated = ratio > 1.5
    in_discrete_set = K.contains(limit, 1e-9)
    status = NOT_IN_SET if equicontinuity_violated or not in_discrete_set else FIXED_POINT_FOUND
    path.status = status
    path.limit = limit
    chain = verify_residual_chain(T, path, limit, g, epsilon)
    gaps = np.array([s.residual_sup for s in path.steps])

    summary = "\n".join(
        [
            "pinned set K = {u(0)=0, u(1)=1, 0<=u<=1}, operator T(u)(x) = x*u(x)",
            f"certificate: {cert}",
            f"zero function in K: {zero_in_set}",
            precondition,
            f"Picard steps: {picard_steps}, final successive gap: {fmt(gaps[-1])}",
            f"limit at second-to-last atom: {fmt(limit.values[-2])}, at x=1: {fmt(limit.values[-1])}",
            f"discrete Lipschitz of limit: {fmt(lip)} (n={grid_n}), {fmt(lip_fine)} (n={2 * grid_n}), ratio {ratio:.4f}",
            f"equicontinuity violated: {equicontinuity_violated}",
            f"status: {status}",
            str(chain),
        ]
    )
    art = RunArtifacts(
        status, summary, path, path_csv(path, first_step=0), limit=limit, certificate=cert,
        chain=chain, final_residual=float(gaps[-1]),
        details={
            "zero_in_set": zero_in_set,
            "pin_preserving_translate": translate,
            "precondition": precondition,
            "gaps": gaps,
            "lipschitz": lip,
            "lipschitz_refined": lip_fine,
            "lipschitz_ratio": ratio,
            "equicontinuity_violated": equicontinuity_violated,
            "limit_in_discrete_set": in_discrete_set,
        },
    )
    picks = [k for k in (0, 10, 50, picard_steps) if k <= picard_steps]
    plot_text = columns_text(
        ["x"] + [f"u_{k}" for k in picks] + ["limit"],
        [g.atoms] + [path.steps[k].u.values for k in picks] + [limit.values],
    )
    _emit(art, out, plot, plot_text)
    return art


def run_egoroff_command(config: ScenarioConfig):
    """Pipeline, then the Egoroff split of its tail; CSV of per-atom deviations."""
    art = run_pipeline_command(replace(config, out=None, plot=None))
    g = make_uniform_grid(*config.domain, config.grid_n, config.grid_kind)
    tail = min(config.tail, len(art.path))
    limit, _ = extract_pointwise_limit(art.path, g, tail)
    report = egoroff_split(art.path.iterates, limit, g, config.epsilon, len(art.path) - tail)
    exc = set(report.exceptional_atoms)
    lines = ["atom,x,deviation,exceptional"]
    for i, (x, d) in enumerate(zip(g.atoms, report.deviation)):
        lines.append(f"{i},{fmt(x)},{fmt(d)},{int(i in exc)}")
    text = "\n".join(lines) + "\n"
    if config.out:
        atomic_write(config.out, text)
    return report, text


def run_zolezzi_command(config: ScenarioConfig, densities: int = 16, p_list=(1, 2)):
    """Pipeline, then pairing gaps / L^p distances of its iterates to the final one."""
    art = run_pipeline_command(replace(config, out=None, plot=None))
    g = make_uniform_grid(*config.domain, config.grid_n, config.grid_kind)
    iterates = art.path.iterates
    report = zolezzi_check(iterates, iterates[-1], g, indicator_densities(g, densities), p_list)
    head = "j,gap," + ",".join(f"L{p:g}" for p in p_list)
    lines = [head]
    for j in range(len(iterates)):
        lines.append(",".join([str(j + 1), fmt(report.gaps[j])] + [fmt(report.distances[p][j]) for p in p_list]))
    text = "\n".join(lines) + "\n"
    if config.out:
        atomic_write(config.out, text)
    return report, text
