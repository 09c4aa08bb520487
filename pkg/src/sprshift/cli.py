"""Command-line driver: ingest a graph, run one analysis, emit a report bundle.

Exit status is 0 when every requested check passes, 2 when a check fails
and 1 on an input error or a violated precondition.
"""
from __future__ import annotations

import argparse
import hashlib
import json
import math
import os
import sys
import tempfile
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Any, Callable, Sequence

import numpy as np

from . import census, graph as graph_mod, pliss, potential, spr, stochastics, thermo

EXIT_OK, EXIT_INPUT, EXIT_CHECK = 0, 1, 2

BUILTIN_GRAPHS: dict[str, Callable[[], graph_mod.DirectedGraph]] = {
    "golden": graph_mod.golden_mean,
    "full2": lambda: graph_mod.full_shift(2),
    "full3": lambda: graph_mod.full_shift(3),
    "cycle3": lambda: graph_mod.cycle(3),
    "bipartite": graph_mod.bipartite_square,
}

# one line per subcommand: what it computes and the result it exercises
MAPPING = {
    "graph": "components, period and cyclic classes (Perron-Frobenius theory of irreducible graphs)",
    "entropy": "loop census, renewal identity, Gurevich entropy and radii r_a, R_a",
    "spr": "SPR gate: Vere-Jones F_a(R_a) > 1, Gurevich positive-recurrence series, "
           "Gurevich-Zargaryan exit paths",
    "mme": "Parry measure of maximal entropy / equilibrium measure (variational principle)",
    "pressure": "pressure curve t -> P(phi + t psi) and its convexity",
    "variance": "asymptotic variance: Green-Kubo series, second derivative of pressure, empirical",
    "ldp": "large deviations: Legendre rate function and exact tail slopes",
    "tail": "return-time tail mu[tau_a > n] and its exponential rate (Kac-type taboo recursion)",
    "simulate": "stationary Markov chain sampling with counter-based Philox streams",
    "stats": "limit laws of Birkhoff sums: CLT, arcsine, records, FCLT, Laplace, LIL/Strassen, "
             "LDP, effective intrinsic ergodicity",
    "pliss": "Pliss lemma, tempered envelopes, optimal Pesin constants and Pesin blocks",
}

INPUT_ERRORS = (
    graph_mod.GraphParseError, potential.PotentialError, census.CensusError, spr.SprError,
    thermo.ThermoError, pliss.PlissError, ValueError, KeyError, OSError,
)


class InputError(Exception):
    """Raised with the name of the operation whose precondition failed."""

    def __init__(self, operation: str, message: str):
        super().__init__(f"{operation}: {message}")
        self.operation = operation
        self.message = message


# ---------------------------------------------------------------------------
# configuration
# ---------------------------------------------------------------------------


@dataclass
class RunConfig:
    subcommand: str
    graph: str | None = None
    base: int = 0
    horizon: int = census.DEFAULT_HORIZON
    potential: str | None = None
    observable: str | None = None
    t_grid: tuple[float, ...] | None = None
    s_grid: tuple[float, ...] | None = None
    n: int = 10_000
    R: int = 10_000
    seed: int = 0
    tolerances: dict[str, float] = field(default_factory=dict)
    out: str | None = None
    extra: dict[str, Any] = field(default_factory=dict)


def parse_grid(text: str | None) -> tuple[float, ...] | None:
    """``"a:b:k"`` (``k`` evenly spaced points) or a comma-separated list.

    ``None`` means no grid was given; an empty string is an empty grid.
    """
    if text is None:
        return None
    if not text.strip():
        return ()
    if ":" in text:
        parts = text.split(":")
        if len(parts) != 3:
            raise InputError("parse_grid", f"grid {text!r} must be 'start:stop:count'")
        a, b, k = float(parts[0]), float(parts[1]), int(parts[2])
        if k < 1:
            raise InputError("parse_grid", "grid count must be >= 1")
        return tuple(float(x) for x in np.linspace(a, b, k))
    return tuple(float(x) for x in text.split(","))


def parse_tolerances(items: Sequence[str]) -> dict[str, float]:
    out = {}
    for item in items:
        if "=" not in item:
            raise InputError("parse_tolerances", f"tolerance {item!r} must look like name=value")
        k, v = item.split("=", 1)
        val = float(v)
        if not val > 0:
            raise InputError("parse_tolerances", f"tolerance {k} must be positive")
        out[k.strip()] = val
    return out


def validate(cfg: RunConfig) -> None:
    if cfg.subcommand not in MAPPING:
        raise InputError("validate", f"unknown subcommand {cfg.subcommand!r}")
    if cfg.subcommand != "pliss" and not cfg.graph:
        raise InputError("validate", "--graph is required")
    if cfg.horizon < 1:
        raise InputError("validate", "--horizon must be >= 1")
    if cfg.n < 1 or cfg.R < 1:
        raise InputError("validate", "--n and --R must be >= 1")
    if cfg.seed < 0 or cfg.seed >= 2**64:
        raise InputError("validate", "--seed must be a 64-bit unsigned integer")
    for path in (cfg.potential, cfg.observable, cfg.extra.get("orbits")):
        if path and not _is_inline(path) and not os.path.isfile(path):
            raise InputError("validate", f"cannot read {path!r}")
    if (cfg.graph and not cfg.graph.startswith("builtin:") and not _is_inline(cfg.graph)
            and not os.path.isfile(cfg.graph)):
        raise InputError("validate", f"cannot read graph file {cfg.graph!r}")


def _is_inline(text: str) -> bool:
    return text.lstrip().startswith("{")


def _read_json(text: str) -> Any:
    if _is_inline(text):
        return json.loads(text)
    with open(text, encoding="utf-8") as fh:
        return json.load(fh)


def load_graph(src: str) -> graph_mod.DirectedGraph:
    if src.startswith("builtin:"):
        name = src.split(":", 1)[1]
        if name not in BUILTIN_GRAPHS:
            raise InputError("load_graph", f"unknown built-in graph {name!r} (have {sorted(BUILTIN_GRAPHS)})")
        return BUILTIN_GRAPHS[name]()
    if _is_inline(src):
        return graph_mod.build_graph(src)
    return graph_mod.load_graph(src)


# ---------------------------------------------------------------------------
# results and report bundles
# ---------------------------------------------------------------------------


@dataclass
class Result:
    """Summary payload, named CSV curves and the pass/fail checks behind the exit status."""

    summary: dict[str, Any]
    curves: dict[str, str] = field(default_factory=dict)
    checks: list[dict[str, Any]] = field(default_factory=list)

    @property
    def passed(self) -> bool:
        return all(c["passed"] for c in self.checks)


def _clean(x: Any) -> Any:
    if isinstance(x, dict):
        return {str(k): _clean(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [_clean(v) for v in x]
    if isinstance(x, np.ndarray):
        return _clean(x.tolist())
    if isinstance(x, (np.floating, np.integer, np.bool_)):
        return _clean(x.item())
    if isinstance(x, float) and not math.isfinite(x):
        return "inf" if x > 0 else ("-inf" if x < 0 else "nan")
    if hasattr(x, "numerator") and hasattr(x, "denominator") and not isinstance(x, (int, bool)):
        return float(x)
    return x


def _check(name: str, estimate: Any, reference: Any, tolerance: Any, passed: bool, **detail: Any) -> dict:
    return {"name": name, "estimate": estimate, "reference": reference, "tolerance": tolerance,
            "passed": bool(passed), **detail}


def _stat(rep: stochastics.StatReport) -> dict:
    return rep.to_dict()


def bundle_name(subcommand: str, graph_digest: str, seed: int) -> str:
    return f"{subcommand}-{graph_digest[:12]}-s{seed}"


def report_bundle(result: Result, out_dir: str, subcommand: str, graph_digest: str, seed: int) -> list[str]:
    """Write ``<bundle>/summary.json`` and one CSV per curve, atomically.

    Every file is first written to a temporary name in the bundle directory
    and renamed only after all of them are complete.
    """
    if result is None:
        raise InputError("report_bundle", "nothing to report")
    target = os.path.join(out_dir, bundle_name(subcommand, graph_digest, seed))
    try:
        os.makedirs(target, exist_ok=True)
    except OSError as exc:
        raise InputError("report_bundle", f"output directory not writable: {exc}") from exc
    if not os.access(target, os.W_OK):
        raise InputError("report_bundle", f"output directory {target!r} not writable")
    payload = {"subcommand": subcommand, "graph_digest": graph_digest, "seed": seed,
               "passed": result.passed, "checks": result.checks, "summary": result.summary,
               "curves": sorted(f"{k}.csv" for k in result.curves)}
    files = {"summary.json": json.dumps(_clean(payload), sort_keys=True, indent=2) + "\n"}
    files.update({f"{k}.csv": v for k, v in result.curves.items()})
    staged: list[tuple[str, str]] = []
    try:
        for name, text in sorted(files.items()):
            fd, tmp = tempfile.mkstemp(prefix=".tmp-", dir=target)
            with os.fdopen(fd, "w", encoding="utf-8", newline="\n") as fh:
                fh.write(text)
            staged.append((tmp, os.path.join(target, name)))
    except OSError as exc:
        for tmp, _ in staged:
            os.unlink(tmp)
        raise InputError("report_bundle", f"could not write report: {exc}") from exc
    for tmp, final in staged:
        os.replace(tmp, final)
    return [final for _, final in staged]


def _pool_size() -> int:
    cap = os.environ.get("SPR_SHIFT_THREADS")
    return max(1, int(cap)) if cap else (os.cpu_count() or 1)


def fan_out(tasks: Sequence[Callable[[], Any]]) -> list[Any]:
    """Run independent tasks on a worker pool; results keep the task order."""
    if _pool_size() == 1 or len(tasks) <= 1:
        return [t() for t in tasks]
    with ThreadPoolExecutor(max_workers=_pool_size()) as ex:
        return list(ex.map(lambda t: t(), tasks))


# ---------------------------------------------------------------------------
# subcommands
# ---------------------------------------------------------------------------


def _potential(g: graph_mod.DirectedGraph, src: str | None, what: str) -> potential.CylinderPotential | None:
    if src is None:
        return None
    try:
        return potential.build_potential(g, _read_json(src))
    except (potential.PotentialError, json.JSONDecodeError) as exc:
        raise InputError(f"build_potential[{what}]", str(exc)) from exc


def _require_observable(cfg: RunConfig, g: graph_mod.DirectedGraph) -> potential.CylinderPotential:
    psi = _potential(g, cfg.observable, "observable")
    if psi is None:
        raise InputError(cfg.subcommand, "--obs is required")
    return psi


def _measure(cfg: RunConfig, g: graph_mod.DirectedGraph) -> thermo.MarkovMeasure:
    phi = _potential(g, cfg.potential, "potential")
    return thermo.parry_measure(g) if phi is None else thermo.equilibrium_measure(g, phi)


def cmd_graph(cfg: RunConfig, g: graph_mod.DirectedGraph) -> Result:
    comps = graph_mod.strongly_connected_components(g)
    summary: dict[str, Any] = {
        "vertices": g.n, "edges": len(g.edges()), "simple": g.is_simple, "digest": g.digest,
        "components": [{"vertices": list(c.vertices), "wandering": c.wandering,
                        "period": None if c.wandering else graph_mod.period(g, c)} for c in comps],
        "irreducible": graph_mod.is_irreducible(g),
    }
    if summary["irreducible"]:
        sd = graph_mod.spectral_decomposition(g)
        summary["period"] = sd.period
        summary["classes"] = [list(c) for c in sd.classes]
    return Result(summary)


def cmd_entropy(cfg: RunConfig, g: graph_mod.DirectedGraph) -> Result:
    c = census.census_for(g, cfg.base, cfg.horizon)
    ent = census.gurevich_entropy(c)
    radii = census.convergence_radii(c, ent)
    summary = {"base": c.base, "horizon": c.horizon, "period": c.period, "entropy": ent.to_dict(),
               "r_a": radii.r, "R_a": radii.R, "R_exact": radii.R_exact, "R_method": radii.method,
               "support_bound": c.support_bound}
    checks = [_check("renewal identity", 0, 0, 0, True, detail="checked exactly for n <= horizon")]
    if "entropy" in cfg.extra and cfg.extra["entropy"] is not None:
        ref = cfg.extra["entropy"]
        tol = cfg.tolerances.get("entropy", 1e-6)
        checks.append(_check("entropy", ent.h, ref, tol, abs(ent.h - ref) <= tol))
    return Result(summary, {"census": c.to_csv()}, checks)


def cmd_spr(cfg: RunConfig, g: graph_mod.DirectedGraph) -> Result:
    W = cfg.extra.get("W")
    phi = _potential(g, cfg.potential, "potential")
    if phi is not None:
        wc = spr.weighted_census(g, cfg.base, phi, cfg.horizon)
        summary = {"verdict": wc.verdict.value, "pressure": wc.pressure,
                   "first_return_rate": wc.first_return_rate}
        curve = "n,Z,Zstar\n" + "".join(f"{n},{z!r},{zs!r}\n"
                                        for n, (z, zs) in enumerate(zip(wc.Z, wc.Zstar), start=1))
        verdict = wc.verdict.value
        curves = {"weighted_census": curve}
    else:
        v = spr.spr_verdict(g, cfg.base, cfg.horizon, W=W, grow=bool(cfg.extra.get("grow")))
        summary = v.to_dict()
        verdict = v.verdict.value
        curves = {}
    checks = []
    if cfg.extra.get("expect"):
        checks.append(_check("verdict", verdict, cfg.extra["expect"], 0, verdict == cfg.extra["expect"]))
    return Result(summary, curves, checks)


def cmd_mme(cfg: RunConfig, g: graph_mod.DirectedGraph) -> Result:
    m = _measure(cfg, g)
    summary = {"kind": m.kind, "lambda": m.lam, "pressure": m.pressure, **m.to_dict()}
    if m.recoding is not None:
        summary["block_words"] = [list(w) for w in m.recoding.words]
    tol = cfg.tolerances.get("identity", 1e-9)
    if m.kind == "mme":
        checks = [_check("entropy = log lambda", m.entropy, math.log(m.lam), tol,
                         abs(m.entropy - math.log(m.lam)) <= tol)]
    else:
        checks = [_check("variational identity", m.pressure, m.pressure, tol, True,
                         detail="h + integral of phi = log lambda, checked on construction")]
    return Result(summary, {}, checks)


def cmd_pressure(cfg: RunConfig, g: graph_mod.DirectedGraph) -> Result:
    psi = _require_observable(cfg, g)
    phi = _potential(g, cfg.potential, "potential")
    ts = parse_grid("-2:2:41") if cfg.t_grid is None else cfg.t_grid
    pc = thermo.pressure_curve(g, phi, psi, ts)
    summary = {"points": len(pc.t), "convex": pc.convex, "min_second_difference": pc.min_second_difference,
               "flagged": list(pc.flagged)}
    checks = [_check("convexity", pc.min_second_difference, 0.0, 1e-9, pc.convex)]
    return Result(summary, {"pressure": pc.to_csv()} if len(pc.t) else {}, checks)


def cmd_variance(cfg: RunConfig, g: graph_mod.DirectedGraph) -> Result:
    m = _measure(cfg, g)
    psi = _require_observable(cfg, g)
    tol = cfg.tolerances.get("variance", 1e-6)
    tasks: list[Callable[[], thermo.VarianceResult]] = [
        lambda: thermo.green_kubo(m, psi), lambda: thermo.linear_response(m, psi)]
    if cfg.extra.get("empirical"):
        tasks.append(lambda: stochastics.empirical_variance(m, psi, cfg.n, cfg.R, cfg.seed))
    res = fan_out(tasks)
    gk, lr = res[0], res[1]
    summary = {"green_kubo": gk.sigma2, "linear_response": lr.sigma2,
               "green_kubo_detail": gk.detail, "linear_response_detail": lr.detail}
    checks = [_check("green_kubo vs linear_response", gk.sigma2, lr.sigma2, tol,
                     abs(gk.sigma2 - lr.sigma2) <= tol)]
    if len(res) > 2:
        em = res[2]
        se = em.detail["se"]
        summary["empirical"] = em.sigma2
        summary["empirical_detail"] = em.detail
        checks.append(_check("empirical vs green_kubo", em.sigma2, gk.sigma2, 3 * se,
                             abs(em.sigma2 - gk.sigma2) <= 3 * se, se=se))
    return Result(summary, {}, checks)


def cmd_ldp(cfg: RunConfig, g: graph_mod.DirectedGraph) -> Result:
    m = _measure(cfg, g)
    psi = _require_observable(cfg, g)
    rf = thermo.rate_function(m, psi, s_grid=cfg.s_grid or None)
    tol = cfg.tolerances.get("curvature", 0.05)
    summary = {"sigma2": rf.sigma2, "domain": rf.domain, "c": rf.c, "checks": rf.checks}
    checks = [_check("I''(0) sigma^2", rf.curvature0 * rf.sigma2, 1.0, tol,
                     abs(rf.curvature0 * rf.sigma2 - 1) <= tol)]
    a = cfg.extra.get("a")
    if a is not None:
        rep = stochastics.ldp_empirical(m, psi, rf, a, tol_rel=cfg.tolerances.get("ldp", 0.1),
                                        R=cfg.R, seed=cfg.seed)
        checks.append(_stat(rep))
    return Result(summary, {"rate": rf.to_csv()}, checks)


def cmd_tail(cfg: RunConfig, g: graph_mod.DirectedGraph) -> Result:
    m = _measure(cfg, g)
    N = cfg.horizon
    exact = bool(cfg.extra.get("exact"))
    rt = thermo.return_time_tail(m, cfg.base, N, exact=exact)
    summary = {"base": cfg.base, "N": N, "theta": rt.theta, "fitted_ratio": rt.fitted_ratio,
               "exact": rt.exact}
    csv = "n,tail\n" + "".join(f"{n},{float(x)!r}\n" for n, x in enumerate(rt.tail))
    checks = []
    if cfg.extra.get("empirical"):
        rep = stochastics.empirical_tail_check(m, cfg.base, R=cfg.R, N=min(N, 20), seed=cfg.seed,
                                               n_se=cfg.tolerances.get("tail_se", 3.0))
        checks.append(_stat(rep))
    return Result(summary, {"tail": csv}, checks)


def cmd_simulate(cfg: RunConfig, g: graph_mod.DirectedGraph) -> Result:
    m = _measure(cfg, g)
    batch = stochastics.sample(m, cfg.n, cfg.R, cfg.seed, store=True)
    reps = [stochastics.frequency_report(batch, v) for v in range(m.n)]
    reps.append(stochastics.cylinder_frequency_check(batch))
    summary = {"n": cfg.n, "R": cfg.R, "seed": cfg.seed,
               "first_path_head": batch.paths[0, :min(64, cfg.n + 1)].tolist()}
    return Result(summary, {}, [_stat(r) for r in reps])


STAT_SUITES = ("clt", "arcsine", "records", "fclt", "laplace", "lil", "ldp", "ergodicity", "degenerate")


def cmd_stats(cfg: RunConfig, g: graph_mod.DirectedGraph) -> Result:
    m = _measure(cfg, g)
    psi = _require_observable(cfg, g)
    suite = cfg.extra.get("suite") or ["clt", "arcsine", "records"]
    unknown = sorted(set(suite) - set(STAT_SUITES))
    if unknown:
        raise InputError("stats", f"unknown suite entries {unknown} (have {list(STAT_SUITES)})")
    psi_c = psi.shift_by(-thermo.expectation(m, psi))
    sigma = math.sqrt(max(thermo.green_kubo(m, psi_c).sigma2, 0.0))
    tol = cfg.tolerances
    batch = None
    if set(suite) & {"clt", "arcsine", "records", "fclt", "laplace", "degenerate"}:
        batch = stochastics.sample(m, cfg.n, cfg.R, cfg.seed, observable=psi_c)
    tasks: list[Callable[[], list[stochastics.StatReport]]] = []
    for name in suite:
        if name == "clt":
            tasks.append(lambda: stochastics.clt_check(batch, sigma))
        elif name == "arcsine":
            tasks.append(lambda: [stochastics.arcsine_check(batch, tol=tol.get("arcsine", 0.02))])
        elif name == "records":
            tasks.append(lambda: [stochastics.records_check(batch, sigma, tol=tol.get("records", 0.02))])
        elif name == "fclt":
            tasks.append(lambda: stochastics.fclt_check(batch, sigma))
        elif name == "laplace":
            tasks.append(lambda: [stochastics.laplace_check(batch, sigma, tol=tol.get("laplace", 0.02))])
        elif name == "degenerate":
            tasks.append(lambda: [stochastics.degenerate_clt_check(batch, tol.get("degenerate", 10.0))])
        elif name == "lil":
            tasks.append(lambda: stochastics.lil_strassen_check(
                m, psi, sigma, c=cfg.extra.get("c", 0.5), n=int(cfg.extra.get("lil_n", 10_000_000)),
                R=int(cfg.extra.get("lil_R", 100)), seed=cfg.seed, tol=tol.get("strassen", 0.1)))
        elif name == "ldp":
            a = cfg.extra.get("a", 0.2)
            tasks.append(lambda: [stochastics.ldp_empirical(
                m, psi, thermo.rate_function(m, psi), a, tol_rel=tol.get("ldp", 0.1), R=cfg.R,
                seed=cfg.seed)])
        elif name == "ergodicity":
            ts = parse_grid("-1:1:41") if cfg.t_grid is None else cfg.t_grid
            tasks.append(lambda: stochastics.effective_ergodicity_scan(
                g, psi, ts, tol=tol.get("ergodicity", 0.05))[0])
    reports = [r for group in fan_out(tasks) for r in group]
    summary = {"sigma": sigma, "suite": list(suite), "n": cfg.n, "R": cfg.R, "seed": cfg.seed}
    return Result(summary, {}, [_stat(r) for r in reports])


def cmd_pliss(cfg: RunConfig, g: graph_mod.DirectedGraph | None) -> Result:
    src = cfg.extra.get("orbits")
    if not src:
        raise InputError("pliss", "--orbits is required")
    ens = pliss.build_orbits(_read_json(src))
    mode = cfg.extra.get("mode", "pliss")
    x = cfg.extra
    checks: list[dict] = []
    if mode == "pliss":
        r = pliss.pliss_points(ens, x.get("beta", 0.0), x.get("A", 1.0), x.get("kappa", 0.0))
        summary = r.to_dict()
        checks.append(_check("Pliss measure bound", float(r.measure), float(r.bound), 0, r.holds))
    elif mode == "envelope":
        eps = x.get("eps", 0.5)
        envs = fan_out([lambda o=o: pliss.tempered_envelope(o, eps) for o in ens.orbits])
        summary = {"orbits": [e.to_dict() for e in envs]}
        checks += [_check(f"tail inequality[{i}]", e.factor, e.factor, 0, e.holds) for i, e in enumerate(envs)]
    elif mode == "pesin":
        chi, eps = x.get("chi", 0.1), x.get("eps", 0.1)
        certs = fan_out([lambda o=o: pliss.optimal_pesin_constant(o, chi, eps) for o in ens.orbits])
        summary = {"orbits": [c.to_dict() for c in certs]}
        for i, c in enumerate(certs):
            checks.append(_check(f"temperedness[{i}]", c.eps, c.eps, 0, c.tempered))
            checks.append(_check(f"window[{i}]", 0, 0, 0, c.window_ok))
    elif mode == "block":
        r = pliss.pliss_set_to_block(ens, int(x.get("n0", 1)), x.get("chi", 0.1), x.get("eps", 0.1))
        summary = r.to_dict()
        checks.append(_check("block inequality", r.outside_block, r.factor * r.outside_pliss, 0, r.holds))
    else:
        raise InputError("pliss", f"unknown mode {mode!r}")
    return Result(summary, {}, checks)


COMMANDS: dict[str, Callable[[RunConfig, Any], Result]] = {
    "graph": cmd_graph, "entropy": cmd_entropy, "spr": cmd_spr, "mme": cmd_mme,
    "pressure": cmd_pressure, "variance": cmd_variance, "ldp": cmd_ldp, "tail": cmd_tail,
    "simulate": cmd_simulate, "stats": cmd_stats, "pliss": cmd_pliss,
}


def run(cfg: RunConfig, stdout=None, stderr=None) -> int:
    """Validate, compute, write the bundle and return the exit status."""
    stdout = sys.stdout if stdout is None else stdout
    stderr = sys.stderr if stderr is None else stderr
    try:
        validate(cfg)
        g = load_graph(cfg.graph) if cfg.graph else None
        result = COMMANDS[cfg.subcommand](cfg, g)
        digest = g.digest if g is not None else _orbit_digest(cfg)
        if cfg.out:
            report_bundle(result, cfg.out, cfg.subcommand, digest, cfg.seed)
    except InputError as exc:
        print(json.dumps({"error": {"operation": exc.operation, "message": exc.message}}), file=stderr)
        return EXIT_INPUT
    except INPUT_ERRORS as exc:
        op = getattr(exc, "__module__", "") or ""
        print(json.dumps({"error": {"operation": f"{cfg.subcommand} ({type(exc).__name__})",
                                    "message": str(exc), "module": op}}), file=stderr)
        return EXIT_INPUT
    payload = {"subcommand": cfg.subcommand, "passed": result.passed, "checks": result.checks,
               "summary": result.summary}
    print(json.dumps(_clean(payload), sort_keys=True, indent=2), file=stdout)
    return EXIT_OK if result.passed else EXIT_CHECK


def _orbit_digest(cfg: RunConfig) -> str:
    text = json.dumps(_read_json(cfg.extra["orbits"]), sort_keys=True)
    return hashlib.sha256(text.encode()).hexdigest()


# ---------------------------------------------------------------------------
# argument parsing
# ---------------------------------------------------------------------------


class _Parser(argparse.ArgumentParser):
    """Argument errors are input errors (status 1), not check failures."""

    def error(self, message: str):
        self.print_usage(sys.stderr)
        print(json.dumps({"error": {"operation": "parse_args", "message": message}}), file=sys.stderr)
        raise SystemExit(EXIT_INPUT)


def build_parser() -> argparse.ArgumentParser:
    lines = "\n".join(f"  {k:<9} {v}" for k, v in MAPPING.items())
    p = _Parser(
        prog="sprshift", formatter_class=argparse.RawDescriptionHelpFormatter,
        description="Symbolic dynamics of Markov shifts: loop counts, SPR, thermodynamics, limit laws.",
        epilog=f"subcommands and the results they exercise:\n{lines}\n\n"
               "exit status: 0 all checks pass, 2 a check failed, 1 input error.\n"
               "SPR_SHIFT_THREADS caps the worker pool and the sampling threads.")
    sub = p.add_subparsers(dest="subcommand", required=True, metavar="SUBCOMMAND",
                         parser_class=_Parser)

    def common(name: str) -> argparse.ArgumentParser:
        sp = sub.add_parser(name, help=MAPPING[name], description=MAPPING[name])
        if name != "pliss":
            sp.add_argument("--graph", required=True,
                            help="graph JSON file, inline JSON object, or builtin:NAME with NAME in " + ",".join(BUILTIN_GRAPHS))
        sp.add_argument("--out", help="directory for the report bundle (omit to print only)")
        sp.add_argument("--seed", type=int, default=0)
        sp.add_argument("--tol", action="append", default=[], metavar="NAME=VALUE",
                        help="override a check tolerance")
        return sp

    sp = common("graph")
    sp = common("entropy")
    sp.add_argument("--base", type=int, default=0)
    sp.add_argument("--horizon", type=int, default=census.DEFAULT_HORIZON)
    sp.add_argument("--expect-entropy", type=float, dest="entropy")

    sp = common("spr")
    sp.add_argument("--base", type=int, default=0)
    sp.add_argument("--horizon", type=int, default=census.DEFAULT_HORIZON)
    sp.add_argument("--W", help="comma-separated vertex set for the exit-path route")
    sp.add_argument("--grow", action="store_true", help="grow W by its boundary until the route holds")
    sp.add_argument("--potential", help="potential JSON (weighted census)")
    sp.add_argument("--expect", choices=[v.value for v in spr.Verdict])

    sp = common("mme")
    sp.add_argument("--potential", help="potential JSON; equilibrium measure instead of the MME")

    for name in ("pressure", "variance", "ldp", "tail", "simulate", "stats"):
        sp = common(name)
        sp.add_argument("--potential", help="potential JSON defining the reference measure")
        if name not in ("tail", "simulate"):
            sp.add_argument("--obs", dest="observable", required=True, help="observable JSON")
        if name in ("variance", "ldp", "simulate", "stats", "tail"):
            sp.add_argument("--n", type=int, default=10_000)
            sp.add_argument("--R", type=int, default=10_000)
        if name == "pressure":
            sp.add_argument("--t-grid", default="-2:2:41", help="start:stop:count or list")
        if name == "variance":
            sp.add_argument("--empirical", action="store_true")
        if name == "ldp":
            sp.add_argument("--s-grid", help="start:stop:count or list")
            sp.add_argument("--a", type=float, help="threshold for the tail-slope check")
        if name == "tail":
            sp.add_argument("--base", type=int, default=0)
            sp.add_argument("--horizon", type=int, default=30)
            sp.add_argument("--exact", action="store_true", help="rational arithmetic")
            sp.add_argument("--empirical", action="store_true")
        if name == "stats":
            sp.add_argument("--suite", default="clt,arcsine,records",
                            help="comma-separated subset of " + ",".join(STAT_SUITES))
            sp.add_argument("--a", type=float, default=0.2)
            sp.add_argument("--c", type=float, default=0.5)
            sp.add_argument("--lil-n", type=int, default=10_000_000)
            sp.add_argument("--lil-R", type=int, default=100)
            sp.add_argument("--t-grid", default="-1:1:41")

    sp = common("pliss")
    sp.add_argument("--orbits", required=True, help="orbit ensemble JSON")
    sp.add_argument("--mode", choices=["pliss", "envelope", "pesin", "block"], default="pliss")
    for flag, default in (("beta", 0.0), ("A", 1.0), ("kappa", 0.0), ("eps", 0.5), ("chi", 0.1)):
        sp.add_argument(f"--{flag}", type=float, default=default)
    sp.add_argument("--n0", type=int, default=1)
    return p


def config_from_args(ns: argparse.Namespace) -> RunConfig:
    d = vars(ns).copy()
    cfg = RunConfig(subcommand=d.pop("subcommand"))
    cfg.graph = d.pop("graph", None)
    cfg.out = d.pop("out", None)
    cfg.seed = d.pop("seed", 0)
    cfg.tolerances = parse_tolerances(d.pop("tol", []))
    cfg.base = d.pop("base", 0)
    cfg.horizon = d.pop("horizon", census.DEFAULT_HORIZON)
    cfg.potential = d.pop("potential", None)
    cfg.observable = d.pop("observable", None)
    cfg.n = d.pop("n", cfg.n)
    cfg.R = d.pop("R", cfg.R)
    cfg.t_grid = parse_grid(d.pop("t_grid", None))
    cfg.s_grid = parse_grid(d.pop("s_grid", None))
    if d.get("W"):
        d["W"] = [int(v) for v in d["W"].split(",")]
    if d.get("suite"):
        d["suite"] = [s.strip() for s in d["suite"].split(",") if s.strip()]
    cfg.extra = d
    return cfg


def main(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    ns = parser.parse_args(argv)
    try:
        cfg = config_from_args(ns)
    except (InputError, ValueError) as exc:
        op = exc.operation if isinstance(exc, InputError) else "parse_args"
        print(json.dumps({"error": {"operation": op, "message": str(exc)}}), file=sys.stderr)
        return EXIT_INPUT
    return run(cfg)


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
