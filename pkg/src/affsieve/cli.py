"""Scenario-driven command-line front end.

Every command prints a human-readable summary and, with --record, writes a
deterministic machine-readable JSON record (no timestamps, sorted keys) so
that replaying the same scenario hash and flags is byte-identical.

Exit codes: 0 success, 2 invalid input, 3 resource/budget exhaustion.
"""

from __future__ import annotations

import argparse
import json
import sys
from fractions import Fraction

from . import __version__
from .core_arith import check_prime_set, primes_upto
from .heuristics import (
    TorusSpec,
    borel_cantelli_sum,
    norm_growth_check,
    prime_factor_trend,
    two_power_product,
)
from .matgroup import ResourceCapError, ball, orbit
from .modp import (
    EnumerationBudgetError,
    ImageCapError,
    beta_squarefree,
    detect_ramified,
    enumerate_variety_mod_p,
    generate_image,
    local_density,
    sl_order,
    splitting_census,
    verify_strong_approx,
)
from .orbit_sieve import (
    ModuliBudgetError,
    almost_prime_census,
    brun_bound,
    build_sequence,
    level_distribution_report,
    moduli_decomposition,
    r_formula,
    saturation_estimate,
    sieve_dimension_fit,
)
from .polyalg import MultiPoly
from .scenario import Scenario, encode_value, load_scenario, parse_rational, rational_str
from .unipotent_sieve import (
    CoprimalityError,
    SieveBudget,
    unipotent_group_sieve,
)

EXIT_OK = 0
EXIT_INVALID = 2
EXIT_BUDGET = 3


def _emit(args, command: str, scenario, flags: dict, outputs: dict) -> None:
    record = {
        "command": command,
        "scenario": scenario.name if scenario else None,
        "scenario_hash": scenario.hash() if scenario else None,
        "flags": encode_value(flags),
        "outputs": encode_value(outputs),
        "versions": {"affsieve": __version__},
    }
    payload = json.dumps(record, sort_keys=True, indent=2)
    for key, value in outputs.items():
        print(f"{key}: {encode_value(value)}")
    if getattr(args, "record", None):
        with open(args.record, "w") as fh:
            fh.write(payload + "\n")
        print(f"record written to {args.record}")


def _ramified_set(sc: Scenario, f: MultiPoly, L_sample: int = 3, p_max: int = 100):
    sample = ball(sc.generators, L_sample, cap=sc.ball_cap)
    return detect_ramified(sc.generators, f, sample, p_max=p_max, cap=sc.image_cap)


def _need(sc: Scenario, attr: str, what: str):
    value = getattr(sc, attr)
    if value is None:
        raise ValueError(f"scenario {sc.name!r} does not declare {what}")
    return value


# ---------------------------------------------------------------------------
# command handlers


def cmd_ball(sc: Scenario, args):
    B = ball(sc.generators, args.L, cap=sc.ball_cap)
    by_length: dict[int, int] = {}
    for _, l in B.length.items():
        by_length[l] = by_length.get(l, 0) + 1
    return {"L": args.L, "size": len(B), "by_length": dict(sorted(by_length.items()))}


def cmd_orbit(sc: Scenario, args):
    v = _need(sc, "orbit_vector", "an orbit_vector")
    O = orbit(sc.generators, v, args.L, cap=sc.ball_cap)
    return {"L": args.L, "points": len(O)}


def cmd_local_density(sc: Scenario, args):
    f = _need(sc, "f", "a regular function f")
    ram = _ramified_set(sc, f, p_max=max(args.p, 100))
    d = local_density(sc.generators, f, args.p, ramified=ram.confirmed, cap=sc.image_cap)
    return {
        "p": args.p,
        "N_f": d.N_f,
        "order": d.order,
        "beta": d.beta,
        "ramified": d.ramified,
    }


def cmd_beta_table(sc: Scenario, args):
    f = _need(sc, "f", "a regular function f")
    ram = _ramified_set(sc, f, p_max=max(args.pmax, 100))
    table = {}
    for p in primes_upto(args.pmax):
        d = local_density(sc.generators, f, p, ramified=ram.confirmed, cap=sc.image_cap)
        table[p] = d.beta
    return {"pmax": args.pmax, "ramified": list(ram.confirmed), "beta": table}


def cmd_strong_approx(sc: Scenario, args):
    expected = (lambda p: sl_order(sc.n, p)) if sc.kind == "SL" else None
    v = verify_strong_approx(sc.generators, args.q, expected, cap=sc.image_cap)
    return {
        "q": args.q,
        "holds": v.holds,
        "image_order": v.image_order,
        "expected_order": v.expected_order,
        "per_prime": [list(row) for row in v.per_prime],
    }


def cmd_ramified(sc: Scenario, args):
    f = _need(sc, "f", "a regular function f")
    rep = _ramified_set(sc, f, L_sample=args.Lsample, p_max=args.pmax)
    return {
        "confirmed": list(rep.confirmed),
        "unresolved": list(rep.unresolved),
        "sample_gcd": rep.sample_gcd,
    }


def cmd_variety_count(sc: Scenario, args):
    f = _need(sc, "f", "a regular function f")
    count = enumerate_variety_mod_p(
        [f, *sc.ambient_ideal], args.p, variables=sc.variables
    )
    return {"p": args.p, "count": count}


def cmd_splitting_census(sc: Scenario, args):
    f = _need(sc, "f", "a regular function f")
    dim_V = args.dim if args.dim is not None else _need(sc, "dim_V", "dim_V")
    ps = [p for p in primes_upto(args.pmax) if p >= args.pmin]
    cen = splitting_census([f, *sc.ambient_ideal], dim_V, ps, variables=sc.variables)
    return {
        "dim_V": dim_V,
        "rows": [list(r) for r in cen.rows],
        "frequencies": {str(k): v for k, v in sorted(cen.frequencies.items())},
        "unclassified": list(cen.unclassified),
        "degree_sum_estimate": cen.degree_sum_estimate,
    }


def cmd_sequence(sc: Scenario, args):
    f = _need(sc, "f", "a regular function f")
    seq = build_sequence(sc.generators, f, args.L, sc.S0, cap=sc.ball_cap)
    return {
        "L": args.L,
        "S": list(seq.S_used),
        "X": seq.X,
        "skipped": seq.skipped,
        "entries": {str(n): a for n, a in sorted(seq.entries.items())[: args.head]},
        "distinct_values": len(seq.entries),
    }


def _beta_provider(sc: Scenario, f: MultiPoly, ram: tuple[int, ...]):
    cache: dict[int, Fraction] = {}

    def beta(d: int) -> Fraction:
        if d == 1:
            return Fraction(1)
        if d not in cache:
            cache[d] = beta_squarefree(
                sc.generators, f, d, ramified=ram, cap=sc.image_cap
            )
        return cache[d]

    return beta


def cmd_decompose(sc: Scenario, args):
    f = _need(sc, "f", "a regular function f")
    ram = _ramified_set(sc, f)
    seq = build_sequence(sc.generators, f, args.L, sc.S0, cap=sc.ball_cap)
    decomp = moduli_decomposition(seq, _beta_provider(sc, f, ram.confirmed), args.D)
    return {
        "L": args.L,
        "D": args.D,
        "X": decomp.X,
        "rows": {
            str(d): {"A_d": row[0], "prediction": row[1], "remainder": row[2]}
            for d, row in sorted(decomp.rows.items())
        },
    }


def cmd_level_report(sc: Scenario, args):
    f = _need(sc, "f", "a regular function f")
    ram = _ramified_set(sc, f)
    seq = build_sequence(sc.generators, f, args.L, sc.S0, cap=sc.ball_cap)
    decomp = moduli_decomposition(seq, _beta_provider(sc, f, ram.confirmed), args.D)
    taus = [parse_rational(t) for t in args.taus.split(",")]
    dim = _need(sc, "dim_G", "dim_G")
    rep = level_distribution_report(decomp, taus, dim)
    return {
        "L": args.L,
        "D": args.D,
        "abs_sum": rep.abs_sum,
        "abs_max": rep.abs_max,
        "least_tau": rep.least_tau,
        "tau_grid": list(rep.tau_grid),
    }


def cmd_sieve_dim(sc: Scenario, args):
    f = _need(sc, "f", "a regular function f")
    ram = set(_ramified_set(sc, f).confirmed)
    table: dict[int, Fraction] = {}
    for p in primes_upto(args.pmax):
        if p in ram:
            table[p] = Fraction(0)
            continue
        count = enumerate_variety_mod_p([f, *sc.ambient_ideal], p, variables=sc.variables)
        table[p] = Fraction(count, sl_order(sc.n, p)) if sc.kind == "SL" else Fraction(0)
    fit = sieve_dimension_fit(table, args.w, args.pmax)
    return {
        "window": list(fit.window),
        "slope": fit.slope,
        "intercept": fit.intercept,
        "residual": fit.residual,
        "n_primes": fit.n_primes,
        "conclusive": fit.conclusive,
    }


def cmd_brun_bound(sc: Scenario, args):
    f = _need(sc, "f", "a regular function f")
    seq = build_sequence(sc.generators, f, args.L, sc.S0, cap=sc.ball_cap)
    br = brun_bound(seq, args.z, args.b)
    exact = seq.sifted_count(args.z)
    return {
        "L": args.L,
        "z": args.z,
        "b": args.b,
        "lower": br.lower,
        "exact": exact,
        "upper": br.upper,
        "moduli_used": br.moduli_used,
        "bracketing_holds": br.lower <= exact <= br.upper,
    }


def cmd_census(sc: Scenario, args):
    f = _need(sc, "f", "a regular function f")
    cen = almost_prime_census(
        sc.generators, f, args.L, sc.S0, r_max=args.rmax, cap=sc.ball_cap
    )
    return {
        "L": args.L,
        "S": list(cen.S_used),
        "counts": {str(r): c for r, c in sorted(cen.counts.items())},
        "incomplete": cen.incomplete,
        "skipped": cen.skipped,
    }


def cmd_saturate(sc: Scenario, args):
    f = _need(sc, "f", "a regular function f")
    if args.Lmax is not None:
        schedule = (max(1, args.Lmax - 1), args.Lmax)
    else:
        schedule = sc.L_schedule
    D = args.D if args.D is not None else sc.D
    est = saturation_estimate(
        sc.generators,
        f,
        sc.S0,
        D,
        schedule,
        ambient_ideal_basis=sc.ambient_ideal,
        r_max=sc.r_max,
        cap=sc.ball_cap,
    )
    return {
        "r_hat": est.r_hat,
        "S": list(est.S_used),
        "D": est.D,
        "L_schedule": list(est.L_schedule),
        "stable": est.stable,
        "per_L": {str(L): r for L, r in sorted(est.per_L.items())},
        "failure_mode": {str(L): m for L, m in sorted(est.failure_mode.items())},
        "note": "empirical lower-confidence estimate from finite data",
    }


def cmd_uni_sieve(sc: Scenario, args):
    p = _need(sc, "unipotent_p", "a unipotent block")
    budget = SieveBudget(
        value_want=args.want,
        prefix_want=args.prefixes,
        search_bound=args.bound,
    )
    res = unipotent_group_sieve(list(sc.generator_matrices), p, sc.unipotent_families, budget)
    return {
        "r": res.r,
        "S": list(res.S),
        "points": len(res.points),
        "dropped": res.dropped,
        "exhausted": res.exhausted,
        "sample_points": [list(pt.x) for pt in res.points[: args.head]],
        "sample_values": [pt.value for pt in res.points[: args.head]],
    }


def cmd_torus_heuristic(sc: Scenario, args):
    M = _need(sc, "torus_M", "a torus block")
    nu = sc.torus_nu
    spec = TorusSpec(sc.generator_matrices, M)
    env = norm_growth_check(spec)
    rep = borel_cantelli_sum(
        spec.rank, nu, sc.torus_r, args.bc_M, checkpoints=[args.bc_M // 10]
    )
    return {
        "A1": env.A1,
        "A2": env.A2,
        "K": env.K,
        "envelope_verified": env.verified,
        "degenerate_directions": [list(d) for d in env.degenerate_directions],
        "bc_partial_sums": list(rep.partial_sums),
        "bc_increments": list(rep.increments),
        "bc_integral_bound": rep.integral_bound,
    }


def cmd_r_formula(_sc, args):
    value = r_formula(
        args.deg,
        args.s,
        args.dim,
        parse_rational(args.tau),
        args.omega,
        parse_rational(args.T),
        parse_rational(args.logM0),
    )
    return {
        "deg": args.deg,
        "s": args.s,
        "dim": args.dim,
        "tau": parse_rational(args.tau),
        "omega": args.omega,
        "T": parse_rational(args.T),
        "logM0": parse_rational(args.logM0),
        "r": value,
    }


# ---------------------------------------------------------------------------
# argument wiring

_NEEDS_SCENARIO = True


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="affsieve",
        description="Exact sieve experiments on orbits of rational matrix groups",
    )
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)

    def add(name, handler, needs_scenario=True, **extra):
        p = sub.add_parser(name)
        if needs_scenario:
            p.add_argument("--scenario", required=True)
        p.add_argument("--record", help="write the machine-readable record here")
        p.set_defaults(handler=handler, needs_scenario=needs_scenario)
        return p

    p = add("ball", cmd_ball)
    p.add_argument("--L", type=int, required=True)
    p = add("orbit", cmd_orbit)
    p.add_argument("--L", type=int, required=True)
    p = add("local-density", cmd_local_density)
    p.add_argument("--p", type=int, required=True)
    p = add("beta-table", cmd_beta_table)
    p.add_argument("--pmax", type=int, required=True)
    p = add("strong-approx", cmd_strong_approx)
    p.add_argument("--q", type=int, required=True)
    p = add("ramified", cmd_ramified)
    p.add_argument("--Lsample", type=int, default=3)
    p.add_argument("--pmax", type=int, default=100)
    p = add("variety-count", cmd_variety_count)
    p.add_argument("--p", type=int, required=True)
    p = add("splitting-census", cmd_splitting_census)
    p.add_argument("--pmin", type=int, default=3)
    p.add_argument("--pmax", type=int, required=True)
    p.add_argument("--dim", type=int, default=None)
    p = add("sequence", cmd_sequence)
    p.add_argument("--L", type=int, required=True)
    p.add_argument("--head", type=int, default=20)
    p = add("decompose", cmd_decompose)
    p.add_argument("--L", type=int, required=True)
    p.add_argument("--D", type=int, required=True)
    p = add("level-report", cmd_level_report)
    p.add_argument("--L", type=int, required=True)
    p.add_argument("--D", type=int, required=True)
    p.add_argument("--taus", default="1/10,1/4,1/2,3/4,9/10")
    p = add("sieve-dim", cmd_sieve_dim)
    p.add_argument("--pmax", type=int, required=True)
    p.add_argument("--w", type=int, default=3)
    p = add("brun-bound", cmd_brun_bound)
    p.add_argument("--L", type=int, required=True)
    p.add_argument("--z", type=int, required=True)
    p.add_argument("--b", type=int, required=True)
    p = add("census", cmd_census)
    p.add_argument("--L", type=int, required=True)
    p.add_argument("--rmax", type=int, default=8)
    p = add("saturate", cmd_saturate)
    p.add_argument("--D", type=int, default=None)
    p.add_argument("--Lmax", type=int, default=None)
    p = add("uni-sieve", cmd_uni_sieve)
    p.add_argument("--want", type=int, default=5)
    p.add_argument("--prefixes", type=int, default=60)
    p.add_argument("--bound", type=int, default=100_000)
    p.add_argument("--head", type=int, default=10)
    p = add("torus-heuristic", cmd_torus_heuristic)
    p.add_argument("--bc-M", dest="bc_M", type=int, default=1_000_000)
    p = add("r-formula", cmd_r_formula, needs_scenario=False)
    p.add_argument("--deg", type=int, required=True)
    p.add_argument("--s", type=int, required=True)
    p.add_argument("--dim", type=int, required=True)
    p.add_argument("--tau", required=True)
    p.add_argument("--omega", type=int, required=True)
    p.add_argument("--T", default="1")
    p.add_argument("--logM0", default="1")
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    scenario = None
    try:
        if args.needs_scenario:
            scenario = load_scenario(args.scenario)
        outputs = args.handler(scenario, args)
        flags = {
            k: v
            for k, v in vars(args).items()
            if k not in ("handler", "needs_scenario", "command", "record", "scenario")
            and v is not None
        }
        _emit(args, args.command, scenario, flags, outputs)
        return EXIT_OK
    except (ResourceCapError, ImageCapError, EnumerationBudgetError, ModuliBudgetError) as exc:
        print(f"budget exhausted: {exc}", file=sys.stderr)
        return EXIT_BUDGET
    except (ValueError, CoprimalityError, OSError, KeyError) as exc:
        print(f"invalid input: {exc}", file=sys.stderr)
        return EXIT_INVALID


if __name__ == "__main__":
    sys.exit(main())
