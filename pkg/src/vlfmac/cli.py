"""Command-line front end: bound tables, regions, simulations and self-checks.

Exit codes: 0 success, 1 usage error, 2 infeasible configuration, 3 a property
check failed. Numbers are written at 12 significant digits; JSON carries them as
strings so output is byte-stable across platforms.
"""
from __future__ import annotations

import argparse
import csv
import io
import json
import math
import sys
import warnings
from typing import Callable, Sequence

import numpy as np

from . import bounds, coding, rng as rngmod, walks
from .channel import (ChannelParams, binary_entropy, gaussian_capacity, info_densities, info_density_mismatched,
                      single_letter_stats)

EXIT_OK, EXIT_USAGE, EXIT_INFEASIBLE, EXIT_PROPERTY = 0, 1, 2, 3


class UsageError(Exception):
    pass


class Infeasible(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def fmt(x) -> str:
    if isinstance(x, (bool, np.bool_)):
        return "true" if x else "false"
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    if isinstance(x, (float, np.floating)):
        x = float(x)
        if x == 0.0:
            return "0"
        return format(x, ".12g")
    return str(x)


def render(rows: Sequence[dict], form: str) -> str:
    if form == "json":
        body = [{k: fmt(v) for k, v in r.items()} for r in rows]
        return json.dumps(body[0] if len(body) == 1 else body, indent=1) + "\n"
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    if rows:
        w.writerow(list(rows[0].keys()))
        for r in rows:
            w.writerow([fmt(v) for v in r.values()])
    return buf.getvalue()


def parse_grid(text: str) -> list[float]:
    """'a:b:step' inclusive of b (within rounding), or a comma list."""
    try:
        if ":" in text:
            a, b, step = (float(t) for t in text.split(":"))
            if step <= 0 or b < a:
                raise ValueError
            n = int(math.floor((b - a) / step + 1e-9)) + 1
            return [a + i * step for i in range(n)]
        return [float(t) for t in text.split(",") if t]
    except ValueError:
        raise UsageError(f"bad grid {text!r}; expected a:b:step with step > 0 and b >= a") from None


def _params(args) -> ChannelParams:
    try:
        return ChannelParams(args.p1, args.p2)
    except ValueError as e:
        raise UsageError(str(e)) from None


def _n_values(args) -> list[float]:
    if args.n_grid:
        vals = parse_grid(args.n_grid)
    elif args.n is not None:
        vals = [args.n]
    else:
        raise UsageError("need --n or --n-grid")
    if not vals:
        raise UsageError("empty N grid")
    return vals


def _rho_values(args) -> list[float]:
    if args.rho_grid:
        vals = parse_grid(args.rho_grid)
    else:
        vals = [args.rho]
    if any(not 0 <= r <= 1 for r in vals):
        raise UsageError("rho must lie in [0, 1]")
    return vals


def _constants(args, params) -> bounds.SecondOrderConstants:
    stats = single_letter_stats(params)
    if args.g_mode == "zero":
        return bounds.constants_from_estimates(stats, xi=[0.0] * 3, k=[0.0] * 3).with_zero_g()
    consts, _ = bounds.estimate_constants(params, args.const_trials, args.seed, args.threads)
    return consts


def cmd_bounds(args) -> tuple[list[dict], bool]:
    params = _params(args)
    rows = []
    for n in _n_values(args):
        for rho in (_rho_values(args) if args.scheme == "vlft" else [0.0]):
            try:
                rb = bounds.rate_bounds(n, args.eps, params, args.scheme, rho)
            except ValueError as e:
                raise UsageError(str(e)) from None
            rows.append({"N": n, "scheme": rb.scheme, "rho": rb.rho,
                         "ach_r1": rb.ach[0], "ach_r2": rb.ach[1], "ach_sum": rb.ach[2],
                         "con_r1": rb.con[0], "con_r2": rb.con[1], "con_sum": rb.con[2]})
    return rows, True


def cmd_region(args) -> tuple[list[dict], bool]:
    params = _params(args)
    try:
        reg = bounds.eps_capacity_region(args.eps, params, args.scheme, args.rho_grid_size)
    except ValueError as e:
        raise UsageError(str(e)) from None
    return [{"R1": x, "R2": y} for x, y in reg.points], True


def cmd_simulate(args) -> tuple[list[dict], bool]:
    params = _params(args)
    if args.trials < 100:
        raise UsageError("simulate needs --trials >= 100")
    n_prime = args.n if args.n is not None else 200.0
    wrapper = None
    if args.eps is not None and args.eps > 0:
        try:
            wrapper = coding.WrapperConfig(n_prime, args.eps)
        except ValueError as e:
            raise UsageError(str(e)) from None
    out: dict = {"p1": params.p1, "p2": params.p2, "n_prime": n_prime, "trials": args.trials, "seed": args.seed,
                 "inner": args.inner}
    if args.inner == "ideal":
        inner_err = 1.0 / n_prime
        inner = coding.idealized_inner(n_prime, inner_err, args.seed)

        def run(sl):
            return [coding.wrapped_trial(i, args.seed, wrapper, inner) for i in range(*sl)]

        outcomes = [o for c in rngmod.ordered_map(run, rngmod.batch_slices(args.trials, 64), args.threads)
                    for o in c]
        target = inner_err
        union = math.inf
    else:
        consts = _constants(args, params)
        try:
            with warnings.catch_warnings():
                warnings.simplefilter("ignore")
                op = coding.operating_point(params, n_prime, consts.a_const, consts.g_const, cap=args.cap,
                                            m1=args.m1, m2=args.m2)
        except ValueError as e:
            raise Infeasible(str(e)) from None
        outcomes = coding.simulate_scheme(params, op, args.trials, args.seed, wrapper, args.threads)
        target = 1.0 / n_prime
        union = op.union_bound()
        out.update(a_const=consts.a_const, g_const=consts.g_const, gamma1=op.thresholds.gamma1,
                   gamma2=op.thresholds.gamma2, gamma3=op.thresholds.gamma3, m1=op.m1, m2=op.m2)

    passed = True
    tau = np.array([o.tau_star for o in outcomes], dtype=float)
    mt, mtse = rngmod.mean_se(tau)
    vt, vtse = rngmod.var_se(tau)
    inner_out = [o for o in outcomes if not o.aborted]
    out.update(mean_tau=mt, mean_tau_se=mtse, var_tau=vt, var_tau_se=vtse)
    if inner_out:
        rep = coding.error_report(inner_out, target, union)
        out.update(inner_trials=rep.n_trials, inner_error_rate=rep.rate, inner_error_se=rep.se,
                   inner_error_ci_low=max(0.0, rep.rate - 1.96 * rep.se), inner_error_ci_high=rep.rate + 1.96 * rep.se,
                   erasures=rep.erasures, error_target=target, check_error_target=rep.passed_target)
        passed &= rep.passed_target
        if math.isfinite(union):
            out.update(union_bound=union, check_union_bound=rep.passed_union)
            passed &= rep.passed_union
    order_ok = all(o.tau_star <= o.tau_max_true for o in outcomes)
    out["check_tau_order"] = order_ok
    passed &= order_ok
    if args.inner == "scheme":
        for pr in coding.power_audit(outcomes, params):
            u = pr.user
            out.update({f"energy{u}_mean": pr.mean_energy, f"energy{u}_budget": pr.budget,
                        f"energy{u}_margin": pr.budget - pr.mean_energy, f"energy{u}_diff_se": pr.diff_se,
                        f"check_power{u}": pr.within_budget})
            passed &= pr.within_budget
    if wrapper is not None:
        n_abort = sum(o.aborted for o in outcomes)
        err = sum(not o.correct for o in outcomes) / len(outcomes)
        inner_rate = out.get("inner_error_rate", 0.0)
        pred = wrapper.p + (1 - wrapper.p) * inner_rate
        se = max(rngmod.binomial_se(err, len(outcomes)), rngmod.binomial_se(pred, len(outcomes)))
        abort_frac = n_abort / len(outcomes)
        abort_se = rngmod.binomial_se(wrapper.p, len(outcomes))
        out.update(eps=wrapper.eps, p=wrapper.p, abort_fraction=abort_frac, combined_error=err, combined_error_se=se,
                   check_abort_fraction=abs(abort_frac - wrapper.p) <= 4 * abort_se,
                   check_combined_error=err <= wrapper.eps + 4 * se)
        passed &= out["check_abort_fraction"] and out["check_combined_error"]
    out["all_checks_passed"] = passed
    return [out], passed


def cmd_renewal(args) -> tuple[list[dict], bool]:
    params = _params(args)
    b_grid = parse_grid(args.b_grid)
    fit = walks.renewal_fit(params, args.walk, b_grid, args.trials, args.seed, args.threads)
    ladder = walks.estimate_renewal_constants(params, args.walk, args.const_trials, args.seed, args.threads)
    stats = single_letter_stats(params)
    mu, s2 = stats.mu[args.walk - 1], stats.sigma2[args.walk - 1]
    slope_ok = abs(fit.mean_slope * mu - 1.0) <= 0.01
    row = {"walk": args.walk, "mean_slope": fit.mean_slope, "mean_slope_se": fit.mean_slope_se,
           "inv_mu": 1.0 / mu, "check_slope_1pct": slope_ok,
           "intercept_times_mu": fit.mean_intercept * mu, "intercept_times_mu_se": fit.mean_intercept_se * mu,
           "xi": ladder.xi, "xi_se": ladder.xi_se, "nu": ladder.nu, "min_mean": ladder.min_mean,
           "var_slope": fit.var_slope, "var_slope_se": fit.var_slope_se, "var_slope_theory": s2 / mu**3,
           "var_intercept": fit.var_intercept, "var_intercept_se": fit.var_intercept_se,
           "k_const": ladder.k_const, "k_se": ladder.k_se, "k_over_mu2": ladder.k_const / mu**2}
    return [row], slope_ok


def cmd_maxstop(args) -> tuple[list[dict], bool]:
    params = _params(args)
    grid = parse_grid(args.n_grid) if args.n_grid else [100.0, 200.0, 400.0]
    consts = _constants(args, params)
    rows = []
    ok = True
    for n_prime in grid:
        try:
            rep = coding.max_stop_experiment(params, n_prime, consts, args.trials, args.seed, args.threads)
        except ValueError as e:
            raise Infeasible(str(e)) from None
        row = {"n_prime": n_prime, "mean_max": rep.mean_max, "mean_max_se": rep.max_se, "excess": rep.excess,
               "mean_tau1": rep.mean_tau[0], "mean_tau2": rep.mean_tau[1], "mean_tau3": rep.mean_tau[2]}
        for (i, j), d in rep.pair_abs_diff.items():
            row[f"absdiff_{i}{j}"] = d
            row[f"absdiff_{i}{j}_se"] = rep.pair_abs_se[(i, j)]
            row[f"absdiff_{i}{j}_bound"] = rep.pair_bound[(i, j)]
        row["check_pairs"] = all(rep.pair_ok.values())
        row["check_identity"] = rep.identity_exact
        ok &= row["check_pairs"] and row["check_identity"]
        rows.append(row)
    for prev, cur in zip(rows, rows[1:]):
        cur["check_nonincreasing"] = cur["excess"] <= prev["excess"] + 4 * math.hypot(cur["mean_max_se"],
                                                                                       prev["mean_max_se"])
        ok &= cur["check_nonincreasing"]
    rows[0]["check_nonincreasing"] = True
    return rows, ok


def selftest_cases() -> list[tuple[str, Callable[[], bool]]]:
    """Quick closed-form and degenerate-case checks."""
    p11 = ChannelParams(1.0, 1.0)
    st = single_letter_stats(p11)
    close = math.isclose

    def raises(fn):
        try:
            fn()
        except ValueError:
            return True
        return False

    def single_pair():
        op = coding.operating_point(p11, 60.0, 0.0, 0.0, m1=1, m2=1)
        outs = [coding.scheme_trial(p11, op, 7, i) for i in range(20)]
        return all(o.correct and o.tau_star == o.tau_max_true for o in outs)

    def abort_only():
        rep = coding.power_audit([coding.ABORT] * 10, p11)
        return all(r.mean_energy == 0 and r.budget == 0 for r in rep)

    def m_boundary():
        with warnings.catch_warnings():
            warnings.simplefilter("ignore")
            return coding.message_sizes(coding.ThresholdTriple(math.log(30), 10, 20), 10)[0] == 1

    def region_corners():
        r = bounds.eps_capacity_region(0.0, p11)
        c1, s = math.log(2) / 2, math.log(3) / 2
        want = [(0, c1), (s - c1, c1), (c1, s - c1), (c1, 0)]
        return all(abs(a - b) < 1e-12 for p, q in zip(r.points, want) for a, b in zip(p, q))

    def ladder_positive():
        ld = walks.estimate_ladder_moments(p11, 1, 2000, 5)
        return ld.xi > 0 and ld.nu > 0

    def wald_zero():
        return walks.wald_check(p11, 1, 0.0, 4000, 5).passed

    return [
        ("capacity(0) = 0", lambda: gaussian_capacity(0) == 0),
        ("capacity(1) = log(2)/2", lambda: close(gaussian_capacity(1), 0.346574, abs_tol=1e-6)),
        ("capacity(3) = log 2", lambda: close(gaussian_capacity(3), 0.693147, abs_tol=1e-6)),
        ("h(0) = h(1) = 0", lambda: binary_entropy(0) == 0 and binary_entropy(1) == 0),
        ("h(0.5) = log 2", lambda: close(binary_entropy(0.5), 0.693147, abs_tol=1e-6)),
        ("stats at P=(1,1)", lambda: close(st.l[0], 2 / math.log(2) ** 2, rel_tol=1e-14)
         and close(st.l[2], 8 / (3 * math.log(3) ** 2), rel_tol=1e-14)
         and st.sigma2 == (0.5, 0.5, 2 / 3) and close(st.mu[2], 0.549306, abs_tol=1e-6)),
        ("d1 at x=y=0", lambda: close(info_densities(p11, 0.0, 0.0, 0.0)[0], 0.346574, abs_tol=1e-6)),
        ("d1 at x1=y=1", lambda: close(info_densities(p11, 1.0, 0.0, 1.0)[0], 0.596574, abs_tol=1e-6)),
        ("mismatched d1", lambda: close(info_density_mismatched(p11, 0.0, 0.0, 1.0, 1), 0.096574, abs_tol=1e-6)),
        ("thresholds A=G=0", lambda: close(coding.thresholds_from_target(st, 100, 0, 0).gamma1, 34.6574, abs_tol=1e-4)
         and close(coding.thresholds_from_target(st, 100, 0, 0).gamma3, 54.9306, abs_tol=1e-4)),
        ("N' = A^2 rejected", lambda: raises(lambda: coding.thresholds_from_target(st, 25.0, 5.0, 0.0))),
        ("message sizes (4, 4)", lambda: coding.message_sizes(coding.ThresholdTriple(5, 5, 12), 10) == (4, 4)),
        ("m1 = 1 at the boundary", m_boundary),
        ("single codeword always correct", single_pair),
        ("wrapper p = 4/9", lambda: close(coding.WrapperConfig(10, 0.5).p, 4 / 9, rel_tol=1e-15)),
        ("wrapper error = eps", lambda: close(4 / 9 + 5 / 9 * 0.1, 0.5, rel_tol=1e-15)),
        ("vlft wrapper error", lambda: close(4 / 9 + 5 / 9 * 2 / 100, 0.45556, abs_tol=1e-5)),
        ("abort-only stream", abort_only),
        ("sf converse examples", lambda: close(bounds.sf_converse(100, 0.5, st)[0], 70.7011, abs_tol=1e-3)
         and close(bounds.sf_converse(100, 0.0, st)[0], 34.6574, abs_tol=1e-4)
         and close(bounds.sf_converse(100, 0.0, st)[2], 54.9306, abs_tol=1e-4)),
        ("sf achievability A=0", lambda: close(bounds.sf_achievable(1e4, 0.0, st, 0.0)[0], 3456.53, abs_tol=1e-2)),
        ("sf achievability clamp", lambda: bounds.sf_achievable(2.0, 0.1, st, 5.3) == (0.0, 0.0, 0.0)),
        ("vlft rho=0", lambda: close(bounds.vlft_achievable(100, 0.1, p11, 0.0)[0],
                                     100 * st.cap[0] / 0.9 - math.log(math.log(100)), rel_tol=1e-12)),
        ("vlft rho=1", lambda: bounds.vlft_achievable(100, 0.1, p11, 1.0)[0] == 0.0
         and close(bounds.vlft_achievable(100, 0.1, p11, 1.0)[2], 100 * gaussian_capacity(4) / 0.9
                   - math.log(math.log(100)), rel_tol=1e-12)),
        ("vlft converse N=0", lambda: close(bounds.vlft_converse(0, 0.0, p11, 0.0)[0], 0.0, abs_tol=1e-15)),
        ("vlft converse N=99", lambda: close(bounds.vlft_converse(99, 0.0, p11, 0.5)[0],
                                             99 * gaussian_capacity(0.75) + 100 * binary_entropy(0.01), rel_tol=1e-12)),
        ("G = 0 at B = F = 0", lambda: bounds.g_constant((0, 0, 0), (0, 0, 0), (0, 1, 2)) == 0.0),
        ("equal L ties", lambda: len({round(bounds.a_objective((2, 2, 2), p), 12) for p in bounds.PERMS}) == 1
         and bounds.constants_from_estimates(st._replace(l=(2.0, 2.0, 2.0)), xi=[1] * 3, k=[1] * 3).a_perm == (0, 1, 2)),
        ("sf pentagon corners", region_corners),
        ("origin in region", lambda: bounds.region_contains(bounds.eps_capacity_region(0.1, p11), 0.0, 0.0)),
        ("xi, nu > 0", ladder_positive),
        ("Wald at gamma = 0", wald_zero),
    ]


def cmd_selftest(args) -> tuple[list[dict], bool]:
    rows = []
    for name, fn in selftest_cases():
        try:
            ok = bool(fn())
        except Exception as e:  # report, do not abort the suite
            ok = False
            name = f"{name} ({type(e).__name__}: {e})"
        rows.append({"check": name, "passed": ok})
    return rows, all(r["passed"] for r in rows)


COMMANDS = {"bounds": cmd_bounds, "region": cmd_region, "simulate": cmd_simulate, "renewal": cmd_renewal,
            "maxstop": cmd_maxstop, "selftest": cmd_selftest}


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--p1", type=float, default=1.0)
    common.add_argument("--p2", type=float, default=1.0)
    common.add_argument("--seed", type=int, default=rngmod.DEFAULT_SEED)
    common.add_argument("--threads", type=int, default=1)
    common.add_argument("--out", help="output file (default stdout)")
    common.add_argument("--format", choices=("csv", "json"), default="csv")

    p = _Parser(prog="vlfmac", description=__doc__.splitlines()[0])
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    b = sub.add_parser("bounds", parents=[common], help="achievability/converse table over N")
    b.add_argument("--n", type=float)
    b.add_argument("--n-grid")
    b.add_argument("--eps", type=float, default=0.1)
    b.add_argument("--scheme", choices=("sf", "vlft"), default="sf")
    b.add_argument("--rho", type=float, default=0.0)
    b.add_argument("--rho-grid")

    r = sub.add_parser("region", parents=[common], help="eps-capacity region boundary")
    r.add_argument("--eps", type=float, default=0.1)
    r.add_argument("--scheme", choices=("sf", "vlft"), default="sf")
    r.add_argument("--rho-grid-size", type=int, default=1001)

    def const_flags(sp, trials):
        sp.add_argument("--trials", type=int, default=trials)
        sp.add_argument("--g-mode", choices=("estimated", "zero"), default="estimated")
        sp.add_argument("--const-trials", type=int, default=200_000,
                        help="walk samples per constant estimate in estimated mode")

    s = sub.add_parser("simulate", parents=[common], help="stop-feedback scheme Monte Carlo")
    const_flags(s, 1000)
    s.add_argument("--n", type=float, help="inner target length N' (default 200)")
    s.add_argument("--eps", type=float, help="wrap in the Bernoulli abort wrapper at this eps")
    s.add_argument("--inner", choices=("scheme", "ideal"), default="scheme",
                   help="'ideal' replaces the scheme by a length-N' code with error 1/N'")
    s.add_argument("--cap", type=int, default=64)
    s.add_argument("--m1", type=int)
    s.add_argument("--m2", type=int)

    w = sub.add_parser("renewal", parents=[common], help="renewal-constant fits for one walk")
    w.add_argument("--walk", type=int, choices=(1, 2, 3), default=1)
    w.add_argument("--b-grid", default="20,40,80,160")
    w.add_argument("--trials", type=int, default=100_000)
    w.add_argument("--const-trials", type=int, default=200_000)

    m = sub.add_parser("maxstop", parents=[common], help="max of coupled stopping times")
    const_flags(m, 20_000)
    m.add_argument("--n-grid")

    sub.add_parser("selftest", parents=[common], help="closed-form and degenerate-case checks")
    return p


def main(argv: Sequence[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    if getattr(args, "trials", 1) < 1 or args.threads < 1:
        print("vlfmac: error: --trials and --threads must be >= 1", file=sys.stderr)
        return EXIT_USAGE
    try:
        rows, passed = COMMANDS[args.command](args)
    except UsageError as e:
        print(f"vlfmac: error: {e}", file=sys.stderr)
        return EXIT_USAGE
    except Infeasible as e:
        print(f"vlfmac: infeasible: {e}", file=sys.stderr)
        return EXIT_INFEASIBLE
    text = render(rows, args.format)
    if args.out:
        with open(args.out, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)
    return EXIT_OK if passed else EXIT_PROPERTY


if __name__ == "__main__":
    sys.exit(main())
