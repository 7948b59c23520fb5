"""Command line driver: limits, single trials, m/m* sweeps, runtime benchmarks
and haplotype-style simulations. Every data row is CSV.

Exit codes: 0 success, 1 internal error, 2 usage error.
"""

from __future__ import annotations

import argparse
import csv
import io
import math
import statistics
import sys
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .limits import (
    LimitSpec,
    check_weight_ratio,
    divergence,
    hellinger_exponent,
    kl_half_theta,
    m_star,
)
from .recover import (
    EXPANDING,
    STITCHING,
    RecoveryConfig,
    spectral_expanding,
    spectral_expanding_multilink,
    spectral_stitching,
    spectral_stitching_multilink,
)
from .sampling import (
    draw_fragment_samples,
    draw_hyper_samples,
    draw_samples,
    draw_weighted_samples,
    hamming_mod_flip,
    load_profile,
    poisson_profile,
    random_labeling,
    trial_seed,
)
from .topology import Family, build_hyper_topology, build_topology

CSV_FIELDS = ["family", "n", "r", "theta", "p", "L", "algo", "m_ratio", "m", "trial", "seed",
              "success", "hamming", "switch_err", "iters", "runtime_ms"]
LIMIT_FIELDS = ["family", "n", "r", "theta_or_p", "L", "dstar", "hellinger", "mstar"]

PAIRWISE_ALGOS = {EXPANDING: spectral_expanding, STITCHING: spectral_stitching}
MULTILINK_ALGOS = {EXPANDING: spectral_expanding_multilink, STITCHING: spectral_stitching_multilink}


class UsageError(ValueError):
    pass


class LengthMismatch(ValueError):
    pass


def switch_error(estimate, truth) -> float:
    """Fraction of adjacent positions where the flip-aligned estimate toggles
    between agreeing and disagreeing with the truth."""
    est = np.asarray(estimate, dtype=np.uint8)
    truth = np.asarray(truth, dtype=np.uint8)
    if est.shape != truth.shape:
        raise LengthMismatch("estimate and truth differ in length")
    if est.size < 2:
        raise LengthMismatch("switch error needs at least two positions")
    if np.count_nonzero(est != truth) > est.size / 2:
        est = est ^ 1
    agree = est == truth
    return float(np.count_nonzero(agree[1:] != agree[:-1])) / (est.size - 1)


@dataclass(frozen=True)
class ExperimentPlan:
    family: str
    n: int
    r: int
    theta: float | None = None
    L: int | None = None
    p: float | None = None
    algo: str = EXPANDING
    m_ratios: tuple = (1.0,)
    trials: int = 1
    seed: int = 0
    weight_profile: str = "uniform"
    w0: float | None = None
    w1: float | None = None
    window: int | None = None
    matrix_mode: str = "first"
    timing: bool = True

    def __post_init__(self):
        if self.trials < 1:
            raise UsageError("trials must be >= 1")
        if not self.m_ratios or any(not x > 0 for x in self.m_ratios):
            raise UsageError("m ratios must be strictly positive")
        if (self.theta is None) == (self.L is None and self.p is None):
            raise UsageError("give either --theta or --multilink L with --p")
        if self.L is not None and self.p is None:
            raise UsageError("--multilink needs --p")

    @property
    def multilink(self) -> bool:
        return self.L is not None

    def topology(self):
        weights = None
        if Family.parse(self.family) is Family.SMALLWORLD:
            w1 = 1.0 if self.w1 is None else self.w1
            weights = (self.r / self.n * w1 if self.w0 is None else self.w0, w1)
        return build_topology(self.family, self.n, self.r, smallworld_weights=weights)

    def limit_spec(self) -> LimitSpec:
        if self.multilink:
            return LimitSpec(self.family, self.n, self.r, L=self.L, p=self.p)
        return LimitSpec(self.family, self.n, self.r, theta=self.theta)


@dataclass
class TrialRecord:
    family: str
    n: int
    r: int
    theta: float | None
    p: float | None
    L: int | None
    algo: str
    m_ratio: float
    m: float
    trial: int
    seed: int
    success: bool
    hamming: int
    switch_err: float
    iters: int
    runtime_ms: float | None = None
    changes: list = field(default_factory=list, repr=False)

    def row(self) -> dict:
        return {
            "family": self.family, "n": self.n, "r": self.r,
            "theta": _fmt(self.theta), "p": _fmt(self.p), "L": "" if self.L is None else self.L,
            "algo": self.algo, "m_ratio": _fmt(self.m_ratio), "m": f"{self.m:.1f}",
            "trial": self.trial, "seed": self.seed, "success": int(self.success),
            "hamming": self.hamming, "switch_err": f"{self.switch_err:.6f}", "iters": self.iters,
            "runtime_ms": "" if self.runtime_ms is None else f"{self.runtime_ms:.1f}",
        }


def _fmt(x):
    return "" if x is None else f"{x:.6g}"


def _profile(plan: ExperimentPlan):
    if plan.weight_profile == "uniform":
        return None
    if plan.weight_profile == "poisson-halfr":
        return poisson_profile(plan.r / 2, plan.r)
    if plan.weight_profile.startswith("file:"):
        return load_profile(plan.weight_profile[5:])
    raise UsageError(f"unknown weight profile {plan.weight_profile!r}")


def run_trial(plan: ExperimentPlan, m_ratio: float, trial: int, key: tuple = (0,)) -> TrialRecord:
    """One Monte Carlo run: planted labels, samples at ``m_ratio * m*``, recovery."""
    seed = trial_seed(plan.seed, *key, trial)
    rng = np.random.default_rng(seed)
    m = m_ratio * m_star(plan.limit_spec())
    config = RecoveryConfig(algorithm=plan.algo, window=plan.window, matrix_mode=plan.matrix_mode)
    if plan.multilink:
        if Family.parse(plan.family) is not Family.RING:
            raise UsageError("multi-linked trials are defined on rings")
        hyper = build_hyper_topology(plan.n, plan.r, plan.L)
        top = hyper.base
        truth = random_labeling(plan.n, rng)
        samples = draw_hyper_samples(hyper, truth.bits, plan.p, m, rng)
        algo = MULTILINK_ALGOS[plan.algo]
    else:
        top = plan.topology()
        truth = random_labeling(plan.n, rng)
        profile = _profile(plan)
        if profile is None:
            samples = draw_samples(top, truth.bits, plan.theta, m, rng)
        else:
            check_weight_ratio(profile)
            samples = draw_weighted_samples(top, truth.bits, plan.theta, m, profile, rng)
        algo = PAIRWISE_ALGOS[plan.algo]
    start = time.perf_counter()
    result = algo(top, samples, config, rng)
    elapsed = (time.perf_counter() - start) * 1e3
    ham = hamming_mod_flip(result.labeling.bits, truth.bits)
    return TrialRecord(
        plan.family, plan.n, top.r, plan.theta, plan.p, plan.L, plan.algo, m_ratio, m, trial, seed,
        ham == 0, ham, switch_error(result.labeling.bits, truth.bits), result.iterations_used,
        elapsed if plan.timing else None, result.per_iteration_changes,
    )


def _run_task(args):
    plan, ratio, trial, key = args
    return run_trial(plan, ratio, trial, key)


def _map(tasks, jobs):
    if jobs <= 1:
        return [_run_task(t) for t in tasks]
    with ProcessPoolExecutor(max_workers=jobs) as pool:
        return list(pool.map(_run_task, tasks))


def summary_row(records) -> dict:
    first = records[0]
    row = first.row()
    row.update({
        "trial": "summary", "seed": "",
        "success": f"{np.mean([r.success for r in records]):.3f}",
        "hamming": f"{np.mean([r.hamming for r in records]):.3f}",
        "switch_err": f"{np.mean([r.switch_err for r in records]):.6f}",
        "iters": f"{statistics.median([r.iters for r in records]):g}",
        "runtime_ms": "" if first.runtime_ms is None else f"{np.mean([r.runtime_ms for r in records]):.1f}",
    })
    return row


def run_sweep(plan: ExperimentPlan, jobs: int = 1) -> list[dict]:
    """Rows for every (ratio, trial) followed by one summary row per ratio."""
    tasks = [(plan, ratio, t, (i,)) for i, ratio in enumerate(plan.m_ratios) for t in range(plan.trials)]
    records = _map(tasks, jobs)
    rows = []
    for i in range(len(plan.m_ratios)):
        chunk = records[i * plan.trials : (i + 1) * plan.trials]
        rows.extend(r.row() for r in chunk)
        rows.append(summary_row(chunk))
    return rows


def limits_row(spec: LimitSpec) -> dict:
    dstar = divergence(spec)
    return {
        "family": spec.family.value, "n": spec.n, "r": "" if spec.r is None else spec.r,
        "theta_or_p": f"{spec.theta if spec.theta is not None else spec.p:.6g}",
        "L": "" if spec.L is None else spec.L,
        "dstar": f"{dstar:.12g}", "hellinger": f"{hellinger_exponent(dstar):.12g}",
        "mstar": f"{m_star(spec):.12g}",
    }


def run_haplosim(mode, n, m_ratio, trials, seed, p=0.01, algo=EXPANDING, fragment=100, reads=9.0,
                 timing=True) -> list[dict]:
    """Haplotype-phasing style simulations on a line of SNPs.

    ``matepair``: pairwise reads whose SNP gap follows Poisson(3.5) truncated
    to 1..9, parity error ``2p(1-p)``. ``tenx``: linked-read fragments.
    """
    theta = 2 * p * (1 - p)
    records = []
    for t in range(trials):
        s = trial_seed(seed, 0, t)
        rng = np.random.default_rng(s)
        truth = random_labeling(n, rng)
        if mode == "matepair":
            top = build_topology(Family.LINE, n, 9)
            m = m_ratio * m_star(LimitSpec(Family.LINE, n, 9, theta=theta))
            samples = draw_weighted_samples(top, truth.bits, theta, m, poisson_profile(3.5, 9), rng)
            fn = PAIRWISE_ALGOS[algo]
            row_theta, row_p = theta, p
        elif mode == "tenx":
            top = build_topology(Family.LINE, n, min(fragment - 1, n - 1))
            m = m_ratio * n * math.log(n) / (reads * hellinger_exponent(kl_half_theta(p)))
            samples = draw_fragment_samples(top, truth.bits, p, m, fragment, reads, rng)
            fn = MULTILINK_ALGOS[algo]
            row_theta, row_p = None, p
        else:
            raise UsageError(f"unknown haplosim mode {mode!r}")
        start = time.perf_counter()
        result = fn(top, samples, RecoveryConfig(algorithm=algo), rng)
        elapsed = (time.perf_counter() - start) * 1e3
        ham = hamming_mod_flip(result.labeling.bits, truth.bits)
        records.append(TrialRecord(
            "line", n, top.r, row_theta, row_p, None, algo, m_ratio, m, t, s, ham == 0, ham,
            switch_error(result.labeling.bits, truth.bits), result.iterations_used,
            elapsed if timing else None))
    return [r.row() for r in records] + [summary_row(records)]


def run_bench(n, r_exps, m_ratio, theta=0.1, family="ring", algo=EXPANDING, trials=1, seed=0) -> list[dict]:
    rows = []
    for i, e in enumerate(r_exps):
        r = max(1, round(n**e))
        plan = ExperimentPlan(family, n, r, theta=theta, algo=algo, m_ratios=(m_ratio,), trials=trials, seed=seed)
        for t in range(trials):
            rows.append(run_trial(plan, m_ratio, t, (i,)).row())
    return rows


def write_rows(rows, fields, fh) -> None:
    writer = csv.DictWriter(fh, fieldnames=fields, lineterminator="\n")
    writer.writeheader()
    writer.writerows(rows)


def rows_to_csv(rows, fields=CSV_FIELDS) -> str:
    buf = io.StringIO()
    write_rows(rows, fields, buf)
    return buf.getvalue()


# -- command line ---------------------------------------------------------------------------------


def _positive_float(text):
    val = float(text)
    if not val > 0:
        raise argparse.ArgumentTypeError(f"must be positive, got {text}")
    return val


def _ratio_list(text):
    try:
        vals = tuple(float(x) for x in str(text).split(",") if x.strip())
    except ValueError:
        raise argparse.ArgumentTypeError(f"not a comma separated list: {text}") from None
    if not vals or any(not v > 0 for v in vals):
        raise argparse.ArgumentTypeError("ratios must be strictly positive")
    return vals


def _add_model_args(sp, with_ratio=True):
    sp.add_argument("--family", choices=[f.value for f in Family], default="ring")
    sp.add_argument("--n", type=int)
    sp.add_argument("--r", type=int)
    sp.add_argument("--theta", type=float)
    sp.add_argument("--multilink", dest="L", type=int, metavar="L")
    sp.add_argument("--p", type=float)
    sp.add_argument("--algo", choices=[EXPANDING, STITCHING], default=EXPANDING)
    sp.add_argument("--weight-profile", default="uniform", help="uniform | poisson-halfr | file:PATH")
    sp.add_argument("--w0", type=float)
    sp.add_argument("--w1", type=float)
    sp.add_argument("--window", type=int)
    sp.add_argument("--matrix-mode", choices=["first", "aggregate"], default="first")
    sp.add_argument("--seed", type=int, default=0)
    if with_ratio:
        sp.add_argument("--m-ratio", type=_positive_float, default=1.5)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="locrec", description=__doc__.splitlines()[0])
    parser.add_argument("--config", help="key = value file; command line flags take precedence")
    parser.add_argument("--out", help="write CSV here instead of standard output")
    sub = parser.add_subparsers(dest="command", required=True)

    sp = sub.add_parser("limits", help="information limit m* as one CSV row")
    sp.add_argument("--family", choices=[f.value for f in Family], default="ring")
    sp.add_argument("--n", type=int)
    sp.add_argument("--r", type=int)
    sp.add_argument("--theta", type=float)
    sp.add_argument("--multilink", dest="L", type=int, metavar="L")
    sp.add_argument("--p", type=float)
    sp.add_argument("--beta", type=float)
    sp.add_argument("--gamma", type=float)

    sp = sub.add_parser("trial", help="one Monte Carlo trial")
    _add_model_args(sp)
    sp.add_argument("--no-timing", dest="timing", action="store_false")

    sp = sub.add_parser("sweep", help="success rate versus m/m*")
    _add_model_args(sp, with_ratio=False)
    sp.add_argument("--m-ratios", type=_ratio_list, default=(0.5, 1.0, 1.5, 2.0))
    sp.add_argument("--trials", type=int, default=10)
    sp.add_argument("--jobs", type=int, default=1)
    sp.add_argument("--timing", action="store_true", help="fill runtime_ms (output is then not reproducible)")

    sp = sub.add_parser("bench", help="runtime versus locality radius r = n^e")
    sp.add_argument("--family", choices=[f.value for f in Family], default="ring")
    sp.add_argument("--n", type=int, default=100_000)
    sp.add_argument("--r-exp", type=_ratio_list, default=(0.2, 0.25, 0.5, 0.75))
    sp.add_argument("--m-ratio", type=_positive_float, default=1.5)
    sp.add_argument("--theta", type=float, default=0.1)
    sp.add_argument("--algo", choices=[EXPANDING, STITCHING], default=EXPANDING)
    sp.add_argument("--trials", type=int, default=1)
    sp.add_argument("--seed", type=int, default=0)

    sp = sub.add_parser("haplosim", help="mate-pair or linked-read phasing simulation")
    sp.add_argument("--mode", choices=["matepair", "tenx"], default="matepair")
    sp.add_argument("--n", type=int, default=10_000)
    sp.add_argument("--m-ratio", type=_positive_float, default=1.5)
    sp.add_argument("--trials", type=int, default=10)
    sp.add_argument("--p", type=float, default=0.01)
    sp.add_argument("--algo", choices=[EXPANDING, STITCHING], default=EXPANDING)
    sp.add_argument("--fragment", type=int, default=100)
    sp.add_argument("--reads", type=float, default=9.0)
    sp.add_argument("--seed", type=int, default=0)
    sp.add_argument("--no-timing", dest="timing", action="store_false")

    sub.add_parser("selftest", help="run the numerical oracle checks")
    return parser


def read_config(path) -> dict:
    out = {}
    with open(path) as fh:
        for line in fh:
            line = line.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise UsageError(f"bad config line: {line!r}")
            key, val = (s.strip() for s in line.split("=", 1))
            out[key.replace("-", "_")] = val
    return out


def _apply_config(parser, argv, args):
    cfg = read_config(args.config)
    sp = parser._subparsers._group_actions[0].choices[args.command]
    known = {a.dest: a for a in sp._actions}
    defaults = {}
    for key, val in cfg.items():
        if key == "multilink":
            key = "L"
        if key not in known:
            raise UsageError(f"unknown config key {key!r} for {args.command}")
        action = known[key]
        if isinstance(action, (argparse._StoreTrueAction, argparse._StoreFalseAction)):
            defaults[key] = val.lower() in ("1", "true", "yes", "on")
        else:
            defaults[key] = val
    sp.set_defaults(**defaults)
    return parser.parse_args(argv)


def _plan_from_args(args, ratios) -> ExperimentPlan:
    if args.n is None or args.r is None:
        raise UsageError("--n and --r are required")
    return ExperimentPlan(
        family=args.family, n=args.n, r=args.r, theta=args.theta, L=args.L, p=args.p,
        algo=args.algo, m_ratios=ratios, trials=getattr(args, "trials", 1), seed=args.seed,
        weight_profile=args.weight_profile, w0=args.w0, w1=args.w1, window=args.window,
        matrix_mode=args.matrix_mode, timing=args.timing,
    )


def _dispatch(args):
    if args.command == "limits":
        if args.n is None:
            raise UsageError("--n is required")
        spec = LimitSpec(args.family, args.n, args.r, theta=args.theta, L=args.L, p=args.p,
                         beta=args.beta, gamma=args.gamma)
        return [limits_row(spec)], LIMIT_FIELDS
    if args.command == "trial":
        plan = _plan_from_args(args, (args.m_ratio,))
        return [run_trial(plan, args.m_ratio, 0).row()], CSV_FIELDS
    if args.command == "sweep":
        plan = _plan_from_args(args, args.m_ratios)
        return run_sweep(plan, jobs=args.jobs), CSV_FIELDS
    if args.command == "bench":
        return run_bench(args.n, args.r_exp, args.m_ratio, args.theta, args.family, args.algo,
                         args.trials, args.seed), CSV_FIELDS
    if args.command == "haplosim":
        return run_haplosim(args.mode, args.n, args.m_ratio, args.trials, args.seed, args.p, args.algo,
                            args.fragment, args.reads, args.timing), CSV_FIELDS
    raise UsageError(f"unknown command {args.command}")


def main(argv=None) -> int:
    parser = build_parser()
    argv = sys.argv[1:] if argv is None else list(argv)
    try:
        args = parser.parse_args(argv)
        if args.config:
            args = _apply_config(parser, argv, args)
        if args.command == "selftest":
            from .oracles import run_selftest

            reports = run_selftest()
            for rep in reports:
                print(rep)
            return 0 if all(r.passed for r in reports) else 1
        rows, fields = _dispatch(args)
    except SystemExit as exc:
        # argparse reports usage problems (and --help) this way
        return int(exc.code or 0)
    except UsageError as exc:
        print(f"locrec: error: {exc}", file=sys.stderr)
        return 2
    except ValueError as exc:
        # invalid model parameters are reported as usage errors
        print(f"locrec: error: {exc}", file=sys.stderr)
        return 2
    except Exception as exc:  # noqa: BLE001
        print(f"locrec: internal error: {exc!r}", file=sys.stderr)
        return 1
    if args.out:
        with open(args.out, "w", newline="") as fh:
            write_rows(rows, fields, fh)
    else:
        write_rows(rows, fields, sys.stdout)
    return 0


if __name__ == "__main__":
    sys.exit(main())
