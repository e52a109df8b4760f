"""Command-line interface.

Exit codes: 0 on success, 1 on usage or input errors, 2 on numerical
failure. Every run writes a JSON manifest (``--manifest``, else
``<out>.manifest.json`` next to the first output, else to stderr).
"""

from __future__ import annotations

import argparse
import json
import platform
import sys
import time
from pathlib import Path

import numpy as np

from . import __version__
from . import io as tio
from .exceptions import ImaginaryResidueTooLarge, NumericalFailure, TensorRTCError
from .experiments import (
    JOBS_ENV,
    SyntheticSpec,
    default_jobs,
    gen_instance,
    lemma1_check,
    lemma4_check,
    psnr,
    rel_error,
    run_phase_grid,
    run_recovery_table,
    summarize_table,
    table1_scenarios,
    table2_scenarios,
)
from .sampling import ObservationMask, incoherence, sample_mask
from .solver import AdmmConfig, default_lambda, solve_rtc, solve_tc, solve_trpca
from .tensor_core import spectral_norm
from .tsvd import tnn, tsvd, tubal_ranks

TABLE_COLUMNS = ["n", "r", "rank", "rel_error", "rho", "gamma", "corruption_std", "trials"]


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        raise UsageError(message)


def _floats(text: str) -> list[float]:
    return [float(t) for t in text.split(",") if t.strip()]


def _ints(text: str) -> list[int]:
    return [int(t) for t in text.split(",") if t.strip()]


def _config(args) -> AdmmConfig:
    return AdmmConfig(lam=args.lam, eps=args.eps, max_iters=args.max_iters)


def _say(msg: str) -> None:
    print(msg, file=sys.stderr)


# --- subcommands -------------------------------------------------------------


def _report_solve(res, args, outputs):
    source = "--lambda" if args.lam is not None else "default"
    print(f"lambda: {res.lam:.10g} ({source})")
    print(f"converged: {res.converged}  iters: {res.iters}  residuals: "
          + " ".join(f"{r:.3e}" for r in res.residuals))
    print(f"tubal_rank(L): {tubal_ranks(res.l).tubal_rank}")
    if args.truth:
        l0 = tio.read_tensor(args.truth)
        print(f"rel_error: {rel_error(res.l, l0):.6e}")
    if not res.converged:
        _say(f"warning: stopped after max_iters={args.max_iters} without converging")
    if args.out:
        tio.write_tensor(args.out, res.l)
        outputs.append(args.out)
    if args.sparse_out:
        tio.write_tensor(args.sparse_out, res.e)
        outputs.append(args.sparse_out)


def _load_problem(args, need_mask: bool):
    x = tio.read_tensor(args.input)
    if args.mask:
        mask = tio.read_mask(args.mask)
        if mask.dims != x.shape:
            raise UsageError(f"mask shape {mask.dims} does not match tensor shape {x.shape}")
    elif need_mask:
        raise UsageError("--mask is required")
    else:
        mask = ObservationMask.full(x.shape)
    return x, mask


def cmd_solve_rtc(args, outputs):
    x, mask = _load_problem(args, need_mask=True)
    _report_solve(solve_rtc(x, mask, _config(args)), args, outputs)


def cmd_solve_tc(args, outputs):
    x, mask = _load_problem(args, need_mask=True)
    _report_solve(solve_tc(x, mask, _config(args)), args, outputs)


def cmd_solve_trpca(args, outputs):
    x, mask = _load_problem(args, need_mask=False)
    _report_solve(solve_trpca(x, _config(args)), args, outputs)


def cmd_synth(args, outputs):
    n3 = args.n3 or args.size
    spec = SyntheticSpec((args.size, args.size, n3), args.rank, args.rho, args.gamma,
                         corruption_std=args.std, seed=args.seed)
    inst = gen_instance(spec)
    prefix = args.out
    paths = [f"{prefix}_l0.t3d", f"{prefix}_x.t3d", f"{prefix}_mask.txt", f"{prefix}_support.txt"]
    tio.write_tensor(paths[0], inst.l0)
    tio.write_tensor(paths[1], inst.x)
    tio.write_mask(paths[2], inst.mask)
    tio.write_mask(paths[3], ObservationMask(inst.support))
    outputs.extend(paths)
    print(f"wrote {', '.join(paths)}")
    print(f"observed: {inst.mask.size}  corrupted: {int(inst.support.sum())}")


def cmd_table(args, outputs):
    seeds = range(args.seed, args.seed + args.seeds)
    if args.preset == "paper-table1":
        scenarios = table1_scenarios(args.size, seeds)
    else:
        scenarios = table2_scenarios(args.size, seeds)
    _say(f"lambda: default 1/sqrt(rho*n*n3) (n={args.size})" if args.lam is None
         else f"lambda: {args.lam:.10g} (--lambda)")
    rows = run_recovery_table(scenarios, _config(args))
    table = rows if args.raw else summarize_table(rows)
    columns = list(rows[0].keys()) if args.raw else TABLE_COLUMNS
    if args.out:
        tio.write_csv(args.out, table, columns)
        outputs.append(args.out)
    else:
        sys.stdout.write(tio.csv_text(table, columns))


def cmd_phase_grid(args, outputs):
    grid = run_phase_grid(
        _ints(args.ranks), _floats(args.gammas), args.rho, n=args.size, n3=args.n3,
        trials=args.trials, success_tol=args.success_tol, base_seed=args.seed,
        jobs=args.jobs, cfg=_config(args),
    )
    _say("lambda: default per trial" if args.lam is None else f"lambda: {args.lam:.10g} (--lambda)")
    sidecar = tio.emit_heatmap(grid, args.out)
    outputs.extend([args.out, str(sidecar)])
    print(f"wrote {args.out} and {sidecar}")
    for a, r in enumerate(grid.ranks):
        print(f"r={r:3d} " + " ".join(f"{v:.2f}" for v in grid.success[a]))


def cmd_lemma_check(args, outputs):
    rows = []
    if args.lemma == 1:
        for rho in _floats(args.rho):
            est = lemma1_check(args.size, args.rank, rho, trials=args.trials, n3=args.n3, seed=args.seed)
            rows += [{"rho": rho, "trial": t, "deviation": v} for t, v in enumerate(est)]
    else:
        rhos = _floats(args.rho)
        vals = lemma4_check(args.size, args.n3 or args.size, rhos, draws=args.trials, seed=args.seed)
        rows += [{"rho": rho, "draw": d, "normalized_norm": v}
                 for rho, draws in zip(rhos, vals) for d, v in enumerate(draws)]
    if args.out:
        tio.write_csv(args.out, rows)
        outputs.append(args.out)
    else:
        sys.stdout.write(tio.csv_text(rows))


def cmd_image_restore(args, outputs):
    img = tio.read_ppm(args.input)
    rng = np.random.default_rng(args.seed)
    mask = sample_mask(img.shape, args.rho, seed=int(rng.integers(2**63)))
    pool = np.flatnonzero(mask.observed)
    hit = rng.choice(pool, size=int(np.floor(args.gamma * pool.size + 0.5)), replace=False)
    noisy = img.copy().ravel()
    noisy[hit] += args.sigma / 255.0 * rng.standard_normal(hit.size)
    x = np.where(mask.observed, noisy.reshape(img.shape), 0.0)
    cfg = _config(args)
    res = solve_rtc(x, mask, cfg)
    print(f"lambda: {res.lam:.10g} ({'--lambda' if args.lam is not None else 'default'})")
    print(f"converged: {res.converged}  iters: {res.iters}")
    restored = np.clip(res.l, 0.0, 1.0)
    try:
        print(f"psnr: {psnr(restored, img):.3f} dB")
    except TensorRTCError:
        print("psnr: inf")
    tio.write_ppm(args.out, restored)
    outputs.append(args.out)


def cmd_tsvd(args, outputs):
    a = tio.read_tensor(args.input)
    f = tsvd(a)
    print(f"dims: {a.shape}  tubal_rank: {tubal_ranks(a).tubal_rank}")
    if args.out:
        for name in ("u", "s", "v"):
            path = f"{args.out}_{name}.t3d"
            tio.write_tensor(path, getattr(f, name))
            outputs.append(path)
        print("wrote " + ", ".join(outputs))


def cmd_info(args, outputs):
    a = tio.read_tensor(args.input)
    report = tubal_ranks(a)
    print("dims: {} x {} x {}".format(*a.shape))
    print(f"tubal_rank: {report.tubal_rank}")
    print(f"multi_rank: {' '.join(map(str, report.multi_rank))}")
    print(f"tnn: {tnn(a):.10g}")
    print(f"spectral_norm: {spectral_norm(a):.10g}")
    print(f"default_lambda (rtc, rho=1): {default_lambda(a.shape, 1.0):.10g}")
    if report.tubal_rank > 0:
        inc = incoherence(a)
        print(f"incoherence: mu_u={inc.mu_u:.6g} mu_v={inc.mu_v:.6g} "
              f"mu_joint={inc.mu_joint:.6g} mu={inc.mu:.6g} (r={inc.rank})")
    else:
        print("incoherence: undefined for the zero tensor")


# --- parser ------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="tensor-rtc", description="Robust low-tubal-rank tensor recovery.")
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    def common(p, solver=True):
        p.add_argument("--seed", type=int, default=0)
        p.add_argument("--manifest", help="where to write the run manifest (JSON)")
        if solver:
            p.add_argument("--lambda", dest="lam", type=float, default=None,
                           help="weight of the l1 term (default: 1/sqrt(rho*max(n1,n2)*n3))")
            p.add_argument("--eps", type=float, default=1e-6)
            p.add_argument("--max-iters", type=int, default=500)
        return p

    for name, fn, needs_mask in (("solve-rtc", cmd_solve_rtc, True),
                                 ("solve-tc", cmd_solve_tc, True),
                                 ("solve-trpca", cmd_solve_trpca, False)):
        p = common(sub.add_parser(name, help=f"run the {name[6:].upper()} solver on a tensor file"))
        p.add_argument("--in", dest="input", required=True)
        if needs_mask:
            p.add_argument("--mask", required=True)
        else:
            p.set_defaults(mask=None)
        p.add_argument("--out")
        p.add_argument("--sparse-out")
        p.add_argument("--truth", help="ground-truth tensor for reporting the relative error")
        p.set_defaults(func=fn)

    p = common(sub.add_parser("synth", help="generate a synthetic instance"), solver=False)
    p.add_argument("--size", type=int, required=True)
    p.add_argument("--n3", type=int)
    p.add_argument("--rank", type=int, required=True)
    p.add_argument("--rho", type=float, default=1.0)
    p.add_argument("--gamma", type=float, default=0.0)
    p.add_argument("--std", type=float, default=1.0, help="corruption standard deviation")
    p.add_argument("--out", required=True, help="output file prefix")
    p.set_defaults(func=cmd_synth)

    p = common(sub.add_parser("table", help="exact-recovery tables on synthetic data"))
    p.add_argument("--preset", choices=["paper-table1", "paper-table2"], default="paper-table1")
    p.add_argument("--size", type=int, default=40)
    p.add_argument("--seeds", type=int, default=3, help="number of seeds per scenario")
    p.add_argument("--raw", action="store_true", help="emit one row per seed instead of medians")
    p.add_argument("--out")
    p.set_defaults(func=cmd_table)

    p = common(sub.add_parser("phase-grid", help="success fractions over (rank, gamma)"))
    p.add_argument("--size", type=int, default=40)
    p.add_argument("--n3", type=int)
    p.add_argument("--rho", type=float, default=0.9)
    p.add_argument("--ranks", default="1,2,3,4,5,6,7,8")
    p.add_argument("--gammas", default="0,0.05,0.1,0.15,0.2,0.25,0.3,0.35")
    p.add_argument("--trials", type=int, default=5)
    p.add_argument("--success-tol", type=float, default=1e-3)
    p.add_argument("--jobs", type=int, default=None, help=f"worker processes (default: ${JOBS_ENV} or 1)")
    p.add_argument("--out", required=True, help="PGM heatmap path; a CSV sidecar is written next to it")
    p.set_defaults(func=cmd_phase_grid)

    p = common(sub.add_parser("lemma-check", help="Monte-Carlo checks of the sampling lemmas"),
               solver=False)
    p.add_argument("--lemma", type=int, choices=[1, 4], default=1)
    p.add_argument("--size", type=int, default=30)
    p.add_argument("--n3", type=int)
    p.add_argument("--rank", type=int, default=2)
    p.add_argument("--rho", default="0.3,0.5,0.8")
    p.add_argument("--trials", type=int, default=10)
    p.add_argument("--out")
    p.set_defaults(func=cmd_lemma_check)

    p = common(sub.add_parser("image-restore", help="corrupt, subsample and restore a PPM image"))
    p.add_argument("--in", dest="input", required=True)
    p.add_argument("--rho", type=float, default=0.9)
    p.add_argument("--gamma", type=float, default=0.1)
    p.add_argument("--sigma", type=float, default=30.0, help="noise std in 8-bit units")
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_image_restore)

    p = common(sub.add_parser("tsvd", help="t-SVD of a tensor file"), solver=False)
    p.add_argument("--in", dest="input", required=True)
    p.add_argument("--out", help="prefix for the U, S, V tensor files")
    p.set_defaults(func=cmd_tsvd)

    p = common(sub.add_parser("info", help="tubal rank, TNN and incoherence of a tensor file"),
               solver=False)
    p.add_argument("--in", dest="input", required=True)
    p.set_defaults(func=cmd_info)
    return parser


def _manifest(args, outputs, wall_time, status):
    params = {k: v for k, v in vars(args).items() if k not in ("func", "manifest")}
    return {
        "subcommand": args.command,
        "params": params,
        "seed": getattr(args, "seed", None),
        "jobs_env": JOBS_ENV,
        "version": __version__,
        "python": platform.python_version(),
        "numpy": np.__version__,
        "status": status,
        "wall_time": wall_time,
        "outputs": {p: tio.sha256_file(p) for p in outputs if Path(p).exists()},
    }


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except UsageError as exc:
        _say(f"error: {exc}")
        return 1
    if getattr(args, "jobs", 1) is None:
        args.jobs = default_jobs()

    outputs: list[str] = []
    start = time.perf_counter()
    code = 0
    try:
        args.func(args, outputs)
    except UsageError as exc:
        _say(f"error: {exc}")
        code = 1
    except (NumericalFailure, ImaginaryResidueTooLarge) as exc:
        _say(f"numerical failure: {exc}")
        code = 2
    except (TensorRTCError, ValueError, OSError) as exc:
        _say(f"error: {exc}")
        code = 1

    manifest = _manifest(args, outputs, time.perf_counter() - start, "ok" if code == 0 else f"exit {code}")
    text = json.dumps(manifest, indent=2, default=str) + "\n"
    target = args.manifest or (f"{outputs[0]}.manifest.json" if outputs else None)
    if target:
        tio.atomic_write(target, text.encode())
    else:
        sys.stderr.write(text)
    return code


if __name__ == "__main__":
    sys.exit(main())
