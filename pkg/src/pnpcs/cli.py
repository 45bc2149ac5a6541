"""Command-line entry point.

Subcommands: bounds | denoiser | solve | campaign | concentration | ecg.
Exit codes: 0 success, 2 bad configuration or usage, 3 infeasible instance,
4 internal solver failure.  Every run that writes outputs also writes a
manifest (full configuration, seeds, versions) beside them, and rerunning
from a manifest reproduces the outputs byte for byte.

The CLI is a thin client over the library; the same operations are exposed
over HTTP by `pnpcs.api.app` for multi-client use.
"""

from __future__ import annotations

import argparse
import json
import platform
import sys
from pathlib import Path

import numpy as np

from . import __version__, bounds
from .denoiser import GuideKernelConfig, build_dsg_nlm, load_denoiser, truncate_rank
from .experiments import (
    CampaignConfig,
    read_config,
    run_concentration,
    run_ecg,
    run_recovery_campaign,
    run_robust,
)
from .recovery import pnp_ista, solve_exact, solve_robust_admm, solve_robust_direct
from .sensing import make_gaussian, make_rademacher, make_structured
from .signals import load_signal_csv, scanline, synthetic_ecg

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_INFEASIBLE = 3
EXIT_SOLVER = 4


def _fail(kind: str, message: str) -> None:
    print(f"error: {kind}: {message}", file=sys.stderr)


def _write_manifest_lines(path: Path, settings: dict) -> None:
    lines = [
        "# run manifest",
        f"# pnpcs_version={__version__}",
        f"# numpy_version={np.__version__}",
        f"# python_version={platform.python_version()}",
    ]
    lines += [f"{k}={v}" for k, v in sorted(settings.items())]
    path.write_text("\n".join(lines) + "\n")


def _parse_int_list(text: str) -> list[int]:
    return [int(tok) for tok in text.split(",") if tok.strip()]


# -- bounds ------------------------------------------------------------------


def _cmd_bounds(args) -> int:
    r_values = _parse_int_list(args.r)
    if args.thresholds_n is not None:
        spec = bounds.BoundSpec(
            ensemble=args.ensemble, r=r_values[0], beta=args.beta, n=args.thresholds_n
        )
        result = bounds.proposition_thresholds(spec)
        if result is None:
            _fail("infeasible", "no thresholds: n <= bound floor at (1,1)")
            return EXIT_INFEASIBLE
        print(f"beta0={result.beta0:.9g}")
        print(f"epsilon0={result.epsilon0:.9g}")
        if args.beta1 is not None:
            eps1 = bounds.epsilon_for_beta(spec, args.beta1)
            print(f"epsilon1={eps1:.9g}")
        return EXIT_OK

    rows = []
    for r in r_values:
        spec = bounds.BoundSpec(
            ensemble=args.ensemble, r=r, beta=args.beta, epsilon=args.epsilon
        )
        if args.kind == "exact":
            value = bounds.exact_measurement_bound(spec)
            eps_text = ""
        else:
            if args.epsilon is None:
                raise ValueError("--epsilon is required for robust bounds")
            value = bounds.robust_measurement_bound(spec)
            eps_text = f"{args.epsilon:.12g}"
        rows.append((args.ensemble, r, args.beta, eps_text, value))

    if len(rows) == 1 and not args.table and args.out is None:
        print(rows[0][4])
        return EXIT_OK
    lines = ["ensemble,r,beta,epsilon,m_bound"]
    lines += [f"{e},{r},{b:.12g},{eps},{v}" for e, r, b, eps, v in rows]
    text = "\n".join(lines) + "\n"
    if args.out is None:
        sys.stdout.write(text)
    else:
        out = Path(args.out)
        out.write_text(text)
        _write_manifest_lines(
            out.with_suffix(out.suffix + ".manifest.txt"),
            {
                "subcommand": "bounds",
                "ensemble": args.ensemble,
                "beta": args.beta,
                "epsilon": args.epsilon if args.epsilon is not None else "",
                "kind": args.kind,
                "r": args.r,
            },
        )
    return EXIT_OK


# -- denoiser ----------------------------------------------------------------


def _load_guide_arg(args, n: int | None = None) -> np.ndarray:
    if args.guide is not None:
        return load_signal_csv(args.guide)
    length = n if n is not None else args.n
    if args.synthetic == "scanline":
        return scanline(length)
    return synthetic_ecg(length)


def _kernel_from_args(args, n: int) -> GuideKernelConfig:
    search = args.search_radius if args.search_radius >= 0 else n
    return GuideKernelConfig(
        patch_radius=args.patch_radius,
        search_radius=search,
        bandwidth=args.bandwidth,
        sinkhorn_iters=args.sinkhorn_iters,
        sinkhorn_tol=args.sinkhorn_tol,
    )


def _cmd_denoiser(args) -> int:
    guide = _load_guide_arg(args)
    d = build_dsg_nlm(guide, _kernel_from_args(args, guide.size))
    if args.rank is not None:
        d = truncate_rank(d, args.rank)
    print(d.summary())
    if args.out is not None:
        out = Path(args.out)
        d.save(out)
        _write_manifest_lines(
            Path(str(out) + ".manifest.txt"),
            {
                "subcommand": "denoiser",
                "guide": args.guide or f"synthetic:{args.synthetic}",
                "n": guide.size,
                "patch_radius": args.patch_radius,
                "search_radius": args.search_radius,
                "bandwidth": args.bandwidth,
                "rank": args.rank if args.rank is not None else "",
            },
        )
    return EXIT_OK


# -- solve -------------------------------------------------------------------


def _cmd_solve(args) -> int:
    if args.denoiser is not None:
        d = load_denoiser(args.denoiser)
        guide = _load_guide_arg(args, n=d.n)
        if guide.size != d.n:
            raise ValueError(f"guide length {guide.size} does not match denoiser n={d.n}")
    else:
        guide = _load_guide_arg(args)
        d = build_dsg_nlm(guide, _kernel_from_args(args, guide.size))
        if args.rank is not None:
            d = truncate_rank(d, args.rank)
    n = d.n

    if args.op_kind == "gaussian":
        op = make_gaussian(args.m, n, args.seed)
    elif args.op_kind == "rademacher":
        op = make_rademacher(args.m, n, args.seed)
    else:
        op = make_structured(args.m, n, args.transform, args.seed)

    xi = guide if args.off_range else d.apply(guide)
    rng = np.random.default_rng(args.noise_seed)
    eta = rng.normal(0.0, args.noise_std, op.out_dim) if args.noise_std > 0 else np.zeros(op.out_dim)
    b = op.apply(xi) + eta
    delta = args.delta if args.delta is not None else args.delta_rule * float(np.linalg.norm(eta))

    if args.solver == "direct":
        sol = solve_robust_direct(op, b, delta, d) if delta > 0 else solve_exact(op, b, d)
    elif args.solver == "admm":
        sol = solve_robust_admm(op, b, delta, d, iters=args.iters)
    else:
        x = pnp_ista(op, b, d, iters=args.iters)
        sol = None

    if sol is None:
        record = {
            "status": "optimal",
            "relative_error": float(np.linalg.norm(x - xi) / max(np.linalg.norm(xi), 1e-300)),
        }
    else:
        record = sol.to_record(ground_truth=xi)
    text = json.dumps(record, indent=2, sort_keys=True)
    print(text)
    if args.out is not None:
        Path(args.out).write_text(text + "\n")
        _write_manifest_lines(
            Path(args.out + ".manifest.txt"),
            {
                "subcommand": "solve",
                "op_kind": args.op_kind,
                "m": args.m,
                "seed": args.seed,
                "noise_std": args.noise_std,
                "noise_seed": args.noise_seed,
                "delta_rule": args.delta_rule,
                "solver": args.solver,
            },
        )
    if sol is not None and sol.status == "infeasible":
        _fail("infeasible", "measurement ball does not intersect the denoiser range image")
        return EXIT_INFEASIBLE
    if sol is not None and sol.status == "max_iters":
        _fail("solver", "solver did not converge")
        return EXIT_SOLVER
    return EXIT_OK


# -- campaigns ---------------------------------------------------------------


def _cmd_campaign(args) -> int:
    overrides = {}
    for item in args.set or []:
        if "=" not in item:
            raise ValueError(f"--set expects key=value, got {item!r}")
        key, _, value = item.partition("=")
        overrides[key.strip()] = value.strip()
    if args.workers is not None:
        overrides["workers"] = str(args.workers)
    cfg = read_config(args.config, overrides)
    out_dir = Path(args.out)
    if cfg.kind in ("phase_gaussian", "exact_rademacher", "structured"):
        grid = run_recovery_campaign(cfg, out_dir)
        for r in grid.r_values:
            curve = ",".join(f"{m}:{p:.3g}" for m, p in grid.curve(r))
            print(f"r={r} probability by m: {curve}")
    elif cfg.kind == "robust":
        for report in run_robust(cfg, out_dir):
            print(
                f"r={report.r} m={report.m} held={report.held}/{report.trials} "
                f"mean_ratio={report.mean_ratio:.4g}"
            )
    elif cfg.kind == "concentration":
        for study in run_concentration(cfg, out_dir):
            print(
                f"{study.study} {study.ensemble} m={study.m} eps={study.epsilon:.3g} "
                f"freq={study.frequency:.5g} bound={study.bound:.5g} dominated={study.dominated}"
            )
    elif cfg.kind == "ecg":
        report = run_ecg(cfg, out_dir, smoke=bool(int(cfg.extras.get("smoke", "0"))))
        print(f"snr_pnp_db={report.snr_pnp:.6g} snr_lasso_db={report.snr_lasso:.6g}")
    else:
        raise ValueError(f"unknown campaign kind {cfg.kind!r}")
    print(f"outputs: {out_dir}")
    return EXIT_OK


def _cmd_concentration(args) -> int:
    cfg = CampaignConfig(kind="concentration", draws=args.draws, master_seed=args.seed)
    for study in run_concentration(cfg, Path(args.out)):
        print(
            f"{study.study} {study.ensemble} m={study.m} eps={study.epsilon:.3g} "
            f"freq={study.frequency:.5g} bound={study.bound:.5g} dominated={study.dominated}"
        )
    return EXIT_OK


def _cmd_ecg(args) -> int:
    extras = {"cosamp_sparsity": str(args.sparsity), "cosamp_iters": str(args.cosamp_iters)}
    cfg = CampaignConfig(
        kind="ecg",
        n=512,
        r_values=(args.rank,),
        m_values=(args.m,),
        trials=1,
        master_seed=args.seed,
        noise_std=args.noise_std,
        delta_rule=args.delta_mult,
        guide=args.signal if args.signal is not None else "ecg",
        patch_radius=args.patch_radius,
        search_radius=args.search_radius,
        bandwidth=args.bandwidth,
        extras=extras,
    )
    report = run_ecg(cfg, Path(args.out), resample=args.resample, smoke=args.smoke)
    print(f"snr_surrogate_db={report.snr_surrogate:.6g}")
    print(f"snr_pnp_db={report.snr_pnp:.6g}")
    print(f"snr_lasso_db={report.snr_lasso:.6g}")
    if report.solver_status == "infeasible":
        _fail("infeasible", "recovery program infeasible at the chosen delta")
        return EXIT_INFEASIBLE
    return EXIT_OK


# -- parser ------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="pnpcs",
        description="Plug-and-play compressed sensing: denoisers, solvers, bounds, campaigns.",
    )
    parser.add_argument("--version", action="version", version=f"pnpcs {__version__}")
    sub = parser.add_subparsers(dest="subcommand", required=True)

    p = sub.add_parser("bounds", help="sample-complexity bound calculators")
    p.add_argument("--ensemble", choices=("gaussian", "rademacher"), required=True)
    p.add_argument("--beta", type=float, required=True)
    p.add_argument("--r", required=True, help="rank, or comma-separated ranks")
    p.add_argument("--kind", choices=("exact", "robust"), default="exact")
    p.add_argument("--epsilon", type=float, default=None)
    p.add_argument("--table", action="store_true", help="always print the CSV table")
    p.add_argument("--thresholds-n", type=int, default=None, help="solve L(b0,1)=L(1,e0)=n")
    p.add_argument("--beta1", type=float, default=None)
    p.add_argument("--out", default=None)
    p.set_defaults(handler=_cmd_bounds)

    p = sub.add_parser("denoiser", help="build and inspect a denoiser")
    p.add_argument("--guide", default=None, help="CSV signal, one sample per line")
    p.add_argument("--synthetic", choices=("scanline", "ecg"), default="scanline")
    p.add_argument("--n", type=int, default=128)
    p.add_argument("--patch-radius", type=int, default=2)
    p.add_argument("--search-radius", type=int, default=-1)
    p.add_argument("--bandwidth", type=float, default=0.3)
    p.add_argument("--sinkhorn-iters", type=int, default=2000)
    p.add_argument("--sinkhorn-tol", type=float, default=1e-10)
    p.add_argument("--rank", type=int, default=None)
    p.add_argument("--out", default=None, help="write binary container here")
    p.set_defaults(handler=_cmd_denoiser)

    p = sub.add_parser("solve", help="solve one seeded recovery instance")
    p.add_argument("--denoiser", default=None, help="load a saved denoiser container")
    p.add_argument("--guide", default=None)
    p.add_argument("--synthetic", choices=("scanline", "ecg"), default="scanline")
    p.add_argument("--n", type=int, default=128)
    p.add_argument("--rank", type=int, default=None)
    p.add_argument("--patch-radius", type=int, default=2)
    p.add_argument("--search-radius", type=int, default=-1)
    p.add_argument("--bandwidth", type=float, default=0.3)
    p.add_argument("--sinkhorn-iters", type=int, default=2000)
    p.add_argument("--sinkhorn-tol", type=float, default=1e-10)
    p.add_argument("--op-kind", choices=("gaussian", "rademacher", "structured"), default="gaussian")
    p.add_argument("--transform", choices=("walsh_hadamard", "dft"), default="walsh_hadamard")
    p.add_argument("--m", type=int, required=True)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--noise-std", type=float, default=0.0)
    p.add_argument("--noise-seed", type=int, default=1)
    p.add_argument("--delta", type=float, default=None)
    p.add_argument("--delta-rule", type=float, default=0.0)
    p.add_argument("--off-range", action="store_true", help="ground truth is the raw guide")
    p.add_argument("--solver", choices=("direct", "admm", "ista"), default="direct")
    p.add_argument("--iters", type=int, default=400, help="admm/ista iteration count")
    p.add_argument("--out", default=None, help="write the JSON solution record here")
    p.set_defaults(handler=_cmd_solve)

    p = sub.add_parser("campaign", help="run a Monte Carlo campaign from a config file")
    p.add_argument("--config", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--set", action="append", help="override config keys: --set key=value")
    p.add_argument("--workers", type=int, default=None)
    p.set_defaults(handler=_cmd_campaign)

    p = sub.add_parser("concentration", help="norm-concentration empirical checks")
    p.add_argument("--draws", type=int, default=10000)
    p.add_argument("--seed", type=int, default=7)
    p.add_argument("--out", required=True)
    p.set_defaults(handler=_cmd_concentration)

    p = sub.add_parser("ecg", help="ECG-style end-to-end recovery pipeline")
    p.add_argument("--signal", default=None, help="CSV signal; defaults to the synthetic trace")
    p.add_argument("--out", required=True)
    p.add_argument("--m", type=int, default=150)
    p.add_argument("--rank", type=int, default=150)
    p.add_argument("--noise-std", type=float, default=5e-3)
    p.add_argument("--delta-mult", type=float, default=2.0)
    p.add_argument("--sparsity", type=int, default=30)
    p.add_argument("--cosamp-iters", type=int, default=20)
    p.add_argument("--seed", type=int, default=7)
    p.add_argument("--patch-radius", type=int, default=4)
    p.add_argument("--search-radius", type=int, default=-1)
    p.add_argument("--bandwidth", type=float, default=0.08)
    p.add_argument("--resample", action="store_true")
    p.add_argument("--smoke", action="store_true", help="noise-free, in-range ground truth")
    p.set_defaults(handler=_cmd_ecg)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.handler(args)
    except (ValueError, FileNotFoundError, KeyError) as exc:
        _fail("config", str(exc))
        return EXIT_CONFIG
    except Exception as exc:  # noqa: BLE001 - CLI boundary
        _fail("solver", f"{type(exc).__name__}: {exc}")
        return EXIT_SOLVER


if __name__ == "__main__":
    raise SystemExit(main())
