"""Command-line drivers: forward / inverse / roundtrip / evolve / estimates /
verify, with reproducible run directories named by config hash.

Exit codes: 0 success (and all gates green for ``verify``), 2 config error,
3 solver non-convergence, 4 I/O error.
"""
from __future__ import annotations

import argparse
import sys
from pathlib import Path

import numpy as np

from ._parallel import resolve_workers
from .estimates import (
    SHARP_RIESZ_CONSTANT,
    exponent_sequence,
    hls_ratio,
    multilinear_form,
    reduction_step,
)
from .evolution import evolve_scattering
from .fields import (
    OffDiagPotential,
    ScalarField,
    lp_norm,
    make_potential,
    matrix_l2_norm,
)
from .forward import NonConvergenceError, scattering_data
from .grids import GridSpec, dual_grid
from .inverse import reconstruct_potential
from .io import (
    ConfigError,
    config_hash,
    load_config,
    merge_config,
    read_field_dump,
    write_field_dump,
    write_kv_csv,
    write_table_csv,
)

__all__ = ["main", "run_forward", "run_inverse", "run_roundtrip", "run_evolve",
           "run_estimates", "run_verify"]


def _grids(cfg):
    grid = GridSpec(float(cfg["grid"]["L"]), int(cfg["grid"]["n"]))
    if cfg["zgrid"] == "dual":
        zgrid = dual_grid(grid, 2.0)
    else:
        zgrid = GridSpec(float(cfg["zgrid"]["L"]), int(cfg["zgrid"]["n"]))
    return grid, zgrid


def _potential(cfg, grid):
    p = cfg["potential"]
    return make_potential(p["kind"], float(p["amplitude"]), p["symmetry"], int(p["seed"]), grid)


def _solver_kwargs(cfg, workers):
    s = cfg["solver"]
    return dict(tol=float(s["tol"]), max_iter=int(s["max_iter"]),
                workers=resolve_workers(workers))


def _base_diagnostics(cfg, grid, zgrid):
    return [
        ("config_hash", config_hash(cfg)),
        ("grid_L", grid.half_width),
        ("grid_n", grid.n),
        ("grid_h", grid.h),
        ("zgrid_L", zgrid.half_width),
        ("zgrid_n", zgrid.n),
    ]


def _write_reports(path, zgrid, reports):
    zs = zgrid.lattice().ravel()
    rows = [
        (i, zs[i].real, zs[i].imag, r.iterations, repr(r.final_residual), int(r.converged))
        for i, r in enumerate(reports)
    ]
    write_table_csv(path, ["index", "re", "im", "iterations", "residual", "converged"], rows)


def run_forward(cfg, out_dir, workers=None):
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    grid, zgrid = _grids(cfg)
    Q = _potential(cfg, grid)
    kw = _solver_kwargs(cfg, workers)
    far = cfg["solver"].get("far_zone", "solve")
    S, reports = scattering_data(Q, zgrid, kw["tol"], kw["max_iter"],
                                 workers=kw["workers"], far_zone=far, return_reports=True)
    write_field_dump(out / "s12.field", S.q12)
    write_field_dump(out / "s21.field", S.q21)
    write_field_dump(out / "q12.field", Q.q12)
    write_field_dump(out / "q21.field", Q.q21)
    _write_reports(out / "solve_report.csv", zgrid, reports)
    qn, sn = matrix_l2_norm(Q), matrix_l2_norm(S)
    rows = _base_diagnostics(cfg, grid, zgrid) + [
        ("norm_Q", qn),
        ("norm_S", sn),
        ("plancherel_defect", abs(sn**2 - qn**2) / qn**2 if qn > 0 else 0.0),
    ]
    write_kv_csv(out / "diagnostics.csv", rows)
    return S


def _read_potential(in_dir, names=("s12", "s21")):
    in_dir = Path(in_dir)
    a = read_field_dump(in_dir / f"{names[0]}.field")
    b = read_field_dump(in_dir / f"{names[1]}.field")
    return OffDiagPotential(a, b, "none")


def run_inverse(cfg, out_dir, in_dir, workers=None):
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    grid, zgrid = _grids(cfg)
    S = _read_potential(in_dir)
    kw = _solver_kwargs(cfg, workers)
    Q, reports = reconstruct_potential(S, grid, kw["tol"], kw["max_iter"],
                                       workers=kw["workers"], return_reports=True)
    write_field_dump(out / "q12.field", Q.q12)
    write_field_dump(out / "q21.field", Q.q21)
    _write_reports(out / "solve_report.csv", grid, reports)
    rows = _base_diagnostics(cfg, grid, S.grid) + [("norm_Q", matrix_l2_norm(Q))]
    write_kv_csv(out / "diagnostics.csv", rows)
    return Q


def run_roundtrip(cfg, out_dir, workers=None):
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    grid, zgrid = _grids(cfg)
    Q = _potential(cfg, grid)
    kw = _solver_kwargs(cfg, workers)
    far = cfg["solver"].get("far_zone", "solve")
    S = scattering_data(Q, zgrid, kw["tol"], kw["max_iter"],
                        workers=kw["workers"], far_zone=far)
    Qr = reconstruct_potential(S, grid, kw["tol"], kw["max_iter"], workers=kw["workers"])
    for name, f in (("q12", Q.q12), ("q21", Q.q21), ("s12", S.q12), ("s21", S.q21),
                    ("q12_rec", Qr.q12), ("q21_rec", Qr.q21)):
        write_field_dump(out / f"{name}.field", f)
    qn = matrix_l2_norm(Q)
    diff = np.sqrt(np.sum(np.abs(Qr.q12.values - Q.q12.values) ** 2)
                   + np.sum(np.abs(Qr.q21.values - Q.q21.values) ** 2)) * grid.h
    defect = diff / qn if qn > 0 else 0.0
    rows = _base_diagnostics(cfg, grid, zgrid) + [
        ("norm_Q", qn),
        ("norm_S", matrix_l2_norm(S)),
        ("roundtrip_defect", defect),
    ]
    write_kv_csv(out / "defect.csv", rows)
    return defect


def run_evolve(cfg, out_dir, workers=None):
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    grid, zgrid = _grids(cfg)
    Q = _potential(cfg, grid)
    q0 = Q.q12
    if lp_norm(q0, 2.0) >= 1.0:
        raise ConfigError("evolve requires ||q0||_2 < 1; lower potential.amplitude")
    Qh = OffDiagPotential(q0, q0.conj(), "hermitian")
    kw = _solver_kwargs(cfg, workers)
    far = cfg["solver"].get("far_zone", "solve")
    S = scattering_data(Qh, zgrid, kw["tol"], kw["max_iter"],
                        workers=kw["workers"], far_zone=far)
    write_field_dump(out / "q_t0.field", q0)
    rows = []
    for t in cfg["evolve"]["times"]:
        Qt = reconstruct_potential(evolve_scattering(S, float(t)), grid,
                                   kw["tol"], kw["max_iter"], workers=kw["workers"])
        tag = repr(float(t)).replace(".", "p").replace("-", "m")
        write_field_dump(out / f"q_t{tag}.field", Qt.q12)
        rows.append((t, repr(lp_norm(Qt.q12, 2.0))))
    write_table_csv(out / "evolution.csv", ["t", "l2_norm"], rows)
    write_kv_csv(out / "diagnostics.csv",
                 _base_diagnostics(cfg, grid, zgrid) + [("norm_q0", lp_norm(q0, 2.0))])
    return out


def run_estimates(cfg, out_dir, workers=None):
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    est = cfg["estimates"]
    jmax = int(est["jmax"])
    seq = exponent_sequence(jmax)
    seq.check_identities()
    write_table_csv(
        out / "exponents.csv",
        ["j", "p", "s", "r", "s_tilde", "identities_exact"],
        [
            (j, str(seq.p[j]), str(seq.s[j]), str(seq.r[j]),
             str(seq.s_tilde[j - 1]) if j >= 1 else "", 1)
            for j in range(jmax + 1)
        ],
    )

    grid = GridSpec(6.0, 128)
    rows, ratios = [], []
    for seed in range(int(est["ensemble_size"])):
        f = make_potential("random-smooth", 1.0, "none", int(est["seed"]) + seed, grid).q12
        r = hls_ratio(f, 4.0 / 3.0)
        ratios.append(r)
        rows.append((seed, repr(r), repr(r / np.pi)))
    write_table_csv(out / "hls_ratios.csv", ["seed", "ratio", "ratio_over_pi"], rows)

    g6 = GridSpec(3.0, 6)
    chain_rows = []
    worst = -np.inf
    for seed in range(20):
        rng = np.random.Generator(np.random.Philox(key=seed))
        t, q0, q1, q2 = (ScalarField(g6, rng.random((6, 6)).astype(np.complex128))
                         for _ in range(4))
        i1 = multilinear_form(t, [q0, q1, q2], 1)
        t1, q2t = reduction_step(t, q0, q1, 0)
        i0 = multilinear_form(t1, [ScalarField(g6, q2.values * q2t.values)], 0)
        worst = max(worst, i1 / i0 - 1.0)
        chain_rows.append((seed, repr(i1), repr(i0), int(i1 <= i0 * (1 + 1e-9))))
    write_table_csv(out / "chain.csv", ["seed", "I1", "I0_reduced", "ok"], chain_rows)

    summary = [
        ("exponent_identities", "exact"),
        ("hls_ensemble_max_over_pi", max(ratios) / np.pi),
        ("hls_sharp_constant_over_pi", SHARP_RIESZ_CONSTANT / np.pi),
        ("chain_worst_excess", worst),
        ("chain_ok", int(worst <= 1e-9)),
    ]
    write_kv_csv(out / "summary.csv", summary)
    return out


def run_verify(cfg, out_dir, workers=None, echo=print):
    from .acceptance import run_acceptance

    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    results = run_acceptance(workers=resolve_workers(workers), echo=echo)
    write_table_csv(
        out / "acceptance.csv",
        ["criterion", "title", "passed", "seconds", "details"],
        [(r.cid, r.title, int(r.passed), f"{r.seconds:.1f}",
          "; ".join(f"{k}={v}" for k, v in r.details.items())) for r in results],
    )
    n_pass = sum(r.passed for r in results)
    echo(f"{n_pass}/{len(results)} criteria passed")
    return all(r.passed for r in results)


def _build_parser():
    ap = argparse.ArgumentParser(
        prog="dbarscatter",
        description="Scattering transform for the plane first-order system: "
                    "forward/inverse maps, estimate lab, DS-II evolution.",
    )
    ap.add_argument("--config", type=str, default=None, help="JSON config path")
    ap.add_argument("--out-dir", type=str, default="runs", help="output root")
    ap.add_argument("--workers", type=int, default=None,
                    help="parallel map width (env DBAR_WORKERS as fallback)")
    sub = ap.add_subparsers(dest="command", required=True)
    sub.add_parser("forward", help="potential -> scattering data")
    p_inv = sub.add_parser("inverse", help="scattering data -> potential")
    p_inv.add_argument("--input", type=str, required=True,
                       help="run directory holding s12.field/s21.field")
    sub.add_parser("roundtrip", help="forward then inverse, report the defect")
    sub.add_parser("evolve", help="DS-II evolution of the configured initial data")
    sub.add_parser("estimates", help="exponent/HLS/chain diagnostics")
    sub.add_parser("verify", help="run the acceptance suite")
    return ap


def main(argv=None) -> int:
    args = _build_parser().parse_args(argv)
    try:
        cfg = load_config(args.config) if args.config else merge_config(None)
        run_dir = Path(args.out_dir) / f"{args.command}-{config_hash(cfg)}"
        if args.command == "forward":
            run_forward(cfg, run_dir, args.workers)
        elif args.command == "inverse":
            run_inverse(cfg, run_dir, args.input, args.workers)
        elif args.command == "roundtrip":
            run_roundtrip(cfg, run_dir, args.workers)
        elif args.command == "evolve":
            run_evolve(cfg, run_dir, args.workers)
        elif args.command == "estimates":
            run_estimates(cfg, run_dir, args.workers)
        elif args.command == "verify":
            ok = run_verify(cfg, run_dir, args.workers)
            print(f"outputs in {run_dir}")
            return 0 if ok else 1
        print(f"outputs in {run_dir}")
        return 0
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    except NonConvergenceError as exc:
        print(f"solver did not converge: {exc}", file=sys.stderr)
        return 3
    except OSError as exc:
        print(f"I/O error: {exc}", file=sys.stderr)
        return 4


if __name__ == "__main__":
    sys.exit(main())
