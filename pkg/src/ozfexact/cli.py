"""Command-line interface.

Exit codes: 0 success; 1 error (bad input, undecided analysis); 2 a certified
t* = 0 was found (analyze) or no multiplier / destabilizer exists at the
requested settings (synth, destabilize); 3 a certificate failed verification.
"""

from __future__ import annotations

import argparse
import math
import sys
import time
from pathlib import Path
from typing import List, Optional, Sequence

import numpy as np

from . import __version__
from .analysis import DEFAULT_SCHEDULE, classify_kappa, find_multiplier, kappa_threshold, sweep_n
from .destabilizer import build_destabilizer
from .errors import OzfError
from .io import dumps, load_plant, read_json, write_json, write_plot_csv, write_svg, write_trajectory_csv
from .lti import StateSpaceModel, nyquist_value
from .lure import LoopCertificate, assemble_certificate, gain_lower_bound, simulate_certificate, verify_certificate
from .margin import ZERO_DECISION, build_margin_problem, solve_margin_lp
from .multiplier import ZFMultiplier, fir_truncate, multiplier_checks, nyquist_table, synth_pwl_multiplier, verify_fdi_grid

BUILTIN_PLANTS = {
    "example": ([1.1, 0.6], [1.0, 1.8, 0.9]),
    "fig2": ([-1.0, 0.0], [1.0, -1.8, 0.81]),
}


def get_plant(name: str) -> StateSpaceModel:
    if name in BUILTIN_PLANTS:
        num, den = BUILTIN_PLANTS[name]
        return StateSpaceModel.from_tf(num, den, name=name)
    return load_plant(name)


def parse_kappa(text: str) -> float:
    if text.lower() in ("inf", "infinity"):
        return math.inf
    val = float(text)
    if not val > 0:
        raise argparse.ArgumentTypeError("kappa must be positive")
    return val


def parse_window(text: str):
    try:
        lo, hi = (int(v) for v in text.split(":"))
    except ValueError as exc:
        raise argparse.ArgumentTypeError("window must look like KMIN:KMAX") from exc
    if hi < lo:
        raise argparse.ArgumentTypeError("KMAX must not be below KMIN")
    return lo, hi


def _n_range(args) -> List[int]:
    if args.n is not None:
        Ns = [args.n]
    else:
        Ns = list(range(1, args.nmax + 1))
    if min(Ns) < 1 or max(Ns) > 512:
        raise OzfError("N must lie in 1..512")
    return Ns


def _out_dir(args) -> Optional[Path]:
    if args.out is None:
        return None
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    return out


def _emit(obj) -> None:
    sys.stdout.write(dumps(obj))


def cmd_analyze(args) -> int:
    ss = get_plant(args.plant)
    exact = True if args.exact else None
    rows = []
    found = None
    undecided = []
    for N in _n_range(args):
        p = build_margin_problem(ss, N, args.kappa)
        pr, du = solve_margin_lp(p, exact=exact, zero_tol=args.tol)
        rows.append({
            "kappa": args.kappa, "N": N, "t_star": pr.t_star, "alpha": pr.alpha, "mu": du.mu,
            "eta": du.eta, "gap": du.gap, "certified_zero": bool(du.certified_zero),
        })
        if du.certified_zero:
            found = N
            break
        if pr.t_star < args.tol:
            undecided.append(N)
    out = _out_dir(args)
    if out is not None:
        write_json(out / "analysis.json", rows)
    _emit({"results": rows, "certified_zero_at": found, "undecided": undecided})
    if found is not None:
        return 2
    return 1 if undecided else 0


def cmd_nyquist(args) -> int:
    ss = get_plant(args.plant)
    t0 = time.perf_counter()
    val = nyquist_value(ss)
    _emit({"nyquist_value": val, "seconds": time.perf_counter() - t0})
    return 0


def _fir_reports(m: ZFMultiplier, windows):
    out = []
    for lo, hi in windows:
        t = fir_truncate(m, lo, hi)
        out.append((t, {"kmin": lo, "kmax": hi, "sum_h": t.fir.total, "tail_bound": t.tail_bound}))
    return out


def cmd_synth(args) -> int:
    ss = get_plant(args.plant)
    if args.n is not None:
        schedule = [(args.n, args.oversample)]
    else:
        schedule = DEFAULT_SCHEDULE
    res = find_multiplier(ss, args.kappa, schedule)
    if res is None:
        _emit({"kappa": args.kappa, "certified": False})
        return 2
    m = res.multiplier
    pd, dhd = multiplier_checks(m)
    summary = {
        "kappa": args.kappa, "certified": True, "N": res.N, "oversample": res.oversample,
        "t_star": res.t_star, "fdi": res.report.to_dict(), "pd": pd.ok, "dhd": dhd.is_dhd,
    }
    out = _out_dir(args)
    if args.fir:
        firs = _fir_reports(m, args.fir)
        summary["fir"] = [info for _, info in firs]
        m = firs[-1][0]
    if out is not None:
        write_json(out / "multiplier.json", m.to_dict())
        write_json(out / "fdi.json", res.report.to_dict())
    _emit(summary)
    return 0


def _find_destabilizing_dual(ss, kappa, nmax, eps, exact):
    for N in range(1, nmax + 1):
        p = build_margin_problem(ss, N, kappa)
        pr, du = solve_margin_lp(p, exact=exact)
        if du.certified_zero or (pr.t_star <= eps and pr.t_star >= ZERO_DECISION):
            return p, pr, du
    return None


def cmd_destabilize(args) -> int:
    ss = get_plant(args.plant)
    found = _find_destabilizing_dual(ss, args.kappa, min(args.nmax, 16), args.eps, True if args.exact else None)
    if found is None:
        _emit({"kappa": args.kappa, "refused": f"no N <= {min(args.nmax, 16)} with t* <= {args.eps}"})
        return 2
    p, pr, du = found
    D = build_destabilizer(du, p)
    cert = assemble_certificate(D, ss)
    rep = verify_certificate(cert)
    _, _, drift = simulate_certificate(cert)
    gain = gain_lower_bound(cert)
    out = _out_dir(args)
    ok = rep.ok and drift <= 1e-7
    if out is not None:
        write_json(out / ("certificate.json" if ok else "certificate.failed.json"), cert.to_dict())
    _emit({
        "kappa": args.kappa, "N": p.N, "d": cert.d, "t_star": pr.t_star,
        "certified_zero": bool(du.certified_zero), "verification": rep.to_dict(),
        "drift_10_periods": drift, "gain": gain.to_dict(),
    })
    return 0 if ok else 3


def _load_certificate(path) -> LoopCertificate:
    return LoopCertificate.from_dict(read_json(path))


def cmd_verify(args) -> int:
    cert = _load_certificate(args.certificate)
    rep = verify_certificate(cert)
    _, _, drift = simulate_certificate(cert, args.periods)
    gain = gain_lower_bound(cert)
    ok = rep.ok and drift <= 1e-7
    _emit({"verification": rep.to_dict(), "drift": drift, "gain": gain.to_dict(), "ok": ok})
    return 0 if ok else 3


def cmd_simulate(args) -> int:
    cert = _load_certificate(args.certificate)
    e1, e2, drift = simulate_certificate(cert, args.periods)
    out = _out_dir(args) or Path(".")
    write_trajectory_csv(out / "trajectory.csv", e1.samples, e2.samples)
    _emit({"steps": e1.horizon, "drift": drift, "csv": str(out / "trajectory.csv")})
    return 0


def cmd_plot(args) -> int:
    ss = get_plant(args.plant)
    out = _out_dir(args) or Path(".")
    files = []
    m = None
    if args.multiplier:
        m = ZFMultiplier.from_dict(read_json(args.multiplier))
    elif args.n is not None:
        p = build_margin_problem(ss, args.n, args.kappa)
        pr, _ = solve_margin_lp(p)
        m = synth_pwl_multiplier(pr)
    curves = {}
    tab = nyquist_table(m, ss, args.points, form="pwl" if m is not None else None)
    write_plot_csv(out / "nyquist_pwl.csv", tab)
    files.append("nyquist_pwl.csv")
    curves["G"] = tab[:, 1] + 1j * tab[:, 2]
    curves["M"] = tab[:, 3] + 1j * tab[:, 4]
    curves["GM"] = tab[:, 5] + 1j * tab[:, 6]
    info = {}
    if m is not None:
        info["grid_margin"] = verify_fdi_grid(m, ss, args.kappa, m.N).worst_margin
        tails = []
        for t, meta in _fir_reports(m, args.fir or []):
            name = f"nyquist_fir_{meta['kmin']}_{meta['kmax']}.csv"
            ft = nyquist_table(t, ss, args.points, form="fir")
            write_plot_csv(out / name, ft)
            files.append(name)
            curves[f"M fir {meta['kmin']}:{meta['kmax']}"] = ft[:, 3] + 1j * ft[:, 4]
            tails.append(meta)
        info["fir"] = tails
    if args.svg:
        write_svg(out / "nyquist.svg", curves)
        files.append("nyquist.svg")
    _emit({"files": files, **info})
    return 0


def reproduce_example(quick: bool = False):
    """Rows (label, value, ok) for the numerical example."""
    ss = get_plant("example")
    rows = []
    nyq = nyquist_value(ss)
    rows.append(("nyquist value", nyq, abs(nyq - 2.17) <= 0.02))
    if quick:
        v = classify_kappa(ss, 1.80)
        rows.append(("multiplier certified at kappa=1.80", v.stable, v.stable))
    else:
        # grid values are decimals, so the tolerance absorbs binary rounding only
        thr = kappa_threshold(ss)
        rows.append(("largest certified kappa (0.01 grid)", thr.threshold, abs(thr.threshold - 1.86) <= 0.02 + 1e-9))
        fine = kappa_threshold(ss, refine=1e-3)
        rows.append(("smallest refuted kappa (0.001 grid)", fine.refuted.kappa,
                     abs(fine.refuted.kappa - 1.86) <= 0.02 + 1e-9))
    zero = None
    for pt in sweep_n(ss, 2.0, range(1, 13), stop_at_zero=True):
        if pt.certified_zero:
            zero = pt
            break
    n0 = zero.N if zero else None
    rows.append(("first N with t*=0 at kappa=2.00", n0, n0 == 5))
    if zero is not None:
        D = build_destabilizer(zero.dual, zero.problem)
        cert = assemble_certificate(D, ss)
        rep = verify_certificate(cert)
        rows.append(("certificate dimension d", cert.d, cert.d <= 5))
        rows.append(("oscillation residual", rep.worst_residual, rep.ok))
    return rows


def cmd_reproduce(args) -> int:
    rows = reproduce_example(args.quick)
    width = max(len(r[0]) for r in rows)
    for label, val, ok in rows:
        shown = f"{val:.6g}" if isinstance(val, float) else str(val)
        print(f"{label:<{width}}  {shown:>14}  {'ok' if ok else 'MISMATCH'}")
    return 0 if all(r[2] for r in rows) else 1


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="ozfexact", description="Zames-Falb multiplier analysis for Lur'e systems")
    ap.add_argument("--version", action="version", version=__version__)
    sub = ap.add_subparsers(dest="command", required=True)

    def common(p, plant=True):
        if plant:
            p.add_argument("plant", help="plant JSON file or builtin name (example, fig2)")
        p.add_argument("--out", help="output directory")

    p = sub.add_parser("analyze", help="margin LP sweep over N")
    common(p)
    p.add_argument("--kappa", type=parse_kappa, default=math.inf)
    p.add_argument("--n", type=int)
    p.add_argument("--nmax", type=int, default=16)
    p.add_argument("--tol", type=float, default=ZERO_DECISION, help="t* below this triggers the exact recheck")
    p.add_argument("--exact", action="store_true", help="always run the exact rational recheck")
    p.set_defaults(func=cmd_analyze)

    p = sub.add_parser("nyquist-value", help="largest linear gain passing the Nyquist test")
    common(p)
    p.set_defaults(func=cmd_nyquist)

    p = sub.add_parser("synth", help="synthesize and certify a multiplier")
    common(p)
    p.add_argument("--kappa", type=parse_kappa, required=True)
    p.add_argument("--n", type=int)
    p.add_argument("--oversample", type=int, default=8)
    p.add_argument("--fir", type=parse_window, action="append")
    p.set_defaults(func=cmd_synth)

    p = sub.add_parser("destabilize", help="build and verify an oscillation certificate")
    common(p)
    p.add_argument("--kappa", type=parse_kappa, default=math.inf)
    p.add_argument("--nmax", type=int, default=12)
    p.add_argument("--eps", type=float, default=ZERO_DECISION)
    p.add_argument("--exact", action="store_true")
    p.set_defaults(func=cmd_destabilize)

    p = sub.add_parser("verify", help="re-check a certificate file")
    p.add_argument("certificate")
    p.add_argument("--periods", type=int, default=10)
    p.set_defaults(func=cmd_verify)

    p = sub.add_parser("simulate", help="simulate the loop of a certificate file")
    p.add_argument("certificate")
    p.add_argument("--periods", type=int, default=10)
    p.add_argument("--out")
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("plot", help="Nyquist CSV/SVG data for G, M and GM")
    common(p)
    p.add_argument("--kappa", type=parse_kappa, default=math.inf)
    p.add_argument("--n", type=int, help="synthesize the multiplier on N nodes")
    p.add_argument("--multiplier", help="multiplier JSON file")
    p.add_argument("--fir", type=parse_window, action="append")
    p.add_argument("--points", type=int, default=2048)
    p.add_argument("--svg", action="store_true")
    p.set_defaults(func=cmd_plot)

    p = sub.add_parser("reproduce-example", help="recompute the numerical example")
    p.add_argument("--quick", action="store_true", help="check only kappa in {1.80, 2.00}")
    p.set_defaults(func=cmd_reproduce)
    return ap


def main(argv: Optional[Sequence[str]] = None) -> int:
    ap = build_parser()
    args = ap.parse_args(argv)
    try:
        return int(args.func(args))
    except (OzfError, OSError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
