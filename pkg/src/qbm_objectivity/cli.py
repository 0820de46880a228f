"""Command-line front end.

Exit codes: 0 success, 1 numerical/validation failure, 2 usage or config
error, 3 oracle truncation not converged.
"""
from __future__ import annotations

import argparse
import io
import json
import math
import sys
from fractions import Fraction
from pathlib import Path

import numpy as np

from . import fock_oracle as fo
from . import fraction as fr
from . import markers as mk
from . import scan
from .model import ConfigError, ensemble_from_dict, load_config, parse_fraction_pair, parse_real

EXIT_OK, EXIT_FAIL, EXIT_USAGE, EXIT_NOT_CONVERGED = 0, 1, 2, 3


# --- output helpers -------------------------------------------------------------

def format_csv(header, columns) -> str:
    """Deterministic CSV: fixed column order, 17 significant digits, LF endings."""
    data = np.column_stack([np.asarray(c, dtype=float) for c in columns])
    buf = io.StringIO()
    buf.write(",".join(header) + "\n")
    np.savetxt(buf, data, fmt="%.17g", delimiter=",", newline="\n")
    return buf.getvalue()


def _emit(text: str, out) -> None:
    if out is None:
        sys.stdout.write(text)
    else:
        Path(out).write_text(text, newline="\n")


def _decimate(t, y, max_points=4000):
    """Keep per-bucket min and max so spikes survive in the SVG."""
    n = len(t)
    if n <= max_points:
        return t, y
    edges = np.linspace(0, n, max_points // 2 + 1).astype(int)
    keep = []
    for a, b in zip(edges[:-1], edges[1:]):
        seg = y[a:b]
        i, j = a + int(np.argmin(seg)), a + int(np.argmax(seg))
        keep.extend(sorted({i, j}))
    keep = np.array(keep)
    return t[keep], y[keep]


def render_svg(t, columns: dict, title: str = "", width=800, height=400) -> str:
    pad = 50
    t = np.asarray(t, dtype=float)
    ys = [np.asarray(c, dtype=float) for c in columns.values()]
    y_lo = min(float(np.nanmin(y)) for y in ys)
    y_hi = max(float(np.nanmax(y)) for y in ys)
    if y_hi == y_lo:
        y_hi = y_lo + 1.0
    t_lo, t_hi = float(t[0]), float(t[-1])

    def X(v):
        return pad + (v - t_lo) / (t_hi - t_lo) * (width - 2 * pad)

    def Y(v):
        return height - pad - (v - y_lo) / (y_hi - y_lo) * (height - 2 * pad)

    colors = ["#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b", "#17becf"]
    out = [f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}">',
           f'<rect width="{width}" height="{height}" fill="white"/>',
           f'<line x1="{pad}" y1="{height - pad}" x2="{width - pad}" y2="{height - pad}" stroke="black"/>',
           f'<line x1="{pad}" y1="{pad}" x2="{pad}" y2="{height - pad}" stroke="black"/>',
           f'<text x="{pad}" y="{height - pad + 20}" font-size="12">{t_lo:g}</text>',
           f'<text x="{width - pad}" y="{height - pad + 20}" font-size="12" text-anchor="end">{t_hi:g}</text>',
           f'<text x="{pad - 5}" y="{height - pad}" font-size="12" text-anchor="end">{y_lo:.3g}</text>',
           f'<text x="{pad - 5}" y="{pad + 4}" font-size="12" text-anchor="end">{y_hi:.3g}</text>',
           f'<text x="{width / 2}" y="{pad / 2}" font-size="14" text-anchor="middle">{title}</text>']
    for k, (name, y) in enumerate(columns.items()):
        tt, yy = _decimate(t, np.asarray(y, dtype=float))
        pts = " ".join(f"{X(a):.2f},{Y(b):.2f}" for a, b in zip(tt, yy))
        col = colors[k % len(colors)]
        out.append(f'<polyline fill="none" stroke="{col}" stroke-width="1" points="{pts}"/>')
        out.append(f'<text x="{width - pad + 5}" y="{pad + 15 * k}" font-size="11" fill="{col}">{name}</text>')
    out.append("</svg>")
    return "\n".join(out) + "\n"


def pi_multiple(units: int, omega_big: float) -> str:
    """Render units*pi/Omega symbolically when Omega is an integer."""
    if float(omega_big).is_integer():
        q = Fraction(units, int(omega_big))
        num = "" if q.numerator == 1 else str(q.numerator)
        return f"{num}π" if q.denominator == 1 else f"{num}π/{q.denominator}"
    return f"{units * math.pi / omega_big:.12g}"


# --- subcommands ---------------------------------------------------------------

def _ensemble(args):
    if not args.config:
        raise ConfigError("--config is required for this command")
    return ensemble_from_dict(load_config(args.config))


def cmd_markers(args) -> int:
    ens = _ensemble(args)
    t_hi = args.t_max if args.t_max is not None else 10.0
    series = scan.marker_series(ens, 0.0, t_hi, args.grid)
    K = len(ens.oscillators)
    header = (["t"] + [f"gamma2_k{k + 1}" for k in range(K)]
              + [f"overlap_k{k + 1}" for k in range(K)] + ["gamma2_total", "overlap_total"])
    cols = ([series.grid] + list(series.gamma_sq) + list(series.overlap)
            + [series.gamma_sq_total, series.overlap_total])
    if not all(np.all(np.isfinite(c)) for c in cols):
        print("error: non-finite marker values", file=sys.stderr)
        return EXIT_FAIL
    _emit(format_csv(header, cols), args.out)
    _report_recurrences(series, args.threshold)
    return EXIT_OK


def _report_recurrences(series, threshold) -> None:
    if threshold is None or series is None:
        return
    rep = scan.detect_recurrences(series, threshold)
    times = ", ".join(f"{t:.12g}" for t in rep.hit_times) or "none"
    print(f"recurrences >= {threshold:g}: {times}", file=sys.stderr)


def _classify(raw_omega, omega_big_raw, max_den, eps, name):
    """Return (ReducedFraction or None, omega as float)."""
    W = parse_real(omega_big_raw, "omega_big")
    if isinstance(raw_omega, dict) and "fraction" in raw_omega:
        num, den = parse_fraction_pair(raw_omega["fraction"], name)
        return fr.reduce_ratio(num, den), num / den * W
    w = parse_real(raw_omega, name)
    if (isinstance(raw_omega, int) and isinstance(omega_big_raw, int)
            and not isinstance(raw_omega, bool)):
        return fr.reduce_ratio(raw_omega, omega_big_raw), w
    return fr.rationalize(w / W, max_den, eps), w


def cmd_fraction(args) -> int:
    if not args.config:
        raise ConfigError("--config is required for this command")
    doc = load_config(args.config)
    ensemble_from_dict(doc)
    W_raw = doc.get("central", {}).get("omega_big", 1.0)
    W = parse_real(W_raw, "omega_big")
    lines, rows, fracs = [], [], []
    all_rational = True
    for k, o in enumerate(doc.get("oscillators", [])):
        f, w = _classify(o.get("omega", 1.0), W_raw, args.max_den, args.eps,
                         f"oscillators[{k}].omega")
        if f is None:
            all_rational = False
            lines.append(f"k{k + 1}: omega={w:.12g} non-fractional within eps={args.eps:g} "
                         f"(max_den={args.max_den})")
            rows.append((k + 1, w, "", "non-fractional", ""))
            continue
        fracs.append(f)
        tm = fr.t_min(W, f)
        lines.append(f"k{k + 1}: {f} {f.parity_class} t_min={pi_multiple(f.lattice_units, W)} "
                     f"({tm:.17g})")
        rows.append((k + 1, w, str(f), str(f.parity_class), f"{tm:.17g}"))
    if fracs and all_rational:
        units = fr.common_recurrence_units(fracs)
        lines.append(f"common recurrence={pi_multiple(units, W)} ({units * math.pi / W:.17g})")
    else:
        lines.append("common recurrence: none (non-fractional oscillators present)")
    print("\n".join(lines))
    if args.out:
        csv = "oscillator,omega,fraction,parity,t_min\n" + "".join(
            f"{r[0]},{r[1]:.17g},{r[2]},{r[3]},{r[4]}\n" for r in rows)
        Path(args.out).write_text(csv, newline="\n")
    return EXIT_OK


def _report_line(i, r: fo.DrawReport) -> str:
    status = "PASS" if r.passed else "FAIL"
    line = (f"{i},{r.dim},{r.gamma_sq_analytic:.17g},{r.gamma_sq_oracle:.17g},{r.gamma_diff:.3e},"
            f"{r.overlap_analytic:.17g},{r.overlap_oracle:.17g},{r.overlap_diff:.3e},"
            f"{r.unitary_distance:.3e},{status}")
    return line


def cmd_oracle(args) -> int:
    max_dim = args.max_dim or 160
    try:
        if args.config:
            ens = _ensemble(args)
            t = args.t_max if args.t_max is not None else 1.0
            tr = ens.trajectory
            reports = [fo.check_draw(
                fo.OracleParams(o, ens.central, tr.y, tr.y_prime, tr.phi, t, ens.bath.beta),
                dim=args.dim,
                dims=tuple(d for d in fo.DEFAULT_DIMS if d <= max_dim) or (max_dim,))
                for o in ens.oscillators]
        else:
            reports = fo.equivalence_suite(args.seed, args.draws, dim=args.dim, max_dim=max_dim)
    except fo.NotConvergedAtMaxDim as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_NOT_CONVERGED
    header = ("draw,dim,gamma2_analytic,gamma2_oracle,gamma2_diff,overlap_analytic,"
              "overlap_oracle,overlap_diff,unitary_distance,status\n")
    text = header + "".join(_report_line(i, r) + "\n" for i, r in enumerate(reports))
    _emit(text, args.out)
    failed = [r for r in reports if not r.passed]
    for i, r in enumerate(reports):
        if not r.passed:
            print(f"draw {i}: truncation diagnosis: {r.diagnosis}", file=sys.stderr)
    verdict = "FAIL" if failed else "PASS"
    print(f"{verdict}: {len(reports) - len(failed)}/{len(reports)} draws within "
          f"gamma2 {fo.GAMMA_TOL:g}, overlap {fo.OVERLAP_TOL:g}, unitary {fo.UNITARY_TOL:g}",
          file=sys.stderr)
    return EXIT_FAIL if failed else EXIT_OK


def cmd_figure(args) -> int:
    overrides = {}
    if args.grid is not None:
        overrides["n_points"] = args.grid
    if args.t_max is not None:
        overrides["t_max"] = args.t_max
    try:
        data = scan.figure_data(args.figure_id, overrides)
    except scan.UnknownFigure:
        print(f"error: unknown figure {args.figure_id!r}; choose from "
              f"{', '.join(scan.FIGURES)}", file=sys.stderr)
        return EXIT_USAGE
    out_dir = Path(args.out or ".")
    out_dir.mkdir(parents=True, exist_ok=True)
    header = ["t"] + list(data.columns)
    csv_path = out_dir / f"{args.figure_id}.csv"
    csv_path.write_text(format_csv(header, [data.t] + list(data.columns.values())), newline="\n")
    (out_dir / f"{args.figure_id}.json").write_text(
        json.dumps(data.metadata, indent=2, sort_keys=True) + "\n", newline="\n")
    if args.svg:
        (out_dir / f"{args.figure_id}.svg").write_text(
            render_svg(data.t, data.columns, data.metadata["caption"]), newline="\n")
    _report_recurrences(data.series, args.threshold)
    print(str(csv_path))
    return EXIT_OK


def cmd_phase(args) -> int:
    ens = _ensemble(args)
    t_hi = args.t_max if args.t_max is not None else 50.0
    n_phi = args.grid or 5
    phis = np.linspace(0, math.pi / 2, n_phi)
    W = ens.central.omega_big
    sups = []
    for k, o in enumerate(ens.oscillators):
        ext = mk.phase_extremes(o.omega, W)
        n = scan.default_n_points(ens, 0.0, t_hi)
        tg = np.linspace(0.0, t_hi, n)
        sups.append([float((np.abs(mk.eta_bar(o.omega, W, p, tg)) ** 2).max()) for p in phis])
        where = "none (Omega == omega)" if ext.phi_at_max is None else f"{ext.phi_at_max:.17g}"
        rel = ">" if W > o.omega else ("<" if W < o.omega else "=")
        bound = 4 * max(1.0, (W / o.omega) ** 2)
        print(f"k{k + 1}: Omega {rel} omega, phi_at_max={where}, "
              f"empirical sup|eta_bar|^2 over [0, {t_hi:g}] = {max(sups[-1]):.6g} "
              f"(safe bound 4 max(1, Omega^2/omega^2) = {bound:.6g})",
              file=sys.stderr)
    header = ["phi"] + [f"sup_etabar2_k{k + 1}" for k in range(len(sups))]
    _emit(format_csv(header, [phis] + sups), args.out)
    return EXIT_OK


COMMANDS = {
    "markers": cmd_markers,
    "fraction": cmd_fraction,
    "oracle": cmd_oracle,
    "figure": cmd_figure,
    "phase": cmd_phase,
}


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="JSON ensemble configuration")
    common.add_argument("--out", help="output file (directory for 'figure')")
    common.add_argument("--svg", action="store_true", help="also write an SVG plot")
    common.add_argument("--grid", type=int, help="number of grid points")
    common.add_argument("--t-max", type=float, dest="t_max", help="end of the time window")
    common.add_argument("--threshold", type=float,
                        help="report recurrences of the total decoherence factor above this")
    common.add_argument("--seed", type=int, default=0, help="seed for oracle draws")
    common.add_argument("--max-dim", type=int, dest="max_dim", help="largest Fock dimension")

    p = argparse.ArgumentParser(prog="qbm-objectivity", description=__doc__.splitlines()[0])
    sub = p.add_subparsers(dest="command", required=True)
    sub.add_parser("markers", parents=[common], help="marker time series as CSV")
    pf = sub.add_parser("fraction", parents=[common], help="frequency-relation report")
    pf.add_argument("--max-den", type=int, default=10, dest="max_den")
    pf.add_argument("--eps", type=float, default=1e-6)
    po = sub.add_parser("oracle", parents=[common], help="Fock-space cross-check")
    po.add_argument("--draws", type=int, default=20)
    po.add_argument("--dim", type=int, help="fixed Fock dimension (skips convergence)")
    pg = sub.add_parser("figure", parents=[common], help="figure dataset")
    pg.add_argument("figure_id")
    sub.add_parser("phase", parents=[common], help="phase sweep")
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return COMMANDS[args.command](args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (fr.NonPositiveInput, TypeError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (ValueError, RuntimeError, ArithmeticError) as exc:
        print(f"numerical error: {exc}", file=sys.stderr)
        return EXIT_FAIL


if __name__ == "__main__":
    sys.exit(main())
