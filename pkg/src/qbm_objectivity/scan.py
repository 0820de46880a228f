"""Time-grid evaluation of the markers, recurrence detection and figure data."""
from __future__ import annotations

import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Optional

import numpy as np
from scipy.optimize import minimize_scalar

from . import markers as mk
from .fraction import common_recurrence, reduce_ratio, rationalize, t_min
from .model import Ensemble, make_ensemble

POINTS_PER_PERIOD = 40
REFINE_XTOL = 1e-12


class InvalidRange(ValueError):
    pass


class DegenerateBeating(ValueError):
    pass


class UnknownFigure(KeyError):
    pass


@dataclass
class MarkerSeries:
    grid: np.ndarray
    gamma_sq: np.ndarray          # (K, n)
    overlap: np.ndarray           # (K, n)
    gamma_sq_total: np.ndarray    # (n,)
    overlap_total: np.ndarray     # (n,)
    ensemble: Ensemble

    def __len__(self):
        return len(self.grid)

    @property
    def points(self):
        for i, t in enumerate(self.grid):
            yield mk.MarkerPoint(
                float(t),
                [float(v) for v in self.gamma_sq[:, i]],
                [float(v) for v in self.overlap[:, i]],
                float(self.gamma_sq_total[i]),
                float(self.overlap_total[i]),
            )

    def total(self, marker: str = "gamma") -> np.ndarray:
        return self.gamma_sq_total if marker == "gamma" else self.overlap_total


def fastest_period(ens: Ensemble) -> float:
    W = ens.central.omega_big
    fastest = max(max(W, w, W + w) for w in ens.omegas)
    return 2 * math.pi / fastest


def default_n_points(ens: Ensemble, t_lo: float, t_hi: float,
                     per_period: int = POINTS_PER_PERIOD) -> int:
    # the 1e-9 slack stops round-off from adding a point to exact multiples
    n = per_period * (t_hi - t_lo) / fastest_period(ens)
    return max(2, int(math.ceil(n - 1e-9)) + 1)


def resolve_workers(workers: Optional[int] = None) -> int:
    """Worker count; QBM_THREADS caps it when ``workers`` is None (0 = auto)."""
    if workers is None:
        try:
            workers = int(os.environ.get("QBM_THREADS", "1"))
        except ValueError:
            workers = 1
    if workers <= 0:
        workers = os.cpu_count() or 1
    return workers


def marker_series(ens: Ensemble, t_lo: float, t_hi: float, n_points: Optional[int] = None,
                  workers: Optional[int] = None, chunk: int = 1 << 16) -> MarkerSeries:
    """Both markers on a uniform grid; chunks may be evaluated concurrently."""
    if not (t_lo >= 0 and t_hi > t_lo):
        raise InvalidRange(f"need 0 <= t_lo < t_hi, got [{t_lo}, {t_hi}]")
    if n_points is None:
        n_points = default_n_points(ens, t_lo, t_hi)
    if n_points < 2:
        raise InvalidRange("n_points must be >= 2")
    grid = np.linspace(t_lo, t_hi, n_points)
    pieces = [grid[i:i + chunk] for i in range(0, n_points, chunk)]
    nw = min(resolve_workers(workers), len(pieces))
    if nw > 1:
        with ThreadPoolExecutor(nw) as pool:
            parts = list(pool.map(lambda g: mk.marker_exponents(ens, g), pieces))
    else:
        parts = [mk.marker_exponents(ens, g) for g in pieces]
    g_exp = np.concatenate([p[0] for p in parts], axis=1)
    o_exp = np.concatenate([p[1] for p in parts], axis=1)
    return MarkerSeries(
        grid=grid,
        gamma_sq=np.exp(-g_exp),
        overlap=np.exp(-o_exp),
        gamma_sq_total=np.exp(-g_exp.sum(axis=0)),
        overlap_total=np.exp(-o_exp.sum(axis=0)),
        ensemble=ens,
    )


# --- recurrences -----------------------------------------------------------------

@dataclass
class RecurrenceReport:
    threshold: float
    hit_times: list
    hit_values: list
    grid_hits: list
    max_in_window: float
    window: tuple
    degenerate_flat: bool = False


def _total_exponent(ens: Ensemble, marker: str):
    idx = 0 if marker == "gamma" else 1

    def f(t):
        return float(mk.marker_exponents(ens, t)[idx].sum())
    return f


def local_maxima(values: np.ndarray) -> np.ndarray:
    """Interior indices i with v[i-1] <= v[i] > v[i+1] (plateaus count once)."""
    v = values
    if len(v) < 3:
        return np.array([], dtype=int)
    return np.nonzero((v[1:-1] >= v[:-2]) & (v[1:-1] > v[2:]))[0] + 1


def refine_maximum(ens: Ensemble, a: float, b: float, marker: str = "gamma",
                   xtol: float = REFINE_XTOL) -> tuple[float, float]:
    """Maximise the total marker on [a, b] by minimising its exponent."""
    f = _total_exponent(ens, marker)
    t, val = _bounded_min(f, a, b, xtol)
    return t, math.exp(-val)


def _bounded_min(f, a, b, xtol=REFINE_XTOL):
    # bounded Brent adds sqrt(eps)*|x| to its tolerance, so search over the
    # offset from the bracket centre, then repeat on a bracket 1e-6 as wide
    # around the first estimate so that xtol is the binding limit
    lo, hi = a, b
    best = None
    for _ in range(2):
        c, h = 0.5 * (lo + hi), 0.5 * (hi - lo)
        res = minimize_scalar(lambda u: f(c + u), bounds=(-h, h), method="bounded",
                              options={"xatol": xtol, "maxiter": 500})
        x, val = c + float(res.x), float(res.fun)
        if best is None or val <= best[1]:
            best = (x, val)
        w = max(1e-6 * h, 4 * xtol)
        lo, hi = max(a, x - w), min(b, x + w)
    return best


def detect_recurrences(series: MarkerSeries, threshold: float, marker: str = "gamma",
                       refine: bool = True) -> RecurrenceReport:
    """Local maxima of the total marker reaching ``threshold``.

    Each interior grid maximum is refined between its neighbours before the
    threshold is applied, so hits that fall between grid points are kept.
    """
    if not (0 < threshold <= 1):
        raise ValueError("threshold must lie in (0, 1]")
    vals = series.total(marker)
    grid = series.grid
    window = (float(grid[0]), float(grid[-1]))
    if np.all(vals == 1.0):
        return RecurrenceReport(threshold, [float(t) for t in grid], [1.0] * len(grid),
                                [float(t) for t in grid], 1.0, window, degenerate_flat=True)
    hits, hvals, ghits = [], [], []
    best = float(vals.max())
    for i in local_maxima(vals):
        if refine:
            t, v = refine_maximum(series.ensemble, grid[i - 1], grid[i + 1], marker)
            if v < vals[i]:
                t, v = float(grid[i]), float(vals[i])
        else:
            t, v = float(grid[i]), float(vals[i])
        best = max(best, v)
        if v >= threshold:
            hits.append(t)
            hvals.append(v)
            ghits.append(float(grid[i]))
    return RecurrenceReport(threshold, hits, hvals, ghits, best, window)


def window_max(ens: Ensemble, t_lo: float, t_hi: float, marker: str = "gamma",
               n_points: Optional[int] = None, workers: Optional[int] = None) -> tuple[float, float]:
    """(t, value) of the largest total marker on [t_lo, t_hi], refined."""
    s = marker_series(ens, t_lo, t_hi, n_points, workers)
    vals = s.total(marker)
    i = int(np.argmax(vals))
    if 0 < i < len(vals) - 1:
        t, v = refine_maximum(ens, s.grid[i - 1], s.grid[i + 1], marker)
        if v >= vals[i]:
            return t, v
    return float(s.grid[i]), float(vals[i])


@dataclass
class EnvelopeCheck:
    measured_period: float
    predicted_period: float
    rel_mismatch: float
    recurrence_times: list = field(default_factory=list)


def envelope_check(omega: float, omega_big: float, phi: float, t_hi: float,
                   rel_threshold: float = 0.05,
                   per_period: int = POINTS_PER_PERIOD) -> EnvelopeCheck:
    """Compare the spacing of near-1 recurrences with 2 pi / |Omega - omega|.

    A single-oscillator marker exp(-k |eta_bar|^2) is monotone in |eta_bar|^2
    for any positive k, so recurrences are read off as the deep minima of
    |eta_bar|^2 (below ``rel_threshold`` of its maximum). Minima closer than
    three micro-motion periods are merged; each cluster keeps its deepest
    point.
    """
    dw = abs(omega_big - omega)
    if dw == 0:
        raise DegenerateBeating("zero detuning: envelope period undefined")
    micro = 2 * math.pi / (omega_big + omega)
    n = int(math.ceil(per_period * t_hi / micro)) + 1
    grid = np.linspace(0.0, t_hi, n)
    e2 = np.abs(mk.eta_bar(omega, omega_big, phi, grid)) ** 2
    cut = rel_threshold * e2.max()
    idx = [i for i in local_maxima(-e2) if e2[i] <= cut]

    def f(t):
        return float(np.abs(mk.eta_bar(omega, omega_big, phi, t)) ** 2)

    clusters: list[list[int]] = []
    for i in idx:
        if clusters and grid[i] - grid[clusters[-1][-1]] <= 3 * micro:
            clusters[-1].append(i)
        else:
            clusters.append([i])
    times = []
    for cl in clusters:
        i = min(cl, key=lambda j: e2[j])
        times.append(_bounded_min(f, grid[i - 1], grid[i + 1])[0])
    if len(times) < 2:
        raise ValueError("fewer than two recurrences in [0, t_hi]; increase t_hi")
    measured = (times[-1] - times[0]) / (len(times) - 1)
    predicted = 2 * math.pi / dw
    return EnvelopeCheck(measured, predicted, abs(measured - predicted) / predicted, times)


# --- figure datasets -----------------------------------------------------------------

PHI_SWEEP = tuple(k * math.pi / 8 for k in range(5))
NEAR_57 = tuple(math.sqrt(25 + 0.01 * k) for k in range(1, 6))

FIGURES = {
    "fig1": dict(omega_big=4.0, omegas=(3.9,), t=(0.0, 200.0), kind="markers",
                 caption="beating envelope, Delta omega = 0.1"),
    "fig2": dict(omega_big=7.0, omegas=(5.0,), t=(0.0, 4 * math.pi), kind="markers",
                 caption="omega:Omega = 5:7, t_min = pi"),
    "fig3a": dict(omega_big=3.0, omegas=(2.0,), t=(0.0, 6 * math.pi), kind="markers",
                  caption="omega:Omega = 2:3, t_min = 2 pi"),
    "fig3b": dict(omega_big=6.0, omegas=(4.0,), t=(0.0, 6 * math.pi), kind="markers",
                  caption="omega:Omega = 4:6, t_min = pi"),
    "fig4": dict(omega_big=7.0, omegas=(2.0, 3.0, 4.0, 5.0, 6.0), t=(0.0, 4 * math.pi),
                 kind="markers", caption="mixed fractional relations, common recurrence 2 pi"),
    "fig5": dict(omega_big=math.sqrt(50), omegas=(math.sqrt(26),), t=(0.0, 50.0),
                 kind="markers", caption="non-fractional pair close to 5:7"),
    "fig6": dict(omega_big=math.sqrt(5), omegas=(math.sqrt(3),), t=(0.0, 50.0),
                 kind="phase", caption="Omega > omega: |eta_bar|^2 largest at phi = pi/2"),
    "fig7": dict(omega_big=math.sqrt(3), omegas=(math.sqrt(5),), t=(0.0, 50.0),
                 kind="phase", caption="Omega < omega: |eta_bar|^2 largest at phi = 0"),
    "fig6b": dict(omega_big=7.0, omegas=NEAR_57, t=(0.0, 50.0), kind="total",
                  caption="five near-5:7 oscillators, t_s = 50"),
    "fig7b": dict(omega_big=7.0, omegas=NEAR_57, t=(0.0, 500.0), kind="total",
                  caption="five near-5:7 oscillators, t_s = 500"),
    "fig8": dict(omega_big=7.0, omegas=NEAR_57, t=(0.0, 10000.0), kind="total",
                 caption="five near-5:7 oscillators, t_s = 10000"),
}

ENSEMBLE_KEYS = ("g", "m", "beta", "y", "y_prime", "phi")


@dataclass
class FigureData:
    figure_id: str
    t: np.ndarray
    columns: dict
    metadata: dict
    series: Optional[MarkerSeries] = None


def _lattice_metadata(omega_big: float, omegas) -> dict:
    fracs, info = [], []
    for w in omegas:
        fr = None
        if float(omega_big).is_integer() and float(w).is_integer():
            fr = reduce_ratio(int(w), int(omega_big))
        else:
            fr = rationalize(w / omega_big, max_den=1000, eps=1e-12)
        if fr is None:
            info.append({"omega": w, "fraction": None})
            fracs = None
            continue
        info.append({"omega": w, "fraction": str(fr), "parity": str(fr.parity_class),
                     "t_min": t_min(omega_big, fr)})
        if fracs is not None:
            fracs.append(fr)
    meta = {"oscillators": info, "rationalize": {"max_den": 1000, "eps": 1e-12}}
    if fracs:
        meta["common_recurrence"] = common_recurrence(omega_big, fracs)
    return meta


def figure_data(figure_id: str, overrides: Optional[dict] = None,
                workers: Optional[int] = None) -> FigureData:
    """Dataset for one figure with its reference parameters as defaults.

    ``overrides`` may set g, m, beta, y, y_prime, phi, t_min, t_max and
    n_points. Unspecified ensemble parameters default to 1 (g, m, beta, y),
    0 (y_prime, phi).
    """
    if figure_id not in FIGURES:
        raise UnknownFigure(figure_id)
    fig = FIGURES[figure_id]
    ov = dict(overrides or {})
    unknown = set(ov) - set(ENSEMBLE_KEYS) - {"t_min", "t_max", "n_points"}
    if unknown:
        raise ValueError(f"unknown override keys: {sorted(unknown)}")
    t_lo = float(ov.pop("t_min", fig["t"][0]))
    t_hi = float(ov.pop("t_max", fig["t"][1]))
    n_points = ov.pop("n_points", None)
    ens = make_ensemble(fig["omega_big"], fig["omegas"], **ov)
    meta = {
        "figure": figure_id,
        "caption": fig["caption"],
        "omega_big": fig["omega_big"],
        "omegas": list(fig["omegas"]),
        "window": [t_lo, t_hi],
        "ensemble": {k: ov.get(k, v) for k, v in
                     dict(g=1.0, m=1.0, beta=1.0, y=1.0, y_prime=0.0, phi=0.0).items()},
    }
    meta.update(_lattice_metadata(fig["omega_big"], fig["omegas"]))
    if figure_id == "fig5":
        meta["note"] = ("omega = sqrt(26), Omega = sqrt(50): ratio 0.72111 lies near 5/7 "
                        "but is irrational, so no recurrence lattice exists")

    if fig["kind"] == "phase":
        w, W = fig["omegas"][0], fig["omega_big"]
        if n_points is None:
            n_points = default_n_points(ens, t_lo, t_hi)
        t = np.linspace(t_lo, t_hi, int(n_points))
        cols = {f"etabar2_phi{k}": np.abs(mk.eta_bar(w, W, phi, t)) ** 2
                for k, phi in enumerate(PHI_SWEEP)}
        ext = mk.phase_extremes(w, W)
        meta["phi_grid"] = list(PHI_SWEEP)
        meta["phi_at_max"] = ext.phi_at_max
        meta["sup_etabar2"] = [float(c.max()) for c in cols.values()]
        return FigureData(figure_id, t, cols, meta)

    series = marker_series(ens, t_lo, t_hi, n_points, workers)
    cols = {}
    if fig["kind"] == "markers":
        K = len(ens.oscillators)
        if K == 1:
            cols["gamma2"] = series.gamma_sq[0]
            cols["overlap"] = series.overlap[0]
        else:
            for k in range(K):
                cols[f"gamma2_k{k + 1}"] = series.gamma_sq[k]
            cols["gamma2_total"] = series.gamma_sq_total
            cols["overlap_total"] = series.overlap_total
    else:
        cols["gamma2_total"] = series.gamma_sq_total
    return FigureData(figure_id, series.grid, cols, meta, series)
