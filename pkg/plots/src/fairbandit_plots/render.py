"""Figure rendering from run / lowerbound CSVs.

Reads the runner's CSV schemas byte-exactly as documented there:

  run CSV:        t,k_t,i_t,v_t,regret_inc,cum_regret,min_slack,event_e_flag
  lowerbound CSV: instance,seed,statistic,final_regret

Reference envelopes are anchored at the final data point (the source
gives rates, not constants).  In loglog mode the regret figure annotates
the least-squares slope of log(cum_regret) against log(t) over the final
half of rounds.
"""

import os
from dataclasses import dataclass, field

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np

RUN_HEADER = "t,k_t,i_t,v_t,regret_inc,cum_regret,min_slack,event_e_flag"
LB_HEADER = "instance,seed,statistic,final_regret"

KINDS = ("regret_curve", "violation_timeline", "lb_bars")
REFERENCES = ("sqrtT", "T23")


class InputError(Exception):
    """Missing file, schema mismatch, or empty CSV."""


@dataclass
class PlotJob:
    inputs: list
    out: str
    kind: str = "regret_curve"
    reference_curves: tuple = ()
    scale: str = "linear"
    dpi: int = 120

    def __post_init__(self):
        if self.kind not in KINDS:
            raise InputError(f"unknown plot kind {self.kind!r}; choose from {KINDS}")
        if self.scale not in ("linear", "loglog"):
            raise InputError(f"scale must be linear or loglog, got {self.scale!r}")
        for ref in self.reference_curves:
            if ref not in REFERENCES:
                raise InputError(f"unknown reference curve {ref!r}; choose from {REFERENCES}")


def _read_csv(path: str, expected_header: str):
    if not os.path.exists(path):
        raise InputError(f"input file not found: {path}")
    with open(path) as fh:
        lines = [line.rstrip("\n") for line in fh]
    if not lines or lines[0] != expected_header:
        got = lines[0] if lines else "<empty file>"
        raise InputError(f"{path}: header mismatch; expected {expected_header!r}, got {got!r}")
    rows = [line.split(",") for line in lines[1:] if line]
    if not rows:
        raise InputError(f"{path}: no data rows")
    return rows


def fit_loglog_slope(t: np.ndarray, y: np.ndarray):
    """Least-squares slope of log(y) vs log(t) over the final half of
    rounds; None when fewer than two positive points remain."""
    half = t >= t[-1] / 2.0
    keep = half & (y > 0) & (t > 0)
    if keep.sum() < 2:
        return None
    lx = np.log(t[keep])
    ly = np.log(y[keep])
    lx_c = lx - lx.mean()
    return float((lx_c * (ly - ly.mean())).sum() / (lx_c * lx_c).sum())


def _reference_series(name: str, t: np.ndarray, anchor_t: float, anchor_y: float):
    if anchor_y <= 0 or anchor_t <= 0:
        return None
    if name == "sqrtT":
        return anchor_y * np.sqrt(t / anchor_t), r"$\propto\sqrt{t}$"
    return anchor_y * (t / anchor_t) ** (2.0 / 3.0), r"$\propto t^{2/3}$"


def render(job: PlotJob) -> dict:
    """Render one figure; returns metadata including the annotated slope."""
    meta = {"out": job.out, "kind": job.kind, "n_series": len(job.inputs)}
    if not job.inputs:
        raise InputError("no input files given")

    fig, ax = plt.subplots(figsize=(7.0, 4.5))
    try:
        if job.kind in ("regret_curve", "violation_timeline"):
            slope = None
            for path in job.inputs:
                rows = _read_csv(path, RUN_HEADER)
                t = np.array([float(r[0]) for r in rows]) + 1.0
                if job.kind == "regret_curve":
                    y = np.array([float(r[5]) for r in rows])
                    label = os.path.basename(path)
                else:
                    y = np.maximum(0.0, -np.array([float(r[6]) for r in rows]))
                    label = os.path.basename(path)
                ax.plot(t, y, label=label, linewidth=1.2)
                if job.kind == "regret_curve":
                    for ref in job.reference_curves:
                        series = _reference_series(ref, t, t[-1], y[-1])
                        if series is not None:
                            ax.plot(t, series[0], "--", linewidth=0.9, label=series[1])
                    if job.scale == "loglog" and slope is None:
                        slope = fit_loglog_slope(t, y)
            if job.scale == "loglog":
                ax.set_xscale("log")
                ax.set_yscale("log")
                if job.kind == "regret_curve" and slope is not None:
                    ax.text(0.05, 0.92, f"fitted slope (final half): {slope:.6f}",
                            transform=ax.transAxes, fontsize=9)
                    meta["slope"] = slope
            ax.set_xlabel("round")
            ax.set_ylabel("cumulative regret" if job.kind == "regret_curve"
                          else "constraint violation")
            ax.legend(fontsize=8)
        else:
            rows = _read_csv(job.inputs[0], LB_HEADER)
            labels = [f"{r[0]}/s{r[1]}" for r in rows]
            stats = [float(r[2]) for r in rows]
            ax.bar(range(len(rows)), stats, color=["C0" if r[0] == "mu1" else "C1"
                                                   for r in rows])
            ax.set_xticks(range(len(rows)))
            ax.set_xticklabels(labels, rotation=45, ha="right", fontsize=8)
            ax.set_ylabel("exploration statistic")
        ax.set_title(job.kind.replace("_", " "))
        fig.tight_layout()
        fig.savefig(job.out, dpi=job.dpi, metadata={"Software": None})
    finally:
        plt.close(fig)
    return meta
