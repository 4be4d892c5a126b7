"""SVG figures for study reports, determinant scans and region maps."""

from __future__ import annotations

from typing import Mapping

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402
from matplotlib.lines import Line2D  # noqa: E402
from matplotlib.patches import Patch  # noqa: E402

from .convergence import ConvergenceReport, RegionProbe  # noqa: E402

PLOT_KINDS = ("error_vs_n", "abs_det_vs_lambda", "region_map")
ERROR_SERIES = ("err_kernel", "err_t", "err_tprime")
SERIES_LABELS = {
    "err_kernel": "kernel",
    "err_t": "row Carleman function",
    "err_tprime": "column Carleman function",
    "err_kernel_tilde": "kernel, two-sided",
    "err_t_tilde": "row Carleman function, two-sided",
    "err_tprime_tilde": "column Carleman function, two-sided",
}
ERROR_YLABEL = "sup error of truncated resolvent vs limit"
REGION_COLORS = {True: "#4c72b0", False: "#dd8452"}


class MissingSeriesError(ValueError):
    """The data handed to a plot lacks a required series."""


def _finite(values) -> bool:
    arr = np.asarray(values, float)
    return arr.size > 0 and bool(np.all(np.isfinite(arr)))


def _save(fig, path, config_hash: str | None) -> None:
    meta = {"Date": None, "Creator": "rkl"}
    if config_hash:
        meta["Description"] = f"config_hash: {config_hash}"
    with matplotlib.rc_context({"svg.hashsalt": "rkl", "svg.fonttype": "path"}):
        fig.savefig(path, format="svg", metadata=meta)
    plt.close(fig)


def _error_data(data) -> tuple[list, dict, str]:
    if isinstance(data, ConvergenceReport):
        n = list(data.n_list)
        series = {k: data.series(k) for k in ERROR_SERIES if data.series(k)}
        ylabel = ERROR_YLABEL
    elif isinstance(data, Mapping):
        n = list(data.get("n", []))
        series = dict(data.get("series", {}))
        ylabel = data.get("ylabel", ERROR_YLABEL)
    else:
        raise TypeError("error_vs_n needs a ConvergenceReport or a mapping")
    if not n or not series:
        raise MissingSeriesError("error_vs_n needs n values and at least one series")
    for name, vals in series.items():
        if len(vals) != len(n):
            raise MissingSeriesError(f"series {name!r} has {len(vals)} values for {len(n)} n")
    return n, series, ylabel


def plot_error_vs_n(data, path, config_hash: str | None = None) -> None:
    n, series, ylabel = _error_data(data)
    fig, ax = plt.subplots(figsize=(6, 4))
    for name, vals in series.items():
        v = np.asarray(vals, float)
        # log axis: clip exact zeros to a visible floor
        v = np.where(v > 0, v, 1e-17)
        (line,) = ax.semilogy(n, v, marker="o", label=SERIES_LABELS.get(name, name))
        line.set_gid(f"series-{name}")
    ax.set_xlabel("truncation index n")
    ax.set_ylabel(ylabel)
    ax.legend(fontsize="small")
    ax.grid(True, which="major", alpha=0.3)
    fig.tight_layout()
    _save(fig, path, config_hash)


def plot_abs_det(data: Mapping, path, config_hash: str | None = None) -> None:
    """``data`` holds ``lambda_re`` and ``abs_det`` (optionally ``zeros``)."""
    if "lambda_re" not in data or "abs_det" not in data:
        raise MissingSeriesError("abs_det_vs_lambda needs lambda_re and abs_det")
    x = np.asarray(data["lambda_re"], float)
    y = np.asarray(data["abs_det"], float)
    if x.size == 0 or x.shape != y.shape:
        raise MissingSeriesError("abs_det_vs_lambda needs aligned, non-empty series")
    fig, ax = plt.subplots(figsize=(6, 4))
    (line,) = ax.semilogy(x, np.where(y > 0, y, 1e-17), label="|D(lambda)|")
    line.set_gid("series-abs_det")
    zeros = [float(z) for z in data.get("zeros", [])]
    for z in zeros:
        ax.axvline(z, color="0.5", lw=0.8, ls="--")
    ax.set_xlabel("Re lambda")
    ax.set_ylabel("|D(lambda)|, Fredholm determinant")
    ax.legend(fontsize="small")
    fig.tight_layout()
    _save(fig, path, config_hash)


def plot_region_map(probe: RegionProbe, path, config_hash: str | None = None) -> None:
    if not isinstance(probe, RegionProbe):
        raise TypeError("region_map needs a RegionProbe")
    if not probe.bounded or not probe.re:
        raise MissingSeriesError("region_map needs a non-empty probe grid")
    re = np.asarray(probe.re, float)
    im = np.asarray(probe.im, float)
    bounded = np.asarray(probe.bounded, bool)
    fig, ax = plt.subplots(figsize=(6, 3.5))
    handles = []
    for cls in (True, False):
        jj, ii = np.nonzero(bounded == cls)
        if jj.size == 0:
            continue
        label = "bounded" if cls else "unbounded"
        coll = ax.scatter(re[ii], im[jj], s=30, marker="s", color=REGION_COLORS[cls])
        coll.set_gid(f"class-{label}")
        handles.append(Patch(color=REGION_COLORS[cls], label=label))
    if probe.characteristic:
        zs = np.asarray(probe.characteristic, complex)
        ax.scatter(zs.real, zs.imag, marker="x", color="k", s=50, zorder=3)
        handles.append(Line2D([], [], marker="x", color="k", ls="", label="characteristic value"))
    ax.set_xlabel("Re lambda")
    ax.set_ylabel("Im lambda")
    ax.set_title(f"max_n ||T_n|lambda|| below {probe.threshold:g}", fontsize="medium")
    ax.legend(handles=handles, fontsize="small", loc="upper right")
    fig.tight_layout()
    _save(fig, path, config_hash)


def render_plot(data, kind: str, path, config_hash: str | None = None) -> None:
    """Render ``kind`` (one of ``PLOT_KINDS``) to an SVG file at ``path``."""
    if kind == "error_vs_n":
        plot_error_vs_n(data, path, config_hash)
    elif kind == "abs_det_vs_lambda":
        plot_abs_det(data, path, config_hash)
    elif kind == "region_map":
        plot_region_map(data, path, config_hash)
    else:
        raise ValueError(f"unknown plot kind {kind!r}; expected one of {PLOT_KINDS}")
