"""Render protocol-comparison panels from qpme CSV outputs.

A panel spec is a JSON document naming the CSV series to draw, their color
roles, axis scales, an optional switch-time marker, and an optional inset
showing the difference of two series. Color roles are fixed by convention:
red = symmetric evolution, blue = asymmetric, green = two-step protocol.
"""

from __future__ import annotations

import csv
import json
import os

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt
import numpy as np

ROLE_COLORS = {"red": "tab:red", "blue": "tab:blue", "green": "tab:green"}


class PanelError(Exception):
    """Invalid panel spec or unusable input CSV."""


def read_series_csv(path):
    """Read a (time|bin_center, mean, stderr[, n]) CSV into arrays."""
    if not os.path.exists(path):
        raise PanelError(f"missing CSV: {path}")
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise PanelError(f"empty CSV: {path}") from None
        rows = [row for row in reader if row]
    if not rows:
        raise PanelError(f"no data rows in {path}")
    columns = {name: i for i, name in enumerate(header)}
    axis = "time" if "time" in columns else "bin_center"
    value = "mean" if "mean" in columns else "weight_mean"
    err = "stderr" if "stderr" in columns else "weight_stderr"
    for needed in (axis, value, err):
        if needed not in columns:
            raise PanelError(f"{path} lacks column {needed!r} (has {header})")
    data = np.array([[float(r[columns[axis]]), float(r[columns[value]]), float(r[columns[err]])] for r in rows])
    return data[:, 0], data[:, 1], data[:, 2]


def _load_spec(spec):
    if isinstance(spec, (str, os.PathLike)):
        try:
            with open(spec, encoding="utf-8") as fh:
                spec = json.load(fh)
        except OSError as exc:
            raise PanelError(f"cannot read panel spec: {exc}") from exc
        except json.JSONDecodeError as exc:
            raise PanelError(f"malformed panel spec JSON: {exc}") from exc
    if not isinstance(spec, dict):
        raise PanelError("panel spec must be a JSON object")
    if not spec.get("series"):
        raise PanelError("panel spec needs a nonempty 'series' list")
    return spec


def render_panel(spec, out_path: str):
    """Draw one panel and write it to ``out_path`` (.png or .pdf).

    Each series entry: {"csv": path, "label": str, "role": red|blue|green}.
    Optional keys: title, xlabel, ylabel, xscale, yscale (log|linear),
    switch_time (vertical dotted marker), and inset {"a": csv, "b": csv,
    "label": str} drawing mean(a) - mean(b) with quadrature error band.
    """
    spec = _load_spec(spec)
    fig, ax = plt.subplots(figsize=(5.2, 3.6), dpi=150)
    try:
        for entry in spec["series"]:
            role = entry.get("role")
            if role not in ROLE_COLORS:
                raise PanelError(f"series role must be one of {sorted(ROLE_COLORS)}, got {role!r}")
            x, mean, err = read_series_csv(entry["csv"])
            color = ROLE_COLORS[role]
            ax.plot(x, mean, color=color, lw=1.5, label=entry.get("label", role))
            ax.fill_between(x, mean - err, mean + err, color=color, alpha=0.25, lw=0)
        ax.set_xscale(spec.get("xscale", "log"))
        ax.set_yscale(spec.get("yscale", "linear"))
        ax.set_xlabel(spec.get("xlabel", "time"))
        ax.set_ylabel(spec.get("ylabel", ""))
        if spec.get("title"):
            ax.set_title(spec["title"])
        if spec.get("switch_time") is not None:
            ax.axvline(spec["switch_time"], color="gray", ls=":", lw=1.0)
        ax.legend(frameon=False, fontsize=8)

        inset = spec.get("inset")
        if inset:
            xa, ma, ea = read_series_csv(inset["a"])
            xb, mb, eb = read_series_csv(inset["b"])
            if xa.shape != xb.shape or np.abs(xa - xb).max() > 1e-12:
                raise PanelError("inset series have different grids")
            iax = ax.inset_axes([0.58, 0.55, 0.38, 0.38])
            diff = ma - mb
            band = np.sqrt(ea**2 + eb**2)
            iax.plot(xa, diff, color="black", lw=1.0)
            iax.fill_between(xa, diff - band, diff + band, color="black", alpha=0.2, lw=0)
            iax.axhline(0.0, color="gray", lw=0.6)
            iax.set_xscale(spec.get("xscale", "log"))
            iax.set_title(inset.get("label", ""), fontsize=7)
            iax.tick_params(labelsize=6)

        fig.tight_layout()
        fig.savefig(out_path, metadata=_stable_metadata(out_path))
    finally:
        plt.close(fig)
    return out_path


def _stable_metadata(out_path):
    # strip creator/date stamps so identical inputs give identical bytes
    ext = os.path.splitext(out_path)[1].lower()
    if ext == ".png":
        return {"Software": "qpme_figs"}
    if ext == ".pdf":
        return {"Creator": "qpme_figs", "Producer": "qpme_figs", "CreationDate": None}
    return None
