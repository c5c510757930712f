"""Deterministic figure builders keyed by figure id."""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402

from .schema import SchemaError, read_csv, validate_columns  # noqa: E402

# fixed style so re-renders are reproducible byte-for-byte (post metadata strip)
_RC = {
    "figure.dpi": 110,
    "savefig.dpi": 110,
    "font.family": "DejaVu Sans",
    "font.size": 9,
    "axes.grid": True,
    "grid.alpha": 0.3,
    "lines.linewidth": 1.2,
    "svg.hashsalt": "figkit",
}

_QUANTS = (("rho", r"$\rho$"), ("ux", "$u$"), ("T", "$T$"))


@dataclass
class FigureSpec:
    figure: str
    inputs: list
    output: str
    labels: list = field(default_factory=list)
    title: str = ""

    @staticmethod
    def from_json(path) -> "FigureSpec":
        raw = json.loads(Path(path).read_text())
        unknown = set(raw) - {"figure", "inputs", "output", "labels", "title"}
        if unknown:
            raise SchemaError(f"unknown spec keys {sorted(unknown)}")
        return FigureSpec(**raw)


def render(spec: FigureSpec) -> Path:
    try:
        builder = _BUILDERS[spec.figure]
    except KeyError:
        raise SchemaError(
            f"unknown figure id {spec.figure!r}; expected one of {sorted(_BUILDERS)}")
    out = Path(spec.output)
    out.parent.mkdir(parents=True, exist_ok=True)
    with plt.rc_context(_RC):
        fig = builder(spec)
        fig.savefig(out, metadata={"Software": "figkit"})
        plt.close(fig)
    return out


def _label(spec, i, default):
    return spec.labels[i] if i < len(spec.labels) else default


def _profile_triptych(spec: FigureSpec):
    fig, axes = plt.subplots(1, 3, figsize=(9.6, 3.0), constrained_layout=True)
    for i, path in enumerate(spec.inputs):
        cols = read_csv(path)
        validate_columns(cols, ["x", "rho", "ux", "uy", "T"], path)
        name = _label(spec, i, Path(path).stem)
        for ax, (q, sym) in zip(axes, _QUANTS):
            ax.plot(cols["x"], cols[q], label=name)
            std = cols.get(f"std_{q}")
            if std is not None:
                ax.fill_between(cols["x"], cols[q] - std, cols[q] + std,
                                alpha=0.25, linewidth=0)
            ax.set_xlabel("$x$")
            ax.set_title(sym)
    axes[0].legend(loc="best", fontsize=7)
    if spec.title:
        fig.suptitle(spec.title)
    return fig


def _error_decay(spec: FigureSpec):
    fig, ax = plt.subplots(figsize=(4.8, 3.4), constrained_layout=True)
    for path in spec.inputs:
        cols = read_csv(path)
        validate_columns(cols, ["method", "samples"], path)
        err_cols = [c for c in cols if c.startswith("err_")]
        if not err_cols:
            raise SchemaError(f"{path}: no err_* columns; found {sorted(cols)}")
        methods = np.unique(cols["method"])
        for m in methods:
            sel = cols["method"] == m
            order = np.argsort(cols["samples"][sel])
            for c in err_cols:
                ax.loglog(cols["samples"][sel][order], cols[c][sel][order],
                          marker="o", markersize=3,
                          label=f"{m} {c.removeprefix('err_')}")
    ax.set_xlabel("samples $M_0$")
    ax.set_ylabel("global error")
    ax.legend(fontsize=7)
    if spec.title:
        ax.set_title(spec.title)
    return fig


def _convergence(spec: FigureSpec):
    fig, ax = plt.subplots(figsize=(4.8, 3.4), constrained_layout=True)
    for path in spec.inputs:
        cols = read_csv(path)
        validate_columns(cols, ["method", "k", "err_all"], path)
        methods = np.unique(cols["method"])
        for m in methods:
            sel = (cols["method"] == m) & (cols["k"] > 0)
            if sel.any():
                order = np.argsort(cols["k"][sel])
                ax.semilogy(cols["k"][sel][order], cols["err_all"][sel][order],
                            marker="s", markersize=3, label=str(m))
            base = (cols["method"] == m) & (cols["k"] == 0)
            if base.any():   # low-vs-high reference level
                ax.axhline(float(cols["err_all"][base][0]), linestyle=":",
                           color="k", label=str(m))
    ax.set_xlabel("high-fidelity runs $K$")
    ax.set_ylabel("mean $L^2$ error")
    ax.legend(fontsize=7)
    if spec.title:
        ax.set_title(spec.title)
    return fig


def _regime_fraction(spec: FigureSpec):
    fig, ax = plt.subplots(figsize=(4.8, 3.0), constrained_layout=True)
    for i, path in enumerate(spec.inputs):
        cols = read_csv(path)
        validate_columns(cols, ["step", "cell", "label"], path)
        steps = np.unique(cols["step"])
        frac = [cols["label"][cols["step"] == s].mean() for s in steps]
        ax.plot(steps, frac, label=_label(spec, i, Path(path).stem))
    ax.set_xlabel("step")
    ax.set_ylabel("kinetic cell fraction")
    ax.set_ylim(-0.02, 1.02)
    ax.legend(fontsize=7)
    if spec.title:
        ax.set_title(spec.title)
    return fig


def _epsilon_profile(spec: FigureSpec):
    fig, ax = plt.subplots(figsize=(3.6, 3.0), constrained_layout=True)
    for path in spec.inputs:
        cols = read_csv(path)
        validate_columns(cols, ["x", "eps"], path)
        ax.semilogy(cols["x"], cols["eps"])
    ax.set_xlabel("$x$")
    ax.set_ylabel(r"$\varepsilon(x)$")
    if spec.title:
        ax.set_title(spec.title)
    return fig


_BUILDERS = {
    "profile-triptych": _profile_triptych,
    "error-decay": _error_decay,
    "convergence": _convergence,
    "regime-fraction": _regime_fraction,
    "epsilon-profile": _epsilon_profile,
}
