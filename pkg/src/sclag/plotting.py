"""Report figures rendered with the Agg backend next to the JSON/CSV output."""

from __future__ import annotations

import math
from pathlib import Path

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402

FACE_COLORS = {"interior": "tab:gray", "e": "tab:blue", "psi": "tab:red", "psie": "tab:purple"}
_META = {"Software": None}


def _save(fig, path: Path) -> str:
    path.parent.mkdir(parents=True, exist_ok=True)
    fig.savefig(path, dpi=110, metadata=_META)
    plt.close(fig)
    return path.name


def lambda_points(rows: list[dict], d: int, path: Path, title: str = "") -> str:
    """Compactified (base, fiber) coordinates of Lambda samples, one panel per face."""
    faces = [f for f in ("interior", "e", "psi", "psie") if any(r["face"] == f for r in rows)]
    fig, axes = plt.subplots(1, max(len(faces), 1), figsize=(3.4 * max(len(faces), 1), 3.2), squeeze=False)
    for ax, face in zip(axes[0], faces):
        pts = np.array([r["base"][:1] + r["fiber"][:1] for r in rows if r["face"] == face], float)
        ax.scatter(pts[:, 0], pts[:, 1], s=12, color=FACE_COLORS[face])
        ax.set_title(face)
        ax.set_xlabel("base[0]")
        ax.set_ylabel("fiber[0]")
        ax.set_xlim(-1.1, 1.1) if face in ("e", "psie") else None
        ax.set_ylim(-1.1, 1.1) if face in ("psi", "psie") else None
    if title:
        fig.suptitle(title)
    fig.tight_layout()
    return _save(fig, path)


def decay_fits(results: list[dict], path: Path, title: str = "") -> str:
    """Log-log magnitudes of localized transforms against the probe scale."""
    fig, ax = plt.subplots(figsize=(5, 3.6))
    for k, r in enumerate(results):
        mags = np.asarray(r["magnitudes"], float)
        scales = np.asarray(r["scales"], float)
        mags = np.where(mags > 0, mags, np.nan)
        style = "-" if r["verdict"] == "singular" else "--"
        ax.loglog(scales, mags, style, marker="o", ms=3, label=f"{k}: {r['face']} {r['verdict']}")
    ax.set_xlabel("scale")
    ax.set_ylabel("|localized transform|")
    if len(results) <= 12:
        ax.legend(fontsize=6)
    if title:
        ax.set_title(title)
    fig.tight_layout()
    return _save(fig, path)


def eps_sweep(per_eps: list, eps: list, path: Path, title: str = "") -> str:
    fig, ax = plt.subplots(figsize=(4.5, 3.4))
    vals = np.array(per_eps, float)
    ax.plot(eps, vals[:, 0], marker="o", label="Re")
    ax.plot(eps, vals[:, 1], marker="s", label="Im")
    ax.set_xscale("log")
    ax.set_xlabel("eps")
    ax.set_ylabel("regularized value")
    ax.legend(fontsize=7)
    if title:
        ax.set_title(title)
    fig.tight_layout()
    return _save(fig, path)


def symbol_values(rows: list[dict], path: Path, title: str = "") -> str:
    """Modulus and phase (in units of pi/4) of boundary symbol values per parametrization."""
    fig, (a1, a2) = plt.subplots(1, 2, figsize=(7, 3.2))
    names = sorted({r["name"] for r in rows})
    for n in names:
        sel = [r for r in rows if r["name"] == n]
        idx = np.arange(len(sel))
        vals = np.array([complex(*r["value"]) for r in sel])
        a1.plot(idx, np.abs(vals), marker="o", label=n)
        a2.plot(idx, np.angle(vals) / (math.pi / 4), marker="o", label=n)
    a1.set_ylabel("|gamma|")
    a2.set_ylabel("arg gamma / (pi/4)")
    for ax in (a1, a2):
        ax.set_xlabel("sample")
    a1.legend(fontsize=7)
    if title:
        fig.suptitle(title)
    fig.tight_layout()
    return _save(fig, path)
