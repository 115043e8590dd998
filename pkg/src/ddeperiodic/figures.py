"""Matplotlib renderings written next to the delimited report output."""

from __future__ import annotations

import numpy as np

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt  # noqa: E402


def save_resonance_scan(path, scan, period=None):
    """Resonance margin versus period; dips to zero mark resonant periods."""
    scan = np.asarray(scan)
    fig, ax = plt.subplots(figsize=(6, 3.5))
    ax.semilogy(scan[:, 0], np.maximum(scan[:, 1], 1e-18), lw=1.2)
    if period is not None:
        ax.axvline(period, color="tab:red", ls="--", lw=1.0, label="configured period")
        ax.legend(frameon=False)
    ax.set_xlabel("period T")
    ax.set_ylabel("normalized resonance margin")
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)
    return path


def _draw_domain(ax, dom):
    theta = np.linspace(0, 2 * np.pi, 256)
    ax.plot(dom.radius * np.cos(theta), dom.radius * np.sin(theta), "k-", lw=1.0)
    for c, r in zip(dom.centers, dom.hole_radii):
        ax.plot(c[0] + r * np.cos(theta), c[1] + r * np.sin(theta), "k-", lw=0.8)
        ax.plot([c[0]], [c[1]], "kx", ms=4)
    ax.set_aspect("equal")


def save_solutions(path, solset, sys, dom=None, samples=512):
    """Found orbits: time series for scalar systems, phase portrait otherwise."""
    ts = np.linspace(0.0, sys.period, samples + 1)
    fig, ax = plt.subplots(figsize=(6, 5))
    if sys.dim == 1:
        for i, rec in enumerate(solset.records):
            ax.plot(ts, rec.u.evaluate(ts)[:, 0], lw=1.2, label=f"solution {i}")
        ax.set_xlabel("t")
        ax.set_ylabel("u")
    else:
        if dom is not None and dom.dim == 2:
            _draw_domain(ax, dom)
        for i, rec in enumerate(solset.records):
            vals = rec.u.evaluate(ts)
            ax.plot(vals[:, 0], vals[:, 1], lw=1.2, label=f"solution {i}")
        ax.set_xlabel("u1")
        ax.set_ylabel("u2")
    if solset.records:
        ax.legend(frameon=False, fontsize=8)
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)
    return path


def save_multipliers(path, floquet):
    """Floquet multipliers against the unit circle."""
    theta = np.linspace(0, 2 * np.pi, 256)
    fig, ax = plt.subplots(figsize=(4.5, 4.5))
    ax.plot(np.cos(theta), np.sin(theta), "k--", lw=0.8)
    pts = np.array([[z.real, z.imag] for z in floquet.multipliers])
    if len(pts):
        ax.plot(pts[:, 0], pts[:, 1], "o", ms=4, alpha=0.8)
    ax.set_aspect("equal")
    ax.set_xlabel("Re")
    ax.set_ylabel("Im")
    ax.set_title(f"alpha = {floquet.alpha}, index = {floquet.index}")
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)
    return path


def save_boundary_margins(path, sys, dom, samples=512):
    """Distribution of boundary inner products; everything must stay negative."""
    points, normals = dom.boundary_points(samples)
    vals = np.einsum("ij,ij->i", sys.field_values(points, points), normals)
    fig, ax = plt.subplots(figsize=(6, 3.5))
    ax.hist(vals, bins=48, color="tab:blue", alpha=0.85)
    ax.axvline(0.0, color="tab:red", lw=1.0)
    ax.set_xlabel("<g(x,x), normal(x)> on the boundary")
    ax.set_ylabel("samples")
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)
    return path
