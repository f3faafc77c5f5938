"""Optional figure rendering for the CLI report path.

Figures are written to files next to the delimited output, never shown
interactively, so the Agg backend is forced before pyplot is imported.
matplotlib is only imported when a plot is actually requested."""

from __future__ import annotations

from pathlib import Path
from typing import Iterable, Mapping, Sequence


def _pyplot():
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    return plt


def plot_stream(
    records: Sequence[tuple[float, float, float]],
    path: str | Path,
    title: str,
) -> None:
    """Partial-sum trajectory: cumulative value against the modulus cutoff.

    records holds (c, term, cumulative) triples as emitted by the stream
    subcommands."""
    plt = _pyplot()
    fig, ax = plt.subplots(figsize=(8.0, 5.0), dpi=120)
    xs = [r[0] for r in records]
    ys = [r[2] for r in records]
    ax.plot(xs, ys, lw=0.9)
    ax.axhline(0.0, color="0.6", lw=0.6)
    ax.set_xlabel("modulus c")
    ax.set_ylabel("partial sum")
    ax.set_title(title)
    fig.tight_layout()
    fig.savefig(path)
    plt.close(fig)


def plot_scan(rows: Iterable[Mapping[str, object]], path: str | Path) -> None:
    """Residual sizes across the scanned discriminants, log-log, with the
    main-term magnitudes drawn for scale."""
    plt = _pyplot()
    rows = list(rows)
    fig, ax = plt.subplots(figsize=(8.0, 5.0), dpi=120)
    ds = [float(r["D"]) for r in rows]
    residuals = [abs(float(r["residual"])) for r in rows]
    mains = [abs(float(r["main_term"])) for r in rows]
    ax.plot(ds, residuals, ".", ms=4, label="|residual|")
    ax.plot(ds, mains, ".", ms=4, alpha=0.5, label="|main term|")
    ax.set_xscale("log")
    ax.set_yscale("log")
    ax.set_xlabel("discriminant D")
    ax.set_ylabel("magnitude")
    ax.set_title("cycle integral scan")
    ax.legend()
    fig.tight_layout()
    fig.savefig(path)
    plt.close(fig)
