"""Render report figures to image files next to the delimited output.

matplotlib is imported lazily so that library users who never render
figures do not pay the import, and the Agg backend is forced so the
functions work in headless environments.  Figures are a convenience
view of the CSV rows; the CSV stays the authoritative artifact and the
byte-identity guarantees cover only the delimited and JSON outputs.
"""

from __future__ import annotations

from pathlib import Path


def _pyplot():
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    return plt


def _sorted_by_size(rows):
    return sorted(rows, key=lambda r: (r.m, r.n))


def render_scan_figure(rows, path) -> Path:
    """One panel per experiment: lower (solid) and upper (dashed) bounds
    against the family size, one line pair per exponent."""
    plt = _pyplot()
    path = Path(path)
    experiments = sorted({r.experiment for r in rows})
    fig, axes = plt.subplots(
        len(experiments), 1, figsize=(7.0, 3.2 * max(1, len(experiments))), squeeze=False
    )
    for ax, name in zip(axes[:, 0], experiments):
        sub = [r for r in rows if r.experiment == name]
        for p in sorted({r.p for r in sub}):
            line = _sorted_by_size([r for r in sub if r.p == p])
            sizes = [r.m for r in line]
            ax.plot(sizes, [r.lower for r in line], marker="o", label=f"p={p:g} lower")
            uppers = [(r.m, r.upper) for r in line if r.upper is not None]
            if uppers:
                ax.plot([u[0] for u in uppers], [u[1] for u in uppers],
                        linestyle="--", marker=".", label=f"p={p:g} upper")
        ax.set_xlabel("family size")
        ax.set_ylabel("bound value")
        ax.set_title(name)
        ax.legend(fontsize=7, ncol=2)
        ax.grid(True, alpha=0.3)
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)
    return path


def render_verify_figures(rows, out_dir) -> list[Path]:
    """Figures for the verification report: the lower/upper sandwich
    scatter and the witness feasibility margin histogram."""
    plt = _pyplot()
    out_dir = Path(out_dir)
    written: list[Path] = []

    sandwich = [r for r in rows if r.experiment == "sandwich" and r.upper is not None]
    if sandwich:
        fig, ax = plt.subplots(figsize=(6.0, 4.5))
        for p in sorted({r.p for r in sandwich}):
            sub = [r for r in sandwich if r.p == p]
            ax.scatter([r.upper for r in sub], [r.lower for r in sub], s=12,
                       alpha=0.7, label=f"p={p:g}")
        lim = max(r.upper for r in sandwich)
        ax.plot([0.0, lim], [0.0, lim], color="black", linewidth=0.8, label="lower = upper")
        ax.set_xlabel("closed-form upper bound")
        ax.set_ylabel("certified lower bound")
        ax.set_title("certified bounds against the closed-form ceiling")
        ax.legend(fontsize=8)
        ax.grid(True, alpha=0.3)
        fig.tight_layout()
        target = out_dir / "sandwich.png"
        fig.savefig(target, dpi=150)
        plt.close(fig)
        written.append(target)

    feasibility = [r for r in rows if r.experiment == "walsh-feasibility"]
    if feasibility:
        fig, ax = plt.subplots(figsize=(6.0, 4.5))
        margins = [r.lower - 1.0 for r in feasibility]
        ax.hist(margins, bins=40, color="tab:blue", alpha=0.8)
        ax.axvline(0.0, color="black", linewidth=0.8)
        ax.set_xlabel("constraint value minus 1")
        ax.set_ylabel("witness count")
        ax.set_title("witness feasibility margins")
        ax.grid(True, alpha=0.3)
        fig.tight_layout()
        target = out_dir / "walsh_feasibility.png"
        fig.savefig(target, dpi=150)
        plt.close(fig)
        written.append(target)

    return written
