"""
Figure rendering for sweep results (log-log decay plots).
"""

import matplotlib
matplotlib.use("Agg")
import matplotlib.pyplot as plt


def render_sweep_plot(records, path: str) -> None:
    """Log-log plot of tv, bound and (if present) the comparison bound
    against N, written to ``path``."""
    def series(attr):
        pts = [(r.N, getattr(r, attr)) for r in records
               if getattr(r, attr) is not None and getattr(r, attr) > 0]
        return ([p[0] for p in pts], [p[1] for p in pts])

    fig, ax = plt.subplots(figsize=(6.0, 4.5))
    for attr, label, style in (("tv", "exact TV", "o-"),
                               ("bound", "certified bound", "s--"),
                               ("bound_wx", "comparison bound", "^:")):
        xs, ys = series(attr)
        if xs:
            ax.loglog(xs, ys, style, label=label)
    ax.set_xlabel("N")
    ax.set_ylabel("total variation")
    ax.grid(True, which="both", alpha=0.3)
    ax.legend()
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)
