"""Figure rendering for the CLI report path.

Each helper takes already-computed table data and writes one PNG next to the
delimited output. matplotlib is imported lazily with the Agg backend so the
core library never needs a display (and never pays the import cost unless a
figure was requested).
"""

from __future__ import annotations

from pathlib import Path


def _pyplot():
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    return plt


def residuals_figure(residuals: list[float], path: str | Path) -> Path:
    """Per-sweep sup-norm residuals on a log scale."""
    plt = _pyplot()
    fig, ax = plt.subplots(figsize=(6, 4))
    sweeps = range(1, len(residuals) + 1)
    positive = [max(r, 1e-16) for r in residuals]
    ax.semilogy(sweeps, positive, marker="o")
    ax.set_xlabel("sweep")
    ax.set_ylabel("sup-norm residual")
    ax.set_title("Value iteration convergence")
    ax.grid(True, alpha=0.3)
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)
    return Path(path)


def returns_figure(returns: list[float], path: str | Path, window: int = 25) -> Path:
    """Episode returns with a moving average overlay."""
    plt = _pyplot()
    fig, ax = plt.subplots(figsize=(6, 4))
    episodes = range(1, len(returns) + 1)
    ax.plot(episodes, returns, alpha=0.3, label="episode return")
    if len(returns) >= window:
        avg = [
            sum(returns[max(0, i - window): i]) / len(returns[max(0, i - window): i])
            for i in range(1, len(returns) + 1)
        ]
        ax.plot(episodes, avg, label=f"{window}-episode average")
    ax.set_xlabel("episode")
    ax.set_ylabel("return")
    ax.set_title("Q-learning training returns")
    ax.legend()
    ax.grid(True, alpha=0.3)
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)
    return Path(path)


def tv_figure(rows: list[dict], path: str | Path) -> Path:
    """Total-variation distance to the exact filter, per round."""
    plt = _pyplot()
    fig, ax = plt.subplots(figsize=(6, 4))
    rounds = [row["round"] for row in rows]
    ax.plot(rounds, [row["tv_to_exact"] for row in rows], marker="o")
    ax.set_xlabel("round")
    ax.set_ylabel("TV distance to exact filter")
    ax.set_title("Particle filter accuracy")
    ax.set_ylim(bottom=0)
    ax.grid(True, alpha=0.3)
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)
    return Path(path)


def scores_figure(scores: list[float], path: str | Path) -> Path:
    """Histogram of simulated game scores."""
    plt = _pyplot()
    fig, ax = plt.subplots(figsize=(6, 4))
    ax.hist(scores, bins=min(30, max(5, len(set(scores)))))
    ax.set_xlabel("score")
    ax.set_ylabel("games")
    ax.set_title("Simulated score distribution")
    ax.grid(True, alpha=0.3)
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)
    return Path(path)


def beliefs_figure(rows: list[dict], cities: list[str], path: str | Path) -> Path:
    """Per-round belief trajectories, one line per city."""
    plt = _pyplot()
    fig, ax = plt.subplots(figsize=(7, 4))
    rounds = sorted({row["round"] for row in rows})
    for city in cities:
        series = [
            next(r["probability"] for r in rows if r["round"] == rd and r["city"] == city)
            for rd in rounds
        ]
        ax.plot(rounds, series, marker=".", label=city)
    ax.set_xlabel("round")
    ax.set_ylabel("belief")
    ax.set_title("Exact filter beliefs")
    ax.legend(fontsize=7, ncol=2)
    ax.grid(True, alpha=0.3)
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)
    return Path(path)
