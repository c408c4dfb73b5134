"""ai-lab command line.

Exit codes: 0 success, 1 domain error (one machine-parsable ``code: message``
line on stderr), 2 usage error. Every stochastic subcommand honors ``--seed``
and prints the generated seed when it was omitted, so any run can be
reproduced. ``--format csv`` writes delimited tables; ``--plot`` additionally
renders a PNG figure next to the primary output file.
"""

from __future__ import annotations

import csv
import functools
import json
import sys
from pathlib import Path

import click

from . import hmm as hmm_mod
from . import mdp as mdp_mod
from . import qmaze as qmaze_mod
from . import rbj as rbj_mod
from . import report
from . import search as search_mod
from .errors import AiLabError, DomainError
from .rng import RandomSource
from .scenario import resolve_scenario, scenario_warnings
from .sessions import generate_seed


def domain_errors(fn):
    """Map AiLabError to exit 1 with a single parsable stderr line."""

    @functools.wraps(fn)
    def wrapper(*args, **kwargs):
        try:
            return fn(*args, **kwargs)
        except AiLabError as exc:
            click.echo(f"{exc.code}: {exc}", err=True)
            sys.exit(1)

    return wrapper


def _resolve_seed(seed: int | None, quiet: bool) -> int:
    if seed is None:
        seed = generate_seed()
        if not quiet:
            click.echo(f"seed: {seed}", err=True)
    return seed


def _emit(data: dict, out: str | None) -> None:
    text = json.dumps(data, indent=2, sort_keys=True)
    if out:
        Path(out).write_text(text + "\n", encoding="utf-8")
    else:
        click.echo(text)


def _write_csv(rows: list[dict], fieldnames: list[str], out: str) -> None:
    with open(out, "w", newline="", encoding="utf-8") as fh:
        writer = csv.DictWriter(fh, fieldnames=fieldnames)
        writer.writeheader()
        writer.writerows(rows)


def _figure_path(out: str) -> str:
    return str(Path(out).with_suffix(".png"))


def _require_out_for(fmt: str, out: str | None, plot: bool) -> None:
    if fmt == "csv" and not out:
        raise click.UsageError("--format csv needs --out")
    if plot and not out:
        raise click.UsageError("--plot needs --out")


output_options = [
    click.option("--out", type=click.Path(dir_okay=False), default=None, help="Output file (default: stdout JSON)."),
    click.option("--format", "fmt", type=click.Choice(["json", "csv"]), default="json", show_default=True),
    click.option("--plot", is_flag=True, help="Also render a PNG figure next to --out."),
    click.option("--quiet", is_flag=True),
]


def with_options(options):
    def wrap(fn):
        for option in reversed(options):
            fn = option(fn)
        return fn

    return wrap


@click.group()
def main():
    """Solve, train, simulate, filter, validate, and serve the four activities."""


@main.command()
@click.option("--scenario", required=True, help="Scenario path or bundled name.")
@click.option("--quiet", is_flag=True)
@domain_errors
def validate(scenario, quiet):
    """Validate a scenario file of any kind."""
    doc = resolve_scenario(scenario)
    for warning in scenario_warnings(doc):
        click.echo(f"warning: {warning}", err=True)
    if not quiet:
        click.echo(json.dumps({"kind": doc.kind, "version": doc.version, "valid": True}))


@main.command()
@click.option("--scenario", required=True)
@click.option("--algo", type=click.Choice(sorted(search_mod.ALGO_TO_DISCIPLINE)), default="bfs", show_default=True)
@click.option("--trace", "trace_out", type=click.Path(dir_okay=False), default=None, help="Write the full role-event trace here.")
@with_options(output_options)
@domain_errors
def search(scenario, algo, trace_out, out, fmt, plot, quiet):
    """Run one graph search and report the path found."""
    _require_out_for(fmt, out, plot)
    graph = resolve_scenario(scenario, kind="search").spec
    result = search_mod.graph_search(graph, search_mod.ALGO_TO_DISCIPLINE[algo])
    if trace_out:
        Path(trace_out).write_text(result.trace.to_json() + "\n", encoding="utf-8")
    data = {"algo": algo, **result.to_dict()}
    if fmt == "csv":
        rows = [
            {"step": i, "state": s, "action": a}
            for i, (s, a) in enumerate(zip(result.path_states, [""] + result.path_actions))
        ]
        _write_csv(rows, ["step", "state", "action"], out)
    else:
        _emit(data, out)


# -- mdp ----------------------------------------------------------------------

@main.group()
def mdp():
    """Red and Black Jack: solve, simulate, perturb, play."""


@mdp.command("solve")
@click.option("--deck", required=True)
@click.option("--gamma", type=float, default=1.0, show_default=True)
@click.option("--tol", type=float, default=1e-9, show_default=True)
@with_options(output_options)
@domain_errors
def mdp_solve(deck, gamma, tol, out, fmt, plot, quiet):
    """Compile a deck to its MDP and run value iteration."""
    _require_out_for(fmt, out, plot)
    config = resolve_scenario(deck, kind="deck").spec
    compiled = rbj_mod.build_rbj_mdp(config, gamma)
    vi = mdp_mod.value_iteration(compiled, tol=tol)
    data = mdp_mod.vi_result_to_jsonable(compiled, vi)
    if fmt == "csv":
        rows = [
            {
                "state": mdp_mod.state_key(s),
                "value": vi.values[s],
                "policy": vi.policy[s],
                "q_hit": vi.q_values[(s, rbj_mod.HIT)],
                "q_stand": vi.q_values[(s, rbj_mod.STAND)],
            }
            for s in compiled.states
        ]
        _write_csv(rows, ["state", "value", "policy", "q_hit", "q_stand"], out)
        residual_rows = [
            {"sweep": i + 1, "residual": r}
            for i, r in enumerate(vi.residual_history)
        ]
        residuals_out = str(Path(out).with_suffix(".residuals.csv"))
        _write_csv(residual_rows, ["sweep", "residual"], residuals_out)
    else:
        _emit(data, out)
    if plot:
        report.residuals_figure(vi.residual_history, _figure_path(out))


@mdp.command("simulate")
@click.option("--deck", required=True)
@click.option("--policy", "policy_path", type=click.Path(exists=True, dir_okay=False), default=None, help="Policy JSON; defaults to the VI-optimal policy.")
@click.option("--games", type=int, default=1000, show_default=True)
@click.option("--seed", type=int, default=None)
@with_options(output_options)
@domain_errors
def mdp_simulate(deck, policy_path, games, seed, out, fmt, plot, quiet):
    """Play many games under a policy and summarize the outcomes."""
    _require_out_for(fmt, out, plot)
    if games < 1:
        raise DomainError("need at least one game")
    config = resolve_scenario(deck, kind="deck").spec
    if policy_path:
        raw = json.loads(Path(policy_path).read_text(encoding="utf-8"))
        policy = {_parse_state_key(k): v for k, v in raw.items()}
    else:
        compiled = rbj_mod.build_rbj_mdp(config)
        policy = mdp_mod.value_iteration(compiled).policy
    seed = _resolve_seed(seed, quiet)
    rs = RandomSource(seed)
    chooser = rbj_mod.policy_chooser(policy)
    outcomes = [rbj_mod.simulate_rbj_game(config, chooser, rs) for _ in range(games)]
    scores = [o.score for o in outcomes]
    frequencies: dict[str, float] = {}
    for o in outcomes:
        frequencies[o.terminal] = frequencies.get(o.terminal, 0) + 1
    frequencies = {t: n / games for t, n in sorted(frequencies.items())}
    data = {
        "games": games,
        "seed": seed,
        "mean_score": sum(scores) / games,
        "terminal_frequencies": frequencies,
    }
    if fmt == "csv":
        rows = [
            {"game": i, "terminal": o.terminal, "score": o.score}
            for i, o in enumerate(outcomes)
        ]
        _write_csv(rows, ["game", "terminal", "score"], out)
    else:
        _emit(data, out)
    if plot:
        report.scores_figure(scores, _figure_path(out))


def _parse_state_key(key: str) -> tuple[int, int]:
    parts = key.strip("()").split(",")
    return (int(parts[0]), int(parts[1]))


@mdp.command("perturb")
@click.option("--deck", required=True)
@click.option("--set", "edits", multiple=True, help="path=value, e.g. scores.jackpot=300")
@click.option("--gamma", type=float, default=1.0, show_default=True)
@with_options(output_options)
@domain_errors
def mdp_perturb(deck, edits, gamma, out, fmt, plot, quiet):
    """Solve a deck and an edited variant, reporting the policy/value diff."""
    _require_out_for(fmt, out, plot)
    config = resolve_scenario(deck, kind="deck").spec
    parsed = {}
    for edit in edits:
        if "=" not in edit:
            raise click.UsageError(f"--set expects path=value, got {edit!r}")
        path, value = edit.split("=", 1)
        parsed[path] = value
    result = rbj_mod.perturb_and_resolve(config, parsed, gamma)
    base_mdp, base_vi = result.baseline
    new_mdp, new_vi = result.edited
    data = {
        "edits": parsed,
        "diff": result.to_dict(),
        "baseline": mdp_mod.vi_result_to_jsonable(base_mdp, base_vi),
        "edited": mdp_mod.vi_result_to_jsonable(new_mdp, new_vi),
    }
    if fmt == "csv":
        rows = [
            {
                "state": mdp_mod.state_key(s),
                "baseline_policy": base_vi.policy[s],
                "edited_policy": new_vi.policy.get(s, ""),
                "value_delta": result.value_deltas.get(s, ""),
            }
            for s in base_mdp.states
        ]
        _write_csv(rows, ["state", "baseline_policy", "edited_policy", "value_delta"], out)
    else:
        _emit(data, out)


@mdp.command("play")
@click.option("--deck", required=True)
@click.option("--seed", type=int, default=None)
@click.option("--quiet", is_flag=True)
@domain_errors
def mdp_play(deck, seed, quiet):
    """Play one game interactively at the terminal."""
    config = resolve_scenario(deck, kind="deck").spec
    seed = _resolve_seed(seed, quiet)
    game = rbj_mod.RbjGame(config, RandomSource(seed))
    while game.running:
        r, b = game.state
        click.echo(f"hand: {r} red, {b} black")
        action = click.prompt("hit or stand", type=click.Choice(["hit", "stand"]))
        entry = game.apply(rbj_mod.HIT if action == "hit" else rbj_mod.STAND)
        click.echo(f"drew: {entry['card']}")
    outcome = game.outcome()
    click.echo(f"result: {outcome.terminal} ({outcome.score:+g} points)")


# -- q-learning ----------------------------------------------------------------

@main.group()
def q():
    """Q-Maze: train a tabular agent on a grid scenario."""


@q.command("train")
@click.option("--grid", required=True)
@click.option("--episodes", type=int, required=True)
@click.option("--alpha", type=float, default=0.5, show_default=True)
@click.option("--gamma", type=float, default=0.9, show_default=True)
@click.option("--explore-faces", type=int, default=2, show_default=True, help="Die faces that mean explore.")
@click.option("--die-faces", type=int, default=6, show_default=True)
@click.option("--seed", type=int, default=None)
@click.option("--snapshots", default="", help="Comma-separated episode indices to snapshot.")
@with_options(output_options)
@domain_errors
def q_train(grid, episodes, alpha, gamma, explore_faces, die_faces, seed, snapshots, out, fmt, plot, quiet):
    """Run sequential training episodes and emit the table, snapshots, returns."""
    _require_out_for(fmt, out, plot)
    spec = resolve_scenario(grid, kind="grid").spec
    params = qmaze_mod.QParams(
        alpha=alpha, gamma=gamma, explore_faces=explore_faces, die_faces=die_faces
    )
    snapshot_at = [int(p) for p in snapshots.split(",") if p.strip() != ""]
    seed = _resolve_seed(seed, quiet)
    result = qmaze_mod.train(spec, params, episodes, snapshot_at, RandomSource(seed))
    policy = qmaze_mod.greedy_policy(result.q, spec)
    data = {
        "grid": grid,
        "episodes": episodes,
        "seed": seed,
        "params": {
            "alpha": alpha,
            "gamma": gamma,
            "explore_faces": explore_faces,
            "die_faces": die_faces,
        },
        "returns": result.returns,
        "q_table": result.q.to_jsonable(),
        "snapshots": {str(i): t.to_jsonable() for i, t in sorted(result.snapshots.items())},
        "policy": {mdp_mod.state_key(c): a for c, a in sorted(policy.items())},
    }
    if fmt == "csv":
        rows = [{"episode": i + 1, "return": r} for i, r in enumerate(result.returns)]
        _write_csv(rows, ["episode", "return"], out)
    else:
        _emit(data, out)
    if plot:
        report.returns_figure(result.returns, _figure_path(out))


# -- hmm ------------------------------------------------------------------------

@main.group()
def hmm():
    """Two Spies: exact filtering, particle filtering, interactive play."""


def _load_trace(trace_path: str) -> tuple[list[str], list[str | None]]:
    raw = json.loads(Path(trace_path).read_text(encoding="utf-8"))
    observations = raw["observations"]
    failed = raw.get("failed_captures") or [None] * len(observations)
    return observations, failed


@hmm.command("filter")
@click.option("--map", "map_ref", required=True)
@click.option("--trace", "trace_path", type=click.Path(exists=True, dir_okay=False), required=True, help='JSON {"observations": [...], "failed_captures": [...]}')
@with_options(output_options)
@domain_errors
def hmm_filter(map_ref, trace_path, out, fmt, plot, quiet):
    """Run the exact filter over a recorded observation trace."""
    _require_out_for(fmt, out, plot)
    spec = resolve_scenario(map_ref, kind="map").spec
    model = hmm_mod.build_hmm(spec)
    observations, failed = _load_trace(trace_path)
    belief = hmm_mod.Belief.uniform(model)
    beliefs = []
    for obs, captured_at in zip(observations, failed):
        belief = hmm_mod.filter_step(belief, model, obs, captured_at)
        beliefs.append(belief.as_dict(model))
    data = {"rounds": len(beliefs), "beliefs": beliefs}
    rows = [
        {"round": i + 1, "city": city, "probability": p}
        for i, b in enumerate(beliefs)
        for city, p in b.items()
    ]
    if fmt == "csv":
        _write_csv(rows, ["round", "city", "probability"], out)
    else:
        _emit(data, out)
    if plot:
        report.beliefs_figure(rows, list(model.city_ids), _figure_path(out))


@hmm.command("pf")
@click.option("--map", "map_ref", required=True)
@click.option("--particles", type=int, default=1000, show_default=True)
@click.option("--seed", type=int, default=None)
@click.option("--trace", "trace_path", type=click.Path(exists=True, dir_okay=False), default=None, help="Observation trace; omitted = simulate a spy walk from the seed.")
@with_options(output_options)
@domain_errors
def hmm_pf(map_ref, particles, seed, trace_path, out, fmt, plot, quiet):
    """Approximate the filter with particles; reports TV distance to exact."""
    _require_out_for(fmt, out, plot)
    spec = resolve_scenario(map_ref, kind="map").spec
    model = hmm_mod.build_hmm(spec)
    seed = _resolve_seed(seed, quiet)
    rs = RandomSource(seed)
    if trace_path:
        observations, failed = _load_trace(trace_path)
    else:
        from fractions import Fraction

        from .rng import sample_categorical

        city = sample_categorical(
            rs, [(c, Fraction(1, model.n)) for c in model.city_ids]
        )
        observations = []
        for _ in range(spec.rounds):
            city, obs = hmm_mod.spy_step(model, city, rs)
            observations.append(obs)
        failed = [None] * len(observations)
    frequencies = hmm_mod.run_particle_filter(model, observations, failed, particles, rs)
    exact = hmm_mod.brute_force_posterior(model, observations, failed)
    rows = [
        {
            "round": i + 1,
            "tv_to_exact": hmm_mod.total_variation(freq, post, model),
        }
        for i, (freq, post) in enumerate(zip(frequencies, exact))
    ]
    data = {
        "particles": particles,
        "seed": seed,
        "observations": observations,
        "estimates": frequencies,
        "tv_to_exact": [row["tv_to_exact"] for row in rows],
    }
    if fmt == "csv":
        _write_csv(rows, ["round", "tv_to_exact"], out)
    else:
        _emit(data, out)
    if plot:
        report.tv_figure(rows, _figure_path(out))


@hmm.command("play")
@click.option("--map", "map_ref", required=True)
@click.option("--seed", type=int, default=None)
@click.option("--quiet", is_flag=True)
@domain_errors
def hmm_play(map_ref, seed, quiet):
    """Hunt the spy interactively at the terminal."""
    spec = resolve_scenario(map_ref, kind="map").spec
    model = hmm_mod.build_hmm(spec)
    seed = _resolve_seed(seed, quiet)
    rs = RandomSource(seed)
    game = hmm_mod.new_game(spec, model, rs)
    click.echo(f"you start at {game.hunter_city}; {game.rounds_total} rounds")
    while game.status == "running":
        action = click.prompt(
            "move/stay/capture", type=click.Choice(["move", "stay", "capture"])
        )
        payload: dict = {"type": action}
        if action == "move":
            neighbors = list(model.neighbors[game.hunter_city])
            target = click.prompt("to", type=click.Choice(neighbors))
            payload["to"] = target
        hmm_mod.hunter_apply(game, payload, model, rs)
        record = game.history[-1]
        click.echo(f"round {record.round}: report says the spy is in the {record.observation}")
        if record.capture_result is False:
            click.echo(f"capture failed at {game.hunter_city}")
        if game.status == "running":
            top = sorted(
                game.belief.as_dict(model).items(), key=lambda kv: -kv[1]
            )[:3]
            click.echo("belief: " + ", ".join(f"{c} {p:.2f}" for c, p in top))
    click.echo(f"game over: {game.status} (spy was in {game.spy_city})")


# -- service --------------------------------------------------------------------

@main.command()
@click.option("--port", type=int, default=8000, show_default=True)
@click.option("--host", default="127.0.0.1", show_default=True)
@click.option("--scenario-dir", type=click.Path(file_okay=False), default=None)
@click.option("--session-dir", type=click.Path(file_okay=False), default=None)
@click.option("--debug-oracle", is_flag=True, help="Expose the brute-force belief check endpoint.")
@click.option("--static-dir", type=click.Path(file_okay=False), default=None, help="Serve these files at / (the web UI build).")
@domain_errors
def serve(port, host, scenario_dir, session_dir, debug_oracle, static_dir):
    """Run the session service."""
    from .service import run_server

    run_server(
        host=host,
        port=port,
        scenario_dir=scenario_dir,
        session_dir=session_dir,
        debug_oracle=debug_oracle,
        static_dir=static_dir,
    )


@main.command()
@click.option("--log", "log_path", type=click.Path(exists=True, dir_okay=False), required=True)
@click.option("--out", type=click.Path(dir_okay=False), default=None)
@domain_errors
def replay(log_path, out):
    """Replay a persisted session log and print its verified final state."""
    from .service import replay_session_file

    state = replay_session_file(log_path)
    if out:
        Path(out).write_text(state + "\n", encoding="utf-8")
    else:
        click.echo(state)


if __name__ == "__main__":
    main()
