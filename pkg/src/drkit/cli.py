"""Single command-line entry point wiring all modules together.

Subcommands: agent run, index build, synth graph/walk/rubrics, filter <name>,
judge, score, elo replay, serve. Every pipeline honors --seed (repeated
seeded runs are byte-identical) and nothing touches the network unless a
live model backend is configured explicitly.
"""

from __future__ import annotations

import json
import random
import sys
import tempfile
from concurrent.futures import ThreadPoolExecutor
from datetime import datetime
from pathlib import Path

import click

from drkit import evaluation, retrieval
from drkit.config import ConfigError, load_config
from drkit.episode import EpisodeConfig, Trajectory, run_episode
from drkit.model_client import HttpModelClient, ScriptedClient
from drkit.tools.offload import read_page
from drkit.tools.todo import load_todo_state, todo_apply
from drkit.offline import (
    LexicalJudge,
    TemplateConsistencyJudge,
    TemplateQuestionModel,
    TemplateRubricModel,
    TemplateTaskModel,
    TemplateWalkModel,
)
from drkit.rubrics import RubricRole, load_rubric_file
from drkit.synthesis import docwalk, filters, graph, rubric_synth
from drkit.tools.registry import ToolRegistry


def _fail(message: str, code: int = 1) -> None:
    click.echo(f"error: {message}", err=True)
    sys.exit(code)


def _write_lines(path: str | None, lines: list[str]) -> None:
    text = "\n".join(lines) + ("\n" if lines else "")
    if path:
        Path(path).write_text(text, encoding="utf-8")
    else:
        click.echo(text, nl=False)


@click.group()
@click.option("--config", "config_path", type=click.Path(exists=True), default=None, help="TOML config file.")
@click.option("--seed", type=int, default=0, show_default=True, help="Master seed; all pipelines are deterministic under it.")
@click.option("--jobs", type=int, default=1, show_default=True, help="Worker pool size; outputs are order-stable regardless.")
@click.pass_context
def main(ctx: click.Context, config_path: str | None, seed: int, jobs: int) -> None:
    ctx.ensure_object(dict)
    try:
        ctx.obj["config"] = load_config(config_path)
    except ConfigError as exc:
        _fail(str(exc), code=2)
    ctx.obj["seed"] = seed
    ctx.obj["jobs"] = max(1, jobs)


def _load_corpus(path: str) -> list[tuple[str, str, str]]:
    p = Path(path)
    if p.is_dir():
        return retrieval.load_corpus_dir(p)
    return retrieval.load_corpus_jsonl(p)


def _build_search(cfg: dict, corpus: str, authority_file: str | None):
    index = retrieval.build_index(_load_corpus(corpus))
    authority = (
        retrieval.AuthorityList.from_file(authority_file)
        if authority_file
        else retrieval.AuthorityList()
    )
    cache = retrieval.QueryCache(capacity=cfg["retrieval"]["cache_capacity"])
    k = cfg["retrieval"]["k"]

    def do_search(query: str):
        return retrieval.search(query, index, authority=authority, cache=cache, k=k)

    return index, authority, cache, do_search


# ---------------------------------------------------------------- agent ---


@main.group()
def agent() -> None:
    """Run research episodes."""


@agent.command("run")
@click.option("--query", required=True, help="Research task.")
@click.option("--script", "script_path", type=click.Path(exists=True), default=None,
              help="JSONL of scripted policy turns (offline).")
@click.option("--backend-url", default=None, help="Live chat-completions endpoint (uses MODEL_API_KEY).")
@click.option("--corpus", type=click.Path(exists=True), default=None, help="Fixture corpus dir or JSONL.")
@click.option("--authority", "authority_file", type=click.Path(exists=True), default=None)
@click.option("--clock", default="2026-01-01T00:00:00+00:00", show_default=True,
              help="Injected wall clock (RFC 3339).")
@click.option("--out", "out_path", type=click.Path(), default=None)
@click.pass_context
def agent_run(ctx, query, script_path, backend_url, corpus, authority_file, clock, out_path):
    cfg = ctx.obj["config"]
    if script_path is None and backend_url is None and not cfg["model"]["base_url"]:
        _fail("no policy: pass --script for offline runs or configure a model backend (--backend-url)")
    if script_path is not None:
        turns = []
        for line in Path(script_path).read_text(encoding="utf-8").splitlines():
            if not line.strip():
                continue
            row = json.loads(line)
            turns.append(row["text"] if isinstance(row, dict) else str(row))
        policy = ScriptedClient(turns)
    else:
        policy = HttpModelClient(
            base_url=backend_url or cfg["model"]["base_url"],
            model=cfg["model"]["name"],
            temperature=cfg["model"]["temperature"],
        )

    episode_dir = Path(tempfile.mkdtemp(prefix="drkit-episode-"))
    registry = ToolRegistry(spill_dir=episode_dir / "spill")
    if corpus:
        _, authority, cache, do_search = _build_search(cfg, corpus, authority_file)

        def batch_web_surfer(queries: list, k: int = cfg["retrieval"]["k"]):
            blocks, sources = [], []
            for q in queries:
                hits = do_search(str(q))
                lines = [f"[{h.para_id}] {h.snippet}" for h in hits]
                blocks.append(f"query: {q}\n" + ("\n".join(lines) if lines else "(no results)"))
                sources.extend({"key": h.para_id, "ref": h.doc_id} for h in hits)
            return "\n\n".join(blocks), sources

        registry.register("batch_web_surfer", batch_web_surfer)

    todo_path = episode_dir / "todo.json"

    def todo(instruction: dict):
        state = load_todo_state(todo_path)
        state = todo_apply(state, instruction, persist_path=todo_path)
        return json.dumps(state.to_dict(), ensure_ascii=False)

    def file_read(path: str, offset: int = 0, length: int = 65536):
        # demand paging over spill files only; no filesystem roaming
        resolved = Path(path).resolve()
        if not str(resolved).startswith(str(episode_dir.resolve())):
            raise ValueError("file_read is limited to this episode's spill files")
        return read_page(resolved, offset, length).decode("utf-8", errors="replace")

    registry.register("todo", todo)
    registry.register("file_read", file_read)

    budgets = cfg["budgets"]
    episode_config = EpisodeConfig(
        max_turns=budgets["max_turns"],
        max_tokens_per_turn=budgets["max_tokens_per_turn"],
        tool_call_budget=budgets["tool_call_budget"],
        total_token_budget=budgets["total_token_budget"],
        clock_now=datetime.fromisoformat(clock),
    )
    trajectory = run_episode(query, episode_config, policy, registry, episode_id=f"ep-{ctx.obj['seed']}")
    _write_lines(out_path, [trajectory.to_json()])
    click.echo(
        f"episode {trajectory.episode_id}: {trajectory.n_turns} turns, "
        f"termination={trajectory.termination.value}",
        err=True,
    )


# ---------------------------------------------------------------- index ---


@main.group()
def index() -> None:
    """Build and inspect paragraph indexes."""


@index.command("build")
@click.option("--corpus", required=True, type=click.Path(exists=True))
@click.option("--out", "out_path", type=click.Path(), default=None)
def index_build(corpus, out_path):
    idx = retrieval.build_index(_load_corpus(corpus))
    lines = [
        json.dumps(
            {"para_id": p.para_id, "doc_id": p.doc_id, "site": p.site, "text": p.text},
            ensure_ascii=False,
            sort_keys=True,
        )
        for p in idx.paragraphs
    ]
    _write_lines(out_path, lines)
    click.echo(f"indexed {len(idx)} paragraphs", err=True)


# ---------------------------------------------------------------- synth ---


@main.group()
def synth() -> None:
    """Data-synthesis pipelines."""


@synth.command("graph")
@click.option("--triples", required=True, type=click.Path(exists=True), help="TSV of (head, relation, tail).")
@click.option("--labels", type=click.Path(exists=True), default=None)
@click.option("--corpus", required=True, type=click.Path(exists=True), help="Corpus for triplet verification.")
@click.option("--stoplist", type=click.Path(exists=True), default=None)
@click.option("--count", default=5, show_default=True)
@click.option("--out", "out_path", type=click.Path(), default=None)
@click.pass_context
def synth_graph(ctx, triples, labels, corpus, stoplist, count, out_path):
    cfg = ctx.obj["config"]
    master_seed = ctx.obj["seed"]
    kg = graph.KnowledgeGraph.from_tsv(triples, labels)
    stop = set()
    if stoplist:
        stop = {l.strip() for l in Path(stoplist).read_text(encoding="utf-8").splitlines() if l.strip()}
    _, _, _, do_search = _build_search(cfg, corpus, None)
    syn = cfg["synthesis"]

    def one(i: int) -> str | None:
        rng = random.Random(master_seed + i)  # per-sample stream: parallel == serial
        try:
            seed_entity = graph.sample_seed(
                kg, stoplist=stop, rng=rng,
                degree_range=(syn["seed_degree_min"], syn["seed_degree_max"]),
            )
            sample = graph.expand_subgraph(
                kg, seed_entity, node_range=(syn["node_min"], syn["node_max"]),
                supernode_threshold=syn["supernode_threshold"], rng=rng,
            )
            facts = []
            for edge in sorted(sample.edges):
                fact = graph.verify_triplet(edge, do_search, label=kg.label)
                if fact is not None:
                    facts.append(fact)
            qa, attempts = graph.generate_graph_question(
                sample, facts, TemplateQuestionModel(rng), label=kg.label
            )
        except (graph.NoEligibleSeedError, graph.GraphTooSmallError,
                graph.ContractUnsatisfiableError, ValueError) as exc:
            click.echo(f"sample {i} dropped: {exc}", err=True)
            return None
        record = qa.to_dict()
        record["provenance"].update(
            {"master_seed": master_seed, "sample_index": i, "attempts": attempts,
             "n_nodes": len(sample.nodes), "n_verified_facts": len(facts),
             "filters": {}}
        )
        return json.dumps(record, ensure_ascii=False, sort_keys=True)

    with ThreadPoolExecutor(max_workers=ctx.obj["jobs"]) as pool:
        results = list(pool.map(one, range(count)))
    lines = [r for r in results if r is not None]
    _write_lines(out_path, lines)
    click.echo(f"wrote {len(lines)} of {count} samples", err=True)


@synth.command("walk")
@click.option("--docs", required=True, type=click.Path(exists=True), help="JSONL of {doc_id, text, links}.")
@click.option("--max-steps", default=5, show_default=True)
@click.option("--count", default=5, show_default=True)
@click.option("--out", "out_path", type=click.Path(), default=None)
@click.pass_context
def synth_walk(ctx, docs, max_steps, count, out_path):
    master_seed = ctx.obj["seed"]
    doc_index = docwalk.load_walk_docs(docs)
    doc_ids = sorted(doc_index)
    if not doc_ids:
        _fail("document index is empty")

    def one(i: int) -> str | None:
        rng = random.Random(master_seed + i)
        start = doc_ids[rng.randrange(len(doc_ids))]
        trace, qa = docwalk.doc_walk(doc_index, start, max_steps, TemplateWalkModel(rng))
        if qa is None:
            click.echo(f"sample {i} dropped: walk of {len(trace.visited)} doc(s) yielded no pair", err=True)
            return None
        record = qa.to_dict()
        record["provenance"].update(
            {"master_seed": master_seed, "sample_index": i,
             "stopped_reason": trace.stopped_reason, "filters": {}}
        )
        return json.dumps(record, ensure_ascii=False, sort_keys=True)

    with ThreadPoolExecutor(max_workers=ctx.obj["jobs"]) as pool:
        results = list(pool.map(one, range(count)))
    lines = [r for r in results if r is not None]
    _write_lines(out_path, lines)
    click.echo(f"wrote {len(lines)} of {count} samples", err=True)


@synth.command("rubrics")
@click.option("--seeds", required=True, type=click.Path(exists=True), help="Text file, one seed example per line.")
@click.option("--out", "out_path", type=click.Path(), default=None)
@click.pass_context
def synth_rubrics(ctx, seeds, out_path):
    cfg = ctx.obj["config"]
    seed_lines = [l.strip() for l in Path(seeds).read_text(encoding="utf-8").splitlines() if l.strip()]
    if not seed_lines:
        _fail("seeds file is empty")
    summary, rubrics = rubric_synth.synthesize_rubrics(seed_lines, TemplateRubricModel())
    sample = rubric_synth.synthesize_task(summary, rubrics, TemplateTaskModel())
    score, keep = rubric_synth.consistency_check(
        sample, TemplateConsistencyJudge(), threshold=cfg["synthesis"]["consistency_threshold"]
    )
    record = sample.to_dict()
    record["provenance"] = {
        "pipeline": "rubric_synthesis",
        "master_seed": ctx.obj["seed"],
        "filters": {"consistency_score": score, "consistency_keep": keep},
    }
    _write_lines(out_path, [json.dumps(record, ensure_ascii=False, sort_keys=True)])
    click.echo(f"sample status={sample.status} consistency={score:.3f} keep={keep}", err=True)


# --------------------------------------------------------------- filter ---


def _read_trajectories(path: str) -> list[Trajectory]:
    out = []
    for line in Path(path).read_text(encoding="utf-8").splitlines():
        if line.strip():
            out.append(Trajectory.from_dict(json.loads(line)))
    return out


@main.command("filter")
@click.argument("name", type=click.Choice(["temporal", "language_mix", "ngram_dedup", "shortest", "plan_alignment"]))
@click.option("--in", "in_path", required=True, type=click.Path(exists=True), help="Trajectory JSONL.")
@click.option("--out", "out_path", type=click.Path(), default=None)
@click.option("--now", default="2026-01-01T00:00:00+00:00", show_default=True)
@click.option("--primary-language", default="zh", show_default=True)
@click.option("--density-threshold", default=filters.LANGUAGE_DENSITY_THRESHOLD, show_default=True)
@click.option("--ngram", default=filters.NGRAM_N, show_default=True)
@click.option("--repeat-threshold", default=5, show_default=True)
@click.option("--plan", "plan_path", type=click.Path(exists=True), default=None,
              help="Text file, one plan step per line (plan_alignment only).")
def filter_cmd(name, in_path, out_path, now, primary_language, density_threshold, ngram,
               repeat_threshold, plan_path):
    """Apply one trajectory filter; kept trajectories are written through."""
    trajectories = _read_trajectories(in_path)
    decisions: list[tuple[Trajectory, bool, dict]] = []
    if name == "temporal":
        now_dt = datetime.fromisoformat(now)
        decisions = [(t, filters.temporal_filter(t, now_dt), {}) for t in trajectories]
    elif name == "language_mix":
        decisions = [
            (t, filters.language_mix_filter(t, primary_language, density_threshold), {})
            for t in trajectories
        ]
    elif name == "ngram_dedup":
        kept = filters.ngram_dedup(trajectories, n=ngram, repeat_threshold=repeat_threshold)
        kept_ids = {id(t) for t in kept}
        decisions = [(t, id(t) in kept_ids, {}) for t in trajectories]
    elif name == "shortest":
        kept = filters.select_shortest_correct(trajectories)
        kept_ids = {id(t) for t in kept}
        decisions = [(t, id(t) in kept_ids, {}) for t in trajectories]
    elif name == "plan_alignment":
        if plan_path is None:
            _fail("plan_alignment requires --plan", code=2)
        plan = [l.strip() for l in Path(plan_path).read_text(encoding="utf-8").splitlines() if l.strip()]
        for t in trajectories:
            decision = filters.plan_alignment_filter(t, plan)
            decisions.append((t, decision.keep, {"alignment": decision.alignment}))

    lines = []
    for trajectory, keep, extra in decisions:
        if keep:
            payload = trajectory.to_dict()
            payload.setdefault("provenance", {})["filters"] = {name: {"keep": True, **extra}}
            lines.append(json.dumps(payload, ensure_ascii=False, sort_keys=True))
    _write_lines(out_path, lines)
    click.echo(f"kept {len(lines)} of {len(decisions)} trajectories", err=True)


# ---------------------------------------------------------------- judge ---


@main.command("judge")
@click.option("--report", "report_path", required=True, type=click.Path(exists=True))
@click.option("--rubrics", "rubrics_path", required=True, type=click.Path(exists=True))
@click.option("--backend-url", default=None, help="Live judge endpoint; defaults to the offline lexical judge.")
@click.option("--out", "out_path", type=click.Path(), default=None)
@click.pass_context
def judge_cmd(ctx, report_path, rubrics_path, backend_url, out_path):
    """Score one report against a rubric file with 3-trial ensembles."""
    cfg = ctx.obj["config"]
    report = Path(report_path).read_text(encoding="utf-8")
    rubrics = load_rubric_file(rubrics_path)
    if backend_url or cfg["judge"]["backend"] == "http":
        judge = HttpModelClient(
            base_url=backend_url or cfg["model"]["base_url"],
            model=cfg["model"]["name"],
            temperature=0.0,
        )
    else:
        judge = LexicalJudge()
    lines = []
    for rubric in rubrics:
        ensemble = evaluation.judge_rubric_ensemble(report, rubric, judge)
        lines.append(
            json.dumps(
                {
                    "rubric_id": ensemble.rubric_id,
                    "trial_scores": ensemble.trial_scores,
                    "mean": None if ensemble.unevaluable else ensemble.mean,
                    "unevaluable": ensemble.unevaluable,
                    "weight": rubric.weight,
                    "role": rubric.role.value,
                    "fatal": rubric.fatal,
                },
                sort_keys=True,
            )
        )
    _write_lines(out_path, lines)


# ---------------------------------------------------------------- score ---


@main.command("score")
@click.option("--ensembles", "ensembles_path", required=True, type=click.Path(exists=True),
              help="JSONL from `drkit judge`.")
@click.option("--system", default="system", show_default=True)
@click.option("--category", default="overall", show_default=True)
@click.option("--out", "out_path", type=click.Path(), default=None)
def score_cmd(ensembles_path, system, category, out_path):
    """Weighted report score (0-100) with fatal-override, as CSV."""
    ensembles = []
    fatal_triggered = False
    for line in Path(ensembles_path).read_text(encoding="utf-8").splitlines():
        if not line.strip():
            continue
        row = json.loads(line)
        ensemble = evaluation.EnsembleScore(
            rubric_id=row["rubric_id"],
            trial_scores=row["trial_scores"],
            unevaluable=row["unevaluable"],
        )
        role = RubricRole(row["role"])
        ensembles.append((ensemble, abs(row["weight"]) if role.is_positive else -abs(row["weight"]), role))
        if row.get("fatal") and role is RubricRole.NEGATIVE and not row["unevaluable"] and ensemble.mean > 0:
            fatal_triggered = True
    try:
        value = evaluation.weighted_report_score(
            [(e, abs(w), role) for e, w, role in ensembles]
        )
    except evaluation.NoPositiveRubricError as exc:
        _fail(str(exc))
    if fatal_triggered:
        value = 0.0
    lines = ["system,category,weighted_score", f"{system},{category},{value:.4f}"]
    _write_lines(out_path, lines)


# ------------------------------------------------------------------ elo ---


@main.group()
def elo() -> None:
    """Elo rating over pairwise record logs."""


@elo.command("replay")
@click.option("--records", "records_path", required=True, type=click.Path(exists=True))
@click.option("--k-factor", default=evaluation.DEFAULT_K, show_default=True)
@click.option("--out", "out_path", type=click.Path(), default=None)
def elo_replay(records_path, k_factor, out_path):
    """Deterministic leaderboard from an append-only record log."""
    records = []
    for line in Path(records_path).read_text(encoding="utf-8").splitlines():
        if line.strip():
            records.append(evaluation.PairwiseRecord.from_dict(json.loads(line)))
    rows = evaluation.leaderboard(records, k_factor=k_factor)
    lines = ["system,rating,wins,ties,losses"]
    lines += [f"{r.system},{r.rating:.4f},{r.wins},{r.ties},{r.losses}" for r in rows]
    _write_lines(out_path, lines)


# ---------------------------------------------------------------- serve ---


@main.command("serve")
@click.option("--host", default=None)
@click.option("--port", type=int, default=None)
@click.option("--data-dir", type=click.Path(), default=None)
@click.option("--static-dir", type=click.Path(), default=None, help="Frontend asset bundle served at /.")
@click.option("--reviewer-tokens", "tokens_path", type=click.Path(exists=True), default=None,
              help="JSON mapping bearer token -> reviewer id.")
@click.pass_context
def serve(ctx, host, port, data_dir, static_dir, tokens_path):
    """Launch the blind pairwise review service."""
    import uvicorn

    from drkit.service import create_app

    cfg = ctx.obj["config"]["service"]
    tokens = None
    if tokens_path:
        tokens = json.loads(Path(tokens_path).read_text(encoding="utf-8"))
    app = create_app(
        data_dir=data_dir or cfg["data_dir"],
        lease_seconds=cfg["lease_seconds"],
        reviewer_tokens=tokens,
        static_dir=static_dir,
    )
    uvicorn.run(app, host=host or cfg["host"], port=port or cfg["port"], log_level="warning")


if __name__ == "__main__":
    main()
