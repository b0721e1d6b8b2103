"""End-to-end curation pipeline: load trajectories, prune every step's
state, score importance and diversity over the pruned text, select a
fixed-budget subset per trajectory, then write the curated dataset plus a
statistics report and a quarantine file for rejected records.

Determinism contract: identical config, seed and input produce byte-identical
curated output, rejects and stats. Trajectories are processed independently
and reduced in input order, so the worker count never changes any output;
all randomness (the random-selection baseline, the post-selection uniform
down-sample) derives from the master seed. Stage wall-times are collected
for operators but are deliberately excluded from the canonical stats JSON.
"""

from __future__ import annotations

import hashlib
import json
import random
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace
from pathlib import Path

from . import axtree, pruning, selection, similarity
from .prompts import render_prompts_to_dir
from .trajectory import (CuratedStep, DatasetError, Trajectory,
                         parse_trajectory, trajectory_to_obj, write_curated)

SCORE_ON_PRUNED = "pruned"
SCORE_ON_RAW = "raw"

# powers of two covering observed state lengths up to the extreme long tail
HISTOGRAM_EDGES = [2 ** p for p in range(6, 19)]  # 64 .. 262144


class ConfigError(ValueError):
    pass


@dataclass(frozen=True, slots=True)
class PipelineConfig:
    input: str
    output: str
    prune: pruning.PruneConfig = pruning.PruneConfig()
    select: selection.SelectionConfig = selection.SelectionConfig()
    similarity: str = "overlap"
    score_on: str = SCORE_ON_PRUNED
    post_sample: int | None = None
    seed: int = 0
    workers: int = 1
    stats_path: str | None = None
    rejects_path: str | None = None
    render_prompts_dir: str | None = None
    max_reject_rate: float | None = None

    def validate(self) -> None:
        try:
            self.prune.validate()
            self.select.validate()
        except ValueError as exc:
            raise ConfigError(str(exc)) from exc
        if self.score_on not in (SCORE_ON_PRUNED, SCORE_ON_RAW):
            raise ConfigError(f"score_on must be 'pruned' or 'raw', got {self.score_on!r}")
        if self.post_sample is not None and self.post_sample < 0:
            raise ConfigError("post_sample must be >= 0")
        if self.workers < 1:
            raise ConfigError("workers must be >= 1")
        if self.max_reject_rate is not None and not 0 <= self.max_reject_rate <= 1:
            raise ConfigError("max_reject_rate must be in [0, 1]")

    def resolved_stats_path(self) -> str:
        return self.stats_path or self.output + ".stats.json"

    def resolved_rejects_path(self) -> str:
        return self.rejects_path or self.output + ".rejects.jsonl"


@dataclass(slots=True)
class RunStats:
    trajectories_in: int = 0
    trajectories_out: int = 0
    trajectories_rejected: int = 0
    steps_in: int = 0
    steps_selected: int = 0
    steps_unselected: int = 0
    steps_rejected: int = 0
    steps_out: int = 0
    tokens_before: int = 0
    tokens_after: int = 0
    hist_before: list[int] = field(default_factory=lambda: [0] * (len(HISTOGRAM_EDGES) + 1))
    hist_after: list[int] = field(default_factory=lambda: [0] * (len(HISTOGRAM_EDGES) + 1))
    prune_counts: dict[str, int] = field(default_factory=dict)
    prune_tokens: dict[str, dict[str, int]] = field(default_factory=dict)
    missing_target_fallbacks: int = 0
    objective_values: list[float] = field(default_factory=list)
    post_sample_requested: int | None = None
    post_sample_clamp_warnings: int = 0
    score_on: str = SCORE_ON_PRUNED
    similarity: str = "overlap"
    seed: int = 0
    prune_config: dict = field(default_factory=dict)
    select_config: dict = field(default_factory=dict)
    timings: dict[str, float] = field(default_factory=dict)

    def reduction_ratio(self) -> float | None:
        if self.tokens_before == 0:
            return None
        return self.tokens_after / self.tokens_before

    def reject_rate(self) -> float:
        if self.trajectories_in == 0:
            return 0.0
        return self.trajectories_rejected / self.trajectories_in

    def to_dict(self, include_timings: bool = False) -> dict:
        objectives = self.objective_values
        data = {
            "trajectories": {
                "in": self.trajectories_in,
                "out": self.trajectories_out,
                "rejected": self.trajectories_rejected,
            },
            "steps": {
                "in": self.steps_in,
                "selected": self.steps_selected,
                "unselected": self.steps_unselected,
                "rejected": self.steps_rejected,
                "out": self.steps_out,
            },
            "tokens": {
                "before_total": self.tokens_before,
                "after_total": self.tokens_after,
                "reduction_ratio": self.reduction_ratio(),
                "histogram_before": _hist_dict(self.hist_before),
                "histogram_after": _hist_dict(self.hist_after),
            },
            "prune": {
                "config": self.prune_config,
                "by_strategy": dict(sorted(self.prune_counts.items())),
                "tokens_by_strategy": {
                    k: dict(v) for k, v in sorted(self.prune_tokens.items())
                },
                "missing_target_fallbacks": self.missing_target_fallbacks,
            },
            "selection": {
                "config": self.select_config,
                "objective": {
                    "count": len(objectives),
                    "mean": (sum(objectives) / len(objectives)) if objectives else None,
                    "min": min(objectives) if objectives else None,
                    "max": max(objectives) if objectives else None,
                },
            },
            "post_sample": {
                "requested": self.post_sample_requested,
                "clamp_warnings": self.post_sample_clamp_warnings,
            },
            "score_on": self.score_on,
            "similarity": self.similarity,
            "seed": self.seed,
        }
        if include_timings:
            data["timings"] = dict(self.timings)
        return data

    def format_table(self) -> str:
        lines = [
            "trajectories  in={}  out={}  rejected={}".format(
                self.trajectories_in, self.trajectories_out, self.trajectories_rejected),
            "steps         in={}  selected={}  unselected={}  rejected={}  out={}".format(
                self.steps_in, self.steps_selected, self.steps_unselected,
                self.steps_rejected, self.steps_out),
        ]
        ratio = self.reduction_ratio()
        if ratio is None:
            lines.append("tokens        before=0")
        else:
            lines.append(
                "tokens        before={}  after={}  kept={:.1%} of original".format(
                    self.tokens_before, self.tokens_after, ratio))
        lines.append("state tokens  {:>9}  {:>8}  {:>8}".format("bucket", "before", "after"))
        labels = _hist_labels()
        for i, label in enumerate(labels):
            if self.hist_before[i] or self.hist_after[i]:
                lines.append("state tokens  {:>9}  {:>8}  {:>8}".format(
                    label, self.hist_before[i], self.hist_after[i]))
        return "\n".join(lines)


def _hist_labels() -> list[str]:
    labels = [f"<={edge}" for edge in HISTOGRAM_EDGES]
    labels.append(f">{HISTOGRAM_EDGES[-1]}")
    return labels


def _hist_dict(buckets: list[int]) -> dict[str, int]:
    return dict(zip(_hist_labels(), buckets))


def _hist_add(buckets: list[int], value: int) -> None:
    for i, edge in enumerate(HISTOGRAM_EDGES):
        if value <= edge:
            buckets[i] += 1
            return
    buckets[-1] += 1


def _trajectory_seed(master_seed: int, trajectory_id: str) -> int:
    digest = hashlib.sha256(f"{master_seed}:{trajectory_id}".encode("utf-8")).digest()
    return int.from_bytes(digest[:8], "big")


def _account_report(stats: "RunStats", report: pruning.PruneReport) -> None:
    stats.tokens_before += report.tokens_before
    stats.tokens_after += report.tokens_after
    _hist_add(stats.hist_before, report.tokens_before)
    _hist_add(stats.hist_after, report.tokens_after)
    stats.prune_counts[report.strategy] = \
        stats.prune_counts.get(report.strategy, 0) + 1
    bucket = stats.prune_tokens.setdefault(report.strategy,
                                           {"before": 0, "after": 0})
    bucket["before"] += report.tokens_before
    bucket["after"] += report.tokens_after
    if report.missing_target_fallback:
        stats.missing_target_fallbacks += 1


@dataclass(slots=True)
class _TrajectoryOutcome:
    trajectory_id: str
    line_no: int
    curated: list[CuratedStep] = field(default_factory=list)
    reports: list[pruning.PruneReport] = field(default_factory=list)
    objective: float | None = None
    steps_total: int = 0
    error: str | None = None


def _prune_trajectory(traj: Trajectory, config: PipelineConfig,
                      provider: similarity.SimilarityProvider,
                      ) -> tuple[list[str], list[pruning.PruneReport]]:
    texts: list[str] = []
    reports: list[pruning.PruneReport] = []
    for step in traj.steps:
        state = axtree.parse_state(step.state_raw)
        missing = False
        try:
            k_star = axtree.find_target(state, step.action)
        except axtree.MissingTargetError:
            k_star = None
            missing = True
        query = f"{traj.goal}\n{step.answer}"
        text, report = pruning.prune_step(
            state, config.prune, k_star=k_star, missing_target=missing,
            query=query, sim=provider)
        texts.append(text)
        reports.append(report)
    return texts, reports


def _process_trajectory(traj: Trajectory, line_no: int, config: PipelineConfig,
                        provider: similarity.SimilarityProvider) -> _TrajectoryOutcome:
    outcome = _TrajectoryOutcome(trajectory_id=traj.id, line_no=line_no,
                                 steps_total=len(traj.steps))
    try:
        pruned_texts, outcome.reports = _prune_trajectory(traj, config, provider)

        budget = config.select.budget
        if len(traj.steps) <= budget:
            chosen = list(range(len(traj.steps)))
        else:
            score_steps = traj.steps
            if config.score_on == SCORE_ON_PRUNED:
                score_steps = tuple(
                    replace(s, state_raw=text)
                    for s, text in zip(traj.steps, pruned_texts))
            cache = similarity.build_cache(
                replace(traj, steps=score_steps), provider)
            select_config = config.select
            if select_config.method == selection.METHOD_RANDOM:
                select_config = replace(
                    select_config, seed=_trajectory_seed(config.seed, traj.id))
            result = selection.select(cache, select_config)
            chosen = list(result.indices)
            outcome.objective = result.objective_value

        for t in chosen:
            step = traj.steps[t]
            outcome.curated.append(CuratedStep(
                trajectory_id=traj.id,
                index=step.index,
                goal=traj.goal,
                history=step.history,
                state_pruned=pruned_texts[t],
                action=step.action,
                reasoning=step.reasoning,
            ))
    except (axtree.DuplicateBidError, pruning.PruneRangeError,
            similarity.CacheBuildError, similarity.ProviderError) as exc:
        outcome.error = f"{type(exc).__name__}: {exc}"
        outcome.curated = []
        outcome.reports = []
    return outcome


def uniform_post_sample(n_pool: int, n_keep: int, seed: int) -> list[int]:
    """Sorted indices of a uniform n_keep-subset of range(n_pool)."""
    rng = random.Random(seed)
    return sorted(rng.sample(range(n_pool), n_keep))


def run_pipeline(config: PipelineConfig) -> RunStats:
    config.validate()
    try:
        provider = similarity.make_provider(config.similarity)
    except (ValueError, OSError) as exc:
        raise ConfigError(f"similarity backend: {exc}") from exc

    stats = RunStats(score_on=config.score_on, similarity=config.similarity,
                     seed=config.seed,
                     prune_config={
                         "strategy": config.prune.strategy,
                         "window": config.prune.window,
                         "offset": config.prune.offset,
                         "non_node_window": config.prune.non_node_window,
                         "semantic_k": config.prune.semantic_k,
                     },
                     select_config={
                         "method": config.select.method,
                         "budget": config.select.budget,
                         "lambda": config.select.lam,
                     })
    rejects: list[dict] = []

    t0 = time.perf_counter()
    loaded: list[tuple[int, Trajectory]] = []
    with open(config.input, encoding="utf-8") as fh:
        for line_no, line in enumerate(fh, start=1):
            if not line.strip():
                continue
            stats.trajectories_in += 1
            try:
                obj = json.loads(line)
            except json.JSONDecodeError as exc:
                stats.trajectories_rejected += 1
                rejects.append({"line_no": line_no, "trajectory_id": None,
                                "stage": "load", "reason": f"invalid JSON: {exc.msg}"})
                continue
            try:
                loaded.append((line_no, parse_trajectory(obj, line_no=line_no)))
            except DatasetError as exc:
                stats.trajectories_rejected += 1
                rejects.append({"line_no": line_no,
                                "trajectory_id": obj.get("id") if isinstance(obj, dict) else None,
                                "stage": "load", "reason": str(exc)})
    stats.timings["load"] = time.perf_counter() - t0

    t0 = time.perf_counter()

    def worker(item: tuple[int, Trajectory]) -> _TrajectoryOutcome:
        return _process_trajectory(item[1], item[0], config, provider)

    if config.workers > 1:
        with ThreadPoolExecutor(max_workers=config.workers) as pool:
            outcomes = list(pool.map(worker, loaded))
    else:
        outcomes = [worker(item) for item in loaded]
    stats.timings["process"] = time.perf_counter() - t0

    pool_steps: list[CuratedStep] = []
    for outcome in outcomes:
        stats.steps_in += outcome.steps_total
        if outcome.error is not None:
            stats.trajectories_rejected += 1
            stats.steps_rejected += outcome.steps_total
            rejects.append({"line_no": outcome.line_no,
                            "trajectory_id": outcome.trajectory_id,
                            "stage": "process", "reason": outcome.error})
            continue
        stats.trajectories_out += 1
        stats.steps_selected += len(outcome.curated)
        stats.steps_unselected += outcome.steps_total - len(outcome.curated)
        if outcome.objective is not None:
            stats.objective_values.append(outcome.objective)
        for report in outcome.reports:
            _account_report(stats, report)
        pool_steps.extend(outcome.curated)

    t0 = time.perf_counter()
    stats.post_sample_requested = config.post_sample
    if config.post_sample is not None:
        if config.post_sample >= len(pool_steps):
            stats.post_sample_clamp_warnings += 1
        else:
            keep = uniform_post_sample(len(pool_steps), config.post_sample,
                                       config.seed)
            pool_steps = [pool_steps[i] for i in keep]
    stats.steps_out = len(pool_steps)
    stats.timings["post_sample"] = time.perf_counter() - t0

    t0 = time.perf_counter()
    write_curated(pool_steps, config.output)
    rejects_path = Path(config.resolved_rejects_path())
    rejects_path.parent.mkdir(parents=True, exist_ok=True)
    with open(rejects_path, "w", encoding="utf-8") as fh:
        for record in rejects:
            fh.write(json.dumps(record, ensure_ascii=False) + "\n")
    if config.render_prompts_dir:
        render_prompts_to_dir(pool_steps, config.render_prompts_dir)
    stats.timings["write"] = time.perf_counter() - t0

    report_stats(stats, config.resolved_stats_path())
    return stats


def report_stats(stats: RunStats, path: str | Path) -> None:
    """Write the canonical JSON stats report (timings excluded, so reruns
    with identical inputs produce identical bytes)."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(stats.to_dict(), fh, indent=2, sort_keys=True)
        fh.write("\n")


def prune_only(config: PipelineConfig) -> RunStats:
    """Replace every step's state with its pruned text, selection skipped.

    Emits trajectory-schema records so the output can feed ``select-only``.
    """
    config.validate()
    try:
        provider = similarity.make_provider(config.similarity)
    except (ValueError, OSError) as exc:
        raise ConfigError(f"similarity backend: {exc}") from exc

    stats = RunStats(score_on=config.score_on, similarity=config.similarity,
                     seed=config.seed,
                     prune_config={
                         "strategy": config.prune.strategy,
                         "window": config.prune.window,
                         "offset": config.prune.offset,
                         "non_node_window": config.prune.non_node_window,
                         "semantic_k": config.prune.semantic_k,
                     },
                     select_config={})
    rejects: list[dict] = []
    out_path = Path(config.output)
    out_path.parent.mkdir(parents=True, exist_ok=True)

    with open(config.input, encoding="utf-8") as fh, \
            open(out_path, "w", encoding="utf-8") as out:
        for line_no, line in enumerate(fh, start=1):
            if not line.strip():
                continue
            stats.trajectories_in += 1
            try:
                traj = parse_trajectory(json.loads(line), line_no=line_no)
                texts, reports = _prune_trajectory(traj, config, provider)
            except (DatasetError, json.JSONDecodeError, axtree.DuplicateBidError,
                    similarity.ProviderError) as exc:
                stats.trajectories_rejected += 1
                rejects.append({"line_no": line_no, "trajectory_id": None,
                                "stage": "prune", "reason": str(exc)})
                continue
            stats.trajectories_out += 1
            stats.steps_in += len(traj.steps)
            for report in reports:
                _account_report(stats, report)
            pruned = replace(traj, steps=tuple(
                replace(s, state_raw=text)
                for s, text in zip(traj.steps, texts)))
            out.write(json.dumps(trajectory_to_obj(pruned), ensure_ascii=False) + "\n")

    rejects_path = Path(config.resolved_rejects_path())
    rejects_path.parent.mkdir(parents=True, exist_ok=True)
    with open(rejects_path, "w", encoding="utf-8") as fh:
        for record in rejects:
            fh.write(json.dumps(record, ensure_ascii=False) + "\n")
    report_stats(stats, config.resolved_stats_path())
    return stats
