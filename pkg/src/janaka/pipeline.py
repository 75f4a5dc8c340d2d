"""End-to-end orchestration: candidates -> fitness gate -> templates -> repair.

A run asks the provider for candidate formulas, accepts the fittest one when
it clears kappa (path "llm-direct"), and otherwise turns the top-k candidates
into templates and repairs them, iterating the strategies GTemp, Random,
WithGF (in that order, under one shared budget) until the threshold is met
(path "repaired") or the options run out (path "failed", best effort still
reported).
"""

from __future__ import annotations

import configparser
import json
import math
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

from .errors import ConfigError, JanakaError, NoTemplatesError, UnsupportedNegationError
from .formulas import (
    Atom,
    Formula,
    PropositionSet,
    children,
    format_formula,
    is_nnf,
    parse_formula,
    to_nnf,
)
from .llm import (
    MULTISHOT,
    ONESHOT,
    HttpChatProvider,
    MockChatProvider,
    build_prompt,
    request_candidates,
    top_k,
)
from .repair import RepairOutcome, SearchBudget, repair
from .semantics import (
    DISCOUNTED,
    ROBUST,
    SemanticsParams,
    discounted_value,
    robust_value,
    sample_fitness,
    satisfies_all,
)
from .templates import GTEMP, RANDOM, STRATEGIES, WITH_GF, make_templates
from .traces import Sample, generate_traces, infer_props, parse_traces

AUTO = "auto"
STRATEGY_ORDER = (GTEMP, RANDOM, WITH_GF)


@dataclass
class RunConfig:
    traces_path: str | None = None
    explanation_path: str | None = None
    props: list[str] | None = None
    semantics: SemanticsParams = field(default_factory=SemanticsParams)
    kappa: float = 0.5
    depth: int = 1
    top: int = 3
    strategy: str = AUTO
    hole_prob: float = 0.2
    provider: str = "mock"
    endpoint: str | None = None
    model: str | None = None
    temperature: float | None = None
    fixtures: str | None = None
    seed: int = 0
    budget: SearchBudget = field(default_factory=SearchBudget)
    out_path: str | None = None
    n_candidates: int = 5
    mode: str = ONESHOT
    template_count: int = 4
    max_retries: int = 2

    def validate(self):
        if not math.isfinite(self.kappa):
            raise ConfigError("kappa must be finite")
        if self.depth < 1:
            raise ConfigError("depth must be >= 1")
        if self.top < 1:
            raise ConfigError("top must be >= 1")
        if self.strategy != AUTO and self.strategy not in STRATEGIES:
            raise ConfigError(f"unknown strategy {self.strategy!r}")
        if self.mode not in (ONESHOT, MULTISHOT):
            raise ConfigError(f"unknown mode {self.mode!r}")
        if self.provider not in ("mock", "http"):
            raise ConfigError(f"unknown provider {self.provider!r}")


@dataclass
class RunReport:
    formula: str | None
    path: str  # llm-direct | repaired | failed
    candidates: list[dict]
    repair: dict | None
    params: dict
    timings: dict
    notes: list[str]

    def to_dict(self, zero_timings: bool = False) -> dict:
        out = {
            "formula": self.formula,
            "path": self.path,
            "candidates": self.candidates,
            "repair": self.repair,
            "params": self.params,
            "timings": {k: 0.0 for k in self.timings} if zero_timings else self.timings,
            "notes": self.notes,
        }
        if zero_timings and out["repair"] is not None:
            out["repair"] = dict(out["repair"], elapsed=0.0)
        return out

    def to_json(self, zero_timings: bool = False) -> str:
        return json.dumps(self.to_dict(zero_timings), indent=2, sort_keys=True) + "\n"


def _params_echo(cfg: RunConfig) -> dict:
    return {
        "semantics": cfg.semantics.kind,
        "alpha": cfg.semantics.alpha,
        "beta": cfg.semantics.beta,
        "gamma": cfg.semantics.gamma,
        "kappa": cfg.kappa,
        "depth": cfg.depth,
        "top": cfg.top,
        "strategy": cfg.strategy,
        "hole_prob": cfg.hole_prob,
        "seed": cfg.seed,
        "n_candidates": cfg.n_candidates,
        "mode": cfg.mode,
        "provider": cfg.provider,
        "model": cfg.model,
        "budget": {
            "time_limit": cfg.budget.time_limit,
            "node_limit": cfg.budget.node_limit,
            "parallelism": cfg.budget.parallelism,
        },
        "template_count": cfg.template_count,
        "max_retries": cfg.max_retries,
    }


def _outcome_dict(outcome: RepairOutcome, strategy: str | None) -> dict:
    return {
        "formula": format_formula(outcome.best.formula) if outcome.best else None,
        "fitness": outcome.fitness if outcome.best else None,
        "total": outcome.total if outcome.best else None,
        "per_trace": [{"score": s, "sat": sat} for s, sat in outcome.per_trace],
        "explored": outcome.explored,
        "elapsed": outcome.elapsed,
        "threshold_met": outcome.threshold_met,
        "budget_expired": outcome.budget_expired,
        "strategy": strategy,
    }


def make_provider(cfg: RunConfig):
    if cfg.provider == "mock":
        if not cfg.fixtures:
            raise ConfigError("the mock provider needs --fixtures (a directory of responses)")
        return MockChatProvider(fixture_dir=cfg.fixtures)
    if not cfg.endpoint or not cfg.model:
        raise ConfigError("the http provider needs --endpoint and --model")
    return HttpChatProvider(cfg.endpoint, cfg.model, temperature=cfg.temperature)


def load_sample(cfg: RunConfig) -> Sample:
    if not cfg.traces_path:
        raise ConfigError("no trace file configured")
    text = Path(cfg.traces_path).read_text()
    props = PropositionSet(cfg.props) if cfg.props else infer_props(text)
    return parse_traces(text, props)


def janaka_run(
    cfg: RunConfig,
    sample: Sample | None = None,
    explanation: str | None = None,
    provider=None,
) -> RunReport:
    """Run the full mining pipeline; inputs may be injected to bypass files."""
    cfg.validate()
    t_start = time.perf_counter()
    notes: list[str] = []
    if sample is None:
        sample = load_sample(cfg)
    if explanation is None:
        if not cfg.explanation_path:
            raise ConfigError("no explanation file configured")
        explanation = Path(cfg.explanation_path).read_text()
    if provider is None:
        provider = make_provider(cfg)

    bundle = build_prompt(sample, explanation, mode=cfg.mode, n=cfg.n_candidates)
    cands = request_candidates(provider, bundle, max_retries=cfg.max_retries)
    t_llm = time.perf_counter()

    ranked = top_k(cands, sample, cfg.semantics, k=len(cands.formulas))
    cand_rows = []
    for f, fit in ranked:
        ok, _ = satisfies_all(f, sample)
        cand_rows.append({"formula": format_formula(f), "fitness": fit, "sat": ok})

    best_formula, best_fit = ranked[0]
    params = _params_echo(cfg)
    if best_fit >= cfg.kappa:
        t_end = time.perf_counter()
        return RunReport(
            formula=format_formula(best_formula),
            path="llm-direct",
            candidates=cand_rows,
            repair=None,
            params=params,
            timings={
                "llm_seconds": t_llm - t_start,
                "repair_seconds": 0.0,
                "total_seconds": t_end - t_start,
            },
            notes=notes,
        )

    # normalize the top-k candidates for template generation
    sources: list[Formula] = []
    for f, _fit in ranked[: cfg.top]:
        try:
            sources.append(f if is_nnf(f) else to_nnf(f))
        except UnsupportedNegationError:
            notes.append(f"skipped un-normalizable candidate: {format_formula(f)}")
    if not sources:
        raise NoTemplatesError("no top candidate could be normalized for templates")

    strategies = STRATEGY_ORDER if cfg.strategy == AUTO else (cfg.strategy,)
    best_outcome: RepairOutcome | None = None
    best_strategy: str | None = None
    time_left = cfg.budget.time_limit
    nodes_left = cfg.budget.node_limit
    for si, strategy in enumerate(strategies):
        templates = []
        for fi, source in enumerate(sources):
            templates.extend(
                make_templates(
                    source,
                    d=cfg.depth,
                    strategy=strategy,
                    hole_prob=cfg.hole_prob,
                    seed=cfg.seed + 10007 * si + 101 * fi,
                    count=cfg.template_count,
                )
            )
        outcome = repair(
            sample,
            templates,
            cfg.semantics,
            cfg.kappa,
            budget=SearchBudget(
                time_limit=max(time_left, 0.01),
                node_limit=max(nodes_left, 1),
                parallelism=cfg.budget.parallelism,
            ),
        )
        outcome.strategy = strategy
        time_left -= outcome.elapsed
        nodes_left -= outcome.explored
        if best_outcome is None or (
            outcome.best is not None
            and (best_outcome.best is None or outcome.fitness > best_outcome.fitness)
        ):
            best_outcome, best_strategy = outcome, strategy
        if outcome.threshold_met or time_left <= 0 or nodes_left <= 0:
            break

    t_end = time.perf_counter()
    met = best_outcome is not None and best_outcome.threshold_met
    chosen = None
    if best_outcome is not None and best_outcome.best is not None:
        chosen = format_formula(best_outcome.best.formula)
    elif cand_rows:
        chosen = cand_rows[0]["formula"]
        notes.append("repair produced no admissible formula; reporting top candidate")
    return RunReport(
        formula=chosen,
        path="repaired" if met else "failed",
        candidates=cand_rows,
        repair=_outcome_dict(best_outcome, best_strategy) if best_outcome else None,
        params=params,
        timings={
            "llm_seconds": t_llm - t_start,
            "repair_seconds": t_end - t_llm,
            "total_seconds": t_end - t_start,
        },
        notes=notes,
    )


# --- standalone scoring ---------------------------------------------------------


def eval_formula(
    formula_text: str, sample: Sample, params: SemanticsParams, both: bool = False
) -> dict:
    """Per-trace and mean scores for one formula, optionally under both
    semantics (the robust side evaluates the NNF)."""
    f = parse_formula(formula_text, sample.props)

    def table(p: SemanticsParams) -> dict:
        g = f if p.kind == DISCOUNTED or is_nnf(f) else to_nnf(f)
        rows = []
        for w in sample.traces:
            v = robust_value(g, w, p) if p.kind == ROBUST else discounted_value(g, w, p)
            rows.append(
                {
                    "score": v.value,
                    "decisive": v.decisive,
                    "sat": bool(satisfies_all(f, Sample((w,), sample.props))[0]),
                }
            )
        return {
            "mean": sample_fitness(f, sample, p),
            "per_trace": rows,
        }

    out = {"formula": format_formula(f), "props": list(sample.props)}
    if both:
        robust = SemanticsParams(params.alpha, params.beta, params.gamma, ROBUST)
        disc = SemanticsParams(params.alpha, params.beta, params.gamma, DISCOUNTED)
        out["robust"] = table(robust)
        out["discounted"] = table(disc)
    else:
        out[params.kind] = table(params)
    return out


# --- benchmark harness ------------------------------------------------------------


def atoms_in_order(f: Formula) -> list[str]:
    """Atom names in first-occurrence (left-to-right) order."""
    out: list[str] = []

    def walk(g):
        if isinstance(g, Atom):
            if g.name != "true" and g.name not in out:
                out.append(g.name)
            return
        for c in children(g):
            walk(c)

    walk(f)
    return out


def _case_config(path: Path) -> dict:
    parser = configparser.ConfigParser()
    parser.read(path)
    if "case" not in parser:
        raise ConfigError(f"{path} has no [case] section")
    return dict(parser["case"])


def run_case(case_dir: Path) -> dict:
    """Execute one benchmark case; raises on setup errors."""
    case_dir = Path(case_dir)
    c = _case_config(case_dir / "case.ini")
    formula_text = c["formula"]
    props = PropositionSet(atoms_in_order(parse_formula(formula_text)))
    ground_truth = parse_formula(formula_text, props)

    kind = c.get("semantics", ROBUST)
    params = SemanticsParams(
        float(c.get("alpha", 0.9)), float(c.get("beta", 0.9)),
        float(c.get("gamma", 0.1)), kind,
    )
    sample = generate_traces(
        ground_truth,
        props,
        count=int(c.get("count", 10)),
        min_len=int(c.get("min_len", 3)),
        max_len=int(c.get("max_len", 6)),
        seed=int(c.get("gen_seed", 7)),
        budget=int(c.get("gen_budget", 200000)),
    )
    cfg = RunConfig(
        semantics=params,
        kappa=float(c.get("kappa", 0.5)),
        depth=int(c.get("depth", 1)),
        top=int(c.get("top", 1)),
        strategy=c.get("strategy", AUTO),
        hole_prob=float(c.get("hole_prob", 0.3)),
        provider="mock",
        fixtures=str(case_dir / "responses"),
        seed=int(c.get("seed", 0)),
        budget=SearchBudget(
            time_limit=float(c.get("budget_seconds", 60.0)),
            node_limit=int(c.get("node_limit", 1_000_000)),
        ),
        n_candidates=int(c.get("n_candidates", 5)),
        template_count=int(c.get("template_count", 4)),
    )
    explanation = (case_dir / "explanation.txt").read_text()
    t0 = time.perf_counter()
    report = janaka_run(cfg, sample=sample, explanation=explanation)
    runtime = time.perf_counter() - t0

    llm = report.candidates[0]
    final_text = report.formula
    final = parse_formula(final_text, props)
    final_sat, _ = satisfies_all(final, sample)
    final_fit = sample_fitness(final, sample, params)
    checks = {}
    if c.get("expect_sat", "true").lower() == "true":
        checks["sat"] = final_sat
    if c.get("expect_improvement", "true").lower() == "true":
        checks["improvement"] = final_fit >= llm["fitness"]
    return {
        "case": case_dir.name,
        "ground_truth": format_formula(ground_truth),
        "semantics": kind,
        "traces": len(sample.traces),
        "llm": llm,
        "final": {"formula": final_text, "fitness": final_fit, "sat": final_sat},
        "path": report.path,
        "runtime": runtime,
        "checks": checks,
        "ok": all(checks.values()),
    }


def bench_run(suite_dir, out_dir=None, parallelism: int = 1) -> dict:
    """Run every case directory under the suite; per-case failures are
    isolated into their row and the suite continues."""
    suite_dir = Path(suite_dir)
    cases = sorted(p for p in suite_dir.iterdir() if (p / "case.ini").exists())
    if not cases:
        raise ConfigError(f"no cases under {suite_dir}")
    out = Path(out_dir) if out_dir else None
    if out:
        out.mkdir(parents=True, exist_ok=True)

    def one(case_dir: Path) -> dict:
        try:
            return run_case(case_dir)
        except JanakaError as exc:
            return {"case": case_dir.name, "error": f"{type(exc).__name__}: {exc}", "ok": False}

    if parallelism > 1:
        with ThreadPoolExecutor(max_workers=parallelism) as pool:
            rows = list(pool.map(one, cases))
    else:
        rows = [one(c) for c in cases]

    suite = {
        "suite": suite_dir.name,
        "cases": rows,
        "ok": all(r.get("ok", False) for r in rows),
    }
    if out:
        for row in rows:
            tmp = out / f".{row['case']}.json.tmp"
            tmp.write_text(json.dumps(row, indent=2, sort_keys=True) + "\n")
            tmp.replace(out / f"{row['case']}.json")
        (out / "suite.json").write_text(json.dumps(suite, indent=2, sort_keys=True) + "\n")
    return suite


def format_bench_table(suite: dict) -> str:
    lines = [
        f"{'case':<18} {'LLM formula':<42} {'SAT':<4} {'FIT':>8}   "
        f"{'repaired formula':<46} {'SAT':<4} {'FIT':>8} {'time':>7}"
    ]
    for row in suite["cases"]:
        if "error" in row:
            lines.append(f"{row['case']:<18} ERROR: {row['error']}")
            continue
        llm, fin = row["llm"], row["final"]
        lines.append(
            f"{row['case']:<18} {llm['formula']:<42} {'yes' if llm['sat'] else 'no':<4} "
            f"{llm['fitness']:>8.3f}   {fin['formula']:<46} "
            f"{'yes' if fin['sat'] else 'no':<4} {fin['fitness']:>8.3f} "
            f"{row['runtime']:>6.1f}s"
        )
    lines.append(f"suite ok: {suite['ok']}")
    return "\n".join(lines)
