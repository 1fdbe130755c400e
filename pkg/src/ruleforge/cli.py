"""Command-line pipeline: simulate, evaluate, localize, refine, score, check.

Exit codes: 0 success, 1 usage error, 2 parse/format error, 3 refinement
exhausted or validation rejection. Diagnostics go to stderr, as JSON when
--json is set. All inputs are loaded and validated before any output file
is written.
"""

from __future__ import annotations

import json
import os
import sys
from dataclasses import dataclass
from pathlib import Path

import click

from . import storage
from .counterfactual import NoInconsistency, SearchLimits, build_evidence
from .generation import DeterministicGenerator, LlmConfig, LlmGenerator, MockGenerator
from .grammar import ParseError, check_vocabulary, parse_rule, print_rule
from .metrics import build_metrics_report, grammar_compliance, metrics_table
from .scenario import default_config, make_oracle, make_reference_fixture, sample_dataset
from .semantics import DEFAULT_EPS_EQ, PolarizedRule, decisiveness
from .validation import ContradictionBudget, Exhausted, refine_loop

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_FORMAT = 2
EXIT_REFINEMENT = 3

ENV_BASE_URL = "RULEFORGE_LLM_BASE_URL"
ENV_API_KEY = "RULEFORGE_LLM_API_KEY"
ENV_MODEL = "RULEFORGE_LLM_MODEL"


class UsageFailure(click.ClickException):
    exit_code = EXIT_USAGE


@dataclass
class AppState:
    json_diagnostics: bool = False


@dataclass(frozen=True)
class RunConfig:
    """Validated inputs for a refinement run; construction implies every
    referenced file loaded cleanly (fail-fast, before any output exists)."""
    rules_path: Path
    dataset_path: Path
    config_path: Path
    generator: str
    max_attempts: int
    eps_eq: float
    max_radius: int
    search_budget: int
    contradiction_budget: ContradictionBudget
    seed: int
    output_dir: Path


def _emit_error(state: AppState, kind: str, message: str) -> None:
    if state.json_diagnostics:
        click.echo(json.dumps({"error": kind, "message": message}), err=True)
    else:
        click.echo(f"error ({kind}): {message}", err=True)


def _pick_rule(rules, rule_id: str | None):
    if rule_id is None:
        if len(rules) == 1:
            return rules[0]
        raise UsageFailure("multiple rules in file; pass --rule-id")
    for rule in rules:
        if rule.id == rule_id:
            return rule
    raise UsageFailure(f"no rule with id {rule_id!r}")


def _load_inputs(state: AppState, loader, path):
    try:
        return loader(path)
    except FileNotFoundError:
        raise UsageFailure(f"no such file: {path}")
    except storage.FormatError as exc:
        _emit_error(state, "format", str(exc))
        sys.exit(EXIT_FORMAT)


def _load_raw_json(state: AppState, path):
    try:
        return json.loads(Path(path).read_text(encoding="utf-8"))
    except FileNotFoundError:
        raise UsageFailure(f"no such file: {path}")
    except json.JSONDecodeError as exc:
        _emit_error(state, "format", f"{path}: invalid JSON: {exc}")
        sys.exit(EXIT_FORMAT)


@click.group()
@click.option("--json", "json_diagnostics", is_flag=True,
              help="Machine-readable JSON diagnostics on stderr.")
@click.pass_context
def cli(ctx, json_diagnostics):
    """Grammar-constrained refinement of safety operational rules."""
    ctx.obj = AppState(json_diagnostics=json_diagnostics)


@cli.command()
@click.option("--config", "config_path", type=click.Path(path_type=Path),
              help="Oracle config JSON; defaults to the built-in scenario.")
@click.option("--n", default=198, show_default=True, help="Number of runs to sample.")
@click.option("--seed", default=42, show_default=True)
@click.option("--reference-fixture", is_flag=True,
              help="Emit the canned 198-run / 27-mismatch fixture instead of sampling.")
@click.option("--out", "out_dir", type=click.Path(path_type=Path), default=Path("."),
              show_default=True, help="Output directory.")
@click.pass_obj
def sim(state: AppState, config_path, n, seed, reference_fixture, out_dir):
    """Sample a labeled dataset from the synthetic oracle."""
    if reference_fixture:
        fixture = make_reference_fixture(seed)
        config, runs = fixture.config, fixture.dataset
        rules = [fixture.baseline_rule]
    else:
        config = (_load_inputs(state, storage.load_oracle_config, config_path)
                  if config_path else default_config(seed))
        runs = sample_dataset(config, n, seed)
        rules = None
    out_dir.mkdir(parents=True, exist_ok=True)
    storage.store_dataset(out_dir / "dataset.csv", runs)
    storage.store_oracle_config(out_dir / "oracle_config.json", config)
    if rules is not None:
        storage.store_rules(out_dir / "rules.json", rules)
    click.echo(f"wrote {len(runs)} runs to {out_dir / 'dataset.csv'}")


@cli.command("eval")
@click.option("--rules", "rules_path", type=click.Path(path_type=Path), required=True)
@click.option("--dataset", "dataset_path", type=click.Path(path_type=Path), required=True)
@click.option("--eps-eq", default=DEFAULT_EPS_EQ, show_default=True)
@click.option("--out", "out_path", type=click.Path(path_type=Path),
              help="Write the JSON report here instead of stdout.")
@click.pass_obj
def eval_cmd(state: AppState, rules_path, dataset_path, eps_eq, out_path):
    """Per-rule decisiveness over a labeled dataset."""
    rules = _load_inputs(state, storage.load_rules, rules_path)
    runs = _load_inputs(state, storage.load_dataset, dataset_path)
    results = []
    definitive_dgs = []
    for rule in rules:
        report = decisiveness(rule, runs, eps_eq)
        if not report.fully_inconclusive:
            definitive_dgs.append(report.dg)
        results.append({
            "rule_id": rule.id,
            "dg": report.dg,
            "n": report.n,
            "n_mismatch": report.n_mismatch,
            "mismatches": list(report.mismatches),
            "fully_inconclusive": report.fully_inconclusive,
        })
    payload = {
        "schema_version": storage.SCHEMA_VERSION,
        "results": results,
        # rule-set aggregate: mean over rules with at least one definitive verdict
        "aggregate_dg": (sum(definitive_dgs) / len(definitive_dgs)
                         if definitive_dgs else None),
    }
    text = json.dumps(payload, indent=2) + "\n"
    if out_path:
        Path(out_path).write_text(text, encoding="utf-8")
    else:
        click.echo(text, nl=False)


@cli.command()
@click.option("--rules", "rules_path", type=click.Path(path_type=Path), required=True)
@click.option("--rule-id", default=None)
@click.option("--dataset", "dataset_path", type=click.Path(path_type=Path), required=True)
@click.option("--config", "config_path", type=click.Path(path_type=Path), required=True,
              help="Oracle config JSON (the re-execution stand-in).")
@click.option("--max-radius", default=SearchLimits().max_radius_steps, show_default=True)
@click.option("--search-budget", default=SearchLimits().budget, show_default=True,
              help="Oracle queries allowed per counterfactual search.")
@click.option("--out", "out_path", type=click.Path(path_type=Path), default=Path("evidence.json"),
              show_default=True)
@click.pass_obj
def cf(state: AppState, rules_path, rule_id, dataset_path, config_path, max_radius,
       search_budget, out_path):
    """Build the counterfactual evidence file for an inconsistent rule."""
    rules = _load_inputs(state, storage.load_rules, rules_path)
    runs = _load_inputs(state, storage.load_dataset, dataset_path)
    config = _load_inputs(state, storage.load_oracle_config, config_path)
    rule = _pick_rule(rules, rule_id)
    limits = SearchLimits(max_radius_steps=max_radius, budget=search_budget)
    try:
        evidence = build_evidence(rule, runs, make_oracle(config), config.odd, limits,
                                  dataset_ref=str(dataset_path))
    except NoInconsistency as exc:
        raise UsageFailure(str(exc))
    storage.store_evidence(out_path, evidence)
    click.echo(f"wrote {len(evidence.pairs)} pairs "
               f"({len(evidence.unresolved)} unresolved) to {out_path}")


def _make_generator(state: AppState, generator: str, mock_script, runs, odd, eps_eq):
    if generator == "local":
        return DeterministicGenerator(runs, odd, eps_eq)
    if generator == "mock":
        if mock_script is None:
            raise UsageFailure("--generator mock requires --mock-script")
        responses = _load_raw_json(state, mock_script)
        if not isinstance(responses, list) or not all(isinstance(r, str) for r in responses):
            _emit_error(state, "format", f"{mock_script}: expected a JSON list of strings")
            sys.exit(EXIT_FORMAT)
        return MockGenerator(responses, odd)
    missing = [name for name in (ENV_BASE_URL, ENV_API_KEY, ENV_MODEL)
               if not os.environ.get(name)]
    if missing:
        raise UsageFailure("llm generator needs environment variables: " + ", ".join(missing))
    config = LlmConfig(base_url=os.environ[ENV_BASE_URL], api_key=os.environ[ENV_API_KEY],
                       model=os.environ[ENV_MODEL])
    return LlmGenerator(config, odd)


@cli.command()
@click.option("--rules", "rules_path", type=click.Path(path_type=Path), required=True)
@click.option("--rule-id", default=None)
@click.option("--dataset", "dataset_path", type=click.Path(path_type=Path), required=True)
@click.option("--config", "config_path", type=click.Path(path_type=Path), required=True)
@click.option("--generator", type=click.Choice(["local", "llm", "mock"]), default="local",
              show_default=True)
@click.option("--mock-script", type=click.Path(path_type=Path),
              help="JSON list of scripted responses for --generator mock.")
@click.option("--max-attempts", default=5, show_default=True)
@click.option("--eps-eq", default=DEFAULT_EPS_EQ, show_default=True)
@click.option("--max-radius", default=SearchLimits().max_radius_steps, show_default=True)
@click.option("--search-budget", default=SearchLimits().budget, show_default=True)
@click.option("--grid-cap", default=ContradictionBudget().grid_cap, show_default=True,
              help="Deterministic grid probes allowed per contradiction check.")
@click.option("--subdivision-depth", default=ContradictionBudget().subdivision_depth,
              show_default=True, help="Interval refutation depth per contradiction check.")
@click.option("--samples", default=ContradictionBudget().samples, show_default=True,
              help="Seeded samples per contradiction check.")
@click.option("--seed", default=0, show_default=True,
              help="Seed for the contradiction checker's sampling stage.")
@click.option("--out", "out_dir", type=click.Path(path_type=Path), default=Path("."),
              show_default=True, help="Output directory.")
@click.pass_obj
def refine(state: AppState, rules_path, rule_id, dataset_path, config_path, generator,
           mock_script, max_attempts, eps_eq, max_radius, search_budget, grid_cap,
           subdivision_depth, samples, seed, out_dir):
    """Run the refine-validate loop on an inconsistent rule."""
    rules = _load_inputs(state, storage.load_rules, rules_path)
    runs = _load_inputs(state, storage.load_dataset, dataset_path)
    config = _load_inputs(state, storage.load_oracle_config, config_path)
    run_config = RunConfig(
        rules_path=rules_path, dataset_path=dataset_path, config_path=config_path,
        generator=generator, max_attempts=max_attempts, eps_eq=eps_eq,
        max_radius=max_radius, search_budget=search_budget,
        contradiction_budget=ContradictionBudget(grid_cap=grid_cap,
                                                 subdivision_depth=subdivision_depth,
                                                 samples=samples, seed=seed),
        seed=seed, output_dir=out_dir)
    target = _pick_rule(rules, rule_id)
    gen = _make_generator(state, generator, mock_script, runs, config.odd, eps_eq)
    limits = SearchLimits(max_radius_steps=run_config.max_radius,
                          budget=run_config.search_budget)
    out_dir.mkdir(parents=True, exist_ok=True)
    try:
        outcome = refine_loop(target, rules, runs, make_oracle(config), config.odd, gen,
                              run_config.max_attempts, eps_eq=run_config.eps_eq,
                              limits=limits, budget=run_config.contradiction_budget)
    except NoInconsistency as exc:
        raise UsageFailure(str(exc))
    except Exhausted as exc:
        _write_transcripts(out_dir, gen)
        summary = "; ".join(r.failure_summary or "" for r in exc.reports)
        _emit_error(state, "refinement", f"exhausted after {len(exc.reports)} attempts: {summary}")
        sys.exit(EXIT_REFINEMENT)
    dg_before = decisiveness(target, runs, eps_eq).dg
    refined_rule = PolarizedRule(target.id, target.polarity, outcome.refined)
    dg_after = decisiveness(refined_rule, runs, eps_eq).dg
    storage.store_outcome(out_dir / "outcome.json", outcome, target.id, dg_before, dg_after)
    (out_dir / "report.txt").write_text(_render_report(target, outcome, dg_before, dg_after),
                                        encoding="utf-8")
    _write_transcripts(out_dir, gen)
    click.echo(f"accepted on attempt {outcome.attempts}: {print_rule(outcome.refined)}")
    click.echo(f"dg {dg_before:.4f} -> {dg_after:.4f}")


def _write_transcripts(out_dir: Path, gen) -> None:
    transcript = getattr(gen, "transcript", None)
    if transcript is None:
        return
    payload = {
        "schema_version": storage.SCHEMA_VERSION,
        "transcripts": [{"prompt": t.prompt, "response": t.response} for t in transcript],
    }
    (out_dir / "transcripts.json").write_text(json.dumps(payload, indent=2) + "\n",
                                              encoding="utf-8")


def _render_report(target, outcome, dg_before: float, dg_after: float) -> str:
    lines = [
        f"rule {target.id} ({target.polarity.value})",
        f"  before: {print_rule(target.ast)}",
        f"  after:  {print_rule(outcome.refined)}",
        f"  decisiveness: {dg_before:.4f} -> {dg_after:.4f}",
        f"  attempts: {outcome.attempts}",
        "",
        "change log:",
    ]
    for edit in outcome.change_log:
        lines.append(f"  - {edit.kind.value} at {list(edit.path)}: "
                     f"{edit.before or '(none)'} -> {edit.after or '(removed)'}")
    lines += ["", "explanation:", f"  {outcome.explanation or '(none)'}", ""]
    return "\n".join(lines)


@cli.command("metrics")
@click.option("--rules", "rules_path", type=click.Path(path_type=Path), required=True)
@click.option("--rule-id", default=None)
@click.option("--dataset", "dataset_path", type=click.Path(path_type=Path), required=True)
@click.option("--config", "config_path", type=click.Path(path_type=Path), required=True)
@click.option("--outcome", "outcome_path", type=click.Path(path_type=Path), required=True)
@click.option("--raw", "raw_path", type=click.Path(path_type=Path),
              help="Raw generator text for grammar compliance; defaults to the "
                   "canonical refined rule.")
@click.option("--out", "out_path", type=click.Path(path_type=Path), default=Path("metrics.json"),
              show_default=True)
@click.pass_obj
def metrics_cmd(state: AppState, rules_path, rule_id, dataset_path, config_path,
                outcome_path, raw_path, out_path):
    """Score a refinement: decisiveness gain, validity, compliance, minimality."""
    rules = _load_inputs(state, storage.load_rules, rules_path)
    runs = _load_inputs(state, storage.load_dataset, dataset_path)
    config = _load_inputs(state, storage.load_oracle_config, config_path)
    outcome = _load_inputs(state, storage.load_outcome, outcome_path)
    target = _pick_rule(rules, rule_id)
    raw_text = (Path(raw_path).read_text(encoding="utf-8") if raw_path
                else print_rule(outcome.refined))
    refined_rule = PolarizedRule(target.id, target.polarity, outcome.refined)
    report = build_metrics_report(
        before=decisiveness(target, runs),
        after=decisiveness(refined_rule, runs),
        refined=outcome.refined, original=target.ast, odd=config.odd, raw_text=raw_text)
    storage.store_metrics(out_path, report)
    click.echo(metrics_table(report, label=target.id[:12]))


@cli.command()
@click.option("--rules", "rules_path", type=click.Path(path_type=Path), required=True)
@click.option("--config", "config_path", type=click.Path(path_type=Path), required=True)
@click.pass_obj
def check(state: AppState, rules_path, config_path):
    """Parse and vet a rules file: vocabulary and grammar compliance."""
    config = _load_inputs(state, storage.load_oracle_config, config_path)
    data = _load_raw_json(state, rules_path)
    if not isinstance(data, list):
        _emit_error(state, "format", f"{rules_path}: rules file must be a JSON list")
        sys.exit(EXIT_FORMAT)
    failures = 0
    for i, entry in enumerate(data):
        rule_id = entry.get("id", f"#{i}") if isinstance(entry, dict) else f"#{i}"
        text = entry.get("text", "") if isinstance(entry, dict) else str(entry)
        gc = grammar_compliance(text)
        try:
            ast = parse_rule(text)
        except ParseError as exc:
            failures += 1
            click.echo(f"{rule_id}: PARSE ERROR ({exc}); gc={gc.gc:.3f} "
                       f"({gc.n_viol}/{gc.n_tok} violating tokens)")
            continue
        violations = check_vocabulary(ast, config.odd)
        status = "ok" if not violations else "; ".join(str(v) for v in violations)
        click.echo(f"{rule_id}: {status}; gc={gc.gc:.3f}")
        if violations:
            failures += 1
    if failures:
        _emit_error(state, "check", f"{failures} rule(s) failed validation")
        sys.exit(EXIT_FORMAT)


def main(argv=None) -> int:
    try:
        cli.main(args=argv, standalone_mode=False)
        return EXIT_OK
    except click.UsageError as exc:
        click.echo(f"error (usage): {exc.format_message()}", err=True)
        return EXIT_USAGE
    except click.ClickException as exc:
        click.echo(f"error: {exc.format_message()}", err=True)
        return EXIT_USAGE if exc.exit_code == 1 else exc.exit_code
    except SystemExit as exc:
        return int(exc.code or 0)
    except storage.FormatError as exc:
        click.echo(f"error (format): {exc}", err=True)
        return EXIT_FORMAT


if __name__ == "__main__":
    sys.exit(main())
