from datetime import datetime
import json
import logging
from pathlib import Path
from typing import Dict
from typing import List
from typing import Optional

import numpy as np
from rich.console import Console
from rich.table import Table
import typer

from perturbeu.app import PerturbEU
from perturbeu.app import to_report_csv
from perturbeu.app import to_report_json
from perturbeu.data.Dataset import Dataset
from perturbeu.data.utils.readers import read_datasets
from perturbeu.data.utils.writers import to_budget_csv
from perturbeu.data.utils.writers import to_generic_json
from perturbeu.measures.Oracle.AxiomOracle import check_psaroeu
from perturbeu.measures.Oracle.AxiomOracle import check_psarseu
from perturbeu.measures.Oracle.AxiomOracle import oracle_min_e
from perturbeu.measures.Perturbation.PerturbationSolver import min_e_oeu
from perturbeu.measures.Perturbation.PerturbationSolver import min_e_seu
from perturbeu.measures.Testing.MinimumPerturbationTest import MPTestParams
from perturbeu.measures.Testing.MinimumPerturbationTest import mp_test
from perturbeu.measures.Testing.MinimumPerturbationTest import mp_test_grid
from perturbeu.simulation.SubjectSimulator import bronars_subject
from perturbeu.simulation.SubjectSimulator import budgets_from_dataset
from perturbeu.simulation.SubjectSimulator import compare_distributions
from perturbeu.simulation.SubjectSimulator import random_budgets
from perturbeu.simulation.SubjectSimulator import simulate_cohort
from perturbeu.utils.config import RunConfig
from perturbeu.utils.errors import PerturbEUError
from perturbeu.utils.utils import format_value

app = typer.Typer(help="Distance from expected utility maximisation of choice data")

console = Console(stderr=True)

EXIT_OK: int = 0
EXIT_MISMATCH: int = 1
EXIT_ALL_FAILED: int = 2

# K * S beyond which test sequence enumeration does not finish
ORACLE_MAX_ENTRIES: int = 8

ConfigOption = typer.Option(None, "--config", help="Flat key=value file of options")
InputsArgument = typer.Argument(None, help="Input data files")
FormatOption = typer.Option(None, "--format", help="csv or json, default from extension")
MuOption = typer.Option(None, "--mu", help="Objective belief override, e.g. 0.25,0.75")
SeedOption = typer.Option(None, "--seed", help="Root random seed")
JsonOption = typer.Option(None, "--json", help="JSON output path")


def _build_config(config_file: Optional[Path], **options) -> RunConfig:
    # empty lists mean the flag was not given
    options = {k: (None if v in ([], ()) else v) for k, v in options.items()}
    try:
        return RunConfig.from_sources(str(config_file) if config_file else None, **options)
    except (PerturbEUError, ValueError) as e:
        raise typer.BadParameter(str(e)) from e


def _summary_table(summary: Dict[str, dict]) -> Table:
    table = Table(title="Summary")
    table.add_column("input")
    for key in ("n_subjects", "n_failed", "mean_e_star_oeu", "median_e_star_oeu", "mean_ccei", "median_ccei"):
        table.add_column(key)
    for source, values in summary.items():
        table.add_row(
            source,
            *[
                format_value(values[k])
                for k in ("n_subjects", "n_failed", "mean_e_star_oeu", "median_e_star_oeu", "mean_ccei", "median_ccei")
            ],
        )
    return table


def _write_or_echo(text: str, path: Optional[str]) -> None:
    if path:
        with open(path, "w", encoding="utf-8", newline="") as f:
            f.write(text)
        console.print(f"written to {path}")
    else:
        typer.echo(text, nl=False)


def _run_analysis(cfg: RunConfig, show_time: bool) -> PerturbEU:
    if not cfg.inputs:
        raise typer.BadParameter("at least one input file is required")

    try:
        runner = PerturbEU(config=cfg, show_time_stats=show_time)
    except PerturbEUError as e:
        console.print(f"[red]error:[/red] {e}")
        raise typer.Exit(code=EXIT_ALL_FAILED)

    runner.run()

    if cfg.output or cfg.json_output:
        runner.save()
    else:
        typer.echo(to_report_csv(runner.results(as_dataframe=True)), nl=False)

    if cfg.scatter:
        runner.save_scatter()

    console.print(_summary_table(runner.summary()))
    return runner


@app.command()
def analyze(
    inputs: Optional[List[Path]] = InputsArgument,
    config: Optional[Path] = ConfigOption,
    fmt: Optional[str] = FormatOption,
    mu: Optional[str] = MuOption,
    tie_tolerance: Optional[float] = typer.Option(None, help="Quantity tie tolerance"),
    ccei_tol: Optional[float] = typer.Option(None, help="CCEI bisection tolerance"),
    seu: Optional[bool] = typer.Option(None, "--seu/--no-seu", help="Compute the subjective e*"),
    drop: Optional[List[int]] = typer.Option(None, "--drop", help="Drop-m variants, repeatable"),
    mptest: Optional[bool] = typer.Option(None, "--mptest/--no-mptest", help="Run the minimum perturbation test"),
    eta1: Optional[float] = typer.Option(None),
    eta2: Optional[float] = typer.Option(None),
    alpha: Optional[float] = typer.Option(None),
    draws: Optional[int] = typer.Option(None),
    seed: Optional[int] = SeedOption,
    workers: Optional[int] = typer.Option(None, help="Worker processes"),
    output: Optional[Path] = typer.Option(None, "--output", help="CSV report path"),
    json_output: Optional[Path] = JsonOption,
    scatter: Optional[Path] = typer.Option(None, "--scatter", help="Scatter series CSV path"),
    show_time: bool = typer.Option(False, help="Show time statistics"),
):
    """Per-subject e*, CCEI and behavioural diagnostics"""
    cfg = _build_config(
        config,
        inputs=inputs,
        fmt=fmt,
        mu=mu,
        tie_tolerance=tie_tolerance,
        ccei_tol=ccei_tol,
        seu=seu,
        drops=drop,
        mptest=mptest,
        eta1=eta1,
        eta2=eta2,
        alpha=alpha,
        draws=draws,
        seed=seed,
        workers=workers,
        output=output,
        json_output=json_output,
        scatter=scatter,
    )

    runner = _run_analysis(cfg, show_time)
    if runner.all_failed:
        raise typer.Exit(code=EXIT_ALL_FAILED)


@app.command()
def robust(
    inputs: Optional[List[Path]] = InputsArgument,
    config: Optional[Path] = ConfigOption,
    fmt: Optional[str] = FormatOption,
    mu: Optional[str] = MuOption,
    tie_tolerance: Optional[float] = typer.Option(None),
    drop: Optional[List[int]] = typer.Option(None, "--drop", help="Drop-m variants, default 1 and 2"),
    workers: Optional[int] = typer.Option(None),
    output: Optional[Path] = typer.Option(None, "--output"),
    json_output: Optional[Path] = JsonOption,
):
    """Drop-m and average perturbation variants of e*"""
    cfg = _build_config(
        config,
        inputs=inputs,
        fmt=fmt,
        mu=mu,
        tie_tolerance=tie_tolerance,
        workers=workers,
        output=output,
        json_output=json_output,
        drops=drop,
    )
    if not cfg.drops:
        cfg = cfg.with_options(drops=(1, 2))

    start = datetime.now()
    runner = _run_analysis(cfg, show_time=False)
    console.print(f"robustness runtime {datetime.now() - start}")

    if runner.all_failed:
        raise typer.Exit(code=EXIT_ALL_FAILED)


@app.command()
def mptest(
    inputs: Optional[List[Path]] = InputsArgument,
    config: Optional[Path] = ConfigOption,
    fmt: Optional[str] = FormatOption,
    mu: Optional[str] = MuOption,
    eta1: Optional[float] = typer.Option(None, help="Type I error probability"),
    eta2: Optional[float] = typer.Option(None, help="Type II error probability"),
    alpha: Optional[float] = typer.Option(None, help="Test size"),
    draws: Optional[int] = typer.Option(None, help="Monte Carlo draws"),
    seed: Optional[int] = SeedOption,
    grid: Optional[str] = typer.Option(None, "--grid", help="Comma separated eta values"),
    json_output: Optional[Path] = JsonOption,
):
    """Minimum perturbation test of objective EU rationality"""
    cfg = _build_config(
        config,
        inputs=inputs,
        fmt=fmt,
        mu=mu,
        eta1=eta1,
        eta2=eta2,
        alpha=alpha,
        draws=draws,
        seed=seed,
        json_output=json_output,
    )
    datasets = _read_all(cfg)
    params = MPTestParams(
        eta1=cfg.eta1, eta2=cfg.eta2, alpha=cfg.alpha, draws=cfg.draws, seed=cfg.seed
    )
    etas = [float(v) for v in grid.split(",")] if grid else None

    results: list = []
    n_failed: int = 0
    for d in datasets:
        try:
            if etas:
                decisions = mp_test_grid(d, etas, cfg.alpha, cfg.draws, cfg.seed)
                results.append(
                    {
                        "subject": d.subject_id,
                        "grid": [
                            {"eta1": a, "eta2": b, "reject": r}
                            for (a, b), r in decisions.items()
                        ],
                    }
                )
            else:
                results.append(mp_test(d, params).to_dict())
        except (PerturbEUError, ValueError, RuntimeError) as e:
            logging.warning(f"MP test failed for {d.subject_id}: {e}")
            results.append({"subject": d.subject_id, "error": str(e)})
            n_failed += 1

    _write_or_echo(to_report_json({"subjects": results}), cfg.json_output)

    if n_failed == len(datasets):
        raise typer.Exit(code=EXIT_ALL_FAILED)


def _read_all(cfg: RunConfig) -> List[Dataset]:
    if not cfg.inputs:
        raise typer.BadParameter("at least one input file is required")

    datasets: List[Dataset] = []
    for path in cfg.inputs:
        failures: Dict[str, str] = {}
        try:
            datasets += read_datasets(path, fmt=cfg.fmt, mu=cfg.mu, failures=failures)
        except PerturbEUError as e:
            console.print(f"[red]error:[/red] {path}: {e}")
            continue
        for subject_id, message in failures.items():
            console.print(f"[yellow]skipped[/yellow] {subject_id}: {message}")

    if not datasets:
        raise typer.Exit(code=EXIT_ALL_FAILED)
    return sorted(datasets, key=lambda d: d.subject_id)


@app.command()
def simulate(
    config: Optional[Path] = ConfigOption,
    kind: Optional[str] = typer.Option(None, help="bronars, crra or perturbed"),
    subjects: Optional[int] = typer.Option(None, help="Number of subjects"),
    trials: Optional[int] = typer.Option(None, help="Budgets per subject"),
    states: Optional[int] = typer.Option(None, help="Number of states"),
    gamma: Optional[float] = typer.Option(None, help="Fixed relative risk aversion"),
    xi2: Optional[float] = typer.Option(None, help="Log variance of the price noise"),
    ratio_bound: Optional[float] = typer.Option(None, help="Largest price ratio"),
    mu: Optional[str] = MuOption,
    seed: Optional[int] = SeedOption,
    budgets_from: Optional[Path] = typer.Option(None, help="Take budget sets from this data file"),
    compare: Optional[Path] = typer.Option(None, help="Compare simulated e* with this data file"),
    fmt: Optional[str] = FormatOption,
    output: Optional[Path] = typer.Option(None, "--output", help="Simulated data path"),
    json_output: Optional[Path] = JsonOption,
):
    """Synthetic subjects in the input formats"""
    cfg = _build_config(
        config,
        kind=kind,
        subjects=subjects,
        trials=trials,
        states=states,
        gamma=gamma,
        xi2=xi2,
        ratio_bound=ratio_bound,
        mu=mu,
        seed=seed,
        budgets_from=budgets_from,
        compare=compare,
        fmt=fmt,
        output=output,
        json_output=json_output,
    )

    pool = None
    if cfg.budgets_from:
        try:
            pool = [budgets_from_dataset(d) for d in read_datasets(cfg.budgets_from, mu=cfg.mu)]
        except (PerturbEUError, OSError) as e:
            console.print(f"[red]error:[/red] {cfg.budgets_from}: {e}")
            raise typer.Exit(code=EXIT_ALL_FAILED)

    try:
        cohort = simulate_cohort(
            cfg.kind,
            cfg.subjects,
            cfg.trials,
            cfg.states,
            seed=cfg.seed,
            gamma=cfg.gamma,
            xi2=cfg.xi2,
            ratio_bound=cfg.ratio_bound,
            mu=cfg.mu,
            budget_pool=pool,
        )
    except PerturbEUError as e:
        raise typer.BadParameter(str(e)) from e

    if cfg.compare:
        try:
            observed = [min_e_oeu(d).e_star for d in read_datasets(cfg.compare, mu=cfg.mu)]
            simulated = [min_e_oeu(d).e_star for d in cohort]
            comparison = compare_distributions(observed, simulated)
        except (PerturbEUError, OSError) as e:
            console.print(f"[red]error:[/red] {cfg.compare}: {e}")
            raise typer.Exit(code=EXIT_ALL_FAILED)
        _write_or_echo(to_report_json(comparison), cfg.json_output)
        if not cfg.output:
            return

    fmt = cfg.fmt or ("json" if cfg.states > 2 or str(cfg.output or "").endswith(".json") else "csv")
    text = to_budget_csv(cohort) if fmt == "csv" else to_generic_json(cohort)
    _write_or_echo(text, cfg.output)


@app.command()
def oracle(
    inputs: Optional[List[Path]] = InputsArgument,
    config: Optional[Path] = ConfigOption,
    fmt: Optional[str] = FormatOption,
    mu: Optional[str] = MuOption,
    subjects: Optional[int] = typer.Option(None, "--random", help="Random datasets when no input is given"),
    trials: Optional[int] = typer.Option(None, help="Observations per random dataset, default 3"),
    states: Optional[int] = typer.Option(None, help="States per random dataset"),
    max_len: Optional[int] = typer.Option(None, help="Longest enumerated test sequence"),
    tie_tolerance: Optional[float] = typer.Option(None, help="Quantity tie tolerance"),
    seed: Optional[int] = SeedOption,
    oracle_tol: Optional[float] = typer.Option(None, "--tol", help="Allowed |LP - oracle|"),
):
    """Verify LP e* against brute-force test sequence enumeration"""
    cfg = _build_config(
        config,
        inputs=inputs,
        fmt=fmt,
        mu=mu,
        subjects=subjects,
        oracle_trials=trials,
        states=states,
        max_len=max_len,
        tie_tolerance=tie_tolerance,
        seed=seed,
        oracle_tol=oracle_tol,
    )

    if cfg.inputs:
        datasets: List[Dataset] = []
        for d in _read_all(cfg):
            if d.K * d.S > ORACLE_MAX_ENTRIES:
                console.print(
                    f"[yellow]skipped[/yellow] {d.subject_id}: {d.K} x {d.S} is too large to enumerate"
                )
                continue
            datasets.append(d)
    elif cfg.oracle_trials * cfg.states > ORACLE_MAX_ENTRIES:
        raise typer.BadParameter(
            f"{cfg.oracle_trials} trials x {cfg.states} states is too large to enumerate, "
            f"at most {ORACLE_MAX_ENTRIES} entries"
        )
    else:
        datasets = _random_datasets(cfg)

    mismatches: int = 0
    for d in datasets:
        for axiom, solve, check in (
            ("OEU", min_e_oeu, check_psaroeu),
            ("SEU", min_e_seu, check_psarseu),
        ):
            lp = solve(d, cfg.tie_tolerance).e_star
            brute = oracle_min_e(d, axiom, cfg.max_len, cfg.tie_tolerance)
            if abs(lp - brute) <= cfg.oracle_tol:
                continue

            mismatches += 1
            console.print(
                f"[red]mismatch[/red] {d.subject_id} {axiom}: LP {lp:.9g}, oracle {brute:.9g}"
            )
            witness = check(d, lp, cfg.max_len, cfg.tie_tolerance)
            if witness is not True:
                typer.echo(json.dumps({"subject": d.subject_id, "axiom": axiom, **witness.to_dict()}))

    console.print(f"{len(datasets)} dataset(s) checked, {mismatches} mismatch(es)")
    if mismatches:
        raise typer.Exit(code=EXIT_MISMATCH)


def _random_datasets(cfg: RunConfig) -> List[Dataset]:
    datasets: List[Dataset] = []
    for i, child in enumerate(np.random.SeedSequence(cfg.seed).spawn(cfg.subjects)):
        budget_seed, choice_seed = child.spawn(2)
        b = random_budgets(cfg.oracle_trials, cfg.states, cfg.ratio_bound, budget_seed)
        d = bronars_subject(b, choice_seed, subject_id=f"random{i + 1:04d}")
        datasets.append(d if cfg.mu is None else d.with_belief(cfg.mu))
    return datasets


def main():
    app()


if __name__ == "__main__":
    main()
