"""Command-line interface: simulate studies, analyze panels, replicate tables.

Exit codes follow the usual discipline: 0 on success, 1 on runtime
failure, 2 on configuration or usage errors.  Every option can also be
supplied through an ``ALPHASCREEN_``-prefixed environment variable.
"""

from __future__ import annotations

import json
from dataclasses import replace
from pathlib import Path

import click
import numpy as np

from . import io
from .io import fmt
from .baselines import bh_procedure, bh_statistics, sbh_statistics, sn_statistics
from .errors import AlignmentError, AlphascreenError
from .estimation import estimate_alpha, ols_alpha_biased
from .fdr import NegativeControlConfig, screen_alphas
from .panels import check_aligned
from .simulation import (
    METHODS,
    SimulationScenario,
    generate_panel,
    replication_rng,
    run_study_detailed,
    table1_lognormal_scenario,
    table1_normal_scenario,
    table2_garch_arma_scenario,
    figure1_hetero_scenario,
)

# Reference values for the comparison column of the replicate command:
# (fdr@5%, fdr@10%, fdr@15%, power@5%, power@10%, power@15%) per method.
_REFERENCE = {
    ("1-normal", 0.2, "sbh"): (7.05, 13.29, 19.09, 56.72, 68.19, 74.63),
    ("1-normal", 0.2, "sn"): (7.28, 12.61, 17.97, 15.14, 26.23, 35.62),
    ("1-normal", 0.2, "yd"): (3.81, 8.70, 13.45, 39.29, 56.32, 64.87),
    ("1-normal", 0.3, "sbh"): (7.42, 13.73, 19.97, 96.67, 98.12, 98.77),
    ("1-normal", 0.3, "sn"): (6.26, 12.03, 17.78, 58.67, 71.87, 79.75),
    ("1-normal", 0.3, "yd"): (4.18, 9.05, 14.14, 92.95, 96.27, 97.51),
    ("1-lognormal", 0.2, "sbh"): (14.78, 20.85, 26.28, 64.86, 74.56, 80.10),
    ("1-lognormal", 0.2, "sn"): (12.92, 19.22, 24.77, 20.25, 32.59, 42.23),
    ("1-lognormal", 0.2, "yd"): (4.41, 9.00, 13.60, 34.39, 53.87, 64.13),
    ("1-lognormal", 0.3, "sbh"): (12.31, 18.75, 24.75, 94.61, 96.05, 96.93),
    ("1-lognormal", 0.3, "sn"): (9.82, 16.22, 22.41, 62.65, 74.92, 82.22),
    ("1-lognormal", 0.3, "yd"): (4.60, 9.23, 14.24, 92.10, 95.74, 97.03),
    ("2", 0.2, "sbh"): (13.80, 21.80, 28.99, 59.20, 69.98, 76.32),
    ("2", 0.2, "sn"): (7.36, 12.82, 18.27, 13.05, 22.96, 31.88),
    ("2", 0.2, "yd"): (4.25, 9.50, 14.50, 26.34, 46.26, 57.04),
    ("2", 0.3, "sbh"): (12.87, 21.32, 28.96, 96.08, 97.90, 98.62),
    ("2", 0.3, "sn"): (6.48, 12.19, 17.90, 54.36, 67.84, 76.24),
    ("2", 0.3, "yd"): (4.71, 9.57, 14.70, 88.72, 93.68, 95.61),
}

_TABLE_BETAS = (0.05, 0.10, 0.15)
_TABLE_METHODS = ("yd", "yd_r", "sbh", "sn", "bh")


def _parse_floats(text: str, what: str) -> list[float]:
    try:
        values = [float(tok) for tok in str(text).split(",") if tok.strip()]
    except ValueError as exc:
        raise click.UsageError(f"cannot parse {what} list {text!r}: {exc}") from None
    if not values:
        raise click.UsageError(f"no {what} values given")
    return values


def _parse_betas(text: str) -> list[float]:
    betas = _parse_floats(text, "beta")
    if any(not 0.0 < b < 1.0 for b in betas):
        raise click.UsageError("every beta must lie strictly between 0 and 1")
    return betas


def _load_scenario(path: str) -> SimulationScenario:
    try:
        payload = json.loads(Path(path).read_text())
        return SimulationScenario.from_dict(payload)
    except (OSError, ValueError, KeyError, TypeError) as exc:
        raise click.UsageError(f"cannot load scenario {path}: {exc}") from None


def _outdir(path: str) -> Path:
    out = Path(path)
    out.mkdir(parents=True, exist_ok=True)
    return out


def _write_detail_csv(detail_rows, path):
    lines = ["method,beta,replication,fdp,power"]
    for method, beta, rep, fdp, power in detail_rows:
        lines.append(f"{method},{fmt(beta)},{rep},{fmt(fdp)},{fmt(power)}")
    Path(path).write_text("\n".join(lines) + "\n")


@click.group(context_settings={"auto_envvar_prefix": "ALPHASCREEN"})
def main():
    """FDR-controlled alpha screening under latent-confounder factor models."""


@main.command()
@click.option("--scenario", "scenario_path", required=True, type=click.Path(), help="scenario JSON file")
@click.option("--method", default="yd", type=click.Choice(METHODS), show_default=True)
@click.option("--beta", default="0.05,0.1,0.15", show_default=True, help="comma-separated target FDR levels")
@click.option("--reps", default=300, show_default=True, help="number of replications")
@click.option("--rank", default=None, type=int, help="fix the latent rank instead of estimating it")
@click.option("--seed", default=None, type=int, help="override the scenario seed")
@click.option("--threads", default=1, show_default=True, help="parallel replication workers")
@click.option("--out", "output_dir", default=".", show_default=True, help="output directory")
def simulate(scenario_path, method, beta, reps, rank, seed, threads, output_dir):
    """Run one method across replications of a scenario and write reports."""
    if reps < 1:
        raise click.UsageError("--reps must be at least 1")
    if threads < 1:
        raise click.UsageError("--threads must be at least 1")
    betas = _parse_betas(beta)
    scenario = _load_scenario(scenario_path)
    if seed is not None:
        scenario = replace(scenario, seed=seed)
    if rank is not None and rank < 1:
        raise click.UsageError("--rank must be a positive integer")
    out = _outdir(output_dir)
    try:
        reports, detail, failures = run_study_detailed(
            scenario, [method], betas, reps, parallelism=threads, rank=rank
        )
        returns, factors, _, _ = generate_panel(scenario, replication_rng(scenario.seed, 0))
    except AlphascreenError as exc:
        raise click.ClickException(str(exc)) from None
    io.write_metrics_report(reports, out / "report.csv")
    _write_detail_csv(detail, out / "replications.csv")
    io.save_returns_csv(returns, out / "panel_returns.csv")
    io.save_factors_csv(factors, out / "panel_factors.csv")
    for r in reports:
        click.echo(
            f"{r.method} beta={r.beta:g}: FDR {r.mean_fdr:.2f}% ({r.sd_fdr:.2f}), "
            f"power {r.mean_power:.2f}% ({r.sd_power:.2f}) over {r.replications} reps"
        )
    if failures:
        click.echo(f"{len(failures)} replications failed", err=True)
    click.echo(f"reports written to {out}")


@main.command()
@click.option("--returns", "returns_path", required=True, type=click.Path(), help="returns CSV")
@click.option("--factors", "factors_path", required=True, type=click.Path(), help="observed factors CSV")
@click.option("--method", default="yd", type=click.Choice(METHODS), show_default=True)
@click.option("--beta", default=0.1, type=float, show_default=True, help="target FDR level")
@click.option("--rank", default=None, type=int)
@click.option("--out", "output_dir", default=".", show_default=True)
def analyze(returns_path, factors_path, method, beta, rank, output_dir):
    """Screen one real panel and write the per-entity selection report."""
    if not 0.0 < beta < 1.0:
        raise click.UsageError("--beta must lie strictly between 0 and 1")
    try:
        returns = io.load_returns_csv(returns_path)
        factors = io.load_factors_csv(factors_path)
    except (OSError, ValueError) as exc:
        raise click.UsageError(str(exc)) from None
    try:
        check_aligned(returns, factors)
    except AlignmentError as exc:
        raise click.UsageError(str(exc)) from None

    out = _outdir(output_dir)
    n, p = returns.n_periods, returns.n_entities
    try:
        if method in ("yd", "yd_r", "yd_th"):
            control = NegativeControlConfig(mode="threshold_rule") if method == "yd_th" else None
            result = screen_alphas(
                returns, factors, beta, rank=rank,
                studentize=(method == "yd_r"), negative_control=control,
            )
            fit = estimate_alpha(returns, factors, rank=rank)
            statistic = result.t_prod
            rejected = result.rejected
            cutoff = f"threshold={fmt(result.threshold)}"
            rank_hat = fit.latent.rank_hat
            alpha_hat = fit.alpha_hat
        else:
            if method == "bh":
                pv = bh_statistics(returns, factors)
                alpha_hat = ols_alpha_biased(returns, factors)
                rank_hat = ""
            else:
                fit = estimate_alpha(returns, factors, rank=rank)
                alpha_hat = fit.alpha_hat
                rank_hat = fit.latent.rank_hat
                pv = (
                    sbh_statistics(returns, factors, rank=rank)
                    if method == "sbh"
                    else sn_statistics(returns, factors, rank=rank)
                )
            rejected = bh_procedure(pv.p_values, beta)
            p_cut = float(pv.p_values[rejected].max()) if rejected.size else 0.0
            statistic = pv.statistics
            cutoff = f"p_cutoff={fmt(p_cut)}"
    except AlphascreenError as exc:
        raise click.ClickException(str(exc)) from None

    rej = set(np.atleast_1d(rejected).tolist())
    lines = ["entity_id,alpha_hat,statistic,rejected"]
    for i, eid in enumerate(returns.entity_ids):
        lines.append(f"{eid},{fmt(alpha_hat[i])},{fmt(statistic[i])},{1 if i in rej else 0}")
    lines.append(f"# method={method},beta={fmt(beta)},{cutoff},rank_hat={rank_hat},n={n},p={p}")
    report = out / "selection.csv"
    report.write_text("\n".join(lines) + "\n")
    click.echo(f"{len(rej)} of {p} entities selected; report at {report}")


def _table_scenarios(table: str, nus: list[float], seed):
    if table == "1":
        blocks = [("1-normal", table1_normal_scenario), ("1-lognormal", table1_lognormal_scenario)]
    elif table == "2":
        blocks = [("2", table2_garch_arma_scenario)]
    elif table == "figure1":
        blocks = [("figure1", figure1_hetero_scenario)]
    else:
        raise click.UsageError(f"unknown table id {table!r}; choose 1, 2 or figure1")
    out = []
    for label, factory in blocks:
        for nu in nus:
            scenario = factory(nu=nu)
            if seed is not None:
                scenario = replace(scenario, seed=seed)
            out.append((label, nu, scenario))
    return out


@main.command("replicate-table")
@click.argument("table")
@click.option("--nu", default="0.3", show_default=True, help="comma-separated signal strengths")
@click.option("--reps", default=300, show_default=True)
@click.option("--seed", default=None, type=int)
@click.option("--threads", default=1, show_default=True)
@click.option("--out", "output_dir", default=".", show_default=True)
def replicate_table(table, nu, reps, seed, threads, output_dir):
    """Re-run a built-in study design (TABLE is 1, 2 or figure1)."""
    if reps < 1:
        raise click.UsageError("--reps must be at least 1")
    nus = _parse_floats(nu, "nu")
    if any(v < 0 for v in nus):
        raise click.UsageError("signal strengths must be nonnegative")
    out = _outdir(output_dir)
    rows = []
    for label, nu_val, scenario in _table_scenarios(table, nus, seed):
        try:
            reports, _, _ = run_study_detailed(
                scenario, _TABLE_METHODS, _TABLE_BETAS, reps, parallelism=threads
            )
        except AlphascreenError as exc:
            raise click.ClickException(str(exc)) from None
        by_method: dict = {}
        for r in reports:
            by_method.setdefault(r.method, []).append(r)
        for method, recs in by_method.items():
            recs = sorted(recs, key=lambda r: r.beta)
            ref = _REFERENCE.get((label, nu_val, method))
            rows.append((label, nu_val, method, recs, ref))

    lines = [
        "block,nu,method,beta,mean_fdr,sd_fdr,mean_power,sd_power,replications,ref_fdr,ref_power"
    ]
    for label, nu_val, method, recs, ref in rows:
        for j, r in enumerate(recs):
            ref_fdr = fmt(ref[j]) if ref else ""
            ref_power = fmt(ref[3 + j]) if ref else ""
            lines.append(
                f"{label},{fmt(nu_val)},{method},{fmt(r.beta)},{fmt(r.mean_fdr)},{fmt(r.sd_fdr)},"
                f"{fmt(r.mean_power)},{fmt(r.sd_power)},{r.replications},{ref_fdr},{ref_power}"
            )
    target = out / f"table_{table}.csv"
    target.write_text("\n".join(lines) + "\n")

    click.echo(f"{'block':<12} {'nu':<5} {'method':<6} " + " ".join(f"FDR@{int(100 * b)}%" for b in _TABLE_BETAS) + "  " + " ".join(f"pow@{int(100 * b)}%" for b in _TABLE_BETAS))
    for label, nu_val, method, recs, ref in rows:
        fdrs = " ".join(f"{r.mean_fdr:6.2f}" for r in recs)
        pows = " ".join(f"{r.mean_power:6.2f}" for r in recs)
        click.echo(f"{label:<12} {nu_val:<5g} {method:<6} {fdrs}  {pows}")
        if ref:
            fdrs = " ".join(f"{v:6.2f}" for v in ref[:3])
            pows = " ".join(f"{v:6.2f}" for v in ref[3:])
            click.echo(f"{'':<12} {'':<5} {'(ref)':<6} {fdrs}  {pows}")
    click.echo(f"table written to {target}")


if __name__ == "__main__":
    main()
