"""Scaled-down reruns of the synthetic experiments.

Each function returns an :class:`ExperimentResult` whose ``table`` is the
plot- or print-ready TSV and whose ``extra`` maps file suffixes to auxiliary
long-format TSVs (fitted curves).
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field, replace

import numpy as np
from scipy.stats import pearsonr, spearmanr

from .._exceptions import DomainError
from ..engine import SolveOptions, solve
from ..io import columns_text
from .generators import TRANSFORM_SCHEMES, gen_max_payoffs, gen_sparse_payoffs, gen_transform_payoffs
from .metrics import affinity, linearity_gap, support_recovery, timing_sweep
from .regression import gen_gaussian_design, pseudo_r2_payoffs, r2_payoffs

EXPERIMENTS = ("transforms", "table1", "timing", "r2-grid")


@dataclass
class ExperimentResult:
    name: str
    table: str
    summary: dict = field(default_factory=dict)
    extra: dict = field(default_factory=dict)


def transforms(p: int = 10, schemes=TRANSFORM_SCHEMES, seed: int = 0, options=None) -> ExperimentResult:
    """Correlation of the fitted with the true transform for each generator scheme."""
    options = options or SolveOptions()
    names, corrs, iters = [], [], []
    c_scheme, c_nu, c_hat, c_true = [], [], [], []
    for scheme in schemes:
        table, truth = gen_transform_payoffs(p, scheme, seed)
        sol = solve(table, options)
        corr = float(pearsonr(sol.t_entries, truth.t_star)[0])
        names.append(scheme)
        corrs.append(corr)
        iters.append(sol.outer_iterations)
        t_star = truth.t_star[np.argsort(table.values, kind="stable")]
        c_scheme += [scheme] * sol.nu.size
        c_nu += sol.nu.tolist()
        c_hat += sol.t.tolist()
        c_true += t_star.tolist()
    k = len(names)
    table = columns_text(
        "scheme\tp\tseed\tcorrelation\touter_iterations", [names, [p] * k, [seed] * k, corrs, iters]
    )
    curves = columns_text("scheme\tnu\tt_hat\tt_star", [c_scheme, c_nu, c_hat, c_true])
    return ExperimentResult("transforms", table, dict(zip(names, corrs)), {"curves": curves})


def winner_takes_all(p: int = 10, options=None) -> ExperimentResult:
    """gamma_hat against the fitted transform at beta*_j = j."""
    sol = solve(gen_max_payoffs(p), options or SolveOptions())
    t_at_beta = wta_transformed_truth(sol, np.arange(1.0, p + 1.0))
    corr = float(pearsonr(sol.gamma, t_at_beta)[0])
    table = columns_text("feature\tgamma_hat\tt_hat_beta_star", [list(range(1, p + 1)), sol.gamma, t_at_beta])
    curve = columns_text("nu\tt_hat", [sol.nu, sol.t])
    return ExperimentResult("wta", table, {"correlation": corr}, {"curve": curve})


def wta_transformed_truth(sol, beta_star) -> np.ndarray:
    """Fitted ``T_hat`` evaluated at the payoff levels ``beta_star`` (must be sampled payoffs)."""
    idx = np.searchsorted(sol.nu, beta_star)
    if np.any(idx >= sol.nu.size) or not np.allclose(sol.nu[np.minimum(idx, sol.nu.size - 1)], beta_star):
        raise DomainError("beta_star values are not among the sampled payoffs")
    return sol.t[idx]


def table1(
    p_list=(10,),
    sigma0_list=(1e-3, 1e-2, 2e-1),
    runs: int = 20,
    seed: int = 0,
    s_star: int = 3,
    options=None,
) -> ExperimentResult:
    """Mean Affn and Supp over ``runs`` seeded draws per ``(p, sigma0)``.

    Rows are ``p`` and each ``sigma0`` contributes an Affn and a Supp column.
    The solver sparsity is ``ceil(1.5 s*)``.
    """
    options = options or SolveOptions()
    s = math.ceil(1.5 * s_star)
    header = ["p"]
    for sig in sigma0_list:
        header += [f"Affn[sigma0={sig:g}]", f"Supp[sigma0={sig:g}]"]
    rows = []
    summary = {}
    for p in p_list:
        gamma_star = np.zeros(p)
        gamma_star[:s_star] = 1.0 / math.sqrt(s_star)
        row = [p]
        for sig in sigma0_list:
            aff, sup = [], []
            for r in range(runs):
                table, truth = gen_sparse_payoffs(p, gamma_star, sigma0=sig, seed=seed + r)
                sol = solve(table, replace(options, sparsity=min(s, p)))
                aff.append(affinity(sol.gamma, gamma_star))
                sup.append(support_recovery(sol.gamma, truth.support))
            summary[(p, sig)] = {"affn": aff, "supp": sup}
            row += [float(np.mean(aff)), float(np.mean(sup))]
        rows.append(row)
    table = columns_text("\t".join(header), list(zip(*rows)))
    return ExperimentResult("table1", table, summary)


def timing(
    p: int = 15,
    s_values=None,
    sigma0: float = 5e-3,
    seed: int = 0,
    s_star: int = 3,
    repeats: int = 3,
    options=None,
) -> ExperimentResult:
    """Median solve time across sparsity levels; a trend line closes the table."""
    s_values = list(range(min(5, p), p + 1)) if s_values is None else sorted(set(s_values))
    gamma_star = np.zeros(p)
    gamma_star[:s_star] = 1.0 / math.sqrt(s_star)
    table, _ = gen_sparse_payoffs(p, gamma_star, sigma0=sigma0, seed=seed)
    rows = timing_sweep(table, s_values, options, repeats)
    secs = [r.seconds for r in rows]
    text = columns_text(
        "s\tseconds\touter_iterations\tinner_iterations",
        [[r.s for r in rows], secs, [r.outer_iterations for r in rows], [r.inner_iterations for r in rows]],
    )
    summary = {"faster_at_min_s": secs[0] <= secs[-1]}
    if len(rows) > 1:
        summary["spearman"] = float(spearmanr([r.s for r in rows], secs)[0])
    text += f"# trend: time(s={rows[0].s}) <= time(s={rows[-1].s}): {str(summary['faster_at_min_s']).lower()}"
    if "spearman" in summary:
        text += f"; spearman(s, seconds) = {summary['spearman']!r}"
    text += "\n"
    return ExperimentResult("timing", text, summary)


def r2_grid(
    p_list=(8,),
    theta_list=(0.5,),
    tasks=("continuous", "binary"),
    seed: int = 0,
    options=None,
    n_jobs=None,
) -> ExperimentResult:
    """Fitted transforms of R^2 and pseudo-R^2 payoffs in long format."""
    options = options or SolveOptions()
    rows = {k: [] for k in ("task", "p", "theta", "linear", "monotone", "ratio")}
    curves = {k: [] for k in ("task", "p", "theta", "nu", "t_hat")}
    for task in tasks:
        for p in p_list:
            for theta in theta_list:
                design = gen_gaussian_design(p=p, theta=theta, task=task, seed=seed)
                payoff = r2_payoffs if task == "continuous" else pseudo_r2_payoffs
                table = payoff(design, n_jobs=n_jobs)
                sol = solve(table, options)
                linear, monotone = linearity_gap(table, sol, options.infinite_multiplier)
                for k, v in zip(rows, (task, p, theta, linear, monotone, linear / monotone if monotone > 0 else math.inf)):
                    rows[k].append(v)
                m = sol.nu.size
                for k, v in zip(curves, ([task] * m, [p] * m, [theta] * m, sol.nu.tolist(), sol.t.tolist())):
                    curves[k] += v
    table = columns_text("\t".join(rows), list(rows.values()))
    curve_text = columns_text("\t".join(curves), list(curves.values()))
    return ExperimentResult("r2-grid", table, rows, {"curves": curve_text})
