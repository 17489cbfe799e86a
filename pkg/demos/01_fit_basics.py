"""
Fitting one penalized model
===========================

Simulate a small longitudinal gene-environment dataset, fit the sparse-group
penalized quadratic inference function at a fixed tuning pair, and compare the
selected effects with the generating truth.  Runs in a few seconds.
"""

import numpy as np

from qifsel import (Correlation, PenaltyKind, PenaltySpec, Scenario,
                    ScenarioConfig, expand_design, newton_fit,
                    simulate_scenario)

# A deliberately small instance: 80 subjects, 4 repeated measurements,
# 30 genetic factors, 3 environment variables, and 8 nonzero effects.
config = ScenarioConfig(scenario=Scenario.GENE_EXPRESSION_AR1,
                        n=80, k=4, p=30, q=3, n_true=8)
truth = simulate_scenario(config, seed=7)
data = truth.dataset
print(f"subjects {data.n_subjects}, times {data.n_times}, "
      f"factors {truth.config.p}, environments {truth.config.q}")

# The expanded design interleaves, per factor, one main effect and q
# interaction columns; the intercept and environment columns are never
# penalized.
design = expand_design(data)
print(f"expanded design has d = {design.d} columns "
      f"({len(design.groups)} penalized groups of size {truth.config.q + 1})")

# Fit with the bi-level penalty: lambda1 drives whole-group selection,
# lambda2 drives within-group selection, and gamma = 3 sets the concavity.
spec = PenaltySpec(kind=PenaltyKind.SPARSE_GROUP, lambda1=0.1, lambda2=0.06)
fit = newton_fit(data, design, Correlation.EXCHANGEABLE, spec)
print(f"converged: {fit.converged} after {fit.iterations} iterations, "
      f"objective {fit.final_objective:.4f}")

# Selection happens by thresholding the fitted coefficients (default 1e-3).
print("\ntrue main factors:     ", sorted(truth.true_main))
print("selected main factors: ", fit.selected_main)
print("true interactions:     ", sorted(truth.true_inter))
print("selected interactions: ", fit.selected_inter)

# The concave penalty is flat past its knee, so survivors escape shrinkage
# bias; what bias remains comes from the covariate law, where neighbouring
# causal factors are strongly correlated and can absorb parts of each other's
# signal (the generator places causal factors on consecutive columns).
for v in fit.selected_main:
    est = fit.beta_hat[design.groups[v][0]]
    true = truth.beta_true[design.groups[v][0]]
    print(f"factor {v:2d}: estimate {est:+.3f}  truth {true:+.3f}")

err = np.linalg.norm(fit.beta_hat - truth.beta_true)
print(f"\ncoefficient error |beta_hat - beta_true| = {err:.3f}")
