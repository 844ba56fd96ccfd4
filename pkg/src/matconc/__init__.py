"""Concentration bounds for sums of independent random matrices.

This package evaluates closed-form tail and moment bounds for sums of
independent self-adjoint random matrices, implements the estimators they
are applied to, and audits every inequality with a seeded Monte Carlo
harness that fits the unspecified absolute constants.

Structure:
- matconc/lib/: Parametric building blocks
  - errors.py: Exception hierarchy
  - matcore.py: Symmetric matrix algebra, ranks, dilation, eigenvector operators
  - textio.py: Plain-text matrix and sample formats
  - seeding.py: Counter-based generators and the deterministic trial map
  - bounds.py: Closed-form bound evaluators
  - samplers.py: Vector models and matrix ensembles
  - estimators.py: Covariance estimators, truncations, sparse oracle
  - subsample.py: Random column subsampling
  - paths.py: Report directory layout
  - metrics.py: Stage timing

- matconc/harness/: The verification harness
  - config.py: Settings via pydantic-settings
  - models.py: Experiment configs and report records
  - mc.py: Monte Carlo estimation, constant fitting, audits
  - experiments.py: One runner per experiment kind
  - report.py: CSV and JSON emission

- matconc/environment/cli/: The ``matconc`` command line
- matconc/devtools/: The ``matconc-devtools`` report inspector
"""
