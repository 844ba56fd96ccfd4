"""Parametric building blocks for matrix concentration work.

Everything here is configured through function arguments and pydantic
models; nothing reads global settings. The harness in matconc.harness
composes these pieces into experiments.

Import directly from submodules (e.g., ``from matconc.lib.bounds import bernstein_tail``).

Modules:
- errors: Exception hierarchy shared by every module
- matcore: SymMatrix, Spectrum, norms, ranks, dilation, T_j operator
- textio: Matrix and sample text formats
- seeding: SeedSpec, Philox streams, deterministic trial map
- bounds: Closed-form tail and moment bound evaluators
- samplers: Vector models, covariance specs, matrix ensembles
- estimators: Covariance estimators, psi/rho truncations, sparse oracle
- subsample: Random column subsampling and its bounds
- paths: Report directory layout
- metrics: Stage timing collected into report runtime metadata
"""
