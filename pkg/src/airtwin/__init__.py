"""airtwin: a desk-scale probabilistic digital twin of en-route airspace.

Subpackages map onto the twin's functional areas: airspace domain types
and scenario IO, standard-atmosphere kinematics, the probabilistic
performance model, the trajectory engine with compiled/pure kernels,
validation metrics, data-quality checks, synthetic-scenario benchmarking,
assurance-case evaluation, and the CLI/HTTP interfaces.
"""

__version__ = "0.1.0"
