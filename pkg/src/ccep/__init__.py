"""CCEP exploration lab: multi-style actor-critic training, baselines,
desk-scale environments, and a deterministic experiment harness."""

__version__ = "0.1.0"
