"""Self-play orchestration and verification harness for Haskell
program-equivalence games."""

__version__ = "0.1.0"
