"""drkit: a budgeted deep-research agent harness with data synthesis,
rubric rewards, and Elo-based pairwise evaluation."""

__version__ = "0.1.0"
