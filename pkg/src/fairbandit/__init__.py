"""Online fair division with unknown mean values.

Fairness-constrained allocation under bandit feedback: a dense LP core,
proportionality / envy-freeness constraint families with robust box
reductions, the two-stage UCB allocation policy with baselines, a seeded
simulation harness, and constructive welfare-continuity and
slack-repair checkers.
"""

__version__ = "0.1.0"
