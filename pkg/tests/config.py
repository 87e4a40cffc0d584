"""Shared constants for the test suite."""

SEED = 20240517

# Quick runs exercise plumbing only.
N_REPS_QUICK = 40

# Desk-scale Monte-Carlo runs (marked slow).
N_REPS_SIZE = 2000
N_REPS_POWER = 2000
N_REPS_GAP = 500

ALPHA = 0.05
Z_005 = 1.6448536269514722
