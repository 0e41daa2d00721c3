"""Core numerics: problem models, the G operator, DP/PDE solvers, Monte Carlo."""
