"""Monte Carlo verification harness."""
