"""Synthetic network generators and the convergence harness."""
