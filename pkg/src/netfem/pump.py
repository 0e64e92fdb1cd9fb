"""Transient wall-motion-driven pumping simulations."""
