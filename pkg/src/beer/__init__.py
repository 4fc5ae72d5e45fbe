"""Adaptive representation-rank regularisation for deep value learning."""
