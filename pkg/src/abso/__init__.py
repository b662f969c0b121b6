"""Attention-oriented brain storm optimisation for multimodal problems."""
