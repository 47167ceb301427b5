"""Restless Markovian bandits."""
