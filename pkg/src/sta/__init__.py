"""Structured Thoughts Automaton."""
