"""Step-function analysis of a randomized online matching algorithm."""
