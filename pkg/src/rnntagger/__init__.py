"""Recurrent-network sequence labeling toolkit.

From-scratch RNN taggers for mention detection: four recurrent cell
types, unidirectional/contextual/bidirectional architectures, windowed
backpropagation training, negative-sampling embedding pre-training, and
span-level evaluation. Everything is seeded and reproducible.
"""

__version__ = "0.1.0"
